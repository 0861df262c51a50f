#include "aqft/group.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aqft {

namespace {

// factorials up to 80 cover CG labels far beyond desk truncations
const std::vector<double>& factorials()
{
    static std::vector<double> f = [] {
        std::vector<double> v(81);
        v[0] = 1.0;
        for (int i = 1; i <= 80; ++i)
            v[i] = v[i - 1] * i;
        return v;
    }();
    return f;
}

double fact(int n)
{
    if (n < 0)
        return 0.0; // signals an out-of-range term
    return factorials().at(n);
}

/// Condon-Shortley Clebsch-Gordan coefficient <j1 m1 j2 m2 | J M> via the
/// Racah sum formula; all spins passed as doubled integers.
double su2_cg_doubled(int tj1, int tm1, int tj2, int tm2, int tJ, int tM)
{
    if (tm1 + tm2 != tM)
        return 0.0;
    if (tJ < std::abs(tj1 - tj2) || tJ > tj1 + tj2 || ((tj1 + tj2 + tJ) & 1))
        return 0.0;
    if (std::abs(tm1) > tj1 || std::abs(tm2) > tj2 || std::abs(tM) > tJ)
        return 0.0;
    auto h = [](int t) { return t / 2.0; };
    (void)h;
    auto f2 = [](int t) { return fact(t / 2); };
    double pref = (tJ + 1) * f2(tj1 + tj2 - tJ) * f2(tj1 - tj2 + tJ) * f2(-tj1 + tj2 + tJ) /
                  f2(tj1 + tj2 + tJ + 2);
    pref *= f2(tJ + tM) * f2(tJ - tM) * f2(tj1 - tm1) * f2(tj1 + tm1) * f2(tj2 - tm2) *
            f2(tj2 + tm2);
    double sum = 0.0;
    for (int tk = 0; tk <= tj1 + tj2 - tJ; tk += 2) {
        int a = tj1 + tj2 - tJ - tk;
        int b = tj1 - tm1 - tk;
        int c = tj2 + tm2 - tk;
        int d = tJ - tj2 + tm1 + tk;
        int e = tJ - tj1 - tm2 + tk;
        if (a < 0 || b < 0 || c < 0 || d < 0 || e < 0)
            continue;
        double term = 1.0 / (f2(tk) * f2(a) * f2(b) * f2(c) * f2(d) * f2(e));
        sum += ((tk / 2) % 2 ? -term : term);
    }
    return std::sqrt(pref) * sum;
}

int su2_fusion(const std::string& u, const std::string& v, const std::string& w)
{
    int m = std::stoi(u), n = std::stoi(v), p = std::stoi(w);
    if (p < std::abs(m - n) + 1 || p > m + n - 1)
        return 0;
    return ((m + n - 1 - p) % 2 == 0) ? 1 : 0;
}

GroupData make_su2(int trunc, const std::map<std::string, double>& ov)
{
    GroupData g;
    g.name = "su2";
    g.trivial = "1";
    auto sigma_of = [ov](int n) {
        auto it = ov.find(std::to_string(n));
        if (it != ov.end())
            return it->second;
        return (n * n - 1) / 4.0; // Casimir j(j+1) with n = 2j+1
    };
    for (int n = 1; n <= trunc; ++n)
        g.irreps.push_back({std::to_string(n), n, sigma_of(n)});
    g.fusion = [](const std::string& u, const std::string& v, const std::string& w) {
        return su2_fusion(u, v, w);
    };
    g.dual = [](const std::string& u) { return u; };
    g.automorphisms["conj"] = [](const std::string& u) { return u; }; // inner for su2
    g.cg = [](const std::string& U, int i, const std::string& V, int p, const std::string& W,
              int q) {
        int dU = std::stoi(U), dV = std::stoi(V), dW = std::stoi(W);
        // row r of the d-dim irrep carries m = j - r (doubled: 2m = d-1-2r)
        int tj1 = dU - 1, tj2 = dV - 1, tJ = dW - 1;
        return su2_cg_doubled(tj1, tj1 - 2 * i, tj2, tj2 - 2 * p, tJ, tJ - 2 * q);
    };
    g.enumerate = [sigma_of](std::size_t k) -> std::optional<Irrep> {
        int n = static_cast<int>(k) + 1;
        return Irrep{std::to_string(n), n, sigma_of(n)};
    };
    return g;
}

GroupData make_u1(int trunc, const std::map<std::string, double>& ov)
{
    GroupData g;
    g.name = "u1";
    g.trivial = "0";
    auto sigma_of = [ov](long k) {
        auto it = ov.find(std::to_string(k));
        if (it != ov.end())
            return it->second;
        return static_cast<double>(k) * k;
    };
    for (int k = -trunc; k <= trunc; ++k)
        g.irreps.push_back({std::to_string(k), 1, sigma_of(k)});
    g.fusion = [](const std::string& u, const std::string& v, const std::string& w) {
        return std::stol(u) + std::stol(v) == std::stol(w) ? 1 : 0;
    };
    g.dual = [](const std::string& u) { return std::to_string(-std::stol(u)); };
    g.automorphisms["conj"] = [](const std::string& u) { return std::to_string(-std::stol(u)); };
    g.cg = [](const std::string&, int, const std::string&, int, const std::string&, int) {
        return 1.0; // all charges one-dimensional; fusion already gates validity
    };
    g.enumerate = [sigma_of](std::size_t k) -> std::optional<Irrep> {
        // charges in the order 0, 1, -1, 2, -2, ...
        long c = static_cast<long>((k + 1) / 2);
        if (k != 0 && k % 2 == 0)
            c = -c;
        return Irrep{std::to_string(c), 1, sigma_of(c)};
    };
    return g;
}

GroupData make_cyclic(int n, const std::map<std::string, double>& ov)
{
    if (n < 1)
        throw AqftError("cyclic group order must be >= 1");
    GroupData g;
    g.name = "cyclic:" + std::to_string(n);
    g.trivial = "0";
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        if (auto it = ov.find(std::to_string(k)); it != ov.end())
            s = it->second;
        g.irreps.push_back({std::to_string(k), 1, s});
    }
    g.fusion = [n](const std::string& u, const std::string& v, const std::string& w) {
        return (std::stoi(u) + std::stoi(v)) % n == std::stoi(w) ? 1 : 0;
    };
    g.dual = [n](const std::string& u) { return std::to_string((n - std::stoi(u)) % n); };
    for (int a = 2; a < n; ++a)
        if (std::gcd(a, n) == 1)
            g.automorphisms["mul" + std::to_string(a)] = [n, a](const std::string& u) {
                return std::to_string((std::stoi(u) * a) % n);
            };
    g.automorphisms["conj"] = g.dual;
    g.cg = [](const std::string&, int, const std::string&, int, const std::string&, int) {
        return 1.0;
    };
    auto irreps = g.irreps;
    g.enumerate = [irreps](std::size_t k) -> std::optional<Irrep> {
        if (k >= irreps.size())
            return std::nullopt;
        return irreps[k];
    };
    return g;
}

GroupData make_s3(const std::map<std::string, double>& ov)
{
    GroupData g;
    g.name = "s3";
    g.trivial = "triv";
    auto s = [&](const char* l) {
        auto it = ov.find(l);
        return it != ov.end() ? it->second : 0.0;
    };
    g.irreps = {{"triv", 1, s("triv")}, {"sgn", 1, s("sgn")}, {"std", 2, s("std")}};
    // fusion from the character table
    static const std::map<std::string, int> id = {{"triv", 0}, {"sgn", 1}, {"std", 2}};
    static const int N[3][3][3] = {
        {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
        {{0, 1, 0}, {1, 0, 0}, {0, 0, 1}},
        {{0, 0, 1}, {0, 0, 1}, {1, 1, 1}},
    };
    g.fusion = [](const std::string& u, const std::string& v, const std::string& w) {
        return N[id.at(u)][id.at(v)][id.at(w)];
    };
    g.dual = [](const std::string& u) { return u; };
    // S3 has only inner automorphisms
    g.automorphisms["conj"] = [](const std::string& u) { return u; };
    auto irreps = g.irreps;
    g.enumerate = [irreps](std::size_t k) -> std::optional<Irrep> {
        if (k >= irreps.size())
            return std::nullopt;
        return irreps[k];
    };
    return g;
}

} // namespace

int GroupData::index_of(const std::string& label) const
{
    for (std::size_t i = 0; i < irreps.size(); ++i)
        if (irreps[i].label == label)
            return static_cast<int>(i);
    throw AqftError("irrep '" + label + "' not in the table of " + name);
}

const Irrep& GroupData::irrep(const std::string& label) const
{
    return irreps[index_of(label)];
}

bool GroupData::in_table(const std::string& label) const
{
    return std::any_of(irreps.begin(), irreps.end(),
                       [&](const Irrep& i) { return i.label == label; });
}

void GroupData::validate() const
{
    if (irreps.empty())
        throw AqftError("group table is empty");
    if (!in_table(trivial))
        throw AqftError("trivial irrep '" + trivial + "' missing from table");
    for (const auto& u : irreps) {
        if (u.dim < 1)
            throw AqftError("irrep '" + u.label + "' has dim < 1");
        std::string du = dual(u.label);
        if (!in_table(du))
            throw AqftError("table not closed under dual: dual(" + u.label + ") = " + du);
        if (dual(du) != u.label)
            throw AqftError("dual is not an involution at '" + u.label + "'");
        if (std::abs(irrep(du).sigma - u.sigma) > 1e-12)
            throw AqftError("sigma not dual-invariant at '" + u.label + "'");
        if (fusion(u.label, trivial, u.label) != 1)
            throw AqftError("N_{U,1}^U != 1 at '" + u.label + "'");
    }
    for (const auto& u : irreps)
        for (const auto& v : irreps) {
            long dimsum = 0;
            for (const auto& w : irreps) {
                int nuv = fusion(u.label, v.label, w.label);
                int nvu = fusion(v.label, u.label, w.label);
                if (nuv != nvu)
                    throw AqftError("fusion not symmetric at (" + u.label + "," + v.label + ")");
                if (nuv < 0)
                    throw AqftError("negative fusion multiplicity");
                dimsum += static_cast<long>(nuv) * w.dim;
            }
            // equality holds when the fusion stays inside the table; a truncated
            // table may fall short but never overshoot
            if (dimsum > static_cast<long>(u.dim) * v.dim)
                throw AqftError("dimension sum rule violated at (" + u.label + "," + v.label + ")");
        }
}

GroupData builtin_group(const std::string& spec, int trunc,
                        const std::map<std::string, double>& sigma_override)
{
    GroupData g;
    if (spec == "su2") {
        if (trunc < 1)
            throw AqftError("su2 needs trunc >= 1");
        g = make_su2(trunc, sigma_override);
    } else if (spec == "u1") {
        if (trunc < 0)
            throw AqftError("u1 needs trunc >= 0");
        g = make_u1(trunc, sigma_override);
    } else if (spec.rfind("cyclic:", 0) == 0) {
        g = make_cyclic(std::stoi(spec.substr(7)), sigma_override);
    } else if (spec == "s3") {
        g = make_s3(sigma_override);
    } else {
        throw AqftError("unknown group '" + spec + "'");
    }
    g.validate();
    return g;
}

RfaPtr block_rfa(const GroupData& g)
{
    std::vector<MatrixBlock> blocks;
    for (const auto& i : g.irreps)
        blocks.push_back({i.label, i.dim, i.sigma});
    return make_block_rfa(std::move(blocks));
}

LinearMap automorphism_map(const GroupData& g, const RfaPtr& A, const std::string& aut)
{
    auto it = g.automorphisms.find(aut);
    if (it == g.automorphisms.end())
        throw AqftError("unknown automorphism '" + aut + "' of " + g.name);
    auto mb = A->matrix_blocks();
    if (!mb)
        throw AqftError("automorphism_map needs a block model");
    std::vector<int> offsets;
    int off = 0;
    for (const auto& b : *mb) {
        offsets.push_back(off);
        off += b.dim * b.dim;
    }
    IndexSpace As = A->carrier();
    Tensor t({As, As});
    bool identity_action = true;
    for (std::size_t bi = 0; bi < mb->size(); ++bi) {
        const auto& b = (*mb)[bi];
        std::string target = it->second(b.label);
        if (target != b.label)
            identity_action = false;
        // locate target block
        std::size_t ti = mb->size();
        for (std::size_t j = 0; j < mb->size(); ++j)
            if ((*mb)[j].label == target)
                ti = j;
        if (ti == mb->size())
            throw AqftError("automorphism leaves the truncation at '" + b.label + "'");
        const auto& tb = (*mb)[ti];
        if (tb.dim != b.dim || std::abs(tb.sigma - b.sigma) > 1e-12)
            throw AqftError("automorphism does not preserve (dim,sigma) at '" + b.label + "'");
        if (b.dim > 1 && target != b.label)
            throw AqftError("automorphism with nontrivial intertwiner on '" + b.label +
                            "' is not supported");
        for (int i = 0; i < b.dim * b.dim; ++i)
            t.set({offsets[ti] + i, offsets[bi] + i}, 1.0);
    }
    (void)identity_action;
    return LinearMap{{As}, {As}, std::move(t)};
}

} // namespace aqft
