#include "aqft/yangmills.hpp"

#include <cmath>
#include <limits>

namespace aqft {

namespace {

IndexSpace char_space(const GroupData& g)
{
    IndexSpace s = make_space("Z(" + g.name + ")", static_cast<int>(g.irreps.size()));
    for (const auto& i : g.irreps)
        s.tags.push_back(i.label);
    return s;
}

/// tail of sum_{V outside the table} e^{-a sigma} dim^chi, estimated for su2 by
/// an integral bound; exact zero for finite groups and u1 tables with a > 0
/// handled crudely through the same comparison
double tail_bound_su2(int trunc, double a, int chi)
{
    double N = trunc;
    if (a <= 0) {
        if (chi > -2)
            return std::numeric_limits<double>::infinity();
        // integral_N^inf x^chi dx
        return std::pow(N, chi + 1) / (-chi - 1);
    }
    // sum_{n>N} n^chi e^{-a(n^2-1)/4} <= integral bound with monotone tail
    double s = 0.0;
    double n = N + 1;
    for (int k = 0; k < 4; ++k, n += 1.0)
        s += std::pow(n, chi) * std::exp(-a * (n * n - 1) / 4);
    double ratio = std::exp(-a * (2 * n + 1) / 4);
    return s + std::pow(n, std::max(chi, 0)) * std::exp(-a * (n * n - 1) / 4) * ratio /
                   std::max(1e-300, 1.0 - ratio);
}

double tail_bound(const GroupData& g, double a, int chi)
{
    if (g.name == "su2")
        return tail_bound_su2(static_cast<int>(g.irreps.size()), a, chi);
    if (g.name == "u1") {
        if (a <= 0)
            return std::numeric_limits<double>::infinity();
        long K = (static_cast<long>(g.irreps.size()) - 1) / 2;
        double t = 2 * std::exp(-a * static_cast<double>(K + 1) * (K + 1));
        double ratio = std::exp(-a * (2.0 * K + 3));
        return t / std::max(1e-300, 1.0 - ratio);
    }
    return 0.0; // finite groups: the table is complete
}

} // namespace

Amplitude amplitude(const GroupData& g, int genus, int b_in, int b_out, double a,
                    const std::vector<std::string>& in_labels)
{
    if (genus < 0 || b_in < 0 || b_out < 0)
        throw AqftError("amplitude: negative arguments");
    if (a < 0)
        throw AqftError("amplitude: negative area");
    if (static_cast<int>(in_labels.size()) != b_in)
        throw AqftError("amplitude: need one in-label per ingoing circle");
    int chi = 2 - 2 * genus - b_in - b_out;
    if (a == 0.0 && 2 * genus + b_in + b_out < 4) {
        if (g.name == "su2" || g.name == "u1")
            throw AqftError("amplitude: no zero-area limit for chi = " + std::to_string(chi));
    }
    if (a == 0.0 && g.name == "u1" && b_in == 0)
        throw AqftError("amplitude: u1 has no zero-area limit (infinitely many dim-1 irreps)");

    IndexSpace zs = char_space(g);
    std::vector<IndexSpace> legs(b_out, zs);
    Tensor value(legs);

    if (b_in == 0) {
        for (std::size_t vi = 0; vi < g.irreps.size(); ++vi) {
            const auto& V = g.irreps[vi];
            double coeff = std::exp(-a * V.sigma) * std::pow(static_cast<double>(V.dim), chi);
            std::vector<int> idx(b_out, static_cast<int>(vi));
            value.set(idx, value.get(idx) + coeff);
        }
    } else {
        bool all_equal = true;
        for (const auto& l : in_labels)
            if (l != in_labels.front())
                all_equal = false;
        if (all_equal) {
            int vi = g.index_of(in_labels.front());
            const auto& V = g.irreps[vi];
            double coeff = std::exp(-a * V.sigma) * std::pow(static_cast<double>(V.dim), chi);
            std::vector<int> idx(b_out, vi);
            value.set(idx, coeff);
        }
        // mismatched labels: exact zero
    }
    return Amplitude{std::move(value), tail_bound(g, a, chi)};
}

LinearMap wilson_cylinder(const GroupData& g, const std::string& V, double a, double b)
{
    if (!g.in_table(V))
        throw AqftError("wilson_cylinder: irrep '" + V + "' not in the table");
    if (a <= 0 || b <= 0)
        throw AqftError("wilson_cylinder: areas must be positive");
    IndexSpace zs = char_space(g);
    Tensor t({zs, zs});
    for (std::size_t u = 0; u < g.irreps.size(); ++u)
        for (std::size_t w = 0; w < g.irreps.size(); ++w) {
            int n = g.fusion(g.irreps[u].label, V, g.irreps[w].label);
            if (!n)
                continue;
            t.set({static_cast<int>(u), static_cast<int>(w)},
                  n * std::exp(-a * g.irreps[u].sigma - b * g.irreps[w].sigma));
        }
    return LinearMap{{}, {zs, zs}, std::move(t)};
}

cplx wilson_closed(const GroupData& g, const WilsonSurface& s)
{
    int nc = static_cast<int>(s.components.size());
    for (const auto& l : s.loops)
        if (l.left < 0 || l.left >= nc || l.right < 0 || l.right >= nc)
            throw AqftError("wilson_closed: loop attached to unknown component");
    for (const auto& comp : s.components)
        if (comp.area <= 0 && comp.chi >= -1)
            throw AqftError("wilson_closed: zero-area component with chi >= -1 diverges");
    // sum over irrep assignments per component
    std::vector<std::size_t> assign(nc, 0);
    cplx total = 0.0;
    while (true) {
        double w = 1.0;
        for (int cidx = 0; cidx < nc; ++cidx) {
            const auto& ir = g.irreps[assign[cidx]];
            w *= std::exp(-s.components[cidx].area * ir.sigma) *
                 std::pow(static_cast<double>(ir.dim), s.components[cidx].chi);
        }
        if (w != 0.0) {
            long fus = 1;
            for (const auto& l : s.loops)
                fus *= g.fusion(g.irreps[assign[l.left]].label, l.V,
                                g.irreps[assign[l.right]].label);
            total += w * static_cast<double>(fus);
        }
        int p = 0;
        while (p < nc && ++assign[p] == g.irreps.size()) {
            assign[p] = 0;
            ++p;
        }
        if (p == nc)
            break;
    }
    return total;
}

cplx twist_closed(const GroupData& g, const std::vector<std::string>& auts,
                  const WilsonSurface& s)
{
    if (auts.size() != s.loops.size())
        throw AqftError("twist_closed: one automorphism per loop");
    std::vector<std::function<std::string(const std::string&)>> maps;
    for (const auto& a : auts) {
        auto it = g.automorphisms.find(a);
        if (it == g.automorphisms.end())
            throw AqftError("unknown automorphism '" + a + "'");
        maps.push_back(it->second);
    }
    int nc = static_cast<int>(s.components.size());
    std::vector<std::size_t> assign(nc, 0);
    cplx total = 0.0;
    while (true) {
        double w = 1.0;
        for (int cidx = 0; cidx < nc; ++cidx) {
            const auto& ir = g.irreps[assign[cidx]];
            w *= std::exp(-s.components[cidx].area * ir.sigma) *
                 std::pow(static_cast<double>(ir.dim), s.components[cidx].chi);
        }
        bool match = true;
        for (std::size_t x = 0; x < s.loops.size(); ++x)
            if (maps[x](g.irreps[assign[s.loops[x].left]].label) !=
                g.irreps[assign[s.loops[x].right]].label)
                match = false;
        if (match)
            total += w;
        int p = 0;
        while (p < nc && ++assign[p] == g.irreps.size()) {
            assign[p] = 0;
            ++p;
        }
        if (p == nc)
            break;
    }
    return total;
}

cplx twist_torus(const GroupData& g, const std::string& aut, double area)
{
    WilsonSurface s;
    s.components = {{0, area}};
    s.loops = {{"", 0, 0}};
    return twist_closed(g, {aut}, s);
}

std::pair<double, double> witten_zeta(const GroupData& g, double s, std::size_t trunc)
{
    if (g.name == "u1")
        throw AqftError("witten_zeta diverges for u1 (infinitely many dim-1 irreps)");
    bool finite = g.name != "su2";
    if (finite) {
        double v = 0.0;
        for (const auto& i : g.irreps)
            v += std::pow(static_cast<double>(i.dim), -s);
        return {v, 0.0};
    }
    if (s < 2.0)
        throw AqftError("witten_zeta: exponent " + std::to_string(s) +
                        " rejected (convergence criterion needs s >= 2)");
    double val = 0.0;
    for (std::size_t k = 0; k < trunc; ++k) {
        auto ir = g.enumerate(k);
        if (!ir)
            break;
        val += std::pow(static_cast<double>(ir->dim), -s);
    }
    // Richardson-style tail estimate: integral bound with midpoint correction
    double N = static_cast<double>(trunc);
    double tail = std::pow(N, 1.0 - s) / (s - 1.0);
    return {val, tail};
}

std::vector<double> fusion_deviation(const GroupData& g, const std::string& V,
                                     const std::string& W, double a, double b,
                                     const std::vector<double>& mid_areas)
{
    IndexSpace zs = char_space(g);
    // fused single-loop target: sum_M N_{V,W}^M cylinder(M)
    Tensor target({zs, zs});
    for (const auto& M : g.irreps) {
        int nm = g.fusion(V, W, M.label);
        if (!nm)
            continue;
        LinearMap cyl = wilson_cylinder(g, M.label, a, b);
        target = tensor_sum(target, cyl.t, 1.0, static_cast<double>(nm));
    }
    std::vector<double> out;
    for (double mid : mid_areas) {
        if (mid <= 0)
            throw AqftError("fusion_deviation: intermediate areas must be positive");
        // two parallel loops with the band of area `mid` between them:
        // (chi_U, chi_W') -> sum_M e^{-a s_U - mid s_M - b s_W'} N_{U,V}^M N_{M,W}^{W'}
        Tensor two({zs, zs});
        for (std::size_t u = 0; u < g.irreps.size(); ++u)
            for (std::size_t w2 = 0; w2 < g.irreps.size(); ++w2) {
                double acc = 0.0;
                for (const auto& M : g.irreps) {
                    int n1 = g.fusion(g.irreps[u].label, V, M.label);
                    if (!n1)
                        continue;
                    int n2 = g.fusion(M.label, W, g.irreps[w2].label);
                    if (!n2)
                        continue;
                    acc += n1 * n2 * std::exp(-mid * M.sigma);
                }
                if (acc != 0.0)
                    two.set({static_cast<int>(u), static_cast<int>(w2)},
                            acc * std::exp(-a * g.irreps[u].sigma - b * g.irreps[w2].sigma));
            }
        out.push_back(max_abs_diff(two, target));
    }
    return out;
}

} // namespace aqft
