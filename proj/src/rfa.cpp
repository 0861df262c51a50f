#include "aqft/rfa.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace aqft {

std::string kind_name(MapKind k)
{
    switch (k) {
    case MapKind::Mu: return "mu";
    case MapKind::Eta: return "eta";
    case MapKind::Delta: return "delta";
    case MapKind::Eps: return "eps";
    case MapKind::P: return "P";
    }
    return "?";
}

LinearMap Rfa::map(MapKind k, double a) const
{
    if (a < 0.0)
        throw AqftError("negative area " + std::to_string(a));
    if (a == 0.0 && !zero_area_ok(k))
        throw AqftError("no zero-area limit for " + kind_name(k) + " on '" + carrier().label + "'");
    return map_impl(k, a);
}

LinearMap Rfa::map0(MapKind) const
{
    throw AqftError("model '" + carrier().label + "' has no damping-free maps");
}

LinearMap nfold_delta(const Rfa& A, int n, double a)
{
    if (n < 0)
        throw AqftError("nfold_delta: n < 0");
    if (n == 0)
        return A.map(MapKind::Eps, a);
    if (n == 1)
        return A.map(MapKind::P, a);
    if (n == 2)
        return A.map(MapKind::Delta, a);
    LinearMap prev = nfold_delta(A, n - 1, a / 2);
    LinearMap last = A.map(MapKind::Delta, a / 2);
    std::vector<IndexSpace> head(prev.outs.begin(), prev.outs.end() - 1);
    LinearMap step = identity_map(head);
    return compose(tensor_of(step, last), prev);
}

Tensor Rfa::plaquette(int n, double a) const
{
    if (n < 1)
        throw AqftError("plaquette weight needs n >= 1");
    if (n == 1)
        return map(MapKind::Eta, a).t;
    LinearMap w = compose(nfold_delta(*this, n, a / 2), map(MapKind::Eta, a / 2));
    return w.t;
}

Tensor Rfa::plaquette0(int n) const
{
    if (!has_map0())
        throw AqftError("plaquette0 unavailable for '" + carrier().label + "'");
    if (n < 1)
        throw AqftError("plaquette weight needs n >= 1");
    if (n == 1)
        return map0(MapKind::Eta).t;
    // undamped recursion: all factors at zero damping
    LinearMap acc = map0(MapKind::Delta);
    for (int m = 3; m <= n; ++m) {
        std::vector<IndexSpace> head(acc.outs.begin(), acc.outs.end() - 1);
        acc = compose(tensor_of(identity_map(head), map0(MapKind::Delta)), acc);
    }
    return compose(acc, map0(MapKind::Eta)).t;
}

// ---------------------------------------------------------------------------
// spectral model: direct sum of one-dimensional dagger-RFAs C_{eps,sigma}

namespace {

class SpectralRfa final : public Rfa {
public:
    SpectralRfa(std::vector<SpectralBlock> blocks, std::string note)
        : blocks_(std::move(blocks)), note_(std::move(note))
    {
        for (const auto& b : blocks_)
            if (std::abs(b.eps) == 0.0)
                throw AqftError("spectral block '" + b.label + "' has eps = 0");
        space_ = make_space("A_spec(" + (note_.empty() ? std::to_string(blocks_.size()) : note_) + ")",
                            std::max<int>(1, static_cast<int>(blocks_.size())));
        if (blocks_.empty())
            throw AqftError("spectral RFA needs at least one block");
        space_.dim = static_cast<int>(blocks_.size());
        for (const auto& b : blocks_)
            space_.tags.push_back(b.label);
    }

    IndexSpace carrier() const override { return space_; }

    bool zero_area_ok(MapKind k) const override
    {
        return k == MapKind::Mu || k == MapKind::Delta || k == MapKind::P;
    }

    bool has_map0() const override { return true; }
    LinearMap map0(MapKind k) const override { return build(k, 0.0, true); }

    Tensor plaquette(int n, double a) const override { return wn(n, a, false); }
    Tensor plaquette0(int n) const override { return wn(n, 0.0, true); }

    std::optional<std::vector<SpectralBlock>> spectral_blocks() const override { return blocks_; }

    std::optional<CenterResult> canonical_center() const override
    {
        auto self = shared_from_this();
        return CenterResult{self, identity_map({space_}), identity_map({space_})};
    }

protected:
    LinearMap map_impl(MapKind k, double a) const override { return build(k, a, false); }

private:
    double damp(double a, double sigma, bool undamped) const
    {
        return undamped ? 1.0 : std::exp(-a * sigma);
    }

    LinearMap build(MapKind k, double a, bool undamped) const
    {
        int n = space_.dim;
        switch (k) {
        case MapKind::P: {
            Tensor t({space_, space_});
            for (int i = 0; i < n; ++i)
                t.set({i, i}, damp(a, blocks_[i].sigma, undamped));
            return LinearMap{{space_}, {space_}, std::move(t)};
        }
        case MapKind::Mu: {
            Tensor t({space_, space_, space_});
            for (int i = 0; i < n; ++i)
                t.set({i, i, i}, damp(a, blocks_[i].sigma, undamped) / std::conj(blocks_[i].eps));
            return LinearMap{{space_}, {space_, space_}, std::move(t)};
        }
        case MapKind::Eta: {
            Tensor t({space_});
            for (int i = 0; i < n; ++i)
                t.set({i}, damp(a, blocks_[i].sigma, undamped) * std::conj(blocks_[i].eps));
            return LinearMap{{space_}, {}, std::move(t)};
        }
        case MapKind::Delta: {
            Tensor t({space_, space_, space_});
            for (int i = 0; i < n; ++i)
                t.set({i, i, i}, damp(a, blocks_[i].sigma, undamped) / blocks_[i].eps);
            return LinearMap{{space_, space_}, {space_}, std::move(t)};
        }
        case MapKind::Eps: {
            Tensor t({space_});
            for (int i = 0; i < n; ++i)
                t.set({i}, damp(a, blocks_[i].sigma, undamped) * blocks_[i].eps);
            return LinearMap{{}, {space_}, std::move(t)};
        }
        }
        throw AqftError("unreachable");
    }

    Tensor wn(int n, double a, bool undamped) const
    {
        if (n < 1)
            throw AqftError("plaquette weight needs n >= 1");
        std::vector<IndexSpace> legs(n, space_);
        Tensor t(legs);
        for (int i = 0; i < space_.dim; ++i) {
            cplx c = std::conj(blocks_[i].eps) * std::pow(blocks_[i].eps, 1 - n) *
                     damp(a, blocks_[i].sigma, undamped);
            std::vector<int> idx(n, i);
            t.set(idx, c);
        }
        return t;
    }

    std::vector<SpectralBlock> blocks_;
    std::string note_;
    IndexSpace space_;
};

// ---------------------------------------------------------------------------
// block model: direct sum of matrix-element RFAs M_V

class BlockRfa final : public Rfa {
public:
    explicit BlockRfa(std::vector<MatrixBlock> blocks) : blocks_(std::move(blocks))
    {
        if (blocks_.empty())
            throw AqftError("block RFA needs at least one block");
        int total = 0;
        std::string lbl = "A_blk:";
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const auto& b = blocks_[i];
            if (b.dim < 1)
                throw AqftError("block '" + b.label + "' has dim < 1");
            for (std::size_t j = 0; j < i; ++j)
                if (blocks_[j].label == b.label)
                    throw AqftError("duplicate block label '" + b.label + "'");
            offsets_.push_back(total);
            total += b.dim * b.dim;
            lbl += (i ? "," : "") + b.label;
        }
        space_ = make_space(lbl, total);
        for (const auto& b : blocks_)
            for (int i = 0; i < b.dim; ++i)
                for (int j = 0; j < b.dim; ++j)
                    space_.tags.push_back(b.label + ":" + std::to_string(i) + "," + std::to_string(j));
    }

    IndexSpace carrier() const override { return space_; }

    bool zero_area_ok(MapKind k) const override
    {
        return k == MapKind::Mu || k == MapKind::Delta || k == MapKind::P;
    }

    bool has_map0() const override { return true; }
    LinearMap map0(MapKind k) const override { return build(k, 0.0, true); }

    Tensor plaquette(int n, double a) const override { return wn(n, a, false); }
    Tensor plaquette0(int n) const override { return wn(n, 0.0, true); }

    std::optional<std::vector<MatrixBlock>> matrix_blocks() const override { return blocks_; }

    std::optional<CenterResult> canonical_center() const override;

protected:
    LinearMap map_impl(MapKind k, double a) const override { return build(k, a, false); }

private:
    int idx(std::size_t blk, int i, int j) const
    {
        return offsets_[blk] + i * blocks_[blk].dim + j;
    }

    double damp(double a, double sigma, bool undamped) const
    {
        return undamped ? 1.0 : std::exp(-a * sigma);
    }

    LinearMap build(MapKind k, double a, bool undamped) const
    {
        switch (k) {
        case MapKind::P: {
            Tensor t({space_, space_});
            for (std::size_t b = 0; b < blocks_.size(); ++b) {
                double c = damp(a, blocks_[b].sigma, undamped);
                for (int i = 0; i < blocks_[b].dim; ++i)
                    for (int j = 0; j < blocks_[b].dim; ++j)
                        t.set({idx(b, i, j), idx(b, i, j)}, c);
            }
            return LinearMap{{space_}, {space_}, std::move(t)};
        }
        case MapKind::Mu: {
            Tensor t({space_, space_, space_});
            for (std::size_t b = 0; b < blocks_.size(); ++b) {
                int d = blocks_[b].dim;
                double c = damp(a, blocks_[b].sigma, undamped) / std::sqrt(static_cast<double>(d));
                for (int i = 0; i < d; ++i)
                    for (int k2 = 0; k2 < d; ++k2)
                        for (int l = 0; l < d; ++l)
                            t.set({idx(b, i, l), idx(b, i, k2), idx(b, k2, l)}, c);
            }
            return LinearMap{{space_}, {space_, space_}, std::move(t)};
        }
        case MapKind::Eta: {
            Tensor t({space_});
            for (std::size_t b = 0; b < blocks_.size(); ++b) {
                int d = blocks_[b].dim;
                double c = damp(a, blocks_[b].sigma, undamped) * std::sqrt(static_cast<double>(d));
                for (int i = 0; i < d; ++i)
                    t.set({idx(b, i, i)}, c);
            }
            return LinearMap{{space_}, {}, std::move(t)};
        }
        case MapKind::Delta: {
            Tensor t({space_, space_, space_});
            for (std::size_t b = 0; b < blocks_.size(); ++b) {
                int d = blocks_[b].dim;
                double c = damp(a, blocks_[b].sigma, undamped) / std::sqrt(static_cast<double>(d));
                for (int i = 0; i < d; ++i)
                    for (int k2 = 0; k2 < d; ++k2)
                        for (int j = 0; j < d; ++j)
                            t.set({idx(b, i, k2), idx(b, k2, j), idx(b, i, j)}, c);
            }
            return LinearMap{{space_, space_}, {space_}, std::move(t)};
        }
        case MapKind::Eps: {
            Tensor t({space_});
            for (std::size_t b = 0; b < blocks_.size(); ++b) {
                int d = blocks_[b].dim;
                double c = damp(a, blocks_[b].sigma, undamped) * std::sqrt(static_cast<double>(d));
                for (int i = 0; i < d; ++i)
                    t.set({idx(b, i, i)}, c);
            }
            return LinearMap{{}, {space_}, std::move(t)};
        }
        }
        throw AqftError("unreachable");
    }

    Tensor wn(int n, double a, bool undamped) const
    {
        if (n < 1)
            throw AqftError("plaquette weight needs n >= 1");
        std::vector<IndexSpace> legs(n, space_);
        Tensor t(legs);
        std::vector<Tensor::Entry> raw;
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            int d = blocks_[b].dim;
            double c = damp(a, blocks_[b].sigma, undamped) *
                       std::pow(static_cast<double>(d), 1.0 - n / 2.0);
            // cyclic delta chain f_{i1 i2} ⊗ f_{i2 i3} ⊗ ... ⊗ f_{in i1}
            std::vector<int> iv(n, 0);
            while (true) {
                Tensor::Key key = 0, stride = 1;
                for (int leg = 0; leg < n; ++leg) {
                    int inext = iv[(leg + 1) % n];
                    key += static_cast<Tensor::Key>(idx(b, iv[leg], inext)) * stride;
                    stride *= static_cast<Tensor::Key>(space_.dim);
                }
                raw.push_back({key, c});
                int p = 0;
                while (p < n && ++iv[p] == d) {
                    iv[p] = 0;
                    ++p;
                }
                if (p == n)
                    break;
            }
        }
        t.assign_entries(std::move(raw));
        return t;
    }

    std::vector<MatrixBlock> blocks_;
    std::vector<int> offsets_;
    IndexSpace space_;
};

std::optional<CenterResult> BlockRfa::canonical_center() const
{
    // centre basis: normalized characters chi_V = d^{-1/2} sum_i f_ii
    int r = static_cast<int>(blocks_.size());
    IndexSpace z = make_space("Z(" + space_.label + ")", r);
    for (const auto& b : blocks_)
        z.tags.push_back(b.label);
    Eigen::MatrixXcd inj = Eigen::MatrixXcd::Zero(space_.dim, r);
    for (int b = 0; b < r; ++b) {
        int d = blocks_[b].dim;
        for (int i = 0; i < d; ++i)
            inj(offsets_[b] + i * d + i, b) = 1.0 / std::sqrt(static_cast<double>(d));
    }
    std::vector<SpectralBlock> sb;
    for (const auto& b : blocks_)
        sb.push_back({b.label, static_cast<double>(b.dim), b.sigma});
    RfaPtr zr = make_spectral_rfa(std::move(sb), "Z:" + space_.label);
    IndexSpace zc = zr->carrier();
    LinearMap injm = from_dense(inj, {space_}, {zc});
    LinearMap projm = from_dense(inj.adjoint(), {zc}, {space_});
    return CenterResult{zr, std::move(projm), std::move(injm)};
}

// ---------------------------------------------------------------------------
// finite model: Frobenius structure constants plus central generator H

class FiniteRfa final : public Rfa {
public:
    FiniteRfa(LinearMap mu0, LinearMap eta0, LinearMap delta0, LinearMap eps0, Tensor H,
              std::string name)
        : mu0_(std::move(mu0)), eta0_(std::move(eta0)), delta0_(std::move(delta0)),
          eps0_(std::move(eps0)), h_(std::move(H))
    {
        space_ = mu0_.outs.at(0);
        space_.label = name;
        relabel(mu0_);
        relabel(eta0_);
        relabel(delta0_);
        relabel(eps0_);
        if (h_.rank() != 1 || h_.spaces()[0].dim != space_.dim)
            throw AqftError("H must be a vector in the carrier");
        // multiplication generator L_H (and centrality check)
        Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(space_.dim, space_.dim);
        Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(space_.dim, space_.dim);
        Tensor hl = contract(mu0_.t, h_, {{1, 0}});   // legs [out, in2]
        Tensor hr = contract(mu0_.t, h_, {{2, 0}});   // legs [out, in1]
        for (const auto& [k, v] : hl.entries()) {
            auto iv = hl.unpack(k);
            L(iv[0], iv[1]) = v;
        }
        for (const auto& [k, v] : hr.entries()) {
            auto iv = hr.unpack(k);
            R(iv[0], iv[1]) = v;
        }
        if ((L - R).norm() > 1e-8 * std::max(1.0, L.norm()))
            throw AqftError("H is not central in '" + space_.label + "'");
        lh_ = L;
    }

    IndexSpace carrier() const override { return space_; }
    bool zero_area_ok(MapKind) const override { return true; }
    bool has_map0() const override { return true; }

    LinearMap map0(MapKind k) const override
    {
        switch (k) {
        case MapKind::Mu: return mu0_;
        case MapKind::Eta: return eta0_;
        case MapKind::Delta: return delta0_;
        case MapKind::Eps: return eps0_;
        case MapKind::P: return identity_map({space_});
        }
        throw AqftError("unreachable");
    }

    Tensor h_element() const { return h_; }

protected:
    LinearMap map_impl(MapKind k, double a) const override
    {
        LinearMap P = from_dense((a * lh_).exp(), {space_}, {space_});
        switch (k) {
        case MapKind::P: return P;
        case MapKind::Mu: return compose(P, mu0_);
        case MapKind::Eta: return compose(P, eta0_);
        case MapKind::Delta: return compose(delta0_, P);
        case MapKind::Eps: return compose(eps0_, P);
        }
        throw AqftError("unreachable");
    }

private:
    void relabel(LinearMap& m) const
    {
        for (auto& s : m.outs) {
            if (s.dim != space_.dim)
                throw AqftError("finite RFA structure maps live on mismatched spaces");
            s = space_;
        }
        for (auto& s : m.ins) {
            if (s.dim != space_.dim)
                throw AqftError("finite RFA structure maps live on mismatched spaces");
            s = space_;
        }
        std::vector<IndexSpace> legs = m.outs;
        legs.insert(legs.end(), m.ins.begin(), m.ins.end());
        Tensor t(legs);
        auto es = m.t.entries();
        t.assign_entries({es.begin(), es.end()});
        m.t = std::move(t);
    }

    LinearMap mu0_, eta0_, delta0_, eps0_;
    Tensor h_;
    Eigen::MatrixXcd lh_;
    IndexSpace space_;
};

// ---------------------------------------------------------------------------
// sampled map families (reconstructions from state-sum data)

class MapFamilyRfa final : public Rfa {
public:
    MapFamilyRfa(IndexSpace carrier, std::function<LinearMap(MapKind, double)> maps,
                 std::string name)
        : space_(std::move(carrier)), maps_(std::move(maps))
    {
        space_.label = name.empty() ? space_.label : name;
    }

    IndexSpace carrier() const override { return space_; }
    bool zero_area_ok(MapKind k) const override { return k == MapKind::P; }

protected:
    LinearMap map_impl(MapKind k, double a) const override
    {
        if (k == MapKind::P && a == 0.0)
            return identity_map({space_});
        LinearMap m = maps_(k, a);
        // relabel legs onto this handle's carrier
        for (auto& s : m.outs) {
            if (s.dim != space_.dim)
                throw AqftError("map family returned a leg of wrong dimension");
            s = space_;
        }
        for (auto& s : m.ins) {
            if (s.dim != space_.dim)
                throw AqftError("map family returned a leg of wrong dimension");
            s = space_;
        }
        std::vector<IndexSpace> legs = m.outs;
        legs.insert(legs.end(), m.ins.begin(), m.ins.end());
        Tensor t(legs);
        auto es = m.t.entries();
        t.assign_entries({es.begin(), es.end()});
        m.t = std::move(t);
        return m;
    }

private:
    IndexSpace space_;
    std::function<LinearMap(MapKind, double)> maps_;
};

} // namespace

RfaPtr make_spectral_rfa(std::vector<SpectralBlock> blocks, std::string note)
{
    return std::make_shared<SpectralRfa>(std::move(blocks), std::move(note));
}

RfaPtr make_block_rfa(std::vector<MatrixBlock> blocks)
{
    return std::make_shared<BlockRfa>(std::move(blocks));
}

RfaPtr make_finite_rfa(LinearMap mu0, LinearMap eta0, LinearMap delta0, LinearMap eps0, Tensor H,
                       std::string name)
{
    return std::make_shared<FiniteRfa>(std::move(mu0), std::move(eta0), std::move(delta0),
                                       std::move(eps0), std::move(H), std::move(name));
}

RfaPtr make_map_family_rfa(IndexSpace carrier, std::function<LinearMap(MapKind, double)> maps,
                           std::string name)
{
    return std::make_shared<MapFamilyRfa>(std::move(carrier), std::move(maps), std::move(name));
}

LinearMap structure_map(const Rfa& A, MapKind k, double a)
{
    return A.map(k, a);
}

bool AxiomReport::ok() const
{
    for (const auto& key : core) {
        auto it = defects.find(key);
        if (it == defects.end() || it->second > tol)
            return false;
    }
    return true;
}

std::string AxiomReport::summary() const
{
    std::ostringstream os;
    os << (ok() ? "PASS" : "FAIL") << " (tol " << tol << ")";
    for (const auto& [k, v] : defects)
        os << "\n  " << k << ": " << v;
    return os.str();
}

AxiomReport check_axioms(const Rfa& A, const std::vector<std::array<double, 2>>& splits,
                         double tol)
{
    if (splits.empty())
        throw AqftError("check_axioms needs a nonempty area sample");
    AxiomReport rep;
    rep.tol = tol;
    rep.core = {"unit", "assoc", "counit", "coassoc", "frobenius", "p_semigroup",
                "area_additivity"};
    auto bump = [&](const std::string& key, double v) {
        auto& slot = rep.defects[key];
        slot = std::max(slot, v);
    };

    IndexSpace As = A.carrier();
    LinearMap idA = identity_map({As});
    LinearMap sw = swap_map(As, As);

    for (auto [x, y] : splits) {
        if (x <= 0 || y <= 0)
            throw AqftError("area splits must be positive");
        double s = x + y;
        LinearMap mu_x = A.map(MapKind::Mu, x), mu_y = A.map(MapKind::Mu, y);
        LinearMap eta_x = A.map(MapKind::Eta, x), eta_y = A.map(MapKind::Eta, y);
        LinearMap de_x = A.map(MapKind::Delta, x), de_y = A.map(MapKind::Delta, y);
        LinearMap ep_x = A.map(MapKind::Eps, x), ep_y = A.map(MapKind::Eps, y);
        LinearMap P_x = A.map(MapKind::P, x), P_y = A.map(MapKind::P, y);
        LinearMap P_s = A.map(MapKind::P, s);

        bump("unit", sup_distance(compose(mu_x, tensor_of(idA, eta_y)),
                                  compose(mu_y, tensor_of(eta_x, idA))));
        bump("unit", sup_distance(compose(mu_x, tensor_of(idA, eta_y)), P_s));
        bump("assoc", sup_distance(compose(mu_x, tensor_of(idA, mu_y)),
                                   compose(mu_y, tensor_of(mu_x, idA))));
        bump("counit", sup_distance(compose(tensor_of(idA, ep_y), de_x),
                                    compose(tensor_of(ep_x, idA), de_y)));
        bump("counit", sup_distance(compose(tensor_of(idA, ep_y), de_x), P_s));
        bump("coassoc", sup_distance(compose(tensor_of(idA, de_y), de_x),
                                     compose(tensor_of(de_y, idA), de_x)));
        bump("frobenius", sup_distance(compose(tensor_of(mu_x, idA), tensor_of(idA, de_y)),
                                       compose(de_x, mu_y)));
        bump("frobenius", sup_distance(compose(tensor_of(idA, mu_x), tensor_of(de_y, idA)),
                                       compose(de_x, mu_y)));
        bump("p_semigroup", sup_distance(compose(P_x, P_y), P_s));
        // same total split two ways
        LinearMap mu_h = A.map(MapKind::Mu, s / 2), eta_h = A.map(MapKind::Eta, s / 2);
        bump("area_additivity", sup_distance(compose(mu_x, tensor_of(idA, eta_y)),
                                             compose(mu_h, tensor_of(idA, eta_h))));
        // informational
        bump("commutative", sup_distance(compose(mu_x, sw), mu_x));
        LinearMap beta = compose(ep_x, mu_y);
        bump("symmetric", sup_distance(compose(beta, sw), beta));
        bump("hermitian_mu", sup_distance(adjoint(mu_x), de_x));
        bump("hermitian_eta", sup_distance(adjoint(eta_x), ep_x));
    }
    return rep;
}

AxiomReport check_morphism(const Rfa& A, const Rfa& B, const LinearMap& f,
                           const std::vector<double>& areas, double tol)
{
    AxiomReport rep;
    rep.tol = tol;
    rep.core = {"mor_mu", "mor_eta", "mor_delta", "mor_eps"};
    auto bump = [&](const std::string& key, double v) {
        auto& slot = rep.defects[key];
        slot = std::max(slot, v);
    };
    for (double a : areas) {
        bump("mor_mu", sup_distance(compose(f, A.map(MapKind::Mu, a)),
                                    compose(B.map(MapKind::Mu, a), tensor_of(f, f))));
        bump("mor_eta", sup_distance(compose(f, A.map(MapKind::Eta, a)), B.map(MapKind::Eta, a)));
        bump("mor_delta", sup_distance(compose(tensor_of(f, f), A.map(MapKind::Delta, a)),
                                       compose(B.map(MapKind::Delta, a), f)));
        bump("mor_eps", sup_distance(compose(B.map(MapKind::Eps, a), f), A.map(MapKind::Eps, a)));
    }
    return rep;
}

Tensor window_element(const Rfa& A, double a)
{
    double s = a / 3;
    LinearMap tau = compose(A.map(MapKind::Mu, s),
                            compose(A.map(MapKind::Delta, s), A.map(MapKind::Eta, s)));
    return tau.t;
}

namespace {

std::optional<Tensor> solve_window(const LinearMap& mu, const Tensor& tau, const LinearMap& eta,
                                   const IndexSpace& space)
{
    // left-multiplication by tau
    Tensor mt = contract(mu.t, tau, {{1, 0}}); // legs [out, in2]
    LinearMap M{{space}, {space}, mt};
    Eigen::MatrixXcd Md = to_dense(M);
    Eigen::VectorXcd rhs = to_dense(eta).col(0);
    Eigen::VectorXcd z = Md.colPivHouseholderQr().solve(rhs);
    double resid = (Md * z - rhs).norm();
    if (!z.allFinite() || resid > 1e-10 * std::max(1.0, rhs.norm()))
        return std::nullopt;
    Tensor out({space});
    std::vector<Tensor::Entry> raw;
    for (long i = 0; i < z.size(); ++i)
        if (std::abs(z(i)) >= kZeroThreshold)
            raw.push_back({static_cast<Tensor::Key>(i), z(i)});
    out.assign_entries(std::move(raw));
    return out;
}

} // namespace

std::optional<Tensor> window_inverse(const Rfa& A, double a)
{
    // solve mu_{a/4}(tau_{a/4} ⊗ z) = eta_{a/2 + a}, so z sits at parameter a
    double s = a / 4;
    Tensor tau = window_element(A, s);
    return solve_window(A.map(MapKind::Mu, s), tau, A.map(MapKind::Eta, 2 * s + a), A.carrier());
}

std::optional<Tensor> separability_idempotent(const Rfa& A, double a)
{
    auto z = window_inverse(A, a / 2);
    if (!z)
        return std::nullopt;
    LinearMap de = A.map(MapKind::Delta, a / 2);
    return contract(de.t, *z, {{2, 0}}); // legs [A, A]
}

std::optional<Tensor> separability_idempotent0(const Rfa& A)
{
    if (!A.has_map0())
        return std::nullopt;
    LinearMap mu0 = A.map0(MapKind::Mu);
    LinearMap de0 = A.map0(MapKind::Delta);
    LinearMap eta0 = A.map0(MapKind::Eta);
    Tensor tau0 = compose(mu0, compose(de0, eta0)).t;
    auto z0 = solve_window(mu0, tau0, eta0, A.carrier());
    if (!z0)
        return std::nullopt;
    return contract(de0.t, *z0, {{2, 0}});
}

namespace {

LinearMap zeta_from(const LinearMap& eps, const LinearMap& mu, const Tensor& e,
                    const IndexSpace& space)
{
    Tensor v = contract(eps.t, e, {{0, 0}});   // eps(e1) e2, one leg
    Tensor zt = contract(mu.t, v, {{1, 0}});   // legs [out, in2]
    return LinearMap{{space}, {space}, zt};
}

} // namespace

LinearMap rfa_zeta(const Rfa& A, double a)
{
    auto e = separability_idempotent(A, a / 2);
    if (!e)
        throw AqftError("'" + A.carrier().label + "' is not strongly separable");
    return zeta_from(A.map(MapKind::Eps, a / 4), A.map(MapKind::Mu, a / 4), *e, A.carrier());
}

LinearMap rfa_zeta0(const Rfa& A)
{
    auto e = separability_idempotent0(A);
    if (!e)
        throw AqftError("'" + A.carrier().label + "' has no damping-free separability idempotent");
    return zeta_from(A.map0(MapKind::Eps), A.map0(MapKind::Mu), *e, A.carrier());
}

LinearMap rfa_D(const Rfa& A, double a)
{
    IndexSpace As = A.carrier();
    return compose(rfa_zeta(A, a / 3),
                   compose(A.map(MapKind::Mu, a / 3),
                           compose(swap_map(As, As), A.map(MapKind::Delta, a / 3))));
}

LinearMap rfa_D0(const Rfa& A)
{
    if (A.has_map0()) {
        IndexSpace As = A.carrier();
        return compose(rfa_zeta0(A),
                       compose(A.map0(MapKind::Mu),
                               compose(swap_map(As, As), A.map0(MapKind::Delta))));
    }
    // extrapolate over three decades and Richardson-correct the smallest
    double s2 = 1e-4, s3 = 1e-5;
    LinearMap d1 = rfa_D(A, 1e-3);
    LinearMap d2 = rfa_D(A, s2);
    LinearMap d3 = rfa_D(A, s3);
    double c12 = sup_distance(d1, d2), c23 = sup_distance(d2, d3);
    if (c23 > 0.5 * c12 + 1e-9)
        throw AqftError("D_a does not look Cauchy as a->0");
    return lm_sum(d3, lm_sum(d3, d2, 1.0, -1.0), 1.0, s3 / (s2 - s3));
}

bool is_hermitian(const Rfa& A, double a, double tol)
{
    return sup_distance(adjoint(A.map(MapKind::Mu, a)), A.map(MapKind::Delta, a)) <= tol &&
           sup_distance(adjoint(A.map(MapKind::Eta, a)), A.map(MapKind::Eps, a)) <= tol;
}

namespace {

/// Extracts a spectral (sum of C_{eps,sigma}) presentation of a commutative
/// Hermitian RFA given by sampled maps on an r-dimensional space.
std::optional<RfaPtr> extract_spectral(const Rfa& Z, double tol, LinearMap* basis_out)
{
    const double a0 = 1.0;
    Eigen::MatrixXcd P = to_dense(Z.map(MapKind::P, a0));
    if ((P - P.adjoint()).norm() > 1e-8 * std::max(1.0, P.norm()))
        return std::nullopt;
    long r = P.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(P);
    // group eigenvalues within relative 1e-9
    std::vector<std::vector<long>> groups;
    for (long i = 0; i < r; ++i) {
        double lam = es.eigenvalues()(i);
        if (lam < 1e-300)
            return std::nullopt; // P_a must be strictly positive
        if (!groups.empty()) {
            double ref = es.eigenvalues()(groups.back().front());
            if (std::abs(lam - ref) <= 1e-9 * std::max(std::abs(ref), 1e-300)) {
                groups.back().push_back(i);
                continue;
            }
        }
        groups.push_back({i});
    }
    std::mt19937_64 rng(0xC0FFEEULL);
    std::uniform_real_distribution<double> dist(0.25, 1.0);
    Eigen::MatrixXcd mu = to_dense(Z.map(MapKind::Mu, a0));
    Eigen::MatrixXcd epsv = to_dense(Z.map(MapKind::Eps, a0));
    std::vector<SpectralBlock> blocks;
    Eigen::MatrixXcd basis(r, r);
    long col = 0;
    for (const auto& g : groups) {
        double lam = es.eigenvalues()(g.front());
        double sigma = -std::log(lam) / a0;
        long m = static_cast<long>(g.size());
        Eigen::MatrixXcd U(r, m);
        for (long j = 0; j < m; ++j)
            U.col(j) = es.eigenvectors().col(g[j]);
        // diagonalize multiplication by a random element of the eigenspace
        Eigen::VectorXcd x = Eigen::VectorXcd::Zero(r);
        for (long j = 0; j < m; ++j)
            x += dist(rng) * U.col(j);
        // L_x on the eigenspace in the U-basis
        Eigen::MatrixXcd Lx(m, m);
        for (long j = 0; j < m; ++j) {
            Eigen::VectorXcd xy(r * r);
            for (long p = 0; p < r; ++p)
                for (long q = 0; q < r; ++q)
                    xy(p + q * r) = x(p) * U.col(j)(q);
            Eigen::VectorXcd prod = mu * xy;
            Lx.col(j) = U.adjoint() * prod;
        }
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(Lx);
        if (ces.info() != Eigen::Success)
            return std::nullopt;
        for (long j = 0; j < m; ++j) {
            Eigen::VectorXcd v = U * ces.eigenvectors().col(j);
            v.normalize();
            cplx e = (epsv * v)(0) * std::exp(a0 * sigma);
            if (std::abs(e) < 1e-12)
                return std::nullopt;
            // fix the phase so eps is real positive
            cplx phase = std::conj(e) / std::abs(e);
            v *= phase;
            e *= phase;
            basis.col(col) = v;
            blocks.push_back({"z" + std::to_string(col), e, sigma});
            ++col;
        }
    }
    RfaPtr spec = make_spectral_rfa(blocks, "extracted");
    // verify the change of basis is an RFA morphism
    LinearMap f = from_dense(basis, {Z.carrier()}, {spec->carrier()});
    AxiomReport mor = check_morphism(*spec, Z, f, {0.3, 1.0}, std::max(tol, 1e-8));
    if (!mor.ok())
        return std::nullopt;
    if (basis_out)
        *basis_out = f;
    return spec;
}

} // namespace

CenterResult center(const Rfa& A, double tol)
{
    if (auto c = A.canonical_center())
        return *c;

    // strongly separable symmetric precheck
    IndexSpace As = A.carrier();
    LinearMap beta = compose(A.map(MapKind::Eps, 0.5), A.map(MapKind::Mu, 0.5));
    if (sup_distance(compose(beta, swap_map(As, As)), beta) > tol)
        throw AqftError("center: '" + As.label + "' is not symmetric");
    if (!window_inverse(A, 1.0))
        throw AqftError("center: '" + As.label + "' is not strongly separable");

    LinearMap D0 = rfa_D0(A);
    SplitResult split = split_idempotent(D0, std::max(tol, 1e-8), "Z(" + As.label + ")");
    LinearMap proj = split.proj, inj = split.inj;
    IndexSpace zs = proj.outs.at(0);

    auto maps = [proj, inj, zs, self = A.shared_from_this()](MapKind k, double a) -> LinearMap {
        switch (k) {
        case MapKind::Mu:
            return compose(proj, compose(self->map(MapKind::Mu, a), tensor_of(inj, inj)));
        case MapKind::Eta: return compose(proj, self->map(MapKind::Eta, a));
        case MapKind::Delta:
            return compose(tensor_of(proj, proj), compose(self->map(MapKind::Delta, a), inj));
        case MapKind::Eps: return compose(self->map(MapKind::Eps, a), inj);
        case MapKind::P: return compose(proj, compose(self->map(MapKind::P, a), inj));
        }
        throw AqftError("unreachable");
    };
    RfaPtr zfam = make_map_family_rfa(zs, maps, zs.label);

    LinearMap basis = identity_map({zs});
    if (auto spec = extract_spectral(*zfam, tol, &basis)) {
        // re-express proj/inj in the canonical spectral basis
        LinearMap proj2 = compose(adjoint(basis), proj);
        LinearMap inj2 = compose(inj, basis);
        return CenterResult{*spec, std::move(proj2), std::move(inj2)};
    }
    return CenterResult{zfam, std::move(proj), std::move(inj)};
}

std::vector<DaggerComponent> dagger_decompose(const Rfa& A, double a, double tol)
{
    if (a <= 0)
        throw AqftError("dagger_decompose needs a > 0");
    if (!is_hermitian(A, a, tol))
        throw AqftError("dagger_decompose: '" + A.carrier().label + "' fails the Hermitian precheck");
    Eigen::MatrixXcd P = to_dense(A.map(MapKind::P, a));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(P);
    long n = P.rows();
    std::vector<std::vector<long>> groups;
    for (long i = 0; i < n; ++i) {
        double lam = es.eigenvalues()(i);
        if (lam < 1e-300)
            throw AqftError("dagger_decompose: P_a has a non-positive eigenvalue");
        if (!groups.empty()) {
            double ref = es.eigenvalues()(groups.back().front());
            if (std::abs(lam - ref) <= 1e-9 * std::abs(ref)) {
                groups.back().push_back(i);
                continue;
            }
        }
        groups.push_back({i});
    }
    std::vector<DaggerComponent> out;
    LinearMap mu_a = A.map(MapKind::Mu, a), eta_a = A.map(MapKind::Eta, a);
    LinearMap de_a = A.map(MapKind::Delta, a), ep_a = A.map(MapKind::Eps, a);
    int bi = 0;
    for (const auto& g : groups) {
        double lam = es.eigenvalues()(g.front());
        double sigma = -std::log(lam) / a;
        long m = static_cast<long>(g.size());
        Eigen::MatrixXcd U(n, m);
        for (long j = 0; j < m; ++j)
            U.col(j) = es.eigenvectors().col(g[j]);
        IndexSpace bs = make_space(A.carrier().label + "#" + std::to_string(bi), static_cast<int>(m));
        LinearMap inj = from_dense(U, {A.carrier()}, {bs});
        LinearMap proj = from_dense(U.adjoint(), {bs}, {A.carrier()});
        double undamp = std::exp(a * sigma);
        LinearMap mu0 = lm_scale(compose(proj, compose(mu_a, tensor_of(inj, inj))), undamp);
        LinearMap eta0 = lm_scale(compose(proj, eta_a), undamp);
        LinearMap de0 = lm_scale(compose(tensor_of(proj, proj), compose(de_a, inj)), undamp);
        LinearMap ep0 = lm_scale(compose(ep_a, inj), undamp);
        Tensor H = eta0.t.scaled(-sigma);
        RfaPtr blk = make_finite_rfa(mu0, eta0, de0, ep0, H, bs.label);
        out.push_back({blk, sigma, std::move(inj), std::move(proj)});
        ++bi;
    }
    return out;
}

namespace {

Tensor unit_vector0(const Rfa& A)
{
    return A.map0(MapKind::Eta).t;
}

Tensor h_vector_impl(const Rfa& A)
{
    if (auto sb = A.spectral_blocks()) {
        Tensor h({A.carrier()});
        for (std::size_t i = 0; i < sb->size(); ++i)
            h.set({static_cast<int>(i)}, -(*sb)[i].sigma * std::conj((*sb)[i].eps));
        return h;
    }
    if (auto mb = A.matrix_blocks()) {
        Tensor h({A.carrier()});
        int off = 0;
        for (const auto& b : *mb) {
            double c = -b.sigma * std::sqrt(static_cast<double>(b.dim));
            for (int i = 0; i < b.dim; ++i)
                h.set({off + i * b.dim + i}, c);
            off += b.dim * b.dim;
        }
        return h;
    }
    if (auto f = dynamic_cast<const FiniteRfa*>(&A))
        return f->h_element();
    throw AqftError("no generator vector for '" + A.carrier().label + "'");
}

} // namespace

Tensor rfa_h_element(const Rfa& A)
{
    return h_vector_impl(A);
}

RfaPtr tensor_rfa(const Rfa& A, const Rfa& B)
{
    auto sa = A.spectral_blocks();
    auto sb = B.spectral_blocks();
    if (sa && sb) {
        std::vector<SpectralBlock> blocks;
        for (const auto& x : *sa)
            for (const auto& y : *sb)
                blocks.push_back({x.label + "|" + y.label, x.eps * y.eps, x.sigma + y.sigma});
        return make_spectral_rfa(std::move(blocks),
                                 A.carrier().label + "(x)" + B.carrier().label);
    }

    IndexSpace As = A.carrier(), Bs = B.carrier();
    // (A⊗B)⊗(A⊗B) -> A⊗A⊗B⊗B, the middle-swap convention
    LinearMap mid = tensor_of(tensor_of(identity_map({As}), swap_map(Bs, As)), identity_map({Bs}));
    std::string name = "(" + As.label + ")(x)(" + Bs.label + ")";
    IndexSpace prod = make_space(name, As.dim * Bs.dim);

    // folds (A,B) leg pairs into single product-space legs; keys are unchanged
    // because packing is little-endian with the A factor fastest
    auto fold = [prod](LinearMap m) {
        std::vector<IndexSpace> outs(m.outs.size() / 2, prod), ins(m.ins.size() / 2, prod);
        std::vector<IndexSpace> legs = outs;
        legs.insert(legs.end(), ins.begin(), ins.end());
        Tensor t(legs);
        auto es = m.t.entries();
        t.assign_entries({es.begin(), es.end()});
        return LinearMap{outs, ins, std::move(t)};
    };

    if (A.has_map0() && B.has_map0()) {
        LinearMap mu0 = fold(compose(tensor_of(A.map0(MapKind::Mu), B.map0(MapKind::Mu)), mid));
        LinearMap eta0 = fold(tensor_of(A.map0(MapKind::Eta), B.map0(MapKind::Eta)));
        LinearMap de0 =
            fold(compose(adjoint(mid), tensor_of(A.map0(MapKind::Delta), B.map0(MapKind::Delta))));
        LinearMap ep0 = fold(tensor_of(A.map0(MapKind::Eps), B.map0(MapKind::Eps)));
        Tensor H = tensor_sum(contract(rfa_h_element(A), unit_vector0(B), {}),
                              contract(unit_vector0(A), rfa_h_element(B), {}));
        Tensor Hf({prod});
        auto hes = H.entries();
        Hf.assign_entries({hes.begin(), hes.end()});
        return make_finite_rfa(mu0, eta0, de0, ep0, Hf, name);
    }

    auto pa = A.shared_from_this();
    auto pb = B.shared_from_this();
    auto maps = [pa, pb, mid, fold](MapKind k, double a) -> LinearMap {
        LinearMap m = [&]() {
            switch (k) {
            case MapKind::Mu:
                return compose(tensor_of(pa->map(MapKind::Mu, a), pb->map(MapKind::Mu, a)), mid);
            case MapKind::Eta:
                return tensor_of(pa->map(MapKind::Eta, a), pb->map(MapKind::Eta, a));
            case MapKind::Delta:
                return compose(adjoint(mid),
                               tensor_of(pa->map(MapKind::Delta, a), pb->map(MapKind::Delta, a)));
            case MapKind::Eps:
                return tensor_of(pa->map(MapKind::Eps, a), pb->map(MapKind::Eps, a));
            case MapKind::P:
                return tensor_of(pa->map(MapKind::P, a), pb->map(MapKind::P, a));
            }
            throw AqftError("unreachable");
        }();
        return fold(m);
    };
    return make_map_family_rfa(prod, maps, name);
}

ConvergenceReport spectral_convergence_report(
    const std::function<std::pair<cplx, double>(std::size_t)>& family, double a,
    const std::vector<std::size_t>& cutoffs)
{
    if (a <= 0)
        throw AqftError("spectral_convergence_report needs a > 0");
    ConvergenceReport rep;
    std::size_t maxc = 0;
    for (auto c : cutoffs)
        maxc = std::max(maxc, c);
    double sup = 0.0, sum = 0.0;
    std::vector<double> sums_at;
    std::size_t next = 0;
    std::vector<std::size_t> sorted = cutoffs;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < maxc; ++k) {
        auto [eps, sigma] = family(k);
        if (std::abs(eps) == 0.0)
            throw AqftError("family produced eps = 0 at k=" + std::to_string(k));
        sup = std::max(sup, std::exp(-a * sigma) / std::abs(eps));
        sum += std::exp(-2 * a * sigma) * std::norm(eps);
        while (next < sorted.size() && k + 1 == sorted[next]) {
            rep.rows.push_back({sorted[next], sup, sum, 0.0});
            ++next;
        }
    }
    // Cauchy-style tail estimates from consecutive windows
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        double inc = rep.rows[i].sum_term - rep.rows[i - 1].sum_term;
        double prev = i >= 2 ? rep.rows[i - 1].sum_term - rep.rows[i - 2].sum_term
                             : rep.rows[0].sum_term;
        if (inc <= 1e-14 * std::max(1.0, rep.rows[i].sum_term)) {
            rep.rows[i].tail_estimate = 0.0;
            continue;
        }
        double ratio = prev > 0 ? inc / prev : 0.0;
        if (ratio >= 1.0 - 1e-12) {
            rep.rows[i].tail_estimate = std::numeric_limits<double>::infinity();
            rep.divergent = true;
        } else {
            rep.rows[i].tail_estimate = inc * ratio / std::max(1e-300, 1.0 - ratio);
        }
    }
    if (rep.divergent)
        rep.note = "partial sums are not Cauchy: apparent divergence";
    return rep;
}

} // namespace aqft
