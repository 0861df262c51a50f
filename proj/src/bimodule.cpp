#include "aqft/bimodule.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace aqft {

Eigen::MatrixXcd generator_matrix(const Rfa& A)
{
    if (!A.has_map0())
        throw AqftError("generator_matrix: '" + A.carrier().label + "' is not an exponential model");
    // L_H = mu0(h ⊗ -)
    Tensor lh = contract(A.map0(MapKind::Mu).t, rfa_h_element(A), {{1, 0}});
    return to_dense(LinearMap{{A.carrier()}, {A.carrier()}, lh});
}

LinearMap Bimodule::Q(double a, double l, double b) const
{
    Eigen::MatrixXcd E = (a * HA + l * HM + b * HB).exp();
    return from_dense(E, {carrier}, {carrier});
}

LinearMap Bimodule::action(double a, double l, double b) const
{
    return compose(Q(a, l, b), base);
}

LinearMap action(const Bimodule& M, double a, double l, double b)
{
    return M.action(a, l, b);
}

bool BimoduleReport::ok() const
{
    for (const auto& [k, v] : defects)
        if (v > tol)
            return false;
    return true;
}

BimoduleReport check_bimodule(const Bimodule& M, const std::vector<double>& params, double tol)
{
    BimoduleReport rep;
    rep.tol = tol;
    auto bump = [&](const std::string& k, double v) {
        auto& s = rep.defects[k];
        s = std::max(s, v);
    };
    auto comm = [](const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& Y) {
        return (X * Y - Y * X).norm();
    };
    bump("generators_commute", comm(M.HA, M.HM));
    bump("generators_commute", comm(M.HA, M.HB));
    bump("generators_commute", comm(M.HM, M.HB));
    bump("q_identity", sup_distance(M.Q(0, 0, 0), identity_map({M.carrier})));

    IndexSpace As = M.left->carrier(), Bs = M.right->carrier(), Ms = M.carrier;
    LinearMap idA = identity_map({As}), idB = identity_map({Bs}), idM = identity_map({Ms});
    for (double p : params) {
        // associativity: rho_{p,l,p}(id ⊗ rho ⊗ id) = rho(mu ⊗ id ⊗ mu)
        LinearMap inner = M.action(p / 2, p / 2, p / 2);
        LinearMap lhs = compose(M.action(p / 2, p / 2, p / 2),
                                tensor_of(tensor_of(idA, inner), idB));
        LinearMap rhs = compose(M.action(p / 2, p, p / 2),
                                tensor_of(tensor_of(M.left->map(MapKind::Mu, p / 2), idM),
                                          M.right->map(MapKind::Mu, p / 2)));
        bump("associativity", sup_distance(lhs, rhs));
        // semigroup
        bump("q_semigroup", sup_distance(compose(M.Q(p, 0, p / 2), M.Q(p / 2, p, p)),
                                         M.Q(1.5 * p, p, 1.5 * p)));
    }
    return rep;
}

BimoduleReport check_dual_pair(const DualPair& p, const std::vector<double>& params, double tol)
{
    BimoduleReport rep;
    rep.tol = tol;
    auto bump = [&](const std::string& k, double v) {
        auto& s = rep.defects[k];
        s = std::max(s, v);
    };
    IndexSpace Us = p.U.carrier, Vs = p.V.carrier;
    LinearMap idU = identity_map({Us}), idV = identity_map({Vs});
    for (double t : params) {
        double h = t / 2;
        LinearMap beta = p.beta(h, h, h);
        LinearMap gamma = p.gamma(h, h, h);
        // zig-zags
        LinearMap zz1 = compose(tensor_of(beta, idU), tensor_of(idU, gamma));
        bump("zigzag_U", sup_distance(zz1, p.U.Q(t, t, t)));
        LinearMap zz2 = compose(tensor_of(idV, beta), tensor_of(gamma, idV));
        bump("zigzag_V", sup_distance(zz2, p.V.Q(t, t, t)));
        // compatibility: beta(x.u.y ⊗ v) = beta(u ⊗ y.v.x)
        IndexSpace As = p.U.left->carrier(), Bs = p.U.right->carrier();
        LinearMap lhs = compose(p.beta(h, h, h), tensor_of(p.U.action(h, h, h), idV));
        // rhs: reorder inputs [A,U,B,V] -> [U, B,V,A] then act on V
        LinearMap act = compose(p.beta(h, h, h), tensor_of(idU, p.V.action(h, h, h)));
        // build the permutation [A,U,B,V] -> [U,B,V,A]
        LinearMap permuter = [&]() {
            std::vector<IndexSpace> src{As, Us, Bs, Vs};
            std::vector<int> perm{1, 2, 3, 0}; // out legs pick src legs
            LinearMap id4 = identity_map(src);
            // reorder the out legs of the identity
            std::vector<int> tperm;
            for (int i = 0; i < 4; ++i)
                tperm.push_back(perm[i]);
            for (int i = 0; i < 4; ++i)
                tperm.push_back(4 + i);
            Tensor tt = id4.t.permuted(tperm);
            std::vector<IndexSpace> outs{Us, Bs, Vs, As};
            return LinearMap{outs, src, tt};
        }();
        LinearMap rhs = compose(act, permuter);
        bump("compatibility", sup_distance(lhs, rhs));
    }
    return rep;
}

bool is_transmissive(const Bimodule& M, double tol)
{
    return (M.HA - M.HB).norm() <= tol;
}

// ---------------------------------------------------------------------------
// tensor products over the middle algebra

namespace {

Tensor middle_idempotent(const Rfa& A, double a)
{
    if (a == 0.0) {
        auto e = separability_idempotent0(A);
        if (!e)
            throw AqftError("'" + A.carrier().label + "' is not strongly separable");
        return *e;
    }
    auto e = separability_idempotent(A, a);
    if (!e)
        throw AqftError("'" + A.carrier().label + "' is not strongly separable");
    return *e;
}

LinearMap eta_vec(const Rfa& A, double a)
{
    return a == 0.0 ? A.map0(MapKind::Eta) : A.map(MapKind::Eta, a);
}

} // namespace

LinearMap bimodule_D(const Bimodule& M, const Bimodule& N, double a)
{
    if (M.right->carrier() != N.left->carrier())
        throw AqftError("tensor product: middle algebras differ");
    const Rfa& A = *M.right;
    Tensor e = middle_idempotent(A, a);
    // rho^M(eta_B ⊗ m ⊗ e1) ⊗ rho^N(e2 ⊗ n ⊗ eta_C)
    LinearMap rm = M.action(a, a, a);
    LinearMap rn = N.action(a, a, a);
    Tensor tm = contract(rm.t, eta_vec(*M.left, a).t, {{1, 0}});  // [out, m, e1]
    Tensor tn = contract(rn.t, eta_vec(*N.right, a).t, {{3, 0}}); // [out, e2, n]
    tm = contract(tm, e, {{2, 0}});                               // [outM, m, e2]
    Tensor t = contract(tm, tn, {{2, 1}});                        // [outM, m, outN, n]
    t = t.permuted({0, 2, 1, 3});                                 // [outM, outN, m, n]
    return LinearMap{{M.carrier, N.carrier}, {M.carrier, N.carrier}, t};
}

LinearMap bimodule_D0(const Bimodule& M, const Bimodule& N)
{
    if (M.right->has_map0() && M.left->has_map0() && N.right->has_map0())
        return bimodule_D(M, N, 0.0);
    LinearMap d2 = bimodule_D(M, N, 1e-4), d3 = bimodule_D(M, N, 1e-5);
    return lm_sum(d3, lm_sum(d3, d2, 1.0, -1.0), 1.0, 1e-5 / (1e-4 - 1e-5));
}

LinearMap cyclic_D(const Bimodule& M, double a)
{
    if (M.left->carrier() != M.right->carrier())
        throw AqftError("cyclic tensor product needs an A-A-bimodule");
    const Rfa& A = *M.left;
    Tensor e = middle_idempotent(A, a);            // legs [e1, e2]
    LinearMap rm = M.action(a, a, a);              // legs [out, a_left, m, a_right]
    Tensor t = contract(rm.t, e, {{3, 0}});        // rho(., m, e1): [out, a_left, m, e2]
    // wrap around: feed e2 into the left input
    Tensor out = contract(t, identity_map({A.carrier()}).t, {{1, 0}, {3, 1}});
    return LinearMap{{M.carrier}, {M.carrier}, out};
}

LinearMap cyclic_D0(const Bimodule& M)
{
    if (M.left->has_map0())
        return cyclic_D(M, 0.0);
    LinearMap d2 = cyclic_D(M, 1e-4), d3 = cyclic_D(M, 1e-5);
    return lm_sum(d3, lm_sum(d3, d2, 1.0, -1.0), 1.0, 1e-5 / (1e-4 - 1e-5));
}

TensorProductResult tensor_product(const Bimodule& M, const Bimodule& N, double tol)
{
    LinearMap D0 = bimodule_D0(M, N);
    SplitResult s = split_idempotent(D0, std::max(tol, 1e-9),
                                     M.carrier.label + "(x)" + N.carrier.label);
    // induced action: proj ∘ (rho^M ⊗ rho^N) ∘ (id_B ⊗ e ⊗ id_C) ∘ (id_B ⊗ inj ⊗ id_C)
    const Rfa& A = *M.right;
    bool exact = A.has_map0() && M.left->has_map0() && N.right->has_map0();
    Tensor e = middle_idempotent(A, exact ? 0.0 : 1e-6);
    LinearMap rm = exact ? M.base : M.action(1e-6, 1e-6, 1e-6);
    LinearMap rn = exact ? N.base : N.action(1e-6, 1e-6, 1e-6);
    Tensor tm = contract(rm.t, e, {{3, 0}}); // [outM, b_in, m, e2]
    Tensor tn = rn.t;                        // [outN, a_in, n, c_in]
    Tensor t = contract(tm, tn, {{3, 1}});   // [outM, b_in, m, outN, n, c_in]
    t = t.permuted({0, 3, 1, 2, 4, 5});      // [outM, outN, b_in, m, n, c_in]
    LinearMap big{{M.carrier, N.carrier},
                  {M.left->carrier(), M.carrier, N.carrier, N.right->carrier()},
                  t};
    LinearMap injMN = tensor_of(identity_map({M.left->carrier()}),
                                tensor_of(s.inj, identity_map({N.right->carrier()})));
    LinearMap base = compose(s.proj, compose(big, injMN));

    Bimodule prod;
    prod.left = M.left;
    prod.right = N.right;
    prod.carrier = s.proj.outs.at(0);
    prod.base = base;
    Eigen::MatrixXcd P = to_dense(s.proj), I_ = to_dense(s.inj);
    Eigen::MatrixXcd idN = Eigen::MatrixXcd::Identity(N.carrier.dim, N.carrier.dim);
    Eigen::MatrixXcd idM = Eigen::MatrixXcd::Identity(M.carrier.dim, M.carrier.dim);
    auto kron = [](const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& Y) {
        // little-endian ordering: first factor fastest
        Eigen::MatrixXcd K(X.rows() * Y.rows(), X.cols() * Y.cols());
        for (long i = 0; i < Y.rows(); ++i)
            for (long j = 0; j < Y.cols(); ++j)
                K.block(i * X.rows(), j * X.cols(), X.rows(), X.cols()) = Y(i, j) * X;
        return K;
    };
    prod.HA = P * kron(M.HA, idN) * I_;
    prod.HM = P * (kron(M.HM, idN) + kron(idM, N.HM)) * I_;
    prod.HB = P * kron(idM, N.HB) * I_;
    return TensorProductResult{std::move(prod), s.proj, s.inj};
}

CyclicResult cyclic_tensor(const Bimodule& M, double tol)
{
    LinearMap D0 = cyclic_D0(M);
    SplitResult s = split_idempotent(D0, std::max(tol, 1e-9), "cyc(" + M.carrier.label + ")");
    return CyclicResult{s.proj.outs.at(0), s.proj, s.inj};
}

// ---------------------------------------------------------------------------
// twisted and Wilson bimodules

Bimodule twisted(RfaPtr A, const LinearMap& alpha)
{
    AxiomReport mor = check_morphism(*A, *A, alpha, {0.3, 1.0}, 1e-9);
    if (!mor.ok())
        throw AqftError("twisted: alpha is not an RFA automorphism of '" + A->carrier().label +
                        "'");
    if (!A->has_map0())
        throw AqftError("twisted: exponential model required");
    IndexSpace As = A->carrier();
    LinearMap mu0 = A->map0(MapKind::Mu);
    // x ⊗ m ⊗ y -> alpha(x) * m * y
    LinearMap base = compose(mu0, tensor_of(alpha, mu0));
    Bimodule M;
    M.left = A;
    M.right = A;
    M.carrier = As;
    M.base = base;
    Eigen::MatrixXcd L = generator_matrix(*A);
    M.HA = L;
    M.HB = L;
    M.HM = Eigen::MatrixXcd::Zero(As.dim, As.dim);
    return M;
}

DualPair twisted_pair(RfaPtr A, const LinearMap& alpha)
{
    Eigen::MatrixXcd ainv = to_dense(alpha).inverse();
    LinearMap alpha_inv = from_dense(ainv, alpha.outs, alpha.ins);
    DualPair p;
    p.U = twisted(A, alpha);
    p.V = twisted(A, alpha_inv);
    IndexSpace As = A->carrier();
    p.beta = [A, alpha, As](double a, double /*l*/, double b) {
        LinearMap idA = identity_map({As});
        return compose(A->map(MapKind::Eps, a),
                       compose(A->map(MapKind::Mu, b), tensor_of(idA, alpha)));
    };
    p.gamma = [A, alpha_inv, As](double a, double /*l*/, double b) {
        LinearMap idA = identity_map({As});
        return compose(tensor_of(alpha_inv, idA),
                       compose(A->map(MapKind::Delta, a), A->map(MapKind::Eta, b)));
    };
    return p;
}

namespace {

struct BlockLayout {
    std::vector<int> offsets;
    int total = 0;
    int index(std::size_t blk, int i, int j, int d) const { return offsets[blk] + i * d + j; }
};

BlockLayout layout_of(const GroupData& g)
{
    BlockLayout L;
    for (const auto& ir : g.irreps) {
        L.offsets.push_back(L.total);
        L.total += ir.dim * ir.dim;
    }
    return L;
}

/// labels U with N_{U,V}^W >= 1, gathered from the canonical enumeration and
/// verified complete through the dimension sum rule
std::vector<std::string> fusion_range(const GroupData& g, const std::string& V,
                                      const std::string& W)
{
    if (!g.cg)
        throw AqftError("group " + g.name + " carries no Clebsch-Gordan data");
    int dV = g.irrep(V).dim;
    int dW = g.irrep(W).dim;
    std::vector<std::string> out;
    long seen = 0;
    std::size_t guard = 4 * (g.irreps.size() + dV + dW) + 64;
    for (std::size_t k = 0; k < guard && seen < static_cast<long>(dV) * dW; ++k) {
        auto ir = g.enumerate(k);
        if (!ir)
            break;
        int n = g.fusion(ir->label, V, W);
        if (n > 1)
            throw AqftError("wilson: fusion with multiplicity > 1 is unsupported");
        if (n == 1) {
            out.push_back(ir->label);
            seen += ir->dim;
        }
    }
    if (seen != static_cast<long>(dV) * dW)
        throw AqftError("wilson: could not close the fusion range for (" + V + "," + W + ")");
    return out;
}

} // namespace

Bimodule wilson(const GroupData& g, const std::string& V, RfaPtr A)
{
    DualPair p = wilson_pair(g, V, A);
    return p.U;
}

DualPair wilson_pair(const GroupData& g, const std::string& V, RfaPtr A)
{
    auto mb = A->matrix_blocks();
    if (!mb || mb->size() != g.irreps.size())
        throw AqftError("wilson: the algebra must be the block model of the group table");
    if (!g.in_table(V))
        throw AqftError("wilson: irrep '" + V + "' is not in the table");
    BlockLayout lay = layout_of(g);
    int nA = lay.total;
    int dV = g.irrep(V).dim;
    IndexSpace As = A->carrier();
    IndexSpace Xs = make_space("X[wilson:" + V + "]", dV * nA);
    IndexSpace Xbs = make_space("Xbar[wilson:" + V + "]", nA * dV);

    // X basis (m, U, i, j): index m + dV*(off_U + i d + j)
    auto xidx = [&](int m, std::size_t U, int i, int j) {
        return m + dV * lay.index(U, i, j, g.irreps[U].dim);
    };
    // Xbar basis (U, i, j, m): index (off_U + i d + j) + nA * m  -- V* factor slow
    auto xbidx = [&](std::size_t U, int i, int j, int m) {
        return lay.index(U, i, j, g.irreps[U].dim) + nA * m;
    };

    // left action of f^U_{ij} on X: (m, W,k,l) -> sum_{p,q} sqrt(dU)/dW C(Ui;Vp|Wq) C(Uj;Vm|Wk) (p, W,q,l)
    // assembled per acting block U
    auto left_block = [&](const std::string& U) {
        const Irrep& u = g.irrep(U);
        std::vector<Tensor::Entry> raw;
        for (std::size_t Wb = 0; Wb < g.irreps.size(); ++Wb) {
            const Irrep& w = g.irreps[Wb];
            if (!g.fusion(U, V, w.label))
                continue;
            double pref = std::sqrt(static_cast<double>(u.dim)) / w.dim;
            for (int i = 0; i < u.dim; ++i)
                for (int j = 0; j < u.dim; ++j)
                    for (int m = 0; m < dV; ++m)
                        for (int k = 0; k < w.dim; ++k)
                            for (int l = 0; l < w.dim; ++l) {
                                double c2 = g.cg(U, j, V, m, w.label, k);
                                if (c2 == 0.0)
                                    continue;
                                for (int p = 0; p < dV; ++p)
                                    for (int q = 0; q < w.dim; ++q) {
                                        double c1 = g.cg(U, i, V, p, w.label, q);
                                        if (c1 == 0.0)
                                            continue;
                                        // entry: out (p, W,q,l), in algebra (U,i,j), in X (m, W,k,l)
                                        raw.push_back(
                                            {static_cast<Tensor::Key>(xidx(p, Wb, q, l)) +
                                                 static_cast<Tensor::Key>(Xs.dim) *
                                                     (static_cast<Tensor::Key>(
                                                          lay.index(g.index_of(U), i, j, u.dim)) +
                                                      static_cast<Tensor::Key>(nA) *
                                                          static_cast<Tensor::Key>(
                                                              xidx(m, Wb, k, l))),
                                             pref * c1 * c2});
                                    }
                            }
        }
        return raw;
    };

    Tensor rl({Xs, As, Xs}); // legs [out X, in A, in X]
    {
        std::vector<Tensor::Entry> raw;
        for (const auto& u : g.irreps) {
            auto blk = left_block(u.label);
            raw.insert(raw.end(), blk.begin(), blk.end());
        }
        rl.assign_entries(std::move(raw));
    }
    LinearMap rhoL{{Xs}, {As, Xs}, rl};

    // right action: multiplication on the L2 factor
    Tensor rr({Xs, Xs, As});
    {
        std::vector<Tensor::Entry> raw;
        for (std::size_t Ub = 0; Ub < g.irreps.size(); ++Ub) {
            int d = g.irreps[Ub].dim;
            double c = 1.0 / std::sqrt(static_cast<double>(d));
            for (int m = 0; m < dV; ++m)
                for (int i = 0; i < d; ++i)
                    for (int k = 0; k < d; ++k)
                        for (int l = 0; l < d; ++l)
                            raw.push_back(
                                {static_cast<Tensor::Key>(xidx(m, Ub, i, l)) +
                                     static_cast<Tensor::Key>(Xs.dim) *
                                         (static_cast<Tensor::Key>(xidx(m, Ub, i, k)) +
                                          static_cast<Tensor::Key>(Xs.dim) *
                                              static_cast<Tensor::Key>(lay.index(Ub, k, l, d))),
                                 c});
        }
        rr.assign_entries(std::move(raw));
    }
    LinearMap rhoR{{Xs}, {Xs, As}, rr};

    // base action x ⊗ m ⊗ y -> x.(m.y)
    LinearMap base = compose(rhoL, tensor_of(identity_map({As}), rhoR));

    // generators: H_B = diag(-sigma_W); H_A = sum over the extended range of
    // (-sigma_U) T_U with T_U = rhoL(d_U^{1/2} sum_i f^U_{ii} ⊗ -)
    Eigen::MatrixXcd HB = Eigen::MatrixXcd::Zero(Xs.dim, Xs.dim);
    for (std::size_t Wb = 0; Wb < g.irreps.size(); ++Wb) {
        int d = g.irreps[Wb].dim;
        for (int m = 0; m < dV; ++m)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    int x = xidx(m, Wb, i, j);
                    HB(x, x) = -g.irreps[Wb].sigma;
                }
    }
    Eigen::MatrixXcd HA = Eigen::MatrixXcd::Zero(Xs.dim, Xs.dim);
    for (std::size_t Wb = 0; Wb < g.irreps.size(); ++Wb) {
        const Irrep& w = g.irreps[Wb];
        for (const auto& Ulbl : fusion_range(g, V, w.label)) {
            Irrep u{Ulbl, 0, 0.0};
            // the label may live outside the table; fetch via enumerate scan
            if (g.in_table(Ulbl)) {
                u = g.irrep(Ulbl);
            } else {
                for (std::size_t k = 0;; ++k) {
                    auto ir = g.enumerate(k);
                    if (!ir)
                        throw AqftError("wilson: irrep '" + Ulbl + "' not enumerable");
                    if (ir->label == Ulbl) {
                        u = *ir;
                        break;
                    }
                }
            }
            double pref = static_cast<double>(u.dim) / w.dim;
            for (int m = 0; m < dV; ++m)
                for (int k = 0; k < w.dim; ++k)
                    for (int p = 0; p < dV; ++p)
                        for (int q = 0; q < w.dim; ++q) {
                            double s = 0.0;
                            for (int i = 0; i < u.dim; ++i)
                                s += g.cg(Ulbl, i, V, p, w.label, q) *
                                     g.cg(Ulbl, i, V, m, w.label, k);
                            if (s == 0.0)
                                continue;
                            for (int l = 0; l < w.dim; ++l)
                                HA(xidx(p, Wb, q, l), xidx(m, Wb, k, l)) +=
                                    -u.sigma * pref * s;
                        }
        }
    }

    Bimodule U;
    U.left = A;
    U.right = A;
    U.carrier = Xs;
    U.base = base;
    U.HA = HA;
    U.HB = HB;
    U.HM = Eigen::MatrixXcd::Zero(Xs.dim, Xs.dim);

    // dual bimodule on L2(G) ⊗ V*
    // left action: multiplication on the first factor
    Tensor bl({Xbs, As, Xbs});
    {
        std::vector<Tensor::Entry> raw;
        for (std::size_t Ub = 0; Ub < g.irreps.size(); ++Ub) {
            int d = g.irreps[Ub].dim;
            double c = 1.0 / std::sqrt(static_cast<double>(d));
            for (int m = 0; m < dV; ++m)
                for (int k = 0; k < d; ++k)
                    for (int i = 0; i < d; ++i)
                        for (int j = 0; j < d; ++j)
                            raw.push_back(
                                {static_cast<Tensor::Key>(xbidx(Ub, k, j, m)) +
                                     static_cast<Tensor::Key>(Xbs.dim) *
                                         (static_cast<Tensor::Key>(lay.index(Ub, k, i, d)) +
                                          static_cast<Tensor::Key>(nA) *
                                              static_cast<Tensor::Key>(xbidx(Ub, i, j, m))),
                                 c});
        }
        bl.assign_entries(std::move(raw));
    }
    LinearMap rhoLbar{{Xbs}, {As, Xbs}, bl};

    // right action via Clebsch-Gordan: ((W,k,l), theta_m) . f^U_{ij}
    //   = sum_{p,q} sqrt(dU)/dW C(Uj;Vp|Wq) C(Ui;Vm|Wl) ((W,k,q), theta_p)
    Tensor br({Xbs, Xbs, As});
    {
        std::vector<Tensor::Entry> raw;
        for (std::size_t Wb = 0; Wb < g.irreps.size(); ++Wb) {
            const Irrep& w = g.irreps[Wb];
            for (std::size_t Ub = 0; Ub < g.irreps.size(); ++Ub) {
                const Irrep& u = g.irreps[Ub];
                if (!g.fusion(u.label, V, w.label))
                    continue;
                double pref = std::sqrt(static_cast<double>(u.dim)) / w.dim;
                for (int i = 0; i < u.dim; ++i)
                    for (int j = 0; j < u.dim; ++j)
                        for (int m = 0; m < dV; ++m)
                            for (int l = 0; l < w.dim; ++l) {
                                double c2 = g.cg(u.label, i, V, m, w.label, l);
                                if (c2 == 0.0)
                                    continue;
                                for (int p = 0; p < dV; ++p)
                                    for (int q = 0; q < w.dim; ++q) {
                                        double c1 = g.cg(u.label, j, V, p, w.label, q);
                                        if (c1 == 0.0)
                                            continue;
                                        for (int k = 0; k < w.dim; ++k)
                                            raw.push_back(
                                                {static_cast<Tensor::Key>(xbidx(Wb, k, q, p)) +
                                                     static_cast<Tensor::Key>(Xbs.dim) *
                                                         (static_cast<Tensor::Key>(
                                                              xbidx(Wb, k, l, m)) +
                                                          static_cast<Tensor::Key>(Xbs.dim) *
                                                              static_cast<Tensor::Key>(lay.index(
                                                                  Ub, i, j, u.dim))),
                                                 pref * c1 * c2});
                                    }
                            }
            }
        }
        br.assign_entries(std::move(raw));
    }
    LinearMap rhoRbar{{Xbs}, {Xbs, As}, br};

    LinearMap baseBar = compose(rhoLbar, tensor_of(identity_map({As}), rhoRbar));

    Eigen::MatrixXcd HAbar = Eigen::MatrixXcd::Zero(Xbs.dim, Xbs.dim);
    for (std::size_t Ub = 0; Ub < g.irreps.size(); ++Ub) {
        int d = g.irreps[Ub].dim;
        for (int m = 0; m < dV; ++m)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    int x = xbidx(Ub, i, j, m);
                    HAbar(x, x) = -g.irreps[Ub].sigma;
                }
    }
    // HBbar mirrors HA through the dual-rep Clebsch-Gordan sums
    Eigen::MatrixXcd HBbar = Eigen::MatrixXcd::Zero(Xbs.dim, Xbs.dim);
    for (std::size_t Wb = 0; Wb < g.irreps.size(); ++Wb) {
        const Irrep& w = g.irreps[Wb];
        for (const auto& Ulbl : fusion_range(g, V, w.label)) {
            Irrep u{Ulbl, 0, 0.0};
            if (g.in_table(Ulbl)) {
                u = g.irrep(Ulbl);
            } else {
                for (std::size_t k = 0;; ++k) {
                    auto ir = g.enumerate(k);
                    if (!ir)
                        throw AqftError("wilson: irrep '" + Ulbl + "' not enumerable");
                    if (ir->label == Ulbl) {
                        u = *ir;
                        break;
                    }
                }
            }
            double pref = static_cast<double>(u.dim) / w.dim;
            for (int m = 0; m < dV; ++m)
                for (int l = 0; l < w.dim; ++l)
                    for (int p = 0; p < dV; ++p)
                        for (int q = 0; q < w.dim; ++q) {
                            double s = 0.0;
                            for (int j = 0; j < u.dim; ++j)
                                s += g.cg(Ulbl, j, V, p, w.label, q) *
                                     g.cg(Ulbl, j, V, m, w.label, l);
                            if (s == 0.0)
                                continue;
                            for (int k = 0; k < w.dim; ++k)
                                HBbar(xbidx(Wb, k, q, p), xbidx(Wb, k, l, m)) +=
                                    -u.sigma * pref * s;
                        }
        }
    }

    Bimodule Vb;
    Vb.left = A;
    Vb.right = A;
    Vb.carrier = Xbs;
    Vb.base = baseBar;
    Vb.HA = HAbar;
    Vb.HB = HBbar;
    Vb.HM = Eigen::MatrixXcd::Zero(Xbs.dim, Xbs.dim);

    // duality morphisms
    Tensor gamma0({Xbs, Xs});
    {
        std::vector<Tensor::Entry> raw;
        for (std::size_t Ub = 0; Ub < g.irreps.size(); ++Ub) {
            int d = g.irreps[Ub].dim;
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l)
                    for (int i = 0; i < dV; ++i)
                        raw.push_back({static_cast<Tensor::Key>(xbidx(Ub, k, l, i)) +
                                           static_cast<Tensor::Key>(Xbs.dim) *
                                               static_cast<Tensor::Key>(xidx(i, Ub, l, k)),
                                       1.0});
        }
        gamma0.assign_entries(std::move(raw));
    }
    Tensor beta0({Xs, Xbs});
    {
        std::vector<Tensor::Entry> raw;
        for (std::size_t Ub = 0; Ub < g.irreps.size(); ++Ub) {
            int d = g.irreps[Ub].dim;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    for (int m = 0; m < dV; ++m)
                        raw.push_back({static_cast<Tensor::Key>(xidx(m, Ub, i, j)) +
                                           static_cast<Tensor::Key>(Xs.dim) *
                                               static_cast<Tensor::Key>(xbidx(Ub, j, i, m)),
                                       1.0});
        }
        beta0.assign_entries(std::move(raw));
    }

    auto sigma_diag_xb = HAbar; // -sigma on the L2 factor of Xbar
    Bimodule Ucopy = U;
    DualPair p;
    p.U = U;
    p.V = Vb;
    p.beta = [beta0, Ucopy, sigma_diag_xb, Xs, Xbs](double a, double /*l*/, double b) {
        // beta_{a,b} = beta_0 ∘ (Q^X_{a,0} ⊗ e^{b * (-sigma on Xbar's L2 factor)})
        Eigen::MatrixXcd right = (b * sigma_diag_xb).exp();
        LinearMap qa = Ucopy.Q(a, 0.0, 0.0);
        LinearMap rb = from_dense(right, {Xbs}, {Xbs});
        LinearMap b0{{}, {Xs, Xbs}, beta0};
        return compose(b0, tensor_of(qa, rb));
    };
    p.gamma = [gamma0, Ucopy, sigma_diag_xb, Xs, Xbs](double a, double /*l*/, double b) {
        Eigen::MatrixXcd right = (b * sigma_diag_xb).exp();
        LinearMap qa = Ucopy.Q(a, 0.0, 0.0);
        LinearMap rb = from_dense(right, {Xbs}, {Xbs});
        LinearMap g0{{Xbs, Xs}, {}, gamma0};
        return compose(tensor_of(rb, qa), g0);
    };
    return p;
}

// ---------------------------------------------------------------------------
// the singular-limit example

namespace {

RfaPtr cx2_rfa(double hshift, const std::string& name)
{
    IndexSpace As = make_space(name, 2);
    Tensor mu({As, As, As});
    mu.set({0, 0, 0}, 1.0); // 1*1
    mu.set({1, 0, 1}, 1.0); // 1*x
    mu.set({1, 1, 0}, 1.0); // x*1
    Tensor eta({As});
    eta.set({0}, 1.0);
    Tensor de({As, As, As}); // Delta(1) = 1⊗x + x⊗1, Delta(x) = x⊗x
    de.set({0, 1, 0}, 1.0);
    de.set({1, 0, 0}, 1.0);
    de.set({1, 1, 1}, 1.0);
    Tensor ep({As});
    ep.set({1}, 1.0);
    Tensor H({As});
    H.set({0}, hshift);
    H.set({1}, 1.0); // H = x + hshift
    return make_finite_rfa(LinearMap{{As}, {As, As}, mu}, LinearMap{{As}, {}, eta},
                           LinearMap{{As, As}, {As}, de}, LinearMap{{}, {As}, ep}, H, name);
}

} // namespace

std::tuple<RfaPtr, RfaPtr, Bimodule> singular_example(int n)
{
    if (n < 1 || n > 26)
        throw AqftError("singular_example: need 1 <= n <= 26 for a representable e^{n^2}");
    RfaPtr AL = cx2_rfa(-static_cast<double>(n), "AL[" + std::to_string(n) + "]");
    RfaPtr AR = cx2_rfa(-std::pow(static_cast<double>(n), 3), "AR[" + std::to_string(n) + "]");
    IndexSpace Ms = make_space("M[" + std::to_string(n) + "]", 2);
    double enn = std::exp(static_cast<double>(n) * n);
    // x.v0 = e^{n^2} v1, x.v1 = 0; the action of p ⊗ m ⊗ q is (p*q).m
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(2, 2);
    X(1, 0) = enn;
    Eigen::MatrixXcd I2 = Eigen::MatrixXcd::Identity(2, 2);
    Tensor base({Ms, AL->carrier(), Ms, AR->carrier()});
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) {
            // p*q in C[x]/x^2
            Eigen::MatrixXcd act;
            if (p + q == 0)
                act = I2;
            else if (p + q == 1)
                act = X;
            else
                act = Eigen::MatrixXcd::Zero(2, 2);
            for (int m = 0; m < 2; ++m)
                for (int o = 0; o < 2; ++o)
                    if (std::abs(act(o, m)) > 0)
                        base.set({o, p, m, q}, act(o, m));
        }
    Bimodule M;
    M.left = AL;
    M.right = AR;
    M.carrier = Ms;
    M.base = LinearMap{{Ms}, {AL->carrier(), Ms, AR->carrier()}, base};
    M.HA = X - static_cast<double>(n) * I2;
    M.HB = X - std::pow(static_cast<double>(n), 3) * I2;
    M.HM = Eigen::MatrixXcd::Zero(2, 2);
    return {AL, AR, M};
}

double singular_lower_bound(int n, double a, double b)
{
    double enn = std::exp(static_cast<double>(n) * n);
    double s = 1.0 + (a + b) * enn;
    return std::exp(-2 * a * n - 2 * b * std::pow(static_cast<double>(n), 3)) * 0.5 *
           (s * s + 1.0 + enn * enn);
}

SingularEstimate singular_attempted(int n, double a, double b)
{
    if (n < 1 || n > 26)
        throw AqftError("singular_attempted: need 1 <= n <= 26");
    double enn = std::exp(static_cast<double>(n) * n);
    // scaled action: exp((a+b) X) ∘ base ∘ (id ⊗ (1 + (b/2) x)) with the scalar
    // damping e^{-an-bn^3} removed; X = x-multiplication on M_n
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(2, 2);
    X(1, 0) = enn;
    Eigen::MatrixXcd I2 = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd E = I2 + (a + b / 2) * X; // exp((a+b/2) X), X nilpotent
    // attempted map A_L ⊗ M -> M on the basis (p, m), columns ordered p + 2m;
    // p * eta-tail acts by I + (b/2)X for p = 1 and by X for p = x
    Eigen::MatrixXcd T(2, 4);
    for (int p = 0; p < 2; ++p) {
        Eigen::MatrixXcd act = p == 0 ? Eigen::MatrixXcd(I2 + (b / 2) * X) : X;
        for (int m = 0; m < 2; ++m)
            T.col(p + 2 * m) = (E * act).col(m);
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(T);
    double nrm = svd.singularValues()(0);
    double s = 1.0 + (a + b) * enn;
    SingularEstimate out;
    out.scaled_norm2 = nrm * nrm;
    out.scaled_bound = 0.5 * (s * s + 1.0 + enn * enn);
    out.log_damping = -2 * a * n - 2 * b * std::pow(static_cast<double>(n), 3);
    return out;
}

} // namespace aqft
