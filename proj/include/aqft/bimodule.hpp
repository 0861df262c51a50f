#pragma once

#include <functional>
#include <tuple>

#include <Eigen/Dense>

#include "aqft/group.hpp"
#include "aqft/rfa.hpp"

namespace aqft {

/// A finite-dimensional bimodule over regularised algebras, presented by its
/// zero-parameter action and three commuting generators, so that
/// rho_{a,l,b} = exp(a H_A + l H_M + b H_B) ∘ base.
struct Bimodule {
    RfaPtr left, right;
    IndexSpace carrier;
    LinearMap base; // left ⊗ M ⊗ right -> M
    Eigen::MatrixXcd HA, HM, HB;

    LinearMap Q(double a, double l, double b) const;
    LinearMap action(double a, double l, double b) const;
};

/// Dual pair (U, V) with pairing beta: U⊗V -> I and copairing gamma: I -> V⊗U.
struct DualPair {
    Bimodule U, V;
    std::function<LinearMap(double, double, double)> beta;
    std::function<LinearMap(double, double, double)> gamma;
};

/// Generator of the one-parameter semigroup P_a = e^{a L}; exponential models only.
Eigen::MatrixXcd generator_matrix(const Rfa& A);

LinearMap action(const Bimodule& M, double a, double l, double b);

struct BimoduleReport {
    std::map<std::string, double> defects;
    double tol = 0.0;
    bool ok() const;
};

/// Generator commutation, action associativity and Q_{0,0,0} = id.
BimoduleReport check_bimodule(const Bimodule& M, const std::vector<double>& params, double tol);

/// Zig-zag identities and action compatibility of a dual pair.
BimoduleReport check_dual_pair(const DualPair& p, const std::vector<double>& params, double tol);

bool is_transmissive(const Bimodule& M, double tol);

struct TensorProductResult {
    Bimodule product;
    LinearMap proj; // M⊗N -> M⊗_A N
    LinearMap inj;
};

/// Tensor product over the shared middle algebra via the splitting of D_0.
TensorProductResult tensor_product(const Bimodule& M, const Bimodule& N, double tol);

struct CyclicResult {
    IndexSpace space;
    LinearMap proj;
    LinearMap inj;
};

/// Cyclic tensor product of an A-A-bimodule (image of D_0 with wrapped legs).
CyclicResult cyclic_tensor(const Bimodule& M, double tol);

/// The transfer idempotent family D^{M,N} itself (exposed for cross-checks).
LinearMap bimodule_D(const Bimodule& M, const Bimodule& N, double a);
LinearMap bimodule_D0(const Bimodule& M, const Bimodule& N);
LinearMap cyclic_D(const Bimodule& M, double a);
LinearMap cyclic_D0(const Bimodule& M);

/// Twisted bimodule _alpha A_id; alpha must pass the RFA-automorphism check.
Bimodule twisted(RfaPtr A, const LinearMap& alpha);
DualPair twisted_pair(RfaPtr A, const LinearMap& alpha);

/// Wilson bimodule V ⊗ L^2(G) over the truncated block model.
Bimodule wilson(const GroupData& g, const std::string& V, RfaPtr A);
DualPair wilson_pair(const GroupData& g, const std::string& V, RfaPtr A);

/// The Appendix-style bimodule with singular limits at index n (n <= 26);
/// returns (A_L, A_R, M_n).
std::tuple<RfaPtr, RfaPtr, Bimodule> singular_example(int n);

/// Lower bound for the squared norm of rho_{a,b} ∘ (id ⊗ eta_b) at index n.
double singular_lower_bound(int n, double a, double b);

/// Squared norm of the attempted left action rho_{a,b1} ∘ (id ⊗ eta_{b2}) and
/// its lower bound, both scaled by e^{+2an+2bn^3} so that large n stays
/// representable (the common damping cancels in the comparison).
struct SingularEstimate {
    double scaled_norm2 = 0.0;
    double scaled_bound = 0.0;
    double log_damping = 0.0; // log of the removed factor e^{-2an-2bn^3}
};
SingularEstimate singular_attempted(int n, double a, double b);

} // namespace aqft
