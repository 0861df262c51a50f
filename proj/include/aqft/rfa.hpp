#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aqft/tensor.hpp"

namespace aqft {

enum class MapKind { Mu, Eta, Delta, Eps, P };

std::string kind_name(MapKind k);

struct SpectralBlock {
    std::string label;
    cplx eps;     // nonzero
    double sigma;
};

struct MatrixBlock {
    std::string label;
    int dim = 1;
    double sigma = 0.0;
};

class Rfa;
using RfaPtr = std::shared_ptr<const Rfa>;

struct CenterResult {
    RfaPtr center;
    LinearMap proj; // A -> Z(A)
    LinearMap inj;  // Z(A) -> A
};

/// A regularised Frobenius algebra on a finite-dimensional complex inner-product
/// space, exposed through its structure-map families at area a > 0.
class Rfa : public std::enable_shared_from_this<Rfa> {
public:
    virtual ~Rfa() = default;

    virtual IndexSpace carrier() const = 0;
    virtual bool zero_area_ok(MapKind k) const = 0;

    /// Structure map at area a; enforces the per-model zero-area policy.
    LinearMap map(MapKind k, double a) const;

    /// Damping-free structure map: the a->0 limit of the truncated model.
    /// Exists for the exponential models (finite, spectral, block); map families
    /// reconstructed from sampled data do not provide it.
    virtual bool has_map0() const { return false; }
    virtual LinearMap map0(MapKind k) const;

    /// n-fold plaquette weight W^n_a = Delta^(n) ∘ eta (n >= 1).
    virtual Tensor plaquette(int n, double a) const;
    virtual Tensor plaquette0(int n) const;

    virtual std::optional<std::vector<SpectralBlock>> spectral_blocks() const { return std::nullopt; }
    virtual std::optional<std::vector<MatrixBlock>> matrix_blocks() const { return std::nullopt; }

    /// Model-aware centre with a canonical basis, when available.
    virtual std::optional<CenterResult> canonical_center() const { return std::nullopt; }

protected:
    virtual LinearMap map_impl(MapKind k, double a) const = 0;
};

RfaPtr make_spectral_rfa(std::vector<SpectralBlock> blocks, std::string truncation_note = "");
RfaPtr make_block_rfa(std::vector<MatrixBlock> blocks);

/// Finite-dimensional RFA from Frobenius structure constants and a central element H,
/// with P_a = exp(a·L_H).
RfaPtr make_finite_rfa(LinearMap mu0, LinearMap eta0, LinearMap delta0, LinearMap eps0,
                       Tensor H, std::string name = "finite");

/// Wraps sampled structure-map families (e.g. maps reconstructed from state-sum data).
RfaPtr make_map_family_rfa(IndexSpace carrier,
                           std::function<LinearMap(MapKind, double)> maps,
                           std::string name = "family");

LinearMap structure_map(const Rfa& A, MapKind k, double a);

struct AxiomReport {
    std::map<std::string, double> defects;
    double tol = 0.0;
    std::vector<std::string> core; // axiom keys that gate ok()
    bool ok() const;
    std::string summary() const;
};

/// Verifies unit/associativity/counit/coassociativity/Frobenius relations and the
/// P_a semigroup over the sampled splittings; records symmetry/commutativity/
/// Hermiticity defects informationally.
AxiomReport check_axioms(const Rfa& A, const std::vector<std::array<double, 2>>& splits,
                         double tol);

/// Morphism check: f∘mu = mu∘(f⊗f), f∘eta = eta, plus the coalgebra halves.
AxiomReport check_morphism(const Rfa& A, const Rfa& B, const LinearMap& f,
                           const std::vector<double>& areas, double tol);

Tensor window_element(const Rfa& A, double a);
std::optional<Tensor> window_inverse(const Rfa& A, double a);
/// Separability idempotent e_a = Delta(window inverse); empty if not strongly separable.
std::optional<Tensor> separability_idempotent(const Rfa& A, double a);
/// Damping-free separability idempotent (exponential models only).
std::optional<Tensor> separability_idempotent0(const Rfa& A);

bool is_hermitian(const Rfa& A, double a, double tol);

/// Centre via the idempotent D_a = zeta∘mu∘swap∘Delta extrapolated to a=0.
CenterResult center(const Rfa& A, double tol);

struct DaggerComponent {
    RfaPtr block;   // finite RFA on the eigenspace
    double sigma;   // P_a eigenvalue e^{-a sigma}
    LinearMap inj;  // eigenspace -> A
    LinearMap proj; // A -> eigenspace
};

/// Decomposes a Hermitian RFA along the eigenspaces of self-adjoint P_a.
std::vector<DaggerComponent> dagger_decompose(const Rfa& A, double a, double tol);

RfaPtr tensor_rfa(const Rfa& A, const Rfa& B);

struct ConvergenceReport {
    struct Row {
        std::size_t cutoff;
        double sup_term;  // sup_k e^{-a sigma_k} |eps_k|^{-1}
        double sum_term;  // sum_k e^{-2 a sigma_k} |eps_k|^2
        double tail_estimate;
    };
    std::vector<Row> rows;
    bool divergent = false;
    std::string note;
};

ConvergenceReport spectral_convergence_report(
    const std::function<std::pair<cplx, double>(std::size_t)>& family, double a,
    const std::vector<std::size_t>& cutoffs);

// internal helpers shared with the state-sum module
LinearMap rfa_zeta(const Rfa& A, double a);
LinearMap rfa_zeta0(const Rfa& A);
LinearMap rfa_D(const Rfa& A, double a);
LinearMap rfa_D0(const Rfa& A);
LinearMap nfold_delta(const Rfa& A, int n, double a); // Delta^(n): A -> A^{⊗n}, n >= 0
/// The central generator h with P_a = exp(a mu0(h ⊗ -)); exponential models only.
Tensor rfa_h_element(const Rfa& A);

} // namespace aqft
