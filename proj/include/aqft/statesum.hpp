#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aqft/bordism.hpp"
#include "aqft/rfa.hpp"

namespace aqft {

/// State-sum data (carrier, zeta_a, beta_a, plaquette weights W^n_a) built from
/// a strongly separable symmetric RFA, with the cached splitting of D_0.
/// Boundary circles of the state-sum QFT carry the image of D_0; for block
/// models the splitting uses the canonical character basis.
class StateSumData {
public:
    explicit StateSumData(RfaPtr A);

    const RfaPtr& rfa() const { return A_; }
    IndexSpace carrier() const { return A_->carrier(); }
    IndexSpace zspace() const { return zspace_; }
    int center_rank() const { return zspace_.dim; }
    const LinearMap& proj() const { return proj_; }
    const LinearMap& inj() const { return inj_; }

    LinearMap zeta(double a) const;
    LinearMap beta(double a) const;  // pairing A⊗A -> I
    Tensor W(int n, double a) const; // n-leg plaquette weight
    LinearMap P(double a) const;
    LinearMap D(double a) const;

    bool has_zero_damping() const { return A_->has_map0(); }
    LinearMap zeta0() const;
    LinearMap beta0() const;
    Tensor W0(int n) const;

private:
    RfaPtr A_;
    IndexSpace zspace_;
    LinearMap proj_, inj_;
};

/// Omega(A): throws when the window element is not invertible.
StateSumData data_from_rfa(RfaPtr A);

/// kappa: reconstructs the RFA structure maps from state-sum data.
RfaPtr rfa_from_data(const StateSumData& d);

/// Interface used by the condition checker, so perturbed data can be probed.
struct DataView {
    IndexSpace carrier;
    std::function<LinearMap(double)> zeta;
    std::function<LinearMap(double)> beta;
    std::function<Tensor(int, double)> W;
};
DataView view(const StateSumData& d);

struct ConditionReport {
    std::map<std::string, double> defects;
    double tol = 0.0;
    bool ok() const;
    std::string summary() const;
};

/// Checks cyclic symmetry, plaquette gluing, bubble removal, zeta transport,
/// the P/D semigroup laws and the D-limit Cauchy behavior at the given areas.
ConditionReport check_conditions(const DataView& d, const std::vector<double>& areas, double tol);

/// Hermitian-data check: zeta self-adjoint and beta adjoint to W^2.
ConditionReport check_hermitian_data(const DataView& d, const std::vector<double>& areas,
                                     double tol);

/// The literal state-sum evaluation of a defect-free PLCW complex.
LinearMap evaluate(const PlcwComplex& c, const StateSumData& d);

/// Closed-form normal-form amplitude (pi^b ∘ Delta^(b) ∘ phi^g ∘ zeta^(1-b) ∘ eta
/// with ingoing legs closed by in-in cylinders). Zero area is admitted when
/// g + (b_in+b_out)/2 >= 2; the truncated-model limit is evaluated exactly.
LinearMap closed_form(const StateSumData& d, int genus, int b_in, int b_out, double area);

/// closed_form applied to centre vectors on the ingoing legs.
Tensor closed_form_apply(const StateSumData& d, int genus, int b_in, int b_out, double area,
                         const std::vector<Tensor>& inputs);

} // namespace aqft
