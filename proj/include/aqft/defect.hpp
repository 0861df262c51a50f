#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "aqft/bimodule.hpp"
#include "aqft/bordism.hpp"
#include "aqft/statesum.hpp"

namespace aqft {

struct DefectLabelData {
    DualPair pair;        // pair.U = X (A_t-A_s), pair.V = Xbar
    std::string phase_t = "*";
    std::string phase_s = "*";
};

/// A defect point on a boundary circle: the label and whether the boundary
/// factor is X (+1) or Xbar (-1).
struct DefectPoint {
    std::string label;
    int sign = +1;
};

/// State-sum data with defects: per-phase plaquette data plus dual-pair data
/// per defect label, with cached splittings of the boundary idempotents E_0.
class DefectStateSumData {
public:
    DefectStateSumData(std::map<std::string, StateSumData> phases,
                       std::map<std::string, DefectLabelData> labels);

    const StateSumData& phase(const std::string& p) const;
    const DefectLabelData& label(const std::string& l) const;

    /// Plaquette weight of a defect-crossed face:
    /// I -> Xbar ⊗ A_t^{nt} ⊗ X ⊗ A_s^{ns}.
    Tensor Wx(const std::string& label, int nt, int ns, double a_left, double length,
              double a_right) const;

    /// Pairing X ⊗ Xbar -> I at the crossed-edge parameters.
    LinearMap betax(const std::string& label, double a_left, double length, double a_right) const;

    /// Vertex weight on a defect leg (sign +1 acts on X, -1 on Xbar).
    LinearMap zetax(const std::string& label, int sign, double a_left, double length,
                    double a_right) const;

    /// Cylinder transfer operator over a defect list at uniform parameter s
    /// (s = 0 gives the exact idempotent E_0 of the truncated model).
    LinearMap E(const std::vector<DefectPoint>& list, double s) const;

    struct BoundarySpace {
        IndexSpace space;
        LinearMap proj, inj;
        int rank = 0;
    };
    const BoundarySpace& boundary_space(const std::vector<DefectPoint>& list) const;

private:
    std::map<std::string, StateSumData> phases_;
    std::map<std::string, DefectLabelData> labels_;
    mutable std::map<std::string, BoundarySpace> cache_;
};

/// Defect data from bimodule dual pairs over a single phase.
DefectStateSumData defect_data(StateSumData phase,
                               std::map<std::string, DualPair> pairs);

LinearMap evaluate_defect(const PlcwComplex& c, const DefectStateSumData& d);

/// Defect-condition checks: defect gluing, mixed gluing, zeta transport,
/// E-limit Cauchy behavior and Q_{0,0,0} = id.
ConditionReport check_defect_conditions(const DefectStateSumData& d, const std::string& label,
                                        const std::vector<double>& params, double tol);

} // namespace aqft
