#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aqft/group.hpp"
#include "aqft/tensor.hpp"

namespace aqft {

struct Amplitude {
    Tensor value;      // rank b_out tensor over characters (rank 0 for closed surfaces)
    double tail_bound; // operator-norm estimate of the discarded truncation tail
};

/// Closed-form amplitude of Sigma_{g, b_in -> b_out} at area a over the
/// truncated table: sum_V e^{-a sigma_V} dim(V)^chi chi_V^{b_out} for b_in = 0,
/// the delta-matched single term for b_in >= 1 (exact 0 on mismatched inputs).
/// Zero area requires g + (b_in+b_out)/2 >= 2.
Amplitude amplitude(const GroupData& g, int genus, int b_in, int b_out, double a,
                    const std::vector<std::string>& in_labels = {});

/// Wilson cylinder with both boundaries ingoing:
/// (chi_U, chi_W) -> e^{-a sigma_U - b sigma_W} N_{U,V}^W.
LinearMap wilson_cylinder(const GroupData& g, const std::string& V, double a, double b);

struct WilsonComponent {
    int chi = 0; // Euler characteristic of the complement component
    double area = 0.0;
};

struct WilsonLoop {
    std::string V;
    int left = 0, right = 0; // component indices
};

struct WilsonSurface {
    std::vector<WilsonComponent> components;
    std::vector<WilsonLoop> loops;
};

/// Closed-surface Wilson-loop expectation value:
/// prod_rho sum_{U_rho} e^{-a_rho sigma} dim^{chi(rho)} prod_x N_{U_L, V_x}^{U_R}.
cplx wilson_closed(const GroupData& g, const WilsonSurface& s);

/// Same configuration with twist defects labeled by automorphisms:
/// the fusion factor becomes delta_{alpha_x(U_L), U_R}.
cplx twist_closed(const GroupData& g, const std::vector<std::string>& auts,
                  const WilsonSurface& s);

/// Torus with one non-contractible twist defect: sum over alpha-fixed irreps.
cplx twist_torus(const GroupData& g, const std::string& aut, double area);

/// Partial sums of sum_V dim(V)^{-s} with a Richardson-style tail estimate.
/// Requires s >= 2 (the paper's integer convergence criterion) and a group
/// with infinitely many irreps of growing dimension (su2); finite tables sum
/// exactly.
std::pair<double, double> witten_zeta(const GroupData& g, double s, std::size_t trunc);

/// Deviation table of the two-parallel-loop amplitude from the fused single
/// loop: max entrywise deviation per intermediate area.
std::vector<double> fusion_deviation(const GroupData& g, const std::string& V,
                                     const std::string& W, double a, double b,
                                     const std::vector<double>& mid_areas);

} // namespace aqft
