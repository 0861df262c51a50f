#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aqft/rfa.hpp"

namespace aqft {

struct Irrep {
    std::string label;
    int dim = 1;
    double sigma = 0.0;
};

/// Irrep table of a compact or finite group, with fusion, duality and
/// automorphism data. Rule closures may extend beyond the tabulated window
/// (e.g. Clebsch-Gordan series for su2), so that bimodule generators can be
/// assembled without truncation leakage.
struct GroupData {
    std::string name;
    std::vector<Irrep> irreps; // the truncated table, closed under dual

    std::function<int(const std::string&, const std::string&, const std::string&)> fusion;
    std::function<std::string(const std::string&)> dual;
    std::map<std::string, std::function<std::string(const std::string&)>> automorphisms;

    /// Unitary Clebsch-Gordan coefficient <U i; V p | W q> for multiplicity-free
    /// fusion; absent for groups without tabulated intertwiners.
    std::function<double(const std::string&, int, const std::string&, int, const std::string&, int)> cg;

    /// k-th irrep in the canonical enumeration (may range beyond the table);
    /// used by streaming amplitude sweeps.
    std::function<std::optional<Irrep>(std::size_t)> enumerate;

    int index_of(const std::string& label) const;
    const Irrep& irrep(const std::string& label) const;
    bool in_table(const std::string& label) const;
    std::string trivial_label() const { return trivial; }
    std::string trivial = "1";

    /// Structural invariants: N symmetry, unit fusion, dual involution,
    /// sigma-dual equality, dimension sum rule where fusion stays in the table.
    void validate() const;
};

/// Built-in tables: "su2", "u1", "cyclic:<n>", "s3".
/// `trunc` bounds the table: su2 keeps dims 1..trunc, u1 charges |k| <= trunc,
/// finite groups ignore it. Optional sigma overrides replace the default
/// Casimir normalization per label.
GroupData builtin_group(const std::string& spec, int trunc,
                        const std::map<std::string, double>& sigma_override = {});

/// L^2(G) truncated to the table: one matrix block per irrep.
RfaPtr block_rfa(const GroupData& g);

/// Group-automorphism action on the block carrier for label-permuting
/// automorphisms with trivial intertwiners (all 1-dim blocks, or identity).
LinearMap automorphism_map(const GroupData& g, const RfaPtr& A, const std::string& aut);

} // namespace aqft
