#pragma once

#include <optional>
#include <string>

#include "aqft/bordism.hpp"
#include "aqft/group.hpp"

namespace aqft {

/// A parsed bordism document: the complex plus the group/truncation context.
struct BordismDoc {
    PlcwComplex complex;
    std::optional<std::string> group;
    int trunc = 4;
    std::map<std::string, double> sigma_override;
};

/// Parses the structured bordism document format:
///   { "group": "su2", "trunc": 4,
///     "surface": {"genus": 1, "in": 0, "out": 0, "area": 2.0},
///     "defects": [ {"label": "wilson:2", "length": 1.0,
///                   "area_left": 0.5, "area_right": 0.5,
///                   "kind": "noncontractible" | "contractible" | "through"} ] }
/// or an explicit cell list under "plcw":
///   { "plcw": { "vertices": k or [{"area": ...}],
///               "edges": [{"from": i, "to": j, "area": ...}],
///               "faces": [{"sides": [{"edge": e, "dir": 1|-1}], "area": ...}],
///               "boundary": [{"edges": [e...], "out": bool}] } }
/// Throws AqftError with field diagnostics on schema violations.
BordismDoc parse_bordism(const std::string& text);

/// Custom group table from JSON: irreps with dim/sigma, fusion entries,
/// dual map and automorphism label maps.
GroupData parse_group_table(const std::string& text);

/// Exact rational from a JSON number (decimal strings stay exact).
Rat rat_of(double x);

} // namespace aqft
