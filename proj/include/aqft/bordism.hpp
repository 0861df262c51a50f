#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aqft/common.hpp"

namespace aqft {

/// Defect conditions: phase labels, defect-line labels and their source/target phases.
struct DefectConditions {
    std::set<std::string> phases{"*"};
    std::map<std::string, std::pair<std::string, std::string>> lines; // label -> (t, s)
};

struct EdgeDefect {
    int line = -1;
    Rat area_left{0}, length{0}, area_right{0};
};

struct PlcwEdge {
    int v0 = -1, v1 = -1;
    Rat area{0};
    std::optional<EdgeDefect> defect;
};

struct PlcwSide {
    int edge = -1;
    bool along = true; // face traversal agrees with the edge orientation
};

struct FaceDefect {
    int line = -1;
    int enter_side = -1; // the line leaves through side 0 (the marked side)
    Rat area_left{0}, length{0}, area_right{0};
};

struct PlcwFace {
    std::vector<PlcwSide> sides; // side 0 is the marked edge
    Rat area{0};
    std::optional<FaceDefect> defect;
    std::string phase = "*";
};

struct PlcwVertex {
    Rat area{0};
};

struct BoundaryCircle {
    std::vector<int> edges; // cyclic order from the basepoint
    bool outgoing = false;
};

struct DefectLineInfo {
    std::string label;
};

/// A PLCW decomposition with area of a bordism, optionally decorated with
/// defect lines. Cells are stored once (already glued); boundary circles carry
/// a basepoint through the order of their edge lists. Cells on outgoing
/// boundary circles are weightless and carry zero area.
struct PlcwComplex {
    std::vector<PlcwVertex> vertices;
    std::vector<PlcwEdge> edges;
    std::vector<PlcwFace> faces;
    std::vector<BoundaryCircle> boundary;
    std::vector<DefectLineInfo> lines;

    int euler_characteristic() const;
    bool edge_on_boundary(int e) const;
    std::optional<int> circle_of_edge(int e) const;
    /// face sides incident to edge e as (face, side) pairs
    std::vector<std::pair<int, int>> sides_at_edge(int e) const;

    /// connected components over faces/edges/vertices; returns component ids
    int components(std::vector<int>& vcomp, std::vector<int>& ecomp, std::vector<int>& fcomp) const;
    Rat component_area(int comp, const std::vector<int>& vcomp, const std::vector<int>& ecomp,
                       const std::vector<int>& fcomp) const;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

ValidationReport validate(const PlcwComplex& c, const DefectConditions* dc = nullptr);

enum class MoveKind {
    AddEdge,
    RemoveEdge,
    AddBivalentVertex,
    RemoveBivalentVertex,
    DefectSplitEdge,
    DefectRemoveEdge,
    DefectRemovePlainEdge,
};

struct ElementaryMove {
    MoveKind kind;
    int face = -1;      // AddEdge
    int corner_i = -1;  // AddEdge: chord between corners i and j of the face
    int corner_j = -1;
    int edge = -1;      // edge-targeted moves
    int vertex = -1;    // RemoveBivalentVertex
};

/// Applies an elementary move; preserves component areas, defect-line lengths
/// and the Euler characteristic. Throws naming the failed precondition.
PlcwComplex apply_move(const PlcwComplex& c, const ElementaryMove& m);

/// All applicable moves of the basic kinds (bounded enumeration for fuzzing).
std::vector<ElementaryMove> applicable_moves(const PlcwComplex& c);

/// Canonical decomposition of Sigma_{g,b}: a single (4g+3b)-gon for b >= 1,
/// a 4g-gon for closed surfaces of genus g >= 1, and a two-1-gon sphere.
/// The area is distributed evenly over the weighted cells.
PlcwComplex normal_form(int genus, int b_in, int b_out, Rat area);

PlcwComplex disjoint_union(const PlcwComplex& a, const PlcwComplex& b);

/// Glues out-circles of x to in-circles of y (pairs of circle indices).
/// Matched circles must carry identical defect-point sequences.
PlcwComplex glue(const PlcwComplex& x, const PlcwComplex& y,
                 const std::vector<std::pair<int, int>>& matching);

// -- defect-decorated builders used by the Yang-Mills example ---------------

/// In-in cylinder with n defect loops parallel to the boundary; areas[i] is the
/// band area between loop i-1 and loop i (areas has n+1 entries).
PlcwComplex defect_cylinder_loops(const std::vector<std::string>& labels,
                                  const std::vector<Rat>& areas, Rat length);

/// In-out cylinder crossed by one defect line running from the in to the out circle.
PlcwComplex defect_cylinder_through(const std::string& label, Rat area_left, Rat area_right,
                                    Rat length);

/// Torus with one non-contractible defect loop.
PlcwComplex torus_with_loop(const std::string& label, Rat area_left, Rat area_right, Rat length);

/// Sphere with one contractible defect loop; area inside / outside the loop.
PlcwComplex sphere_with_loop(const std::string& label, Rat area_inside, Rat area_outside,
                             Rat length);

} // namespace aqft
