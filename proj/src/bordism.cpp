#include "aqft/bordism.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace aqft {

namespace {

struct DisjointSet {
    std::vector<int> p;
    explicit DisjointSet(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
    int find(int x)
    {
        while (p[x] != x)
            x = p[x] = p[p[x]];
        return x;
    }
    void unite(int a, int b) { p[find(a)] = find(b); }
};

} // namespace

int PlcwComplex::euler_characteristic() const
{
    return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) +
           static_cast<int>(faces.size());
}

bool PlcwComplex::edge_on_boundary(int e) const
{
    return circle_of_edge(e).has_value();
}

std::optional<int> PlcwComplex::circle_of_edge(int e) const
{
    for (std::size_t c = 0; c < boundary.size(); ++c)
        for (int be : boundary[c].edges)
            if (be == e)
                return static_cast<int>(c);
    return std::nullopt;
}

std::vector<std::pair<int, int>> PlcwComplex::sides_at_edge(int e) const
{
    std::vector<std::pair<int, int>> out;
    for (std::size_t f = 0; f < faces.size(); ++f)
        for (std::size_t k = 0; k < faces[f].sides.size(); ++k)
            if (faces[f].sides[k].edge == e)
                out.push_back({static_cast<int>(f), static_cast<int>(k)});
    return out;
}

int PlcwComplex::components(std::vector<int>& vcomp, std::vector<int>& ecomp,
                            std::vector<int>& fcomp) const
{
    DisjointSet ds(static_cast<int>(vertices.size()));
    for (const auto& e : edges)
        ds.unite(e.v0, e.v1);
    for (const auto& f : faces)
        for (std::size_t k = 1; k < f.sides.size(); ++k)
            ds.unite(edges[f.sides[0].edge].v0, edges[f.sides[k].edge].v0);
    std::map<int, int> remap;
    vcomp.assign(vertices.size(), -1);
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        int r = ds.find(static_cast<int>(v));
        if (!remap.count(r))
            remap[r] = static_cast<int>(remap.size());
        vcomp[v] = remap[r];
    }
    ecomp.assign(edges.size(), -1);
    for (std::size_t e = 0; e < edges.size(); ++e)
        ecomp[e] = vcomp[edges[e].v0];
    fcomp.assign(faces.size(), -1);
    for (std::size_t f = 0; f < faces.size(); ++f)
        fcomp[f] = faces[f].sides.empty() ? 0 : ecomp[faces[f].sides[0].edge];
    return static_cast<int>(remap.size());
}

Rat PlcwComplex::component_area(int comp, const std::vector<int>& vcomp,
                                const std::vector<int>& ecomp,
                                const std::vector<int>& fcomp) const
{
    Rat total{0};
    for (std::size_t v = 0; v < vertices.size(); ++v)
        if (vcomp[v] == comp)
            total += vertices[v].area;
    for (std::size_t e = 0; e < edges.size(); ++e)
        if (ecomp[e] == comp) {
            total += edges[e].area;
            if (edges[e].defect)
                total += edges[e].defect->area_left + edges[e].defect->area_right;
        }
    for (std::size_t f = 0; f < faces.size(); ++f)
        if (fcomp[f] == comp) {
            total += faces[f].area;
            if (faces[f].defect)
                total += faces[f].defect->area_left + faces[f].defect->area_right;
        }
    return total;
}

std::string ValidationReport::summary() const
{
    if (ok())
        return "ok";
    std::ostringstream os;
    os << violations.size() << " violation(s):";
    for (const auto& v : violations)
        os << "\n  " << v;
    return os.str();
}

namespace {

std::vector<bool> outgoing_edge_flags(const PlcwComplex& c)
{
    std::vector<bool> out(c.edges.size(), false);
    for (const auto& b : c.boundary)
        if (b.outgoing)
            for (int e : b.edges)
                out[e] = true;
    return out;
}

std::vector<bool> outgoing_vertex_flags(const PlcwComplex& c)
{
    std::vector<bool> out(c.vertices.size(), false);
    auto eflags = outgoing_edge_flags(c);
    for (std::size_t e = 0; e < c.edges.size(); ++e)
        if (eflags[e]) {
            out[c.edges[e].v0] = true;
            out[c.edges[e].v1] = true;
        }
    return out;
}

} // namespace

ValidationReport validate(const PlcwComplex& c, const DefectConditions* dc)
{
    ValidationReport rep;
    auto bad = [&](const std::string& s) { rep.violations.push_back(s); };

    int nv = static_cast<int>(c.vertices.size());
    int ne = static_cast<int>(c.edges.size());
    int nf = static_cast<int>(c.faces.size());
    for (int e = 0; e < ne; ++e)
        if (c.edges[e].v0 < 0 || c.edges[e].v0 >= nv || c.edges[e].v1 < 0 || c.edges[e].v1 >= nv)
            bad("edge " + std::to_string(e) + " has invalid endpoints");
    if (!rep.ok())
        return rep;

    // boundary bookkeeping
    std::vector<int> circle_of(ne, -1);
    for (std::size_t ci = 0; ci < c.boundary.size(); ++ci) {
        const auto& circ = c.boundary[ci];
        if (circ.edges.empty())
            bad("boundary circle " + std::to_string(ci) + " is empty");
        for (int e : circ.edges) {
            if (e < 0 || e >= ne) {
                bad("boundary circle references invalid edge");
                continue;
            }
            if (circle_of[e] != -1)
                bad("edge " + std::to_string(e) + " lies on two boundary circles");
            circle_of[e] = static_cast<int>(ci);
        }
        bool crossed = false;
        for (int e : circ.edges)
            if (e >= 0 && e < ne && c.edges[e].defect)
                crossed = true;
        if (crossed) {
            for (int e : circ.edges)
                if (e >= 0 && e < ne && !c.edges[e].defect)
                    bad("boundary edge " + std::to_string(e) +
                        " on a defect circle carries no defect point");
        } else if (circ.edges.size() != 1) {
            bad("plain boundary circle " + std::to_string(ci) + " must have exactly one edge");
        }
    }

    // side counts and orientation consistency
    for (int e = 0; e < ne; ++e) {
        auto sides = c.sides_at_edge(e);
        bool on_b = circle_of[e] != -1;
        if (on_b && sides.size() != 1)
            bad("boundary edge " + std::to_string(e) + " has " + std::to_string(sides.size()) +
                " face sides");
        if (!on_b && sides.size() != 2)
            bad("interior edge " + std::to_string(e) + " has " + std::to_string(sides.size()) +
                " face sides");
        if (sides.size() == 2) {
            bool a0 = c.faces[sides[0].first].sides[sides[0].second].along;
            bool a1 = c.faces[sides[1].first].sides[sides[1].second].along;
            if (a0 == a1)
                bad("edge " + std::to_string(e) + " traversed twice in the same direction");
        }
    }

    // faces
    int nl = static_cast<int>(c.lines.size());
    for (int f = 0; f < nf; ++f) {
        const auto& F = c.faces[f];
        if (F.sides.empty()) {
            bad("face " + std::to_string(f) + " has no sides");
            continue;
        }
        for (const auto& s : F.sides)
            if (s.edge < 0 || s.edge >= ne)
                bad("face " + std::to_string(f) + " references invalid edge");
        // traversal continuity
        for (std::size_t k = 0; k < F.sides.size(); ++k) {
            const auto& s = F.sides[k];
            const auto& t = F.sides[(k + 1) % F.sides.size()];
            if (s.edge < 0 || t.edge < 0)
                continue;
            int endv = s.along ? c.edges[s.edge].v1 : c.edges[s.edge].v0;
            int startv = t.along ? c.edges[t.edge].v0 : c.edges[t.edge].v1;
            if (endv != startv)
                bad("face " + std::to_string(f) + " is not a closed boundary word at side " +
                    std::to_string(k));
        }
        if (F.defect) {
            if (F.defect->line < 0 || F.defect->line >= nl)
                bad("face " + std::to_string(f) + " crossed by unknown line");
            int es = F.defect->enter_side;
            if (es <= 0 || es >= static_cast<int>(F.sides.size()))
                bad("face " + std::to_string(f) +
                    " defect must enter and leave through distinct edges (vertex crossing?)");
            else {
                int le = F.sides[0].edge, ee = F.sides[es].edge;
                if (!c.edges[le].defect || c.edges[le].defect->line != F.defect->line)
                    bad("face " + std::to_string(f) + " leaves through an uncrossed edge");
                if (!c.edges[ee].defect || c.edges[ee].defect->line != F.defect->line)
                    bad("face " + std::to_string(f) + " enters through an uncrossed edge");
            }
        }
    }

    // line continuity: each crossed interior edge joins a leaving and an entering face
    for (int e = 0; e < ne; ++e) {
        if (!c.edges[e].defect)
            continue;
        if (c.edges[e].defect->line < 0 || c.edges[e].defect->line >= nl) {
            bad("edge " + std::to_string(e) + " crossed by unknown line");
            continue;
        }
        int leaving = 0, entering = 0;
        for (auto [f, k] : c.sides_at_edge(e)) {
            const auto& F = c.faces[f];
            if (!F.defect || F.defect->line != c.edges[e].defect->line) {
                bad("edge " + std::to_string(e) + " crossed but adjacent face " +
                    std::to_string(f) + " is not crossed by the same line");
                continue;
            }
            if (k == 0)
                ++leaving;
            else if (k == F.defect->enter_side)
                ++entering;
            else
                bad("edge " + std::to_string(e) + " crossed away from the defect path of face " +
                    std::to_string(f));
        }
        bool on_b = circle_of[e] != -1;
        if (!on_b && (leaving != 1 || entering != 1))
            bad("interior crossed edge " + std::to_string(e) + " must join one leaving and one entering face");
        if (on_b && leaving + entering != 1)
            bad("boundary crossed edge " + std::to_string(e) + " must touch exactly one crossed face");
    }

    // area positivity / outgoing weightlessness / zero-area components
    auto out_e = outgoing_edge_flags(c);
    auto out_v = outgoing_vertex_flags(c);
    std::vector<int> vcomp, ecomp, fcomp;
    int ncomp = c.components(vcomp, ecomp, fcomp);
    std::vector<char> comp_zero(ncomp, 1);
    for (int comp = 0; comp < ncomp; ++comp)
        comp_zero[comp] = (c.component_area(comp, vcomp, ecomp, fcomp) == Rat{0});
    auto check_pos = [&](const Rat& r, int comp, const std::string& what) {
        if (r < Rat{0})
            bad(what + " has negative area");
        if (r == Rat{0} && !comp_zero[comp])
            bad(what + " has zero area on a positive-area component");
    };
    for (int f = 0; f < nf; ++f) {
        int comp = fcomp[f];
        if (c.faces[f].defect) {
            check_pos(c.faces[f].defect->area_left, comp, "face " + std::to_string(f));
            check_pos(c.faces[f].defect->area_right, comp, "face " + std::to_string(f));
        } else {
            check_pos(c.faces[f].area, comp, "face " + std::to_string(f));
        }
    }
    for (int e = 0; e < ne; ++e) {
        if (out_e[e]) {
            Rat tot = c.edges[e].area;
            if (c.edges[e].defect)
                tot += c.edges[e].defect->area_left + c.edges[e].defect->area_right +
                       c.edges[e].defect->length;
            if (tot != Rat{0})
                bad("outgoing boundary edge " + std::to_string(e) + " must be weightless");
            continue;
        }
        int comp = ecomp[e];
        if (c.edges[e].defect) {
            check_pos(c.edges[e].defect->area_left, comp, "edge " + std::to_string(e));
            check_pos(c.edges[e].defect->area_right, comp, "edge " + std::to_string(e));
        } else {
            check_pos(c.edges[e].area, comp, "edge " + std::to_string(e));
        }
    }
    for (int v = 0; v < nv; ++v) {
        if (out_v[v]) {
            if (c.vertices[v].area != Rat{0})
                bad("outgoing boundary vertex " + std::to_string(v) + " must be weightless");
            continue;
        }
        check_pos(c.vertices[v].area, vcomp[v], "vertex " + std::to_string(v));
    }

    // zero-area components must be in-out cylinders
    for (int comp = 0; comp < ncomp; ++comp) {
        if (!comp_zero[comp])
            continue;
        int chi = 0, nin = 0, nout = 0;
        for (int v = 0; v < nv; ++v)
            if (vcomp[v] == comp)
                ++chi;
        for (int e = 0; e < ne; ++e)
            if (ecomp[e] == comp)
                --chi;
        for (int f = 0; f < nf; ++f)
            if (fcomp[f] == comp)
                ++chi;
        for (const auto& circ : c.boundary) {
            if (circ.edges.empty())
                continue;
            if (ecomp[circ.edges[0]] == comp)
                (circ.outgoing ? nout : nin) += 1;
        }
        if (chi != 0 || nin != 1 || nout != 1)
            bad("zero area component " + std::to_string(comp) +
                " is not an in-out cylinder (only allowed there)");
    }

    // phase compatibility of defect labels
    if (dc) {
        for (int f = 0; f < nf; ++f) {
            const auto& F = c.faces[f];
            if (F.defect)
                continue;
            if (!dc->phases.count(F.phase))
                bad("face " + std::to_string(f) + " carries unknown phase '" + F.phase + "'");
        }
        for (const auto& ln : c.lines)
            if (!dc->lines.count(ln.label))
                bad("unknown defect label '" + ln.label + "'");
    }

    return rep;
}

// ---------------------------------------------------------------------------
// moves

namespace {

void rotate_plain_face(PlcwFace& f)
{
    if (f.defect || f.sides.empty())
        return;
    std::size_t best = 0;
    for (std::size_t k = 1; k < f.sides.size(); ++k) {
        const auto& a = f.sides[k];
        const auto& b = f.sides[best];
        if (a.edge < b.edge || (a.edge == b.edge && a.along && !b.along))
            best = k;
    }
    std::rotate(f.sides.begin(), f.sides.begin() + best, f.sides.end());
}

/// drops unreferenced cells and remaps ids
PlcwComplex compact(PlcwComplex c, const std::vector<bool>& drop_v,
                    const std::vector<bool>& drop_e, const std::vector<bool>& drop_f)
{
    std::vector<int> vmap(c.vertices.size(), -1), emap(c.edges.size(), -1),
        fmap(c.faces.size(), -1);
    PlcwComplex out;
    out.lines = c.lines;
    for (std::size_t v = 0; v < c.vertices.size(); ++v)
        if (!drop_v[v]) {
            vmap[v] = static_cast<int>(out.vertices.size());
            out.vertices.push_back(c.vertices[v]);
        }
    for (std::size_t e = 0; e < c.edges.size(); ++e)
        if (!drop_e[e]) {
            emap[e] = static_cast<int>(out.edges.size());
            auto rec = c.edges[e];
            rec.v0 = vmap[rec.v0];
            rec.v1 = vmap[rec.v1];
            out.edges.push_back(rec);
        }
    for (std::size_t f = 0; f < c.faces.size(); ++f)
        if (!drop_f[f]) {
            fmap[f] = static_cast<int>(out.faces.size());
            auto rec = c.faces[f];
            for (auto& s : rec.sides)
                s.edge = emap[s.edge];
            out.faces.push_back(rec);
        }
    for (const auto& circ : c.boundary) {
        BoundaryCircle nb;
        nb.outgoing = circ.outgoing;
        for (int e : circ.edges)
            if (emap[e] != -1)
                nb.edges.push_back(emap[e]);
        out.boundary.push_back(nb);
    }
    return out;
}

} // namespace

PlcwComplex apply_move(const PlcwComplex& c, const ElementaryMove& m)
{
    PlcwComplex out = c;
    auto fail = [&](const std::string& why) -> PlcwComplex& {
        throw AqftError("move not applicable: " + why);
    };

    switch (m.kind) {
    case MoveKind::AddEdge: {
        if (m.face < 0 || m.face >= static_cast<int>(out.faces.size()))
            fail("no such face");
        PlcwFace f = out.faces[m.face];
        if (f.defect)
            fail("AddEdge targets a plain face");
        int n = static_cast<int>(f.sides.size());
        int i = m.corner_i, j = m.corner_j;
        if (n < 2 || i < 0 || j <= i || j >= n)
            fail("invalid chord corners");
        auto corner_vertex = [&](int k) {
            const auto& s = f.sides[k % n];
            return s.along ? out.edges[s.edge].v0 : out.edges[s.edge].v1;
        };
        int vi = corner_vertex(i), vj = corner_vertex(j);
        int w = static_cast<int>(out.edges.size());
        PlcwEdge we;
        we.v0 = vi;
        we.v1 = vj;
        we.area = f.area / 4;
        out.edges.push_back(we);
        PlcwFace f1, f2;
        f1.phase = f2.phase = f.phase;
        for (int k = i; k < j; ++k)
            f1.sides.push_back(f.sides[k]);
        f1.sides.push_back({w, false});
        for (int k = j; k < n; ++k)
            f2.sides.push_back(f.sides[k]);
        for (int k = 0; k < i; ++k)
            f2.sides.push_back(f.sides[k]);
        f2.sides.push_back({w, true});
        f1.area = f.area * 3 / 8;
        f2.area = f.area * 3 / 8;
        rotate_plain_face(f1);
        rotate_plain_face(f2);
        out.faces[m.face] = f1;
        out.faces.push_back(f2);
        return out;
    }
    case MoveKind::RemoveEdge: {
        int e = m.edge;
        if (e < 0 || e >= static_cast<int>(out.edges.size()))
            fail("no such edge");
        if (out.edges[e].defect)
            fail("RemoveEdge targets a plain edge");
        if (out.edge_on_boundary(e))
            fail("RemoveEdge targets an interior edge");
        auto sides = out.sides_at_edge(e);
        if (sides.size() != 2 || sides[0].first == sides[1].first)
            fail("RemoveEdge needs two distinct faces");
        auto [fa, ka] = sides[0];
        auto [fb, kb] = sides[1];
        if (out.faces[fa].defect || out.faces[fb].defect)
            fail("RemoveEdge needs two plain faces");
        const auto& A = out.faces[fa];
        const auto& B = out.faces[fb];
        if (A.sides.size() + B.sides.size() < 3)
            fail("merged face would be empty");
        PlcwFace merged;
        merged.phase = A.phase;
        for (int k = 0; k < ka; ++k)
            merged.sides.push_back(A.sides[k]);
        int nb = static_cast<int>(B.sides.size());
        for (int t = 1; t < nb; ++t)
            merged.sides.push_back(B.sides[(kb + t) % nb]);
        for (int k = ka + 1; k < static_cast<int>(A.sides.size()); ++k)
            merged.sides.push_back(A.sides[k]);
        merged.area = A.area + B.area + out.edges[e].area;
        rotate_plain_face(merged);
        out.faces[fa] = merged;
        std::vector<bool> dv(out.vertices.size(), false), de(out.edges.size(), false),
            df(out.faces.size(), false);
        de[e] = true;
        df[fb] = true;
        return compact(std::move(out), dv, de, df);
    }
    case MoveKind::AddBivalentVertex: {
        int e = m.edge;
        if (e < 0 || e >= static_cast<int>(out.edges.size()))
            fail("no such edge");
        if (out.edges[e].defect)
            fail("AddBivalentVertex targets a plain edge (use DefectSplitEdge)");
        if (out.edge_on_boundary(e))
            fail("boundary circles keep one edge per defect point");
        int u = static_cast<int>(out.vertices.size());
        Rat third = out.edges[e].area / 3;
        out.vertices.push_back({third});
        int e2 = static_cast<int>(out.edges.size());
        PlcwEdge rec;
        rec.v0 = u;
        rec.v1 = out.edges[e].v1;
        rec.area = third;
        out.edges.push_back(rec);
        out.edges[e].v1 = u;
        out.edges[e].area = out.edges[e].area - 2 * third;
        for (auto& f : out.faces) {
            std::vector<PlcwSide> ns;
            for (const auto& s : f.sides) {
                if (s.edge != e) {
                    ns.push_back(s);
                } else if (s.along) {
                    ns.push_back({e, true});
                    ns.push_back({e2, true});
                } else {
                    ns.push_back({e2, false});
                    ns.push_back({e, false});
                }
            }
            // defect bookkeeping: enter side indices shift
            if (f.defect) {
                int shift = 0;
                for (int k = 0; k < f.defect->enter_side; ++k)
                    if (f.sides[k].edge == e)
                        ++shift;
                f.defect->enter_side += shift;
            }
            f.sides = std::move(ns);
        }
        for (auto& circ : out.boundary) {
            std::vector<int> nl;
            for (int be : circ.edges) {
                nl.push_back(be);
                if (be == e)
                    nl.push_back(e2);
            }
            circ.edges = nl;
        }
        return out;
    }
    case MoveKind::RemoveBivalentVertex: {
        int v = m.vertex;
        if (v < 0 || v >= static_cast<int>(out.vertices.size()))
            fail("no such vertex");
        std::vector<int> incident;
        for (std::size_t e = 0; e < out.edges.size(); ++e) {
            int ends = (out.edges[e].v0 == v) + (out.edges[e].v1 == v);
            for (int t = 0; t < ends; ++t)
                incident.push_back(static_cast<int>(e));
        }
        if (incident.size() != 2 || incident[0] == incident[1])
            fail("vertex is not bivalent");
        int e1 = incident[0], e2 = incident[1];
        if (out.edges[e1].defect || out.edges[e2].defect)
            fail("RemoveBivalentVertex needs plain edges");
        if (out.edge_on_boundary(e1) || out.edge_on_boundary(e2))
            fail("RemoveBivalentVertex needs interior edges");
        // orient: E runs from the far end of e1 through v to the far end of e2
        bool flip1 = out.edges[e1].v1 != v; // e1 should end at v
        bool flip2 = out.edges[e2].v0 != v; // e2 should start at v
        int a = flip1 ? out.edges[e1].v1 : out.edges[e1].v0;
        int b = flip2 ? out.edges[e2].v0 : out.edges[e2].v1;
        Rat total = out.edges[e1].area + out.edges[e2].area + out.vertices[v].area;
        // rebuild face words: drop e2 sides, retarget e1 sides to the merged edge
        for (auto& f : out.faces) {
            std::vector<PlcwSide> ns;
            std::vector<int> kept_positions;
            for (std::size_t k = 0; k < f.sides.size(); ++k) {
                const auto& s = f.sides[k];
                if (s.edge == e2)
                    continue;
                PlcwSide t = s;
                if (s.edge == e1)
                    t.along = flip1 ? !s.along : s.along;
                ns.push_back(t);
                kept_positions.push_back(static_cast<int>(k));
            }
            if (f.defect) {
                int ne_ = 0;
                for (int k = 0; k < f.defect->enter_side; ++k)
                    if (f.sides[k].edge == e2)
                        ++ne_;
                f.defect->enter_side -= ne_;
            }
            f.sides = std::move(ns);
        }
        out.edges[e1].v0 = a;
        out.edges[e1].v1 = b;
        out.edges[e1].area = total;
        for (auto& circ : out.boundary)
            circ.edges.erase(std::remove(circ.edges.begin(), circ.edges.end(), e2),
                             circ.edges.end());
        std::vector<bool> dv(out.vertices.size(), false), de(out.edges.size(), false),
            df(out.faces.size(), false);
        dv[v] = true;
        de[e2] = true;
        auto res = compact(std::move(out), dv, de, df);
        auto check = validate(res);
        if (!check.ok())
            fail("merge produced an invalid complex: " + check.violations.front());
        return res;
    }
    case MoveKind::DefectSplitEdge: {
        int e = m.edge;
        if (e < 0 || e >= static_cast<int>(out.edges.size()) || !out.edges[e].defect)
            fail("DefectSplitEdge targets a defect-crossed edge");
        if (out.edge_on_boundary(e))
            fail("boundary circles keep one edge per defect point");
        auto& ed = *out.edges[e].defect;
        Rat pool = ed.area_left + ed.area_right;
        int u = static_cast<int>(out.vertices.size());
        out.vertices.push_back({pool / 4});
        int e2 = static_cast<int>(out.edges.size());
        PlcwEdge rec;
        rec.v0 = u;
        rec.v1 = out.edges[e].v1;
        rec.area = pool / 4;
        out.edges.push_back(rec);
        out.edges[e].v1 = u;
        ed.area_left = ed.area_left / 2 + 0; // defect stays on e
        ed.area_right = pool / 2 - ed.area_left;
        for (auto& f : out.faces) {
            std::vector<PlcwSide> ns;
            std::vector<std::pair<int, int>> oldpos;
            for (std::size_t k = 0; k < f.sides.size(); ++k) {
                const auto& s = f.sides[k];
                if (s.edge != e) {
                    oldpos.push_back({static_cast<int>(k), static_cast<int>(ns.size())});
                    ns.push_back(s);
                } else if (s.along) {
                    oldpos.push_back({static_cast<int>(k), static_cast<int>(ns.size())});
                    ns.push_back({e, true});
                    ns.push_back({e2, true});
                } else {
                    oldpos.push_back({static_cast<int>(k), static_cast<int>(ns.size()) + 1});
                    ns.push_back({e2, false});
                    ns.push_back({e, false});
                }
            }
            if (f.defect) {
                for (auto [o, nw] : oldpos)
                    if (o == f.defect->enter_side)
                        f.defect->enter_side = nw;
                // the marked (leaving) side must stay at index 0
                if (!f.sides.empty() && f.sides[0].edge == e && !f.sides[0].along) {
                    // word now starts with (e2,false),(e,false): rotate by one
                    std::rotate(ns.begin(), ns.begin() + 1, ns.end());
                    f.defect->enter_side = (f.defect->enter_side + static_cast<int>(ns.size()) - 1) %
                                           static_cast<int>(ns.size());
                }
            }
            f.sides = std::move(ns);
        }
        for (auto& circ : out.boundary) {
            std::vector<int> nl;
            for (int be : circ.edges) {
                nl.push_back(be);
                if (be == e)
                    nl.push_back(e2);
            }
            circ.edges = nl;
        }
        return out;
    }
    case MoveKind::DefectRemoveEdge: {
        int e = m.edge;
        if (e < 0 || e >= static_cast<int>(out.edges.size()) || !out.edges[e].defect)
            fail("DefectRemoveEdge targets a defect-crossed edge");
        if (out.edge_on_boundary(e))
            fail("DefectRemoveEdge targets an interior edge");
        auto sides = out.sides_at_edge(e);
        if (sides.size() != 2 || sides[0].first == sides[1].first)
            fail("DefectRemoveEdge needs two distinct faces");
        int fl = -1, fe = -1; // leaving / entering face
        for (auto [f, k] : sides) {
            if (k == 0)
                fl = f;
            else if (out.faces[f].defect && out.faces[f].defect->enter_side == k)
                fe = f;
        }
        if (fl < 0 || fe < 0)
            fail("edge does not join a leaving and an entering face");
        const auto& F = out.faces[fl];
        const auto& G = out.faces[fe];
        int eg = G.defect->enter_side;
        PlcwFace merged;
        merged.phase = G.phase;
        for (int k = 0; k < eg; ++k)
            merged.sides.push_back(G.sides[k]);
        for (std::size_t k = 1; k < F.sides.size(); ++k)
            merged.sides.push_back(F.sides[k]);
        for (std::size_t k = eg + 1; k < G.sides.size(); ++k)
            merged.sides.push_back(G.sides[k]);
        FaceDefect d;
        d.line = G.defect->line;
        d.enter_side = eg + F.defect->enter_side - 1;
        d.area_left = F.defect->area_left + G.defect->area_left + out.edges[e].defect->area_left;
        d.area_right =
            F.defect->area_right + G.defect->area_right + out.edges[e].defect->area_right;
        d.length = F.defect->length + G.defect->length + out.edges[e].defect->length;
        merged.defect = d;
        out.faces[fe] = merged;
        std::vector<bool> dv(out.vertices.size(), false), de(out.edges.size(), false),
            df(out.faces.size(), false);
        de[e] = true;
        df[fl] = true;
        return compact(std::move(out), dv, de, df);
    }
    case MoveKind::DefectRemovePlainEdge: {
        int e = m.edge;
        if (e < 0 || e >= static_cast<int>(out.edges.size()))
            fail("no such edge");
        if (out.edges[e].defect)
            fail("DefectRemovePlainEdge targets a plain edge");
        if (out.edge_on_boundary(e))
            fail("DefectRemovePlainEdge targets an interior edge");
        auto sides = out.sides_at_edge(e);
        if (sides.size() != 2 || sides[0].first == sides[1].first)
            fail("needs two distinct faces");
        int fc = -1, fp = -1, kc = -1, kp = -1;
        for (auto [f, k] : sides) {
            if (out.faces[f].defect) {
                fc = f;
                kc = k;
            } else {
                fp = f;
                kp = k;
            }
        }
        if (fc < 0 || fp < 0)
            fail("exactly one adjacent face must be crossed");
        const auto& A = out.faces[fc];
        const auto& B = out.faces[fp];
        if (kc == 0 || kc == A.defect->enter_side)
            fail("the plain edge must avoid the defect path");
        PlcwFace merged;
        merged.phase = A.phase;
        for (int k = 0; k < kc; ++k)
            merged.sides.push_back(A.sides[k]);
        int nb = static_cast<int>(B.sides.size());
        for (int t = 1; t < nb; ++t)
            merged.sides.push_back(B.sides[(kp + t) % nb]);
        for (std::size_t k = kc + 1; k < A.sides.size(); ++k)
            merged.sides.push_back(A.sides[k]);
        FaceDefect d = *A.defect;
        Rat extra = B.area + out.edges[e].area;
        if (kc < A.defect->enter_side) {
            d.area_left += extra;
            d.enter_side += nb - 2;
        } else {
            d.area_right += extra;
        }
        merged.defect = d;
        out.faces[fc] = merged;
        std::vector<bool> dv(out.vertices.size(), false), de(out.edges.size(), false),
            df(out.faces.size(), false);
        de[e] = true;
        df[fp] = true;
        return compact(std::move(out), dv, de, df);
    }
    }
    throw AqftError("unknown move kind");
}

std::vector<ElementaryMove> applicable_moves(const PlcwComplex& c)
{
    std::vector<ElementaryMove> out;
    for (int e = 0; e < static_cast<int>(c.edges.size()); ++e) {
        auto sides = c.sides_at_edge(e);
        bool interior = !c.edge_on_boundary(e);
        if (c.edges[e].defect) {
            if (interior) {
                ElementaryMove m;
                m.kind = MoveKind::DefectSplitEdge;
                m.edge = e;
                out.push_back(m);
            }
            if (interior && sides.size() == 2 && sides[0].first != sides[1].first) {
                ElementaryMove m;
                m.kind = MoveKind::DefectRemoveEdge;
                m.edge = e;
                out.push_back(m);
            }
            continue;
        }
        if (interior) {
            ElementaryMove m;
            m.kind = MoveKind::AddBivalentVertex;
            m.edge = e;
            out.push_back(m);
        }
        if (interior && sides.size() == 2 && sides[0].first != sides[1].first) {
            bool ca = c.faces[sides[0].first].defect.has_value();
            bool cb = c.faces[sides[1].first].defect.has_value();
            if (!ca && !cb && c.faces[sides[0].first].sides.size() +
                                      c.faces[sides[1].first].sides.size() >=
                                  3) {
                ElementaryMove m;
                m.kind = MoveKind::RemoveEdge;
                m.edge = e;
                out.push_back(m);
            } else if (ca != cb) {
                int fc = ca ? sides[0].first : sides[1].first;
                int kc = ca ? sides[0].second : sides[1].second;
                if (kc != 0 && kc != c.faces[fc].defect->enter_side) {
                    ElementaryMove m;
                    m.kind = MoveKind::DefectRemovePlainEdge;
                    m.edge = e;
                    out.push_back(m);
                }
            }
        }
    }
    for (int f = 0; f < static_cast<int>(c.faces.size()); ++f) {
        if (c.faces[f].defect)
            continue;
        int n = static_cast<int>(c.faces[f].sides.size());
        if (n < 2 || n > 8)
            continue;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                ElementaryMove m;
                m.kind = MoveKind::AddEdge;
                m.face = f;
                m.corner_i = i;
                m.corner_j = j;
                out.push_back(m);
            }
    }
    for (int v = 0; v < static_cast<int>(c.vertices.size()); ++v) {
        std::vector<int> inc;
        for (std::size_t e = 0; e < c.edges.size(); ++e) {
            int ends = (c.edges[e].v0 == v) + (c.edges[e].v1 == v);
            for (int t = 0; t < ends; ++t)
                inc.push_back(static_cast<int>(e));
        }
        if (inc.size() == 2 && inc[0] != inc[1] && !c.edges[inc[0]].defect &&
            !c.edges[inc[1]].defect && !c.edge_on_boundary(inc[0]) &&
            !c.edge_on_boundary(inc[1])) {
            ElementaryMove m;
            m.kind = MoveKind::RemoveBivalentVertex;
            m.vertex = v;
            out.push_back(m);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// canonical decompositions

PlcwComplex normal_form(int genus, int b_in, int b_out, Rat area)
{
    if (genus < 0 || b_in < 0 || b_out < 0)
        throw AqftError("normal_form: negative arguments");
    if (area <= Rat{0})
        throw AqftError("normal_form: area must be positive");
    int b = b_in + b_out;
    PlcwComplex c;

    if (b == 0 && genus == 0) {
        c.vertices.push_back({});
        PlcwEdge e;
        e.v0 = e.v1 = 0;
        c.edges.push_back(e);
        PlcwFace f1, f2;
        f1.sides = {{0, true}};
        f2.sides = {{0, false}};
        c.faces = {f1, f2};
        Rat share = area / 4;
        c.vertices[0].area = share;
        c.edges[0].area = share;
        c.faces[0].area = share;
        c.faces[1].area = area - 3 * share;
        return c;
    }

    if (b == 0) {
        // one 4g-gon, all corners at a single vertex
        c.vertices.push_back({});
        PlcwFace f;
        for (int i = 0; i < genus; ++i) {
            int a = static_cast<int>(c.edges.size());
            PlcwEdge ea, eb;
            ea.v0 = ea.v1 = 0;
            eb.v0 = eb.v1 = 0;
            c.edges.push_back(ea);
            c.edges.push_back(eb);
            f.sides.push_back({a, true});
            f.sides.push_back({a + 1, true});
            f.sides.push_back({a, false});
            f.sides.push_back({a + 1, false});
        }
        c.faces.push_back(f);
        int weighted = 1 + 2 * genus + 1;
        Rat share = area / weighted;
        c.vertices[0].area = share;
        for (auto& e : c.edges)
            e.area = share;
        c.faces[0].area = area - (weighted - 1) * share;
        return c;
    }

    // single (4g+3b)-gon
    c.vertices.push_back({}); // v0
    PlcwFace f;
    for (int i = 0; i < genus; ++i) {
        int a = static_cast<int>(c.edges.size());
        PlcwEdge ea, eb;
        ea.v0 = ea.v1 = 0;
        eb.v0 = eb.v1 = 0;
        c.edges.push_back(ea);
        c.edges.push_back(eb);
        f.sides.push_back({a, true});
        f.sides.push_back({a + 1, true});
        f.sides.push_back({a, false});
        f.sides.push_back({a + 1, false});
    }
    for (int j = 0; j < b; ++j) {
        int u = static_cast<int>(c.vertices.size());
        c.vertices.push_back({});
        int cidx = static_cast<int>(c.edges.size());
        PlcwEdge ce, de;
        ce.v0 = 0;
        ce.v1 = u;
        de.v0 = de.v1 = u;
        c.edges.push_back(ce);
        c.edges.push_back(de);
        f.sides.push_back({cidx, true});
        f.sides.push_back({cidx + 1, true});
        f.sides.push_back({cidx, false});
        BoundaryCircle circ;
        circ.edges = {cidx + 1};
        circ.outgoing = j >= b_in;
        c.boundary.push_back(circ);
    }
    c.faces.push_back(f);

    // even distribution over weighted cells: the face, the non-boundary edges,
    // v0, and the ingoing boundary edges/vertices
    std::vector<int> wv{0}, we;
    for (int i = 0; i < 2 * genus; ++i)
        we.push_back(i);
    for (int j = 0; j < b; ++j) {
        we.push_back(2 * genus + 2 * j); // c_j
        if (j < b_in) {
            we.push_back(2 * genus + 2 * j + 1); // d_j
            wv.push_back(1 + j);
        }
    }
    int weighted = 1 + static_cast<int>(wv.size()) + static_cast<int>(we.size());
    Rat share = area / weighted;
    for (int v : wv)
        c.vertices[v].area = share;
    for (int e : we)
        c.edges[e].area = share;
    c.faces[0].area = area - (weighted - 1) * share;
    return c;
}

PlcwComplex disjoint_union(const PlcwComplex& a, const PlcwComplex& b)
{
    PlcwComplex out = a;
    int vo = static_cast<int>(a.vertices.size());
    int eo = static_cast<int>(a.edges.size());
    int lo = static_cast<int>(a.lines.size());
    for (const auto& v : b.vertices)
        out.vertices.push_back(v);
    for (auto e : b.edges) {
        e.v0 += vo;
        e.v1 += vo;
        if (e.defect)
            e.defect->line += lo;
        out.edges.push_back(e);
    }
    for (auto f : b.faces) {
        for (auto& s : f.sides)
            s.edge += eo;
        if (f.defect)
            f.defect->line += lo;
        out.faces.push_back(f);
    }
    for (auto circ : b.boundary) {
        for (auto& e : circ.edges)
            e += eo;
        out.boundary.push_back(circ);
    }
    for (const auto& l : b.lines)
        out.lines.push_back(l);
    return out;
}

namespace {

/// +1 when the line enters the surface through boundary edge e (the adjacent
/// face side carries X), -1 when it leaves (Xbar); 0 for plain edges.
int boundary_point_sign(const PlcwComplex& c, int e)
{
    if (!c.edges[e].defect)
        return 0;
    auto sides = c.sides_at_edge(e);
    if (sides.size() != 1)
        return 0;
    auto [f, k] = sides[0];
    if (!c.faces[f].defect)
        return 0;
    if (k == c.faces[f].defect->enter_side)
        return +1;
    if (k == 0)
        return -1;
    return 0;
}

} // namespace

PlcwComplex glue(const PlcwComplex& x, const PlcwComplex& y,
                 const std::vector<std::pair<int, int>>& matching)
{
    PlcwComplex c = disjoint_union(x, y);
    int vo = static_cast<int>(x.vertices.size());
    int eo = static_cast<int>(x.edges.size());
    std::vector<bool> drop_circle(c.boundary.size(), false);
    std::vector<bool> dv(c.vertices.size(), false), de(c.edges.size(), false),
        df(c.faces.size(), false);

    DisjointSet vds(static_cast<int>(c.vertices.size()));

    for (auto [oc, ic] : matching) {
        if (oc < 0 || oc >= static_cast<int>(x.boundary.size()) || !x.boundary[oc].outgoing)
            throw AqftError("glue: lhs circle " + std::to_string(oc) + " is not outgoing");
        if (ic < 0 || ic >= static_cast<int>(y.boundary.size()) || y.boundary[ic].outgoing)
            throw AqftError("glue: rhs circle " + std::to_string(ic) + " is not ingoing");
        const auto& A = x.boundary[oc];
        const auto& B = y.boundary[ic];
        if (A.edges.size() != B.edges.size())
            throw AqftError("glue: defect point counts differ (" + std::to_string(A.edges.size()) +
                            " vs " + std::to_string(B.edges.size()) + ")");
        for (std::size_t t = 0; t < A.edges.size(); ++t) {
            int ex = A.edges[t];
            int eyo = B.edges[t];
            const auto& rx = x.edges[ex];
            const auto& ry = y.edges[eyo];
            bool cx = rx.defect.has_value(), cy = ry.defect.has_value();
            if (cx != cy)
                throw AqftError("glue: defect point mismatch at position " + std::to_string(t));
            if (cx) {
                const std::string& lx = x.lines[rx.defect->line].label;
                const std::string& ly = y.lines[ry.defect->line].label;
                if (lx != ly)
                    throw AqftError("glue: defect label mismatch at position " + std::to_string(t) +
                                    ": '" + lx + "' vs '" + ly + "'");
                int sx = boundary_point_sign(x, ex);
                int sy = boundary_point_sign(y, eyo);
                if (sx == sy)
                    throw AqftError("glue: defect orientation mismatch at position " +
                                    std::to_string(t));
            }
            int gx = ex;            // edge id in the union
            int gy = eo + eyo;      // edge id in the union
            // align orientations: the two face sides must traverse oppositely
            auto sx_ = c.sides_at_edge(gx);
            auto sy_ = c.sides_at_edge(gy);
            if (sx_.size() != 1 || sy_.size() != 1)
                throw AqftError("glue: boundary edge is not simple");
            bool ax = c.faces[sx_[0].first].sides[sx_[0].second].along;
            bool ay = c.faces[sy_[0].first].sides[sy_[0].second].along;
            if (ax == ay) {
                // flip the y edge
                std::swap(c.edges[gy].v0, c.edges[gy].v1);
                auto& side = c.faces[sy_[0].first].sides[sy_[0].second];
                side.along = !side.along;
            }
            vds.unite(c.edges[gx].v0, c.edges[gy].v0);
            vds.unite(c.edges[gx].v1, c.edges[gy].v1);
            // keep the ingoing edge record (it carries the weights);
            // retarget the x face side and drop the x edge
            c.faces[sx_[0].first].sides[sx_[0].second].edge = gy;
            de[gx] = true;
        }
        drop_circle[oc] = true;
        drop_circle[x.boundary.size() + ic] = true;
    }

    // merge vertices: retarget all edges to class representatives, sum areas
    std::vector<Rat> varea(c.vertices.size(), Rat{0});
    for (std::size_t v = 0; v < c.vertices.size(); ++v)
        varea[vds.find(static_cast<int>(v))] += c.vertices[v].area;
    for (std::size_t v = 0; v < c.vertices.size(); ++v) {
        int r = vds.find(static_cast<int>(v));
        if (r != static_cast<int>(v))
            dv[v] = true;
        else
            c.vertices[v].area = varea[r];
    }
    for (auto& e : c.edges) {
        e.v0 = vds.find(e.v0);
        e.v1 = vds.find(e.v1);
    }
    std::vector<BoundaryCircle> keep;
    for (std::size_t ci = 0; ci < c.boundary.size(); ++ci)
        if (!drop_circle[ci])
            keep.push_back(c.boundary[ci]);
    c.boundary = keep;
    (void)vo;
    return compact(std::move(c), dv, de, df);
}

// ---------------------------------------------------------------------------
// defect-decorated builders

namespace {

int add_line(PlcwComplex& c, const std::string& label)
{
    c.lines.push_back({label});
    return static_cast<int>(c.lines.size()) - 1;
}

} // namespace

PlcwComplex defect_cylinder_loops(const std::vector<std::string>& labels,
                                  const std::vector<Rat>& areas, Rat length)
{
    int n = static_cast<int>(labels.size());
    if (n < 1 || static_cast<int>(areas.size()) != n + 1)
        throw AqftError("defect_cylinder_loops: need n labels and n+1 band areas");
    PlcwComplex c;
    for (int i = 0; i <= n; ++i)
        c.vertices.push_back({});
    // horizontal loops h_i at w_i, vertical seams v_i: w_i -> w_{i+1}
    std::vector<int> h(n + 1), v(n);
    for (int i = 0; i <= n; ++i) {
        PlcwEdge e;
        e.v0 = e.v1 = i;
        h[i] = static_cast<int>(c.edges.size());
        c.edges.push_back(e);
    }
    for (int i = 0; i < n; ++i) {
        PlcwEdge e;
        e.v0 = i;
        e.v1 = i + 1;
        EdgeDefect d;
        d.line = add_line(c, labels[i]);
        d.length = length / 2;
        v[i] = static_cast<int>(c.edges.size());
        c.edges.push_back(e);
        c.edges.back().defect = d;
    }
    for (int i = 0; i < n; ++i) {
        PlcwFace f;
        f.sides = {{v[i], true}, {h[i + 1], false}, {v[i], false}, {h[i], true}};
        FaceDefect d;
        d.line = c.edges[v[i]].defect->line;
        d.enter_side = 2;
        d.length = length - length / 2;
        f.defect = d;
        c.faces.push_back(f);
    }
    c.boundary.push_back({{h[0]}, false});
    c.boundary.push_back({{h[n]}, false});

    // band i: h_i, w_i, right bank of loop i (face i and seam i),
    //         left bank of loop i-1
    for (int i = 0; i <= n; ++i) {
        std::vector<Rat*> cells;
        cells.push_back(&c.edges[h[i]].area);
        cells.push_back(&c.vertices[i].area);
        if (i < n) {
            cells.push_back(&c.faces[i].defect->area_right);
            cells.push_back(&c.edges[v[i]].defect->area_right);
        }
        if (i > 0) {
            cells.push_back(&c.faces[i - 1].defect->area_left);
            cells.push_back(&c.edges[v[i - 1]].defect->area_left);
        }
        Rat share = areas[i] / static_cast<long long>(cells.size());
        Rat rest = areas[i];
        for (std::size_t k = 0; k + 1 < cells.size(); ++k) {
            *cells[k] = share;
            rest -= share;
        }
        *cells.back() = rest;
    }
    return c;
}

PlcwComplex defect_cylinder_through(const std::string& label, Rat area_left, Rat area_right,
                                    Rat length)
{
    PlcwComplex c;
    int line = add_line(c, label);
    c.vertices.push_back({}); // q (in)
    c.vertices.push_back({}); // p (out)
    PlcwEdge b, t, s;
    b.v0 = b.v1 = 0;
    b.defect = EdgeDefect{line, area_left / 4, length / 2, area_right / 2};
    t.v0 = t.v1 = 1;
    t.defect = EdgeDefect{line, Rat{0}, Rat{0}, Rat{0}}; // outgoing: weightless
    s.v0 = 0;
    s.v1 = 1;
    s.area = area_left / 4;
    c.edges = {b, t, s};
    PlcwFace f;
    f.sides = {{1, false}, {2, false}, {0, true}, {2, true}};
    f.defect = FaceDefect{line, 2, area_left / 4, length - length / 2, area_right - area_right / 2};
    c.faces.push_back(f);
    c.vertices[0].area = area_left - 3 * (area_left / 4);
    c.boundary.push_back({{0}, false});
    c.boundary.push_back({{1}, true});
    return c;
}

PlcwComplex torus_with_loop(const std::string& label, Rat area_left, Rat area_right, Rat length)
{
    PlcwComplex c;
    int line = add_line(c, label);
    c.vertices.push_back({});
    // left bank: face-left + seam-left; right bank: face-right, seam-right, h, vertex
    PlcwEdge v, h;
    v.v0 = v.v1 = 0;
    v.defect = EdgeDefect{line, area_left / 2, length / 2, area_right / 4};
    h.v0 = h.v1 = 0;
    h.area = area_right / 4;
    c.edges = {v, h};
    PlcwFace f;
    f.sides = {{0, true}, {1, true}, {0, false}, {1, false}};
    f.defect = FaceDefect{line, 2, area_left - area_left / 2, length - length / 2, area_right / 4};
    c.faces.push_back(f);
    c.vertices[0].area = area_right - 3 * (area_right / 4);
    return c;
}

PlcwComplex sphere_with_loop(const std::string& label, Rat area_inside, Rat area_outside,
                             Rat length)
{
    PlcwComplex c;
    int line = add_line(c, label);
    c.vertices.push_back({}); // vN
    c.vertices.push_back({}); // vS
    PlcwEdge eN, eS, ev;
    eN.v0 = eN.v1 = 0;
    eS.v0 = eS.v1 = 1;
    ev.v0 = 0;
    ev.v1 = 1;
    ev.defect = EdgeDefect{line, area_outside / 5, length / 2, area_inside / 5};
    c.edges = {eN, eS, ev};
    PlcwFace fN, fA, fS;
    fN.sides = {{0, false}};
    fS.sides = {{1, true}};
    fA.sides = {{2, true}, {1, false}, {2, false}, {0, true}};
    fA.defect = FaceDefect{line, 2, area_outside / 5, length - length / 2, area_inside / 5};
    // inside = north bank (right of the line), outside = south bank (left)
    c.edges[0].area = area_inside / 5;
    c.vertices[0].area = area_inside / 5;
    fN.area = area_inside - 4 * (area_inside / 5);
    c.edges[1].area = area_outside / 5;
    c.vertices[1].area = area_outside / 5;
    fS.area = area_outside - 4 * (area_outside / 5);
    c.faces = {fN, fA, fS};
    return c;
}

} // namespace aqft
