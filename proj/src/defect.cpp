#include "aqft/defect.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace aqft {

DefectStateSumData::DefectStateSumData(std::map<std::string, StateSumData> phases,
                                       std::map<std::string, DefectLabelData> labels)
    : phases_(std::move(phases)), labels_(std::move(labels))
{
    if (phases_.empty())
        throw AqftError("defect data needs at least one phase");
}

const StateSumData& DefectStateSumData::phase(const std::string& p) const
{
    auto it = phases_.find(p);
    if (it == phases_.end())
        throw AqftError("unknown phase '" + p + "'");
    return it->second;
}

const DefectLabelData& DefectStateSumData::label(const std::string& l) const
{
    auto it = labels_.find(l);
    if (it == labels_.end())
        throw AqftError("unknown defect label '" + l + "'");
    return it->second;
}

DefectStateSumData defect_data(StateSumData phase, std::map<std::string, DualPair> pairs)
{
    std::map<std::string, StateSumData> ph;
    ph.emplace("*", std::move(phase));
    std::map<std::string, DefectLabelData> lbl;
    for (auto& [k, p] : pairs)
        lbl.emplace(k, DefectLabelData{p, "*", "*"});
    return DefectStateSumData(std::move(ph), std::move(lbl));
}

Tensor DefectStateSumData::Wx(const std::string& lbl, int nt, int ns, double al, double length,
                              double ar) const
{
    const DefectLabelData& L = label(lbl);
    const StateSumData& Pt = phase(L.phase_t);
    const StateSumData& Ps = phase(L.phase_s);
    LinearMap gamma = L.pair.gamma(al / 4, length / 2, ar / 4); // I -> Xbar ⊗ X
    LinearMap rho = L.pair.U.action(al / 4, length / 2, ar / 4); // [outX, A_t, X, A_s]
    Tensor wt = Pt.W(nt + 1, al / 2); // consume the last leg
    Tensor ws = Ps.W(ns + 1, ar / 2); // consume the first leg
    Tensor t = contract(gamma.t, rho.t, {{1, 2}});  // [Xbar, outX, A_t, A_s]
    t = contract(t, wt, {{2, nt}});                 // [Xbar, outX, A_s, t_1..t_nt]
    t = contract(t, ws, {{2, 0}});                  // [Xbar, outX, t_1..t_nt, s_1..s_ns]
    std::vector<int> perm;
    perm.push_back(0);
    for (int i = 0; i < nt; ++i)
        perm.push_back(2 + i);
    perm.push_back(1);
    for (int i = 0; i < ns; ++i)
        perm.push_back(2 + nt + i);
    return t.permuted(perm);
}

LinearMap DefectStateSumData::betax(const std::string& lbl, double al, double length,
                                    double ar) const
{
    return label(lbl).pair.beta(al, length, ar);
}

LinearMap DefectStateSumData::zetax(const std::string& lbl, int sign, double al, double length,
                                    double ar) const
{
    const DefectLabelData& L = label(lbl);
    const Bimodule& Y = sign > 0 ? L.pair.U : L.pair.V;
    const Rfa& left = *Y.left;
    const Rfa& right = *Y.right;
    auto tau_inv = window_inverse(right, ar / 2);
    if (!tau_inv)
        throw AqftError("zetax: right algebra is not strongly separable");
    LinearMap rho = Y.action(al / 2, length, ar / 2);
    Tensor t = contract(rho.t, left.map(MapKind::Eta, al / 2).t, {{1, 0}}); // [out, X, A_s]
    t = contract(t, *tau_inv, {{2, 0}});                                    // [out, X]
    return LinearMap{{Y.carrier}, {Y.carrier}, t};
}

LinearMap DefectStateSumData::E(const std::vector<DefectPoint>& list, double s) const
{
    if (list.empty())
        throw AqftError("E needs a nonempty defect list");
    int n = static_cast<int>(list.size());
    std::vector<const Bimodule*> Y;
    for (const auto& p : list)
        Y.push_back(p.sign > 0 ? &label(p.label).pair.U : &label(p.label).pair.V);

    // chain of actions rho^{Y_i}(e^{(i-1)}_2 ⊗ m_i ⊗ e^{(i)}_1)
    std::vector<Tensor> es;
    for (int i = 0; i < n; ++i) {
        const Rfa& A = *Y[i]->right;
        if (s == 0.0) {
            auto e = separability_idempotent0(A);
            if (!e)
                throw AqftError("E: middle algebra not strongly separable");
            es.push_back(*e);
        } else {
            auto e = separability_idempotent(A, s);
            if (!e)
                throw AqftError("E: middle algebra not strongly separable");
            es.push_back(*e);
        }
    }
    // build node i with open ports [out_i, m_i, e^{(i)}_2-to-next]
    std::vector<Tensor> nodes;
    for (int i = 0; i < n; ++i) {
        LinearMap rho = s == 0.0 ? Y[i]->base : Y[i]->action(s, s, s);
        Tensor t = contract(rho.t, es[i], {{3, 0}}); // [out, left_in, m, e2]
        nodes.push_back(t);
    }
    // contract e2 of node i into left_in of node i+1 (cyclically)
    Tensor acc = nodes[0]; // [out0, left0, m0, e2_0]
    for (int i = 1; i < n; ++i) {
        // acc legs: [out0, left0, m0, out1, m1, ..., e2_{i-1}]
        acc = contract(acc, nodes[i], {{acc.rank() - 1, 1}});
        // -> [ ...prev..., out_i, m_i, e2_i]
    }
    // close the cycle: last e2 into left0 (leg 1)
    acc = contract(acc, identity_map({Y[0]->left->carrier()}).t, {{1, 0}, {acc.rank() - 1, 1}});
    // legs now: [out0, m0, out1, m1, ..., out_{n-1}, m_{n-1}]
    std::vector<int> perm;
    for (int i = 0; i < n; ++i)
        perm.push_back(2 * i);
    for (int i = 0; i < n; ++i)
        perm.push_back(2 * i + 1);
    acc = acc.permuted(perm);
    std::vector<IndexSpace> legs;
    for (int i = 0; i < n; ++i)
        legs.push_back(Y[i]->carrier);
    return LinearMap{legs, legs, acc};
}

namespace {

std::string list_key(const std::vector<DefectPoint>& list)
{
    std::string k;
    for (const auto& p : list)
        k += (p.sign > 0 ? "+" : "-") + p.label + ";";
    return k;
}

} // namespace

const DefectStateSumData::BoundarySpace&
DefectStateSumData::boundary_space(const std::vector<DefectPoint>& list) const
{
    std::string key = list_key(list);
    auto it = cache_.find(key);
    if (it != cache_.end())
        return it->second;
    LinearMap E0 = E(list, 0.0);
    SplitResult s = split_idempotent(E0, 1e-8, "Zx(" + key + ")");
    BoundarySpace bs{s.proj.outs.at(0), s.proj, s.inj, s.rank};
    return cache_.emplace(key, std::move(bs)).first->second;
}

// ---------------------------------------------------------------------------
// the evaluation engine

namespace {

struct Node {
    Tensor t;
    std::vector<int> ports; // global port ids per leg
    bool alive = true;
};

struct Task {
    int pa = -1, pb = -1;
    Tensor weight; // two legs: [for pa, for pb]
};

struct Network {
    std::vector<Node> nodes;
    int next_port = 0;

    int add_node(Tensor t)
    {
        Node n;
        n.t = std::move(t);
        for (int i = 0; i < n.t.rank(); ++i)
            n.ports.push_back(next_port++);
        nodes.push_back(std::move(n));
        return static_cast<int>(nodes.size()) - 1;
    }

    std::pair<int, int> locate(int port) const
    {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!nodes[i].alive)
                continue;
            for (std::size_t l = 0; l < nodes[i].ports.size(); ++l)
                if (nodes[i].ports[l] == port)
                    return {static_cast<int>(i), static_cast<int>(l)};
        }
        throw AqftError("internal: dangling port");
    }

    void apply_single(int port, const LinearMap& m)
    {
        auto [ni, leg] = locate(port);
        nodes[ni].t = apply_to_leg(nodes[ni].t, m, leg);
    }

    void run_task(const Task& task)
    {
        auto [na, la] = locate(task.pa);
        auto [nb, lb] = locate(task.pb);
        if (na == nb) {
            Node& N = nodes[na];
            N.t = contract(N.t, task.weight, {{la, 0}, {lb, 1}});
            std::vector<int> np;
            for (std::size_t l = 0; l < N.ports.size(); ++l)
                if (static_cast<int>(l) != la && static_cast<int>(l) != lb)
                    np.push_back(N.ports[l]);
            N.ports = np;
            return;
        }
        Node& A = nodes[na];
        Node& B = nodes[nb];
        Tensor half = contract(A.t, task.weight, {{la, 0}}); // A-free ++ [w1]
        Tensor full = contract(half, B.t, {{half.rank() - 1, lb}});
        std::vector<int> np;
        for (std::size_t l = 0; l < A.ports.size(); ++l)
            if (static_cast<int>(l) != la)
                np.push_back(A.ports[l]);
        for (std::size_t l = 0; l < B.ports.size(); ++l)
            if (static_cast<int>(l) != lb)
                np.push_back(B.ports[l]);
        A.t = std::move(full);
        A.ports = np;
        B.alive = false;
        B.ports.clear();
        B.t = Tensor();
    }

    double task_cost(const Task& task) const
    {
        auto [na, la] = locate(task.pa);
        auto [nb, lb] = locate(task.pb);
        double sz = 1.0;
        for (const auto& s : nodes[na].t.spaces())
            sz *= s.dim;
        if (nb != na)
            for (const auto& s : nodes[nb].t.spaces())
                sz *= s.dim;
        double da = nodes[na].t.spaces()[la].dim;
        double db = na == nb ? nodes[na].t.spaces()[lb].dim : nodes[nb].t.spaces()[lb].dim;
        return sz / (da * db);
    }
};

struct SidePhase {
    bool is_t = false; // side lies on the t-side (left) of the crossing line
};

/// phase of a face side: for crossed faces, sides 1..enter-1 lie in the
/// t-phase and sides enter+1..n-1 in the s-phase
std::string side_phase(const DefectStateSumData& d, const PlcwComplex& c, int f, int k)
{
    const PlcwFace& F = c.faces[f];
    if (!F.defect)
        return F.phase;
    const auto& L = d.label(c.lines[F.defect->line].label);
    return k < F.defect->enter_side ? L.phase_t : L.phase_s;
}

} // namespace

LinearMap evaluate_defect(const PlcwComplex& c, const DefectStateSumData& d)
{
    {
        auto rep = validate(c);
        if (!rep.ok())
            throw AqftError("evaluate: invalid complex: " + rep.violations.front());
    }

    std::vector<int> vcomp, ecomp, fcomp;
    int ncomp = c.components(vcomp, ecomp, fcomp);
    std::vector<char> comp_zero(ncomp, 0);
    for (int comp = 0; comp < ncomp; ++comp)
        comp_zero[comp] = c.component_area(comp, vcomp, ecomp, fcomp) == Rat{0};

    auto out_e = [&] {
        std::vector<bool> flags(c.edges.size(), false);
        for (const auto& b : c.boundary)
            if (b.outgoing)
                for (int e : b.edges)
                    flags[e] = true;
        return flags;
    }();
    auto out_v = [&] {
        std::vector<bool> flags(c.vertices.size(), false);
        for (std::size_t e = 0; e < c.edges.size(); ++e)
            if (out_e[e]) {
                flags[c.edges[e].v0] = true;
                flags[c.edges[e].v1] = true;
            }
        return flags;
    }();

    // circle bookkeeping: defect lists and boundary spaces
    struct CircleInfo {
        std::vector<DefectPoint> list; // empty for plain circles
        std::string phase = "*";
        LinearMap proj, inj;
        IndexSpace space;
        int comp = -1;
    };
    std::vector<CircleInfo> circles(c.boundary.size());
    for (std::size_t ci = 0; ci < c.boundary.size(); ++ci) {
        const auto& circ = c.boundary[ci];
        CircleInfo info;
        info.comp = ecomp[circ.edges.front()];
        bool crossed = c.edges[circ.edges.front()].defect.has_value();
        if (!crossed) {
            auto sides = c.sides_at_edge(circ.edges.front());
            info.phase = side_phase(d, c, sides[0].first, sides[0].second);
            const StateSumData& ph = d.phase(info.phase);
            info.space = ph.zspace();
            info.proj = ph.proj();
            info.inj = ph.inj();
        } else {
            for (int e : circ.edges) {
                const auto& ed = c.edges[e];
                auto sides = c.sides_at_edge(e);
                auto [f, k] = sides[0];
                const auto& F = c.faces[f];
                int face_sign = (k == F.defect->enter_side) ? +1 : -1; // X at enter, Xbar at marked
                int factor_sign = circ.outgoing ? face_sign : -face_sign;
                info.list.push_back({c.lines[ed.defect->line].label, factor_sign});
            }
            const auto& bs = d.boundary_space(info.list);
            info.space = bs.space;
            info.proj = bs.proj;
            info.inj = bs.inj;
        }
        circles[ci] = std::move(info);
    }

    Network net;
    // port registry for face sides and circle factors
    std::map<std::pair<int, int>, int> face_port;     // (face, side) -> port
    std::map<std::pair<int, int>, int> circle_port;   // (circle, edge position) -> port
    std::vector<int> circle_zleg(c.boundary.size(), -1);

    // face tensors (skip zero-area components)
    for (int f = 0; f < static_cast<int>(c.faces.size()); ++f) {
        if (comp_zero[fcomp[f]])
            continue;
        const PlcwFace& F = c.faces[f];
        Tensor t;
        if (!F.defect) {
            t = d.phase(F.phase).W(static_cast<int>(F.sides.size()), to_double(F.area));
        } else {
            int n = static_cast<int>(F.sides.size());
            int enter = F.defect->enter_side;
            t = d.Wx(c.lines[F.defect->line].label, enter - 1, n - enter - 1,
                     to_double(F.defect->area_left), to_double(F.defect->length),
                     to_double(F.defect->area_right));
        }
        int ni = net.add_node(std::move(t));
        for (int k = 0; k < static_cast<int>(F.sides.size()); ++k)
            face_port[{f, k}] = net.nodes[ni].ports[k];
    }

    // ingoing circle injections
    for (std::size_t ci = 0; ci < c.boundary.size(); ++ci) {
        const auto& circ = c.boundary[ci];
        if (circ.outgoing || comp_zero[circles[ci].comp])
            continue;
        // legs: [factors in edge order ..., Z]
        int ni = net.add_node(circles[ci].inj.t);
        for (std::size_t p = 0; p < circ.edges.size(); ++p)
            circle_port[{static_cast<int>(ci), static_cast<int>(p)}] = net.nodes[ni].ports[p];
        circle_zleg[ci] = net.nodes[ni].ports[circ.edges.size()];
    }

    // vertex weights
    for (int v = 0; v < static_cast<int>(c.vertices.size()); ++v) {
        if (out_v[v] || comp_zero[vcomp[v]])
            continue;
        // incident face sides
        std::vector<std::pair<int, int>> plain, crossed;
        for (int f = 0; f < static_cast<int>(c.faces.size()); ++f)
            for (int k = 0; k < static_cast<int>(c.faces[f].sides.size()); ++k) {
                int e = c.faces[f].sides[k].edge;
                if (c.edges[e].v0 == v || c.edges[e].v1 == v)
                    (c.edges[e].defect ? crossed : plain).push_back({f, k});
            }
        double av = to_double(c.vertices[v].area);
        if (!plain.empty()) {
            auto [f, k] = *std::min_element(plain.begin(), plain.end());
            net.apply_single(face_port[{f, k}], d.phase(side_phase(d, c, f, k)).zeta(av));
        } else if (!crossed.empty()) {
            auto [f, k] = *std::min_element(crossed.begin(), crossed.end());
            const PlcwFace& F = c.faces[f];
            int sign = (k == F.defect->enter_side) ? +1 : -1;
            net.apply_single(face_port[{f, k}],
                             d.zetax(c.lines[F.defect->line].label, sign, av / 3, av / 3, av / 3));
        } else {
            throw AqftError("evaluate: isolated vertex");
        }
    }

    // contraction tasks
    std::vector<Task> tasks;
    for (int e = 0; e < static_cast<int>(c.edges.size()); ++e) {
        if (out_e[e] || comp_zero[ecomp[e]])
            continue;
        auto sides = c.sides_at_edge(e);
        auto circle = c.circle_of_edge(e);
        const auto& rec = c.edges[e];
        if (!circle) {
            if (sides.size() != 2)
                throw AqftError("internal: interior edge with wrong side count");
            if (!rec.defect) {
                Task t;
                t.pa = face_port[sides[0]];
                t.pb = face_port[sides[1]];
                t.weight = d.phase(side_phase(d, c, sides[0].first, sides[0].second))
                               .beta(to_double(rec.area))
                               .t;
                tasks.push_back(std::move(t));
            } else {
                // order the pairing (X, Xbar): X at the entering face side
                int xi = -1, bi = -1;
                for (int s = 0; s < 2; ++s) {
                    auto [f, k] = sides[s];
                    if (k == c.faces[f].defect->enter_side)
                        xi = s;
                    else if (k == 0)
                        bi = s;
                }
                if (xi < 0 || bi < 0)
                    throw AqftError("internal: malformed defect edge");
                Task t;
                t.pa = face_port[sides[xi]];
                t.pb = face_port[sides[bi]];
                t.weight = d.betax(c.lines[rec.defect->line].label,
                                   to_double(rec.defect->area_left),
                                   to_double(rec.defect->length),
                                   to_double(rec.defect->area_right))
                               .t;
                tasks.push_back(std::move(t));
            }
            continue;
        }
        // ingoing boundary edge: contract with the circle factor
        const auto& circ = c.boundary[*circle];
        int pos = static_cast<int>(std::find(circ.edges.begin(), circ.edges.end(), e) -
                                   circ.edges.begin());
        auto [f, k] = sides[0];
        if (!rec.defect) {
            Task t;
            t.pa = circle_port[{*circle, pos}];
            t.pb = face_port[{f, k}];
            t.weight = d.phase(side_phase(d, c, f, k)).beta(to_double(rec.area)).t;
            tasks.push_back(std::move(t));
        } else {
            bool face_is_x = (k == c.faces[f].defect->enter_side);
            Task t;
            if (face_is_x) { // factor is Xbar
                t.pa = face_port[{f, k}];
                t.pb = circle_port[{*circle, pos}];
            } else {
                t.pa = circle_port[{*circle, pos}];
                t.pb = face_port[{f, k}];
            }
            t.weight = d.betax(c.lines[rec.defect->line].label, to_double(rec.defect->area_left),
                               to_double(rec.defect->length), to_double(rec.defect->area_right))
                           .t;
            tasks.push_back(std::move(t));
        }
    }

    // run tasks greedily by cost
    std::vector<bool> done(tasks.size(), false);
    for (std::size_t round = 0; round < tasks.size(); ++round) {
        int best = -1;
        double best_cost = 0.0;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (done[i])
                continue;
            double cost = net.task_cost(tasks[i]);
            if (best < 0 || cost < best_cost) {
                best = static_cast<int>(i);
                best_cost = cost;
            }
        }
        if (best < 0)
            break;
        net.run_task(tasks[best]);
        done[best] = true;
    }

    // assemble remaining nodes with an outer product
    Tensor total = Tensor::scalar(1.0);
    std::vector<int> total_ports;
    for (const auto& node : net.nodes) {
        if (!node.alive)
            continue;
        total = contract(total, node.t, {});
        total_ports.insert(total_ports.end(), node.ports.begin(), node.ports.end());
    }

    // identify open ports: out-circle side ports and in-circle Z legs
    std::vector<int> out_ports, in_ports;
    std::vector<IndexSpace> outs, ins;
    std::vector<std::pair<int, int>> out_circle_span; // (circle, #legs)
    for (std::size_t ci = 0; ci < c.boundary.size(); ++ci) {
        const auto& circ = c.boundary[ci];
        if (comp_zero[circles[ci].comp])
            continue;
        if (circ.outgoing) {
            for (std::size_t p = 0; p < circ.edges.size(); ++p) {
                auto sides = c.sides_at_edge(circ.edges[p]);
                out_ports.push_back(face_port[sides[0]]);
            }
            out_circle_span.push_back({static_cast<int>(ci), static_cast<int>(circ.edges.size())});
        } else {
            in_ports.push_back(circle_zleg[ci]);
            ins.push_back(circles[ci].space);
        }
    }
    for (auto [ci, span] : out_circle_span)
        outs.push_back(circles[ci].space);

    std::vector<int> perm;
    auto port_pos = [&](int port) {
        for (std::size_t i = 0; i < total_ports.size(); ++i)
            if (total_ports[i] == port)
                return static_cast<int>(i);
        throw AqftError("internal: lost port");
    };
    for (int p : out_ports)
        perm.push_back(port_pos(p));
    for (int p : in_ports)
        perm.push_back(port_pos(p));
    if (perm.size() != total_ports.size())
        throw AqftError("internal: open ports unaccounted for");
    total = total.permuted(perm);

    // compose out-circle projections
    LinearMap result;
    std::vector<int> out_order, in_order; // circle indices in current leg order
    {
        std::vector<IndexSpace> raw_outs;
        for (std::size_t i = 0; i < out_ports.size(); ++i)
            raw_outs.push_back(total.spaces()[i]);
        LinearMap lm{raw_outs, ins, total};
        if (!out_circle_span.empty()) {
            LinearMap projall = circles[out_circle_span[0].first].proj;
            for (std::size_t i = 1; i < out_circle_span.size(); ++i)
                projall = tensor_of(projall, circles[out_circle_span[i].first].proj);
            // relabel raw outs to the projector's inputs (they match by construction)
            LinearMap lm2{projall.ins, ins, lm.t};
            result = compose(projall, lm2);
        } else {
            result = lm;
        }
        for (auto [ci, span] : out_circle_span)
            out_order.push_back(ci);
        for (std::size_t ci = 0; ci < c.boundary.size(); ++ci)
            if (!c.boundary[ci].outgoing && !comp_zero[circles[ci].comp])
                in_order.push_back(static_cast<int>(ci));
    }

    // zero-area cylinder components act as identities between their circles
    for (int comp = 0; comp < ncomp; ++comp) {
        if (!comp_zero[comp])
            continue;
        int cin = -1, cout = -1;
        for (std::size_t ci = 0; ci < c.boundary.size(); ++ci)
            if (circles[ci].comp == comp)
                (c.boundary[ci].outgoing ? cout : cin) = static_cast<int>(ci);
        if (cin < 0 || cout < 0)
            throw AqftError("internal: zero-area component without circle pair");
        LinearMap idz{{circles[cout].space}, {circles[cin].space},
                      identity_map({circles[cin].space}).t};
        result = tensor_of(result, idz);
        out_order.push_back(cout);
        in_order.push_back(cin);
    }

    // sort the legs by circle index
    {
        std::vector<int> oidx(out_order.size()), iidx(in_order.size());
        std::iota(oidx.begin(), oidx.end(), 0);
        std::iota(iidx.begin(), iidx.end(), 0);
        std::sort(oidx.begin(), oidx.end(),
                  [&](int a, int b) { return out_order[a] < out_order[b]; });
        std::sort(iidx.begin(), iidx.end(),
                  [&](int a, int b) { return in_order[a] < in_order[b]; });
        std::vector<int> perm;
        std::vector<IndexSpace> outs2, ins2;
        for (int i : oidx) {
            perm.push_back(i);
            outs2.push_back(result.outs[i]);
        }
        int no = static_cast<int>(out_order.size());
        for (int i : iidx) {
            perm.push_back(no + i);
            ins2.push_back(result.ins[i]);
        }
        result = LinearMap{outs2, ins2, result.t.permuted(perm)};
    }

    return result;
}

LinearMap evaluate(const PlcwComplex& c, const StateSumData& d)
{
    for (const auto& f : c.faces)
        if (f.defect)
            throw AqftError("evaluate: complex carries defects; use evaluate_defect");
    DefectStateSumData dd = defect_data(d, {});
    return evaluate_defect(c, dd);
}

ConditionReport check_defect_conditions(const DefectStateSumData& d, const std::string& lbl,
                                        const std::vector<double>& params, double tol)
{
    ConditionReport rep;
    rep.tol = tol;
    auto bump = [&](const std::string& k, double v) {
        auto& s = rep.defects[k];
        s = std::max(s, v);
    };
    const DefectLabelData& L = d.label(lbl);
    for (double p : params) {
        double h = p / 2;
        // defect gluing: contract X of Wx(n1,m1) with Xbar of Wx(n2,m2)
        for (auto [n1, m1, n2, m2] :
             std::vector<std::array<int, 4>>{{0, 0, 1, 1}, {1, 0, 0, 1}}) {
            Tensor wa = d.Wx(lbl, n1, m1, h, h, h);
            Tensor wb = d.Wx(lbl, n2, m2, h, h, h);
            LinearMap bx = d.betax(lbl, h, h, h);
            // wa legs: [Xbar, t x n1, X, s x m1]; X at index n1+1
            Tensor half = contract(wa, bx.t, {{n1 + 1, 0}}); // [Xbar, t_a.., s_a.., slotXbar]
            Tensor join = contract(half, wb, {{half.rank() - 1, 0}});
            // join legs: [Xbar, t_a(n1), s_a(m1), t_b(n2), X, s_b(m2)]
            // reorder to [Xbar, t_a, t_b, X, s_b, s_a]
            std::vector<int> perm;
            perm.push_back(0);
            for (int i = 0; i < n1; ++i)
                perm.push_back(1 + i);
            for (int i = 0; i < n2; ++i)
                perm.push_back(1 + n1 + m1 + i);
            perm.push_back(1 + n1 + m1 + n2);
            for (int i = 0; i < m2; ++i)
                perm.push_back(1 + n1 + m1 + n2 + 1 + i);
            for (int i = 0; i < m1; ++i)
                perm.push_back(1 + n1 + i);
            Tensor got = join.permuted(perm);
            bump("defect_glue", max_abs_diff(got, d.Wx(lbl, n1 + n2, m1 + m2, 3 * h, 3 * h, 3 * h)));
        }
        // mixed gluing on the t-side: contract a t-leg with a plain plaquette leg
        {
            const StateSumData& Pt = d.phase(L.phase_t);
            Tensor wx = d.Wx(lbl, 1, 0, h, h, h);
            Tensor wp = Pt.W(2, h);
            LinearMap bt = Pt.beta(h);
            Tensor half = contract(wx, bt.t, {{1, 0}});          // [Xbar, X, slot]
            Tensor join = contract(half, wp, {{2, 0}});          // [Xbar, X, t_new]
            Tensor got = join.permuted({0, 2, 1});               // [Xbar, t, X]
            bump("mixed_glue_t", max_abs_diff(got, d.Wx(lbl, 1, 0, 3 * h, h, h)));
        }
        {
            const StateSumData& Ps = d.phase(L.phase_s);
            Tensor wx = d.Wx(lbl, 0, 1, h, h, h);
            Tensor wp = Ps.W(2, h);
            LinearMap bs = Ps.beta(h);
            Tensor half = contract(wx, bs.t, {{2, 0}});          // [Xbar, X, slot]
            Tensor join = contract(half, wp, {{2, 0}});          // [Xbar, X, s_new]
            bump("mixed_glue_s", max_abs_diff(join, d.Wx(lbl, 0, 1, h, h, 3 * h)));
        }
        // zeta transport between the X and Xbar legs of the copairing
        {
            Tensor w = d.Wx(lbl, 0, 0, h, h, h); // [Xbar, X]
            Tensor a = apply_to_leg(w, d.zetax(lbl, +1, h, h, h), 1);
            Tensor b = apply_to_leg(w, d.zetax(lbl, -1, h, h, h), 0);
            bump("zetax_transport", max_abs_diff(a, b));
        }
        // Q_{0,0,0} = id
        bump("q_identity", sup_distance(L.pair.U.Q(0, 0, 0), identity_map({L.pair.U.carrier})));
    }
    // E-limit Cauchy
    std::vector<DefectPoint> single{{lbl, +1}};
    double c12 = sup_distance(d.E(single, 1e-3), d.E(single, 1e-4));
    double c23 = sup_distance(d.E(single, 1e-4), d.E(single, 1e-5));
    bump("e_limit_cauchy", c23 > 0.5 * c12 + 1e-12 ? c23 : 0.0);
    bump("e0_idempotent", [&] {
        LinearMap e0 = d.E(single, 0.0);
        return sup_distance(compose(e0, e0), e0);
    }());
    return rep;
}

} // namespace aqft
