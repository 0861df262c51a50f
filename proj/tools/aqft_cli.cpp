// aqft: evaluate area-dependent 2d QFTs from the command line.
//
// Subcommands: eval, partition, wilson, twist, zeta, check, moves, fuse.
// Exit codes: 0 ok, 1 check failure, 2 usage/parse error.

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "aqft/defect.hpp"
#include "aqft/docio.hpp"
#include "aqft/yangmills.hpp"

using namespace aqft;

namespace {

struct Options {
    std::string group = "su2";
    std::string group_file;
    int trunc = 4;
    double tol = 1e-9;
    std::string format = "pretty";
    std::uint64_t seed = 1;
};

GroupData load_group(const Options& o)
{
    if (!o.group_file.empty()) {
        std::ifstream in(o.group_file);
        if (!in)
            throw AqftError("cannot open group table '" + o.group_file + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_group_table(ss.str());
    }
    return builtin_group(o.group, o.trunc);
}

void add_common(CLI::App* cmd, Options& o)
{
    cmd->add_option("--group", o.group, "group preset: su2, u1, cyclic:<n>, s3");
    cmd->add_option("--group-file", o.group_file, "custom irrep table (JSON)");
    cmd->add_option("--trunc", o.trunc, "truncation (su2: max dim; u1: max |charge|)");
    cmd->add_option("--tol", o.tol, "tolerance for checks");
    cmd->add_option("--format", o.format, "csv or pretty");
    cmd->add_option("--seed", o.seed, "random seed");
}

std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(std::stod(item));
    return out;
}

/// builds the defect data needed by the labels appearing in a complex
DefectStateSumData doc_defect_data(const GroupData& g, const RfaPtr& A, const StateSumData& d,
                                   const PlcwComplex& c)
{
    std::map<std::string, DualPair> pairs;
    for (const auto& ln : c.lines) {
        if (pairs.count(ln.label))
            continue;
        if (ln.label.rfind("wilson:", 0) == 0) {
            pairs.emplace(ln.label, wilson_pair(g, ln.label.substr(7), A));
        } else if (ln.label.rfind("twist:", 0) == 0) {
            pairs.emplace(ln.label, twisted_pair(A, automorphism_map(g, A, ln.label.substr(6))));
        } else {
            throw AqftError("unknown defect label '" + ln.label +
                            "' (expected wilson:<irrep> or twist:<aut>)");
        }
    }
    return defect_data(d, std::move(pairs));
}

void print_map(const LinearMap& m, const std::string& format, const GroupData* g)
{
    auto tag = [&](const IndexSpace& s, int i) {
        if (i < static_cast<int>(s.tags.size()))
            return s.tags[i];
        if (g && i < static_cast<int>(g->irreps.size()))
            return g->irreps[i].label;
        return std::to_string(i);
    };
    if (format == "csv")
        std::printf("out,in,re,im\n");
    for (const auto& [k, v] : m.t.entries()) {
        auto idx = m.t.unpack(k);
        std::string outs, ins;
        for (std::size_t i = 0; i < m.outs.size(); ++i)
            outs += (i ? "|" : "") + tag(m.outs[i], idx[i]);
        for (std::size_t i = 0; i < m.ins.size(); ++i)
            ins += (i ? "|" : "") + tag(m.ins[i], idx[m.outs.size() + i]);
        if (outs.empty())
            outs = "-";
        if (ins.empty())
            ins = "-";
        if (format == "csv")
            std::printf("%s,%s,%.12e,%.12e\n", outs.c_str(), ins.c_str(), v.real(), v.imag());
        else
            std::printf("  (%s <- %s) = %.12g%+.12gi\n", outs.c_str(), ins.c_str(), v.real(),
                        v.imag());
    }
}

int cmd_partition(const Options& o, int genus, const std::string& areas_csv)
{
    GroupData g = load_group(o);
    std::vector<double> areas = parse_list(areas_csv);
    if (o.format == "csv")
        std::printf("group,genus,b_in,b_out,area,trunc,re,im,tail\n");
    for (double a : areas) {
        Amplitude am = amplitude(g, genus, 0, 0, a);
        cplx v = am.value.get({});
        if (o.format == "csv")
            std::printf("%s,%d,0,0,%.12g,%d,%.12e,%.12e,%.3e\n", g.name.c_str(), genus, a,
                        o.trunc, v.real(), v.imag(), am.tail_bound);
        else
            std::printf("Z(genus %d, area %g) = %.7f  (truncation tail <= %.2e)\n", genus, a,
                        v.real(), am.tail_bound);
    }
    return 0;
}

int cmd_eval(const Options& o, const std::string& docfile)
{
    std::stringstream ss;
    if (docfile == "-") {
        ss << std::cin.rdbuf();
    } else {
        std::ifstream in(docfile);
        if (!in)
            throw AqftError("cannot open document '" + docfile + "'");
        ss << in.rdbuf();
    }
    BordismDoc doc = parse_bordism(ss.str());
    Options o2 = o;
    if (doc.group)
        o2.group = *doc.group;
    o2.trunc = doc.trunc;
    GroupData g = load_group(o2);
    RfaPtr A = block_rfa(g);
    StateSumData d = data_from_rfa(A);
    DefectStateSumData dd = doc_defect_data(g, A, d, doc.complex);
    LinearMap z = evaluate_defect(doc.complex, dd);
    if (o.format != "csv")
        std::printf("amplitude (%zu in, %zu out):\n", z.ins.size(), z.outs.size());
    print_map(z, o.format, &g);
    return 0;
}

int cmd_wilson(const Options& o, const std::string& config, const std::string& V, double a,
               double b, double len, bool crosscheck)
{
    GroupData g = load_group(o);
    if (config == "cylinder") {
        LinearMap ref = wilson_cylinder(g, V, a, b);
        if (o.format != "csv")
            std::printf("Wilson cylinder V=%s, areas (%g, %g):\n", V.c_str(), a, b);
        print_map(ref, o.format, &g);
        if (crosscheck) {
            RfaPtr A = block_rfa(g);
            StateSumData d = data_from_rfa(A);
            auto dd = defect_data(d, {{"wilson:" + V, wilson_pair(g, V, A)}});
            PlcwComplex c = defect_cylinder_loops({"wilson:" + V}, {rat_of(a), rat_of(b)},
                                                  rat_of(len));
            LinearMap z = evaluate_defect(c, dd);
            double dev = sup_distance(z, LinearMap{{}, ref.ins, ref.t});
            std::printf("state-sum cross-check deviation: %.3e\n", dev);
            return dev <= o.tol ? 0 : 1;
        }
        return 0;
    }
    if (config == "torus") {
        WilsonSurface s;
        s.components = {{0, a + b}};
        s.loops = {{V, 0, 0}};
        cplx v = wilson_closed(g, s);
        std::printf("torus with loop V=%s, area %g: %.12g\n", V.c_str(), a + b, v.real());
        return 0;
    }
    if (config == "sphere") {
        WilsonSurface s;
        s.components = {{1, a}, {1, b}};
        s.loops = {{V, 0, 1}};
        cplx v = wilson_closed(g, s);
        std::printf("sphere with contractible loop V=%s, areas (%g, %g): %.12g\n", V.c_str(), a,
                    b, v.real());
        if (crosscheck) {
            RfaPtr A = block_rfa(g);
            StateSumData d = data_from_rfa(A);
            auto dd = defect_data(d, {{"wilson:" + V, wilson_pair(g, V, A)}});
            PlcwComplex c = sphere_with_loop("wilson:" + V, rat_of(a), rat_of(b), rat_of(len));
            LinearMap z = evaluate_defect(c, dd);
            double dev = std::abs(z.t.get({}) - v);
            std::printf("state-sum cross-check deviation: %.3e\n", dev);
            return dev <= o.tol ? 0 : 1;
        }
        return 0;
    }
    throw AqftError("unknown wilson config '" + config + "'");
}

int cmd_twist(const Options& o, const std::string& aut, double area, bool crosscheck)
{
    GroupData g = load_group(o);
    cplx v = twist_torus(g, aut, area);
    std::printf("torus with twist defect %s, area %g: %.12g\n", aut.c_str(), area, v.real());
    if (crosscheck) {
        RfaPtr A = block_rfa(g);
        StateSumData d = data_from_rfa(A);
        auto dd = defect_data(d, {{"twist:" + aut, twisted_pair(A, automorphism_map(g, A, aut))}});
        PlcwComplex c = torus_with_loop("twist:" + aut, rat_of(area / 2), rat_of(area / 2),
                                        Rat{1});
        LinearMap z = evaluate_defect(c, dd);
        double dev = std::abs(z.t.get({}) - v);
        std::printf("state-sum cross-check deviation: %.3e\n", dev);
        return dev <= o.tol ? 0 : 1;
    }
    return 0;
}

int cmd_zeta(const Options& o, double exponent)
{
    GroupData g = load_group(o);
    auto [v, err] = witten_zeta(g, exponent, static_cast<std::size_t>(o.trunc));
    if (o.format == "csv") {
        std::printf("group,exponent,trunc,value,tail\n");
        std::printf("%s,%.12g,%d,%.12e,%.3e\n", g.name.c_str(), exponent, o.trunc, v, err);
    } else {
        std::printf("zeta_%s(%g) = %.10f  (tail estimate %.2e at truncation %d)\n",
                    g.name.c_str(), exponent, v, err, o.trunc);
    }
    return 0;
}

int cmd_check(const Options& o, const std::string& what)
{
    GroupData g = load_group(o);
    RfaPtr A = block_rfa(g);
    std::vector<std::array<double, 2>> splits{{0.3, 0.5}, {0.7, 0.2}, {1.0, 1.0}};
    if (what == "rfa") {
        AxiomReport rep = check_axioms(*A, splits, o.tol);
        std::printf("%s\n", rep.summary().c_str());
        return rep.ok() ? 0 : 1;
    }
    StateSumData d = data_from_rfa(A);
    if (what == "data") {
        ConditionReport rep = check_conditions(view(d), {0.4, 1.0}, o.tol);
        std::printf("%s\n", rep.summary().c_str());
        ConditionReport hrep = check_hermitian_data(view(d), {0.7}, o.tol);
        std::printf("hermitian: %s\n", hrep.summary().c_str());
        return rep.ok() && hrep.ok() ? 0 : 1;
    }
    if (what == "bimodule" || what == "dualpair") {
        // a representative Wilson pair: the first nontrivial irrep
        std::string V = g.irreps.size() > 1 ? g.irreps[1].label : g.irreps[0].label;
        DualPair p = wilson_pair(g, V, A);
        if (what == "bimodule") {
            BimoduleReport rep = check_bimodule(p.U, {0.5, 1.0}, o.tol);
            std::printf("bimodule X[wilson:%s]: %s\n", V.c_str(), rep.ok() ? "PASS" : "FAIL");
            for (const auto& [k, v] : rep.defects)
                std::printf("  %s: %g\n", k.c_str(), v);
            return rep.ok() ? 0 : 1;
        }
        BimoduleReport rep = check_dual_pair(p, {0.6, 1.2}, o.tol);
        std::printf("dual pair (X, Xbar)[wilson:%s]: %s\n", V.c_str(), rep.ok() ? "PASS" : "FAIL");
        for (const auto& [k, v] : rep.defects)
            std::printf("  %s: %g\n", k.c_str(), v);
        return rep.ok() ? 0 : 1;
    }
    throw AqftError("unknown check target '" + what + "' (rfa|data|bimodule|dualpair)");
}

int cmd_moves(const Options& o, int fuzz)
{
    GroupData g = load_group(o);
    StateSumData d = data_from_rfa(block_rfa(g));
    std::mt19937_64 rng(o.seed);
    double worst = 0;
    int performed = 0;
    while (performed < fuzz) {
        int genus = static_cast<int>(rng() % 2);
        int bi = static_cast<int>(rng() % 2), bo = static_cast<int>(rng() % 2);
        PlcwComplex c = normal_form(genus, bi, bo, Rat{3, 2});
        int burn = static_cast<int>(rng() % 3);
        for (int t = 0; t < burn; ++t) {
            auto ms = applicable_moves(c);
            if (ms.empty())
                break;
            c = apply_move(c, ms[rng() % ms.size()]);
        }
        auto ms = applicable_moves(c);
        if (ms.empty())
            continue;
        auto m = ms[rng() % ms.size()];
        PlcwComplex c2 = apply_move(c, m);
        double dev = sup_distance(evaluate(c, d), evaluate(c2, d));
        worst = std::max(worst, dev);
        ++performed;
        if (o.format == "csv")
            std::printf("%d,%d,%.3e\n", performed, static_cast<int>(m.kind), dev);
    }
    std::printf("%d move-invariance comparisons, worst deviation %.3e (tol %.1e)\n", performed,
                worst, o.tol);
    return worst <= o.tol ? 0 : 1;
}

int cmd_fuse(const Options& o, const std::string& V, const std::string& W, double a, double b,
             const std::string& areas_csv, bool statesum)
{
    GroupData g = load_group(o);
    std::vector<double> mids = parse_list(areas_csv);
    std::vector<double> dev = fusion_deviation(g, V, W, a, b, mids);
    std::vector<double> dev_ss(mids.size(), 0.0);
    if (statesum) {
        RfaPtr A = block_rfa(g);
        StateSumData d = data_from_rfa(A);
        std::map<std::string, DualPair> pairs;
        pairs.emplace("wilson:" + V, wilson_pair(g, V, A));
        if (W != V)
            pairs.emplace("wilson:" + W, wilson_pair(g, W, A));
        auto dd = defect_data(d, std::move(pairs));
        Tensor target;
        {
            IndexSpace zs = d.zspace();
            Tensor acc({zs, zs});
            for (const auto& M : g.irreps) {
                int nm = g.fusion(V, W, M.label);
                if (!nm)
                    continue;
                acc = tensor_sum(acc, wilson_cylinder(g, M.label, a, b).t, 1.0,
                                 static_cast<double>(nm));
            }
            target = acc;
        }
        for (std::size_t i = 0; i < mids.size(); ++i) {
            PlcwComplex c = defect_cylinder_loops({"wilson:" + V, "wilson:" + W},
                                                  {rat_of(a), rat_of(mids[i]), rat_of(b)},
                                                  Rat{1});
            LinearMap z = evaluate_defect(c, dd);
            dev_ss[i] = max_abs_diff(z.t, target);
        }
    }
    if (o.format == "csv")
        std::printf("mid_area,deviation%s\n", statesum ? ",statesum_deviation" : "");
    for (std::size_t i = 0; i < mids.size(); ++i) {
        if (o.format == "csv") {
            if (statesum)
                std::printf("%.6e,%.12e,%.12e\n", mids[i], dev[i], dev_ss[i]);
            else
                std::printf("%.6e,%.12e\n", mids[i], dev[i]);
        } else {
            std::printf("mid area %.1e: deviation from fused defect %.6e%s", mids[i], dev[i],
                        statesum ? " " : "\n");
            if (statesum)
                std::printf("(state-sum route %.6e)\n", dev_ss[i]);
        }
    }
    for (std::size_t i = 1; i < dev.size(); ++i)
        if (dev[i] > dev[i - 1] + 1e-15)
            return 1;
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"area-dependent 2d QFT engine"};
    app.require_subcommand(1);
    Options o;

    auto* partition = app.add_subcommand("partition", "closed-surface amplitude sweeps");
    int genus = 2;
    std::string areas = "0";
    partition->add_option("--genus", genus, "genus of the closed surface");
    partition->add_option("--area", areas, "comma-separated area list");
    add_common(partition, o);

    auto* eval = app.add_subcommand("eval", "evaluate a bordism document");
    std::string docfile;
    eval->add_option("--doc", docfile, "document file ('-' for stdin)")->required();
    add_common(eval, o);

    auto* wilson = app.add_subcommand("wilson", "Wilson-line configurations");
    std::string config = "cylinder", V = "2", W = "2";
    double a = 1.0, b = 0.5, len = 1.0;
    bool crosscheck = false;
    wilson->add_option("--config", config, "cylinder | torus | sphere");
    wilson->add_option("--V", V, "Wilson irrep label");
    wilson->add_option("--a", a, "first area");
    wilson->add_option("--b", b, "second area");
    wilson->add_option("--length", len, "defect length");
    wilson->add_flag("--check", crosscheck, "cross-check against the state-sum evaluator");
    add_common(wilson, o);

    auto* twist = app.add_subcommand("twist", "twist-defect amplitudes");
    std::string aut = "conj";
    double area = 2.0;
    twist->add_option("--aut", aut, "automorphism name");
    twist->add_option("--area", area, "torus area");
    twist->add_flag("--check", crosscheck, "cross-check against the state-sum evaluator");
    add_common(twist, o);

    auto* zeta = app.add_subcommand("zeta", "Witten zeta partial sums");
    double exponent = 2.0;
    zeta->add_option("--exponent", exponent, "exponent s of sum dim^-s");
    add_common(zeta, o);

    auto* check = app.add_subcommand("check", "axiom / condition / bimodule checks");
    std::string what = "rfa";
    check->add_option("what", what, "rfa | data | bimodule | dualpair");
    add_common(check, o);

    auto* moves = app.add_subcommand("moves", "fuzz move invariance of the state sum");
    int fuzz = 50;
    moves->add_option("--fuzz", fuzz, "number of (complex, move) comparisons");
    add_common(moves, o);

    auto* fuse = app.add_subcommand("fuse", "parallel-defect collapse study");
    std::string mid_areas = "1e-1,1e-2,1e-3,1e-4";
    bool statesum = false;
    fuse->add_option("--V", V, "first Wilson label");
    fuse->add_option("--W", W, "second Wilson label");
    fuse->add_option("--a", a, "outer area (first boundary)");
    fuse->add_option("--b", b, "outer area (second boundary)");
    fuse->add_option("--areas", mid_areas, "intermediate areas, comma separated");
    fuse->add_flag("--statesum", statesum, "drive the literal state-sum evaluator");
    add_common(fuse, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (partition->parsed())
            return cmd_partition(o, genus, areas);
        if (eval->parsed())
            return cmd_eval(o, docfile);
        if (wilson->parsed())
            return cmd_wilson(o, config, V, a, b, len, crosscheck);
        if (twist->parsed())
            return cmd_twist(o, aut, area, crosscheck);
        if (zeta->parsed())
            return cmd_zeta(o, exponent);
        if (check->parsed())
            return cmd_check(o, what);
        if (moves->parsed())
            return cmd_moves(o, fuzz);
        if (fuse->parsed())
            return cmd_fuse(o, V, W, a, b, mid_areas, statesum);
    } catch (const AqftError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
