#include "aqft/docio.hpp"

#include <cmath>
#include <memory>

#include <json.hpp>

namespace aqft {

using nlohmann::json;

Rat rat_of(double x)
{
    // exact dyadic-or-decimal reconstruction good enough for document areas
    long long den = 1;
    while (std::abs(x * den - std::llround(x * den)) > 1e-12 && den < (1LL << 40))
        den *= 2;
    return Rat{std::llround(x * den), den};
}

namespace {

[[noreturn]] void doc_error(const std::string& where, const std::string& what)
{
    throw AqftError("bordism document: " + where + ": " + what);
}

double need_number(const json& j, const std::string& key, const std::string& where)
{
    if (!j.contains(key) || !j[key].is_number())
        doc_error(where, "missing numeric field '" + key + "'");
    return j[key].get<double>();
}

PlcwComplex from_plcw_stanza(const json& p)
{
    PlcwComplex c;
    if (p.contains("vertices")) {
        if (p["vertices"].is_number_integer()) {
            c.vertices.resize(p["vertices"].get<int>());
        } else if (p["vertices"].is_array()) {
            for (const auto& v : p["vertices"])
                c.vertices.push_back({rat_of(v.value("area", 0.0))});
        } else {
            doc_error("plcw.vertices", "expected count or list");
        }
    }
    if (!p.contains("edges") || !p["edges"].is_array())
        doc_error("plcw.edges", "missing edge list");
    for (const auto& e : p["edges"]) {
        PlcwEdge rec;
        rec.v0 = static_cast<int>(need_number(e, "from", "plcw.edges"));
        rec.v1 = static_cast<int>(need_number(e, "to", "plcw.edges"));
        double area = e.value("area", 0.0);
        if (area < 0)
            doc_error("plcw.edges", "negative area");
        rec.area = rat_of(area);
        c.edges.push_back(rec);
    }
    if (!p.contains("faces") || !p["faces"].is_array())
        doc_error("plcw.faces", "missing face list");
    for (const auto& f : p["faces"]) {
        PlcwFace rec;
        double area = f.value("area", 0.0);
        if (area < 0)
            doc_error("plcw.faces", "negative area");
        rec.area = rat_of(area);
        if (!f.contains("sides") || !f["sides"].is_array())
            doc_error("plcw.faces", "missing sides");
        for (const auto& s : f["sides"]) {
            PlcwSide side;
            side.edge = static_cast<int>(need_number(s, "edge", "plcw.faces.sides"));
            side.along = s.value("dir", 1) >= 0;
            rec.sides.push_back(side);
        }
        c.faces.push_back(rec);
    }
    if (p.contains("boundary")) {
        for (const auto& b : p["boundary"]) {
            BoundaryCircle circ;
            circ.outgoing = b.value("out", false);
            if (!b.contains("edges") || !b["edges"].is_array())
                doc_error("plcw.boundary", "missing edges");
            for (const auto& e : b["edges"])
                circ.edges.push_back(e.get<int>());
            c.boundary.push_back(circ);
        }
    }
    return c;
}

} // namespace

BordismDoc parse_bordism(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw AqftError(std::string("bordism document: JSON parse error: ") + e.what());
    }
    BordismDoc doc;
    if (j.contains("group"))
        doc.group = j["group"].get<std::string>();
    doc.trunc = j.value("trunc", 4);

    if (j.contains("plcw")) {
        doc.complex = from_plcw_stanza(j["plcw"]);
    } else if (j.contains("surface")) {
        const json& s = j["surface"];
        int genus = s.value("genus", 0);
        int b_in = s.value("in", 0);
        int b_out = s.value("out", 0);
        double area = need_number(s, "area", "surface");
        if (area <= 0)
            doc_error("surface.area", "area must be positive");
        if (genus < 0 || b_in < 0 || b_out < 0)
            doc_error("surface", "negative genus or boundary count");

        if (j.contains("defects")) {
            const json& ds = j["defects"];
            if (!ds.is_array() || ds.empty())
                doc_error("defects", "expected a nonempty list");
            std::string kind = ds[0].value("kind", "noncontractible");
            if (kind == "through") {
                if (ds.size() != 1 || genus != 0 || b_in != 1 || b_out != 1)
                    doc_error("defects", "'through' needs the in-out cylinder");
                const auto& d0 = ds[0];
                doc.complex = defect_cylinder_through(
                    d0.value("label", std::string{}), rat_of(need_number(d0, "area_left", "defects")),
                    rat_of(need_number(d0, "area_right", "defects")),
                    rat_of(d0.value("length", 1.0)));
            } else if (kind == "contractible") {
                if (ds.size() != 1 || genus != 0 || b_in + b_out != 0)
                    doc_error("defects", "'contractible' needs the closed sphere");
                const auto& d0 = ds[0];
                doc.complex = sphere_with_loop(d0.value("label", std::string{}),
                                               rat_of(need_number(d0, "area_left", "defects")),
                                               rat_of(need_number(d0, "area_right", "defects")),
                                               rat_of(d0.value("length", 1.0)));
            } else if (kind == "noncontractible" && genus == 1 && b_in + b_out == 0) {
                if (ds.size() != 1)
                    doc_error("defects", "one non-contractible loop on the torus");
                const auto& d0 = ds[0];
                doc.complex = torus_with_loop(d0.value("label", std::string{}),
                                              rat_of(need_number(d0, "area_left", "defects")),
                                              rat_of(need_number(d0, "area_right", "defects")),
                                              rat_of(d0.value("length", 1.0)));
            } else if (kind == "noncontractible" && genus == 0 && b_in == 2 && b_out == 0) {
                std::vector<std::string> labels;
                std::vector<Rat> areas;
                for (const auto& d0 : ds)
                    labels.push_back(d0.value("label", std::string{}));
                if (!j.contains("bands") || j["bands"].size() != ds.size() + 1)
                    doc_error("bands", "need one band area per gap (loops + 1 entries)");
                for (const auto& b : j["bands"])
                    areas.push_back(rat_of(b.get<double>()));
                doc.complex =
                    defect_cylinder_loops(labels, areas, rat_of(ds[0].value("length", 1.0)));
            } else {
                doc_error("defects", "unsupported defect configuration");
            }
        } else {
            doc.complex = normal_form(genus, b_in, b_out, rat_of(area));
        }
    } else {
        doc_error("document", "expected 'surface' or 'plcw'");
    }

    auto rep = validate(doc.complex);
    if (!rep.ok())
        throw AqftError("bordism document: validation failed: " + rep.violations.front());
    return doc;
}

GroupData parse_group_table(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw AqftError(std::string("group table: JSON parse error: ") + e.what());
    }
    GroupData g;
    g.name = j.value("name", "custom");
    if (!j.contains("irreps") || !j["irreps"].is_array() || j["irreps"].empty())
        throw AqftError("group table: missing irreps");
    for (const auto& i : j["irreps"]) {
        Irrep ir;
        ir.label = i.at("label").get<std::string>();
        ir.dim = i.value("dim", 1);
        ir.sigma = i.value("sigma", 0.0);
        g.irreps.push_back(ir);
    }
    g.trivial = j.value("trivial", g.irreps.front().label);

    auto fus = std::make_shared<std::map<std::string, int>>();
    if (j.contains("fusion"))
        for (const auto& f : j["fusion"]) {
            std::string key = f.at(0).get<std::string>() + "," + f.at(1).get<std::string>() + "," +
                              f.at(2).get<std::string>();
            (*fus)[key] = f.at(3).get<int>();
        }
    g.fusion = [fus](const std::string& u, const std::string& v, const std::string& w) {
        auto it = fus->find(u + "," + v + "," + w);
        return it == fus->end() ? 0 : it->second;
    };
    auto dual = std::make_shared<std::map<std::string, std::string>>();
    if (j.contains("dual"))
        for (auto it = j["dual"].begin(); it != j["dual"].end(); ++it)
            (*dual)[it.key()] = it.value().get<std::string>();
    g.dual = [dual](const std::string& u) {
        auto it = dual->find(u);
        return it == dual->end() ? u : it->second;
    };
    if (j.contains("automorphisms"))
        for (auto it = j["automorphisms"].begin(); it != j["automorphisms"].end(); ++it) {
            auto amap = std::make_shared<std::map<std::string, std::string>>();
            for (auto e = it.value().begin(); e != it.value().end(); ++e)
                (*amap)[e.key()] = e.value().get<std::string>();
            g.automorphisms[it.key()] = [amap](const std::string& u) {
                auto f = amap->find(u);
                return f == amap->end() ? u : f->second;
            };
        }
    auto irreps = g.irreps;
    g.enumerate = [irreps](std::size_t k) -> std::optional<Irrep> {
        if (k >= irreps.size())
            return std::nullopt;
        return irreps[k];
    };
    g.validate();
    return g;
}

} // namespace aqft
