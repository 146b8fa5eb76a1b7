#include "pfd/circuit_model.hpp"

#include "pfd/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace pfd {

using nlohmann::json;

namespace {

struct VaractorCount {
    int total = 0;
    int behind_parallel = 0;
};

void count_into(const Network& n, bool under_parallel, VaractorCount& acc) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, VaractorStatic>) {
                ++acc.total;
                if (under_parallel) ++acc.behind_parallel;
            } else if constexpr (std::is_same_v<T, Combinator>) {
                const bool par = under_parallel || node.kind == CombinatorKind::parallel;
                for (const auto& child : node.items) count_into(child, par, acc);
            }
        },
        n.node);
}

}  // namespace

int count_varactors(const Network& network) {
    VaractorCount acc;
    count_into(network, false, acc);
    return acc.total;
}

bool varactor_in_series_path(const Network& network) {
    VaractorCount acc;
    count_into(network, false, acc);
    return acc.total == 1 && acc.behind_parallel == 0;
}

const Element* find_role(const Network& network, ElementRole role) {
    if (const auto* e = std::get_if<Element>(&network.node)) {
        return (e->kind == ElementKind::resistor && e->role == role) ? e : nullptr;
    }
    if (const auto* c = std::get_if<Combinator>(&network.node)) {
        for (const auto& child : c->items) {
            if (const auto* hit = find_role(child, role)) return hit;
        }
    }
    return nullptr;
}

PfdDesign make_canonical_design(const CanonicalSpec& spec, const VaractorModel& varactor,
                                double f_out, double r_source, double r_load) {
    const auto q = spec.inductor_q;
    PfdDesign d;
    d.z1 = Network::series({
        Network::of(Element::resistor(r_source, ElementRole::source)),
        Network::parallel({Network::of(Element::inductor(spec.l1, q)),
                           Network::of(Element::capacitor(spec.c1))}),
    });

    auto tank2 = Network::parallel({Network::of(Element::inductor(spec.l2, q)),
                                    Network::of(Element::capacitor(spec.c2))});
    auto load = Network::of(Element::resistor(r_load, ElementRole::load));
    if (spec.transformer) {
        d.z2 = Network::series({
            std::move(tank2),
            Network::of(Element::capacitor(spec.transformer->c_match)),
            Network::parallel({Network::of(Element::inductor(spec.transformer->l_match, q)),
                               std::move(load)}),
        });
    } else {
        d.z2 = Network::series({std::move(tank2), std::move(load)});
    }

    d.z3 = Network::series({Network::of(Element::inductor(spec.l3, q)), Network::varactor()});
    d.varactor = varactor;
    d.f_out = f_out;
    d.r_source = r_source;
    d.r_load = r_load;
    d.canonical = spec;
    return d;
}

// ---------------------------------------------------------------------------
// Design-file reader
// ---------------------------------------------------------------------------

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view doc, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t stop = std::min(byte == 0 ? 0 : byte - 1, doc.size());
    for (std::size_t i = 0; i < stop; ++i) {
        if (doc[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

class Reader {
public:
    explicit Reader(std::string path) : path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw DesignError(path_.empty() ? msg : path_ + ": " + msg);
    }

    void expect_object(const json& j) const {
        if (!j.is_object()) fail("expected an object");
    }

    void allow_only(const json& j, std::initializer_list<std::string_view> keys) const {
        for (const auto& [k, v] : j.items()) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
                fail("unexpected key '" + k + "'");
            }
        }
    }

    double number(const json& j, const std::string& key) const {
        auto it = j.find(key);
        if (it == j.end()) fail("missing key '" + key + "'");
        if (!it->is_number()) fail("key '" + key + "' must be a number");
        return it->get<double>();
    }

    std::optional<double> opt_number(const json& j, const std::string& key) const {
        auto it = j.find(key);
        if (it == j.end()) return std::nullopt;
        if (!it->is_number()) fail("key '" + key + "' must be a number");
        return it->get<double>();
    }

    Reader child(const std::string& key) const {
        return Reader(path_.empty() ? key : path_ + "." + key);
    }

private:
    std::string path_;
};

Network read_node(const json& j, const Reader& r) {
    r.expect_object(j);
    auto it = j.find("kind");
    if (it == j.end() || !it->is_string()) r.fail("node needs a string 'kind'");
    const auto kind = it->get<std::string>();

    if (kind == "series" || kind == "parallel") {
        r.allow_only(j, {"kind", "items"});
        auto items = j.find("items");
        if (items == j.end() || !items->is_array()) r.fail("'" + kind + "' needs an 'items' array");
        std::vector<Network> children;
        for (std::size_t i = 0; i < items->size(); ++i) {
            children.push_back(read_node((*items)[i], r.child("items[" + std::to_string(i) + "]")));
        }
        return kind == "series" ? Network::series(std::move(children))
                                : Network::parallel(std::move(children));
    }
    if (kind == "R") {
        r.allow_only(j, {"kind", "value_ohm", "role"});
        ElementRole role = ElementRole::none;
        if (auto rt = j.find("role"); rt != j.end()) {
            if (!rt->is_string()) r.fail("'role' must be a string");
            const auto s = rt->get<std::string>();
            if (s == "source") role = ElementRole::source;
            else if (s == "load") role = ElementRole::load;
            else r.fail("unknown role '" + s + "'");
        }
        return Network::of(Element::resistor(r.number(j, "value_ohm"), role));
    }
    if (kind == "L") {
        r.allow_only(j, {"kind", "value_h", "q"});
        return Network::of(Element::inductor(r.number(j, "value_h"), r.opt_number(j, "q")));
    }
    if (kind == "C") {
        r.allow_only(j, {"kind", "value_f"});
        return Network::of(Element::capacitor(r.number(j, "value_f")));
    }
    if (kind == "table") {
        r.allow_only(j, {"kind", "points"});
        auto pts = j.find("points");
        if (pts == j.end() || !pts->is_array()) r.fail("'table' needs a 'points' array");
        std::vector<TablePoint> points;
        for (const auto& p : *pts) {
            if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() ||
                !p[2].is_number()) {
                r.fail("table points must be [f_hz, re_ohm, im_ohm]");
            }
            points.push_back({p[0].get<double>(), {p[1].get<double>(), p[2].get<double>()}});
        }
        return Network::table(std::move(points));
    }
    if (kind == "varactor_static") {
        r.allow_only(j, {"kind"});
        return Network::varactor();
    }
    r.fail("unknown node kind '" + kind + "'");
}

}  // namespace

PfdDesign parse_design_unchecked(std::string_view document) {
    json root;
    try {
        root = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(document, e.byte);
        throw ParseError("syntax error at line " + std::to_string(line) + ", column " +
                             std::to_string(col) + ": " + e.what(),
                         line, col);
    }

    const Reader top("");
    top.expect_object(root);

    const Reader vr = top.child("varactor");
    auto vit = root.find("varactor");
    if (vit == root.end()) top.fail("missing key 'varactor'");
    vr.expect_object(*vit);
    vr.allow_only(*vit, {"c_dc_f", "c_d_per_v", "c_d2_per_v2", "v_bias_v"});
    VaractorModel var;
    var.c_dc = vr.number(*vit, "c_dc_f");
    var.c_d = vr.number(*vit, "c_d_per_v");
    var.c_d2 = vr.number(*vit, "c_d2_per_v2");
    var.v_bias = vr.opt_number(*vit, "v_bias_v").value_or(0.0);

    const double f_out = top.number(root, "f_out_hz");
    const double r_s = top.number(root, "source_resistance_ohm");
    const double r_l = top.number(root, "load_resistance_ohm");
    const double floor = top.opt_number(root, "noise_floor_dbm").value_or(-80.0);

    PfdDesign design;
    const bool has_topology = root.contains("topology");
    const bool has_branches = root.contains("branches");
    if (has_topology == has_branches) {
        top.fail("exactly one of 'topology' or 'branches' is required");
    }

    if (has_topology) {
        top.allow_only(root, {"f_out_hz", "source_resistance_ohm", "load_resistance_ohm",
                              "noise_floor_dbm", "varactor", "topology", "l1_h", "c1_f", "l2_h",
                              "c2_f", "l3_h", "inductor_q", "transformer"});
        const auto& t = root["topology"];
        if (!t.is_string() || t.get<std::string>() != "canonical") {
            top.fail("'topology' must be \"canonical\"");
        }
        CanonicalSpec spec;
        spec.l1 = top.number(root, "l1_h");
        spec.c1 = top.number(root, "c1_f");
        spec.l2 = top.number(root, "l2_h");
        spec.c2 = top.number(root, "c2_f");
        spec.l3 = top.number(root, "l3_h");
        spec.inductor_q = top.opt_number(root, "inductor_q");
        if (auto tr = root.find("transformer"); tr != root.end()) {
            const Reader trr = top.child("transformer");
            trr.expect_object(*tr);
            trr.allow_only(*tr, {"c_match_f", "l_match_h"});
            spec.transformer = TransformerSpec{trr.number(*tr, "c_match_f"),
                                               trr.number(*tr, "l_match_h")};
        }
        design = make_canonical_design(spec, var, f_out, r_s, r_l);
    } else {
        top.allow_only(root, {"f_out_hz", "source_resistance_ohm", "load_resistance_ohm",
                              "noise_floor_dbm", "varactor", "branches"});
        const Reader br = top.child("branches");
        const auto& b = root["branches"];
        br.expect_object(b);
        br.allow_only(b, {"z1", "z2", "z3"});
        for (const char* key : {"z1", "z2", "z3"}) {
            if (!b.contains(key)) br.fail(std::string("missing key '") + key + "'");
        }
        design.z1 = read_node(b["z1"], br.child("z1"));
        design.z2 = read_node(b["z2"], br.child("z2"));
        design.z3 = read_node(b["z3"], br.child("z3"));
        design.varactor = var;
        design.f_out = f_out;
        design.r_source = r_s;
        design.r_load = r_l;
    }
    design.noise_floor_dbm = floor;
    return design;
}

PfdDesign parse_design(std::string_view document) {
    PfdDesign design = parse_design_unchecked(document);
    for (const auto& d : validate_design(design)) {
        if (d.severity == Severity::error) {
            throw DesignError(d.where.empty() ? d.message : d.where + ": " + d.message);
        }
    }
    return design;
}

// ---------------------------------------------------------------------------
// Design-file writer
// ---------------------------------------------------------------------------

namespace {

json write_node(const Network& n) {
    return std::visit(
        [](const auto& node) -> json {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Element>) {
                json j;
                switch (node.kind) {
                    case ElementKind::resistor:
                        j = {{"kind", "R"}, {"value_ohm", node.value}};
                        if (node.role == ElementRole::source) j["role"] = "source";
                        if (node.role == ElementRole::load) j["role"] = "load";
                        break;
                    case ElementKind::inductor:
                        j = {{"kind", "L"}, {"value_h", node.value}};
                        if (node.q) j["q"] = *node.q;
                        break;
                    case ElementKind::capacitor:
                        j = {{"kind", "C"}, {"value_f", node.value}};
                        break;
                }
                return j;
            } else if constexpr (std::is_same_v<T, Combinator>) {
                json items = json::array();
                for (const auto& c : node.items) items.push_back(write_node(c));
                return {{"kind", node.kind == CombinatorKind::series ? "series" : "parallel"},
                        {"items", items}};
            } else if constexpr (std::is_same_v<T, ImpedanceTable>) {
                json pts = json::array();
                for (const auto& p : node.points) {
                    pts.push_back({p.f_hz, p.z.real(), p.z.imag()});
                }
                return {{"kind", "table"}, {"points", pts}};
            } else {
                return {{"kind", "varactor_static"}};
            }
        },
        n.node);
}

}  // namespace

std::string serialize_design(const PfdDesign& design) {
    json j;
    j["f_out_hz"] = design.f_out;
    j["source_resistance_ohm"] = design.r_source;
    j["load_resistance_ohm"] = design.r_load;
    j["noise_floor_dbm"] = design.noise_floor_dbm;
    j["varactor"] = {{"c_dc_f", design.varactor.c_dc},
                     {"c_d_per_v", design.varactor.c_d},
                     {"c_d2_per_v2", design.varactor.c_d2},
                     {"v_bias_v", design.varactor.v_bias}};
    if (design.canonical) {
        const auto& c = *design.canonical;
        j["topology"] = "canonical";
        j["l1_h"] = c.l1;
        j["c1_f"] = c.c1;
        j["l2_h"] = c.l2;
        j["c2_f"] = c.c2;
        j["l3_h"] = c.l3;
        if (c.inductor_q) j["inductor_q"] = *c.inductor_q;
        if (c.transformer) {
            j["transformer"] = {{"c_match_f", c.transformer->c_match},
                                {"l_match_h", c.transformer->l_match}};
        }
    } else {
        j["branches"] = {{"z1", write_node(design.z1)},
                         {"z2", write_node(design.z2)},
                         {"z3", write_node(design.z3)}};
    }
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

void validate_node(const Network& n, const std::string& where, std::vector<Diagnostic>& out) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Element>) {
                if (!(node.value > 0.0) || !std::isfinite(node.value)) {
                    out.push_back({Severity::error, where, "value must be positive"});
                }
                if (node.q) {
                    if (node.kind != ElementKind::inductor) {
                        out.push_back({Severity::error, where, "q is only allowed on inductors"});
                    } else if (!(*node.q > 0.0)) {
                        out.push_back({Severity::error, where, "q must be positive"});
                    } else if (*node.q < 10.0) {
                        out.push_back({Severity::warning, where, "q below 10"});
                    }
                }
            } else if constexpr (std::is_same_v<T, Combinator>) {
                if (node.items.size() < 2) {
                    out.push_back({Severity::error, where, "combinator needs at least two items"});
                }
                for (std::size_t i = 0; i < node.items.size(); ++i) {
                    validate_node(node.items[i], where + ".items[" + std::to_string(i) + "]", out);
                }
            } else if constexpr (std::is_same_v<T, ImpedanceTable>) {
                if (node.points.size() < 2) {
                    out.push_back({Severity::error, where, "table needs at least two points"});
                }
                for (std::size_t i = 0; i < node.points.size(); ++i) {
                    const auto& p = node.points[i];
                    if (!(p.f_hz > 0.0)) {
                        out.push_back({Severity::error, where, "table frequencies must be positive"});
                        break;
                    }
                    if (i > 0 && !(p.f_hz > node.points[i - 1].f_hz)) {
                        out.push_back({Severity::error, where,
                                       "table frequencies must be strictly increasing"});
                        break;
                    }
                }
            }
        },
        n.node);
}

/// Smallest value of 1 + c_d v + c_d2 v^2 over the validity window, with its location.
std::pair<double, double> window_minimum(const VaractorModel& v) {
    auto poly = [&](double x) { return 1.0 + v.c_d * x + v.c_d2 * x * x; };
    std::vector<double> xs{-kVaractorWindowV, kVaractorWindowV};
    if (v.c_d2 != 0.0) {
        const double vertex = -v.c_d / (2.0 * v.c_d2);
        if (std::abs(vertex) < kVaractorWindowV) xs.push_back(vertex);
    }
    double best_x = xs.front();
    for (double x : xs) {
        if (poly(x) < poly(best_x)) best_x = x;
    }
    return {poly(best_x), best_x};
}

}  // namespace

std::vector<Diagnostic> validate_design(const PfdDesign& design) {
    std::vector<Diagnostic> out;
    const auto& var = design.varactor;

    if (!(var.c_dc > 0.0)) {
        out.push_back({Severity::error, "varactor", "c_dc must be positive"});
    }
    if (!std::isfinite(var.c_d) || !std::isfinite(var.c_d2)) {
        out.push_back({Severity::error, "varactor", "c_d and c_d2 must be finite"});
    } else if (const auto [minimum, at] = window_minimum(var); minimum <= 0.0) {
        std::ostringstream msg;
        msg << "C(v) expansion is non-positive at v = " << at
            << " V inside the expansion validity window of +/-" << kVaractorWindowV << " V";
        out.push_back({Severity::warning, "varactor", msg.str()});
    }
    if (!(design.f_out > 0.0)) out.push_back({Severity::error, "f_out_hz", "f_out must be positive"});
    if (!(design.r_source > 0.0)) {
        out.push_back({Severity::error, "source_resistance_ohm", "r_source must be positive"});
    }
    if (!(design.r_load > 0.0)) {
        out.push_back({Severity::error, "load_resistance_ohm", "r_load must be positive"});
    }

    validate_node(design.z1, "z1", out);
    validate_node(design.z2, "z2", out);
    validate_node(design.z3, "z3", out);

    if (count_varactors(design.z1) != 0) {
        out.push_back({Severity::error, "z1", "z1 must not contain a varactor"});
    }
    if (count_varactors(design.z2) != 0) {
        out.push_back({Severity::error, "z2", "z2 must not contain a varactor"});
    }
    if (count_varactors(design.z3) != 1) {
        out.push_back({Severity::error, "z3", "z3 must contain exactly one varactor"});
    } else if (!varactor_in_series_path(design.z3)) {
        out.push_back({Severity::error, "z3",
                       "the varactor must be in series with z3, not inside a parallel combinator"});
    }

    const Element* src = find_role(design.z1, ElementRole::source);
    if (src == nullptr) {
        out.push_back({Severity::error, "z1", "z1 must contain a resistor tagged as source"});
    } else if (src->value != design.r_source) {
        out.push_back({Severity::error, "z1",
                       "source resistor value does not match source_resistance_ohm"});
    }
    const Element* load = find_role(design.z2, ElementRole::load);
    if (load == nullptr) {
        out.push_back({Severity::error, "z2", "z2 must contain a resistor tagged as load"});
    } else if (load->value != design.r_load) {
        out.push_back({Severity::error, "z2",
                       "load resistor value does not match load_resistance_ohm"});
    }
    if (!std::isfinite(design.noise_floor_dbm)) {
        out.push_back({Severity::error, "noise_floor_dbm", "noise floor must be finite"});
    }
    return out;
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
    return std::any_of(diagnostics.begin(), diagnostics.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::error; });
}

}  // namespace pfd
