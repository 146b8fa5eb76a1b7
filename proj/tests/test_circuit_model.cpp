#include <catch_amalgamated.hpp>

#include "pfd/circuit_model.hpp"
#include "pfd/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

using namespace pfd;
using Catch::Approx;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

VaractorModel smv() { return {1.7e-12, -0.3, 0.02, 0.0}; }

// q(v) from integrating C(v) term by term
double charge_of(const VaractorModel& m, double v) {
    return m.c_dc * (v + m.c_d * v * v / 2.0 + m.c_d2 * v * v * v / 3.0);
}

const char* kExplicit = R"({
  "f_out_hz": 1e8,
  "source_resistance_ohm": 50,
  "load_resistance_ohm": 50,
  "varactor": {"c_dc_f": 1.7e-12, "c_d_per_v": -0.3, "c_d2_per_v2": 0.02},
  "branches": {
    "z1": {"kind": "series", "items": [
      {"kind": "R", "value_ohm": 50, "role": "source"},
      {"kind": "parallel", "items": [{"kind": "L", "value_h": 3.825e-7}, {"kind": "C", "value_f": 6.6e-12}]}]},
    "z2": {"kind": "series", "items": [
      {"kind": "parallel", "items": [{"kind": "L", "value_h": 7.425e-7, "q": 40}, {"kind": "C", "value_f": 8.5e-13}]},
      {"kind": "R", "value_ohm": 50, "role": "load"}]},
    "z3": {"kind": "series", "items": [{"kind": "L", "value_h": 5e-7}, {"kind": "varactor_static"}]}
  }
})";

}  // namespace

TEST_CASE("cubic inverse undoes the integrated charge law") {
    const auto m = smv();
    for (double v : {-0.2, -0.05, 0.01, 0.05, 0.2}) {
        const double q = charge_of(m, v);
        // truncation error is fourth order in v
        REQUIRE(std::abs(m.voltage(q) - v) < 0.5 * std::pow(std::abs(v), 4));
    }
}

TEST_CASE("elastance is the derivative of voltage") {
    const auto m = smv();
    const double q = 0.05 * m.c_dc;
    const double h = 1e-6 * q;
    const double fd = (m.voltage(q + h) - m.voltage(q - h)) / (2 * h);
    REQUIRE(m.elastance(q) == Approx(fd).epsilon(1e-8));
    REQUIRE(m.elastance(0.0) == Approx(1.0 / m.c_dc));
}

TEST_CASE("fig2 design file parses into the canonical shorthand") {
    const auto d = parse_design(read_file(std::string(PFD_DESIGN_DIR) + "/fig2.json"));
    REQUIRE(d.canonical.has_value());
    REQUIRE(d.canonical->l3 == Approx(500e-9));
    REQUIRE(d.f_out == Approx(100e6));
    REQUIRE(d.varactor.c_dc == Approx(1.7e-12));
    REQUIRE(d.noise_floor_dbm == -80.0);
    REQUIRE(count_varactors(d.z3) == 1);
    REQUIRE(find_role(d.z1, ElementRole::source)->value == 50.0);
    REQUIRE(find_role(d.z2, ElementRole::load)->value == 50.0);
    REQUIRE_FALSE(has_errors(validate_design(d)));
}

TEST_CASE("explicit branch trees parse and round-trip") {
    const auto d = parse_design(kExplicit);
    REQUIRE_FALSE(d.canonical.has_value());
    const auto again = parse_design(serialize_design(d));
    REQUIRE(serialize_design(again) == serialize_design(d));
    REQUIRE(varactor_in_series_path(again.z3));
}

TEST_CASE("canonical designs round-trip through the shorthand") {
    CanonicalSpec spec{382.5e-9, 6.6e-12, 742.5e-9, 0.85e-12, 500e-9, 30.0, TransformerSpec{227e-12, 11.2e-9}};
    const auto d = make_canonical_design(spec, smv(), 100e6, 50, 50);
    const auto back = parse_design(serialize_design(d));
    REQUIRE(back.canonical.has_value());
    REQUIRE(back.canonical->inductor_q.value() == 30.0);
    REQUIRE(back.canonical->transformer->c_match == Approx(227e-12));
}

TEST_CASE("malformed documents raise ParseError with a position") {
    try {
        (void)parse_design("{\n  \"f_out_hz\": 1e8,\n  oops\n}");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        REQUIRE(e.line() == 3);
    }
}

TEST_CASE("schema violations raise DesignError") {
    std::string doc = kExplicit;
    doc.replace(doc.find("\"R\""), 3, "\"Q\"");
    REQUIRE_THROWS_AS(parse_design(doc), DesignError);

    std::string extra = kExplicit;
    extra.insert(1, "\"bogus\": 1,");
    REQUIRE_THROWS_AS(parse_design(extra), DesignError);
}

TEST_CASE("varactor outside z3 is rejected") {
    auto d = parse_design_unchecked(kExplicit);
    d.z1 = Network::series({d.z1, Network::varactor()});
    const auto diags = validate_design(d);
    REQUIRE(has_errors(diags));
    bool found = false;
    for (const auto& x : diags) found |= x.where == "z1" && x.message.find("varactor") != std::string::npos;
    REQUIRE(found);
}

TEST_CASE("varactor inside a parallel combinator is rejected") {
    auto d = parse_design_unchecked(kExplicit);
    d.z3 = Network::parallel({Network::of(Element::inductor(5e-7)), Network::varactor()});
    REQUIRE(has_errors(validate_design(d)));
}

TEST_CASE("missing role resistors and mismatched values are errors") {
    auto d = parse_design_unchecked(kExplicit);
    d.r_source = 75.0;
    REQUIRE(has_errors(validate_design(d)));
    d = parse_design_unchecked(kExplicit);
    d.z2 = Network::of(Element::resistor(50.0));
    REQUIRE(has_errors(validate_design(d)));
}

TEST_CASE("non-positive C(v) inside the window is only a warning") {
    auto d = parse_design_unchecked(kExplicit);
    d.varactor.c_d = -1.0;
    d.varactor.c_d2 = 0.0;
    const auto diags = validate_design(d);
    REQUIRE_FALSE(has_errors(diags));
    bool warned = false;
    for (const auto& x : diags) warned |= x.severity == Severity::warning && x.where == "varactor";
    REQUIRE(warned);
}

TEST_CASE("non-positive element values are errors") {
    auto d = parse_design_unchecked(kExplicit);
    d.z3 = Network::series({Network::of(Element::inductor(-1e-9)), Network::varactor()});
    REQUIRE(has_errors(validate_design(d)));
    d = parse_design_unchecked(kExplicit);
    d.varactor.c_dc = 0.0;
    REQUIRE(has_errors(validate_design(d)));
}
