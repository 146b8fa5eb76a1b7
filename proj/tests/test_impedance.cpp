#include <catch_amalgamated.hpp>

#include "pfd/errors.hpp"
#include "pfd/impedance.hpp"

#include <cmath>

using namespace pfd;
using Catch::Approx;

namespace {

constexpr cplx j{0.0, 1.0};

PfdDesign fig2(std::optional<double> q = std::nullopt) {
    CanonicalSpec spec{382.5e-9, 6.6e-12, 742.5e-9, 0.85e-12, 500e-9, q, std::nullopt};
    return make_canonical_design(spec, {1.7e-12, -0.3, 0.02, 0.0}, 100e6, 50, 50);
}

bool close(cplx a, cplx b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

}  // namespace

TEST_CASE("elements follow the phasor laws") {
    const double w = 2 * kPi * 1e8;
    REQUIRE(element_impedance(Element::resistor(50), w) == cplx(50, 0));
    REQUIRE(close(element_impedance(Element::inductor(1e-6), w), j * w * 1e-6, 1e-15));
    REQUIRE(close(element_impedance(Element::capacitor(1e-12), w), 1.0 / (j * w * 1e-12), 1e-15));
    // constant Q adds w L / Q in series
    const auto zq = element_impedance(Element::inductor(1e-6, 20.0), w);
    REQUIRE(zq.real() == Approx(w * 1e-6 / 20.0));
    REQUIRE(zq.imag() == Approx(w * 1e-6));
}

TEST_CASE("canonical branches match hand algebra") {
    const auto d = fig2();
    for (double f : {37e6, 100e6, 200e6, 311e6}) {
        const double w = 2 * kPi * f;
        const cplx z1 = 50.0 + 1.0 / (1.0 / (j * w * 382.5e-9) + j * w * 6.6e-12);
        const cplx z2 = 50.0 + 1.0 / (1.0 / (j * w * 742.5e-9) + j * w * 0.85e-12);
        const cplx z3 = j * w * 500e-9 + 1.0 / (j * w * 1.7e-12);
        const auto b = evaluate_branches(d, w);
        REQUIRE(close(b.z1.z, z1, 1e-12));
        REQUIRE(close(b.z2.z, z2, 1e-12));
        REQUIRE(close(b.z3.z, z3, 1e-12));
        REQUIRE(close(loop_impedance(b), z3 + z1 * z2 / (z1 + z2), 1e-10));
        REQUIRE(close(drive_division(b), z2 / (z1 + z2), 1e-10));
    }
}

TEST_CASE("z_eq expands the product form") {
    const cplx a{3, 4}, b{-1, 2}, c{0.5, -7};
    REQUIRE(close(z_eq(a, b, c), a * b + a * c + b * c, 1e-14));
}

TEST_CASE("a lossless tank at resonance is flagged as a pole") {
    const Network tank = Network::parallel({Network::of(Element::inductor(1e-6)),
                                            Network::of(Element::capacitor(1e-12))});
    const double w0 = 1.0 / std::sqrt(1e-6 * 1e-12);
    const auto s = branch_impedance(tank, w0, 0.0);
    REQUIRE(s.at_pole);
    REQUIRE(std::abs(s.z) <= kPoleCap * (1 + 1e-12));
    REQUIRE(std::isfinite(s.z.real()));
}

TEST_CASE("resonance search finds 1/sqrt(LC)") {
    const Network series = Network::series({Network::of(Element::inductor(500e-9)), Network::varactor()});
    const double ws = 1.0 / std::sqrt(500e-9 * 1.7e-12);
    REQUIRE(find_resonance(series, ResonanceMode::series, 0.5 * ws, 2 * ws, 1.7e-12) ==
            Approx(ws).epsilon(1e-9));
    const Network tank = Network::parallel({Network::of(Element::inductor(742.5e-9)),
                                            Network::of(Element::capacitor(0.85e-12))});
    const double wp = 1.0 / std::sqrt(742.5e-9 * 0.85e-12);
    REQUIRE(find_resonance(tank, ResonanceMode::parallel, 0.5 * wp, 2 * wp, 0.0) ==
            Approx(wp).epsilon(1e-9));
    REQUIRE_THROWS_AS(find_resonance(series, ResonanceMode::series, 2 * ws, 3 * ws, 1.7e-12),
                      NotFoundError);
}

TEST_CASE("tables interpolate linearly and refuse extrapolation") {
    const Network t = Network::table({{1e8, {10, 20}}, {2e8, {30, -40}}});
    const auto s = branch_impedance(t, 2 * kPi * 1.25e8, 0.0);
    REQUIRE(s.z.real() == Approx(15.0));
    REQUIRE(s.z.imag() == Approx(5.0));
    REQUIRE_THROWS_AS(branch_impedance(t, 2 * kPi * 0.5e8, 0.0), RangeError);
}

TEST_CASE("role current ratio divides like a current divider") {
    const double w = 2 * kPi * 1e8;
    const cplx zc = 1.0 / (j * w * 10e-12);
    const Network n = Network::parallel({Network::of(Element::resistor(50, ElementRole::load)),
                                         Network::of(Element::capacitor(10e-12))});
    REQUIRE(close(role_current_ratio(n, ElementRole::load, w, 0.0), zc / (50.0 + zc), 1e-12));
    REQUIRE(close(role_current_ratio(fig2().z2, ElementRole::load, w, 0.0), 1.0, 1e-12));
    REQUIRE_THROWS_AS(role_current_ratio(n, ElementRole::source, w, 0.0), DesignError);
}
