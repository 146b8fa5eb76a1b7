#include <catch_amalgamated.hpp>

#include "pfd/errors.hpp"
#include "pfd/harmonic_balance.hpp"
#include "pfd/threshold.hpp"
#include "pfd/timedomain.hpp"

#include <cmath>

using namespace pfd;
using Catch::Approx;

namespace {

PfdDesign fig2(std::optional<double> q = std::nullopt) {
    CanonicalSpec spec{382.5e-9, 6.6e-12, 742.5e-9, 0.85e-12, 500e-9, q, std::nullopt};
    return make_canonical_design(spec, {1.7e-12, -0.3, 0.02, 0.0}, 100e6, 50, 50);
}

SimConfig quick(int settle, int measure = 64) {
    SimConfig c;
    c.periods_settle = settle;
    c.periods_measure = measure;
    c.samples_per_period = 32;
    return c;
}

}  // namespace

TEST_CASE("rest state stays at rest") {
    const TdCircuit c(fig2(), LossMode::lossless);
    const auto d = c.derivative(TdState{}, 0.0);
    for (double x : d) REQUIRE(x == 0.0);
}

TEST_CASE("source current and load voltage obey Kirchhoff at the terminals") {
    const auto design = fig2();
    const TdCircuit c(design, LossMode::lossless);
    const TdState y{1e-13, 0.01, 2e-4, -0.02, 1e-4, 5e-14, -3e-4};
    const auto t = c.terminals(y, 0.05);
    const auto d = c.derivative(y, 0.05);
    REQUIRE(t.i1 == Approx(d[0]));
    REQUIRE(t.i2 == Approx(d[0] - d[5]));
    REQUIRE(t.v_load == Approx(t.i2 * 50.0));
}

TEST_CASE("transformer and explicit designs are refused") {
    CanonicalSpec spec{382.5e-9, 6.6e-12, 742.5e-9, 0.85e-12, 500e-9, std::nullopt,
                       TransformerSpec{227e-12, 11.2e-9}};
    const auto with_tr = make_canonical_design(spec, {1.7e-12, -0.3, 0.02, 0.0}, 100e6, 50, 50);
    REQUIRE_THROWS_AS(TdCircuit(with_tr, LossMode::lossless), UnsupportedTopologyError);
    auto explicit_design = fig2();
    explicit_design.canonical.reset();
    REQUIRE_THROWS_AS(TdCircuit(explicit_design, LossMode::lossless), UnsupportedTopologyError);
}

TEST_CASE("weak drive reproduces the phasor pump response") {
    const auto d = fig2();
    const double v1 = 1e-3;
    const auto tr = integrate(d, v1, quick(3000));
    const auto lines = steady_spectrum(tr);
    const auto p = pump_smallsignal(d, v1, 100e6);
    REQUIRE(std::abs(lines[1].q3 - p.z_p) < 2e-3 * std::abs(p.z_p));
    // nothing at f_out below threshold
    REQUIRE(std::abs(lines[0].q3) < 1e-6 * std::abs(p.z_p));
}

TEST_CASE("spectrum needs an even number of periods") {
    REQUIRE_THROWS_AS(integrate(fig2(), 1e-3, quick(10, 3)), DesignError);
    const auto tr = integrate(fig2(), 1e-3, quick(10, 1));
    REQUIRE_THROWS_AS(steady_spectrum(tr), WindowError);
}

TEST_CASE("lossless energy balance holds in the divided regime") {
    const double v1 = 1.5 * vth_closed_form(fig2(), 100e6).v_th_mag;
    SimConfig c = quick(4000, 128);
    c.samples_per_period = 64;
    const auto tr = integrate(fig2(), v1, c);
    const auto e = energy_balance(tr);
    REQUIRE(e.source_w > 0.0);
    REQUIRE(e.relative_error() < 0.01);
    REQUIRE(detect_period_doubling(tr, fig2()).divided);
}

TEST_CASE("inductor losses enter through fixed resistors") {
    const auto d = fig2(20.0);
    const TdCircuit lossless(d, LossMode::lossless);
    const TdCircuit lossy(d, LossMode::fixed_r);
    const TdState y{0, 0, 1e-3, 0, 0, 0, 0};
    // only the L1 branch current flows, so only the L1 loss voltage differs
    const auto a = lossless.derivative(y, 0.0);
    const auto b = lossy.derivative(y, 0.0);
    const double r1 = 2 * kPi * 100e6 * 382.5e-9 / 20.0;
    REQUIRE((a[2] - b[2]) == Approx(r1 * 1e-3 / 382.5e-9));
}

TEST_CASE("classification follows the drive level") {
    const double v = vth_closed_form(fig2(), 100e6).v_th_mag;
    TdThresholdOptions opt;
    REQUIRE_FALSE(td_divides(fig2(), 0.7 * v, opt));
    REQUIRE(td_divides(fig2(), 1.4 * v, opt));
    REQUIRE_THROWS_AS(td_threshold(fig2(), 0.5 * v, 0.7 * v, opt), BracketError);
}

TEST_CASE("stroboscopic returns split above threshold") {
    const double v = vth_closed_form(fig2(), 100e6).v_th_mag;
    PoincareOptions opt;
    opt.config.periods_settle = 8000;
    const auto rows = poincare_map(fig2(), {0.8 * v, 1.3 * v}, opt);
    REQUIRE(rows.size() == 2);
    REQUIRE(rows[0].error.empty());
    REQUIRE(rows[0].separation < 1e-3);
    REQUIRE(rows[1].separation > 0.1);
}

TEST_CASE("rational varactor form evaluates q over C(q)") {
    const auto d = fig2();
    const TdCircuit cubic(d, LossMode::lossless, VaractorForm::cubic);
    const TdCircuit rational(d, LossMode::lossless, VaractorForm::rational);
    const double c = 1.7e-12, q = 0.1 * c;
    REQUIRE(rational.varactor_voltage(q) == Approx(q / (c * (1 - 0.3 * 0.1 + 0.02 * 0.01))));
    REQUIRE(cubic.varactor_voltage(q) == Approx(d.varactor.voltage(q)));
    // both laws share the linear term
    const double tiny = 1e-6 * c;
    REQUIRE(rational.varactor_voltage(tiny) == Approx(cubic.varactor_voltage(tiny)).epsilon(1e-5));
}
