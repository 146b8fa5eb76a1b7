#include <catch_amalgamated.hpp>

#include "pfd/impedance.hpp"
#include "pfd/synthesis.hpp"
#include "pfd/threshold.hpp"

#include <cmath>

using namespace pfd;
using Catch::Approx;

namespace {

constexpr cplx j{0.0, 1.0};

double reactance_tank(double l, double c, double w) { return (1.0 / (1.0 / (j * w * l) + j * w * c)).imag(); }
double reactance_series(double l, double c, double w) { return w * l - 1.0 / (w * c); }

}  // namespace

TEST_CASE("synthesized values place all four resonances") {
    const double c3 = 1.7e-12, f = 100e6, wo = 2 * kPi * f, wp = 2 * wo;
    for (double l3 : {400e-9, 500e-9, 800e-9, 1200e-9}) {
        const auto v = synthesize_canonical(l3, c3, f);
        REQUIRE(v.feasible);
        REQUIRE(wo * wo * v.l1 * v.c1 == Approx(1.0));
        REQUIRE(wp * wp * v.l2 * v.c2 == Approx(1.0));
        const double x2o = reactance_tank(v.l2, v.c2, wo) + reactance_series(l3, c3, wo);
        const double x1p = reactance_tank(v.l1, v.c1, wp) + reactance_series(l3, c3, wp);
        REQUIRE(std::abs(x2o) < 1e-9 * wo * l3);
        REQUIRE(std::abs(x1p) < 1e-9 * wp * l3);
    }
}

TEST_CASE("fig2 component values") {
    const auto v = synthesize_canonical(500e-9, 1.7e-12, 100e6);
    REQUIRE(v.l1 == Approx(382.5e-9).epsilon(1e-3));
    REQUIRE(v.l2 == Approx(742.5e-9).epsilon(1e-3));
    REQUIRE(v.c1 == Approx(6.6e-12).epsilon(0.015));
    REQUIRE(v.c2 == Approx(0.85e-12).epsilon(0.015));
    // the printed C2 expression disagrees and is reported
    REQUIRE_FALSE(v.notes.empty());
}

TEST_CASE("feasible window is where L1 and L2 stay positive") {
    const auto w = feasible_l3_window(1.7e-12, 100e6);
    // series resonance of L3 with C_DC at 2 f_out and at f_out
    const double wo = 2 * kPi * 100e6;
    REQUIRE(w.lo == Approx(1.0 / (4 * wo * wo * 1.7e-12)));
    REQUIRE(w.hi == Approx(1.0 / (wo * wo * 1.7e-12)));
    REQUIRE(w.lo == Approx(372.5e-9).epsilon(0.01));
    REQUIRE(w.hi == Approx(1490e-9).epsilon(0.01));
    REQUIRE_FALSE(synthesize_canonical(0.99 * w.lo, 1.7e-12, 100e6).feasible);
    REQUIRE_FALSE(synthesize_canonical(1.01 * w.hi, 1.7e-12, 100e6).feasible);
    const auto inside = synthesize_canonical(1.01 * w.lo, 1.7e-12, 100e6);
    REQUIRE(inside.feasible);
    REQUIRE(inside.l1 > 0.0);
    REQUIRE(inside.l2 > 0.0);
}

TEST_CASE("quarter-wave section steps 50 ohm down") {
    const auto t = quarter_wave_lsection(7.01, 100e6, 50.0);
    const double w = 2 * kPi * 100e6;
    const cplx zin = 1.0 / (j * w * t.c_match) + 1.0 / (1.0 / (j * w * t.l_match) + 1.0 / 50.0);
    REQUIRE(t.c_match == Approx(227e-12).epsilon(0.02));
    REQUIRE(t.l_match == Approx(11.3e-9).epsilon(0.05));
    REQUIRE(std::abs(t.r_transformed - zin) < 1e-12);
    REQUIRE(t.r_transformed.real() < 1.0);
    REQUIRE(transformer_z0_for(50.0, 1.0) == Approx(std::sqrt(50.0)));
}

TEST_CASE("varactor law interpolates and clamps") {
    const auto law = VaractorLaw::table({{2e-12, -0.2}, {1e-12, -0.4}});
    REQUIRE(law.at(1.5e-12).c_d == Approx(-0.3));
    REQUIRE(law.at(0.5e-12).c_d == Approx(-0.4));
    REQUIRE(law.at(3e-12).c_d == Approx(-0.2));
    REQUIRE(VaractorLaw::constant().at(1e-12).c_d == -0.3);
}

TEST_CASE("surface marks infeasible points and keeps grid order") {
    SurfaceOptions opt;
    const std::vector<double> l3{300e-9, 500e-9, 900e-9, 1600e-9};
    const std::vector<double> cdc{1.2e-12, 1.7e-12};
    const auto rows = pth_surface(l3, cdc, opt);
    REQUIRE(rows.size() == 8);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        REQUIRE(rows[i].l3 == l3[i / 2]);
        REQUIRE(rows[i].c_dc == cdc[i % 2]);
        const auto w = feasible_l3_window(rows[i].c_dc, 100e6);
        const bool inside = rows[i].l3 > w.lo && rows[i].l3 < w.hi;
        REQUIRE(rows[i].feasible == inside);
        REQUIRE(std::isnan(rows[i].p_th_dbm) == !inside);
    }
    const auto d = synthesize_design(500e-9, 1.7e-12, opt);
    REQUIRE(rows[3].p_th_dbm == Approx(vth_closed_form(*d, 100e6).p_th_dbm));
}

TEST_CASE("losses raise the threshold") {
    SurfaceOptions lossless, lossy;
    lossy.q = 20.0;
    const auto a = synthesize_design(500e-9, 1.7e-12, lossless);
    const auto b = synthesize_design(500e-9, 1.7e-12, lossy);
    REQUIRE(vth_closed_form(*b, 100e6).p_th_dbm > vth_closed_form(*a, 100e6).p_th_dbm);
}

TEST_CASE("q sensitivity reports one argmin per q") {
    SurfaceOptions opt;
    std::vector<double> cdc;
    for (int i = 0; i < 12; ++i) cdc.push_back(0.6e-12 + 0.1e-12 * i);
    const auto s = q_sensitivity(500e-9, cdc, {10.0, 50.0}, opt);
    REQUIRE(s.rows.size() == 24);
    REQUIRE(s.argmin_c_dc.size() == 2);
    for (const auto& [q, c] : s.argmin_c_dc) {
        double best = 1e300, at = 0.0;
        for (const auto& r : s.rows) {
            if (r.q == q && r.p_th_dbm < best) {
                best = r.p_th_dbm;
                at = r.c_dc;
            }
        }
        REQUIRE(c == at);
    }
}
