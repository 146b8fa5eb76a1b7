#include <catch_amalgamated.hpp>

#include "pfd/harmonic_balance.hpp"
#include "pfd/threshold.hpp"

#include <cmath>
#include <random>

using namespace pfd;
using Catch::Approx;

namespace {

constexpr cplx j{0.0, 1.0};

PfdDesign fig2(double c_d2 = 0.02) {
    CanonicalSpec spec{382.5e-9, 6.6e-12, 742.5e-9, 0.85e-12, 500e-9, std::nullopt, std::nullopt};
    return make_canonical_design(spec, {1.7e-12, -0.3, c_d2, 0.0}, 100e6, 50, 50);
}

// C_d2 that cancels the cubic term of the inverse, leaving a pure quadratic varactor
constexpr double kNoCubic = 1.5 * 0.3 * 0.3;

double vth() { return vth_closed_form(fig2(), 100e6).v_th_mag; }

const HbSolution* largest(const HbReport& r) {
    const HbSolution* best = nullptr;
    for (const auto& s : r.solutions) {
        if (!s.trivial() && (!best || std::abs(s.z_o) > std::abs(best->z_o))) best = &s;
    }
    return best;
}

}  // namespace

TEST_CASE("pump response matches the linear network solve") {
    const auto d = fig2();
    const double wp = 4 * kPi * 100e6;
    const auto b = evaluate_branches(d, wp);
    // nodal solve: source v1/2 behind z1, z2 and z3 to ground from the common node
    const cplx v1 = 0.01;
    const cplx node = (v1 / 2.0 / b.z1.z) / (1.0 / b.z1.z + 1.0 / b.z2.z + 1.0 / b.z3.z);
    const cplx i3 = node / b.z3.z;
    const auto p = pump_smallsignal(d, 0.01, 100e6);
    REQUIRE(std::abs(p.z_p - i3 / (j * wp)) < 1e-10 * std::abs(p.z_p));
    REQUIRE(std::abs(p.x_p - p.y_p - p.z_p) < 1e-12 * std::abs(p.z_p));
}

TEST_CASE("analytic Jacobian matches finite differences") {
    const auto d = fig2();
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 25; ++k) {
        const double v1 = 0.02 + 0.05 * std::abs(u(rng));
        const ReducedBalance b(d, 100e6, v1);
        const double qs = b.charge_scale();
        const cplx zo{qs * u(rng), qs * u(rng)}, zp{qs * u(rng), qs * u(rng)};
        REQUIRE(jacobian_fd_error(b, zo, zp) < 1e-6);
    }
}

TEST_CASE("trivial solution carries the pump only") {
    const auto d = fig2();
    const auto r = hb_solve(d, 100e6, 1e-4);
    REQUIRE(r.solutions.size() == 1);
    const auto& s = r.solutions.front();
    REQUIRE(s.trivial());
    REQUIRE(s.stable());
    const auto p = pump_smallsignal(d, 1e-4, 100e6);
    REQUIRE(std::abs(s.z_p - p.z_p) < 1e-6 * std::abs(p.z_p));
    REQUIRE(r.jacobian_error < 1e-6);
}

TEST_CASE("trivial branch loses stability at the closed form without the cubic term") {
    const auto d = fig2(kNoCubic);
    const double v = vth_closed_form(d, 100e6).v_th_mag;
    for (double scale : {0.98, 1.02}) {
        const double v1 = scale * v;
        const ReducedBalance b(d, 100e6, v1);
        const auto p = pump_smallsignal(d, v1, 100e6);
        REQUIRE((b.alpha(0.0, p.z_p) < 0.0) == (scale < 1.0));
    }
}

TEST_CASE("below threshold only the trivial solution exists") {
    const auto r = hb_solve(fig2(), 100e6, 0.6 * vth());
    REQUIRE(r.solutions.size() == 1);
    REQUIRE(r.solutions.front().trivial());
    REQUIRE(r.solutions.front().stable());
}

TEST_CASE("above threshold a stable divided solution satisfies the full balance") {
    const auto d = fig2();
    const double v1 = 1.3 * vth();
    const auto r = hb_solve(d, 100e6, v1);
    const HbSolution* s = largest(r);
    REQUIRE(s != nullptr);
    REQUIRE(s->stable());
    REQUIRE_FALSE(r.solutions.front().stable());
    const auto res = hb_residual(d, 100e6, v1, {s->x_o, s->y_o, s->z_o, s->x_p, s->y_p, s->z_p});
    for (std::size_t k = 0; k < res.size(); ++k) {
        const double scale = (k % 3 == 2) ? d.varactor.c_dc * v1 : 1.0;
        REQUIRE(std::abs(res[k]) < 1e-9 * scale);
    }
}

TEST_CASE("balance residual is second order away from a solution") {
    // Perturbing a solution by s leaves a residual that is linear in s; the
    // mismatch against the Jacobian prediction is quadratic.
    const auto d = fig2();
    const double v1 = 1.3 * vth();
    const auto r = hb_solve(d, 100e6, v1);
    const HbSolution* s = largest(r);
    REQUIRE(s != nullptr);
    const ReducedBalance b(d, 100e6, v1);
    const Eigen::Matrix4d jac = b.jacobian(s->z_o, s->z_p);
    const double q = std::abs(s->z_o);
    auto mismatch = [&](double eps) {
        const cplx dzo{eps * q, 0.5 * eps * q}, dzp{-0.3 * eps * q, 0.2 * eps * q};
        const auto g = b.residual(s->z_o + dzo, s->z_p + dzp);
        const Eigen::Vector4d dx(dzo.real(), dzo.imag(), dzp.real(), dzp.imag());
        const Eigen::Vector4d lin = jac * dx;
        const Eigen::Vector4d got(g[0].real(), g[0].imag(), g[1].real(), g[1].imag());
        return (got - lin).norm();
    };
    const double ratio = mismatch(1e-3) / mismatch(5e-4);
    REQUIRE(ratio == Approx(4.0).epsilon(0.05));
}

TEST_CASE("divided amplitude grows continuously from zero") {
    const double v = vth();
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) grid.push_back(v * (1.0 + 0.01 * k));
    const auto rep = classify_and_stability(fig2(), 100e6, grid);
    std::vector<double> amp;
    for (const auto& p : rep.points) {
        REQUIRE(p.s1.has_value());
        if (p.s2) {
            REQUIRE(p.s2->stable());
            REQUIRE_FALSE(p.s1->stable());
            amp.push_back(std::norm(p.s2->z_o));
        }
    }
    REQUIRE(amp.size() >= 10);
    // |z_o|^2 close to linear in v1 past a supercritical onset
    for (std::size_t k = 2; k < amp.size(); ++k) {
        const double d1 = amp[k] - amp[k - 1], d0 = amp[k - 1] - amp[k - 2];
        REQUIRE(d1 > 0.0);
        REQUIRE(d1 == Approx(d0).epsilon(0.25));
    }
}

TEST_CASE("output power follows the load current") {
    const auto d = fig2();
    HbSolution s;
    s.y_o = {3e-14, -4e-14};
    const double w = 2 * kPi * 100e6;
    const double amp = 2 * w * 5e-14;
    REQUIRE(hb_output_power_dbm(d, 100e6, s) == Approx(10 * std::log10(0.5 * amp * amp * 50 / 1e-3)));
}

TEST_CASE("output power sits on the floor below threshold") {
    const double pth = vth_closed_form(fig2(), 100e6).p_th_dbm;
    const auto rows = pout_vs_pin(fig2(), 100e6, {pth - 10, pth - 3, pth + 3, pth + 8}, -80.0);
    REQUIRE(rows[0].p_out_dbm == -80.0);
    REQUIRE(rows[1].p_out_dbm == -80.0);
    REQUIRE(rows[2].p_out_dbm > -80.0);
    REQUIRE(rows[3].p_out_dbm > rows[2].p_out_dbm);
    REQUIRE(rows[3].branch == Branch::s2);
}
