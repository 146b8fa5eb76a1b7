#include "pfd/harmonic_balance.hpp"

#include "pfd/errors.hpp"
#include "pfd/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace pfd {

namespace {

constexpr cplx kI{0.0, 1.0};

double voltage_scale_for(double v1) { return std::max(std::abs(v1), 1e-3); }

// Real 2x2 block of d(f)/d(Re z, Im z) for f with Wirtinger parts a = df/dz, b = df/dz*.
Eigen::Matrix2d wirtinger_block(cplx a, cplx b) {
    const cplx dre = a + b;
    const cplx dim = kI * (a - b);
    Eigen::Matrix2d m;
    m << dre.real(), dim.real(), dre.imag(), dim.imag();
    return m;
}

Eigen::Matrix2d complex_multiplier(cplx c) {
    Eigen::Matrix2d m;
    m << c.real(), -c.imag(), c.imag(), c.real();
    return m;
}

cplx omega_loop(const PfdDesign& design, double w) {
    return w * loop_impedance(evaluate_branches(design, w));
}

}  // namespace

const char* branch_name(Branch b) {
    switch (b) {
        case Branch::s1: return "S1";
        case Branch::s2: return "S2";
        case Branch::s3: return "S3";
    }
    return "?";
}

PumpCoefficients pump_smallsignal(const PfdDesign& design, double v1, double f_out) {
    const double wp = FrequencyPair::from_f_out(f_out).omega_p;
    const auto b = evaluate_branches(design, wp);
    // Every term divided through by z2 so that a pole in z2 stays finite.
    const cplx den = b.z3.z + b.z1.z + b.z1.z * b.z3.z / b.z2.z;
    if (std::abs(den) == 0.0) throw ComputationError("degenerate network at the pump frequency");
    const cplx k = -kI * v1 / (2.0 * wp * den);
    PumpCoefficients p;
    p.z_p = k;
    p.y_p = k * b.z3.z / b.z2.z;
    p.x_p = p.y_p + p.z_p;
    return p;
}

HbVector hb_residual(const PfdDesign& design, double f_out, double v1, const HbVector& u) {
    const auto w = FrequencyPair::from_f_out(f_out);
    const auto k = design.varactor.charge_voltage();
    const double vs = voltage_scale_for(v1);
    const cplx zo = u[2], zp = u[5];

    // Varactor nonlinear voltage at each tone beyond the linear 1/C_DC part.
    const cplx nl_o = 2.0 * k.a2 * zp * std::conj(zo) +
                      k.a3 * (3.0 * std::norm(zo) + 6.0 * std::norm(zp)) * zo;
    const cplx nl_p = k.a2 * zo * zo + k.a3 * (6.0 * std::norm(zo) + 3.0 * std::norm(zp)) * zp;

    HbVector r;
    const auto tone = [&](double om, cplx x, cplx y, cplx z, cplx nl, cplx drive, int base) {
        const auto b = evaluate_branches(design, om);
        const cplx v3 = kI * om * b.z3.z * z + nl;
        r[base] = (kI * om * b.z1.z * x + v3 - drive) / vs;
        r[base + 1] = (kI * om * b.z2.z * y - v3) / vs;
        r[base + 2] = x - y - z;
    };
    tone(w.omega_o, u[0], u[1], u[2], nl_o, 0.0, 0);
    tone(w.omega_p, u[3], u[4], u[5], nl_p, v1 / 2.0, 3);
    return r;
}

ReducedBalance::ReducedBalance(const PfdDesign& design, double f_out, double v1)
    : v1_(v1), k_(design.varactor.charge_voltage()) {
    const auto w = FrequencyPair::from_f_out(f_out);
    wo_ = w.omega_o;
    wp_ = w.omega_p;
    const auto bo = evaluate_branches(design, wo_);
    const auto bp = evaluate_branches(design, wp_);
    zl_o_ = loop_impedance(bo);
    zl_p_ = loop_impedance(bp);
    g_o_ = drive_division(bo);
    g_p_ = drive_division(bp);
    {
        const cplx y1 = 1.0 / bp.z1.z, y2 = 1.0 / bp.z2.z;
        y_series_p_ = y1 * y2 / (y1 + y2);
    }
    const double h = 1e-5 * wo_;
    d_o_ = (omega_loop(design, wo_ + h) - omega_loop(design, wo_ - h)) / (2.0 * h);
    vs_ = voltage_scale_for(v1);
    qs_ = vs_ * design.varactor.c_dc;
}

std::array<cplx, 2> ReducedBalance::residual(cplx zo, cplx zp) const {
    const double no = std::norm(zo), np = std::norm(zp);
    const cplx go = kI * wo_ * zl_o_ * zo + 2.0 * k_.a2 * zp * std::conj(zo) +
                    k_.a3 * (3.0 * no + 6.0 * np) * zo;
    const cplx gp = kI * wp_ * zl_p_ * zp + k_.a2 * zo * zo + k_.a3 * (6.0 * no + 3.0 * np) * zp -
                    0.5 * v1_ * g_p_;
    return {go, gp};
}

Eigen::Matrix4d ReducedBalance::jacobian(cplx zo, cplx zp) const {
    const double sq = 6.0 * k_.a3 * (std::norm(zo) + std::norm(zp));
    const cplx a_oo = kI * wo_ * zl_o_ + sq;
    const cplx b_oo = 2.0 * k_.a2 * zp + 3.0 * k_.a3 * zo * zo;
    const cplx a_op = 2.0 * k_.a2 * std::conj(zo) + 6.0 * k_.a3 * zo * std::conj(zp);
    const cplx b_op = 6.0 * k_.a3 * zo * zp;
    const cplx a_po = 2.0 * k_.a2 * zo + 6.0 * k_.a3 * std::conj(zo) * zp;
    const cplx b_po = 6.0 * k_.a3 * zo * zp;
    const cplx a_pp = kI * wp_ * zl_p_ + sq;
    const cplx b_pp = 3.0 * k_.a3 * zp * zp;

    Eigen::Matrix4d j;
    j.block<2, 2>(0, 0) = wirtinger_block(a_oo, b_oo);
    j.block<2, 2>(0, 2) = wirtinger_block(a_op, b_op);
    j.block<2, 2>(2, 0) = wirtinger_block(a_po, b_po);
    j.block<2, 2>(2, 2) = wirtinger_block(a_pp, b_pp);
    return j;
}

double ReducedBalance::alpha(cplx zo, cplx zp) const {
    const Eigen::Matrix4d j = jacobian(zo, zp);
    // Pump follows adiabatically; its response is folded into the f_out block.
    const Eigen::Matrix2d red = j.block<2, 2>(0, 0) -
                                j.block<2, 2>(0, 2) * j.block<2, 2>(2, 2).inverse() *
                                    j.block<2, 2>(2, 0);
    const Eigen::Matrix2d flow = -complex_multiplier(1.0 / d_o_) * red;
    const auto ev = flow.eigenvalues();
    return std::max(ev(0).real(), ev(1).real());
}

HbVector ReducedBalance::expand(cplx zo, cplx zp) const {
    // Valid on solutions: x and y follow from the loop equations once the
    // varactor branch balance holds.
    HbVector u;
    u[2] = zo;
    u[0] = zo * g_o_;
    u[1] = u[0] - zo;
    u[5] = zp;
    u[3] = zp * g_p_ + (0.5 * v1_ / (kI * wp_)) * y_series_p_;
    u[4] = u[3] - zp;
    return u;
}

double jacobian_fd_error(const ReducedBalance& balance, cplx zo, cplx zp) {
    const Eigen::Matrix4d exact = balance.jacobian(zo, zp);
    const double scale = std::max({std::abs(zo), std::abs(zp), balance.charge_scale()});
    const auto eval = [&](const Eigen::Vector4d& x) {
        const auto g = balance.residual({x(0), x(1)}, {x(2), x(3)});
        return Eigen::Vector4d(g[0].real(), g[0].imag(), g[1].real(), g[1].imag());
    };
    const Eigen::Vector4d x0(zo.real(), zo.imag(), zp.real(), zp.imag());
    const auto central = [&](int col, double h) {
        Eigen::Vector4d xp = x0, xm = x0;
        xp(col) += h;
        xm(col) -= h;
        return Eigen::Vector4d((eval(xp) - eval(xm)) / (2.0 * h));
    };
    Eigen::Matrix4d fd;
    const double h = 1e-3 * scale;
    for (int c = 0; c < 4; ++c) fd.col(c) = (4.0 * central(c, h / 2.0) - central(c, h)) / 3.0;
    return (fd - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff();
}

namespace {

struct NewtonResult {
    bool converged = false;
    cplx zo, zp;
    double norm = 0.0;
};

double scaled_norm(const std::array<cplx, 2>& g, double vs) {
    return std::sqrt(std::norm(g[0]) + std::norm(g[1])) / vs;
}

NewtonResult newton(const ReducedBalance& b, cplx zo, cplx zp, const HbOptions& opt) {
    const double vs = b.voltage_scale();
    NewtonResult r{false, zo, zp, scaled_norm(b.residual(zo, zp), vs)};
    for (int it = 0; it < opt.max_iterations; ++it) {
        if (r.norm < opt.tolerance) {
            r.converged = true;
            return r;
        }
        const auto g = b.residual(r.zo, r.zp);
        const Eigen::Vector4d rhs(-g[0].real(), -g[0].imag(), -g[1].real(), -g[1].imag());
        const Eigen::Vector4d step = b.jacobian(r.zo, r.zp).fullPivLu().solve(rhs);
        if (!step.allFinite()) return r;
        double lambda = 1.0;
        bool improved = false;
        for (int k = 0; k <= opt.max_halvings; ++k, lambda *= 0.5) {
            const cplx zo_n = r.zo + lambda * cplx(step(0), step(1));
            const cplx zp_n = r.zp + lambda * cplx(step(2), step(3));
            const double n = scaled_norm(b.residual(zo_n, zp_n), vs);
            if (n < r.norm) {
                r.zo = zo_n;
                r.zp = zp_n;
                r.norm = n;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    r.converged = r.norm < opt.tolerance;
    return r;
}

// Picks the representative of the z_o -> -z_o pair with arg(z_o) in [0, pi).
cplx canonical_zo(cplx zo) {
    const double a = std::arg(zo);
    return (a < 0.0 || a >= kPi) ? -zo : zo;
}

double solution_distance(const HbSolution& a, const HbSolution& b, double qs) {
    const double scale = std::max({std::abs(a.z_p), std::abs(b.z_p), qs});
    return std::max(std::abs(a.z_o - b.z_o), std::abs(a.z_p - b.z_p)) / scale;
}

}  // namespace

HbReport hb_solve(const PfdDesign& design, double f_out, double v1, const HbOptions& options) {
    HbReport report;
    const ReducedBalance balance(design, f_out, v1);
    const double qs = balance.charge_scale();
    const cplx zp0 = pump_smallsignal(design, v1, f_out).z_p;

    std::vector<std::array<cplx, 2>> seeds{{cplx(0.0, 0.0), zp0}};
    for (const double volts : {0.01, 0.1, 1.0}) {
        for (int k = 0; k < 8; ++k) {
            seeds.push_back({std::polar(volts * design.varactor.c_dc, k * kPi / 4.0), zp0});
        }
    }
    seeds.insert(seeds.end(), options.extra_seeds.begin(), options.extra_seeds.end());

    bool trivial_found = false;
    for (const auto& seed : seeds) {
        const auto nr = newton(balance, seed[0], seed[1], options);
        if (!nr.converged) continue;
        HbSolution s;
        const bool trivial = std::abs(nr.zo) < 1e-9 * qs;
        if (trivial && seed[0] != cplx(0.0, 0.0)) continue;  // covered by the trivial seed
        const cplx zo = trivial ? cplx(0.0, 0.0) : canonical_zo(nr.zo);
        const auto u = balance.expand(zo, nr.zp);
        s.x_o = u[0];
        s.y_o = u[1];
        s.z_o = u[2];
        s.x_p = u[3];
        s.y_p = u[4];
        s.z_p = u[5];
        s.v1 = v1;
        s.alpha = balance.alpha(zo, nr.zp);
        s.branch = trivial ? Branch::s1 : Branch::s2;
        double rn = 0.0;
        for (const auto& r : hb_residual(design, f_out, v1, u)) rn += std::norm(r);
        s.residual_norm = std::sqrt(rn);

        const bool dup = std::any_of(report.solutions.begin(), report.solutions.end(),
                                     [&](const HbSolution& o) {
                                         return solution_distance(o, s, qs) <
                                                options.dedupe_relative;
                                     });
        if (dup) continue;
        trivial_found = trivial_found || trivial;
        report.solutions.push_back(s);
    }
    std::stable_sort(report.solutions.begin(), report.solutions.end(),
                     [](const HbSolution& a, const HbSolution& b) {
                         return std::abs(a.z_o) < std::abs(b.z_o);
                     });
    if (report.solutions.empty()) {
        report.diagnostics.push_back("no seed converged at v1 = " + std::to_string(v1) + " V");
    } else if (!trivial_found) {
        report.diagnostics.push_back("trivial solution did not converge at v1 = " +
                                     std::to_string(v1) + " V");
    }

    if (options.check_jacobian) {
        std::mt19937_64 rng(0x5eed);
        std::normal_distribution<double> n01;
        const double pump_scale = std::max(std::abs(zp0), qs);
        for (int i = 0; i < 10; ++i) {
            const cplx zo(qs * n01(rng), qs * n01(rng));
            const cplx zp = zp0 + cplx(pump_scale * n01(rng), pump_scale * n01(rng));
            report.jacobian_error = std::max(report.jacobian_error, jacobian_fd_error(balance, zo, zp));
        }
        if (report.jacobian_error > 1e-6) {
            std::ostringstream msg;
            msg << "jacobian check: relative error " << report.jacobian_error;
            report.diagnostics.push_back(msg.str());
        }
    }
    return report;
}

BranchReport classify_and_stability(const PfdDesign& design, double f_out,
                                    const std::vector<double>& v1_grid, const HbOptions& options) {
    BranchReport out;
    std::optional<HbSolution> last_s2;
    std::vector<HbSolution> previous_nontrivial;
    bool s1_unstable_seen = false;
    std::size_t previous_count = 0;

    for (std::size_t i = 0; i < v1_grid.size(); ++i) {
        const double v1 = v1_grid[i];
        HbOptions opt = options;
        opt.check_jacobian = options.check_jacobian && i == 0;
        for (const auto& s : previous_nontrivial) opt.extra_seeds.push_back({s.z_o, s.z_p});
        auto report = hb_solve(design, f_out, v1, opt);
        for (auto& d : report.diagnostics) out.diagnostics.push_back(std::move(d));

        BranchPoint point;
        point.v1 = v1;
        std::vector<HbSolution> nontrivial;
        for (auto& s : report.solutions) {
            if (s.trivial()) {
                s.branch = Branch::s1;
                point.s1 = s;
            } else {
                nontrivial.push_back(s);
            }
        }
        const bool s1_unstable = point.s1 && !point.s1->stable();

        // S2 continues the previous S2; before it exists it is born as the
        // smallest stable nontrivial solution once S1 has lost stability.
        std::optional<std::size_t> s2_index;
        if (last_s2) {
            const double qs = std::max(std::abs(v1), 1e-3) * design.varactor.c_dc;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < nontrivial.size(); ++k) {
                const double d = solution_distance(nontrivial[k], *last_s2, qs);
                if (d < best) {
                    best = d;
                    s2_index = k;
                }
            }
        } else if (s1_unstable || s1_unstable_seen) {
            for (std::size_t k = 0; k < nontrivial.size(); ++k) {
                if (!nontrivial[k].stable()) continue;
                if (!s2_index || std::abs(nontrivial[k].z_o) < std::abs(nontrivial[*s2_index].z_o)) {
                    s2_index = k;
                }
            }
        }
        for (std::size_t k = 0; k < nontrivial.size(); ++k) {
            if (s2_index && k == *s2_index) {
                nontrivial[k].branch = Branch::s2;
                point.s2 = nontrivial[k];
            } else {
                nontrivial[k].branch = Branch::s3;
                point.s3.push_back(nontrivial[k]);
            }
        }
        if (point.s2) last_s2 = point.s2;

        const bool crossing = i > 0 && out.points.back().s1 && point.s1 &&
                              out.points.back().s1->stable() != point.s1->stable();
        if (i > 0 && report.solutions.size() != previous_count && !crossing) {
            std::ostringstream msg;
            msg << "solution count changed from " << previous_count << " to "
                << report.solutions.size() << " at v1 = " << v1
                << " V without a stability crossing";
            out.diagnostics.push_back(msg.str());
        }
        previous_count = report.solutions.size();
        s1_unstable_seen = s1_unstable_seen || s1_unstable;
        previous_nontrivial = nontrivial;
        out.points.push_back(std::move(point));
    }
    return out;
}

double hb_output_power_dbm(const PfdDesign& design, double f_out, const HbSolution& s) {
    const double wo = FrequencyPair::from_f_out(f_out).omega_o;
    const cplx ratio = role_current_ratio(design.z2, ElementRole::load, wo, design.varactor.c_dc);
    const double amplitude = 2.0 * wo * std::abs(s.y_o * ratio);
    return watts_to_dbm(0.5 * amplitude * amplitude * design.r_load);
}

std::vector<PoutRow> pout_vs_pin(const PfdDesign& design, double f_out,
                                 const std::vector<double>& pin_grid_dbm, double noise_floor_dbm) {
    std::vector<PoutRow> rows;
    std::optional<HbSolution> carried;
    for (const double pin : pin_grid_dbm) {
        PoutRow row;
        row.p_in_dbm = pin;
        row.p_out_dbm = noise_floor_dbm;
        const double v1 = available_power_to_peak_volts(dbm_to_watts(pin), design.r_source);
        HbOptions opt;
        opt.check_jacobian = false;
        if (carried) opt.extra_seeds.push_back({carried->z_o, carried->z_p});
        const auto report = hb_solve(design, f_out, v1, opt);
        if (!report.diagnostics.empty()) row.diagnostic = report.diagnostics.front();

        const HbSolution* pick = nullptr;
        for (const auto& s : report.solutions) {
            if (s.trivial() || !s.stable()) continue;
            if (pick == nullptr ||
                (carried && std::abs(s.z_o - carried->z_o) < std::abs(pick->z_o - carried->z_o)) ||
                (!carried && std::abs(s.z_o) < std::abs(pick->z_o))) {
                pick = &s;
            }
        }
        if (pick != nullptr) {
            row.branch = Branch::s2;
            row.p_out_dbm = std::max(noise_floor_dbm, hb_output_power_dbm(design, f_out, *pick));
            carried = *pick;
        } else {
            carried.reset();
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace pfd
