#include "pfd/threshold.hpp"

#include "pfd/errors.hpp"
#include "pfd/parallel.hpp"

#include <cmath>

namespace pfd {

namespace {
constexpr cplx kI{0.0, 1.0};
}

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

double available_power_to_peak_volts(double watts, double r_source) {
    return std::sqrt(8.0 * r_source * watts);
}

ThresholdResult vth_closed_form(const PfdDesign& design, double f_out, ThresholdForm form) {
    const double c_d = std::abs(design.varactor.c_d);
    if (c_d == 0.0) throw ComputationError("c_d is zero: the threshold is infinite");

    const auto w = FrequencyPair::from_f_out(f_out);
    ThresholdResult r;
    r.f_out = f_out;
    r.at_omega_o = evaluate_branches(design, w.omega_o);
    r.at_omega_p = evaluate_branches(design, w.omega_p);

    const cplx z1o = r.at_omega_o.z1.z, z2o = r.at_omega_o.z2.z, z3o = r.at_omega_o.z3.z;
    const cplx z1p = r.at_omega_p.z1.z, z2p = r.at_omega_p.z2.z, z3p = r.at_omega_p.z3.z;
    const double c = design.varactor.c_dc;
    const double scale = 4.0 * c * c * w.omega_o * w.omega_o / c_d;

    const bool normalized = form == ThresholdForm::normalized ||
                            (form == ThresholdForm::automatic &&
                             (r.at_omega_o.any_pole() || r.at_omega_p.any_pole()));
    cplx num;
    cplx den;
    if (normalized) {
        num = (z2o + z3o + z2o * z3o / z1o) * (z1p + z3p + z1p * z3p / z2p);
        den = 1.0 + z2o / z1o;
    } else {
        num = z_eq(z1o, z2o, z3o) * z_eq(z1p, z2p, z3p);
        den = (z1o + z2o) * z2p;
    }
    if (den == cplx(0.0, 0.0)) {
        throw ComputationError("degenerate network: threshold denominator vanishes");
    }
    r.v_th = scale * num / den;
    r.v_th_mag = std::abs(r.v_th);
    r.p_th_w = r.v_th_mag * r.v_th_mag / (8.0 * design.r_source);
    r.p_th_dbm = watts_to_dbm(r.p_th_w);
    r.normalized_form = normalized;
    return r;
}

double vth_min_optimal(double c_dc, double c_d, double r_s_eff, double r_l_eff, double omega_o) {
    return 4.0 * c_dc * c_dc * r_l_eff * r_s_eff * omega_o * omega_o / std::abs(c_d);
}

Eigen::Matrix3cd threshold_matrix(const PfdDesign& design, double f_out, cplx v1) {
    const auto w = FrequencyPair::from_f_out(f_out);
    const auto bo = evaluate_branches(design, w.omega_o);
    const auto bp = evaluate_branches(design, w.omega_p);
    const double c = design.varactor.c_dc;
    const double c_d = std::abs(design.varactor.c_d);

    // Z2p / Zeq_p written so that a pole in z2 at the pump stays finite.
    const cplx z2_over_zeq = 1.0 / (bp.z3.z + bp.z1.z + bp.z1.z * bp.z3.z / bp.z2.z);
    // Pump coupling into the f_out balance, with the printed C_d taken as -|C_d|.
    const cplx pump_term = kI * v1 * c_d * z2_over_zeq / (4.0 * c * c * w.omega_o);

    const double wo = w.omega_o;
    Eigen::Matrix3cd a;
    a << -kI * bo.z1.z * wo, -kI * bo.z2.z * wo, 0.0,
         -kI * bo.z1.z * wo, 0.0, -kI * bo.z3.z * wo + pump_term,
         1.0, -1.0, -1.0;

    if (bo.any_pole() || bp.any_pole()) {
        for (int i = 0; i < 3; ++i) a.row(i) /= a.row(i).norm();
    }
    return a;
}

cplx det_A(const PfdDesign& design, double f_out, cplx v1) {
    return threshold_matrix(design, f_out, v1).determinant();
}

double row_norm_product(const Eigen::Matrix3cd& m) {
    return m.row(0).norm() * m.row(1).norm() * m.row(2).norm();
}

std::vector<SweepRow> threshold_sweep(const PfdDesign& design,
                                      const std::vector<double>& f_out_grid) {
    std::vector<SweepRow> rows(f_out_grid.size());
    parallel_for(f_out_grid.size(), [&](std::size_t i) {
        rows[i].f_out = f_out_grid[i];
        try {
            rows[i].result = vth_closed_form(design, f_out_grid[i]);
        } catch (const Error& e) {
            rows[i].error = e.what();
        }
    });
    return rows;
}

}  // namespace pfd
