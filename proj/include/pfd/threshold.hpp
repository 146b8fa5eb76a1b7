#pragma once

#include "pfd/circuit_model.hpp"
#include "pfd/impedance.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace pfd {

[[nodiscard]] double watts_to_dbm(double watts);
[[nodiscard]] double dbm_to_watts(double dbm);

/// Peak source voltage that delivers `watts` of available power from R_S.
[[nodiscard]] double available_power_to_peak_volts(double watts, double r_source);

struct ThresholdResult {
    double f_out = 0.0;
    cplx v_th;               // complex value of the closed form, phase kept for diagnostics
    double v_th_mag = 0.0;   // V
    double p_th_w = 0.0;     // |v_th|^2 / (8 R_S)
    double p_th_dbm = 0.0;
    BranchTriple at_omega_o;
    BranchTriple at_omega_p;
    bool normalized_form = false;  // true when the pole-safe form was used
};

enum class ThresholdForm {
    automatic,   // normalized form whenever a branch sits on a pole
    direct,      // Zeq_o Zeq_p / ((Z1o + Z2o) Z2p)
    normalized,  // numerator and denominator divided by Z1o Z2p
};

/// Closed-form parametric threshold of the 2:1 divider at f_out (pump at 2 f_out).
/// C_d enters by magnitude. Throws ComputationError when C_d = 0.
[[nodiscard]] ThresholdResult vth_closed_form(const PfdDesign& design, double f_out,
                                              ThresholdForm form = ThresholdForm::automatic);

/// Threshold of an optimally synthesized divider, 4 C_DC^2 R'_L R'_S w_o^2 / C_d.
[[nodiscard]] double vth_min_optimal(double c_dc, double c_d, double r_s_eff, double r_l_eff,
                                     double omega_o);

/// Linear f_out-balance matrix with the small-signal pump folded into the
/// varactor row. Rows are normalized when any branch is on a pole.
[[nodiscard]] Eigen::Matrix3cd threshold_matrix(const PfdDesign& design, double f_out, cplx v1);

[[nodiscard]] cplx det_A(const PfdDesign& design, double f_out, cplx v1);

/// Product of the Euclidean row norms of threshold_matrix (Hadamard bound on |det|).
[[nodiscard]] double row_norm_product(const Eigen::Matrix3cd& m);

struct SweepRow {
    double f_out = 0.0;
    std::optional<ThresholdResult> result;
    std::string error;  // set when result is empty
};

/// One threshold per grid point with f_pump = 2 f_out; failing points are
/// flagged and the sweep continues. Row order matches the grid.
[[nodiscard]] std::vector<SweepRow> threshold_sweep(const PfdDesign& design,
                                                    const std::vector<double>& f_out_grid);

}  // namespace pfd
