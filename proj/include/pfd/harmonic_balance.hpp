#pragma once

// Two-tone (f_out, 2 f_out) harmonic balance of the divider with the cubic
// varactor inverse, seeded Newton solving and envelope stability.
//
// Fourier convention: q(t) = X exp(i w t) + conj, drive v1(t) = V1 cos(w_p t).

#include "pfd/circuit_model.hpp"
#include "pfd/impedance.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace pfd {

enum class Branch { s1, s2, s3 };

[[nodiscard]] const char* branch_name(Branch b);

struct HbSolution {
    cplx x_o, y_o, z_o;  // C, at omega_o
    cplx x_p, y_p, z_p;  // C, at omega_p
    double v1 = 0.0;
    double alpha = 0.0;  // leading growth rate of the f_out envelope, 1/s
    Branch branch = Branch::s1;
    double residual_norm = 0.0;

    [[nodiscard]] bool stable() const { return alpha < 0.0; }
    [[nodiscard]] bool trivial() const { return z_o == cplx(0.0, 0.0); }
};

struct PumpCoefficients {
    cplx x_p, y_p, z_p;
};

/// Linear pump response with the f_out mode absent. Throws ComputationError
/// when the network is degenerate at omega_p.
[[nodiscard]] PumpCoefficients pump_smallsignal(const PfdDesign& design, double v1, double f_out);

/// x_o, y_o, z_o, x_p, y_p, z_p
using HbVector = std::array<cplx, 6>;

/// Six balance residuals: for each tone the z1/z3 loop and z2/z3 loop
/// voltages (normalized by max(|v1|, 1 mV)) followed by the raw charge
/// conservation x - y - z.
[[nodiscard]] HbVector hb_residual(const PfdDesign& design, double f_out, double v1,
                                   const HbVector& unknowns);

/// Reduced balance in (z_o, z_p) after eliminating x and y. Used by the solver.
class ReducedBalance {
public:
    ReducedBalance(const PfdDesign& design, double f_out, double v1);

    /// Residuals (G_o, G_p) in volts.
    [[nodiscard]] std::array<cplx, 2> residual(cplx z_o, cplx z_p) const;

    /// Real 4x4 Jacobian of (Re G_o, Im G_o, Re G_p, Im G_p) with respect to
    /// (Re z_o, Im z_o, Re z_p, Im z_p).
    [[nodiscard]] Eigen::Matrix4d jacobian(cplx z_o, cplx z_p) const;

    /// Envelope growth rate of the f_out mode around (z_o, z_p).
    [[nodiscard]] double alpha(cplx z_o, cplx z_p) const;

    [[nodiscard]] HbVector expand(cplx z_o, cplx z_p) const;

    [[nodiscard]] double voltage_scale() const { return vs_; }
    [[nodiscard]] double charge_scale() const { return qs_; }

private:
    double v1_;
    double wo_, wp_;
    cplx zl_o_, zl_p_;  // loop impedances z3 + z1 || z2
    cplx g_o_, g_p_;    // y1 / (y1 + y2)
    cplx y_series_p_;   // 1 / (z1 + z2) at omega_p
    cplx d_o_;          // d(w Zl)/dw at omega_o
    VaractorModel::ChargeVoltage k_;
    double vs_, qs_;
};

/// Worst relative error between the analytic Jacobian and a Richardson
/// extrapolated central difference at one point.
[[nodiscard]] double jacobian_fd_error(const ReducedBalance& balance, cplx z_o, cplx z_p);

struct HbOptions {
    int max_iterations = 200;
    int max_halvings = 30;
    double tolerance = 1e-12;           // scaled residual norm
    double dedupe_relative = 1e-6;
    bool check_jacobian = true;         // 10 seeded points per solve
    std::vector<std::array<cplx, 2>> extra_seeds;  // (z_o, z_p), e.g. continuation
};

struct HbReport {
    std::vector<HbSolution> solutions;  // trivial first, then by |z_o|
    std::vector<std::string> diagnostics;
    double jacobian_error = 0.0;        // worst relative error of the check
};

/// Seeded damped Newton solve at one drive level. Branch labels are
/// provisional (S1 for trivial, S2 otherwise); see classify_and_stability.
[[nodiscard]] HbReport hb_solve(const PfdDesign& design, double f_out, double v1,
                                const HbOptions& options = {});

struct BranchPoint {
    double v1 = 0.0;
    std::optional<HbSolution> s1;
    std::optional<HbSolution> s2;
    std::vector<HbSolution> s3;
};

struct BranchReport {
    std::vector<BranchPoint> points;
    std::vector<std::string> diagnostics;
};

/// Continuation over an ascending v1 grid. S2 is the nontrivial branch that
/// grows out of zero where S1 loses stability; any other nontrivial solution
/// is labelled S3.
[[nodiscard]] BranchReport classify_and_stability(const PfdDesign& design, double f_out,
                                                  const std::vector<double>& v1_grid,
                                                  const HbOptions& options = {});

/// Output power into the load-tagged resistor of z2, dBm.
[[nodiscard]] double hb_output_power_dbm(const PfdDesign& design, double f_out,
                                         const HbSolution& s);

struct PoutRow {
    double p_in_dbm = 0.0;
    double p_out_dbm = 0.0;
    Branch branch = Branch::s1;
    std::string diagnostic;
};

[[nodiscard]] std::vector<PoutRow> pout_vs_pin(const PfdDesign& design, double f_out,
                                               const std::vector<double>& pin_grid_dbm,
                                               double noise_floor_dbm);

}  // namespace pfd
