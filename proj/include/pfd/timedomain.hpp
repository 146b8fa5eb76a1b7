#pragma once

// Transient simulation of the canonical divider (z1 = R_S + L1||C1,
// z2 = L2||C2 + R_L, z3 = L3 + varactor) with an embedded Runge-Kutta
// integrator, period-doubling detection and threshold bisection.

#include "pfd/circuit_model.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace pfd {

enum class LossMode { lossless, fixed_r };

/// Varactor voltage law. cubic is the truncated inverse shared with the
/// harmonic balance; rational evaluates q / C(q) with C(q) = C_DC (1 + C_d q / C_DC
/// + C_d2 q^2 / C_DC^2), for sensitivity studies only.
enum class VaractorForm { cubic, rational };

struct SimConfig {
    int periods_settle = 60000;   // pump periods discarded before measurement
    int periods_measure = 64;     // power of two
    double rel_tol = 1e-9;
    double abs_tol = 1e-18;       // C; scaled per state component
    double ramp_periods = 50.0;   // linear soft start of the drive amplitude
    LossMode loss_mode = LossMode::lossless;
    int samples_per_period = 64;
    double seed_charge = 0.0;     // C, initial q3; zero keeps the varactor discharged
    VaractorForm varactor_form = VaractorForm::cubic;
};

/// q1, vC1, iL1, vC2, iL2, q3, iL3
using TdState = std::array<double, 7>;

/// Rate of the canonical circuit state for a drive value v_source.
/// Throws UnsupportedTopologyError for non-canonical designs and for
/// designs carrying an output transformer.
class TdCircuit {
public:
    TdCircuit(const PfdDesign& design, LossMode loss_mode,
              VaractorForm form = VaractorForm::cubic);

    [[nodiscard]] TdState derivative(const TdState& y, double v_source) const;

    /// Load-resistor voltage and the currents i1 (source) and i2 (load).
    struct Terminals {
        double i1;
        double i2;
        double v_load;
    };
    [[nodiscard]] Terminals terminals(const TdState& y, double v_source) const;

    [[nodiscard]] double omega_p() const { return wp_; }
    [[nodiscard]] const VaractorModel& varactor() const { return varactor_; }
    [[nodiscard]] double r_source() const { return rs_; }
    [[nodiscard]] double r_load() const { return rl_; }
    [[nodiscard]] double varactor_voltage(double q) const;

private:
    double l1_, c1_, l2_, c2_, l3_;
    double r1_ = 0.0, r2_ = 0.0, r3_ = 0.0;
    double rs_, rl_;
    double wp_;
    VaractorModel varactor_;
    VaractorForm form_;
};

/// Convenience wrapper: rate at time t under drive ramp(t) V1 cos(w_p t).
[[nodiscard]] TdState state_derivative(const TdState& y, double t, const PfdDesign& design,
                                       double v1, const SimConfig& config = {});

struct Trajectory {
    double omega_p = 0.0;
    int samples_per_period = 0;
    std::vector<double> t;      // s, uniform
    std::vector<double> q1;     // C
    std::vector<double> dq1;    // A
    std::vector<double> q3;     // C
    std::vector<double> dq3;    // A
    std::vector<double> q2;     // q1 - q3
    std::vector<double> v_out;  // V across R_L
    std::vector<double> v_src;  // V, ideal source
    double r_source = 0.0;
    double r_load = 0.0;
    TdState final_state{};      // state at the end of the window

    [[nodiscard]] std::size_t size() const { return t.size(); }
};

struct IntegrateOptions {
    double v1_start = 0.0;                // drive at the start of the ramp
    std::optional<TdState> initial_state; // default: zero state
};

/// Adaptive Dormand-Prince 5(4) integration. The measurement window is
/// resampled at samples_per_period points per pump period.
/// Throws StiffnessError when the step collapses.
[[nodiscard]] Trajectory integrate(const PfdDesign& design, double v1, const SimConfig& config,
                                   const IntegrateOptions& options = {});

struct DoublingMetrics {
    double separation = 0.0;         // odd/even stroboscopic centroid distance
    double radius = 0.0;             // mean stroboscopic radius
    double line_dbm = 0.0;           // f_out line in the load, dBm
    double floor_dbm = 0.0;
    double growth_per_period = 0.0;  // log growth of the f_out component
    double f_out_amplitude = 0.0;    // |q3| bin at f_out, C
    double pump_amplitude = 0.0;     // |q3| bin at f_pump, C
    double drift = 0.0;              // half-window centroid drift / radius
    bool settled = true;
};

struct DoublingResult {
    bool divided = false;
    DoublingMetrics metrics;
};

[[nodiscard]] DoublingResult detect_period_doubling(const Trajectory& trajectory,
                                                    const PfdDesign& design);

struct TdThresholdOptions {
    SimConfig config{1000, 1024, 1e-9, 1e-18, 50.0, LossMode::lossless, 16, 0.0};
    double rel_tol = 1e-3;
    double growth_tol = 1e-6;  // per pump period
    double f_out = 0.0;        // 0: design f_out
};

/// Drive-level classifier used by the bisection: true when the f_out mode
/// grows or has saturated into a divided orbit.
[[nodiscard]] bool td_divides(const PfdDesign& design, double v1, const TdThresholdOptions& options);

/// Bisects the division threshold. Throws BracketError when both ends agree.
[[nodiscard]] double td_threshold(const PfdDesign& design, double v_lo, double v_hi,
                                  const TdThresholdOptions& options = {});

/// Walks an ascending grid for the first no-division to division step and
/// bisects inside it. Empty when the grid never changes classification that way.
[[nodiscard]] std::optional<double> td_threshold_scan(const PfdDesign& design,
                                                      const std::vector<double>& v1_grid,
                                                      const TdThresholdOptions& options = {});

struct PoincareRow {
    double v1 = 0.0;
    double r_even = 0.0;
    double r_odd = 0.0;
    double separation = 0.0;  // odd/even centroid distance / radius
    std::string error;
};

struct PoincareOptions {
    SimConfig config{60000, 64, 1e-8, 1e-18, 50.0, LossMode::lossless, 16, 0.0};
    double kick = 1e-4;  // q3 perturbation at each point, in units of C_DC * v1
};

/// Stroboscopic returns over an ascending grid with the state carried from
/// point to point. Sequential by construction.
[[nodiscard]] std::vector<PoincareRow> poincare_map(const PfdDesign& design,
                                                    const std::vector<double>& v1_grid,
                                                    const PoincareOptions& options = {});

struct SpectrumLine {
    double omega = 0.0;
    cplx q1, q2, q3, v_out;
};

/// Single-bin projections at omega_o, omega_p and 2 omega_p. Throws
/// WindowError unless the window spans an even number of pump periods.
[[nodiscard]] std::vector<SpectrumLine> steady_spectrum(const Trajectory& trajectory);

struct EnergyBalance {
    double source_w = 0.0;
    double dissipated_w = 0.0;
    [[nodiscard]] double relative_error() const;
};

[[nodiscard]] EnergyBalance energy_balance(const Trajectory& trajectory);

}  // namespace pfd
