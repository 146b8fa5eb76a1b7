#pragma once

#include "pfd/circuit_model.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pfd {

/// Component values that place the four resonances of the five-component
/// divider (z1 parallel at f_out, z2 parallel at 2 f_out, z2 + z3 series at
/// f_out, z1 + z3 series at 2 f_out).
struct CanonicalValues {
    double l1 = 0.0;
    double l2 = 0.0;
    double l3 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    bool feasible = false;
    std::vector<std::string> notes;
};

/// Open interval of L3 for which L1 and L2 come out positive.
struct L3Window {
    double lo;
    double hi;
};

[[nodiscard]] L3Window feasible_l3_window(double c_dc, double f_out);

[[nodiscard]] CanonicalValues synthesize_canonical(double l3, double c_dc, double f_out);

/// Lumped quarter-wave stage at f_out: series c_match followed by l_match
/// shunting the load.
struct TransformerValues {
    double c_match = 0.0;
    double l_match = 0.0;
    double z0 = 0.0;
    cplx r_transformed;  // input impedance at omega_o with the load attached
};

[[nodiscard]] TransformerValues quarter_wave_lsection(double z0, double f_out, double r_load);

/// Characteristic impedance that steps r_load down to r_target.
[[nodiscard]] inline double transformer_z0_for(double r_load, double r_target) {
    return std::sqrt(r_load * r_target);
}

/// C_d (and C_d2) as a function of C_DC. Either a constant pair or a
/// (C_DC, C_d) table interpolated linearly and clamped at its ends.
class VaractorLaw {
public:
    static VaractorLaw constant(double c_d = -0.3, double c_d2 = 0.02);
    static VaractorLaw table(std::vector<std::pair<double, double>> cdc_to_cd, double c_d2 = 0.02);

    [[nodiscard]] VaractorModel at(double c_dc) const;

private:
    std::vector<std::pair<double, double>> table_;
    double c_d_ = -0.3;
    double c_d2_ = 0.02;
};

struct SurfaceOptions {
    double f_out = 100e6;
    std::optional<double> q;  // absent: lossless
    std::optional<TransformerValues> transformer;
    VaractorLaw law = VaractorLaw::constant();
    double r_source = 50.0;
    double r_load = 50.0;
};

/// Canonical design synthesized for (l3, c_dc) with the options applied.
/// Returns nothing when l3 lies outside the feasible window.
[[nodiscard]] std::optional<PfdDesign> synthesize_design(double l3, double c_dc,
                                                         const SurfaceOptions& options);

struct SurfaceRow {
    double l3 = 0.0;
    double c_dc = 0.0;
    std::optional<double> q;
    double p_th_dbm = 0.0;  // NaN when infeasible or failed
    bool feasible = false;
    std::string error;
};

/// Threshold power over an L3 x C_DC grid, L3 outer. Row order matches the grid.
[[nodiscard]] std::vector<SurfaceRow> pth_surface(const std::vector<double>& l3_grid,
                                                  const std::vector<double>& c_dc_grid,
                                                  const SurfaceOptions& options);

struct SensitivityRow {
    double c_dc = 0.0;
    std::optional<double> q;
    double p_th_dbm = 0.0;
};

struct QSensitivity {
    std::vector<SensitivityRow> rows;  // q outer, c_dc inner
    /// Per q row, the grid C_DC with the lowest threshold (NaN if none feasible).
    std::vector<std::pair<std::optional<double>, double>> argmin_c_dc;
};

[[nodiscard]] QSensitivity q_sensitivity(double l3, const std::vector<double>& c_dc_grid,
                                         const std::vector<std::optional<double>>& q_grid,
                                         const SurfaceOptions& options);

}  // namespace pfd
