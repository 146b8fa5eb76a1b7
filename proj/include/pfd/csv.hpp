#pragma once

// CSV writers. Numbers are written in full-precision scientific notation
// with a '.' decimal point regardless of locale; NaN as "NaN", infinities as
// "inf" / "-inf".

#include "pfd/harmonic_balance.hpp"
#include "pfd/synthesis.hpp"
#include "pfd/threshold.hpp"
#include "pfd/timedomain.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace pfd::csv {

[[nodiscard]] std::string number(double value);

/// Quality factor column: lossless is written as "inf".
[[nodiscard]] std::string quality(const std::optional<double>& q);

void write_sweep(std::ostream& out, const std::vector<SweepRow>& rows);
void write_surface(std::ostream& out, const std::vector<SurfaceRow>& rows);
void write_qsens(std::ostream& out, const QSensitivity& table);
void write_pout(std::ostream& out, const std::vector<PoutRow>& rows);
void write_trajectory(std::ostream& out, const Trajectory& trajectory);
void write_poincare(std::ostream& out, const std::vector<PoincareRow>& rows);

/// One row per solution: v1_v,branch,zo_abs_c,pout_dbm,alpha_per_s
void write_branches(std::ostream& out, const PfdDesign& design, double f_out,
                    const BranchReport& report);

}  // namespace pfd::csv
