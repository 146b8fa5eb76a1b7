#include "pfd/csv.hpp"

#include <fmt/format.h>

#include <cmath>

namespace pfd::csv {

std::string number(double value) {
    if (std::isnan(value)) return "NaN";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return fmt::format("{:.17e}", value);
}

std::string quality(const std::optional<double>& q) {
    return q ? number(*q) : std::string("inf");
}

void write_sweep(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "f_out_hz,vth_v,pth_dbm\n";
    for (const auto& r : rows) {
        const double v = r.result ? r.result->v_th_mag : NAN;
        const double p = r.result ? r.result->p_th_dbm : NAN;
        out << number(r.f_out) << ',' << number(v) << ',' << number(p) << '\n';
    }
}

void write_surface(std::ostream& out, const std::vector<SurfaceRow>& rows) {
    out << "l3_h,cdc_f,q,pth_dbm,feasible\n";
    for (const auto& r : rows) {
        out << number(r.l3) << ',' << number(r.c_dc) << ',' << quality(r.q) << ','
            << number(r.p_th_dbm) << ',' << (r.feasible ? "true" : "false") << '\n';
    }
}

void write_qsens(std::ostream& out, const QSensitivity& table) {
    out << "cdc_f,q,pth_dbm\n";
    for (const auto& r : table.rows) {
        out << number(r.c_dc) << ',' << quality(r.q) << ',' << number(r.p_th_dbm) << '\n';
    }
}

void write_pout(std::ostream& out, const std::vector<PoutRow>& rows) {
    out << "pin_dbm,pout_dbm,branch\n";
    for (const auto& r : rows) {
        out << number(r.p_in_dbm) << ',' << number(r.p_out_dbm) << ',' << branch_name(r.branch)
            << '\n';
    }
}

void write_trajectory(std::ostream& out, const Trajectory& tr) {
    out << "t_s,q1_c,q2_c,q3_c,dq3_c_per_s,vout_v\n";
    for (std::size_t i = 0; i < tr.size(); ++i) {
        out << number(tr.t[i]) << ',' << number(tr.q1[i]) << ',' << number(tr.q2[i]) << ','
            << number(tr.q3[i]) << ',' << number(tr.dq3[i]) << ',' << number(tr.v_out[i]) << '\n';
    }
}

void write_poincare(std::ostream& out, const std::vector<PoincareRow>& rows) {
    out << "v1_v,r_even,r_odd\n";
    for (const auto& r : rows) {
        const bool ok = r.error.empty();
        out << number(r.v1) << ',' << number(ok ? r.r_even : NAN) << ','
            << number(ok ? r.r_odd : NAN) << '\n';
    }
}

void write_branches(std::ostream& out, const PfdDesign& design, double f_out,
                    const BranchReport& report) {
    out << "v1_v,branch,zo_abs_c,pout_dbm,alpha_per_s\n";
    const auto row = [&](const HbSolution& s) {
        const double p = s.trivial() ? -INFINITY : hb_output_power_dbm(design, f_out, s);
        out << number(s.v1) << ',' << branch_name(s.branch) << ',' << number(std::abs(s.z_o))
            << ',' << number(p) << ',' << number(s.alpha) << '\n';
    };
    for (const auto& p : report.points) {
        if (p.s1) row(*p.s1);
        if (p.s2) row(*p.s2);
        for (const auto& s : p.s3) row(s);
    }
}

}  // namespace pfd::csv
