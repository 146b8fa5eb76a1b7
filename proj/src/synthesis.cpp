#include "pfd/synthesis.hpp"

#include "pfd/errors.hpp"
#include "pfd/parallel.hpp"
#include "pfd/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pfd {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr cplx kI{0.0, 1.0};
}  // namespace

L3Window feasible_l3_window(double c_dc, double f_out) {
    const double k = kPi * kPi * f_out * f_out * c_dc;
    return {1.0 / (16.0 * k), 1.0 / (4.0 * k)};
}

CanonicalValues synthesize_canonical(double l3, double c_dc, double f_out) {
    CanonicalValues v;
    v.l3 = l3;
    const auto window = feasible_l3_window(c_dc, f_out);
    if (!(l3 > window.lo && l3 < window.hi)) {
        std::ostringstream msg;
        msg << "l3 = " << l3 << " H outside the feasible window (" << window.lo << ", "
            << window.hi << ") H: no division is possible";
        v.notes.push_back(msg.str());
        return v;
    }

    const double k = kPi * kPi * f_out * f_out * c_dc;  // pi^2 f^2 C3
    const double w = FrequencyPair::from_f_out(f_out).omega_o;

    v.l1 = 3.0 * (-1.0 + 16.0 * l3 * k) / (16.0 * k);
    v.l2 = -3.0 * (-1.0 + 4.0 * l3 * k) / (16.0 * k);
    v.c1 = 1.0 / (w * w * v.l1);
    v.c2 = 1.0 / (4.0 * w * w * v.l2);
    v.feasible = true;

    // The closed-form C2 line as commonly printed is 4x the parallel-resonance value.
    const double printed_c2 = -4.0 * c_dc / (3.0 * (-1.0 + 4.0 * l3 * k));
    if (std::abs(printed_c2 - v.c2) > 1e-9 * v.c2) {
        std::ostringstream msg;
        msg << "c2 from the printed closed form (" << printed_c2
            << " F) differs from the 2 f_out parallel-resonance value (" << v.c2
            << " F); the resonance value is used";
        v.notes.push_back(msg.str());
    }
    return v;
}

TransformerValues quarter_wave_lsection(double z0, double f_out, double r_load) {
    const double w = FrequencyPair::from_f_out(f_out).omega_o;
    TransformerValues t;
    t.z0 = z0;
    t.c_match = 1.0 / (w * z0);
    t.l_match = z0 / w;
    const cplx zl = kI * w * t.l_match;
    t.r_transformed = 1.0 / (kI * w * t.c_match) + zl * r_load / (zl + r_load);
    return t;
}

VaractorLaw VaractorLaw::constant(double c_d, double c_d2) {
    VaractorLaw law;
    law.c_d_ = c_d;
    law.c_d2_ = c_d2;
    return law;
}

VaractorLaw VaractorLaw::table(std::vector<std::pair<double, double>> cdc_to_cd, double c_d2) {
    if (cdc_to_cd.empty()) throw DesignError("varactor law table is empty");
    std::sort(cdc_to_cd.begin(), cdc_to_cd.end());
    VaractorLaw law;
    law.table_ = std::move(cdc_to_cd);
    law.c_d2_ = c_d2;
    return law;
}

VaractorModel VaractorLaw::at(double c_dc) const {
    VaractorModel m;
    m.c_dc = c_dc;
    m.c_d2 = c_d2_;
    if (table_.empty()) {
        m.c_d = c_d_;
        return m;
    }
    if (c_dc <= table_.front().first) {
        m.c_d = table_.front().second;
    } else if (c_dc >= table_.back().first) {
        m.c_d = table_.back().second;
    } else {
        auto hi = std::upper_bound(table_.begin(), table_.end(), std::make_pair(c_dc, -1e300));
        auto lo = hi - 1;
        const double t = (c_dc - lo->first) / (hi->first - lo->first);
        m.c_d = lo->second + t * (hi->second - lo->second);
    }
    return m;
}

std::optional<PfdDesign> synthesize_design(double l3, double c_dc, const SurfaceOptions& options) {
    const auto values = synthesize_canonical(l3, c_dc, options.f_out);
    if (!values.feasible) return std::nullopt;
    CanonicalSpec spec;
    spec.l1 = values.l1;
    spec.c1 = values.c1;
    spec.l2 = values.l2;
    spec.c2 = values.c2;
    spec.l3 = l3;
    spec.inductor_q = options.q;
    if (options.transformer) {
        spec.transformer = TransformerSpec{options.transformer->c_match, options.transformer->l_match};
    }
    return make_canonical_design(spec, options.law.at(c_dc), options.f_out, options.r_source,
                                 options.r_load);
}

std::vector<SurfaceRow> pth_surface(const std::vector<double>& l3_grid,
                                    const std::vector<double>& c_dc_grid,
                                    const SurfaceOptions& options) {
    const std::size_t nc = c_dc_grid.size();
    std::vector<SurfaceRow> rows(l3_grid.size() * nc);
    parallel_for(rows.size(), [&](std::size_t i) {
        auto& row = rows[i];
        row.l3 = l3_grid[i / nc];
        row.c_dc = c_dc_grid[i % nc];
        row.q = options.q;
        row.p_th_dbm = kNaN;
        try {
            const auto design = synthesize_design(row.l3, row.c_dc, options);
            if (!design) return;
            row.feasible = true;
            row.p_th_dbm = vth_closed_form(*design, options.f_out).p_th_dbm;
        } catch (const Error& e) {
            row.error = e.what();
        }
    });
    return rows;
}

QSensitivity q_sensitivity(double l3, const std::vector<double>& c_dc_grid,
                           const std::vector<std::optional<double>>& q_grid,
                           const SurfaceOptions& options) {
    QSensitivity out;
    for (const auto& q : q_grid) {
        SurfaceOptions opt = options;
        opt.q = q;
        const auto rows = pth_surface({l3}, c_dc_grid, opt);
        double best = kNaN;
        double best_p = std::numeric_limits<double>::infinity();
        for (const auto& r : rows) {
            out.rows.push_back({r.c_dc, q, r.p_th_dbm});
            if (std::isfinite(r.p_th_dbm) && r.p_th_dbm < best_p) {
                best_p = r.p_th_dbm;
                best = r.c_dc;
            }
        }
        out.argmin_c_dc.emplace_back(q, best);
    }
    return out;
}

}  // namespace pfd
