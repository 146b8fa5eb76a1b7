#include "pfd/timedomain.hpp"

#include "pfd/errors.hpp"
#include "pfd/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace pfd {

namespace {

constexpr int kN = 7;
constexpr cplx kI{0.0, 1.0};

enum Slot { q1 = 0, vc1 = 1, il1 = 2, vc2 = 3, il2 = 4, q3 = 5, il3 = 6 };

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Drive {
    double v_start;
    double v_end;
    double ramp_time;
    double omega_p;
    double period;

    // n whole periods plus tau into the current one.
    [[nodiscard]] double at(long n, double tau) const {
        const double t = n * period + tau;
        const double s = ramp_time > 0.0 ? std::min(1.0, t / ramp_time) : 1.0;
        return (v_start + (v_end - v_start) * s) * std::cos(omega_p * tau);
    }
};

class Stepper {
public:
    Stepper(const TdCircuit& circuit, const Drive& drive, const SimConfig& cfg)
        : circuit_(circuit), drive_(drive), rtol_(cfg.rel_tol) {
        const double c = circuit.varactor().c_dc;
        const double wp = circuit.omega_p();
        atol_ = {cfg.abs_tol, cfg.abs_tol / c, cfg.abs_tol * wp, cfg.abs_tol / c,
                 cfg.abs_tol * wp, cfg.abs_tol, cfg.abs_tol * wp};
        h_ = drive.period / 100.0;
        h_min_ = drive.period * 1e-7;
    }

    // Integrates one pump period n, stopping exactly at each sample time.
    template <class OnSample>
    void period(long n, TdState& y, const std::vector<double>& stops, OnSample&& on_sample) {
        double tau = 0.0;
        std::size_t next = 0;
        while (next < stops.size() && stops[next] <= 0.0) on_sample(next++, y);
        while (tau < drive_.period) {
            const double target = next < stops.size() ? stops[next] : drive_.period;
            const bool clipped = tau + h_ >= target;
            const double h = clipped ? target - tau : h_;
            double h_next = 0.0;
            if (!attempt(n, tau, h, y, h_next)) {
                h_ = h_next;
                if (h_ < h_min_) {
                    std::ostringstream msg;
                    msg << "step size fell below " << h_min_ << " s";
                    throw StiffnessError(msg.str(), n * drive_.period + tau);
                }
                continue;
            }
            tau = clipped ? target : tau + h;
            if (!clipped || h_next < h_) h_ = h_next;
            if (clipped) {
                if (next < stops.size()) {
                    on_sample(next++, y);
                } else {
                    break;
                }
            }
        }
    }

private:
    bool attempt(long n, double tau, double h, TdState& y, double& h_next) const {
        TdState k1, k2, k3, k4, k5, k6, k7, t;
        const auto f = [&](double dt, const TdState& s) {
            return circuit_.derivative(s, drive_.at(n, tau + dt));
        };
        k1 = f(0.0, y);
        for (int i = 0; i < kN; ++i) t[i] = y[i] + h * a21 * k1[i];
        k2 = f(c2 * h, t);
        for (int i = 0; i < kN; ++i) t[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        k3 = f(c3 * h, t);
        for (int i = 0; i < kN; ++i) t[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        k4 = f(c4 * h, t);
        for (int i = 0; i < kN; ++i) {
            t[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        }
        k5 = f(c5 * h, t);
        for (int i = 0; i < kN; ++i) {
            t[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        }
        k6 = f(h, t);
        TdState y5;
        for (int i = 0; i < kN; ++i) {
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        }
        k7 = f(h, y5);
        double err = 0.0;
        for (int i = 0; i < kN; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                  e7 * k7[i]);
            const double sc = atol_[i] + rtol_ * std::max(std::abs(y[i]), std::abs(y5[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / kN);
        if (!std::isfinite(err)) {
            h_next = 0.2 * h;
            return false;
        }
        const double factor =
            err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h_next = h * factor;
        if (err > 1.0) return false;
        y = y5;
        return true;
    }

    const TdCircuit& circuit_;
    const Drive& drive_;
    double rtol_;
    TdState atol_{};
    double h_;
    double h_min_;
};

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

cplx bin(const std::vector<double>& x, const std::vector<double>& t, double omega, std::size_t lo,
         std::size_t hi) {
    cplx acc{0.0, 0.0};
    for (std::size_t i = lo; i < hi; ++i) acc += x[i] * std::exp(-kI * (omega * t[i]));
    return acc / static_cast<double>(hi - lo);
}

struct Strobe {
    std::vector<double> a;  // q3
    std::vector<double> b;  // q3' / w_p
};

Strobe stroboscopic(const Trajectory& tr) {
    Strobe s;
    const auto step = static_cast<std::size_t>(tr.samples_per_period);
    for (std::size_t i = 0; i < tr.size(); i += step) {
        s.a.push_back(tr.q3[i]);
        s.b.push_back(tr.dq3[i] / tr.omega_p);
    }
    return s;
}

}  // namespace

TdCircuit::TdCircuit(const PfdDesign& design, LossMode loss_mode, VaractorForm form)
    : form_(form) {
    if (!design.canonical) {
        throw UnsupportedTopologyError("time-domain simulation needs the canonical topology");
    }
    if (design.canonical->transformer) {
        throw UnsupportedTopologyError("time-domain simulation does not model the output transformer");
    }
    const auto& c = *design.canonical;
    l1_ = c.l1;
    c1_ = c.c1;
    l2_ = c.l2;
    c2_ = c.c2;
    l3_ = c.l3;
    rs_ = design.r_source;
    rl_ = design.r_load;
    varactor_ = design.varactor;
    const auto w = FrequencyPair::from_f_out(design.f_out);
    wp_ = w.omega_p;
    if (loss_mode == LossMode::fixed_r && c.inductor_q) {
        r1_ = w.omega_o * l1_ / *c.inductor_q;
        r2_ = w.omega_o * l2_ / *c.inductor_q;
        r3_ = w.omega_o * l3_ / *c.inductor_q;
    }
}

TdCircuit::Terminals TdCircuit::terminals(const TdState& y, double v) const {
    const double g = 1.0 / (1.0 / rs_ + 1.0 / rl_);
    const double vn = ((v - y[vc1]) / rs_ + y[vc2] / rl_ - y[il3]) * g;
    const double i1 = (v - y[vc1] - vn) / rs_;
    const double i2 = (vn - y[vc2]) / rl_;
    return {i1, i2, i2 * rl_};
}

double TdCircuit::varactor_voltage(double q) const {
    if (form_ == VaractorForm::cubic) return varactor_.voltage(q);
    const double x = q / varactor_.c_dc;
    return q / (varactor_.c_dc * (1.0 + varactor_.c_d * x + varactor_.c_d2 * x * x));
}

TdState TdCircuit::derivative(const TdState& y, double v) const {
    const double g = 1.0 / (1.0 / rs_ + 1.0 / rl_);
    const double vn = ((v - y[vc1]) / rs_ + y[vc2] / rl_ - y[il3]) * g;
    const double i1 = (v - y[vc1] - vn) / rs_;
    const double i2 = (vn - y[vc2]) / rl_;
    TdState d;
    d[q1] = i1;
    d[vc1] = (i1 - y[il1]) / c1_;
    d[il1] = (y[vc1] - r1_ * y[il1]) / l1_;
    d[vc2] = (i2 - y[il2]) / c2_;
    d[il2] = (y[vc2] - r2_ * y[il2]) / l2_;
    d[q3] = y[il3];
    d[il3] = (vn - varactor_voltage(y[q3]) - r3_ * y[il3]) / l3_;
    return d;
}

TdState state_derivative(const TdState& y, double t, const PfdDesign& design, double v1,
                         const SimConfig& config) {
    const TdCircuit circuit(design, config.loss_mode, config.varactor_form);
    const double period = 2.0 * kPi / circuit.omega_p();
    const double ramp = config.ramp_periods > 0.0 ? std::min(1.0, t / (config.ramp_periods * period))
                                                  : 1.0;
    return circuit.derivative(y, ramp * v1 * std::cos(circuit.omega_p() * t));
}

Trajectory integrate(const PfdDesign& design, double v1, const SimConfig& config,
                     const IntegrateOptions& options) {
    if (config.rel_tol <= 0.0 || config.abs_tol <= 0.0) {
        throw DesignError("integrator tolerances must be positive");
    }
    if (config.periods_measure <= 0 || (config.periods_measure & (config.periods_measure - 1)) != 0) {
        throw DesignError("periods_measure must be a power of two");
    }
    if (config.samples_per_period < 4) throw DesignError("samples_per_period must be at least 4");

    const TdCircuit circuit(design, config.loss_mode, config.varactor_form);
    const double period = 2.0 * kPi / circuit.omega_p();
    const Drive drive{options.v1_start, v1, config.ramp_periods * period, circuit.omega_p(), period};

    TdState y{};
    if (options.initial_state) y = *options.initial_state;
    y[q3] += config.seed_charge;

    Trajectory tr;
    tr.omega_p = circuit.omega_p();
    tr.samples_per_period = config.samples_per_period;
    tr.r_source = circuit.r_source();
    tr.r_load = circuit.r_load();
    const std::size_t total = static_cast<std::size_t>(config.periods_measure) *
                              static_cast<std::size_t>(config.samples_per_period);
    for (auto* v : {&tr.t, &tr.q1, &tr.dq1, &tr.q3, &tr.dq3, &tr.q2, &tr.v_out, &tr.v_src}) {
        v->reserve(total);
    }

    std::vector<double> stops(static_cast<std::size_t>(config.samples_per_period));
    for (std::size_t k = 0; k < stops.size(); ++k) {
        stops[k] = period * static_cast<double>(k) / static_cast<double>(stops.size());
    }

    Stepper stepper(circuit, drive, config);
    const std::vector<double> none;
    const long settle = config.periods_settle;
    for (long n = 0; n < settle; ++n) {
        stepper.period(n, y, none, [](std::size_t, const TdState&) {});
    }
    for (long n = settle; n < settle + config.periods_measure; ++n) {
        stepper.period(n, y, stops, [&](std::size_t k, const TdState& s) {
            const double v = drive.at(n, stops[k]);
            const auto term = circuit.terminals(s, v);
            tr.t.push_back(n * period + stops[k]);
            tr.q1.push_back(s[q1]);
            tr.dq1.push_back(term.i1);
            tr.q3.push_back(s[q3]);
            tr.dq3.push_back(s[il3]);
            tr.q2.push_back(s[q1] - s[q3]);
            tr.v_out.push_back(term.v_load);
            tr.v_src.push_back(v);
        });
    }
    tr.final_state = y;
    return tr;
}

DoublingResult detect_period_doubling(const Trajectory& tr, const PfdDesign& design) {
    DoublingResult out;
    auto& m = out.metrics;
    m.floor_dbm = design.noise_floor_dbm;
    m.line_dbm = -std::numeric_limits<double>::infinity();
    if (tr.size() == 0) return out;

    const auto s = stroboscopic(tr);
    const std::size_t n = s.a.size();
    double ea = 0, eb = 0, oa = 0, ob = 0, radius = 0;
    std::size_t ne = 0, no = 0;
    for (std::size_t i = 0; i < n; ++i) {
        radius += std::hypot(s.a[i], s.b[i]);
        if (i % 2 == 0) {
            ea += s.a[i];
            eb += s.b[i];
            ++ne;
        } else {
            oa += s.a[i];
            ob += s.b[i];
            ++no;
        }
    }
    m.radius = radius / static_cast<double>(n);
    if (ne > 0 && no > 0) m.separation = std::hypot(ea / ne - oa / no, eb / ne - ob / no);

    // Half-window centroid drift.
    const std::size_t half = n / 2;
    double a1 = 0, b1v = 0, a2 = 0, b2v = 0;
    for (std::size_t i = 0; i < half; ++i) {
        a1 += s.a[i];
        b1v += s.b[i];
    }
    for (std::size_t i = half; i < n; ++i) {
        a2 += s.a[i];
        b2v += s.b[i];
    }
    if (half > 0 && m.radius > 0.0) {
        m.drift = std::hypot(a1 / half - a2 / (n - half), b1v / half - b2v / (n - half)) / m.radius;
    }
    m.settled = m.drift <= 0.1;

    const double wo = tr.omega_p / 2.0;
    const std::size_t total = tr.size();
    m.f_out_amplitude = std::abs(bin(tr.q3, tr.t, wo, 0, total));
    m.pump_amplitude = std::abs(bin(tr.q3, tr.t, tr.omega_p, 0, total));
    const double v_line = 2.0 * std::abs(bin(tr.v_out, tr.t, wo, 0, total));
    if (v_line > 0.0) m.line_dbm = watts_to_dbm(0.5 * v_line * v_line / tr.r_load);

    // Growth from the f_out bin of each half (each half spans whole f_out periods).
    const std::size_t mid = (total / (2 * tr.samples_per_period)) * tr.samples_per_period;
    const double amp1 = std::abs(bin(tr.q3, tr.t, wo, 0, mid));
    const double amp2 = std::abs(bin(tr.q3, tr.t, wo, mid, total));
    const double half_periods = static_cast<double>(mid) / tr.samples_per_period;
    if (amp1 > 0.0 && amp2 > 0.0 && half_periods > 0.0) {
        m.growth_per_period = std::log(amp2 / amp1) / half_periods;
    }

    out.divided = m.radius > 0.0 && m.separation > 1e-3 * m.radius &&
                  m.line_dbm > m.floor_dbm + 20.0;
    return out;
}

bool td_divides(const PfdDesign& design, double v1, const TdThresholdOptions& options) {
    PfdDesign d = design;
    if (options.f_out > 0.0) d.f_out = options.f_out;
    const auto tr = integrate(d, v1, options.config);
    const auto r = detect_period_doubling(tr, d);
    const auto& m = r.metrics;
    if (m.pump_amplitude == 0.0 || m.f_out_amplitude < 1e-12 * m.pump_amplitude) return false;
    if (m.growth_per_period > options.growth_tol) return true;
    if (m.growth_per_period < -options.growth_tol) return false;
    return r.divided;
}

double td_threshold(const PfdDesign& design, double v_lo, double v_hi,
                    const TdThresholdOptions& options) {
    if (!(v_lo > 0.0 && v_hi > v_lo)) throw BracketError("bracket must satisfy 0 < v_lo < v_hi");
    const bool lo = td_divides(design, v_lo, options);
    const bool hi = td_divides(design, v_hi, options);
    if (lo == hi) {
        std::ostringstream msg;
        msg << "bracket [" << v_lo << ", " << v_hi << "] V does not straddle the threshold ("
            << (lo ? "divides at both ends" : "no division at either end") << ")";
        throw BracketError(msg.str());
    }
    if (lo) throw BracketError("division at v_lo but not at v_hi");
    while ((v_hi - v_lo) > options.rel_tol * 0.5 * (v_hi + v_lo)) {
        const double mid = 0.5 * (v_lo + v_hi);
        (td_divides(design, mid, options) ? v_hi : v_lo) = mid;
    }
    return 0.5 * (v_lo + v_hi);
}

std::optional<double> td_threshold_scan(const PfdDesign& design, const std::vector<double>& grid,
                                        const TdThresholdOptions& options) {
    std::optional<bool> previous;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool now = td_divides(design, grid[i], options);
        if (previous && !*previous && now) return td_threshold(design, grid[i - 1], grid[i], options);
        previous = now;
    }
    return std::nullopt;
}

std::vector<PoincareRow> poincare_map(const PfdDesign& design, const std::vector<double>& v1_grid,
                                      const PoincareOptions& options) {
    std::vector<PoincareRow> rows;
    std::optional<TdState> carried;
    double previous_v1 = 0.0;
    for (const double v1 : v1_grid) {
        PoincareRow row;
        row.v1 = v1;
        try {
            IntegrateOptions io;
            io.v1_start = carried ? previous_v1 : 0.0;
            if (carried) {
                TdState s = *carried;
                s[q3] += options.kick * design.varactor.c_dc * v1;
                io.initial_state = s;
            }
            SimConfig cfg = options.config;
            if (!carried) cfg.seed_charge += options.kick * design.varactor.c_dc * v1;
            const auto tr = integrate(design, v1, cfg, io);
            const auto st = stroboscopic(tr);
            double se = 0, so = 0;
            std::size_t ne = 0, no = 0;
            for (std::size_t i = 0; i < st.a.size(); ++i) {
                const double r = std::hypot(st.a[i], st.b[i]);
                if (i % 2 == 0) {
                    se += r;
                    ++ne;
                } else {
                    so += r;
                    ++no;
                }
            }
            row.r_even = ne ? se / ne : 0.0;
            row.r_odd = no ? so / no : 0.0;
            const auto d = detect_period_doubling(tr, design);
            row.separation = d.metrics.radius > 0.0 ? d.metrics.separation / d.metrics.radius : 0.0;
            carried = tr.final_state;
        } catch (const Error& e) {
            row.error = e.what();
            carried.reset();
        }
        previous_v1 = v1;
        rows.push_back(row);
    }
    return rows;
}

std::vector<SpectrumLine> steady_spectrum(const Trajectory& tr) {
    const auto s = static_cast<std::size_t>(tr.samples_per_period);
    if (s == 0 || tr.size() == 0 || tr.size() % (2 * s) != 0) {
        throw WindowError("spectrum window must span an even number of pump periods");
    }
    std::vector<SpectrumLine> lines;
    for (const double w : {tr.omega_p / 2.0, tr.omega_p, 2.0 * tr.omega_p}) {
        SpectrumLine l;
        l.omega = w;
        l.q1 = bin(tr.q1, tr.t, w, 0, tr.size());
        l.q2 = bin(tr.q2, tr.t, w, 0, tr.size());
        l.q3 = bin(tr.q3, tr.t, w, 0, tr.size());
        l.v_out = bin(tr.v_out, tr.t, w, 0, tr.size());
        lines.push_back(l);
    }
    return lines;
}

double EnergyBalance::relative_error() const {
    if (source_w == 0.0) return dissipated_w == 0.0 ? 0.0 : 1.0;
    return std::abs(source_w - dissipated_w) / std::abs(source_w);
}

EnergyBalance energy_balance(const Trajectory& tr) {
    EnergyBalance e;
    std::vector<double> src(tr.size()), diss(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        src[i] = tr.v_src[i] * tr.dq1[i];
        const double i2 = tr.v_out[i] / tr.r_load;
        diss[i] = tr.dq1[i] * tr.dq1[i] * tr.r_source + i2 * i2 * tr.r_load;
    }
    e.source_w = mean_of(src);
    e.dissipated_w = mean_of(diss);
    return e;
}

}  // namespace pfd
