#include "pfd/cli.hpp"

#include "pfd/circuit_model.hpp"
#include "pfd/csv.hpp"
#include "pfd/errors.hpp"
#include "pfd/harmonic_balance.hpp"
#include "pfd/synthesis.hpp"
#include "pfd/threshold.hpp"
#include "pfd/timedomain.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

namespace pfd::cli {

namespace {

using json = nlohmann::json;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

double parse_number(const std::string& text) {
    if (text == "inf" || text == "lossless") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + text + "'");
    }
    if (used != text.size()) throw UsageError("not a number: '" + text + "'");
    return v;
}

std::vector<double> linspace(double a, double b, int n) {
    if (n < 1) throw UsageError("grid needs at least one point");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return g;
}

// Shared state of one invocation.
struct Context {
    std::ostream& out;
    std::ostream& err;
    std::string subcommand;
    std::map<std::string, std::string> params;
    std::string input_text;  // digest source
    std::vector<std::string> outputs;
};

PfdDesign load_design(Context& ctx, const std::string& path) {
    ctx.input_text = read_file(path);
    return parse_design(ctx.input_text);
}

void emit(Context& ctx, const std::optional<std::string>& path, const std::string& text) {
    if (path) {
        write_file(*path, text);
        ctx.outputs.push_back(*path);
    } else {
        ctx.out << text;
    }
}

std::string digest_hex(std::string_view data) { return fmt::format("{:016x}", fnv1a64(data)); }

void write_manifest(const Context& ctx, double seconds) {
    for (const auto& path : ctx.outputs) {
        json m;
        m["subcommand"] = ctx.subcommand;
        m["parameters"] = ctx.params;
        m["tool_version"] = kVersion;
        m["input_digest"] = "fnv1a64:" + digest_hex(ctx.input_text);
        m["output_digest"] = "fnv1a64:" + digest_hex(read_file(path));
        m["duration_s"] = seconds;
        write_file(path + ".manifest.json", m.dump(2) + "\n");
    }
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<double> parse_grid(const std::string& text) {
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw UsageError("range must be START:STOP:N, got '" + text + "'");
        const double n = parse_number(parts[2]);
        if (n != std::floor(n) || n < 1) throw UsageError("range point count must be a positive integer");
        return linspace(parse_number(parts[0]), parse_number(parts[1]), static_cast<int>(n));
    }
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(parse_number(p));
    if (out.empty()) throw UsageError("empty grid");
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Design and verification of 2:1 varactor parametric frequency dividers", "pfd"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Context ctx{out, err, {}, {}, {}, {}};
    std::function<void()> action;

    // Options shared by several subcommands.
    std::string design_path;
    std::optional<std::string> out_path;
    double f_out = 0.0;

    // validate
    auto* validate = app.add_subcommand("validate", "check a design file and list diagnostics");
    validate->add_option("--design", design_path, "design file")->required();
    validate->callback([&] {
        action = [&] {
            ctx.input_text = read_file(design_path);
            const auto design = parse_design_unchecked(ctx.input_text);
            const auto diags = validate_design(design);
            for (const auto& d : diags) {
                ctx.out << (d.severity == Severity::error ? "error" : "warning") << ": "
                        << (d.where.empty() ? "" : d.where + ": ") << d.message << '\n';
            }
            if (diags.empty()) ctx.out << "ok\n";
            if (has_errors(diags)) throw DesignError("design has errors");
        };
    });

    // synth
    double l3 = 0.0, cdc = 0.0, cd = -0.3, cd2 = 0.02, rs = 50.0, rl = 50.0;
    std::optional<double> q, z0;
    auto* synth = app.add_subcommand("synth", "synthesize a canonical design");
    synth->add_option("--l3", l3, "L3 in henries")->required();
    synth->add_option("--cdc", cdc, "C_DC in farads")->required();
    synth->add_option("--fout", f_out, "output frequency in hertz")->required();
    synth->add_option("--q", q, "inductor quality factor (absent: lossless)");
    synth->add_option("--transformer-z0", z0, "insert a quarter-wave stage of this Z0 (ohm)");
    synth->add_option("--cd", cd, "C_d in 1/V");
    synth->add_option("--cd2", cd2, "C_d2 in 1/V^2");
    synth->add_option("--rs", rs, "source resistance");
    synth->add_option("--rl", rl, "load resistance");
    synth->add_option("--out", out_path, "output design file (default: stdout)");
    synth->callback([&] {
        action = [&] {
            const auto values = synthesize_canonical(l3, cdc, f_out);
            for (const auto& n : values.notes) ctx.err << "note: " << n << '\n';
            if (!values.feasible) throw DesignError("no feasible design for these inputs");
            SurfaceOptions so;
            so.f_out = f_out;
            so.q = q;
            so.law = VaractorLaw::constant(cd, cd2);
            so.r_source = rs;
            so.r_load = rl;
            if (z0) so.transformer = quarter_wave_lsection(*z0, f_out, rl);
            const auto design = synthesize_design(l3, cdc, so);
            emit(ctx, out_path, serialize_design(*design));
        };
    });

    // threshold
    auto* threshold = app.add_subcommand("threshold", "closed-form threshold at one frequency");
    threshold->add_option("--design", design_path)->required();
    threshold->add_option("--fout", f_out, "output frequency (default: design f_out)");
    threshold->callback([&] {
        action = [&] {
            const auto design = load_design(ctx, design_path);
            const auto r = vth_closed_form(design, f_out > 0.0 ? f_out : design.f_out);
            ctx.out << fmt::format("vth_v={:.6g}\npth_dbm={:.4f}\npth_w={:.6g}\nform={}\n",
                                   r.v_th_mag, r.p_th_dbm, r.p_th_w,
                                   r.normalized_form ? "normalized" : "direct");
        };
    });

    // sweep
    double start = 0.0, stop = 0.0;
    int points = 0;
    auto* sweep = app.add_subcommand("sweep", "threshold versus output frequency");
    sweep->add_option("--design", design_path)->required();
    sweep->add_option("--fout-start", start)->required();
    sweep->add_option("--fout-stop", stop)->required();
    sweep->add_option("--points", points)->required()->check(CLI::PositiveNumber);
    sweep->add_option("--csv", out_path);
    sweep->callback([&] {
        action = [&] {
            const auto design = load_design(ctx, design_path);
            std::ostringstream s;
            csv::write_sweep(s, threshold_sweep(design, linspace(start, stop, points)));
            emit(ctx, out_path, s.str());
        };
    });

    // surface
    std::string l3_range, cdc_range, q_range;
    auto* surface = app.add_subcommand("surface", "threshold over an L3 x C_DC grid");
    surface->add_option("--l3-range", l3_range, "START:STOP:N or a comma list")->required();
    surface->add_option("--cdc-range", cdc_range, "START:STOP:N or a comma list")->required();
    surface->add_option("--q", q, "inductor quality factor (absent: lossless)");
    surface->add_option("--fout", f_out)->required();
    surface->add_option("--transformer-z0", z0);
    surface->add_option("--cd", cd);
    surface->add_option("--cd2", cd2);
    surface->add_option("--csv", out_path);
    surface->callback([&] {
        action = [&] {
            SurfaceOptions so;
            so.f_out = f_out;
            so.q = q;
            so.law = VaractorLaw::constant(cd, cd2);
            if (z0) so.transformer = quarter_wave_lsection(*z0, f_out, so.r_load);
            ctx.input_text = l3_range + "|" + cdc_range;
            std::ostringstream s;
            csv::write_surface(s, pth_surface(parse_grid(l3_range), parse_grid(cdc_range), so));
            emit(ctx, out_path, s.str());
        };
    });

    // qsens
    auto* qsens = app.add_subcommand("qsens", "threshold over C_DC and Q at fixed L3");
    qsens->add_option("--l3", l3)->required();
    qsens->add_option("--cdc-range", cdc_range)->required();
    qsens->add_option("--q-range", q_range, "comma list or START:STOP:N; 'inf' is lossless")
        ->required();
    qsens->add_option("--fout", f_out)->required();
    qsens->add_option("--cd", cd);
    qsens->add_option("--cd2", cd2);
    qsens->add_option("--csv", out_path);
    qsens->callback([&] {
        action = [&] {
            SurfaceOptions so;
            so.f_out = f_out;
            so.law = VaractorLaw::constant(cd, cd2);
            std::vector<std::optional<double>> qs;
            for (double v : parse_grid(q_range)) {
                qs.push_back(std::isinf(v) ? std::nullopt : std::optional<double>(v));
            }
            ctx.input_text = cdc_range + "|" + q_range;
            const auto table = q_sensitivity(l3, parse_grid(cdc_range), qs, so);
            for (const auto& [qq, best] : table.argmin_c_dc) {
                ctx.err << "argmin q=" << csv::quality(qq) << " cdc_f=" << csv::number(best) << '\n';
            }
            std::ostringstream s;
            csv::write_qsens(s, table);
            emit(ctx, out_path, s.str());
        };
    });

    // hb
    auto* hb = app.add_subcommand("hb", "harmonic-balance branches and stability");
    hb->add_option("--design", design_path)->required();
    hb->add_option("--v1-start", start)->required();
    hb->add_option("--v1-stop", stop)->required();
    hb->add_option("--points", points)->required()->check(CLI::PositiveNumber);
    hb->add_option("--fout", f_out);
    hb->add_option("--csv", out_path);
    hb->callback([&] {
        action = [&] {
            const auto design = load_design(ctx, design_path);
            const double f = f_out > 0.0 ? f_out : design.f_out;
            const auto report = classify_and_stability(design, f, linspace(start, stop, points));
            for (const auto& d : report.diagnostics) ctx.err << "diagnostic: " << d << '\n';
            std::ostringstream s;
            csv::write_branches(s, design, f, report);
            emit(ctx, out_path, s.str());
        };
    });

    // pout
    std::optional<double> floor_dbm;
    auto* pout = app.add_subcommand("pout", "output power versus available input power");
    pout->add_option("--design", design_path)->required();
    pout->add_option("--pin-start", start)->required();
    pout->add_option("--pin-stop", stop)->required();
    pout->add_option("--points", points)->required()->check(CLI::PositiveNumber);
    pout->add_option("--floor", floor_dbm, "noise floor in dBm (default: design value)");
    pout->add_option("--fout", f_out);
    pout->add_option("--csv", out_path);
    pout->callback([&] {
        action = [&] {
            const auto design = load_design(ctx, design_path);
            const auto rows = pout_vs_pin(design, f_out > 0.0 ? f_out : design.f_out,
                                          linspace(start, stop, points),
                                          floor_dbm.value_or(design.noise_floor_dbm));
            for (const auto& r : rows) {
                if (!r.diagnostic.empty()) ctx.err << "diagnostic: " << r.diagnostic << '\n';
            }
            std::ostringstream s;
            csv::write_pout(s, rows);
            emit(ctx, out_path, s.str());
        };
    });

    // sim
    double v1 = 0.0;
    SimConfig sim_cfg;
    bool fixed_r = false;
    bool rational = false;
    auto* sim = app.add_subcommand("sim", "transient simulation at one drive level");
    sim->add_option("--design", design_path)->required();
    sim->add_option("--v1", v1, "peak source voltage")->required();
    sim->add_option("--periods", sim_cfg.periods_settle, "settling pump periods");
    sim->add_option("--measure", sim_cfg.periods_measure, "measured pump periods (power of two)");
    sim->add_option("--rtol", sim_cfg.rel_tol);
    sim->add_flag("--fixed-r", fixed_r, "include inductor losses as fixed resistors");
    sim->add_flag("--rational", rational, "use q / C(q) for the varactor instead of the cubic inverse");
    sim->add_option("--csv", out_path);
    sim->callback([&] {
        action = [&] {
            const auto design = load_design(ctx, design_path);
            if (fixed_r) sim_cfg.loss_mode = LossMode::fixed_r;
            if (rational) sim_cfg.varactor_form = VaractorForm::rational;
            const auto tr = integrate(design, v1, sim_cfg);
            const auto d = detect_period_doubling(tr, design);
            ctx.err << fmt::format(
                "divided={} separation_rel={:.3e} line_dbm={:.2f} growth_per_period={:.3e} "
                "settled={}\n",
                d.divided, d.metrics.radius > 0 ? d.metrics.separation / d.metrics.radius : 0.0,
                d.metrics.line_dbm, d.metrics.growth_per_period, d.metrics.settled);
            std::ostringstream s;
            csv::write_trajectory(s, tr);
            emit(ctx, out_path, s.str());
        };
    });

    // tdthreshold
    double vlo = 0.0, vhi = 0.0;
    auto* tdth = app.add_subcommand("tdthreshold", "bisect the threshold in the time domain");
    tdth->add_option("--design", design_path)->required();
    tdth->add_option("--vlo", vlo)->required();
    tdth->add_option("--vhi", vhi)->required();
    tdth->add_option("--fout", f_out);
    tdth->callback([&] {
        action = [&] {
            const auto design = load_design(ctx, design_path);
            TdThresholdOptions o;
            o.f_out = f_out;
            const double v = td_threshold(design, vlo, vhi, o);
            ctx.out << fmt::format("vth_v={:.6g}\npth_dbm={:.4f}\n", v,
                                   watts_to_dbm(v * v / (8.0 * design.r_source)));
        };
    });

    // poincare
    PoincareOptions pm;
    auto* poincare = app.add_subcommand("poincare", "stroboscopic returns under a rising drive");
    poincare->add_option("--design", design_path)->required();
    poincare->add_option("--v1-start", start)->required();
    poincare->add_option("--v1-stop", stop)->required();
    poincare->add_option("--points", points)->required()->check(CLI::PositiveNumber);
    poincare->add_option("--settle", pm.config.periods_settle, "pump periods per point");
    poincare->add_option("--csv", out_path);
    poincare->callback([&] {
        action = [&] {
            const auto design = load_design(ctx, design_path);
            const auto rows = poincare_map(design, linspace(start, stop, points), pm);
            for (const auto& r : rows) {
                if (!r.error.empty()) ctx.err << "v1=" << r.v1 << ": " << r.error << '\n';
            }
            std::ostringstream s;
            csv::write_poincare(s, rows);
            emit(ctx, out_path, s.str());
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    for (const auto* sub : app.get_subcommands()) {
        ctx.subcommand = sub->get_name();
        for (const auto* opt : sub->get_options()) {
            if (opt->count() == 0 || opt->get_name() == "--help") continue;
            ctx.params[opt->get_name()] = opt->as<std::string>();
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        action();
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_manifest(ctx, seconds);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace pfd::cli
