// qfc: command-line front end for the conversion-interface toolkit.
//
// Subcommands cover the full reproduction pipeline: phase-matching curves,
// rate/SNR predictions, Monte Carlo tag generation, coincidence analysis,
// curve fitting and an end-to-end report. Every results document embeds the
// fully resolved configuration so a run is reproducible from the JSON alone.
//
// Exit codes: 0 success, 1 configuration, 2 solver, 3 simulation I/O,
// 4 analysis input.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qfc/chain.hpp"
#include "qfc/config.hpp"
#include "qfc/correlator.hpp"
#include "qfc/fitting.hpp"
#include "qfc/montecarlo.hpp"
#include "qfc/phasematch.hpp"
#include "qfc/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qfc;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;
constexpr int kExitSimIo = 3;
constexpr int kExitAnalysis = 4;

struct CliError : std::runtime_error {
    int code;
    CliError(int code_, const std::string& msg) : std::runtime_error(msg), code(code_) {}
};

RunConfig resolve_config(const std::string& positional) {
    std::string path = positional;
    if (path.empty()) {
        if (const char* env = std::getenv("QFC_CONFIG")) path = env;
    }
    if (path.empty())
        throw CliError(kExitConfig, "no configuration: pass a config file or set QFC_CONFIG");
    return load_config(path);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliError(kExitSimIo, "cannot write " + path);
    out << text;
}

void emit(const json& doc, const std::string& out_path) {
    const std::string text = doc.dump(2) + "\n";
    std::fputs(text.c_str(), stdout);
    if (!out_path.empty()) write_text(out_path, text);
}

// ---------------------------------------------------------------------- phasematch

int cmd_phasematch(const std::string& config_path, std::string axis_name, double lo, double hi,
                   int samples, const std::string& out_csv, const std::string& out_json) {
    const RunConfig cfg = resolve_config(config_path);
    const auto& pm = cfg.phasematch;

    TuningAxis axis;
    if (axis_name == "temperature")
        axis = TuningAxis::temperature;
    else if (axis_name == "signal" || axis_name == "signal_wavelength")
        axis = TuningAxis::signal_wavelength;
    else if (axis_name == "pump" || axis_name == "pump_wavelength")
        axis = TuningAxis::pump_wavelength;
    else
        throw CliError(kExitConfig, "unknown axis '" + axis_name + "'");

    PhaseMatchSpec spec;
    spec.lambda_sig_nm = pm.lambda_sig_nm;
    spec.lambda_conv_nm = pm.lambda_conv_nm;
    spec.lambda_pump_nm = energy_match(pm.lambda_sig_nm, pm.lambda_conv_nm, EnergySolve::pump);
    spec.poling_period_um = pm.poling_period_um;
    spec.temperature_c = pm.temperature_c;
    spec.crystal_length_cm = pm.crystal_length_cm;
    spec.qpm_order = pm.qpm_order;

    if (lo == 0.0 && hi == 0.0) {  // axis-dependent default window
        switch (axis) {
            case TuningAxis::temperature:
                lo = pm.temperature_c - 20.0;
                hi = pm.temperature_c + 20.0;
                break;
            case TuningAxis::signal_wavelength:
                lo = pm.lambda_sig_nm - 1.0;
                hi = pm.lambda_sig_nm + 1.0;
                break;
            case TuningAxis::pump_wavelength:
                lo = spec.lambda_pump_nm - 5.0;
                hi = spec.lambda_pump_nm + 5.0;
                break;
        }
    }

    const TuningCurve curve = conversion_spectrum(spec, cfg.dispersion, axis, lo, hi, samples);
    write_tuning_curve_csv(curve, out_csv);

    json doc;
    doc["axis"] = axis_name;
    doc["range"] = {lo, hi};
    doc["samples"] = samples;
    doc["csv"] = out_csv;
    doc["peak_bracketed"] = curve.peak_bracketed;
    if (curve.fwhm) doc["fwhm"] = *curve.fwhm;
    doc["solved"]["poling_period_um"] = solve_poling_period(
        spec.lambda_sig_nm, spec.lambda_pump_nm, spec.temperature_c, cfg.dispersion,
        spec.qpm_order, spec.crystal_length_cm);
    doc["solved"]["temperature_c"] =
        solve_temperature(spec.lambda_sig_nm, spec.lambda_pump_nm, spec.poling_period_um,
                          cfg.dispersion, spec.qpm_order, spec.crystal_length_cm);
    doc["config"] = json::parse(cfg.to_json());
    emit(doc, out_json);
    return 0;
}

// ------------------------------------------------------------------------- predict

int cmd_predict(const std::string& config_path, const std::string& out_json) {
    const RunConfig cfg = resolve_config(config_path);
    const RatePrediction rates = predict_rates(cfg.chain, cfg.emitter);

    json doc;
    doc["input_rate_hz"] = rates.input_rate_hz;
    doc["signal_rate_hz"] = rates.signal_rate_hz;
    doc["noise_rate_hz"] = rates.noise_rate_hz;
    doc["snr"] = predict_snr(cfg.chain, cfg.emitter);
    doc["transmission"] = signal_transmission(cfg.chain);
    json after = json::array();
    for (std::size_t i = 0; i < cfg.chain.stages.size(); ++i)
        after.push_back({{"stage", cfg.chain.stages[i].label},
                         {"rate_hz", rates.after_stage_hz[i]}});
    doc["after_stage"] = after;
    for (const auto& s : cfg.chain.stages)
        if (s.kind == StageKind::converter)
            doc["optimal_pump_w"] = optimal_pump_power(s.eta_n, s.length_cm);
    doc["config"] = json::parse(cfg.to_json());
    emit(doc, out_json);
    return 0;
}

// ------------------------------------------------------------------------ simulate

SimRun build_run(const RunConfig& cfg, const std::string& setup, const std::string& arm,
                 std::uint64_t pulses, std::uint64_t seed, int threads) {
    SimRun run;
    run.seed = seed;
    run.n_pulses = pulses;
    run.emitter = cfg.emitter;
    run.setup = cfg.setup;
    run.threads = threads;
    if (setup == "hbt") {
        run.setup.kind = SetupKind::HBT;
    } else if (setup == "hom-co" || setup == "hom-cross") {
        run.setup.kind = SetupKind::UMZI_HOM;
        run.setup.polarization = setup == "hom-co" ? Polarization::co : Polarization::cross;
    } else {
        throw CliError(kExitConfig, "unknown setup '" + setup + "' (hbt|hom-co|hom-cross)");
    }
    if (arm == "nir") {
        run.transmission = 1.0;
        run.noise_rate_hz = 0.0;
    } else if (arm == "telecom") {
        run.transmission = signal_transmission(cfg.chain);
        run.noise_rate_hz = output_noise_rate(cfg.chain);
    } else {
        throw CliError(kExitConfig, "unknown arm '" + arm + "' (nir|telecom)");
    }
    return run;
}

int cmd_simulate(const std::string& config_path, const std::string& setup, const std::string& arm,
                 std::uint64_t pulses, std::uint64_t seed, int threads, const std::string& out) {
    const RunConfig cfg = resolve_config(config_path);
    if (pulses == 0) throw CliError(kExitConfig, "--pulses must be positive");
    const SimRun run = build_run(cfg, setup, arm, pulses, seed, threads);
    try {
        simulate_to_file(run, out, cfg.to_json());
    } catch (const FormatError& e) {
        throw CliError(kExitSimIo, e.what());
    }
    std::printf("{\"tag_file\": \"%s\", \"meta\": \"%s.meta.json\"}\n", out.c_str(), out.c_str());
    return 0;
}

// ----------------------------------------------------------------------- correlate

std::optional<double> sidecar_period(const std::string& tagfile) {
    std::ifstream in(tagfile + ".meta.json");
    if (!in) return std::nullopt;
    try {
        json meta = json::parse(in);
        if (meta.contains("period_ps")) return meta["period_ps"].get<double>();
    } catch (const json::exception&) {
    }
    return std::nullopt;
}

json g2_document(const std::string& tagfile, std::int64_t bin, std::int64_t range, double period,
                 double window, const std::string& out_csv) {
    std::vector<std::uint64_t> a, b;
    {
        TagReader reader(tagfile);
        TimeTag t;
        while (reader.next(t)) (t.channel == 0 ? a : b).push_back(t.timestamp_ps);
    }
    const auto hist = cross_correlate_parallel(a, b, bin, range, 8);
    const auto areas = integrate_peaks(hist, period, window);
    const auto g2 = g2_zero(areas);

    if (!out_csv.empty()) {
        std::ostringstream csv;
        csv << "delay_ps,counts\n";
        for (std::size_t i = 0; i < hist.bins.size(); ++i)
            csv << hist.bin_center(i) << "," << hist.bins[i] << "\n";
        write_text(out_csv, csv.str());
    }

    json doc;
    doc["tag_file"] = tagfile;
    doc["bin_width_ps"] = bin;
    doc["range_ps"] = range;
    doc["period_ps"] = period;
    doc["window_half_width_ps"] = window;
    doc["total_a"] = hist.total_a;
    doc["total_b"] = hist.total_b;
    doc["n_side_peaks"] = areas.n_side_peaks;
    doc["g2"] = {{"value", g2.value}, {"err", g2.err}};
    json peaks = json::object();
    for (const auto& [n, area] : areas.areas) peaks[std::to_string(n)] = area;
    doc["peak_areas"] = peaks;
    return doc;
}

double resolve_period(const std::string& tagfile, double user_period) {
    const auto meta = sidecar_period(tagfile);
    if (user_period <= 0.0) {
        if (!meta)
            throw CliError(kExitAnalysis,
                           "no --period given and no metadata sidecar next to " + tagfile);
        return *meta;
    }
    if (meta && std::abs(user_period - *meta) / *meta > 1e-3) {
        std::fprintf(stderr,
                     "warning: --period %.3f ps differs from the recorded pulse period %.3f ps; "
                     "peaks will smear\n",
                     user_period, *meta);
    }
    return user_period;
}

int cmd_correlate(const std::string& tagfile, std::int64_t bin, std::int64_t range,
                  double user_period, double window, const std::string& out_prefix) {
    const double period = resolve_period(tagfile, user_period);
    const std::string csv = out_prefix.empty() ? "" : out_prefix + ".csv";
    json doc = g2_document(tagfile, bin, range, period, window, csv);
    emit(doc, out_prefix.empty() ? "" : out_prefix + ".json");
    return 0;
}

// ----------------------------------------------------------------------------- hom

G2Result parse_g2_argument(const std::string& arg) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(arg, &pos);
        if (pos == arg.size()) return {v, 0.0};
    } catch (const std::exception&) {
    }
    std::ifstream in(arg);
    if (!in) throw CliError(kExitAnalysis, "--g2: neither a number nor a readable file: " + arg);
    try {
        json doc = json::parse(in);
        return {doc.at("g2").at("value").get<double>(), doc.at("g2").at("err").get<double>()};
    } catch (const json::exception& e) {
        throw CliError(kExitAnalysis, "--g2 file " + arg + ": " + e.what());
    }
}

int cmd_hom(const std::string& co_file, const std::string& cross_file, const std::string& g2_arg,
            std::int64_t bin, std::int64_t range, double user_period, double window,
            const std::string& out_json) {
    const double period = resolve_period(co_file, user_period);
    const json co = g2_document(co_file, bin, range, period, window, "");
    const json cross = g2_document(cross_file, bin, range, period, window, "");

    const G2Result g2_co{co["g2"]["value"], co["g2"]["err"]};
    const G2Result g2_cross{cross["g2"]["value"], cross["g2"]["err"]};
    HomResult hom = hom_visibility(g2_co, g2_cross);
    const G2Result g2_src = parse_g2_argument(g2_arg);
    corrected_indistinguishability(hom, g2_src);

    json doc;
    doc["co"] = co;
    doc["cross"] = cross;
    doc["source_g2"] = {{"value", g2_src.value}, {"err", g2_src.err}};
    doc["v_hom"] = {{"value", hom.v_hom}, {"err", hom.v_hom_err}};
    doc["m_s"] = {{"value", hom.m_s}, {"err", hom.m_s_err}};
    emit(doc, out_json);
    return 0;
}

// ----------------------------------------------------------------------------- fit

int cmd_fit(const std::string& csv_path, const std::string& model_name, double length,
            const std::vector<double>& guess, const std::string& out_json) {
    FitProblem p;
    if (model_name == "power") {
        p.model = FitModel::sin2_sqrt_power;
        if (!(length > 0)) throw CliError(kExitConfig, "--length must be positive for model power");
        p.fixed["L"] = length;
    } else if (model_name == "detuning") {
        p.model = FitModel::sinc2_detuning;
    } else {
        throw CliError(kExitConfig, "unknown model '" + model_name + "' (power|detuning)");
    }

    std::ifstream in(csv_path);
    if (!in) throw CliError(kExitAnalysis, "cannot open " + csv_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        bool numeric = true;
        while (std::getline(row, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) continue;  // header
        if (vals.size() < 2)
            throw CliError(kExitAnalysis, csv_path + ": need x,y[,sigma] rows");
        p.x.push_back(vals[0]);
        p.y.push_back(vals[1]);
        p.sigma.push_back(vals.size() > 2 ? vals[2] : 1.0);
    }

    if (!guess.empty()) {
        p.initial_guess = guess;
    } else if (p.model == FitModel::sin2_sqrt_power) {
        double ymax = 0.0;
        for (double y : p.y) ymax = std::max(ymax, y);
        p.initial_guess = {ymax, 0.3};
    } else {
        double ymax = 0.0, xpeak = p.x.empty() ? 0.0 : p.x.front();
        for (std::size_t i = 0; i < p.x.size(); ++i)
            if (p.y[i] > ymax) ymax = p.y[i], xpeak = p.x[i];
        const double span = p.x.empty() ? 1.0 : std::abs(p.x.back() - p.x.front());
        p.initial_guess = {ymax, xpeak, 10.0 / std::max(span, 1e-9)};
    }

    const FitResult r = fit(p);
    json doc;
    doc["model"] = model_name;
    doc["parameters"] = r.parameters;
    doc["errors"] = r.errors;
    doc["reduced_chi2"] = r.reduced_chi2;
    doc["converged"] = r.converged;
    doc["degenerate"] = r.degenerate;
    doc["iterations"] = r.iterations;
    if (p.model == FitModel::sin2_sqrt_power && r.parameters[1] > 0)
        doc["optimal_pump_w"] = optimal_pump_power(r.parameters[1], length);
    emit(doc, out_json);
    return 0;
}

// -------------------------------------------------------------------------- report

struct ArmSummary {
    json g2, hom;
};

ArmSummary report_arm(const RunConfig& cfg, const std::string& arm, const fs::path& dir,
                      std::uint64_t pulses, std::uint64_t seed, int threads, json& manifest) {
    ArmSummary out;
    const char* setups[3] = {"hbt", "hom-co", "hom-cross"};
    std::string files[3];
    for (int i = 0; i < 3; ++i) {
        const SimRun run = build_run(cfg, setups[i], arm, pulses, seed + i, threads);
        files[i] = (dir / (arm + "_" + setups[i] + ".tags")).string();
        simulate_to_file(run, files[i], cfg.to_json());
        manifest["files"].push_back(files[i]);
        manifest["files"].push_back(files[i] + ".meta.json");
    }
    const double period = cfg.emitter.period_ps();
    const std::string hbt_csv = (dir / (arm + "_hbt_histogram.csv")).string();
    out.g2 = g2_document(files[0], cfg.analysis.bin_width_ps, cfg.analysis.range_ps, period,
                         cfg.analysis.window_half_width_ps, hbt_csv);
    manifest["files"].push_back(hbt_csv);

    const json co = g2_document(files[1], cfg.analysis.bin_width_ps, cfg.analysis.range_ps, period,
                                cfg.analysis.window_half_width_ps,
                                (dir / (arm + "_hom_co_histogram.csv")).string());
    const json cross = g2_document(files[2], cfg.analysis.bin_width_ps, cfg.analysis.range_ps,
                                   period, cfg.analysis.window_half_width_ps,
                                   (dir / (arm + "_hom_cross_histogram.csv")).string());
    manifest["files"].push_back((dir / (arm + "_hom_co_histogram.csv")).string());
    manifest["files"].push_back((dir / (arm + "_hom_cross_histogram.csv")).string());

    HomResult hom = hom_visibility({co["g2"]["value"], co["g2"]["err"]},
                                   {cross["g2"]["value"], cross["g2"]["err"]});
    corrected_indistinguishability(hom, {out.g2["g2"]["value"], out.g2["g2"]["err"]});
    out.hom["v_hom"] = {{"value", hom.v_hom}, {"err", hom.v_hom_err}};
    out.hom["m_s"] = {{"value", hom.m_s}, {"err", hom.m_s_err}};
    return out;
}

int cmd_report(const std::string& config_path, const std::string& out_dir, std::uint64_t pulses,
               std::uint64_t seed, int threads) {
    const RunConfig cfg = resolve_config(config_path);
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw CliError(kExitSimIo, "cannot create " + out_dir + ": " + ec.message());

    json manifest;
    manifest["files"] = json::array();
    auto stage = [](const char* name) { std::fprintf(stderr, "report: %s\n", name); };

    json summary;
    summary["config"] = json::parse(cfg.to_json());

    try {
        stage("phase matching");
        const auto& pm = cfg.phasematch;
        PhaseMatchSpec spec;
        spec.lambda_sig_nm = pm.lambda_sig_nm;
        spec.lambda_conv_nm = pm.lambda_conv_nm;
        spec.lambda_pump_nm = energy_match(pm.lambda_sig_nm, pm.lambda_conv_nm, EnergySolve::pump);
        spec.poling_period_um = pm.poling_period_um;
        spec.temperature_c = pm.temperature_c;
        spec.crystal_length_cm = pm.crystal_length_cm;
        spec.qpm_order = pm.qpm_order;
        const auto t_curve = conversion_spectrum(spec, cfg.dispersion, TuningAxis::temperature,
                                                 pm.temperature_c - 20.0, pm.temperature_c + 20.0,
                                                 2001);
        const auto s_curve =
            conversion_spectrum(spec, cfg.dispersion, TuningAxis::signal_wavelength,
                                pm.lambda_sig_nm - 1.0, pm.lambda_sig_nm + 1.0, 2001);
        write_tuning_curve_csv(t_curve, (dir / "tuning_temperature.csv").string());
        write_tuning_curve_csv(s_curve, (dir / "tuning_signal.csv").string());
        manifest["files"].push_back((dir / "tuning_temperature.csv").string());
        manifest["files"].push_back((dir / "tuning_signal.csv").string());
        summary["phasematch"] = {
            {"pump_nm", spec.lambda_pump_nm},
            {"solved_temperature_c",
             solve_temperature(spec.lambda_sig_nm, spec.lambda_pump_nm, spec.poling_period_um,
                               cfg.dispersion, spec.qpm_order, spec.crystal_length_cm)},
            {"fwhm_temperature_c", t_curve.fwhm ? json(*t_curve.fwhm) : json()},
            {"fwhm_signal_nm", s_curve.fwhm ? json(*s_curve.fwhm) : json()}};
    } catch (const Error& e) {
        throw CliError(kExitSolver, std::string("report stage 'phase matching': ") + e.what());
    }

    try {
        stage("rate prediction");
        const RatePrediction rates = predict_rates(cfg.chain, cfg.emitter);
        summary["rates"] = {{"input_hz", rates.input_rate_hz},
                            {"output_hz", rates.signal_rate_hz},
                            {"noise_hz", rates.noise_rate_hz},
                            {"snr", predict_snr(cfg.chain, cfg.emitter)},
                            {"efficiency", signal_transmission(cfg.chain)}};
    } catch (const Error& e) {
        throw CliError(kExitSolver, std::string("report stage 'rate prediction': ") + e.what());
    }

    ArmSummary nir, telecom;
    try {
        stage("simulation + correlation (nir)");
        nir = report_arm(cfg, "nir", dir, pulses, seed, threads, manifest);
        stage("simulation + correlation (telecom)");
        telecom = report_arm(cfg, "telecom", dir, pulses, seed + 100, threads, manifest);
    } catch (const Error& e) {
        throw CliError(kExitSimIo, std::string("report stage 'simulation': ") + e.what());
    }

    try {
        stage("efficiency sweep fit");
        FitProblem p;
        p.model = FitModel::sin2_sqrt_power;
        double length = 0.0;
        for (const auto& s : cfg.chain.stages)
            if (s.kind == StageKind::converter) length = s.length_cm;
        p.fixed["L"] = length;
        std::ostringstream csv;
        csv << "pump_w,efficiency,sigma\n";
        ChainModel swept = cfg.chain;
        for (int i = 0; i < 20; ++i) {
            swept.pump_power_w = 0.025 + 0.025 * i;
            const double eff = signal_transmission(swept);
            p.x.push_back(swept.pump_power_w);
            p.y.push_back(eff);
            p.sigma.push_back(0.01);
            csv << swept.pump_power_w << "," << eff << ",0.01\n";
        }
        write_text((dir / "efficiency_sweep.csv").string(), csv.str());
        manifest["files"].push_back((dir / "efficiency_sweep.csv").string());
        p.initial_guess = {0.3, 0.3};
        const FitResult r = fit(p);
        summary["efficiency_fit"] = {{"eta_max", r.parameters[0]},
                                     {"eta_n", r.parameters[1]},
                                     {"optimal_pump_w", optimal_pump_power(r.parameters[1], length)},
                                     {"converged", r.converged}};
    } catch (const Error& e) {
        throw CliError(kExitSolver, std::string("report stage 'efficiency fit': ") + e.what());
    }

    summary["nir"] = {{"g2", nir.g2["g2"]}, {"v_hom", nir.hom["v_hom"]}, {"m_s", nir.hom["m_s"]}};
    summary["telecom"] = {{"g2", telecom.g2["g2"]},
                          {"v_hom", telecom.hom["v_hom"]},
                          {"m_s", telecom.hom["m_s"]}};
    summary["seed"] = seed;
    summary["n_pulses"] = pulses;

    write_text((dir / "summary.json").string(), summary.dump(2) + "\n");
    manifest["files"].push_back((dir / "summary.json").string());

    std::ostringstream table;
    const auto line = [&](const char* name, const json& v, const json& err) {
        table << name << ": " << v.dump() << " +- " << err.dump() << "\n";
    };
    table << "efficiency: " << summary["rates"]["efficiency"].dump() << "\n"
          << "rate in/out (Hz): " << summary["rates"]["input_hz"].dump() << " / "
          << summary["rates"]["output_hz"].dump() << "\n"
          << "SNR: " << summary["rates"]["snr"].dump() << "\n";
    line("g2 nir", summary["nir"]["g2"]["value"], summary["nir"]["g2"]["err"]);
    line("g2 telecom", summary["telecom"]["g2"]["value"], summary["telecom"]["g2"]["err"]);
    line("M_s nir", summary["nir"]["m_s"]["value"], summary["nir"]["m_s"]["err"]);
    line("M_s telecom", summary["telecom"]["m_s"]["value"], summary["telecom"]["m_s"]["err"]);
    write_text((dir / "summary.txt").string(), table.str());
    manifest["files"].push_back((dir / "summary.txt").string());

    write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    std::fputs((summary.dump(2) + "\n").c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum frequency conversion toolkit"};
    app.require_subcommand(1);

    std::string config_path, axis = "temperature", out_csv = "tuning_curve.csv", out_json;
    double lo = 0.0, hi = 0.0;
    int samples = 2001;
    auto* pm = app.add_subcommand("phasematch", "tuning curves and phase-matching solutions");
    pm->add_option("config", config_path, "configuration file (or QFC_CONFIG)");
    pm->add_option("--axis", axis, "temperature|signal|pump");
    pm->add_option("--lo", lo, "scan start (axis units)");
    pm->add_option("--hi", hi, "scan end (axis units)");
    pm->add_option("--samples", samples, "sample count");
    pm->add_option("--out", out_csv, "curve CSV path");
    pm->add_option("--json", out_json, "also write the results JSON here");

    auto* pr = app.add_subcommand("predict", "photon budget and SNR prediction");
    pr->add_option("config", config_path, "configuration file (or QFC_CONFIG)");
    pr->add_option("--json", out_json, "also write the results JSON here");

    std::string setup = "hbt", arm = "nir", sim_out = "run.tags";
    std::uint64_t pulses = 10000000, seed = 1;
    int threads = 0;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo tag-stream generation");
    sim->add_option("config", config_path, "configuration file (or QFC_CONFIG)");
    sim->add_option("--setup", setup, "hbt|hom-co|hom-cross");
    sim->add_option("--arm", arm, "nir|telecom");
    sim->add_option("--pulses", pulses, "number of excitation pulses");
    sim->add_option("--seed", seed, "RNG seed");
    sim->add_option("--threads", threads, "worker threads (0 = all cores)");
    sim->add_option("--out", sim_out, "output tag file");

    std::string tagfile, out_prefix;
    std::int64_t bin = 100, range = 200000;
    double period = 0.0, window = 3000.0;
    auto* corr = app.add_subcommand("correlate", "coincidence histogram and g2(0)");
    corr->add_option("tagfile", tagfile, "tag file")->required();
    corr->add_option("--bin", bin, "bin width (ps)");
    corr->add_option("--range", range, "delay range (ps)");
    corr->add_option("--period", period, "pulse period (ps); default from the metadata sidecar");
    corr->add_option("--window", window, "peak half-window (ps)");
    corr->add_option("--out", out_prefix, "write <out>.csv and <out>.json");

    std::string co_file, cross_file, g2_arg;
    auto* hom = app.add_subcommand("hom", "two-photon interference visibility");
    hom->add_option("co", co_file, "co-polarized tag file")->required();
    hom->add_option("cross", cross_file, "cross-polarized tag file")->required();
    hom->add_option("--g2", g2_arg, "source g2(0): a number or a correlate results JSON")
        ->required();
    hom->add_option("--bin", bin, "bin width (ps)");
    hom->add_option("--range", range, "delay range (ps)");
    hom->add_option("--period", period, "pulse period (ps); default from the metadata sidecar");
    hom->add_option("--window", window, "peak half-window (ps)");
    hom->add_option("--json", out_json, "also write the results JSON here");

    std::string fit_csv, model = "power";
    double fit_length = 0.0;
    std::vector<double> guess;
    auto* ft = app.add_subcommand("fit", "weighted nonlinear least squares");
    ft->add_option("data", fit_csv, "CSV with x,y[,sigma] rows")->required();
    ft->add_option("--model", model, "power|detuning");
    ft->add_option("--length", fit_length, "crystal length (cm), pinned for model power");
    ft->add_option("--guess", guess, "initial parameters")->expected(-1);
    ft->add_option("--json", out_json, "also write the results JSON here");

    std::string report_dir = "report";
    auto* rp = app.add_subcommand("report", "full reproduction pipeline");
    rp->add_option("config", config_path, "configuration file (or QFC_CONFIG)");
    rp->add_option("--out", report_dir, "output directory");
    rp->add_option("--pulses", pulses, "pulses per simulated setup");
    rp->add_option("--seed", seed, "RNG seed");
    rp->add_option("--threads", threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (pm->parsed())
            return cmd_phasematch(config_path, axis, lo, hi, samples, out_csv, out_json);
        if (pr->parsed()) return cmd_predict(config_path, out_json);
        if (sim->parsed())
            return cmd_simulate(config_path, setup, arm, pulses, seed, threads, sim_out);
        if (corr->parsed()) return cmd_correlate(tagfile, bin, range, period, window, out_prefix);
        if (hom->parsed())
            return cmd_hom(co_file, cross_file, g2_arg, bin, range, period, window, out_json);
        if (ft->parsed()) return cmd_fit(fit_csv, model, fit_length, guess, out_json);
        if (rp->parsed()) return cmd_report(config_path, report_dir, pulses, seed, threads);
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolver;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return sim->parsed() ? kExitSimIo : kExitAnalysis;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return (corr->parsed() || hom->parsed() || ft->parsed()) ? kExitAnalysis : kExitConfig;
    }
    return 0;
}
