#include "qfc/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace qfc {

namespace {

struct Token {
    double value = 0.0;
    std::string unit;  // empty if none
};

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

Token parse_value(const std::string& raw, const std::string& where) {
    Token t;
    std::istringstream iss(raw);
    if (!(iss >> t.value)) throw ConfigError(where + ": not a number: '" + raw + "'");
    std::string unit;
    if (iss >> unit) t.unit = unit;
    std::string extra;
    if (iss >> extra) throw ConfigError(where + ": trailing content: '" + raw + "'");
    return t;
}

// Unit families. Values convert to the canonical unit named per key below.
const std::map<std::string, std::pair<char, double>> kUnits = {
    {"Hz", {'f', 1.0}},   {"kHz", {'f', 1e3}}, {"MHz", {'f', 1e6}}, {"GHz", {'f', 1e9}},
    {"W", {'p', 1.0}},    {"mW", {'p', 1e-3}}, {"uW", {'p', 1e-6}},
    {"nm", {'l', 1.0}},   {"um", {'l', 1e3}},  {"mm", {'l', 1e6}},  {"cm", {'l', 1e7}},
    {"m", {'l', 1e9}},
    {"ps", {'t', 1.0}},   {"ns", {'t', 1e3}},  {"us", {'t', 1e6}},  {"ms", {'t', 1e9}},
    {"s", {'t', 1e12}},
    {"dB", {'d', 1.0}},   {"C", {'c', 1.0}},   {"%", {'%', 0.01}},
};

// dimension ('0' = dimensionless) and scale from family base to canonical.
struct KeySpec {
    char dim;
    double to_canonical;
    std::function<void(RunConfig&, StageModel*, double)> apply;
};

double convert(const Token& t, const KeySpec& spec, const std::string& where) {
    if (t.unit.empty()) return t.value;  // already canonical
    const auto it = kUnits.find(t.unit);
    if (it == kUnits.end()) throw ConfigError(where + ": unknown unit '" + t.unit + "'");
    if (t.unit == "%") return t.value * 0.01;
    if (it->second.first != spec.dim)
        throw ConfigError(where + ": unit '" + t.unit + "' has the wrong dimension for this key");
    return t.value * it->second.second * spec.to_canonical;
}

using KeyTable = std::map<std::string, KeySpec>;

const KeyTable& schema() {
    auto rc = [](auto member) {
        return [member](RunConfig& c, StageModel*, double v) { std::invoke(member, c) = v; };
    };
    (void)rc;
    static const KeyTable table = {
        // emitter (canonical: Hz, nm)
        {"emitter.rep_rate", {'f', 1.0, [](RunConfig& c, StageModel*, double v) { c.emitter.rep_rate_hz = v; }}},
        {"emitter.brightness", {'0', 1.0, [](RunConfig& c, StageModel*, double v) { c.emitter.brightness = v; }}},
        {"emitter.g2", {'0', 1.0, [](RunConfig& c, StageModel*, double v) { c.emitter.g2_target = v; }}},
        {"emitter.overlap", {'0', 1.0, [](RunConfig& c, StageModel*, double v) { c.emitter.overlap = v; }}},
        {"emitter.wavelength", {'l', 1.0, [](RunConfig& c, StageModel*, double v) { c.emitter.lambda_nm = v; }}},
        // dispersion
        {"dispersion.effective_index_offset", {'0', 1.0, [](RunConfig& c, StageModel*, double v) { c.dispersion.effective_index_offset = v; }}},
        {"dispersion.phase_mismatch_offset", {'0', 1.0, [](RunConfig& c, StageModel*, double v) { c.dispersion.phase_mismatch_offset = v; }}},
        // phasematch (canonical: nm, um, cm, C)
        {"phasematch.signal", {'l', 1.0, [](RunConfig& c, StageModel*, double v) { c.phasematch.lambda_sig_nm = v; }}},
        {"phasematch.converted", {'l', 1.0, [](RunConfig& c, StageModel*, double v) { c.phasematch.lambda_conv_nm = v; }}},
        {"phasematch.poling_period", {'l', 1e-3, [](RunConfig& c, StageModel*, double v) { c.phasematch.poling_period_um = v; }}},
        {"phasematch.temperature", {'c', 1.0, [](RunConfig& c, StageModel*, double v) { c.phasematch.temperature_c = v; }}},
        {"phasematch.crystal_length", {'l', 1e-7, [](RunConfig& c, StageModel*, double v) { c.phasematch.crystal_length_cm = v; }}},
        {"phasematch.qpm_order", {'0', 1.0, [](RunConfig& c, StageModel*, double v) { c.phasematch.qpm_order = static_cast<int>(v); }}},
        // chain
        {"chain.pump_power", {'p', 1.0, [](RunConfig& c, StageModel*, double v) { c.chain.pump_power_w = v; }}},
        // stages
        {"stage.kind", {'s', 1.0, nullptr}},  // handled separately (string value)
        {"stage.transmission", {'0', 1.0, [](RunConfig&, StageModel* s, double v) { s->transmission = v; }}},
        {"stage.eta_max", {'0', 1.0, [](RunConfig&, StageModel* s, double v) { s->eta_max = v; }}},
        {"stage.eta_n", {'0', 1.0, [](RunConfig&, StageModel* s, double v) { s->eta_n = v; }}},
        {"stage.length", {'l', 1e-7, [](RunConfig&, StageModel* s, double v) { s->length_cm = v; }}},
        {"stage.rate_per_mW", {'f', 1.0, [](RunConfig&, StageModel* s, double v) { s->rate_per_mw_hz = v; }}},
        {"stage.pedestal", {'f', 1.0, [](RunConfig&, StageModel* s, double v) { s->pedestal_hz = v; }}},
        {"stage.extinction", {'d', 1.0, [](RunConfig&, StageModel* s, double v) { s->extinction_db = v; }}},
        // detector (applies to both channels)
        {"detector.efficiency", {'0', 1.0, [](RunConfig& c, StageModel*, double v) { c.setup.detectors[0].efficiency = c.setup.detectors[1].efficiency = v; }}},
        {"detector.dark_rate", {'f', 1.0, [](RunConfig& c, StageModel*, double v) { c.setup.detectors[0].dark_rate_hz = c.setup.detectors[1].dark_rate_hz = v; }}},
        {"detector.jitter_sigma", {'t', 1.0, [](RunConfig& c, StageModel*, double v) { c.setup.detectors[0].jitter_sigma_ps = c.setup.detectors[1].jitter_sigma_ps = v; }}},
        {"detector.dead_time", {'t', 1.0, [](RunConfig& c, StageModel*, double v) { c.setup.detectors[0].dead_time_ps = c.setup.detectors[1].dead_time_ps = v; }}},
        // setup
        {"setup.splitter_ratio", {'0', 1.0, [](RunConfig& c, StageModel*, double v) { c.setup.splitter_ratio = v; }}},
        {"setup.umzi_delay", {'t', 1.0, [](RunConfig& c, StageModel*, double v) { c.setup.umzi_delay_ps = v; }}},
        // analysis
        {"analysis.bin_width", {'t', 1.0, [](RunConfig& c, StageModel*, double v) { c.analysis.bin_width_ps = static_cast<std::int64_t>(v); }}},
        {"analysis.range", {'t', 1.0, [](RunConfig& c, StageModel*, double v) { c.analysis.range_ps = static_cast<std::int64_t>(v); }}},
        {"analysis.window_half_width", {'t', 1.0, [](RunConfig& c, StageModel*, double v) { c.analysis.window_half_width_ps = v; }}},
    };
    return table;
}

StageKind parse_stage_kind(const std::string& v, const std::string& where) {
    if (v == "loss") return StageKind::loss;
    if (v == "converter") return StageKind::converter;
    if (v == "noise") return StageKind::noise_source;
    if (v == "filter") return StageKind::filter;
    throw ConfigError(where + ": unknown stage kind '" + v +
                      "' (expected loss|converter|noise|filter)");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    StageModel* current_stage = nullptr;
    int line_no = 0;
    const auto& table = schema();

    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            current_stage = nullptr;
            if (section.rfind("stage.", 0) == 0) {
                cfg.chain.stages.emplace_back();
                current_stage = &cfg.chain.stages.back();
                current_stage->label = section.substr(6);
                section = "stage";
            } else if (section != "emitter" && section != "dispersion" && section != "phasematch" &&
                       section != "chain" && section != "detector" && section != "setup" &&
                       section != "analysis") {
                throw ConfigError(where + ": unknown section [" + section + "]");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string raw = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError(where + ": key before any [section]");

        const std::string full = section + "." + key;
        if (section == "stage" && !current_stage)
            throw ConfigError(where + ": stage key outside a [stage.*] section");
        if (full == "stage.kind") {
            current_stage->kind = parse_stage_kind(raw, where);
            continue;
        }
        const auto it = table.find(full);
        if (it == table.end()) throw ConfigError(where + ": unknown key '" + full + "'");
        const Token tok = parse_value(raw, where);
        it->second.apply(cfg, current_stage, convert(tok, it->second, where));
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

void RunConfig::validate() const {
    emitter.validate();
    chain.validate();
    setup.validate();
    if (analysis.bin_width_ps <= 0 || analysis.range_ps <= 0 ||
        analysis.range_ps % analysis.bin_width_ps != 0)
        throw ConfigError("config: analysis.bin_width must divide analysis.range");
    if (!(analysis.window_half_width_ps > 0))
        throw ConfigError("config: analysis.window_half_width must be positive");
}

std::string RunConfig::to_json() const {
    nlohmann::json j;
    j["emitter"] = {{"rep_rate_hz", emitter.rep_rate_hz},
                    {"brightness", emitter.brightness},
                    {"g2", emitter.g2_target},
                    {"overlap", emitter.overlap},
                    {"wavelength_nm", emitter.lambda_nm}};
    j["dispersion"] = {{"effective_index_offset", dispersion.effective_index_offset},
                       {"phase_mismatch_offset_rad_per_m", dispersion.phase_mismatch_offset}};
    j["phasematch"] = {{"signal_nm", phasematch.lambda_sig_nm},
                       {"converted_nm", phasematch.lambda_conv_nm},
                       {"poling_period_um", phasematch.poling_period_um},
                       {"temperature_c", phasematch.temperature_c},
                       {"crystal_length_cm", phasematch.crystal_length_cm},
                       {"qpm_order", phasematch.qpm_order}};
    j["chain"]["pump_power_w"] = chain.pump_power_w;
    j["chain"]["stages"] = nlohmann::json::array();
    for (const auto& s : chain.stages) {
        nlohmann::json js;
        js["label"] = s.label;
        switch (s.kind) {
            case StageKind::loss:
                js["kind"] = "loss";
                js["transmission"] = s.transmission;
                break;
            case StageKind::filter:
                js["kind"] = "filter";
                js["transmission"] = s.transmission;
                js["extinction_db"] = s.extinction_db;
                break;
            case StageKind::converter:
                js["kind"] = "converter";
                js["eta_max"] = s.eta_max;
                js["eta_n"] = s.eta_n;
                js["length_cm"] = s.length_cm;
                break;
            case StageKind::noise_source:
                js["kind"] = "noise";
                js["rate_per_mW_hz"] = s.rate_per_mw_hz;
                js["pedestal_hz"] = s.pedestal_hz;
                break;
        }
        j["chain"]["stages"].push_back(js);
    }
    j["detector"] = {{"efficiency", setup.detectors[0].efficiency},
                     {"dark_rate_hz", setup.detectors[0].dark_rate_hz},
                     {"jitter_sigma_ps", setup.detectors[0].jitter_sigma_ps},
                     {"dead_time_ps", setup.detectors[0].dead_time_ps}};
    j["setup"] = {{"splitter_ratio", setup.splitter_ratio},
                  {"umzi_delay_ps", setup.umzi_delay_ps}};
    j["analysis"] = {{"bin_width_ps", analysis.bin_width_ps},
                     {"range_ps", analysis.range_ps},
                     {"window_half_width_ps", analysis.window_half_width_ps}};
    return j.dump(2);
}

}  // namespace qfc
