#pragma once

#include <string>

#include "qfc/chain.hpp"
#include "qfc/montecarlo.hpp"
#include "qfc/phasematch.hpp"

namespace qfc {

// Analysis defaults: 100 ps bins over +/-200 ns resolve >14 complete peaks
// at the 13.158 ns pulse period with 3 ns half-windows.
struct AnalysisConfig {
    std::int64_t bin_width_ps = 100;
    std::int64_t range_ps = 200000;
    double window_half_width_ps = 3000.0;
};

struct PhaseMatchConfig {
    double lambda_sig_nm = 925.0;
    double lambda_conv_nm = 1560.0;
    double poling_period_um = 25.45;
    double temperature_c = 43.4;
    double crystal_length_cm = 4.0;
    int qpm_order = 1;
};

// Full run configuration: key/value file with [section] headers, '#'
// comments and SI unit suffixes (mW, MHz, dB, nm, cm, ...). Unknown keys and
// sections are rejected. Chain stages appear as ordered [stage.<label>]
// sections.
struct RunConfig {
    EmitterModel emitter;
    DispersionModel dispersion;
    PhaseMatchConfig phasematch;
    ChainModel chain;
    MeasurementSetup setup;
    AnalysisConfig analysis;

    void validate() const;

    // Fully resolved canonical-unit echo, embedded in every results document.
    std::string to_json() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin = "<memory>");

}  // namespace qfc
