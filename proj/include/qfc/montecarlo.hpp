#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qfc/chain.hpp"
#include "qfc/errors.hpp"
#include "qfc/tagstore.hpp"

namespace qfc {

// Per-pulse photon-number distribution, truncated at two photons. In the
// g2 ~ 0.05 regime three-photon terms contribute O(1e-3) of coincidences,
// which keeps the exact enumeration oracle tractable.
struct PhotonNumberDist {
    double p0 = 1.0;
    double p1 = 0.0;
    double p2 = 0.0;

    double g2() const {
        const double nbar = p1 + 2 * p2;
        return nbar > 0 ? 2 * p2 / (nbar * nbar) : 0.0;
    }
    double mean() const { return p1 + 2 * p2; }
};

// Solves (p1, p2) so that p1 + p2 equals the emitter brightness and the
// implied g2(0) = 2 p2/(p1+2 p2)^2 hits g2_target. Closed form in the
// truncated space.
PhotonNumberDist calibrate_distribution(double brightness, double g2_target);

struct DetectorModel {
    double efficiency = 0.85;
    double dark_rate_hz = 100.0;
    double jitter_sigma_ps = 35.0;
    double dead_time_ps = 25000.0;

    void validate() const;
};

enum class SetupKind { HBT, UMZI_HOM };
enum class Polarization { co, cross };

struct MeasurementSetup {
    SetupKind kind = SetupKind::HBT;
    double umzi_delay_ps = 13158.0;  // one rep period
    Polarization polarization = Polarization::co;
    double splitter_ratio = 0.5;
    DetectorModel detectors[2];

    void validate() const;
};

struct SimRun {
    std::uint64_t seed = 1;
    std::uint64_t n_pulses = 1;
    EmitterModel emitter;
    // End-to-end transmission applied to every photon before the setup and
    // the uncorrelated noise rate delivered with the signal. For the NIR arm
    // these are 1 and 0; for the telecom arm they come from the chain.
    double transmission = 1.0;
    double noise_rate_hz = 0.0;
    MeasurementSetup setup;
    int threads = 0;  // 0: hardware concurrency; result is thread-count independent
};

// Pulse-by-pulse Monte Carlo through the measurement setup. Deterministic for
// a fixed seed: every pulse owns independent RNG streams derived from (seed,
// pulse index), so the output is byte-identical for any thread count.
// Returns the merged, timestamp-sorted, dead-time-filtered tag stream.
std::vector<TimeTag> simulate(const SimRun& run);

// simulate + tag file + JSON metadata sidecar (<path>.meta.json).
void simulate_to_file(const SimRun& run, const std::string& path,
                      const std::string& config_echo_json = "null");

// Expected coincidence-peak areas from exact enumeration of photon numbers,
// chain survival, routings and pairwise interference; no sampling. Areas are
// normalized to the asymptotic side-peak level.
struct AnalyticPeaks {
    std::map<int, double> area;    // n in [-2, 2], normalized
    double side_asymptote = 1.0;   // by construction
    double abs_side_per_pulse = 0.0;  // unnormalized side level per pulse

    // Expected value of the A0/mean-side estimator when the histogram holds
    // n_side side peaks (|n| up to n_side/2, the |n|>2 ones at the asymptote).
    double expected_g2(int n_side_peaks) const;
};

AnalyticPeaks analytic_histogram(const EmitterModel& emitter, const MeasurementSetup& setup,
                                 double transmission = 1.0);

}  // namespace qfc
