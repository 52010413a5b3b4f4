#include "qfc/montecarlo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "qfc/rng.hpp"

namespace qfc {

namespace {

// RNG stream salts; every pulse owns independent streams so the simulation
// decomposes into arbitrary blocks without changing a single draw.
constexpr std::uint64_t kSaltEmission = 0;
constexpr std::uint64_t kSaltSlot = 1;
constexpr std::uint64_t kSaltDark = 2;    // + channel
constexpr std::uint64_t kSaltNoise = 4;   // + channel
constexpr std::uint64_t kBlockPulses = 1u << 16;

struct Emission {
    int n = 0;                     // photons that survived the chain
    std::array<bool, 2> is_long{};  // arm per photon (UMZI only)
};

struct PulseModel {
    PhotonNumberDist dist;
    double transmission = 1.0;
    bool umzi = false;
};

Emission emit(std::uint64_t seed, std::uint64_t pulse, const PulseModel& m) {
    Rng rng(seed, pulse, kSaltEmission);
    const double u = rng.uniform();
    int count = 0;
    if (u >= m.dist.p0) count = (u < m.dist.p0 + m.dist.p1) ? 1 : 2;
    Emission e;
    for (int k = 0; k < count; ++k) {
        if (rng.uniform() < m.transmission) {
            if (m.umzi) e.is_long[e.n] = rng.uniform() < 0.5;
            e.n++;
        }
    }
    return e;
}

std::uint64_t to_timestamp(double t_ps) {
    if (t_ps < 0.0) t_ps = 0.0;
    return static_cast<std::uint64_t>(std::llround(t_ps));
}

// Poisson clicks on [t0, t1) at fixed rate, via exponential gaps.
void poisson_clicks(Rng& rng, double rate_hz, double t0_ps, double t1_ps, std::uint8_t channel,
                    std::uint8_t flags, std::vector<TimeTag>& out) {
    if (rate_hz <= 0.0) return;
    const double mean_gap_ps = 1e12 / rate_hz;
    double t = t0_ps + rng.exponential() * mean_gap_ps;
    while (t < t1_ps) {
        out.push_back({to_timestamp(t), channel, flags});
        t += rng.exponential() * mean_gap_ps;
    }
}

}  // namespace

PhotonNumberDist calibrate_distribution(double brightness, double g2_target) {
    if (!(brightness > 0 && brightness <= 1))
        throw CalibrationError("calibrate_distribution: brightness must be in (0, 1]");
    if (g2_target < 0) throw CalibrationError("calibrate_distribution: g2 must be >= 0");
    PhotonNumberDist d;
    d.p0 = 1.0 - brightness;
    if (g2_target == 0.0) {
        d.p1 = brightness;
        d.p2 = 0.0;
        return d;
    }
    // p1 + p2 = b and 2 p2 = g2 (b + p2)^2; smaller quadratic root. The pair
    // is feasible in the truncated space iff g2 < 1/(2b) (p2 < b).
    const double b = brightness;
    const double disc = 1.0 - 2.0 * g2_target * b;
    if (disc <= 0.0 || g2_target >= 1.0 / (2.0 * b)) {
        throw CalibrationError(
            "calibrate_distribution: (brightness=" + std::to_string(b) + ", g2=" +
            std::to_string(g2_target) + ") unsolvable with <=2 photons per pulse; feasible g2 in [0, " +
            std::to_string(1.0 / (2.0 * b)) + ")");
    }
    d.p2 = (1.0 - g2_target * b - std::sqrt(disc)) / g2_target;
    d.p1 = b - d.p2;
    return d;
}

void DetectorModel::validate() const {
    if (!(efficiency >= 0 && efficiency <= 1))
        throw DomainError("detector: efficiency must be in [0, 1]");
    if (dark_rate_hz < 0 || jitter_sigma_ps < 0 || dead_time_ps < 0)
        throw DomainError("detector: rates and times must be >= 0");
}

void MeasurementSetup::validate() const {
    if (kind == SetupKind::UMZI_HOM && !(umzi_delay_ps > 0))
        throw DomainError("setup: umzi_delay must be positive");
    if (!(splitter_ratio > 0 && splitter_ratio < 1))
        throw DomainError("setup: splitter_ratio must be in (0, 1)");
    detectors[0].validate();
    detectors[1].validate();
}

std::vector<TimeTag> simulate(const SimRun& run) {
    if (run.n_pulses < 1) throw DomainError("simulate: n_pulses must be >= 1");
    run.emitter.validate();
    run.setup.validate();
    if (!(run.transmission >= 0 && run.transmission <= 1))
        throw DomainError("simulate: transmission must be in [0, 1]");

    PulseModel model;
    model.dist = calibrate_distribution(run.emitter.brightness, run.emitter.g2_target);
    model.transmission = run.transmission;
    model.umzi = run.setup.kind == SetupKind::UMZI_HOM;

    const double period_ps = run.emitter.period_ps();
    const double overlap =
        model.umzi && run.setup.polarization == Polarization::co ? run.emitter.overlap : 0.0;
    const double ratio = run.setup.splitter_ratio;
    const auto& det = run.setup.detectors;
    const double span_ps =
        run.n_pulses * period_ps + (model.umzi ? run.setup.umzi_delay_ps : 0.0) + 1e6;

    const std::uint64_t n_blocks = (run.n_pulses + kBlockPulses - 1) / kBlockPulses;
    std::vector<std::vector<TimeTag>> block_tags(n_blocks);

    auto detect = [&](Rng& rng, int channel, double t_ps, std::vector<TimeTag>& out) {
        if (rng.uniform() < det[channel].efficiency) {
            const double t = t_ps + det[channel].jitter_sigma_ps * rng.normal();
            out.push_back({to_timestamp(t), static_cast<std::uint8_t>(channel), 0});
        }
    };

    auto run_block = [&](std::uint64_t block) {
        auto& out = block_tags[block];
        const std::uint64_t p0 = block * kBlockPulses;
        const std::uint64_t p1 = std::min<std::uint64_t>(p0 + kBlockPulses, run.n_pulses);
        const bool last = p1 == run.n_pulses;

        if (!model.umzi) {
            for (std::uint64_t pulse = p0; pulse < p1; ++pulse) {
                const Emission e = emit(run.seed, pulse, model);
                if (e.n == 0) continue;
                Rng rng(run.seed, pulse, kSaltSlot);
                for (int k = 0; k < e.n; ++k) {
                    const int channel = rng.uniform() < ratio ? 0 : 1;
                    detect(rng, channel, pulse * period_ps, out);
                }
            }
        } else {
            // Slot s collects long-arm photons of pulse s-1 and short-arm
            // photons of pulse s. The final block also drains slot n_pulses.
            Emission prev = p0 > 0 ? emit(run.seed, p0 - 1, model) : Emission{};
            const std::uint64_t s_end = last ? p1 + 1 : p1;
            for (std::uint64_t s = p0; s < s_end; ++s) {
                const Emission cur = s < run.n_pulses ? emit(run.seed, s, model) : Emission{};
                int nl = 0, ns = 0;
                for (int k = 0; k < prev.n; ++k)
                    if (prev.is_long[k]) ++nl;
                for (int k = 0; k < cur.n; ++k)
                    if (!cur.is_long[k]) ++ns;
                if (nl + ns > 0) {
                    Rng rng(run.seed, s, kSaltSlot);
                    bool bunched = false;
                    int pair_channel = 0;
                    if (nl == 1 && ns == 1) {
                        bunched = rng.uniform() < overlap;
                        if (bunched) pair_channel = rng.uniform() < ratio ? 0 : 1;
                    }
                    auto route = [&](std::uint64_t pulse, bool is_long) {
                        const int channel =
                            bunched ? pair_channel : (rng.uniform() < ratio ? 0 : 1);
                        const double t =
                            pulse * period_ps + (is_long ? run.setup.umzi_delay_ps : 0.0);
                        detect(rng, channel, t, out);
                    };
                    for (int k = 0; k < prev.n; ++k)
                        if (prev.is_long[k]) route(s - 1, true);
                    for (int k = 0; k < cur.n; ++k)
                        if (!cur.is_long[k]) route(s, false);
                }
                prev = cur;
            }
        }

        // Uncorrelated clicks: detector dark counts and conversion noise
        // photons, homogeneous Poisson over this block's span.
        const double t0 = p0 * period_ps;
        const double t1 = last ? span_ps : p1 * period_ps;
        for (int ch = 0; ch < 2; ++ch) {
            Rng dark_rng(run.seed, block, kSaltDark + ch);
            poisson_clicks(dark_rng, det[ch].dark_rate_hz, t0, t1, static_cast<std::uint8_t>(ch),
                           kTagFlagDark, out);
            const double port_share = ch == 0 ? ratio : 1.0 - ratio;
            const double noise_rate = run.noise_rate_hz * port_share * det[ch].efficiency;
            Rng noise_rng(run.seed, block, kSaltNoise + ch);
            poisson_clicks(noise_rng, noise_rate, t0, t1, static_cast<std::uint8_t>(ch), 0, out);
        }
    };

    unsigned n_threads = run.threads > 0 ? static_cast<unsigned>(run.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<std::uint64_t>(n_threads, n_blocks);
    if (n_threads <= 1) {
        for (std::uint64_t b = 0; b < n_blocks; ++b) run_block(b);
    } else {
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < n_threads; ++w) {
            workers.emplace_back([&, w] {
                for (std::uint64_t b = w; b < n_blocks; b += n_threads) run_block(b);
            });
        }
        for (auto& t : workers) t.join();
    }

    std::size_t total = 0;
    for (const auto& b : block_tags) total += b.size();
    std::vector<TimeTag> tags;
    tags.reserve(total);
    for (auto& b : block_tags) tags.insert(tags.end(), b.begin(), b.end());
    std::sort(tags.begin(), tags.end(), [](const TimeTag& a, const TimeTag& b) {
        if (a.timestamp_ps != b.timestamp_ps) return a.timestamp_ps < b.timestamp_ps;
        if (a.channel != b.channel) return a.channel < b.channel;
        return a.flags < b.flags;
    });

    // Per-channel dead-time removal, in timestamp order.
    std::vector<TimeTag> filtered;
    filtered.reserve(tags.size());
    std::array<std::uint64_t, 2> last_kept{0, 0};
    std::array<bool, 2> seen{false, false};
    for (const auto& t : tags) {
        const int ch = t.channel;
        if (seen[ch] && t.timestamp_ps - last_kept[ch] < static_cast<std::uint64_t>(
                                                             det[ch].dead_time_ps))
            continue;
        last_kept[ch] = t.timestamp_ps;
        seen[ch] = true;
        filtered.push_back(t);
    }
    return filtered;
}

void simulate_to_file(const SimRun& run, const std::string& path,
                      const std::string& config_echo_json) {
    const std::vector<TimeTag> tags = simulate(run);
    TagFileHeader header;
    header.resolution_ps = 1;
    header.channel_count = 2;
    write_tag_file(path, header, tags);

    nlohmann::json meta;
    meta["format"] = "qfc-tag-v1";
    meta["seed"] = run.seed;
    meta["n_pulses"] = run.n_pulses;
    meta["period_ps"] = run.emitter.period_ps();
    meta["transmission"] = run.transmission;
    meta["noise_rate_hz"] = run.noise_rate_hz;
    meta["setup"] = run.setup.kind == SetupKind::HBT
                        ? "hbt"
                        : (run.setup.polarization == Polarization::co ? "hom-co" : "hom-cross");
    meta["emitter"] = {{"rep_rate_hz", run.emitter.rep_rate_hz},
                       {"brightness", run.emitter.brightness},
                       {"g2", run.emitter.g2_target},
                       {"overlap", run.emitter.overlap},
                       {"lambda_nm", run.emitter.lambda_nm}};
    meta["tag_count"] = tags.size();
    meta["config"] = nlohmann::json::parse(config_echo_json);
    std::ofstream out(path + ".meta.json", std::ios::binary);
    if (!out) throw FormatError("simulate: cannot write sidecar for " + path);
    out << meta.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Exact enumeration oracle
// ---------------------------------------------------------------------------

namespace {

struct SlotState {
    int n_short = 0;
    int n_long = 0;
    double weight = 0.0;
};

// Distribution of (surviving short-arm, surviving long-arm) photons per pulse.
std::vector<SlotState> pulse_states(const PhotonNumberDist& dist, double transmission, bool umzi) {
    const double p_dead = 1.0 - transmission;
    const double p_short = umzi ? transmission / 2.0 : transmission;
    const double p_long = umzi ? transmission / 2.0 : 0.0;
    std::map<std::pair<int, int>, double> acc;
    const double pc[3] = {dist.p0, dist.p1, dist.p2};
    for (int c = 0; c <= 2; ++c) {
        for (int a0 = 0; a0 < (c >= 1 ? 3 : 1); ++a0) {
            for (int a1 = 0; a1 < (c >= 2 ? 3 : 1); ++a1) {
                double w = pc[c];
                int ns = 0, nl = 0;
                auto fold = [&](int a) {
                    w *= a == 0 ? p_dead : (a == 1 ? p_short : p_long);
                    if (a == 1) ++ns;
                    if (a == 2) ++nl;
                };
                if (c >= 1) fold(a0);
                if (c >= 2) fold(a1);
                acc[{ns, nl}] += w;
            }
        }
    }
    std::vector<SlotState> out;
    for (const auto& [k, w] : acc)
        if (w > 0.0) out.push_back({k.first, k.second, w});
    return out;
}

struct SlotMoments {
    double e0 = 0.0, e1 = 0.0, e01 = 0.0;  // E[X0], E[X1], E[X0 X1]
};

// Photons arriving in one output slot: n_long from the earlier pulse and
// n_short from the later one. A lone pair from opposite arms bunches with
// probability M and leaves through one common port; every other photon routes
// independently.
SlotMoments slot_moments(int n_long, int n_short, double overlap, double r) {
    SlotMoments m;
    const int k = n_long + n_short;
    if (k == 0) return m;
    const double ind0 = k * r;
    const double ind1 = k * (1.0 - r);
    const double ind01 = k * (k - 1) * r * (1.0 - r);
    if (n_long == 1 && n_short == 1) {
        m.e0 = overlap * (2.0 * r) + (1.0 - overlap) * ind0;
        m.e1 = overlap * (2.0 * (1.0 - r)) + (1.0 - overlap) * ind1;
        m.e01 = (1.0 - overlap) * ind01;
    } else {
        m.e0 = ind0;
        m.e1 = ind1;
        m.e01 = ind01;
    }
    return m;
}

// Expected coincidences per slot between detector 0 at slot s and detector 1
// at slot s+n, enumerating the n+2 pulses feeding the two slots.
double peak_area_raw(int n, const std::vector<SlotState>& states, double overlap, double r,
                     double eta0, double eta1) {
    // Negative delays are the same enumeration with the detector roles swapped.
    if (n < 0) return peak_area_raw(-n, states, overlap, 1.0 - r, eta1, eta0);
    const int n_pulse = n + 2;
    std::vector<std::size_t> idx(static_cast<std::size_t>(n_pulse), 0);
    double total = 0.0;
    for (;;) {
        double w = 1.0;
        for (int i = 0; i < n_pulse; ++i) w *= states[idx[static_cast<std::size_t>(i)]].weight;
        if (w > 0.0) {
            const auto& first = states[idx[0]];
            const auto& second = states[idx[1]];
            const SlotMoments ms = slot_moments(first.n_long, second.n_short, overlap, r);
            if (n == 0) {
                total += w * ms.e01;
            } else {
                const auto& a = states[idx[static_cast<std::size_t>(n)]];
                const auto& b = states[idx[static_cast<std::size_t>(n + 1)]];
                const SlotMoments mt = slot_moments(a.n_long, b.n_short, overlap, r);
                total += w * ms.e0 * mt.e1;
            }
        }
        // advance mixed-radix counter
        int pos = 0;
        while (pos < n_pulse) {
            if (++idx[static_cast<std::size_t>(pos)] < states.size()) break;
            idx[static_cast<std::size_t>(pos)] = 0;
            ++pos;
        }
        if (pos == n_pulse) break;
    }
    return total * eta0 * eta1;
}

}  // namespace

double AnalyticPeaks::expected_g2(int n_side_peaks) const {
    if (n_side_peaks < 1) throw DomainError("expected_g2: need at least one side peak");
    double side_sum = 0.0;
    int counted = 0;
    for (int n = -n_side_peaks / 2; n <= n_side_peaks / 2 && counted < n_side_peaks; ++n) {
        if (n == 0) continue;
        side_sum += area.count(n) ? area.at(n) : side_asymptote;
        ++counted;
    }
    // remaining peaks (if n_side_peaks is odd or exceeds the enumerated span)
    while (counted < n_side_peaks) {
        side_sum += side_asymptote;
        ++counted;
    }
    return area.at(0) / (side_sum / n_side_peaks);
}

AnalyticPeaks analytic_histogram(const EmitterModel& emitter, const MeasurementSetup& setup,
                                 double transmission) {
    emitter.validate();
    setup.validate();
    const PhotonNumberDist dist = calibrate_distribution(emitter.brightness, emitter.g2_target);
    const bool umzi = setup.kind == SetupKind::UMZI_HOM;
    const double overlap = umzi && setup.polarization == Polarization::co ? emitter.overlap : 0.0;
    const double r = setup.splitter_ratio;
    const double eta0 = setup.detectors[0].efficiency;
    const double eta1 = setup.detectors[1].efficiency;
    const auto states = pulse_states(dist, transmission, umzi);

    const double mean_per_slot = dist.mean() * transmission;  // marginal, arms/ports pooled
    const double asymptote = mean_per_slot * r * eta0 * mean_per_slot * (1.0 - r) * eta1;
    if (!(asymptote > 0.0))
        throw DomainError("analytic_histogram: degenerate setup, zero asymptotic coincidences");

    AnalyticPeaks out;
    out.abs_side_per_pulse = asymptote;
    out.side_asymptote = 1.0;
    for (int n = -2; n <= 2; ++n)
        out.area[n] = peak_area_raw(n, states, overlap, r, eta0, eta1) / asymptote;
    return out;
}

}  // namespace qfc
