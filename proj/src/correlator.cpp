#include "qfc/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace qfc {

namespace {

void check_sorted(std::span<const std::uint64_t> tags, const char* name) {
    for (std::size_t i = 1; i < tags.size(); ++i) {
        if (tags[i] < tags[i - 1])
            throw ValidationError(std::string("cross_correlate: stream ") + name +
                                  " not timestamp-sorted at index " + std::to_string(i));
    }
}

// Correlate tags_a[a_begin, a_end) against the full b stream.
void sweep(std::span<const std::uint64_t> tags_a, std::span<const std::uint64_t> tags_b,
           std::size_t a_begin, std::size_t a_end, std::int64_t bin_width_ps,
           std::int64_t range_ps, std::vector<std::uint64_t>& bins) {
    std::size_t lo = 0;
    for (std::size_t i = a_begin; i < a_end; ++i) {
        const std::uint64_t ta = tags_a[i];
        // first b with tb - ta >= -range
        while (lo < tags_b.size() &&
               static_cast<std::int64_t>(tags_b[lo]) - static_cast<std::int64_t>(ta) < -range_ps)
            ++lo;
        for (std::size_t j = lo; j < tags_b.size(); ++j) {
            const std::int64_t d = static_cast<std::int64_t>(tags_b[j]) - static_cast<std::int64_t>(ta);
            if (d >= range_ps) break;
            bins[static_cast<std::size_t>((d + range_ps) / bin_width_ps)]++;
        }
    }
}

}  // namespace

CoincidenceHistogram cross_correlate(std::span<const std::uint64_t> tags_a,
                                     std::span<const std::uint64_t> tags_b,
                                     std::int64_t bin_width_ps, std::int64_t range_ps) {
    return cross_correlate_parallel(tags_a, tags_b, bin_width_ps, range_ps, 1);
}

CoincidenceHistogram cross_correlate_parallel(std::span<const std::uint64_t> tags_a,
                                              std::span<const std::uint64_t> tags_b,
                                              std::int64_t bin_width_ps, std::int64_t range_ps,
                                              int n_chunks) {
    if (bin_width_ps <= 0 || range_ps <= 0 || range_ps % bin_width_ps != 0)
        throw DomainError("cross_correlate: bin_width must divide range and both must be positive");
    if (n_chunks < 1) throw DomainError("cross_correlate: n_chunks must be >= 1");
    check_sorted(tags_a, "a");
    check_sorted(tags_b, "b");

    CoincidenceHistogram h;
    h.bin_width_ps = bin_width_ps;
    h.range_ps = range_ps;
    h.bins.assign(static_cast<std::size_t>(2 * range_ps / bin_width_ps), 0);
    h.total_a = tags_a.size();
    h.total_b = tags_b.size();

    const std::size_t n = tags_a.size();
    const std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(n_chunks),
                                                     std::max<std::size_t>(n, 1));
    std::vector<std::vector<std::uint64_t>> partial(chunks);
    auto run_chunk = [&](std::size_t c) {
        partial[c].assign(h.bins.size(), 0);
        const std::size_t a0 = n * c / chunks;
        const std::size_t a1 = n * (c + 1) / chunks;
        sweep(tags_a, tags_b, a0, a1, bin_width_ps, range_ps, partial[c]);
    };
    if (chunks == 1) {
        run_chunk(0);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(chunks);
        for (std::size_t c = 0; c < chunks; ++c) workers.emplace_back(run_chunk, c);
        for (auto& w : workers) w.join();
    }
    for (const auto& p : partial)
        for (std::size_t i = 0; i < h.bins.size(); ++i) h.bins[i] += p[i];
    return h;
}

PeakAreas integrate_peaks(const CoincidenceHistogram& hist, double period_ps,
                          double window_half_width_ps) {
    if (!(period_ps > 0) || !(window_half_width_ps > 0))
        throw DomainError("integrate_peaks: period and window must be positive");
    if (!(window_half_width_ps < period_ps / 2))
        throw DomainError("integrate_peaks: windows overlap (window_half_width >= period/2)");
    if (!(period_ps < static_cast<double>(hist.range_ps)))
        throw DomainError("integrate_peaks: period exceeds histogram range");

    PeakAreas out;
    out.period_ps = period_ps;
    out.window_half_width_ps = window_half_width_ps;

    const double range = static_cast<double>(hist.range_ps);
    const int n_max = static_cast<int>(std::floor((range - window_half_width_ps) / period_ps));
    for (int n = -n_max; n <= n_max; ++n) {
        const double center = n * period_ps;
        double area = 0.0;
        // Bin centers within +/- window of the peak position.
        const double lo = center - window_half_width_ps;
        const double hi = center + window_half_width_ps;
        const auto first = static_cast<std::size_t>(
            std::max(0.0, std::ceil((lo + range) / hist.bin_width_ps - 0.5)));
        for (std::size_t i = first; i < hist.bins.size(); ++i) {
            const double c = hist.bin_center(i);
            if (c > hi) break;
            if (c >= lo) area += static_cast<double>(hist.bins[i]);
        }
        out.areas[n] = area;
        if (n != 0) ++out.n_side_peaks;
    }
    if (out.n_side_peaks < 1) throw DomainError("integrate_peaks: no complete side peak in range");
    return out;
}

G2Result g2_zero(const PeakAreas& areas) {
    if (areas.n_side_peaks < 1) throw DomainError("g2_zero: need at least one side peak");
    const double a0 = areas.areas.count(0) ? areas.areas.at(0) : 0.0;
    double side_sum = 0.0;
    for (const auto& [n, a] : areas.areas)
        if (n != 0) side_sum += a;
    if (side_sum <= 0.0) throw DomainError("g2_zero: all side peaks are empty");
    const double n_side = areas.n_side_peaks;
    const double mean_side = side_sum / n_side;

    G2Result r;
    r.value = a0 / mean_side;
    // Poisson counting statistics: var(A) = A, first-order ratio propagation.
    const double var_a0 = a0;
    const double var_mean = side_sum / (n_side * n_side);
    r.err = std::sqrt(var_a0 / (mean_side * mean_side) +
                      var_mean * (a0 * a0) / std::pow(mean_side, 4));
    return r;
}

HomResult hom_visibility(const G2Result& g2_parallel, const G2Result& g2_perp) {
    if (!(g2_perp.value > 0)) throw DomainError("hom_visibility: g2_perp must be positive");
    HomResult h;
    h.g2_parallel = g2_parallel;
    h.g2_perp = g2_perp;
    const double ratio = g2_parallel.value / g2_perp.value;
    h.v_hom = 1.0 - ratio;
    const double rel2 =
        (g2_parallel.value > 0 ? std::pow(g2_parallel.err / g2_parallel.value, 2) : 0.0) +
        std::pow(g2_perp.err / g2_perp.value, 2);
    h.v_hom_err = std::abs(ratio) * std::sqrt(rel2);
    return h;
}

G2Result corrected_indistinguishability(double v_hom, double v_err, double g2, double g2_err) {
    if (!(g2 < 1)) throw DomainError("corrected_indistinguishability: g2 must be < 1");
    G2Result r;
    r.value = (v_hom + g2) / (1.0 - g2);
    // dM/dV = 1/(1-g2); dM/dg2 = (1+V)/(1-g2)^2
    const double dv = 1.0 / (1.0 - g2);
    const double dg = (1.0 + v_hom) / std::pow(1.0 - g2, 2);
    r.err = std::sqrt(dv * dv * v_err * v_err + dg * dg * g2_err * g2_err);
    return r;
}

void corrected_indistinguishability(HomResult& hom, const G2Result& g2) {
    const G2Result m = corrected_indistinguishability(hom.v_hom, hom.v_hom_err, g2.value, g2.err);
    hom.m_s = m.value;
    hom.m_s_err = m.err;
}

double snr_from_counts(double rate_in_pm_hz, double rate_out_pm_hz) {
    if (rate_out_pm_hz < 0) throw DomainError("snr_from_counts: noise rate must be >= 0");
    if (rate_out_pm_hz == 0.0) return std::numeric_limits<double>::infinity();
    return (rate_in_pm_hz - rate_out_pm_hz) / rate_out_pm_hz;
}

}  // namespace qfc
