#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "qfc/errors.hpp"

namespace qfc {

struct CoincidenceHistogram {
    std::int64_t bin_width_ps = 100;
    std::int64_t range_ps = 200000;  // bins cover delays in [-range, range)
    std::vector<std::uint64_t> bins;
    std::uint64_t total_a = 0;
    std::uint64_t total_b = 0;

    std::size_t n_bins() const { return static_cast<std::size_t>(2 * range_ps / bin_width_ps); }
    double bin_center(std::size_t i) const {
        return -static_cast<double>(range_ps) + (static_cast<double>(i) + 0.5) * bin_width_ps;
    }
};

struct PeakAreas {
    double period_ps = 0.0;
    double window_half_width_ps = 0.0;
    std::map<int, double> areas;  // peak index n -> integrated counts
    int n_side_peaks = 0;         // N of the zero-delay estimator
};

struct G2Result {
    double value = 0.0;
    double err = 0.0;
};

struct HomResult {
    G2Result g2_parallel;
    G2Result g2_perp;
    double v_hom = 0.0;
    double v_hom_err = 0.0;
    double m_s = 0.0;
    double m_s_err = 0.0;
};

// Counts every pair (ta, tb) with -range <= tb - ta < range exactly once,
// using a single merge-style sweep over the two sorted streams. Inputs must
// be timestamp sorted (validated with a cheap monotonicity check).
CoincidenceHistogram cross_correlate(std::span<const std::uint64_t> tags_a,
                                     std::span<const std::uint64_t> tags_b,
                                     std::int64_t bin_width_ps, std::int64_t range_ps);

// Same result, computed over n_chunks partitions of the first stream and
// merged; the partition is over the left element of each pair so no pair is
// double counted. Bins are byte-identical to the one-shot sweep.
CoincidenceHistogram cross_correlate_parallel(std::span<const std::uint64_t> tags_a,
                                              std::span<const std::uint64_t> tags_b,
                                              std::int64_t bin_width_ps, std::int64_t range_ps,
                                              int n_chunks);

// A_n = sum of bins whose center lies within +/-window of n*period, for every
// n whose window fits completely in range (partial edge windows excluded).
PeakAreas integrate_peaks(const CoincidenceHistogram& hist, double period_ps,
                          double window_half_width_ps);

// g2(0) = A_0 / mean(side peak areas), Poisson errors propagated.
G2Result g2_zero(const PeakAreas& areas);

// V = 1 - g2_par/g2_perp, errors combined in quadrature.
HomResult hom_visibility(const G2Result& g2_parallel, const G2Result& g2_perp);

// M_s = (V + g2)/(1 - g2); fills m_s and m_s_err of the given result.
void corrected_indistinguishability(HomResult& hom, const G2Result& g2);

// Variant over plain values, returning (value, err).
G2Result corrected_indistinguishability(double v_hom, double v_err, double g2, double g2_err);

// SNR = (rate_in_pm - rate_out_pm)/rate_out_pm; the out-of-phase-matching
// rate is taken as pure noise. +infinity when rate_out_pm = 0.
double snr_from_counts(double rate_in_pm_hz, double rate_out_pm_hz);

}  // namespace qfc
