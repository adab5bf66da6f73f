#pragma once

#include <array>
#include <span>

#include "strefine/harness.hpp"

namespace strefine {

struct BdResult {
    double rate_reduction_pct = 0.0;  ///< positive when test needs less rate
    double psnr_gain_db = 0.0;        ///< positive when test has higher quality
};

/// Bjontegaard deltas of test against base: cubic least-squares fits of PSNR
/// over log10(rate) (and of log10(rate) over PSNR), integrated over the
/// overlapping interval. Each curve needs at least four points with positive
/// rates; throws std::invalid_argument otherwise or when the curves do not
/// overlap.
BdResult bd_metrics(const RDCurve& base, const RDCurve& test);

/// Least-squares cubic through (x, y); coefficients in ascending power.
std::array<double, 4> fit_cubic(std::span<const double> x, std::span<const double> y);

}  // namespace strefine
