#pragma once

#include "pectoral/raster.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>

namespace pectoral {

/// Thrown by the selectors when fewer than two histogram bins are occupied.
class DegenerateHistogramError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct ThresholdResult {
    std::uint16_t threshold = 0;
    /// Between-class variance (Otsu) or summed class entropy in nats (Kapur).
    double objective = 0.0;
};

/// Relative slack under which two objective values count as a tie; the
/// smallest threshold among tied maxima wins.
inline constexpr double kThresholdTieTolerance = 1e-12;

/**
 * Otsu's selector. Classes are {v <= t} and {v > t}; t ranges over
 * [lowest occupied bin, highest occupied bin).
 */
ThresholdResult otsu_threshold(const Histogram& h);

/**
 * Kapur-Sahoo-Wong maximum entropy selector (natural log). Only thresholds
 * leaving both classes non-empty are considered.
 */
ThresholdResult kapur_threshold(const Histogram& h);

/// Foreground is strictly brighter than t, optionally restricted to roi.
BinaryMask apply_threshold(const GrayImage& img, std::uint16_t t,
                           const BinaryMask* roi = nullptr);

} // namespace pectoral
