#pragma once

#include "pectoral/morphology.hpp"
#include "pectoral/raster.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pectoral {

/// How the upper window bound is derived from the breast intensities.
enum class WindowMode {
    RangeFraction,       // lo + fraction * (max - lo)
    HistogramPercentile, // the fraction-quantile of the breast histogram
};

enum class BreastThreshold { Otsu };

/// Selector splitting the reconstructed breast into muscle and tissue.
enum class MuscleThreshold { Otsu, Kapur };

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct PipelineConfig {
    /// Height fraction forming the top strip the marker is drawn from.
    double marker_rows_fraction = 0.04;
    double window_upper_percentile = 0.75;
    WindowMode window_mode = WindowMode::RangeFraction;
    /// Disk radii as a fraction of image width.
    double close_radius_fraction = 0.01;
    double open_radius_fraction = 0.02;
    Connectivity connectivity = Connectivity::Eight;
    /// For rasters where tissue is darker than background.
    bool invert_input = false;
    BreastThreshold breast_threshold = BreastThreshold::Otsu;
    MuscleThreshold muscle_threshold = MuscleThreshold::Otsu;
    /// Minimum (candidate median - rest-of-breast median) / noise sigma, measured
    /// on the input raster, for a candidate to be accepted as muscle.
    double min_pectoral_contrast = 3.0;
    /// Keep intermediate rasters in the result.
    bool keep_stages = false;

    /// Throws ConfigError when a fraction leaves (0, 1) or a radius rounds to 0.
    void validate(int width, int height) const;

    int marker_rows(int height) const;
    int close_radius(int width) const;
    int open_radius(int width) const;
};

/// A stage failure, tagged with the stage that raised it.
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& message)
        : std::runtime_error(stage + ": " + message), stage_(std::move(stage))
    {
    }
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// The breast region is flat, so no window can be formed.
class DegenerateWindowError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct PectoralStats {
    std::size_t area = 0;
    double mean_intensity = 0.0;
};

struct WindowBounds {
    std::uint16_t lo = 0;
    std::uint16_t hi = 0;
};

struct StageTiming {
    std::string stage;
    double milliseconds = 0.0;
};

struct StageThresholds {
    std::uint16_t breast = 0;
    std::optional<std::uint16_t> marker; // unset when the corner fallback fired
    std::optional<std::uint16_t> muscle;
};

struct StageImages {
    BinaryMask breast;
    GrayImage windowed;
    GrayImage marker;
    GrayImage reconstructed;
    BinaryMask thresholded;
    BinaryMask closed;
    BinaryMask opened;
};

struct SegmentationResult {
    BinaryMask pectoral;
    BinaryMask breast;
    /// Interface pixels, top to bottom.
    std::vector<Point> boundary;
    Orientation orientation = Orientation::Left;
    PectoralStats stats;
    bool pectoral_found = false;
    std::optional<WindowBounds> window;
    /// Window bounds refer to the inverted raster.
    bool inverted_input = false;
    StageThresholds thresholds;
    /// Candidate contrast that was compared with min_pectoral_contrast.
    double contrast = 0.0;
    std::vector<StageTiming> timings;
    std::optional<StageImages> stages;
};

/// Lower-class separability above which the Otsu background class is split
/// again (a unimodal Gaussian scores about 0.64).
inline constexpr double kBreastSplitSeparability = 0.8;

/**
 * Otsu threshold between background and tissue. When the muscle is bright
 * enough to win the first split, the lower class still holds background and
 * breast as two clear modes, and it is split again.
 */
std::uint16_t breast_threshold(const GrayImage& img);

BinaryMask segment_breast(const GrayImage& img, const PipelineConfig& cfg);

/// Left when the left half-columns hold more breast pixels than the right.
Orientation detect_orientation(const BinaryMask& breast);

WindowBounds window_bounds(const GrayImage& img, const BinaryMask& breast, const PipelineConfig& cfg);
GrayImage apply_window(const GrayImage& img, const BinaryMask& breast, const PipelineConfig& cfg);

/// Otsu-selected bright pixels of the top strip; everything else 0.
GrayImage build_marker(const GrayImage& windowed, Orientation orient, const PipelineConfig& cfg,
                       std::optional<std::uint16_t>* chosen_threshold = nullptr);

SegmentationResult segment_pectoral(const GrayImage& img, const PipelineConfig& cfg = {});

/**
 * Pectoral pixels with at least one non-pectoral 8-neighbour, excluding the
 * top row and the chest-wall column. Ordered by row, and within a row from
 * the outer side toward the chest wall so the list reads as a traced curve.
 */
std::vector<Point> extract_boundary(const BinaryMask& pectoral, Orientation orient);

/// Throws std::invalid_argument for an empty mask.
PectoralStats pectoral_stats(const GrayImage& original, const BinaryMask& pectoral);

/// Pectoral tint alpha used by render_overlay.
inline constexpr double kOverlayAlpha = 0.35;

/// Windowed grayscale base, red-tinted muscle, yellow boundary.
RgbImage render_overlay(const GrayImage& img, const SegmentationResult& result);

} // namespace pectoral
