#pragma once

#include "pectoral/keyvalue.hpp"
#include "pectoral/raster.hpp"

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace pectoral {

/// Straight muscle edge meeting the top row at edge_top * width from the
/// chest wall and descending toward the wall at angle_deg to the top row.
struct StraightEdge {
    double angle_deg = 60.0;
    double top_fraction = 0.3;
};

/// Muscle width as a function of depth: d(u) / width = c0 + c1 u + c2 u^2,
/// u = y / height, distances measured from the chest wall.
struct CurvedEdge {
    double c0 = 0.3;
    double c1 = 0.0;
    double c2 = -0.6;
};

/// No muscle in frame (CC-like view).
struct AbsentEdge {};

using PectoralEdge = std::variant<StraightEdge, CurvedEdge, AbsentEdge>;

/// Disk of dense tissue; cx is measured from the chest wall, cy from the top.
struct DenseBlob {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    std::uint16_t intensity = 0;
};

class InvalidPhantomSpec : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct PhantomSpec {
    int width = 360;
    int height = 480;
    int bit_depth = 16;
    Orientation orientation = Orientation::Left;
    PectoralEdge edge = StraightEdge{};
    std::uint16_t pectoral_level = 40000;
    std::uint16_t breast_level = 20000;
    std::uint16_t background_level = 1000;
    std::vector<DenseBlob> blobs;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    // Half-ellipse breast centred on the chest wall, as fractions of the image.
    double breast_center_y = 0.5;
    double breast_radius_x = 0.8;
    double breast_radius_y = 0.65;

    /// Throws InvalidPhantomSpec.
    void validate() const;

    /// Muscle width at pixel-centre depth y (may be <= 0). Zero for AbsentEdge.
    double edge_distance(double y) const;

    KeyValueFile to_key_values() const;
    static PhantomSpec from_key_values(const KeyValueFile& kv);
};

struct Phantom {
    GrayImage image;
    BinaryMask truth_pectoral;
    BinaryMask truth_breast;
};

/// Deterministic: equal PhantomSpec values give identical rasters.
Phantom generate_phantom(const PhantomSpec& spec);

/// Area of the straight-edge triangle in pixels^2.
double analytic_wedge_area(const PhantomSpec& spec);

enum class ErrorClass { Correct, DenseAsMuscle, MuscleAsBreast, Both, NoPectoralFound };

const char* to_string(ErrorClass c);

/// Share of the truth area a prediction may over- or under-cover and still count as Correct.
inline constexpr double kErrorFractionLimit = 0.05;
inline constexpr double kCorrectDice = 0.95;

struct EvalReport {
    double dice = 0.0;
    /// Symmetric mean nearest-neighbour distance between interface pixels;
    /// +inf when exactly one side has no interface.
    double boundary_mean_distance = 0.0;
    double over_fraction = 0.0;  // |pred \ truth| / |truth|
    double under_fraction = 0.0; // |truth \ pred| / |truth|
    ErrorClass error_class = ErrorClass::Correct;
};

double dice(const BinaryMask& a, const BinaryMask& b);

/// Mask pixels with a false 8-neighbour, excluding pixels on the image border.
std::vector<Point> interface_pixels(const BinaryMask& m);

double mean_boundary_distance(const std::vector<Point>& a, const std::vector<Point>& b);

EvalReport evaluate(const BinaryMask& pred, const BinaryMask& truth);

/// Orthogonal least-squares line through a point set.
struct LineFit {
    double cx = 0.0, cy = 0.0; // centroid
    double dx = 0.0, dy = 1.0; // unit direction
    double rms_residual = 0.0; // RMS perpendicular distance
};

LineFit fit_line(const std::vector<Point>& pts);

/// The fitted line rasterised between the extreme projections of pts.
std::vector<Point> rasterize_line(const LineFit& line, const std::vector<Point>& pts, int width, int height);

// ---------------------------------------------------------------------------
// Randomised suites

enum class PhantomKind { Straight, Curved, Absent };

/// Draws a spec of the given kind; every draw comes from rng.
PhantomSpec sample_phantom_spec(PhantomKind kind, std::mt19937_64& rng, int width = 360, int height = 480);

struct PhantomCase {
    std::string id;
    PhantomSpec spec;
};

/// `straight` straight-edge cases followed by `curved` curved-edge cases.
std::vector<PhantomCase> make_phantom_suite(std::uint64_t seed, int straight, int curved,
                                            int width = 360, int height = 480);

/// The 200-case validation suite (100 straight, 100 curved).
std::vector<PhantomCase> default_validation_suite();
inline constexpr std::uint64_t kDefaultSuiteSeed = 20160321;

} // namespace pectoral
