#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pectoral {

/// Raised when two rasters that must share a geometry do not.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Which vertical image edge the chest wall touches.
enum class Orientation { Left, Right };

const char* to_string(Orientation o);

struct Point {
    int x = 0;
    int y = 0;
    friend bool operator==(const Point&, const Point&) = default;
};

/**
 * Single-channel raster with 8- or 16-bit samples.
 *
 * Samples are always held widened to uint16_t; bit_depth only records the
 * nominal depth so the codecs can write back what they read. Row-major,
 * origin at the top-left, y grows downward.
 */
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, int bit_depth, std::uint16_t fill = 0);
    GrayImage(int width, int height, int bit_depth, std::vector<std::uint16_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int bit_depth() const noexcept { return bit_depth_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    /// Largest representable sample, 2^bit_depth - 1.
    std::uint16_t max_value() const noexcept
    {
        return static_cast<std::uint16_t>((1u << bit_depth_) - 1u);
    }

    std::uint16_t at(int x, int y) const { return pixels_[index(x, y)]; }
    std::uint16_t& at(int x, int y) { return pixels_[index(x, y)]; }
    std::uint16_t operator[](std::size_t i) const { return pixels_[i]; }
    std::uint16_t& operator[](std::size_t i) { return pixels_[i]; }

    const std::vector<std::uint16_t>& pixels() const noexcept { return pixels_; }
    std::vector<std::uint16_t>& pixels() noexcept { return pixels_; }

    bool contains(int x, int y) const noexcept
    {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    std::size_t index(int x, int y) const noexcept
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    int bit_depth_ = 8;
    std::vector<std::uint16_t> pixels_;
};

/// Row-major boolean raster. Stored as bytes (0/1) to keep span access cheap.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return bits_.size(); }

    bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
    void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }
    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool v = true) { bits_[i] = v ? 1 : 0; }

    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
    std::vector<std::uint8_t>& bits() noexcept { return bits_; }

    bool contains(int x, int y) const noexcept
    {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    std::size_t count() const noexcept;
    bool any() const noexcept;

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    std::size_t index(int x, int y) const noexcept
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// 8-bit interleaved RGB raster, used only for rendered overlays.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data; // r,g,b per pixel

    std::uint8_t* pixel(int x, int y)
    {
        return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    const std::uint8_t* pixel(int x, int y) const
    {
        return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
};

/// Intensity tally; one bin per representable value of the source depth.
struct Histogram {
    std::vector<std::uint64_t> counts;

    std::size_t bin_count() const noexcept { return counts.size(); }
    std::uint64_t total() const noexcept;
    /// Number of bins with a non-zero count.
    std::size_t occupied() const noexcept;
};

struct IntensityRange {
    std::uint16_t lo = 0;
    std::uint16_t hi = 0;
};

void require_same_size(const GrayImage& img, const BinaryMask& mask, const char* what);
void require_same_size(const BinaryMask& a, const BinaryMask& b, const char* what);
void require_same_size(const GrayImage& a, const GrayImage& b, const char* what);

Histogram histogram(const GrayImage& img);
Histogram histogram(const GrayImage& img, const BinaryMask& roi);

/// Extremes over the roi; throws std::invalid_argument if the roi is empty.
IntensityRange min_max(const GrayImage& img, const BinaryMask& roi);

BinaryMask complement(const BinaryMask& m);
BinaryMask intersect(const BinaryMask& a, const BinaryMask& b);
BinaryMask unite(const BinaryMask& a, const BinaryMask& b);
/// a \ b
BinaryMask subtract(const BinaryMask& a, const BinaryMask& b);
bool is_subset(const BinaryMask& a, const BinaryMask& b);

BinaryMask flip_horizontal(const BinaryMask& m);
GrayImage flip_horizontal(const GrayImage& img);

} // namespace pectoral
