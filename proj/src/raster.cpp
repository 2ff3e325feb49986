#include "pectoral/raster.hpp"

#include <algorithm>
#include <numeric>

namespace pectoral {

const char* to_string(Orientation o)
{
    return o == Orientation::Left ? "left" : "right";
}

GrayImage::GrayImage(int width, int height, int bit_depth, std::uint16_t fill)
    : GrayImage(width, height, bit_depth,
                std::vector<std::uint16_t>(
                    static_cast<std::size_t>(std::max(width, 0)) *
                        static_cast<std::size_t>(std::max(height, 0)),
                    fill))
{
}

GrayImage::GrayImage(int width, int height, int bit_depth, std::vector<std::uint16_t> pixels)
    : width_(width), height_(height), bit_depth_(bit_depth), pixels_(std::move(pixels))
{
    if (width < 1 || height < 1)
        throw std::invalid_argument("image dimensions must be positive");
    if (bit_depth != 8 && bit_depth != 16)
        throw std::invalid_argument("bit depth must be 8 or 16");
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw std::invalid_argument("pixel count does not match dimensions");
    const auto limit = max_value();
    if (std::any_of(pixels_.begin(), pixels_.end(), [limit](std::uint16_t v) { return v > limit; }))
        throw std::invalid_argument("pixel value exceeds bit depth");
}

BinaryMask::BinaryMask(int width, int height, bool fill)
    : width_(width), height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)),
            fill ? 1 : 0)
{
    if (width < 0 || height < 0)
        throw std::invalid_argument("mask dimensions must be non-negative");
}

std::size_t BinaryMask::count() const noexcept
{
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryMask::any() const noexcept
{
    return std::find(bits_.begin(), bits_.end(), std::uint8_t{1}) != bits_.end();
}

std::uint64_t Histogram::total() const noexcept
{
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::size_t Histogram::occupied() const noexcept
{
    return static_cast<std::size_t>(
        std::count_if(counts.begin(), counts.end(), [](std::uint64_t c) { return c != 0; }));
}

namespace {

std::string mismatch_message(const char* what, int w0, int h0, int w1, int h1)
{
    return std::string(what) + ": dimension mismatch (" + std::to_string(w0) + "x" +
           std::to_string(h0) + " vs " + std::to_string(w1) + "x" + std::to_string(h1) + ")";
}

} // namespace

void require_same_size(const GrayImage& img, const BinaryMask& mask, const char* what)
{
    if (img.width() != mask.width() || img.height() != mask.height())
        throw DimensionError(mismatch_message(what, img.width(), img.height(), mask.width(), mask.height()));
}

void require_same_size(const BinaryMask& a, const BinaryMask& b, const char* what)
{
    if (a.width() != b.width() || a.height() != b.height())
        throw DimensionError(mismatch_message(what, a.width(), a.height(), b.width(), b.height()));
}

void require_same_size(const GrayImage& a, const GrayImage& b, const char* what)
{
    if (a.width() != b.width() || a.height() != b.height())
        throw DimensionError(mismatch_message(what, a.width(), a.height(), b.width(), b.height()));
}

Histogram histogram(const GrayImage& img)
{
    Histogram h;
    h.counts.assign(std::size_t{1} << img.bit_depth(), 0);
    for (auto v : img.pixels())
        ++h.counts[v];
    return h;
}

Histogram histogram(const GrayImage& img, const BinaryMask& roi)
{
    require_same_size(img, roi, "histogram");
    Histogram h;
    h.counts.assign(std::size_t{1} << img.bit_depth(), 0);
    const auto& px = img.pixels();
    const auto& bits = roi.bits();
    for (std::size_t i = 0; i < px.size(); ++i)
        if (bits[i])
            ++h.counts[px[i]];
    return h;
}

IntensityRange min_max(const GrayImage& img, const BinaryMask& roi)
{
    require_same_size(img, roi, "min_max");
    const auto& px = img.pixels();
    const auto& bits = roi.bits();
    bool seen = false;
    IntensityRange r{0xFFFF, 0};
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (!bits[i])
            continue;
        seen = true;
        r.lo = std::min(r.lo, px[i]);
        r.hi = std::max(r.hi, px[i]);
    }
    if (!seen)
        throw std::invalid_argument("min_max: empty region of interest");
    return r;
}

BinaryMask complement(const BinaryMask& m)
{
    BinaryMask out(m.width(), m.height());
    auto& o = out.bits();
    const auto& in = m.bits();
    for (std::size_t i = 0; i < in.size(); ++i)
        o[i] = in[i] ^ 1u;
    return out;
}

BinaryMask intersect(const BinaryMask& a, const BinaryMask& b)
{
    require_same_size(a, b, "intersect");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.bits()[i] = a.bits()[i] & b.bits()[i];
    return out;
}

BinaryMask unite(const BinaryMask& a, const BinaryMask& b)
{
    require_same_size(a, b, "unite");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.bits()[i] = a.bits()[i] | b.bits()[i];
    return out;
}

BinaryMask subtract(const BinaryMask& a, const BinaryMask& b)
{
    require_same_size(a, b, "subtract");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.bits()[i] = a.bits()[i] & (b.bits()[i] ^ 1u);
    return out;
}

bool is_subset(const BinaryMask& a, const BinaryMask& b)
{
    require_same_size(a, b, "is_subset");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.bits()[i] && !b.bits()[i])
            return false;
    return true;
}

BinaryMask flip_horizontal(const BinaryMask& m)
{
    BinaryMask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            out.set(m.width() - 1 - x, y, m.at(x, y));
    return out;
}

GrayImage flip_horizontal(const GrayImage& img)
{
    GrayImage out(img.width(), img.height(), img.bit_depth());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out.at(img.width() - 1 - x, y) = img.at(x, y);
    return out;
}

} // namespace pectoral
