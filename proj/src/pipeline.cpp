#include "pectoral/pipeline.hpp"

#include "pectoral/threshold.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace pectoral {

namespace {

bool open_fraction(double f) { return f > 0.0 && f < 1.0; }

int rounded_radius(double fraction, int width)
{
    return static_cast<int>(std::lround(fraction * width));
}

GrayImage working_image(const GrayImage& img, const PipelineConfig& cfg)
{
    if (!cfg.invert_input)
        return img;
    GrayImage out = img;
    const auto top = img.max_value();
    for (auto& v : out.pixels())
        v = static_cast<std::uint16_t>(top - v);
    return out;
}

} // namespace

void PipelineConfig::validate(int width, int height) const
{
    if (!open_fraction(marker_rows_fraction))
        throw ConfigError("marker_rows_fraction must lie in (0, 1)");
    if (!open_fraction(window_upper_percentile))
        throw ConfigError("window_upper_percentile must lie in (0, 1)");
    if (!open_fraction(close_radius_fraction))
        throw ConfigError("close_radius_fraction must lie in (0, 1)");
    if (!open_fraction(open_radius_fraction))
        throw ConfigError("open_radius_fraction must lie in (0, 1)");
    if (!(min_pectoral_contrast >= 0.0))
        throw ConfigError("min_pectoral_contrast must be non-negative");
    if (width > 0 && (close_radius(width) < 1 || open_radius(width) < 1))
        throw ConfigError("structuring element radius rounds to zero for width " + std::to_string(width));
    if (height > 0 && marker_rows(height) < 1)
        throw ConfigError("marker strip is empty");
}

int PipelineConfig::marker_rows(int height) const
{
    // The epsilon keeps 0.04 * 500 from ceiling to 21.
    const double rows = std::ceil(marker_rows_fraction * height - 1e-9);
    return std::clamp(static_cast<int>(rows), 1, std::max(height, 1));
}

int PipelineConfig::close_radius(int width) const { return rounded_radius(close_radius_fraction, width); }
int PipelineConfig::open_radius(int width) const { return rounded_radius(open_radius_fraction, width); }

namespace {

double histogram_variance(const Histogram& h)
{
    double n = 0.0, s = 0.0, s2 = 0.0;
    for (std::size_t v = 0; v < h.counts.size(); ++v) {
        const double c = static_cast<double>(h.counts[v]);
        n += c;
        s += c * static_cast<double>(v);
        s2 += c * static_cast<double>(v) * static_cast<double>(v);
    }
    const double mean = s / n;
    return std::max(0.0, s2 / n - mean * mean);
}

} // namespace

std::uint16_t breast_threshold(const GrayImage& img)
{
    const Histogram h = histogram(img);
    const auto t = otsu_threshold(h).threshold;
    Histogram lower;
    lower.counts.assign(h.counts.begin(), h.counts.begin() + t + 1);
    if (lower.occupied() < 2)
        return t;
    const auto refined = otsu_threshold(lower);
    const double var = histogram_variance(lower);
    if (var > 0.0 && refined.objective / var >= kBreastSplitSeparability)
        return refined.threshold;
    return t;
}

BinaryMask segment_breast(const GrayImage& img, const PipelineConfig& cfg)
{
    const GrayImage work = working_image(img, cfg);
    const auto t = breast_threshold(work);
    const BinaryMask fg = apply_threshold(work, t);
    return fill_holes(largest_component(fg, cfg.connectivity));
}

Orientation detect_orientation(const BinaryMask& breast)
{
    const int W = breast.width();
    const int half = W / 2;
    std::size_t left = 0, right = 0;
    for (int y = 0; y < breast.height(); ++y) {
        for (int x = 0; x < half; ++x)
            left += breast.at(x, y);
        for (int x = W - half; x < W; ++x)
            right += breast.at(x, y);
    }
    return left > right ? Orientation::Left : Orientation::Right;
}

WindowBounds window_bounds(const GrayImage& img, const BinaryMask& breast, const PipelineConfig& cfg)
{
    const auto range = min_max(img, breast);
    WindowBounds b{range.lo, range.lo};
    if (cfg.window_mode == WindowMode::RangeFraction) {
        const double span = static_cast<double>(range.hi - range.lo);
        b.hi = static_cast<std::uint16_t>(range.lo + std::lround(cfg.window_upper_percentile * span));
    } else {
        const Histogram h = histogram(img, breast);
        const auto total = h.total();
        const auto rank = static_cast<std::uint64_t>(
            std::max(1.0, std::ceil(cfg.window_upper_percentile * static_cast<double>(total))));
        std::uint64_t cum = 0;
        for (std::size_t v = 0; v < h.counts.size(); ++v) {
            cum += h.counts[v];
            if (cum >= rank) {
                b.hi = static_cast<std::uint16_t>(v);
                break;
            }
        }
    }
    if (b.hi <= b.lo)
        throw DegenerateWindowError("breast region has no intensity spread to window");
    return b;
}

namespace {

std::uint16_t window_value(std::uint16_t v, WindowBounds b, std::uint32_t full)
{
    if (v <= b.lo)
        return 0;
    if (v >= b.hi)
        return static_cast<std::uint16_t>(full);
    const std::uint64_t num = static_cast<std::uint64_t>(v - b.lo) * full;
    const std::uint64_t den = static_cast<std::uint64_t>(b.hi - b.lo);
    return static_cast<std::uint16_t>((2 * num + den) / (2 * den)); // round half up
}

} // namespace

GrayImage apply_window(const GrayImage& img, const BinaryMask& breast, const PipelineConfig& cfg)
{
    const WindowBounds b = window_bounds(img, breast, cfg);
    GrayImage out(img.width(), img.height(), img.bit_depth());
    const std::uint32_t full = img.max_value();
    for (std::size_t i = 0; i < img.size(); ++i)
        if (breast[i])
            out[i] = window_value(img[i], b, full);
    return out;
}

GrayImage build_marker(const GrayImage& windowed, Orientation orient, const PipelineConfig& cfg,
                       std::optional<std::uint16_t>* chosen_threshold)
{
    const int W = windowed.width();
    const int rows = cfg.marker_rows(windowed.height());
    GrayImage marker(W, windowed.height(), windowed.bit_depth());

    Histogram strip;
    strip.counts.assign(std::size_t{1} << windowed.bit_depth(), 0);
    const std::size_t strip_pixels = static_cast<std::size_t>(rows) * W;
    for (std::size_t i = 0; i < strip_pixels; ++i)
        ++strip.counts[windowed[i]];

    if (strip.occupied() < 2) {
        const int cx = orient == Orientation::Left ? 0 : W - 1;
        marker.at(cx, 0) = windowed.at(cx, 0);
        if (chosen_threshold)
            chosen_threshold->reset();
        return marker;
    }
    const auto t = otsu_threshold(strip).threshold;
    for (std::size_t i = 0; i < strip_pixels; ++i)
        if (windowed[i] > t)
            marker[i] = windowed[i];
    if (chosen_threshold)
        *chosen_threshold = t;
    return marker;
}

std::vector<Point> extract_boundary(const BinaryMask& pectoral, Orientation orient)
{
    const int W = pectoral.width();
    const int H = pectoral.height();
    const int wall = orient == Orientation::Left ? 0 : W - 1;
    std::vector<Point> out;
    std::vector<Point> row;
    for (int y = 1; y < H; ++y) {
        row.clear();
        for (int x = 0; x < W; ++x) {
            if (x == wall || !pectoral.at(x, y))
                continue;
            bool edge = false;
            for (int dy = -1; dy <= 1 && !edge; ++dy)
                for (int dx = -1; dx <= 1 && !edge; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if ((dx || dy) && pectoral.contains(nx, ny) && !pectoral.at(nx, ny))
                        edge = true;
                }
            if (edge)
                row.push_back({x, y});
        }
        if (orient == Orientation::Left)
            std::reverse(row.begin(), row.end());
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

PectoralStats pectoral_stats(const GrayImage& original, const BinaryMask& pectoral)
{
    require_same_size(original, pectoral, "pectoral_stats");
    std::uint64_t sum = 0;
    std::size_t area = 0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        if (pectoral[i]) {
            sum += original[i];
            ++area;
        }
    }
    if (area == 0)
        throw std::invalid_argument("pectoral_stats: empty mask");
    return {area, static_cast<double>(sum) / static_cast<double>(area)};
}

namespace {

// Robust noise scale: MAD of horizontal neighbour differences inside region.
double noise_sigma(const GrayImage& img, const BinaryMask& region)
{
    std::vector<std::uint64_t> counts(std::size_t{1} << img.bit_depth(), 0);
    std::uint64_t n = 0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x + 1 < img.width(); ++x)
            if (region.at(x, y) && region.at(x + 1, y)) {
                const int d = std::abs(int(img.at(x, y)) - int(img.at(x + 1, y)));
                ++counts[d];
                ++n;
            }
    if (n == 0)
        return 1.0;
    const std::uint64_t half = (n + 1) / 2;
    std::uint64_t cum = 0;
    std::size_t median = 0;
    for (std::size_t d = 0; d < counts.size(); ++d) {
        cum += counts[d];
        if (cum >= half) {
            median = d;
            break;
        }
    }
    // 1.4826 * MAD estimates sigma of a difference, which is sqrt(2) * sigma.
    return std::max(1.0, 1.4826 * static_cast<double>(median) / std::sqrt(2.0));
}

std::size_t histogram_median(const Histogram& h)
{
    const std::uint64_t half = (h.total() + 1) / 2;
    std::uint64_t cum = 0;
    for (std::size_t v = 0; v < h.counts.size(); ++v) {
        cum += h.counts[v];
        if (cum >= half)
            return v;
    }
    return 0;
}

// Median gap between candidate and the rest of the breast, in noise sigmas.
// Medians keep a few bright blobs from lifting either side.
double candidate_contrast(const GrayImage& img, const BinaryMask& breast, const BinaryMask& candidate)
{
    const BinaryMask rest = subtract(breast, candidate);
    if (!rest.any() || !candidate.any())
        return 0.0;
    const double diff = static_cast<double>(histogram_median(histogram(img, candidate))) -
                        static_cast<double>(histogram_median(histogram(img, rest)));
    return diff / noise_sigma(img, breast);
}

// The post-cleanup component with most pixels in the top strip on the
// chest-wall half. Returns 0 when no component reaches that region.
int select_pectoral_component(const ComponentLabels& cc, Orientation orient, int strip_rows)
{
    const int W = cc.width;
    const int half = W / 2;
    const int x0 = orient == Orientation::Left ? 0 : W - half;
    const int x1 = orient == Orientation::Left ? half : W;
    std::vector<std::size_t> hits(cc.components.size() + 1, 0);
    for (int y = 0; y < std::min(strip_rows, cc.height); ++y)
        for (int x = x0; x < x1; ++x)
            ++hits[cc.label_at(x, y)];
    int best = 0;
    for (const auto& c : cc.components) {
        if (hits[c.id] == 0)
            continue;
        if (best == 0 || hits[c.id] > hits[best] ||
            (hits[c.id] == hits[best] && c.pixel_count > cc.components[best - 1].pixel_count))
            best = c.id;
    }
    return best;
}

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}

    template <class F>
    auto run(const char* stage, F&& f)
    {
        const auto start = std::chrono::steady_clock::now();
        try {
            if constexpr (std::is_void_v<decltype(f())>) {
                f();
                record(stage, start);
            } else {
                auto value = f();
                record(stage, start);
                return value;
            }
        } catch (const PipelineError&) {
            throw;
        } catch (const DegenerateWindowError&) {
            throw;
        } catch (const DegenerateHistogramError&) {
            throw;
        } catch (const std::exception& e) {
            throw PipelineError(stage, e.what());
        }
    }

private:
    void record(const char* stage, std::chrono::steady_clock::time_point start)
    {
        const auto elapsed = std::chrono::steady_clock::now() - start;
        sink_.push_back({stage, std::chrono::duration<double, std::milli>(elapsed).count()});
    }

    std::vector<StageTiming>& sink_;
};

} // namespace

SegmentationResult segment_pectoral(const GrayImage& img, const PipelineConfig& cfg)
{
    SegmentationResult res;
    res.inverted_input = cfg.invert_input;
    StageClock clock(res.timings);
    const int W = img.width();
    const int H = img.height();

    clock.run("config", [&] { cfg.validate(W, H); });
    const GrayImage work = cfg.invert_input ? working_image(img, cfg) : GrayImage{};
    const GrayImage& input = cfg.invert_input ? work : img;

    res.pectoral = BinaryMask(W, H);
    StageImages stages;

    try {
        res.breast = clock.run("segment_breast", [&] {
            res.thresholds.breast = breast_threshold(input);
            PipelineConfig plain = cfg;
            plain.invert_input = false;
            return segment_breast(input, plain);
        });
    } catch (const DegenerateHistogramError& e) {
        throw PipelineError("segment_breast", e.what());
    }
    res.orientation = clock.run("detect_orientation", [&] { return detect_orientation(res.breast); });

    auto finish_without_muscle = [&]() {
        res.pectoral_found = false;
        if (cfg.keep_stages) {
            stages.breast = res.breast;
            res.stages = std::move(stages);
        }
        return res;
    };

    GrayImage windowed;
    try {
        windowed = clock.run("apply_window", [&] {
            res.window = window_bounds(input, res.breast, cfg);
            return apply_window(input, res.breast, cfg);
        });
    } catch (const DegenerateWindowError&) {
        // A flat breast has no brighter muscle to find.
        return finish_without_muscle();
    }

    const GrayImage marker = clock.run("build_marker", [&] {
        return build_marker(windowed, res.orientation, cfg, &res.thresholds.marker);
    });
    const GrayImage reconstructed = clock.run("reconstruct", [&] {
        return geodesic_reconstruct_dilation(marker, windowed, cfg.connectivity);
    });
    if (cfg.keep_stages) {
        stages.breast = res.breast;
        stages.windowed = windowed;
        stages.marker = marker;
        stages.reconstructed = reconstructed;
    }

    std::uint16_t muscle_t = 0;
    try {
        muscle_t = clock.run("muscle_threshold", [&] {
            const Histogram h = histogram(reconstructed, res.breast);
            return (cfg.muscle_threshold == MuscleThreshold::Kapur ? kapur_threshold(h) : otsu_threshold(h)).threshold;
        });
    } catch (const DegenerateHistogramError&) {
        return finish_without_muscle();
    }
    res.thresholds.muscle = muscle_t;

    const BinaryMask opened = clock.run("cleanup", [&] {
        const BinaryMask bright = apply_threshold(reconstructed, muscle_t, &res.breast);
        const BinaryMask closed = intersect(binary_close(bright, disk_se(cfg.close_radius(W))), res.breast);
        BinaryMask out = binary_open(closed, disk_se(cfg.open_radius(W)));
        if (cfg.keep_stages) {
            stages.thresholded = bright;
            stages.closed = closed;
            stages.opened = out;
        }
        return out;
    });

    const int chosen = clock.run("select_component", [&] {
        const auto cc = connected_components(opened, cfg.connectivity);
        const int id = select_pectoral_component(cc, res.orientation, cfg.marker_rows(H));
        if (id != 0)
            res.pectoral = cc.mask_of(id);
        return id;
    });
    if (cfg.keep_stages)
        res.stages = std::move(stages);
    if (chosen == 0) {
        res.pectoral = BinaryMask(W, H);
        res.pectoral_found = false;
        return res;
    }

    res.contrast = clock.run("contrast_check", [&] {
        return candidate_contrast(input, res.breast, res.pectoral);
    });
    if (!(res.contrast >= cfg.min_pectoral_contrast)) {
        res.pectoral = BinaryMask(W, H);
        res.pectoral_found = false;
        return res;
    }

    res.pectoral_found = true;
    res.boundary = clock.run("extract_boundary", [&] { return extract_boundary(res.pectoral, res.orientation); });
    res.stats = clock.run("pectoral_stats", [&] { return pectoral_stats(img, res.pectoral); });
    return res;
}

RgbImage render_overlay(const GrayImage& img, const SegmentationResult& result)
{
    if (result.pectoral.size() != 0)
        require_same_size(img, result.pectoral, "render_overlay");
    RgbImage out{img.width(), img.height(), std::vector<std::uint8_t>(img.size() * 3)};
    const std::uint32_t full = img.max_value();
    for (std::size_t i = 0; i < img.size(); ++i) {
        const std::uint16_t raw = result.inverted_input ? static_cast<std::uint16_t>(full - img[i]) : img[i];
        const std::uint32_t v = result.window ? window_value(raw, *result.window, full) : raw;
        const auto g = static_cast<std::uint8_t>((v * 255u + full / 2) / full);
        std::uint8_t* px = out.data.data() + 3 * i;
        if (result.pectoral.size() != 0 && result.pectoral[i]) {
            px[0] = static_cast<std::uint8_t>(std::lround((1.0 - kOverlayAlpha) * g + kOverlayAlpha * 255.0));
            px[1] = static_cast<std::uint8_t>(std::lround((1.0 - kOverlayAlpha) * g));
            px[2] = px[1];
        } else {
            px[0] = px[1] = px[2] = g;
        }
    }
    for (const auto& p : result.boundary) {
        if (!img.contains(p.x, p.y))
            continue;
        std::uint8_t* px = out.pixel(p.x, p.y);
        px[0] = 255;
        px[1] = 255;
        px[2] = 0;
    }
    return out;
}

} // namespace pectoral
