#include "pectoral/phantom.hpp"
#include "pectoral/pipeline.hpp"
#include "pectoral/threshold.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace pectoral;

namespace {

PhantomSpec straight_spec(Orientation o = Orientation::Left)
{
    PhantomSpec s;
    s.orientation = o;
    s.edge = StraightEdge{60.0, 0.3};
    s.noise_sigma = 400.0;
    s.seed = 5;
    return s;
}

PhantomSpec curved_spec()
{
    PhantomSpec s;
    s.edge = CurvedEdge{0.32, 0.2, -0.9};
    s.noise_sigma = 400.0;
    s.seed = 6;
    return s;
}

BinaryMask rect(int w, int h, int x0, int y0, int x1, int y1)
{
    BinaryMask m(w, h);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
            m.set(x, y);
    return m;
}

} // namespace

TEST(Config, ValidatesFractionsAndRadii)
{
    PipelineConfig c;
    EXPECT_NO_THROW(c.validate(360, 480));
    c.marker_rows_fraction = 0.0;
    EXPECT_THROW(c.validate(360, 480), ConfigError);
    c = {};
    c.window_upper_percentile = 1.0;
    EXPECT_THROW(c.validate(360, 480), ConfigError);
    c = {};
    c.close_radius_fraction = 0.001;
    EXPECT_THROW(c.validate(100, 100), ConfigError);
    c = {};
    c.min_pectoral_contrast = -1.0;
    EXPECT_THROW(c.validate(360, 480), ConfigError);
}

TEST(Config, MarkerRowsRoundUp)
{
    PipelineConfig c;
    EXPECT_EQ(c.marker_rows(480), 20);
    EXPECT_EQ(c.marker_rows(100), 4);
    EXPECT_EQ(c.marker_rows(101), 5);
    EXPECT_EQ(c.close_radius(360), 4);
    EXPECT_EQ(c.open_radius(360), 7);
}

TEST(SegmentBreast, MatchesPhantomTruth)
{
    for (auto o : {Orientation::Left, Orientation::Right}) {
        const Phantom ph = generate_phantom(straight_spec(o));
        const BinaryMask breast = segment_breast(ph.image, {});
        EXPECT_GE(dice(breast, ph.truth_breast), 0.99);
        const int W = breast.width();
        bool left = false, right = false;
        for (int y = 0; y < breast.height(); ++y) {
            left |= breast.at(0, y);
            right |= breast.at(W - 1, y);
        }
        EXPECT_NE(left, right);
        EXPECT_EQ(left, o == Orientation::Left);
    }
}

TEST(SegmentBreast, BlankImageThrows)
{
    EXPECT_THROW(segment_breast(GrayImage(50, 50, 16), {}), DegenerateHistogramError);
}

TEST(DetectOrientation, HalfMasks)
{
    const BinaryMask left = rect(20, 10, 0, 0, 9, 10);
    EXPECT_EQ(detect_orientation(left), Orientation::Left);
    EXPECT_EQ(detect_orientation(flip_horizontal(left)), Orientation::Right);
}

TEST(Window, RangeFractionExample)
{
    GrayImage img(4, 1, 16, std::vector<std::uint16_t>{100, 175, 300, 250});
    const BinaryMask all(4, 1, true);
    const WindowBounds b = window_bounds(img, all, {});
    EXPECT_EQ(b.lo, 100);
    EXPECT_EQ(b.hi, 250);
    const GrayImage w = apply_window(img, all, {});
    EXPECT_EQ(w.at(0, 0), 0);
    EXPECT_EQ(w.at(1, 0), 32768);
    EXPECT_EQ(w.at(2, 0), 65535);
    EXPECT_EQ(w.at(3, 0), 65535);
}

TEST(Window, MonotoneAndZeroOutsideBreast)
{
    GrayImage img(64, 1, 8);
    for (int x = 0; x < 64; ++x)
        img.at(x, 0) = static_cast<std::uint16_t>(x * 4);
    BinaryMask roi(64, 1, true);
    roi.set(0, 0, false);
    const GrayImage w = apply_window(img, roi, {});
    EXPECT_EQ(w.at(0, 0), 0);
    for (int x = 2; x < 64; ++x)
        EXPECT_GE(w.at(x, 0), w.at(x - 1, 0));
}

TEST(Window, FlatBreastIsDegenerate)
{
    EXPECT_THROW(window_bounds(GrayImage(5, 5, 8, 9), BinaryMask(5, 5, true), {}), DegenerateWindowError);
}

TEST(Window, PercentileMode)
{
    GrayImage img(4, 1, 8, std::vector<std::uint16_t>{10, 20, 30, 40});
    PipelineConfig c;
    c.window_mode = WindowMode::HistogramPercentile;
    const WindowBounds b = window_bounds(img, BinaryMask(4, 1, true), c);
    EXPECT_EQ(b.lo, 10);
    EXPECT_EQ(b.hi, 30);
}

TEST(Marker, ConfinedToTopStripAndBelowWindowed)
{
    const Phantom ph = generate_phantom(straight_spec());
    const PipelineConfig cfg;
    const BinaryMask breast = segment_breast(ph.image, cfg);
    const GrayImage windowed = apply_window(ph.image, breast, cfg);
    std::optional<std::uint16_t> t;
    const GrayImage marker = build_marker(windowed, Orientation::Left, cfg, &t);
    ASSERT_TRUE(t.has_value());
    const int rows = cfg.marker_rows(ph.image.height());
    bool any = false;
    for (int y = 0; y < marker.height(); ++y)
        for (int x = 0; x < marker.width(); ++x) {
            EXPECT_LE(marker.at(x, y), windowed.at(x, y));
            if (y >= rows) {
                EXPECT_EQ(marker.at(x, y), 0);
            }
            any |= marker.at(x, y) > 0;
        }
    EXPECT_TRUE(any);
}

TEST(Marker, BlankStripFallsBackToCorner)
{
    GrayImage windowed(40, 50, 8, 200);
    std::optional<std::uint16_t> t = 5;
    const GrayImage m = build_marker(windowed, Orientation::Right, {}, &t);
    EXPECT_FALSE(t.has_value());
    EXPECT_EQ(m.at(39, 0), 200);
    std::size_t nonzero = 0;
    for (auto v : m.pixels())
        nonzero += v != 0;
    EXPECT_EQ(nonzero, 1u);
}

TEST(SegmentPectoral, StraightPhantom)
{
    const Phantom ph = generate_phantom(straight_spec());
    const SegmentationResult r = segment_pectoral(ph.image);
    ASSERT_TRUE(r.pectoral_found);
    EXPECT_EQ(r.orientation, Orientation::Left);
    EXPECT_GE(dice(r.pectoral, ph.truth_pectoral), 0.97);
    EXPECT_EQ(r.stats.area, r.pectoral.count());
    EXPECT_GE(r.contrast, PipelineConfig{}.min_pectoral_contrast);
}

TEST(SegmentPectoral, CurvedPhantomBeatsLineFit)
{
    const Phantom ph = generate_phantom(curved_spec());
    const SegmentationResult r = segment_pectoral(ph.image);
    ASSERT_TRUE(r.pectoral_found);
    EXPECT_GE(dice(r.pectoral, ph.truth_pectoral), 0.95);
    const auto truth_if = interface_pixels(ph.truth_pectoral);
    const auto line = rasterize_line(fit_line(truth_if), truth_if, ph.image.width(), ph.image.height());
    EXPECT_LT(mean_boundary_distance(interface_pixels(r.pectoral), truth_if),
              mean_boundary_distance(line, truth_if));
}

TEST(SegmentPectoral, AbsentMuscleIsNotFound)
{
    PhantomSpec s = straight_spec();
    s.edge = AbsentEdge{};
    s.blobs = {{100, 250, 20, 28000}};
    const SegmentationResult r = segment_pectoral(generate_phantom(s).image);
    EXPECT_FALSE(r.pectoral_found);
    EXPECT_FALSE(r.pectoral.any());
    EXPECT_TRUE(r.boundary.empty());
}

TEST(SegmentPectoral, FlatBreastIsNotFound)
{
    GrayImage img(60, 60, 8, 10);
    for (int y = 0; y < 60; ++y)
        for (int x = 0; x < 30; ++x)
            img.at(x, y) = 200;
    const SegmentationResult r = segment_pectoral(img);
    EXPECT_FALSE(r.pectoral_found);
    EXPECT_EQ(r.breast.count(), 1800u);
}

TEST(SegmentPectoral, Properties)
{
    const Phantom ph = generate_phantom(curved_spec());
    PipelineConfig cfg;
    cfg.keep_stages = true;
    const SegmentationResult a = segment_pectoral(ph.image, cfg);
    const SegmentationResult b = segment_pectoral(ph.image, cfg);
    EXPECT_EQ(a.pectoral, b.pectoral);
    EXPECT_TRUE(is_subset(a.pectoral, a.breast));

    ASSERT_TRUE(a.stages.has_value());
    const auto& st = *a.stages;
    for (std::size_t i = 0; i < st.windowed.size(); ++i) {
        ASSERT_LE(st.reconstructed[i], st.windowed[i]);
        ASSERT_GE(st.reconstructed[i], st.marker[i]);
        if (st.marker[i]) {
            ASSERT_EQ(st.reconstructed[i], st.windowed[i]);
        }
    }
    EXPECT_TRUE(is_subset(st.opened, st.closed));
}

TEST(SegmentPectoral, MirrorEquivariance)
{
    const Phantom ph = generate_phantom(curved_spec());
    const SegmentationResult r = segment_pectoral(ph.image);
    const SegmentationResult m = segment_pectoral(flip_horizontal(ph.image));
    EXPECT_EQ(m.orientation, Orientation::Right);
    EXPECT_EQ(flip_horizontal(m.pectoral), r.pectoral);
}

TEST(SegmentPectoral, InvertedInput)
{
    const Phantom ph = generate_phantom(straight_spec());
    GrayImage inv = ph.image;
    for (auto& v : inv.pixels())
        v = static_cast<std::uint16_t>(65535 - v);
    PipelineConfig cfg;
    cfg.invert_input = true;
    const SegmentationResult r = segment_pectoral(inv, cfg);
    ASSERT_TRUE(r.pectoral_found);
    EXPECT_EQ(r.pectoral, segment_pectoral(ph.image).pectoral);
}

TEST(SegmentPectoral, ErrorsCarryStage)
{
    try {
        segment_pectoral(GrayImage(200, 200, 8));
        FAIL();
    } catch (const PipelineError& e) {
        EXPECT_EQ(e.stage(), "segment_breast");
    }
    PipelineConfig bad;
    bad.open_radius_fraction = 2.0;
    try {
        segment_pectoral(GrayImage(40, 40, 8), bad);
        FAIL();
    } catch (const PipelineError& e) {
        EXPECT_EQ(e.stage(), "config");
    }
}

TEST(SegmentPectoral, KapurSelectable)
{
    PipelineConfig cfg;
    cfg.muscle_threshold = MuscleThreshold::Kapur;
    const SegmentationResult r = segment_pectoral(generate_phantom(straight_spec()).image, cfg);
    EXPECT_TRUE(r.thresholds.muscle.has_value());
}

TEST(Boundary, QuadrantExample)
{
    const BinaryMask m = rect(8, 8, 0, 0, 4, 4);
    const std::vector<Point> expect{{3, 1}, {3, 2}, {3, 3}, {2, 3}, {1, 3}};
    EXPECT_EQ(extract_boundary(m, Orientation::Left), expect);

    std::vector<Point> mirrored;
    for (const auto& p : expect)
        mirrored.push_back({7 - p.x, p.y});
    EXPECT_EQ(extract_boundary(flip_horizontal(m), Orientation::Right), mirrored);
}

TEST(Stats, Examples)
{
    const BinaryMask m = rect(4, 4, 0, 0, 2, 2);
    const PectoralStats s = pectoral_stats(GrayImage(4, 4, 8, 9), m);
    EXPECT_EQ(s.area, 4u);
    EXPECT_DOUBLE_EQ(s.mean_intensity, 9.0);
    const GrayImage two(2, 1, 16, std::vector<std::uint16_t>{10, 20});
    EXPECT_DOUBLE_EQ(pectoral_stats(two, BinaryMask(2, 1, true)).mean_intensity, 15.0);
    EXPECT_THROW(pectoral_stats(two, BinaryMask(2, 1)), std::invalid_argument);
}

TEST(Overlay, GrayWhenEmptyAndTintedInside)
{
    const GrayImage img(6, 6, 8, 100);
    SegmentationResult none;
    none.pectoral = BinaryMask(6, 6);
    const RgbImage plain = render_overlay(img, none);
    for (std::size_t i = 0; i < img.size(); ++i) {
        EXPECT_EQ(plain.data[3 * i], plain.data[3 * i + 1]);
        EXPECT_EQ(plain.data[3 * i], plain.data[3 * i + 2]);
    }

    SegmentationResult r;
    r.pectoral = rect(6, 6, 0, 0, 3, 3);
    r.boundary = {{2, 1}};
    const RgbImage o = render_overlay(img, r);
    const auto* edge = o.pixel(2, 1);
    EXPECT_EQ(edge[0], 255);
    EXPECT_EQ(edge[1], 255);
    EXPECT_EQ(edge[2], 0);
    const auto* inside = o.pixel(0, 0);
    EXPECT_GT(inside[0], inside[2]);
    const auto* outside = o.pixel(5, 5);
    EXPECT_EQ(outside[0], outside[2]);
}
