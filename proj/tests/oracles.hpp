#pragma once

// Slow, obviously-correct reference implementations used by the tests.

#include "pectoral/morphology.hpp"
#include "pectoral/raster.hpp"
#include "pectoral/threshold.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using namespace pectoral;

// Objective evaluated from scratch at every t; NaN where t is not a valid split.
inline std::vector<double> otsu_objective(const Histogram& h)
{
    std::vector<double> out(h.counts.size(), std::numeric_limits<double>::quiet_NaN());
    const double n = static_cast<double>(h.total());
    for (std::size_t t = 0; t < h.counts.size(); ++t) {
        double c0 = 0, c1 = 0, s0 = 0, s1 = 0;
        for (std::size_t v = 0; v < h.counts.size(); ++v) {
            const double c = static_cast<double>(h.counts[v]);
            if (v <= t) {
                c0 += c;
                s0 += c * static_cast<double>(v);
            } else {
                c1 += c;
                s1 += c * static_cast<double>(v);
            }
        }
        if (c0 == 0 || c1 == 0)
            continue;
        const double w0 = c0 / n, w1 = c1 / n;
        const double d = s0 / c0 - s1 / c1;
        out[t] = w0 * w1 * d * d;
    }
    return out;
}

inline std::vector<double> kapur_objective(const Histogram& h)
{
    std::vector<double> out(h.counts.size(), std::numeric_limits<double>::quiet_NaN());
    const double n = static_cast<double>(h.total());
    for (std::size_t t = 0; t < h.counts.size(); ++t) {
        double P = 0;
        for (std::size_t v = 0; v <= t; ++v)
            P += static_cast<double>(h.counts[v]) / n;
        double P1 = 0;
        for (std::size_t v = t + 1; v < h.counts.size(); ++v)
            P1 += static_cast<double>(h.counts[v]) / n;
        if (P <= 0 || P1 <= 0)
            continue;
        double H0 = 0, H1 = 0;
        for (std::size_t v = 0; v < h.counts.size(); ++v) {
            const double p = static_cast<double>(h.counts[v]) / n;
            if (p == 0)
                continue;
            if (v <= t)
                H0 -= (p / P) * std::log(p / P);
            else
                H1 -= (p / P1) * std::log(p / P1);
        }
        out[t] = H0 + H1;
    }
    return out;
}

// Smallest t whose objective is within the tie tolerance of the maximum.
inline int best_threshold(const std::vector<double>& objective)
{
    double best = -std::numeric_limits<double>::infinity();
    for (double v : objective)
        if (!std::isnan(v))
            best = std::max(best, v);
    const double floor = best - kThresholdTieTolerance * std::abs(best);
    for (std::size_t t = 0; t < objective.size(); ++t)
        if (!std::isnan(objective[t]) && objective[t] >= floor)
            return static_cast<int>(t);
    return -1;
}

// r <- min(unit_dilate(r), mask) until nothing changes.
inline GrayImage naive_reconstruct(const GrayImage& marker, const GrayImage& mask, Connectivity conn)
{
    const int W = mask.width(), H = mask.height();
    GrayImage r = marker;
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = std::min(r[i], mask[i]);
    for (bool changed = true; changed;) {
        changed = false;
        GrayImage next = r;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                std::uint16_t v = r.at(x, y);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (conn == Connectivity::Four && dx != 0 && dy != 0)
                            continue;
                        if (r.contains(x + dx, y + dy))
                            v = std::max(v, r.at(x + dx, y + dy));
                    }
                v = std::min(v, mask.at(x, y));
                if (v != next.at(x, y)) {
                    next.at(x, y) = v;
                    changed = true;
                }
            }
        r = next;
    }
    return r;
}

// Stamp the lattice disk at every foreground pixel.
inline BinaryMask stamp_dilate(const BinaryMask& m, int r)
{
    BinaryMask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y))
                continue;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    if (dx * dx + dy * dy <= r * r && out.contains(x + dx, y + dy))
                        out.set(x + dx, y + dy);
        }
    return out;
}

// Keep pixels whose whole disk lies on foreground inside the raster.
inline BinaryMask stamp_erode(const BinaryMask& m, int r)
{
    BinaryMask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            bool fits = true;
            for (int dy = -r; dy <= r && fits; ++dy)
                for (int dx = -r; dx <= r && fits; ++dx)
                    if (dx * dx + dy * dy <= r * r)
                        fits = m.contains(x + dx, y + dy) && m.at(x + dx, y + dy);
            out.set(x, y, fits);
        }
    return out;
}

inline BinaryMask pad(const BinaryMask& m, int p)
{
    BinaryMask out(m.width() + 2 * p, m.height() + 2 * p);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            out.set(x + p, y + p, m.at(x, y));
    return out;
}

inline BinaryMask crop(const BinaryMask& m, int p, int w, int h)
{
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.set(x, y, m.at(x + p, y + p));
    return out;
}

// Flood fill from each unlabelled foreground pixel in raster order.
inline std::vector<std::int32_t> bfs_labels(const BinaryMask& m, Connectivity conn)
{
    const int W = m.width(), H = m.height();
    std::vector<std::int32_t> labels(m.size(), 0);
    std::int32_t next = 0;
    for (int y0 = 0; y0 < H; ++y0)
        for (int x0 = 0; x0 < W; ++x0) {
            if (!m.at(x0, y0) || labels[y0 * W + x0])
                continue;
            ++next;
            std::deque<std::pair<int, int>> q{{x0, y0}};
            labels[y0 * W + x0] = next;
            while (!q.empty()) {
                auto [x, y] = q.front();
                q.pop_front();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if ((dx == 0 && dy == 0) || (conn == Connectivity::Four && dx != 0 && dy != 0))
                            continue;
                        const int nx = x + dx, ny = y + dy;
                        if (m.contains(nx, ny) && m.at(nx, ny) && !labels[ny * W + nx]) {
                            labels[ny * W + nx] = next;
                            q.emplace_back(nx, ny);
                        }
                    }
            }
        }
    return labels;
}

inline BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double density)
{
    std::bernoulli_distribution on(density);
    BinaryMask m(w, h);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.set(i, on(rng));
    return m;
}

inline GrayImage random_image(std::mt19937_64& rng, int w, int h, int depth, int max_value)
{
    std::uniform_int_distribution<int> v(0, max_value);
    GrayImage img(w, h, depth);
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = static_cast<std::uint16_t>(v(rng));
    return img;
}

// 256-bin histogram with a random occupied span and random sparsity.
inline Histogram random_histogram8(std::mt19937_64& rng)
{
    Histogram h;
    h.counts.assign(256, 0);
    std::uniform_int_distribution<int> bound(0, 255);
    int a = bound(rng), b = bound(rng);
    if (a > b)
        std::swap(a, b);
    if (a == b)
        b = a == 255 ? (--a, 255) : a + 1;
    std::bernoulli_distribution filled(std::uniform_real_distribution<double>(0.1, 1.0)(rng));
    std::uniform_int_distribution<int> count(1, 5000);
    for (int v = a; v <= b; ++v)
        if (v == a || v == b || filled(rng))
            h.counts[v] = static_cast<std::uint64_t>(count(rng));
    return h;
}

} // namespace oracle
