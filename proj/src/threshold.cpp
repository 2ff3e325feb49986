#include "pectoral/threshold.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace pectoral {

namespace {

struct OccupiedRange {
    std::size_t lo;
    std::size_t hi;
};

OccupiedRange occupied_range(const Histogram& h, const char* who)
{
    std::size_t lo = h.counts.size();
    std::size_t hi = 0;
    std::size_t occupied = 0;
    for (std::size_t v = 0; v < h.counts.size(); ++v) {
        if (h.counts[v] == 0)
            continue;
        ++occupied;
        if (lo == h.counts.size())
            lo = v;
        hi = v;
    }
    if (occupied < 2)
        throw DegenerateHistogramError(std::string(who) + ": histogram needs at least two occupied bins (has " +
                                       std::to_string(occupied) + ")");
    return {lo, hi};
}

// Smallest t in [lo, hi) whose score is within the tie tolerance of the best.
std::size_t first_near_max(const std::vector<double>& score, std::size_t lo, std::size_t hi)
{
    double best = score[lo];
    for (std::size_t t = lo + 1; t < hi; ++t)
        best = std::max(best, score[t]);
    const double floor = best - kThresholdTieTolerance * std::abs(best);
    for (std::size_t t = lo; t < hi; ++t)
        if (score[t] >= floor)
            return t;
    return lo;
}

} // namespace

ThresholdResult otsu_threshold(const Histogram& h)
{
    const auto [lo, hi] = occupied_range(h, "otsu");
    const double total = static_cast<double>(h.total());

    // Probabilities are normalised first so uniformly scaled histograms give
    // bit-identical scores; intensities are taken relative to lo so shifted
    // histograms do too.
    const std::size_t n = hi - lo + 1;
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i)
        p[i] = static_cast<double>(h.counts[lo + i]) / total;

    // Lower-class mass and first moment accumulate from the bottom; the upper
    // class accumulates separately from the top to avoid 1 - w cancellation.
    std::vector<double> w_low(n), m_low(n), w_high(n + 1, 0.0), m_high(n + 1, 0.0);
    double w = 0.0, m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w += p[i];
        m += static_cast<double>(i) * p[i];
        w_low[i] = w;
        m_low[i] = m;
    }
    w = 0.0;
    m = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        w += p[i];
        m += static_cast<double>(i) * p[i];
        w_high[i] = w;
        m_high[i] = m;
    }

    std::vector<double> score(h.counts.size(), 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double w0 = w_low[i];
        const double w1 = w_high[i + 1];
        const double diff = m_low[i] / w0 - m_high[i + 1] / w1;
        score[lo + i] = w0 * w1 * diff * diff;
    }
    const std::size_t t = first_near_max(score, lo, hi);
    return {static_cast<std::uint16_t>(t), score[t]};
}

ThresholdResult kapur_threshold(const Histogram& h)
{
    const auto [lo, hi] = occupied_range(h, "kapur");
    const double total = static_cast<double>(h.total());

    const std::size_t n = hi - lo + 1;
    std::vector<double> p(n), plogp(n);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = static_cast<double>(h.counts[lo + i]) / total;
        plogp[i] = p[i] > 0.0 ? p[i] * std::log(p[i]) : 0.0;
    }

    // H(class) = ln P - (1/P) * sum p ln p over the class.
    std::vector<double> mass_low(n), ent_low(n), mass_high(n + 1, 0.0), ent_high(n + 1, 0.0);
    double mass = 0.0, ent = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mass += p[i];
        ent += plogp[i];
        mass_low[i] = mass;
        ent_low[i] = ent;
    }
    mass = 0.0;
    ent = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        mass += p[i];
        ent += plogp[i];
        mass_high[i] = mass;
        ent_high[i] = ent;
    }

    std::vector<double> score(h.counts.size(), 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double P0 = mass_low[i];
        const double P1 = mass_high[i + 1];
        const double h0 = std::log(P0) - ent_low[i] / P0;
        const double h1 = std::log(P1) - ent_high[i + 1] / P1;
        score[lo + i] = h0 + h1;
    }
    const std::size_t t = first_near_max(score, lo, hi);
    return {static_cast<std::uint16_t>(t), score[t]};
}

BinaryMask apply_threshold(const GrayImage& img, std::uint16_t t, const BinaryMask* roi)
{
    if (roi)
        require_same_size(img, *roi, "apply_threshold");
    if (t > img.max_value())
        throw std::invalid_argument("apply_threshold: threshold exceeds bit depth");
    BinaryMask out(img.width(), img.height());
    auto& bits = out.bits();
    const auto& px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i)
        bits[i] = px[i] > t && (!roi || (*roi)[i]) ? 1 : 0;
    return out;
}

} // namespace pectoral
