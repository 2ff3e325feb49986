#include "pectoral/morphology.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace pectoral {

StructuringElement disk_se(int radius)
{
    if (radius < 0)
        throw std::invalid_argument("disk_se: negative radius");
    const int side = 2 * radius + 1;
    BinaryMask fp(side, side);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius)
                fp.set(dx + radius, dy + radius);
    return StructuringElement(radius, std::move(fp));
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b)
{
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0)))
        --q;
    return q;
}

/*
 * Marks pixels whose squared Euclidean distance to the nearest feature is at
 * most r^2. Exact separable distance transform (Meijster et al.): a vertical
 * 1-D pass followed by a lower envelope of parabolas along each row.
 *
 * With outside_is_feature every pixel beyond the raster counts as a feature,
 * which is what erosion with a false exterior needs.
 */
BinaryMask within_radius(const BinaryMask& features, int r, bool outside_is_feature)
{
    const int W = features.width();
    const int H = features.height();
    BinaryMask out(W, H);
    if (W == 0 || H == 0)
        return out;

    const std::int32_t inf = W + H + 2;
    const std::int64_t r2 = static_cast<std::int64_t>(r) * r;
    const auto& fb = features.bits();

    // Vertical distance to the nearest feature in the same column.
    std::vector<std::int32_t> g(static_cast<std::size_t>(W) * H);
    {
        std::vector<std::int32_t> prev(W, outside_is_feature ? 0 : inf);
        for (int y = 0; y < H; ++y) {
            std::int32_t* row = g.data() + static_cast<std::size_t>(y) * W;
            const std::uint8_t* fr = fb.data() + static_cast<std::size_t>(y) * W;
            for (int x = 0; x < W; ++x) {
                row[x] = fr[x] ? 0 : std::min(prev[x] + 1, inf);
                prev[x] = row[x];
            }
        }
        std::fill(prev.begin(), prev.end(), outside_is_feature ? 0 : inf);
        for (int y = H - 1; y >= 0; --y) {
            std::int32_t* row = g.data() + static_cast<std::size_t>(y) * W;
            for (int x = 0; x < W; ++x) {
                row[x] = std::min(row[x], std::min(prev[x] + 1, inf));
                prev[x] = row[x];
            }
        }
    }

    // Row pass. With an outside feature frame the row is extended by one
    // virtual column on each side whose vertical distance is 0.
    const int pad = outside_is_feature ? 1 : 0;
    const int m = W + 2 * pad;
    std::vector<std::int64_t> gg(m);
    std::vector<int> s(m), t(m);
    auto f = [&](int x, int i) {
        const std::int64_t d = x - i;
        return d * d + gg[i] * gg[i];
    };
    auto sep = [&](int i, int u) {
        return floor_div(static_cast<std::int64_t>(u) * u - static_cast<std::int64_t>(i) * i +
                             gg[u] * gg[u] - gg[i] * gg[i],
                         2 * static_cast<std::int64_t>(u - i));
    };

    auto& ob = out.bits();
    for (int y = 0; y < H; ++y) {
        const std::int32_t* row = g.data() + static_cast<std::size_t>(y) * W;
        if (pad) {
            gg[0] = 0;
            gg[m - 1] = 0;
        }
        for (int x = 0; x < W; ++x)
            gg[x + pad] = row[x];

        int q = 0;
        s[0] = 0;
        t[0] = 0;
        for (int u = 1; u < m; ++u) {
            while (q >= 0 && f(t[q], s[q]) > f(t[q], u))
                --q;
            if (q < 0) {
                q = 0;
                s[0] = u;
            } else {
                const std::int64_t w = 1 + sep(s[q], u);
                if (w < m) {
                    ++q;
                    s[q] = u;
                    t[q] = static_cast<int>(w);
                }
            }
        }
        std::uint8_t* orow = ob.data() + static_cast<std::size_t>(y) * W;
        for (int u = m - 1; u >= 0; --u) {
            if (u >= pad && u < W + pad)
                orow[u - pad] = f(u, s[q]) <= r2 ? 1 : 0;
            if (u == t[q])
                --q;
        }
    }
    return out;
}

} // namespace

BinaryMask binary_dilate(const BinaryMask& m, const StructuringElement& se)
{
    if (se.radius() == 0 || !m.any())
        return m;
    return within_radius(m, se.radius(), false);
}

BinaryMask binary_erode(const BinaryMask& m, const StructuringElement& se)
{
    if (se.radius() == 0)
        return m;
    return complement(within_radius(complement(m), se.radius(), true));
}

BinaryMask binary_close(const BinaryMask& m, const StructuringElement& se)
{
    const int r = se.radius();
    if (r == 0)
        return m;
    const int W = m.width();
    const int H = m.height();
    BinaryMask padded(W + 2 * r, H + 2 * r);
    for (int y = 0; y < H; ++y)
        std::copy_n(m.bits().begin() + static_cast<std::ptrdiff_t>(y) * W, W,
                    padded.bits().begin() + static_cast<std::ptrdiff_t>(y + r) * padded.width() + r);
    const BinaryMask closed = binary_erode(binary_dilate(padded, se), se);
    BinaryMask out(W, H);
    for (int y = 0; y < H; ++y)
        std::copy_n(closed.bits().begin() + static_cast<std::ptrdiff_t>(y + r) * closed.width() + r, W,
                    out.bits().begin() + static_cast<std::ptrdiff_t>(y) * W);
    return out;
}

BinaryMask binary_open(const BinaryMask& m, const StructuringElement& se)
{
    return binary_dilate(binary_erode(m, se), se);
}

// ---------------------------------------------------------------------------
// Reconstruction

namespace {

struct Offset {
    int dx;
    int dy;
};

// Neighbours preceding a pixel in raster order.
constexpr Offset kForward8[] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}};
constexpr Offset kForward4[] = {{0, -1}, {-1, 0}};
constexpr Offset kAll8[] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}};
constexpr Offset kAll4[] = {{0, -1}, {-1, 0}, {1, 0}, {0, 1}};

} // namespace

GrayImage geodesic_reconstruct_dilation(const GrayImage& marker, const GrayImage& mask, Connectivity conn)
{
    require_same_size(marker, mask, "geodesic_reconstruct_dilation");
    const int W = mask.width();
    const int H = mask.height();
    const auto& I = mask.pixels();

    std::vector<std::uint16_t> J(marker.pixels());
    for (std::size_t i = 0; i < J.size(); ++i)
        J[i] = std::min(J[i], I[i]);

    const bool eight = conn == Connectivity::Eight;
    const Offset* fwd = eight ? kForward8 : kForward4;
    const int nfwd = eight ? 4 : 2;
    const Offset* all = eight ? kAll8 : kAll4;
    const int nall = eight ? 8 : 4;

    auto idx = [W](int x, int y) { return static_cast<std::size_t>(y) * W + x; };

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            std::uint16_t v = J[idx(x, y)];
            for (int k = 0; k < nfwd; ++k) {
                const int nx = x + fwd[k].dx, ny = y + fwd[k].dy;
                if (nx >= 0 && nx < W && ny >= 0)
                    v = std::max(v, J[idx(nx, ny)]);
            }
            J[idx(x, y)] = std::min(v, I[idx(x, y)]);
        }
    }

    // Pixels left able to raise a neighbour after the anti-raster sweep seed
    // the propagation. Buckets are drained from the top level down, so a
    // pixel popped at its level is never raised again.
    std::vector<std::vector<std::uint32_t>> buckets(std::size_t{1} << mask.bit_depth());
    for (int y = H - 1; y >= 0; --y) {
        for (int x = W - 1; x >= 0; --x) {
            const std::size_t p = idx(x, y);
            std::uint16_t v = J[p];
            for (int k = 0; k < nfwd; ++k) {
                const int nx = x - fwd[k].dx, ny = y - fwd[k].dy;
                if (nx >= 0 && nx < W && ny < H)
                    v = std::max(v, J[idx(nx, ny)]);
            }
            v = std::min(v, I[p]);
            J[p] = v;
            for (int k = 0; k < nfwd; ++k) {
                const int nx = x - fwd[k].dx, ny = y - fwd[k].dy;
                if (nx >= 0 && nx < W && ny < H) {
                    const std::size_t q = idx(nx, ny);
                    if (J[q] < v && J[q] < I[q]) {
                        buckets[v].push_back(static_cast<std::uint32_t>(p));
                        break;
                    }
                }
            }
        }
    }

    for (std::size_t level = buckets.size() - 1; level > 0; --level) {
        auto& bucket = buckets[level];
        for (std::size_t k = 0; k < bucket.size(); ++k) {
            const std::size_t p = bucket[k];
            if (J[p] != level)
                continue;
            const int x = static_cast<int>(p % W);
            const int y = static_cast<int>(p / W);
            for (int n = 0; n < nall; ++n) {
                const int nx = x + all[n].dx, ny = y + all[n].dy;
                if (nx < 0 || nx >= W || ny < 0 || ny >= H)
                    continue;
                const std::size_t q = idx(nx, ny);
                const std::uint16_t v = std::min<std::uint16_t>(static_cast<std::uint16_t>(level), I[q]);
                if (v > J[q]) {
                    J[q] = v;
                    buckets[v].push_back(static_cast<std::uint32_t>(q));
                }
            }
        }
        std::vector<std::uint32_t>().swap(bucket);
    }

    return GrayImage(W, H, mask.bit_depth(), std::move(J));
}

// ---------------------------------------------------------------------------
// Labeling

namespace {

class DisjointSet {
public:
    std::int32_t make()
    {
        parent_.push_back(static_cast<std::int32_t>(parent_.size()));
        return parent_.back();
    }
    std::int32_t find(std::int32_t a)
    {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(std::int32_t a, std::int32_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b)
            return;
        if (a < b)
            parent_[b] = a;
        else
            parent_[a] = b;
    }

private:
    std::vector<std::int32_t> parent_;
};

} // namespace

BinaryMask ComponentLabels::mask_of(int id) const
{
    BinaryMask m(width, height);
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == id)
            m.set(i);
    return m;
}

ComponentLabels connected_components(const BinaryMask& m, Connectivity conn)
{
    const int W = m.width();
    const int H = m.height();
    ComponentLabels out;
    out.width = W;
    out.height = H;
    out.labels.assign(m.size(), 0);
    if (m.size() == 0)
        return out;

    const bool eight = conn == Connectivity::Eight;
    const Offset* fwd = eight ? kForward8 : kForward4;
    const int nfwd = eight ? 4 : 2;
    const auto& bits = m.bits();

    // Provisional labels are 1-based; set index 0 is unused.
    DisjointSet sets;
    sets.make();
    auto& L = out.labels;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * W + x;
            if (!bits[p])
                continue;
            std::int32_t label = 0;
            for (int k = 0; k < nfwd; ++k) {
                const int nx = x + fwd[k].dx, ny = y + fwd[k].dy;
                if (nx < 0 || nx >= W || ny < 0)
                    continue;
                const std::int32_t nl = L[static_cast<std::size_t>(ny) * W + nx];
                if (nl == 0)
                    continue;
                if (label == 0)
                    label = nl;
                else
                    sets.unite(label, nl);
            }
            L[p] = label ? label : sets.make();
        }
    }

    // Resolve and renumber in order of first appearance.
    std::vector<std::int32_t> final_id;
    for (std::size_t p = 0; p < L.size(); ++p) {
        if (L[p] == 0)
            continue;
        const std::int32_t root = sets.find(L[p]);
        if (static_cast<std::size_t>(root) >= final_id.size())
            final_id.resize(root + 1, 0);
        if (final_id[root] == 0) {
            final_id[root] = static_cast<std::int32_t>(out.components.size()) + 1;
            Component c;
            c.id = final_id[root];
            const int x = static_cast<int>(p % W), y = static_cast<int>(p / W);
            c.bbox = {x, y, x, y};
            out.components.push_back(c);
        }
        const std::int32_t id = final_id[root];
        L[p] = id;
        auto& c = out.components[id - 1];
        ++c.pixel_count;
        const int x = static_cast<int>(p % W), y = static_cast<int>(p / W);
        c.bbox.min_x = std::min(c.bbox.min_x, x);
        c.bbox.max_x = std::max(c.bbox.max_x, x);
        c.bbox.min_y = std::min(c.bbox.min_y, y);
        c.bbox.max_y = std::max(c.bbox.max_y, y);
    }
    return out;
}

BinaryMask largest_component(const BinaryMask& m, Connectivity conn)
{
    const auto cc = connected_components(m, conn);
    if (cc.components.empty())
        return BinaryMask(m.width(), m.height());
    const auto best = std::max_element(cc.components.begin(), cc.components.end(),
                                       [](const Component& a, const Component& b) {
                                           return a.pixel_count < b.pixel_count;
                                       });
    return cc.mask_of(best->id);
}

BinaryMask fill_holes(const BinaryMask& m)
{
    const auto bg = connected_components(complement(m), Connectivity::Four);
    std::vector<std::uint8_t> touches(bg.components.size() + 1, 0);
    for (const auto& c : bg.components) {
        if (c.bbox.min_x == 0 || c.bbox.min_y == 0 || c.bbox.max_x == m.width() - 1 ||
            c.bbox.max_y == m.height() - 1)
            touches[c.id] = 1;
    }
    BinaryMask out = m;
    for (std::size_t i = 0; i < bg.labels.size(); ++i)
        if (bg.labels[i] != 0 && !touches[bg.labels[i]])
            out.set(i);
    return out;
}

} // namespace pectoral
