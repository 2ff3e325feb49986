#include "pectoral/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace pectoral {

namespace {

double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller over mt19937_64 words. std::normal_distribution is left
// implementation-defined, so it would not reproduce across standard libraries.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

    double next()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = static_cast<double>((rng_() >> 11) + 1) * 0x1.0p-53; // (0, 1]
        const double u2 = uniform01(rng_);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

private:
    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

bool has_muscle(const PhantomSpec& s) { return !std::holds_alternative<AbsentEdge>(s.edge); }

} // namespace

const char* to_string(ErrorClass c)
{
    switch (c) {
    case ErrorClass::Correct: return "correct";
    case ErrorClass::DenseAsMuscle: return "dense_as_muscle";
    case ErrorClass::MuscleAsBreast: return "muscle_as_breast";
    case ErrorClass::Both: return "both";
    case ErrorClass::NoPectoralFound: return "no_pectoral_found";
    }
    return "unknown";
}

double PhantomSpec::edge_distance(double y) const
{
    if (const auto* s = std::get_if<StraightEdge>(&edge)) {
        const double slope = std::tan(s->angle_deg * std::numbers::pi / 180.0);
        return s->top_fraction * width - y / slope;
    }
    if (const auto* c = std::get_if<CurvedEdge>(&edge)) {
        const double u = y / height;
        return width * (c->c0 + c->c1 * u + c->c2 * u * u);
    }
    return 0.0;
}

void PhantomSpec::validate() const
{
    if (width < 16 || height < 16)
        throw InvalidPhantomSpec("phantom must be at least 16x16");
    if (bit_depth != 8 && bit_depth != 16)
        throw InvalidPhantomSpec("bit_depth must be 8 or 16");
    const unsigned top = (1u << bit_depth) - 1u;
    if (pectoral_level > top || breast_level > top || background_level > top)
        throw InvalidPhantomSpec("intensity level exceeds bit depth");
    if (breast_level <= background_level)
        throw InvalidPhantomSpec("breast_level must exceed background_level");
    if (has_muscle(*this) && pectoral_level <= breast_level)
        throw InvalidPhantomSpec("pectoral_level must exceed breast_level");
    if (!(noise_sigma >= 0.0))
        throw InvalidPhantomSpec("noise_sigma must be non-negative");
    if (!(breast_radius_x > 0.0) || !(breast_radius_y > 0.0) || !(breast_center_y >= 0.0 && breast_center_y <= 1.0))
        throw InvalidPhantomSpec("breast geometry out of range");
    for (const auto& b : blobs) {
        if (!(b.radius > 0.0))
            throw InvalidPhantomSpec("blob radius must be positive");
        if (b.intensity < breast_level || b.intensity > top)
            throw InvalidPhantomSpec("blob intensity must lie in [breast_level, max]");
    }

    if (const auto* s = std::get_if<StraightEdge>(&edge)) {
        if (!(s->angle_deg > 0.0 && s->angle_deg < 90.0))
            throw InvalidPhantomSpec("straight edge angle must lie in (0, 90) degrees");
    }
    if (!has_muscle(*this))
        return;

    if (!(edge_distance(0.5) > 1.0))
        throw InvalidPhantomSpec("pectoral edge does not enter the image from the top row");
    for (int y = 0; y < height; ++y) {
        const double d = edge_distance(y + 0.5);
        if (d <= 0.0)
            return;
        if (d >= width)
            throw InvalidPhantomSpec("pectoral edge leaves the image through the far side");
    }
    throw InvalidPhantomSpec("pectoral edge leaves the image through the bottom row");
}

Phantom generate_phantom(const PhantomSpec& spec)
{
    spec.validate();
    const int W = spec.width;
    const int H = spec.height;
    const bool muscle = has_muscle(spec);
    const double rx = spec.breast_radius_x * W;
    const double ry = spec.breast_radius_y * H;
    const double cy = spec.breast_center_y * H;
    const double top = static_cast<double>((1u << spec.bit_depth) - 1u);

    Phantom out{GrayImage(W, H, spec.bit_depth), BinaryMask(W, H), BinaryMask(W, H)};
    GaussianSource noise(spec.seed);

    for (int y = 0; y < H; ++y) {
        const double py = y + 0.5;
        const double reach = muscle ? spec.edge_distance(py) : 0.0;
        for (int x = 0; x < W; ++x) {
            const int xw = spec.orientation == Orientation::Left ? x : W - 1 - x;
            const double px = xw + 0.5;
            const bool in_pectoral = px < reach;
            const double ex = px / rx, ey = (py - cy) / ry;
            const bool in_ellipse = ex * ex + ey * ey <= 1.0;

            double level = spec.background_level;
            if (in_pectoral) {
                level = spec.pectoral_level;
            } else if (in_ellipse) {
                level = spec.breast_level;
                for (const auto& b : spec.blobs) {
                    const double bx = px - b.cx, by = py - b.cy;
                    if (bx * bx + by * by <= b.radius * b.radius)
                        level = std::max(level, static_cast<double>(b.intensity));
                }
            }
            if (spec.noise_sigma > 0.0)
                level += spec.noise_sigma * noise.next();

            out.image.at(x, y) = static_cast<std::uint16_t>(std::clamp(std::round(level), 0.0, top));
            out.truth_pectoral.set(x, y, in_pectoral);
            out.truth_breast.set(x, y, in_pectoral || in_ellipse);
        }
    }
    return out;
}

double analytic_wedge_area(const PhantomSpec& spec)
{
    const auto* s = std::get_if<StraightEdge>(&spec.edge);
    if (!s)
        throw std::invalid_argument("analytic_wedge_area needs a straight edge");
    const double leg = s->top_fraction * spec.width;
    return 0.5 * leg * leg * std::tan(s->angle_deg * std::numbers::pi / 180.0);
}

// ---------------------------------------------------------------------------
// Key-value form

KeyValueFile PhantomSpec::to_key_values() const
{
    KeyValueFile kv;
    kv.add("width", std::to_string(width));
    kv.add("height", std::to_string(height));
    kv.add("bit_depth", std::to_string(bit_depth));
    kv.add("orientation", to_string(orientation));
    if (const auto* s = std::get_if<StraightEdge>(&edge)) {
        kv.add("edge", "straight");
        kv.add("edge_angle", format_double(s->angle_deg));
        kv.add("edge_top", format_double(s->top_fraction));
    } else if (const auto* c = std::get_if<CurvedEdge>(&edge)) {
        kv.add("edge", "curved");
        kv.add("edge_c0", format_double(c->c0));
        kv.add("edge_c1", format_double(c->c1));
        kv.add("edge_c2", format_double(c->c2));
    } else {
        kv.add("edge", "none");
    }
    kv.add("pectoral_level", std::to_string(pectoral_level));
    kv.add("breast_level", std::to_string(breast_level));
    kv.add("background_level", std::to_string(background_level));
    kv.add("noise_sigma", format_double(noise_sigma));
    kv.add("seed", std::to_string(seed));
    kv.add("breast_center_y", format_double(breast_center_y));
    kv.add("breast_radius_x", format_double(breast_radius_x));
    kv.add("breast_radius_y", format_double(breast_radius_y));
    for (const auto& b : blobs)
        kv.add("blob", format_double(b.cx) + " " + format_double(b.cy) + " " + format_double(b.radius) + " " +
                           std::to_string(b.intensity));
    return kv;
}

namespace {

std::uint16_t parse_level(const std::string& key, const std::string& value)
{
    const auto v = parse_integer(key, value);
    if (v < 0 || v > 65535)
        throw KeyValueError(key + ": intensity out of range");
    return static_cast<std::uint16_t>(v);
}

} // namespace

PhantomSpec PhantomSpec::from_key_values(const KeyValueFile& kv)
{
    static const char* known[] = {"width", "height", "bit_depth", "orientation", "edge", "edge_angle", "edge_top",
                                  "edge_c0", "edge_c1", "edge_c2", "pectoral_level", "breast_level",
                                  "background_level", "noise_sigma", "seed", "breast_center_y",
                                  "breast_radius_x", "breast_radius_y", "blob"};
    for (const auto& [k, v] : kv.entries)
        if (std::find_if(std::begin(known), std::end(known), [&](const char* n) { return k == n; }) ==
            std::end(known))
            throw KeyValueError("unknown phantom key '" + k + "'");

    PhantomSpec s;
    if (auto v = kv.find("width")) s.width = static_cast<int>(parse_integer("width", *v));
    if (auto v = kv.find("height")) s.height = static_cast<int>(parse_integer("height", *v));
    if (auto v = kv.find("bit_depth")) s.bit_depth = static_cast<int>(parse_integer("bit_depth", *v));
    if (auto v = kv.find("orientation")) {
        if (*v == "left") s.orientation = Orientation::Left;
        else if (*v == "right") s.orientation = Orientation::Right;
        else throw KeyValueError("orientation: expected left or right");
    }
    const std::string edge = kv.find("edge") ? *kv.find("edge") : "straight";
    if (edge == "straight") {
        StraightEdge e;
        if (auto v = kv.find("edge_angle")) e.angle_deg = parse_double("edge_angle", *v);
        if (auto v = kv.find("edge_top")) e.top_fraction = parse_double("edge_top", *v);
        s.edge = e;
    } else if (edge == "curved") {
        CurvedEdge e;
        if (auto v = kv.find("edge_c0")) e.c0 = parse_double("edge_c0", *v);
        if (auto v = kv.find("edge_c1")) e.c1 = parse_double("edge_c1", *v);
        if (auto v = kv.find("edge_c2")) e.c2 = parse_double("edge_c2", *v);
        s.edge = e;
    } else if (edge == "none") {
        s.edge = AbsentEdge{};
    } else {
        throw KeyValueError("edge: expected straight, curved or none");
    }
    if (auto v = kv.find("pectoral_level")) s.pectoral_level = parse_level("pectoral_level", *v);
    if (auto v = kv.find("breast_level")) s.breast_level = parse_level("breast_level", *v);
    if (auto v = kv.find("background_level")) s.background_level = parse_level("background_level", *v);
    if (auto v = kv.find("noise_sigma")) s.noise_sigma = parse_double("noise_sigma", *v);
    if (auto v = kv.find("seed")) s.seed = static_cast<std::uint64_t>(std::stoull(*v));
    if (auto v = kv.find("breast_center_y")) s.breast_center_y = parse_double("breast_center_y", *v);
    if (auto v = kv.find("breast_radius_x")) s.breast_radius_x = parse_double("breast_radius_x", *v);
    if (auto v = kv.find("breast_radius_y")) s.breast_radius_y = parse_double("breast_radius_y", *v);
    for (const auto& text : kv.all("blob")) {
        std::istringstream in(text);
        std::string cx, cy, r, level, extra;
        if (!(in >> cx >> cy >> r >> level) || (in >> extra))
            throw KeyValueError("blob: expected 'cx cy radius intensity'");
        s.blobs.push_back({parse_double("blob", cx), parse_double("blob", cy), parse_double("blob", r),
                           parse_level("blob", level)});
    }
    return s;
}

// ---------------------------------------------------------------------------
// Evaluation

double dice(const BinaryMask& a, const BinaryMask& b)
{
    require_same_size(a, b, "dice");
    std::size_t na = 0, nb = 0, both = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a[i];
        nb += b[i];
        both += a[i] && b[i];
    }
    if (na + nb == 0)
        return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

std::vector<Point> interface_pixels(const BinaryMask& m)
{
    std::vector<Point> out;
    const int W = m.width(), H = m.height();
    for (int y = 1; y + 1 < H; ++y)
        for (int x = 1; x + 1 < W; ++x) {
            if (!m.at(x, y))
                continue;
            bool edge = false;
            for (int dy = -1; dy <= 1 && !edge; ++dy)
                for (int dx = -1; dx <= 1 && !edge; ++dx)
                    edge = !m.at(x + dx, y + dy);
            if (edge)
                out.push_back({x, y});
        }
    return out;
}

namespace {

double directed_mean_distance(const std::vector<Point>& from, const std::vector<Point>& to)
{
    double sum = 0.0;
    for (const auto& p : from) {
        long long best = std::numeric_limits<long long>::max();
        for (const auto& q : to) {
            const long long dx = p.x - q.x, dy = p.y - q.y;
            best = std::min(best, dx * dx + dy * dy);
        }
        sum += std::sqrt(static_cast<double>(best));
    }
    return sum / static_cast<double>(from.size());
}

} // namespace

double mean_boundary_distance(const std::vector<Point>& a, const std::vector<Point>& b)
{
    if (a.empty() && b.empty())
        return 0.0;
    if (a.empty() || b.empty())
        return std::numeric_limits<double>::infinity();
    return 0.5 * (directed_mean_distance(a, b) + directed_mean_distance(b, a));
}

EvalReport evaluate(const BinaryMask& pred, const BinaryMask& truth)
{
    require_same_size(pred, truth, "evaluate");
    EvalReport r;
    std::size_t np = 0, nt = 0, both = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        np += pred[i];
        nt += truth[i];
        both += pred[i] && truth[i];
    }
    r.dice = np + nt == 0 ? 1.0 : 2.0 * static_cast<double>(both) / static_cast<double>(np + nt);
    r.boundary_mean_distance = mean_boundary_distance(interface_pixels(pred), interface_pixels(truth));

    if (nt == 0) {
        r.over_fraction = np == 0 ? 0.0 : std::numeric_limits<double>::infinity();
        r.error_class = np == 0 ? ErrorClass::Correct : ErrorClass::DenseAsMuscle;
        return r;
    }
    r.over_fraction = static_cast<double>(np - both) / static_cast<double>(nt);
    r.under_fraction = static_cast<double>(nt - both) / static_cast<double>(nt);
    if (np == 0) {
        r.error_class = ErrorClass::NoPectoralFound;
        return r;
    }
    const bool over = r.over_fraction > kErrorFractionLimit;
    const bool under = r.under_fraction > kErrorFractionLimit;
    if (over && under)
        r.error_class = ErrorClass::Both;
    else if (over)
        r.error_class = ErrorClass::DenseAsMuscle;
    else if (under)
        r.error_class = ErrorClass::MuscleAsBreast;
    else
        r.error_class = ErrorClass::Correct;
    return r;
}

LineFit fit_line(const std::vector<Point>& pts)
{
    if (pts.size() < 2)
        throw std::invalid_argument("fit_line needs at least two points");
    LineFit f;
    for (const auto& p : pts) {
        f.cx += p.x;
        f.cy += p.y;
    }
    f.cx /= static_cast<double>(pts.size());
    f.cy /= static_cast<double>(pts.size());
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& p : pts) {
        const double dx = p.x - f.cx, dy = p.y - f.cy;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    f.dx = std::cos(theta);
    f.dy = std::sin(theta);
    double ss = 0.0;
    for (const auto& p : pts) {
        const double d = -(p.x - f.cx) * f.dy + (p.y - f.cy) * f.dx;
        ss += d * d;
    }
    f.rms_residual = std::sqrt(ss / static_cast<double>(pts.size()));
    return f;
}

std::vector<Point> rasterize_line(const LineFit& line, const std::vector<Point>& pts, int width, int height)
{
    double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
    for (const auto& p : pts) {
        const double t = (p.x - line.cx) * line.dx + (p.y - line.cy) * line.dy;
        tmin = std::min(tmin, t);
        tmax = std::max(tmax, t);
    }
    std::vector<Point> out;
    for (double t = tmin; t <= tmax + 1e-9; t += 0.25) {
        const Point p{static_cast<int>(std::lround(line.cx + t * line.dx)),
                      static_cast<int>(std::lround(line.cy + t * line.dy))};
        if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height)
            continue;
        if (std::find(out.begin(), out.end(), p) == out.end())
            out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Suites

namespace {

bool blob_fits(const PhantomSpec& s, const DenseBlob& b, double margin)
{
    const double rx = s.breast_radius_x * s.width;
    const double ry = s.breast_radius_y * s.height;
    const double cy = s.breast_center_y * s.height;
    // Inside the breast ellipse and the image, checked along the rim.
    for (int k = 0; k < 64; ++k) {
        const double a = 2.0 * std::numbers::pi * k / 64.0;
        const double x = b.cx + b.radius * std::cos(a);
        const double y = b.cy + b.radius * std::sin(a);
        const double ex = x / rx, ey = (y - cy) / ry;
        if (ex * ex + ey * ey > 0.92 || x < 1.0 || y < 1.0 || x > s.width - 1.0 || y > s.height - 1.0)
            return false;
    }
    // Clear of the muscle by at least margin.
    const double reach = b.radius + margin;
    for (double y = b.cy - reach; y <= b.cy + reach; y += 0.5) {
        const double half = std::sqrt(std::max(0.0, reach * reach - (y - b.cy) * (y - b.cy)));
        if (b.cx - half < s.edge_distance(std::max(y, 0.0)))
            return false;
    }
    return true;
}

} // namespace

PhantomSpec sample_phantom_spec(PhantomKind kind, std::mt19937_64& rng, int width, int height)
{
    PhantomSpec s;
    s.width = width;
    s.height = height;
    s.bit_depth = 16;
    s.orientation = (rng() & 1u) ? Orientation::Right : Orientation::Left;
    s.background_level = static_cast<std::uint16_t>(uniform(rng, 500, 2500));
    s.breast_level = static_cast<std::uint16_t>(uniform(rng, 12000, 22000));
    s.pectoral_level = static_cast<std::uint16_t>(std::min(60000.0, s.breast_level + uniform(rng, 12000, 22000)));
    s.breast_center_y = 0.5;
    s.breast_radius_x = uniform(rng, 0.7, 0.85);
    s.breast_radius_y = uniform(rng, 0.6, 0.7);

    switch (kind) {
    case PhantomKind::Straight:
        for (int attempt = 0;; ++attempt) {
            StraightEdge e{uniform(rng, 50.0, 75.0), uniform(rng, 0.22, 0.38)};
            s.edge = e;
            const double depth = e.top_fraction * width * std::tan(e.angle_deg * std::numbers::pi / 180.0);
            if (depth < 0.85 * height || attempt > 1000)
                break;
        }
        break;
    case PhantomKind::Curved: {
        // d(s) = a(1 - s) + 4 b s (1 - s), s = u / e: reaches the wall at depth e.
        const double a = uniform(rng, 0.22, 0.38);
        const double e = uniform(rng, 0.45, 0.8);
        const double bulge = uniform(rng, 0.06, 0.14);
        s.edge = CurvedEdge{a, (4.0 * bulge - a) / e, -4.0 * bulge / (e * e)};
        break;
    }
    case PhantomKind::Absent:
        s.edge = AbsentEdge{};
        break;
    }

    const double dynamic_range = static_cast<double>(s.pectoral_level) - s.background_level;
    s.noise_sigma = uniform(rng, 0.0, 0.05 * dynamic_range);

    const int blob_count = static_cast<int>(rng() % 4);
    const double margin = 0.04 * width;
    const double strip = 0.1 * height;
    for (int i = 0; i < blob_count; ++i) {
        for (int attempt = 0; attempt < 200; ++attempt) {
            DenseBlob b;
            b.radius = uniform(rng, 0.03, 0.07) * width;
            b.cx = uniform(rng, 0.0, s.breast_radius_x * width);
            b.cy = uniform(rng, strip + b.radius, height - b.radius);
            const double span = static_cast<double>(s.pectoral_level) - s.breast_level;
            b.intensity = static_cast<std::uint16_t>(std::min(65000.0, s.breast_level + uniform(rng, 0.15, 1.2) * span));
            if (blob_fits(s, b, margin)) {
                s.blobs.push_back(b);
                break;
            }
        }
    }
    s.seed = rng();
    return s;
}

std::vector<PhantomCase> make_phantom_suite(std::uint64_t seed, int straight, int curved, int width, int height)
{
    std::mt19937_64 rng(seed);
    std::vector<PhantomCase> cases;
    char id[32];
    for (int i = 0; i < straight; ++i) {
        std::snprintf(id, sizeof(id), "straight_%03d", i);
        cases.push_back({id, sample_phantom_spec(PhantomKind::Straight, rng, width, height)});
    }
    for (int i = 0; i < curved; ++i) {
        std::snprintf(id, sizeof(id), "curved_%03d", i);
        cases.push_back({id, sample_phantom_spec(PhantomKind::Curved, rng, width, height)});
    }
    return cases;
}

std::vector<PhantomCase> default_validation_suite()
{
    return make_phantom_suite(kDefaultSuiteSeed, 100, 100);
}

} // namespace pectoral
