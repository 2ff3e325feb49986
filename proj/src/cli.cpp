#include "pectoral/cli.hpp"

#include "pectoral/image_io.hpp"
#include "pectoral/phantom.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

namespace pectoral {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

const char* window_mode_name(WindowMode m)
{
    return m == WindowMode::RangeFraction ? "range" : "percentile";
}

const char* muscle_threshold_name(MuscleThreshold m)
{
    return m == MuscleThreshold::Otsu ? "otsu" : "kapur";
}

WindowMode parse_window_mode(const std::string& key, const std::string& v)
{
    if (v == "range")
        return WindowMode::RangeFraction;
    if (v == "percentile")
        return WindowMode::HistogramPercentile;
    throw KeyValueError(key + ": expected range or percentile, got '" + v + "'");
}

MuscleThreshold parse_muscle_threshold(const std::string& key, const std::string& v)
{
    if (v == "otsu")
        return MuscleThreshold::Otsu;
    if (v == "kapur")
        return MuscleThreshold::Kapur;
    throw KeyValueError(key + ": expected otsu or kapur, got '" + v + "'");
}

Connectivity parse_connectivity(const std::string& key, long long v)
{
    if (v == 4)
        return Connectivity::Four;
    if (v == 8)
        return Connectivity::Eight;
    throw KeyValueError(key + ": expected 4 or 8");
}

Json optional_value(const std::optional<std::uint16_t>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

Json finite_or_null(double v)
{
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

Json config_json(const PipelineConfig& cfg)
{
    Json j;
    j["marker_rows_fraction"] = cfg.marker_rows_fraction;
    j["window_upper_percentile"] = cfg.window_upper_percentile;
    j["window_mode"] = window_mode_name(cfg.window_mode);
    j["close_radius_fraction"] = cfg.close_radius_fraction;
    j["open_radius_fraction"] = cfg.open_radius_fraction;
    j["connectivity"] = cfg.connectivity == Connectivity::Four ? 4 : 8;
    j["invert_input"] = cfg.invert_input;
    j["breast_threshold"] = "otsu";
    j["muscle_threshold"] = muscle_threshold_name(cfg.muscle_threshold);
    j["min_pectoral_contrast"] = cfg.min_pectoral_contrast;
    return j;
}

Json thresholds_json(const StageThresholds& t)
{
    Json j;
    j["breast"] = t.breast;
    j["marker"] = optional_value(t.marker);
    j["muscle"] = optional_value(t.muscle);
    return j;
}

Json window_json(const std::optional<WindowBounds>& w)
{
    if (!w)
        return nullptr;
    Json j;
    j["lo"] = w->lo;
    j["hi"] = w->hi;
    return j;
}

Json timings_json(const std::vector<StageTiming>& timings)
{
    Json j = Json::object();
    for (const auto& t : timings)
        j[t.stage] = t.milliseconds;
    return j;
}

std::string describe(const std::exception& e, const char* fallback_stage)
{
    if (dynamic_cast<const PipelineError*>(&e))
        return e.what();
    return std::string(fallback_stage) + ": " + e.what();
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f)
        throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// validate: case discovery

struct Case {
    std::string id;
    std::string path; // empty for generated phantoms
    std::variant<fs::path, PhantomSpec> source;
    std::optional<fs::path> truth;
};

bool is_image_path(const fs::path& p)
{
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".pgm" || ext == ".png";
}

bool is_truth_name(const fs::path& p)
{
    const std::string stem = p.stem().string();
    return stem.size() >= 6 && stem.compare(stem.size() - 6, 6, "_truth") == 0;
}

std::vector<Case> suite_cases(const std::vector<PhantomCase>& phantoms)
{
    std::vector<Case> cases;
    for (const auto& p : phantoms)
        cases.push_back({p.id, "", p.spec, std::nullopt});
    return cases;
}

std::vector<Case> manifest_cases(const fs::path& manifest)
{
    std::ifstream in(manifest);
    if (!in)
        throw std::runtime_error("cannot open " + manifest.string());
    const fs::path base = manifest.parent_path();
    std::vector<Case> cases;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream fields(line);
        std::string image, truth, extra;
        if (!(fields >> image))
            continue;
        fields >> truth;
        if (fields >> extra)
            throw std::runtime_error(manifest.string() + ":" + std::to_string(line_no) +
                                     ": expected 'image [truth]'");
        Case c;
        c.id = image;
        c.path = (base / image).generic_string();
        c.source = base / image;
        if (!truth.empty())
            c.truth = base / truth;
        cases.push_back(std::move(c));
    }
    return cases;
}

std::vector<Case> directory_cases(const fs::path& dir)
{
    if (fs::is_regular_file(dir / "manifest.txt"))
        return manifest_cases(dir / "manifest.txt");
    std::vector<Case> cases;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_image_path(entry.path()) || is_truth_name(entry.path()))
            continue;
        Case c;
        c.id = entry.path().filename().generic_string();
        c.path = entry.path().generic_string();
        c.source = entry.path();
        cases.push_back(std::move(c));
    }
    return cases;
}

// A key-value file naming a generated suite: seed, straight, curved, width, height.
std::optional<std::vector<Case>> generated_suite_cases(const fs::path& file)
{
    KeyValueFile kv;
    try {
        kv = KeyValueFile::load(file);
    } catch (const KeyValueError&) {
        return std::nullopt;
    }
    static const std::set<std::string> known{"seed", "straight", "curved", "width", "height"};
    if (kv.entries.empty())
        return std::nullopt;
    for (const auto& [k, v] : kv.entries)
        if (!known.count(k))
            throw KeyValueError(file.string() + ": unknown suite key '" + k + "'");
    auto get = [&](const char* key, long long fallback) {
        const std::string* v = kv.find(key);
        return v ? parse_integer(key, *v) : fallback;
    };
    const long long straight = get("straight", 100), curved = get("curved", 100);
    const long long width = get("width", 360), height = get("height", 480);
    if (straight < 0 || curved < 0 || width < 1 || height < 1)
        throw KeyValueError(file.string() + ": counts must be non-negative and sizes positive");
    return suite_cases(make_phantom_suite(static_cast<std::uint64_t>(get("seed", kDefaultSuiteSeed)),
                                          static_cast<int>(straight), static_cast<int>(curved),
                                          static_cast<int>(width), static_cast<int>(height)));
}

std::vector<Case> discover_cases(const std::string& suite)
{
    std::vector<Case> cases;
    if (suite == "default") {
        cases = suite_cases(default_validation_suite());
    } else {
        const fs::path p(suite);
        if (fs::is_directory(p)) {
            cases = directory_cases(p);
        } else if (fs::is_regular_file(p)) {
            auto generated = generated_suite_cases(p);
            cases = generated ? std::move(*generated) : manifest_cases(p);
        } else {
            throw std::runtime_error("no such suite, directory or manifest: " + suite);
        }
    }
    std::stable_sort(cases.begin(), cases.end(), [](const Case& a, const Case& b) {
        return a.path != b.path ? a.path < b.path : a.id < b.id;
    });
    return cases;
}

// ---------------------------------------------------------------------------
// validate: per-case work

struct CaseResult {
    bool ok = false;
    std::string error;
    int width = 0;
    int height = 0;
    SegmentationResult seg;
    std::optional<EvalReport> eval;
};

CaseResult run_case(const Case& c, const PipelineConfig& cfg)
{
    CaseResult r;
    const char* stage = "read_image";
    try {
        GrayImage image;
        std::optional<BinaryMask> truth;
        if (const auto* spec = std::get_if<PhantomSpec>(&c.source)) {
            stage = "generate_phantom";
            Phantom ph = generate_phantom(*spec);
            image = std::move(ph.image);
            truth = std::move(ph.truth_pectoral);
        } else {
            image = read_image(std::get<fs::path>(c.source));
            if (c.truth) {
                stage = "read_truth";
                truth = read_mask(*c.truth);
            }
        }
        r.width = image.width();
        r.height = image.height();
        stage = "segment";
        r.seg = segment_pectoral(image, cfg);
        if (truth) {
            stage = "evaluate";
            r.eval = evaluate(r.seg.pectoral, *truth);
        }
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = describe(e, stage);
    }
    return r;
}

Json record_json(const Case& c, const CaseResult& r, bool timing)
{
    Json j;
    j["id"] = c.id;
    j["path"] = c.path.empty() ? Json(nullptr) : Json(c.path);
    j["status"] = r.ok ? "ok" : "failed";
    j["error"] = r.ok ? Json(nullptr) : Json(r.error);
    j["labeled"] = c.truth.has_value() || std::holds_alternative<PhantomSpec>(c.source);
    j["width"] = r.width;
    j["height"] = r.height;
    if (r.ok) {
        j["orientation"] = to_string(r.seg.orientation);
        j["pectoral_found"] = r.seg.pectoral_found;
        j["thresholds"] = thresholds_json(r.seg.thresholds);
        j["window"] = window_json(r.seg.window);
        j["contrast"] = finite_or_null(r.seg.contrast);
        j["area"] = r.seg.stats.area;
        j["mean_intensity"] = r.seg.stats.mean_intensity;
    } else {
        for (const char* key : {"orientation", "pectoral_found", "thresholds", "window", "contrast", "area",
                                "mean_intensity"})
            j[key] = nullptr;
    }
    if (r.eval) {
        Json e;
        e["dice"] = r.eval->dice;
        e["boundary_mean_distance"] = finite_or_null(r.eval->boundary_mean_distance);
        e["over_fraction"] = r.eval->over_fraction;
        e["under_fraction"] = r.eval->under_fraction;
        e["error_class"] = to_string(r.eval->error_class);
        j["evaluation"] = e;
    } else {
        j["evaluation"] = nullptr;
    }
    if (timing)
        j["timings_ms"] = timings_json(r.seg.timings);
    return j;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string csv_value(const Json& v)
{
    if (v.is_null())
        return "";
    if (v.is_string())
        return csv_field(v.get<std::string>());
    return v.dump();
}

std::string report_csv(const Json& records)
{
    std::string out = "id,path,status,orientation,pectoral_found,area,mean_intensity,breast_threshold,"
                      "marker_threshold,muscle_threshold,dice,boundary_mean_distance,over_fraction,"
                      "under_fraction,error_class,error\n";
    for (const auto& r : records) {
        const Json& t = r["thresholds"];
        const Json& e = r["evaluation"];
        auto eval_field = [&](const char* key) { return e.is_null() ? std::string() : csv_value(e[key]); };
        auto threshold_field = [&](const char* key) { return t.is_null() ? std::string() : csv_value(t[key]); };
        out += csv_value(r["id"]) + "," + csv_value(r["path"]) + "," + csv_value(r["status"]) + "," +
               csv_value(r["orientation"]) + "," + csv_value(r["pectoral_found"]) + "," + csv_value(r["area"]) +
               "," + csv_value(r["mean_intensity"]) + "," + threshold_field("breast") + "," +
               threshold_field("marker") + "," + threshold_field("muscle") + "," + eval_field("dice") + "," +
               eval_field("boundary_mean_distance") + "," + eval_field("over_fraction") + "," +
               eval_field("under_fraction") + "," + eval_field("error_class") + "," + csv_value(r["error"]) + "\n";
    }
    return out;
}

fs::path csv_path_for(const fs::path& report)
{
    fs::path p = report;
    if (p.extension() == ".json")
        return p.replace_extension(".csv");
    return fs::path(report.string() + ".csv");
}

} // namespace

// ---------------------------------------------------------------------------
// Config files

PipelineConfig apply_config_file(const KeyValueFile& kv, PipelineConfig cfg)
{
    for (const auto& [key, value] : kv.entries) {
        if (key == "marker_rows_fraction")
            cfg.marker_rows_fraction = parse_double(key, value);
        else if (key == "window_upper_percentile")
            cfg.window_upper_percentile = parse_double(key, value);
        else if (key == "window_mode")
            cfg.window_mode = parse_window_mode(key, value);
        else if (key == "close_radius_fraction")
            cfg.close_radius_fraction = parse_double(key, value);
        else if (key == "open_radius_fraction")
            cfg.open_radius_fraction = parse_double(key, value);
        else if (key == "connectivity")
            cfg.connectivity = parse_connectivity(key, parse_integer(key, value));
        else if (key == "invert_input")
            cfg.invert_input = parse_bool(key, value);
        else if (key == "breast_threshold") {
            if (value != "otsu")
                throw KeyValueError(key + ": only otsu is supported");
        } else if (key == "muscle_threshold")
            cfg.muscle_threshold = parse_muscle_threshold(key, value);
        else if (key == "min_pectoral_contrast")
            cfg.min_pectoral_contrast = parse_double(key, value);
        else
            throw KeyValueError("unknown config key '" + key + "'");
    }
    return cfg;
}

KeyValueFile config_to_key_values(const PipelineConfig& cfg)
{
    KeyValueFile kv;
    kv.add("marker_rows_fraction", format_double(cfg.marker_rows_fraction));
    kv.add("window_upper_percentile", format_double(cfg.window_upper_percentile));
    kv.add("window_mode", window_mode_name(cfg.window_mode));
    kv.add("close_radius_fraction", format_double(cfg.close_radius_fraction));
    kv.add("open_radius_fraction", format_double(cfg.open_radius_fraction));
    kv.add("connectivity", cfg.connectivity == Connectivity::Four ? "4" : "8");
    kv.add("invert_input", cfg.invert_input ? "true" : "false");
    kv.add("breast_threshold", "otsu");
    kv.add("muscle_threshold", muscle_threshold_name(cfg.muscle_threshold));
    kv.add("min_pectoral_contrast", format_double(cfg.min_pectoral_contrast));
    return kv;
}

// ---------------------------------------------------------------------------
// segment

int cmd_segment(const SegmentOptions& opt, std::ostream& out, std::ostream& err)
{
    GrayImage image;
    try {
        image = read_image(opt.input);
    } catch (const std::exception& e) {
        err << "pectoral segment: read_image: " << e.what() << "\n";
        return kExitError;
    }

    PipelineConfig cfg = opt.config;
    cfg.keep_stages = opt.dump_stages;
    SegmentationResult res;
    try {
        res = segment_pectoral(image, cfg);
    } catch (const std::exception& e) {
        err << "pectoral segment: " << describe(e, "segment") << "\n";
        return kExitError;
    }

    const fs::path dir = opt.output_dir;
    try {
        fs::create_directories(dir);
        write_mask(res.pectoral, dir / "mask.png");

        std::string polyline;
        for (const Point& p : res.boundary)
            polyline += std::to_string(p.x) + " " + std::to_string(p.y) + "\n";
        write_text(dir / "boundary.txt", polyline);

        write_rgb_png(render_overlay(image, res), dir / "overlay.png");

        Json stats;
        stats["input"] = opt.input.generic_string();
        stats["width"] = image.width();
        stats["height"] = image.height();
        stats["bit_depth"] = image.bit_depth();
        stats["orientation"] = to_string(res.orientation);
        stats["pectoral_found"] = res.pectoral_found;
        stats["area"] = res.stats.area;
        stats["mean_intensity"] = res.stats.mean_intensity;
        stats["boundary_points"] = res.boundary.size();
        stats["thresholds"] = thresholds_json(res.thresholds);
        stats["window"] = window_json(res.window);
        stats["contrast"] = finite_or_null(res.contrast);
        stats["config"] = config_json(cfg);
        if (!opt.no_timing)
            stats["timings_ms"] = timings_json(res.timings);
        write_text(dir / "stats.json", stats.dump(2) + "\n");

        if (opt.dump_stages && res.stages) {
            const fs::path sdir = dir / "stages";
            fs::create_directories(sdir);
            const StageImages& s = *res.stages;
            write_mask(s.breast, sdir / "01_breast.png");
            write_image(s.windowed, sdir / "02_windowed.png");
            write_image(s.marker, sdir / "03_marker.png");
            write_image(s.reconstructed, sdir / "04_reconstructed.png");
            write_mask(s.thresholded, sdir / "05_thresholded.png");
            write_mask(s.closed, sdir / "06_closed.png");
            write_mask(s.opened, sdir / "07_opened.png");
            write_mask(res.pectoral, sdir / "08_pectoral.png");
        }
    } catch (const std::exception& e) {
        err << "pectoral segment: write_outputs: " << e.what() << "\n";
        return kExitError;
    }

    out << (dir / "stats.json").generic_string() << "\n";
    if (!res.pectoral_found) {
        err << "pectoral segment: no pectoral muscle found\n";
        return kExitNoPectoral;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

int cmd_validate(const ValidateOptions& opt, std::ostream& out, std::ostream& err)
{
    std::vector<Case> cases;
    try {
        opt.config.validate(0, 0);
        cases = discover_cases(opt.suite);
    } catch (const std::exception& e) {
        err << "pectoral validate: suite: " << e.what() << "\n";
        return kExitError;
    }

    const auto start = std::chrono::steady_clock::now();
    std::vector<CaseResult> results(cases.size());
    {
        const unsigned workers =
            static_cast<unsigned>(std::clamp<std::size_t>(opt.jobs, 1, std::max<std::size_t>(cases.size(), 1)));
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next++; i < cases.size(); i = next++)
                results[i] = run_case(cases[i], opt.config);
        };
        std::vector<std::thread> pool;
        for (unsigned w = 1; w < workers; ++w)
            pool.emplace_back(work);
        work();
        for (auto& t : pool)
            t.join();
    }
    const double total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    Json records = Json::array();
    std::size_t processed = 0, failed = 0, labeled = 0, unlabeled = 0, correct = 0;
    std::size_t by_class[5] = {0, 0, 0, 0, 0};
    double correct_dice = 0.0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const Case& c = cases[i];
        const CaseResult& r = results[i];
        records.push_back(record_json(c, r, !opt.no_timing));
        const bool has_truth = c.truth.has_value() || std::holds_alternative<PhantomSpec>(c.source);
        labeled += has_truth;
        if (!r.ok) {
            ++failed;
            continue;
        }
        ++processed;
        if (!r.eval) {
            ++unlabeled;
            continue;
        }
        ++by_class[static_cast<int>(r.eval->error_class)];
        if (r.eval->error_class == ErrorClass::Correct) {
            ++correct;
            correct_dice += r.eval->dice;
        }
    }

    Json tallies;
    for (ErrorClass ec : {ErrorClass::Correct, ErrorClass::DenseAsMuscle, ErrorClass::MuscleAsBreast, ErrorClass::Both,
                          ErrorClass::NoPectoralFound})
        tallies[to_string(ec)] = by_class[static_cast<int>(ec)];
    tallies["unlabeled"] = unlabeled;
    tallies["failed"] = failed;

    Json aggregate;
    aggregate["count"] = cases.size();
    aggregate["processed"] = processed;
    aggregate["failed"] = failed;
    aggregate["labeled"] = labeled;
    aggregate["tallies"] = tallies;
    aggregate["correct_fraction"] = labeled ? Json(static_cast<double>(correct) / labeled) : Json(nullptr);
    aggregate["error_rate"] = labeled ? Json(static_cast<double>(labeled - correct) / labeled) : Json(nullptr);
    aggregate["mean_dice_correct"] = correct ? Json(correct_dice / correct) : Json(nullptr);
    if (!opt.no_timing)
        aggregate["total_ms"] = total_ms;

    Json report;
    report["schema_version"] = 1;
    report["suite"] = opt.suite;
    report["config"] = config_json(opt.config);
    report["timing"] = !opt.no_timing;
    report["records"] = records;
    report["aggregate"] = aggregate;

    try {
        if (opt.report.has_parent_path())
            fs::create_directories(opt.report.parent_path());
        write_text(opt.report, report.dump(2) + "\n");
        write_text(csv_path_for(opt.report), report_csv(report["records"]));
    } catch (const std::exception& e) {
        err << "pectoral validate: write_report: " << e.what() << "\n";
        return kExitError;
    }
    out << opt.report.generic_string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// phantom

int cmd_phantom(const PhantomOptions& opt, std::ostream& out, std::ostream& err)
{
    if (opt.count < 0) {
        err << "pectoral phantom: count must be non-negative\n";
        return kExitError;
    }
    std::vector<PhantomSpec> specs;
    try {
        static const std::set<std::string> presets{"straight", "curved", "mixed", "none"};
        if (presets.count(opt.spec)) {
            std::mt19937_64 rng(opt.seed);
            for (int i = 0; i < opt.count; ++i) {
                PhantomKind kind = PhantomKind::Absent;
                if (opt.spec == "straight" || (opt.spec == "mixed" && i % 2 == 0))
                    kind = PhantomKind::Straight;
                else if (opt.spec != "none")
                    kind = PhantomKind::Curved;
                specs.push_back(sample_phantom_spec(kind, rng));
            }
        } else {
            const PhantomSpec base = PhantomSpec::from_key_values(KeyValueFile::load(opt.spec));
            base.validate();
            for (int i = 0; i < opt.count; ++i) {
                PhantomSpec s = base;
                s.seed = opt.seed + static_cast<std::uint64_t>(i);
                specs.push_back(s);
            }
        }
    } catch (const std::exception& e) {
        err << "pectoral phantom: spec: " << e.what() << "\n";
        return kExitError;
    }

    const fs::path dir = opt.output_dir;
    const char* ext = opt.pgm ? ".pgm" : ".png";
    try {
        fs::create_directories(dir);
        std::string manifest = "# image truth\n";
        for (std::size_t i = 0; i < specs.size(); ++i) {
            char id[32];
            std::snprintf(id, sizeof id, "phantom_%03zu", i);
            const Phantom ph = generate_phantom(specs[i]);
            const std::string image = std::string(id) + ext;
            const std::string truth = std::string(id) + "_truth" + ext;
            write_image(ph.image, dir / image);
            write_mask(ph.truth_pectoral, dir / truth);
            write_text(dir / (std::string(id) + ".spec"), specs[i].to_key_values().serialize());
            manifest += image + " " + truth + "\n";
        }
        write_text(dir / "manifest.txt", manifest);
    } catch (const std::exception& e) {
        err << "pectoral phantom: write_outputs: " << e.what() << "\n";
        return kExitError;
    }
    out << (dir / "manifest.txt").generic_string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Command line

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Pectoral muscle segmentation for MLO mammograms", "pectoral"};
    app.require_subcommand(1);

    struct Overrides {
        std::string config_file;
        double marker_rows = 0, window_percentile = 0, close_radius = 0, open_radius = 0, min_contrast = 0;
        int connectivity = 8;
        std::string window_mode, muscle_threshold;
        bool invert = false;
    } ov;
    std::vector<std::pair<CLI::Option*, std::function<void(PipelineConfig&)>>> setters;

    auto add_config_flags = [&](CLI::App* sub) {
        sub->add_option("--config", ov.config_file, "Flat key = value config file; flags override it")
            ->check(CLI::ExistingFile);
        setters.emplace_back(sub->add_option("--marker-rows", ov.marker_rows, "Marker strip height fraction"),
                             [&](PipelineConfig& c) { c.marker_rows_fraction = ov.marker_rows; });
        setters.emplace_back(sub->add_option("--window-percentile", ov.window_percentile, "Upper window fraction"),
                             [&](PipelineConfig& c) { c.window_upper_percentile = ov.window_percentile; });
        setters.emplace_back(sub->add_option("--window-mode", ov.window_mode, "range or percentile")
                                 ->check(CLI::IsMember({"range", "percentile"})),
                             [&](PipelineConfig& c) { c.window_mode = parse_window_mode("--window-mode", ov.window_mode); });
        setters.emplace_back(sub->add_option("--close-radius", ov.close_radius, "Close disk radius / width"),
                             [&](PipelineConfig& c) { c.close_radius_fraction = ov.close_radius; });
        setters.emplace_back(sub->add_option("--open-radius", ov.open_radius, "Open disk radius / width"),
                             [&](PipelineConfig& c) { c.open_radius_fraction = ov.open_radius; });
        setters.emplace_back(
            sub->add_option("--connectivity", ov.connectivity, "4 or 8")->check(CLI::IsMember({4, 8})),
            [&](PipelineConfig& c) { c.connectivity = parse_connectivity("--connectivity", ov.connectivity); });
        setters.emplace_back(sub->add_flag("--invert", ov.invert, "Tissue is darker than background"),
                             [&](PipelineConfig& c) { c.invert_input = ov.invert; });
        setters.emplace_back(sub->add_option("--muscle-threshold", ov.muscle_threshold, "otsu or kapur")
                                 ->check(CLI::IsMember({"otsu", "kapur"})),
                             [&](PipelineConfig& c) {
                                 c.muscle_threshold = parse_muscle_threshold("--muscle-threshold", ov.muscle_threshold);
                             });
        setters.emplace_back(sub->add_option("--min-contrast", ov.min_contrast, "Muscle acceptance contrast"),
                             [&](PipelineConfig& c) { c.min_pectoral_contrast = ov.min_contrast; });
    };

    SegmentOptions seg;
    std::string seg_input, seg_output;
    CLI::App* segment = app.add_subcommand("segment", "Segment one image");
    segment->add_option("input", seg_input, "PGM or PNG image")->required();
    segment->add_option("output_dir", seg_output, "Directory for mask, boundary, overlay and stats")->required();
    segment->add_flag("--dump-stages", seg.dump_stages, "Write intermediate rasters to output_dir/stages");
    segment->add_flag("--no-timing", seg.no_timing, "Leave stage timings out of stats.json");
    add_config_flags(segment);

    ValidateOptions val;
    std::string val_report = "report.json";
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    CLI::App* validate = app.add_subcommand("validate", "Run a phantom suite or image corpus");
    validate->add_option("suite", val.suite, "default, a directory, a manifest or a suite file")->required();
    validate->add_option("report", val_report, "JSON report path (CSV goes alongside)");
    validate->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    validate->add_flag("--no-timing", val.no_timing, "Omit timings so reruns are byte-identical");
    add_config_flags(validate);

    PhantomOptions ph;
    std::string ph_output, ph_format = "png";
    CLI::App* phantom = app.add_subcommand("phantom", "Write synthetic phantoms with truth masks");
    phantom->add_option("spec", ph.spec, "straight, curved, mixed, none, or a phantom spec file")->required();
    phantom->add_option("output_dir", ph_output, "Output directory")->required();
    phantom->add_option("--count", ph.count, "Number of phantoms");
    phantom->add_option("--seed", ph.seed, "Random seed");
    phantom->add_option("--format", ph_format, "png or pgm")->check(CLI::IsMember({"png", "pgm"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    PipelineConfig cfg;
    try {
        if (!ov.config_file.empty())
            cfg = apply_config_file(KeyValueFile::load(ov.config_file), cfg);
        for (auto& [option, set] : setters)
            if (option->count() > 0)
                set(cfg);
        cfg.validate(0, 0);
    } catch (const std::exception& e) {
        err << "pectoral: config: " << e.what() << "\n";
        return kExitError;
    }

    if (segment->parsed()) {
        seg.input = seg_input;
        seg.output_dir = seg_output;
        seg.config = cfg;
        return cmd_segment(seg, out, err);
    }
    if (validate->parsed()) {
        val.report = val_report;
        val.jobs = jobs;
        val.config = cfg;
        return cmd_validate(val, out, err);
    }
    ph.output_dir = ph_output;
    ph.pgm = ph_format == "pgm";
    return cmd_phantom(ph, out, err);
}

} // namespace pectoral
