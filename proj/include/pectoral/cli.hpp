#pragma once

#include "pectoral/keyvalue.hpp"
#include "pectoral/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace pectoral {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNoPectoral = 2;

/**
 * Applies a flat key-value config file on top of `base`. Keys mirror the
 * PipelineConfig field names; unknown keys throw KeyValueError.
 */
PipelineConfig apply_config_file(const KeyValueFile& kv, PipelineConfig base);
KeyValueFile config_to_key_values(const PipelineConfig& cfg);

struct SegmentOptions {
    std::filesystem::path input;
    std::filesystem::path output_dir;
    PipelineConfig config;
    bool dump_stages = false;
    bool no_timing = false;
};

/**
 * Writes mask.png, boundary.txt, overlay.png and stats.json into output_dir
 * (plus stages/ with dump_stages). Returns 0, 2 when no muscle was found, or
 * 1 with a stage-tagged message on err. Nothing is written when the input
 * cannot be read.
 */
int cmd_segment(const SegmentOptions& opt, std::ostream& out, std::ostream& err);

struct ValidateOptions {
    /// "default", a directory, a manifest, or a suite key-value file.
    std::string suite;
    std::filesystem::path report;
    PipelineConfig config;
    unsigned jobs = 1;
    bool no_timing = false;
};

/**
 * Segments every case, evaluates the labelled ones and writes the JSON
 * report plus a CSV next to it. Per-case failures are recorded, not fatal.
 * Prints only the report path on out.
 */
int cmd_validate(const ValidateOptions& opt, std::ostream& out, std::ostream& err);

struct PhantomOptions {
    /// Preset name (straight, curved, mixed, none) or a phantom spec file.
    std::string spec;
    int count = 1;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    bool pgm = false;
};

/// Writes image / truth / spec triples and manifest.txt.
int cmd_phantom(const PhantomOptions& opt, std::ostream& out, std::ostream& err);

/// Full command line entry point: `pectoral <segment|validate|phantom> ...`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace pectoral
