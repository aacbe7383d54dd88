#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uwbench/image.hpp"
#include "uwbench/metrics.hpp"

namespace uw::bench {

namespace fs = std::filesystem;

struct ManifestEntry {
    std::string id;  // defaults to the raw file stem
    fs::path raw;
    std::optional<fs::path> reference;
    std::vector<std::string> tags;

    bool has_tag(std::string_view tag) const;
    bool challenging() const { return has_tag("challenging"); }
};

struct CorpusManifest {
    std::vector<ManifestEntry> entries;
};

// JSON lines: {"raw": "...", "reference": "...", "tags": [...], "id": "..."}.
// Relative paths are resolved against base_dir. Blank lines and lines starting with '#' are skipped.
CorpusManifest parse_manifest(std::string_view text, const fs::path& base_dir);
CorpusManifest load_manifest(const fs::path& path);
// Distinct ids and paths; challenging entries carry no reference.
void validate_manifest(const CorpusManifest& manifest);

using EnhanceFn = std::function<ImageBuf(const ImageBuf&)>;

struct Method {
    std::string name;  // used for output directories and report rows
    EnhanceFn run;
};

// Built-in methods: "wb", "he", "gc", and "waternet:<model path>" (or "waternet" with
// default_model set).
Method make_method(std::string_view spec, const std::optional<fs::path>& default_model = std::nullopt);
std::vector<Method> parse_methods(std::string_view comma_list,
                                  const std::optional<fs::path>& default_model = std::nullopt);

struct ResultRow {
    std::string image_id;
    std::string method;
    std::string output;  // relative to the output directory
    metrics::MetricScores scores;
    double seconds = 0.0;
};

struct SkipRow {
    std::string image_id;
    std::string reason;
};

struct MetricReport {
    std::vector<ResultRow> rows;
    std::vector<SkipRow> skipped;
};

// Enhances, saves (out_dir/<method>/<id>.png), scores and times every entry with every
// method. Unreadable inputs are skipped with a warning on `log`. Writes scores.csv,
// timings.csv, skipped.csv and report.md into out_dir.
MetricReport run_benchmark(const CorpusManifest& manifest, std::span<const Method> methods, const fs::path& out_dir,
                           std::ostream* log = nullptr);

// scores.csv holds no timings, so it is byte-stable across runs; timings live apart.
std::string scores_csv(const MetricReport& report);
std::string timings_csv(const MetricReport& report);
std::string skipped_csv(const MetricReport& report);

// Per-method means over the rows; full-reference means only over rows that have them.
struct MethodSummary {
    std::string method;
    int images = 0;
    int with_reference = 0;
    double mse = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    double uciqe = 0.0;
    double uiqm = 0.0;
    std::optional<double> seconds;
};

std::vector<MethodSummary> summarize(const MetricReport& report);

// Reads back what run_benchmark wrote (timings and skips optional).
MetricReport read_report_dir(const fs::path& dir);
// Markdown tables: full-reference, non-reference, mean runtime, skips.
std::string render_report(const MetricReport& report);

// Mean wall time of each method on seeded noise images of each size.
struct RuntimeSize {
    int width;
    int height;
};

inline constexpr RuntimeSize kRuntimeSizes[] = {{500, 500}, {640, 480}, {1280, 720}};

struct RuntimeTable {
    std::vector<RuntimeSize> sizes;
    std::vector<std::string> methods;
    // [method][size]
    std::vector<std::vector<double>> mean_seconds;
    std::vector<std::vector<double>> min_seconds;
};

RuntimeTable runtime_table(std::span<const Method> methods, int repeats,
                           std::span<const RuntimeSize> sizes = kRuntimeSizes, std::uint64_t seed = 0);
std::string render_runtime(const RuntimeTable& table);

// Share of reference images contributed by each method, in percent.
struct WinShare {
    std::string method;
    int count = 0;
    double percent = 0.0;
};

// `reference_methods` holds the method of each image's chosen reference; `all_methods`
// fixes the row order (methods never chosen get 0). Unknown methods are appended.
std::vector<WinShare> win_percentages(std::span<const std::string> reference_methods,
                                      std::span<const std::string> all_methods = {});
std::string render_win_table(std::span<const WinShare> shares);

struct MosScore {
    std::string image_id;
    std::string rater_id;
    std::string method;
    int score = 0;
};

struct MosSummary {
    std::string method;
    int count = 0;
    double mean = 0.0;
    double stddev = 0.0;  // population
};

// Methods in order of first appearance. Scores outside 1..5 throw InvalidArgument.
std::vector<MosSummary> mos_aggregate(std::span<const MosScore> scores);
std::string render_mos_table(std::span<const MosSummary> rows);

// RFC 4180-ish quoting for a single cell.
std::string csv_cell(std::string_view s);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace uw::bench
