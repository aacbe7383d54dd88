#include "uwbench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "uwbench/enhance.hpp"
#include "uwbench/error.hpp"
#include "uwbench/image_io.hpp"
#include "uwbench/model_io.hpp"
#include "uwbench/synthetic.hpp"
#include "uwbench/waternet.hpp"

namespace uw::bench {

using json = nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::string fmt(double v, int precision) { return metrics::format_value(v, precision); }

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double d : v) s += d;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double parse_double(const std::string& s, const std::string& what) {
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError("bad number '" + s + "' in " + what);
    }
}

std::optional<double> optional_cell(const std::string& s, const std::string& what) {
    if (s.empty()) return std::nullopt;
    return parse_double(s, what);
}

}  // namespace

bool ManifestEntry::has_tag(std::string_view tag) const {
    return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

CorpusManifest parse_manifest(std::string_view text, const fs::path& base_dir) {
    CorpusManifest m;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        json j;
        try {
            j = json::parse(t);
        } catch (const json::exception& e) {
            throw FormatError("manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("raw") || !j["raw"].is_string()) {
            throw FormatError("manifest line " + std::to_string(lineno) + ": missing \"raw\"");
        }
        ManifestEntry e;
        e.raw = resolve(base_dir, j["raw"].get<std::string>());
        if (j.contains("reference") && !j["reference"].is_null()) {
            if (!j["reference"].is_string()) {
                throw FormatError("manifest line " + std::to_string(lineno) + ": \"reference\" must be a string");
            }
            e.reference = resolve(base_dir, j["reference"].get<std::string>());
        }
        if (j.contains("tags")) {
            if (!j["tags"].is_array()) throw FormatError("manifest line " + std::to_string(lineno) + ": bad tags");
            for (const auto& tag : j["tags"]) {
                if (!tag.is_string()) throw FormatError("manifest line " + std::to_string(lineno) + ": bad tag");
                e.tags.push_back(tag.get<std::string>());
            }
        }
        e.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : e.raw.stem().string();
        m.entries.push_back(std::move(e));
    }
    validate_manifest(m);
    return m;
}

CorpusManifest load_manifest(const fs::path& path) {
    return parse_manifest(read_text(path), path.parent_path());
}

void validate_manifest(const CorpusManifest& manifest) {
    std::set<std::string> ids, paths;
    for (const auto& e : manifest.entries) {
        if (e.id.empty()) throw InvalidArgument("manifest entry with empty id");
        if (e.id.find('/') != std::string::npos || e.id.find('\\') != std::string::npos || e.id == "." ||
            e.id == "..") {
            throw InvalidArgument("manifest id '" + e.id + "' is not a plain file name");
        }
        if (!ids.insert(e.id).second) throw InvalidArgument("duplicate manifest id '" + e.id + "'");
        if (!paths.insert(e.raw.lexically_normal().string()).second) {
            throw InvalidArgument("duplicate manifest path " + e.raw.string());
        }
        if (e.reference) {
            if (e.challenging()) throw InvalidArgument("challenging entry '" + e.id + "' must not have a reference");
            if (!paths.insert(e.reference->lexically_normal().string()).second) {
                throw InvalidArgument("duplicate manifest path " + e.reference->string());
            }
        }
    }
}

Method make_method(std::string_view spec, const std::optional<fs::path>& default_model) {
    const std::string s = trim(spec);
    if (s == "wb") return {"wb", [](const ImageBuf& img) { return white_balance(img).image; }};
    if (s == "he") return {"he", [](const ImageBuf& img) { return clahe_on_l(img).image; }};
    if (s == "gc") return {"gc", [](const ImageBuf& img) { return gamma_correct(img, 0.7); }};
    if (s == "waternet" || s.rfind("waternet:", 0) == 0) {
        fs::path model_path;
        if (s.size() > 9) {
            model_path = s.substr(9);
        } else if (default_model) {
            model_path = *default_model;
        } else {
            throw InvalidArgument("method waternet needs a model file");
        }
        auto model = std::make_shared<const net::WaterNetModel>(net::load_model(model_path));
        return {"waternet", [model](const ImageBuf& img) { return net::enhance_image(*model, img); }};
    }
    throw InvalidArgument("unknown method '" + s + "'");
}

std::vector<Method> parse_methods(std::string_view comma_list, const std::optional<fs::path>& default_model) {
    std::vector<Method> out;
    std::set<std::string> seen;
    std::string item;
    std::istringstream in{std::string(comma_list)};
    while (std::getline(in, item, ',')) {
        if (trim(item).empty()) continue;
        Method m = make_method(item, default_model);
        if (!seen.insert(m.name).second) throw InvalidArgument("method listed twice: " + m.name);
        out.push_back(std::move(m));
    }
    if (out.empty()) throw InvalidArgument("no methods given");
    return out;
}

MetricReport run_benchmark(const CorpusManifest& manifest, std::span<const Method> methods, const fs::path& out_dir,
                           std::ostream* log) {
    validate_manifest(manifest);
    MetricReport report;
    fs::create_directories(out_dir);
    for (const Method& m : methods) fs::create_directories(out_dir / m.name);

    for (const ManifestEntry& e : manifest.entries) {
        ImageBuf raw;
        std::optional<ImageBuf> ref;
        try {
            raw = load_image(e.raw);
            if (e.reference) {
                ref = load_image(*e.reference);
                if (!ref->same_dims(raw)) throw DimensionError("reference size differs from raw");
            }
        } catch (const Error& err) {
            if (log) *log << "warning: skipping " << e.id << ": " << err.what() << "\n";
            report.skipped.push_back({e.id, err.what()});
            continue;
        }
        for (const Method& m : methods) {
            const auto t0 = std::chrono::steady_clock::now();
            ImageBuf result = m.run(raw);
            const auto t1 = std::chrono::steady_clock::now();
            const std::string rel = m.name + "/" + e.id + ".png";
            save_image(result, out_dir / rel);
            // Score what was written: the 8-bit image on disk, not the float buffer.
            result = load_image(out_dir / rel);
            ResultRow row{e.id, m.name, rel, metrics::score_pair(result, ref ? &*ref : nullptr),
                          std::chrono::duration<double>(t1 - t0).count()};
            report.rows.push_back(std::move(row));
        }
    }

    write_text(out_dir / "scores.csv", scores_csv(report));
    write_text(out_dir / "timings.csv", timings_csv(report));
    write_text(out_dir / "skipped.csv", skipped_csv(report));
    // The markdown is rendered from the files just written, so it never disagrees with them.
    write_text(out_dir / "report.md", render_report(read_report_dir(out_dir)));
    return report;
}

std::string csv_cell(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !cell.empty()) {
                row.push_back(std::move(cell));
                rows.push_back(std::move(row));
            }
            row.clear();
            cell.clear();
            any = false;
        } else {
            cell += c;
            any = true;
        }
    }
    if (quoted) throw FormatError("csv: unterminated quote");
    if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string scores_csv(const MetricReport& report) {
    std::string out = "image_id,method,output,mse,psnr,ssim,uciqe,uiqm\n";
    auto opt = [](const std::optional<double>& v) { return v ? fmt(*v, 6) : std::string(); };
    for (const ResultRow& r : report.rows) {
        out += csv_cell(r.image_id) + "," + csv_cell(r.method) + "," + csv_cell(r.output) + "," + opt(r.scores.mse) +
               "," + opt(r.scores.psnr) + "," + opt(r.scores.ssim) + "," + fmt(r.scores.uciqe, 6) + "," +
               fmt(r.scores.uiqm, 6) + "\n";
    }
    return out;
}

std::string timings_csv(const MetricReport& report) {
    std::string out = "image_id,method,seconds\n";
    for (const ResultRow& r : report.rows) {
        out += csv_cell(r.image_id) + "," + csv_cell(r.method) + "," + fmt(r.seconds, 6) + "\n";
    }
    return out;
}

std::string skipped_csv(const MetricReport& report) {
    std::string out = "image_id,reason\n";
    for (const SkipRow& s : report.skipped) out += csv_cell(s.image_id) + "," + csv_cell(s.reason) + "\n";
    return out;
}

std::vector<MethodSummary> summarize(const MetricReport& report) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const ResultRow*>> by_method;
    for (const ResultRow& r : report.rows) {
        auto& v = by_method[r.method];
        if (v.empty()) order.push_back(r.method);
        v.push_back(&r);
    }
    std::vector<MethodSummary> out;
    for (const std::string& name : order) {
        MethodSummary s;
        s.method = name;
        std::vector<double> mse, psnr, ssim, uciqe, uiqm, secs;
        bool timed = true;
        for (const ResultRow* r : by_method[name]) {
            ++s.images;
            if (r->scores.mse) {
                ++s.with_reference;
                mse.push_back(*r->scores.mse);
                psnr.push_back(*r->scores.psnr);
                ssim.push_back(*r->scores.ssim);
            }
            uciqe.push_back(r->scores.uciqe);
            uiqm.push_back(r->scores.uiqm);
            if (r->seconds >= 0.0) {
                secs.push_back(r->seconds);
            } else {
                timed = false;
            }
        }
        s.mse = mean_of(mse);
        s.psnr = mean_of(psnr);
        s.ssim = mean_of(ssim);
        s.uciqe = mean_of(uciqe);
        s.uiqm = mean_of(uiqm);
        if (timed) s.seconds = mean_of(secs);
        out.push_back(std::move(s));
    }
    return out;
}

MetricReport read_report_dir(const fs::path& dir) {
    MetricReport report;
    const auto scores = parse_csv(read_text(dir / "scores.csv"));
    if (scores.empty() || scores[0].size() != 8 || scores[0][0] != "image_id") {
        throw FormatError("scores.csv: unexpected header");
    }
    for (std::size_t i = 1; i < scores.size(); ++i) {
        const auto& c = scores[i];
        if (c.size() != 8) throw FormatError("scores.csv: row " + std::to_string(i) + " has wrong cell count");
        ResultRow r;
        r.image_id = c[0];
        r.method = c[1];
        r.output = c[2];
        r.scores.mse = optional_cell(c[3], "scores.csv");
        r.scores.psnr = optional_cell(c[4], "scores.csv");
        r.scores.ssim = optional_cell(c[5], "scores.csv");
        r.scores.uciqe = parse_double(c[6], "scores.csv");
        r.scores.uiqm = parse_double(c[7], "scores.csv");
        r.seconds = -1.0;  // unknown until timings.csv says otherwise
        report.rows.push_back(std::move(r));
    }
    if (fs::exists(dir / "timings.csv")) {
        std::map<std::pair<std::string, std::string>, double> t;
        const auto timings = parse_csv(read_text(dir / "timings.csv"));
        for (std::size_t i = 1; i < timings.size(); ++i) {
            if (timings[i].size() != 3) throw FormatError("timings.csv: bad row " + std::to_string(i));
            t[{timings[i][0], timings[i][1]}] = parse_double(timings[i][2], "timings.csv");
        }
        for (ResultRow& r : report.rows) {
            const auto it = t.find({r.image_id, r.method});
            if (it != t.end()) r.seconds = it->second;
        }
    }
    if (fs::exists(dir / "skipped.csv")) {
        const auto skipped = parse_csv(read_text(dir / "skipped.csv"));
        for (std::size_t i = 1; i < skipped.size(); ++i) {
            if (skipped[i].size() != 2) throw FormatError("skipped.csv: bad row " + std::to_string(i));
            report.skipped.push_back({skipped[i][0], skipped[i][1]});
        }
    }
    return report;
}

std::string render_report(const MetricReport& report) {
    const auto summary = summarize(report);
    std::ostringstream md;
    md << "# Benchmark report\n\n";

    md << "## Full-reference quality\n\n";
    md << "| Method | Images | MSE (x10^3) | PSNR (dB) | SSIM |\n|---|---|---|---|---|\n";
    for (const auto& s : summary) {
        if (s.with_reference == 0) continue;
        md << "| " << s.method << " | " << s.with_reference << " | " << fmt(s.mse / 1000.0, 4) << " | "
           << fmt(s.psnr, 4) << " | " << fmt(s.ssim, 4) << " |\n";
    }

    md << "\n## Non-reference quality\n\n";
    md << "| Method | Images | UCIQE | UIQM |\n|---|---|---|---|\n";
    for (const auto& s : summary) {
        md << "| " << s.method << " | " << s.images << " | " << fmt(s.uciqe, 4) << " | " << fmt(s.uiqm, 4) << " |\n";
    }

    md << "\n## Mean runtime (s, enhance call only)\n\n";
    md << "| Method | Seconds |\n|---|---|\n";
    for (const auto& s : summary) {
        md << "| " << s.method << " | " << (s.seconds ? fmt(*s.seconds, 4) : std::string("n/a")) << " |\n";
    }

    md << "\n## Skipped inputs\n\n";
    if (report.skipped.empty()) {
        md << "None.\n";
    } else {
        for (const auto& s : report.skipped) md << "- " << s.image_id << ": " << s.reason << "\n";
    }
    return md.str();
}

RuntimeTable runtime_table(std::span<const Method> methods, int repeats, std::span<const RuntimeSize> sizes,
                           std::uint64_t seed) {
    if (repeats < 3) throw InvalidArgument("runtime_table needs at least 3 repeats");
    RuntimeTable t;
    t.sizes.assign(sizes.begin(), sizes.end());
    for (const Method& m : methods) {
        t.methods.push_back(m.name);
        std::vector<double> means, mins;
        for (std::size_t si = 0; si < sizes.size(); ++si) {
            const ImageBuf img = noise_image(sizes[si].width, sizes[si].height, seed + si);
            double total = 0.0, best = INFINITY;
            for (int r = 0; r < repeats; ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                const ImageBuf out = m.run(img);
                const auto t1 = std::chrono::steady_clock::now();
                const double s = std::chrono::duration<double>(t1 - t0).count();
                total += s;
                best = std::min(best, s);
            }
            means.push_back(total / repeats);
            mins.push_back(best);
        }
        t.mean_seconds.push_back(std::move(means));
        t.min_seconds.push_back(std::move(mins));
    }
    return t;
}

std::string render_runtime(const RuntimeTable& table) {
    std::ostringstream md;
    md << "| Method |";
    for (const auto& s : table.sizes) md << " " << s.width << " x " << s.height << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < table.sizes.size(); ++i) md << "---|";
    md << "\n";
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
        md << "| " << table.methods[m] << " |";
        for (double v : table.mean_seconds[m]) md << " " << fmt(v, 4) << " |";
        md << "\n";
    }
    return md.str();
}

std::vector<WinShare> win_percentages(std::span<const std::string> reference_methods,
                                      std::span<const std::string> all_methods) {
    std::vector<WinShare> out;
    std::map<std::string, std::size_t> index;
    auto slot = [&](const std::string& m) -> WinShare& {
        auto [it, fresh] = index.try_emplace(m, out.size());
        if (fresh) out.push_back({m, 0, 0.0});
        return out[it->second];
    };
    for (const auto& m : all_methods) slot(m);
    for (const auto& m : reference_methods) ++slot(m).count;
    const double total = static_cast<double>(reference_methods.size());
    for (auto& w : out) w.percent = total > 0 ? 100.0 * w.count / total : 0.0;
    return out;
}

std::string render_win_table(std::span<const WinShare> shares) {
    std::ostringstream md;
    md << "| Method | Percentage (%) |\n|---|---|\n";
    for (const auto& w : shares) md << "| " << w.method << " | " << fmt(w.percent, 2) << " |\n";
    return md.str();
}

std::vector<MosSummary> mos_aggregate(std::span<const MosScore> scores) {
    std::vector<MosSummary> out;
    std::map<std::string, std::vector<int>> by_method;
    for (const MosScore& s : scores) {
        if (s.score < 1 || s.score > 5) {
            throw InvalidArgument("MOS score " + std::to_string(s.score) + " outside 1..5 for " + s.method);
        }
        auto& v = by_method[s.method];
        if (v.empty()) out.push_back({s.method, 0, 0.0, 0.0});
        v.push_back(s.score);
    }
    for (auto& row : out) {
        const auto& v = by_method[row.method];
        row.count = static_cast<int>(v.size());
        double sum = 0.0;
        for (int x : v) sum += x;
        row.mean = sum / row.count;
        double ss = 0.0;
        for (int x : v) ss += (x - row.mean) * (x - row.mean);
        row.stddev = std::sqrt(ss / row.count);
    }
    return out;
}

std::string render_mos_table(std::span<const MosSummary> rows) {
    std::ostringstream md;
    md << "| Method | Average Score (higher is better) | Standard Deviation (lower is better) |\n|---|---|---|\n";
    for (const auto& r : rows) md << "| " << r.method << " | " << fmt(r.mean, 2) << " | " << fmt(r.stddev, 4) << " |\n";
    return md.str();
}

}  // namespace uw::bench
