// uwbench: command-line front end (enhance, metrics, runtime, train, report, serve).

#include <malloc.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "uwbench/bench.hpp"
#include "uwbench/error.hpp"
#include "uwbench/image.hpp"
#include "uwbench/image_io.hpp"
#include "uwbench/metrics.hpp"
#include "uwbench/model_io.hpp"
#include "uwbench/study.hpp"
#include "uwbench/study_http.hpp"
#include "uwbench/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw uw::IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_enhance(const fs::path& manifest_path, const std::string& methods, const std::string& model,
                const fs::path& out) {
    const auto manifest = uw::bench::load_manifest(manifest_path);
    std::optional<fs::path> model_path;
    if (!model.empty()) model_path = model;
    const auto list = uw::bench::parse_methods(methods, model_path);
    const auto report = uw::bench::run_benchmark(manifest, list, out, &std::cerr);
    std::cout << report.rows.size() << " results written to " << out.string();
    if (!report.skipped.empty()) std::cout << " (" << report.skipped.size() << " inputs skipped)";
    std::cout << "\n";
    return report.skipped.empty() ? 0 : 3;
}

int cmd_metrics(const fs::path& pairs) {
    const auto rows = uw::bench::parse_csv(slurp(pairs));
    const fs::path base = pairs.parent_path();
    auto resolve = [&](const std::string& s) { return fs::path(s).is_absolute() ? fs::path(s) : base / s; };
    std::cout << "result,reference,mse,psnr,ssim,uciqe,uiqm\n";
    using uw::metrics::format_value;
    auto opt = [](const std::optional<double>& v) { return v ? format_value(*v, 6) : std::string(); };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.empty() || (i == 0 && r[0] == "result")) continue;
        const uw::ImageBuf result = uw::load_image(resolve(r[0]));
        std::optional<uw::ImageBuf> ref;
        if (r.size() > 1 && !r[1].empty()) ref = uw::load_image(resolve(r[1]));
        const auto s = uw::metrics::score_pair(result, ref ? &*ref : nullptr);
        std::cout << uw::bench::csv_cell(r[0]) << "," << (r.size() > 1 ? uw::bench::csv_cell(r[1]) : "") << ","
                  << opt(s.mse) << "," << opt(s.psnr) << "," << opt(s.ssim) << "," << format_value(s.uciqe, 6) << ","
                  << format_value(s.uiqm, 6) << "\n";
    }
    return 0;
}

int cmd_runtime(int repeats, const std::string& methods, const std::string& model) {
    std::optional<fs::path> model_path;
    if (!model.empty()) model_path = model;
    const auto list = uw::bench::parse_methods(methods, model_path);
    std::cout << uw::bench::render_runtime(uw::bench::runtime_table(list, repeats));
    return 0;
}

template <class T>
void take(const json& j, const char* key, T& into) {
    if (j.contains(key)) into = j[key].get<T>();
}

int cmd_train(const fs::path& manifest_path, const std::string& config_path, const fs::path& out) {
    json cfg_json = json::object();
    fs::path cfg_base = fs::current_path();
    if (!config_path.empty()) {
        cfg_json = json::parse(slurp(config_path));
        cfg_base = fs::path(config_path).parent_path();
    }
    uw::net::ArchConfig arch;
    if (cfg_json.contains("arch")) {
        const json& a = cfg_json["arch"];
        take(a, "trunk_kernels", arch.trunk_kernels);
        take(a, "trunk_width", arch.trunk_width);
        take(a, "head_kernel", arch.head_kernel);
        take(a, "ftu_kernels", arch.ftu_kernels);
        take(a, "ftu_width", arch.ftu_width);
        take(a, "init_stddev", arch.init_stddev);
        take(a, "init_bias", arch.init_bias);
    }
    uw::net::TrainConfig tc;
    if (cfg_json.contains("train")) {
        const json& t = cfg_json["train"];
        take(t, "batch_size", tc.batch_size);
        take(t, "lr0", tc.lr0);
        take(t, "lr_decay", tc.lr_decay);
        take(t, "decay_every", tc.decay_every);
        take(t, "max_iters", tc.max_iters);
        take(t, "patch", tc.patch);
        take(t, "seed", tc.seed);
    }
    if (const char* env = std::getenv("UWBENCH_SEED")) {
        try {
            tc.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw uw::InvalidArgument(std::string("UWBENCH_SEED is not an unsigned integer: ") + env);
        }
    }
    tc.validate();

    uw::net::FeatureExtractor fx;
    const json ex = cfg_json.value("extractor", json::object());
    if (ex.is_string()) {
        const fs::path p = ex.get<std::string>();
        fx = uw::net::load_extractor(p.is_absolute() ? p : cfg_base / p);
    } else {
        fx = uw::net::random_extractor(ex.value("random_seed", 7ULL), ex.value("width1", 8), ex.value("width2", 16),
                                       ex.value("kernel", 3));
    }
    const bool use_augment = cfg_json.value("augment", false);
    const long long log_every = cfg_json.value("log_every", 10LL);

    const auto manifest = uw::bench::load_manifest(manifest_path);
    std::vector<uw::net::TrainingPair> data;
    for (const auto& e : manifest.entries) {
        if (!e.reference) continue;
        const uw::ImageBuf raw = uw::resize_bilinear(uw::load_image(e.raw), tc.patch, tc.patch);
        const uw::ImageBuf ref = uw::resize_bilinear(uw::load_image(*e.reference), tc.patch, tc.patch);
        if (use_augment) {
            for (const auto& [r, g] : uw::net::augment(raw, ref)) data.push_back(uw::net::make_training_pair(r, g));
        } else {
            data.push_back(uw::net::make_training_pair(raw, ref));
        }
    }
    if (data.empty()) throw uw::InvalidArgument("manifest has no entries with a reference image");
    std::cerr << "training on " << data.size() << " pairs, seed " << tc.seed << ", " << tc.max_iters << " steps\n";

    uw::net::WaterNetModel model = uw::net::make_model(arch, tc.seed);
    uw::net::train(model, fx, data, tc, [&](long long iter, double loss) {
        if (log_every > 0 && (iter % log_every == 0 || iter + 1 == tc.max_iters)) {
            std::cerr << "iter " << iter << " loss " << uw::metrics::format_value(loss, 6) << "\n";
        }
    });
    uw::net::save_model(model, out);
    std::cout << "model written to " << out.string() << "\n";
    return 0;
}

int cmd_report(const fs::path& dir) {
    const std::string md = uw::bench::render_report(uw::bench::read_report_dir(dir));
    std::ofstream(dir / "report.md", std::ios::binary | std::ios::trunc) << md;
    std::cout << md;
    return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const fs::path& catalog_path, const fs::path& log_path, const std::string& static_dir,
              const std::string& host, int port, uw::study::StudyConfig cfg) {
    uw::study::Study study(uw::study::load_catalog(catalog_path), cfg, log_path);
    httplib::Server server;
    std::optional<fs::path> ui;
    if (!static_dir.empty()) ui = static_dir;
    uw::study::install_routes(server, study, ui);
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    std::cerr << "study service on http://" << host << ":" << port << " (" << study.events_applied()
              << " events replayed)\n";
    if (!server.listen(host, port)) {
        std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    // Network passes allocate and free large tensors in a loop; keep them off mmap.
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);

    CLI::App app{"Underwater image enhancement benchmark toolkit"};
    app.require_subcommand(1);

    auto* enhance = app.add_subcommand("enhance", "Enhance and score every manifest entry with each method");
    std::string manifest, methods = "wb,he,gc", model, out;
    enhance->add_option("--manifest", manifest, "JSON-lines corpus manifest")->required();
    enhance->add_option("--methods", methods, "Comma list of wb, he, gc, waternet[:model]");
    enhance->add_option("--model", model, "Weight file for the waternet method");
    enhance->add_option("--out", out, "Output directory")->required();

    auto* metrics = app.add_subcommand("metrics", "Score result images, optionally against references");
    std::string pairs;
    metrics->add_option("--pairs", pairs, "CSV of result,reference paths")->required();

    auto* runtime = app.add_subcommand("runtime", "Mean runtime per method on 500x500, 640x480 and 1280x720");
    int repeats = 3;
    std::string rt_methods = "wb,he,gc", rt_model;
    runtime->add_option("--repeats", repeats, "Runs per method and size (at least 3)");
    runtime->add_option("--methods", rt_methods, "Comma list of methods");
    runtime->add_option("--model", rt_model, "Weight file for the waternet method");

    auto* train = app.add_subcommand("train", "Train a model on the manifest's reference pairs");
    std::string train_manifest, config, train_out;
    train->add_option("--manifest", train_manifest, "JSON-lines manifest; entries need a reference")->required();
    train->add_option("--config", config, "JSON training config");
    train->add_option("--out", train_out, "Output weight file")->required();

    auto* report = app.add_subcommand("report", "Re-render report.md from an enhance output directory");
    std::string from;
    report->add_option("--from", from, "Directory written by enhance")->required();

    auto* serve = app.add_subcommand("serve", "Run the pairwise-comparison study service");
    std::string catalog, log_path = "study-events.jsonl", static_dir, host = "127.0.0.1";
    int port = 8080;
    uw::study::StudyConfig scfg;
    serve->add_option("--catalog", catalog, "Study catalog JSON")->required();
    serve->add_option("--log", log_path, "Append-only event log");
    serve->add_option("--static", static_dir, "UI bundle directory, served under /ui/");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port");
    serve->add_option("--candidates", scfg.candidate_count, "Results per image");
    serve->add_option("--raters-required", scfg.raters_required, "Closed tournaments needed per verdict");
    serve->add_option("--seed", scfg.seed, "Seed for comparison orders");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*enhance) return cmd_enhance(manifest, methods, model, out);
        if (*metrics) return cmd_metrics(pairs);
        if (*runtime) return cmd_runtime(repeats, rt_methods, rt_model);
        if (*train) return cmd_train(train_manifest, config, train_out);
        if (*report) return cmd_report(from);
        if (*serve) return cmd_serve(catalog, log_path, static_dir, host, port, scfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
