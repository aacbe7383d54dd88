#include <gtest/gtest.h>

#include <sstream>

#include "corpus.hpp"
#include "uwbench/bench.hpp"
#include "uwbench/error.hpp"

namespace b = uw::bench;

TEST(Manifest, ParsesAndResolvesRelativePaths) {
    const auto m = b::parse_manifest(
        "# comment\n\n{\"raw\": \"a/x.png\", \"reference\": \"r/x.png\"}\n"
        "{\"raw\": \"/abs/y.png\", \"tags\": [\"challenging\"], \"id\": \"why\"}\n",
        "/data");
    ASSERT_EQ(m.entries.size(), 2u);
    EXPECT_EQ(m.entries[0].id, "x");
    EXPECT_EQ(m.entries[0].raw, std::filesystem::path("/data/a/x.png"));
    EXPECT_EQ(*m.entries[0].reference, std::filesystem::path("/data/r/x.png"));
    EXPECT_EQ(m.entries[1].id, "why");
    EXPECT_TRUE(m.entries[1].challenging());
    EXPECT_FALSE(m.entries[1].reference);
}

TEST(Manifest, RejectsBadInput) {
    EXPECT_THROW(b::parse_manifest("{\"raw\": 3}\n", "."), uw::FormatError);
    EXPECT_THROW(b::parse_manifest("not json\n", "."), uw::FormatError);
    EXPECT_THROW(b::parse_manifest("{\"raw\": \"a.png\"}\n{\"raw\": \"b/a.png\"}\n", "."), uw::InvalidArgument);
    EXPECT_THROW(b::parse_manifest("{\"raw\": \"a.png\", \"reference\": \"r.png\", \"tags\": [\"challenging\"]}\n", "."),
                 uw::InvalidArgument);
    EXPECT_THROW(b::parse_manifest("{\"raw\": \"a.png\", \"id\": \"../up\"}\n", "."), uw::InvalidArgument);
}

TEST(Methods, ParseList) {
    const auto ms = b::parse_methods("wb, he,gc");
    ASSERT_EQ(ms.size(), 3u);
    EXPECT_EQ(ms[2].name, "gc");
    EXPECT_THROW(b::parse_methods("wb,wb"), uw::InvalidArgument);
    EXPECT_THROW(b::parse_methods("sharpen"), uw::InvalidArgument);
    EXPECT_THROW(b::make_method("waternet"), uw::InvalidArgument);
}

TEST(Benchmark, FifteenRowsAndDeterministicScores) {
    uwtest::TempDir dir("bench");
    const auto manifest = b::load_manifest(uwtest::write_corpus(dir / "corpus"));
    const auto methods = b::parse_methods("wb,he,gc");
    const auto r1 = b::run_benchmark(manifest, methods, dir / "out1");
    const auto r2 = b::run_benchmark(manifest, methods, dir / "out2");
    ASSERT_EQ(r1.rows.size(), 15u);
    EXPECT_TRUE(r1.skipped.empty());
    EXPECT_EQ(uwtest::read_file(dir / "out1/scores.csv"), uwtest::read_file(dir / "out2/scores.csv"));
    for (const auto& row : r1.rows) {
        EXPECT_TRUE(std::filesystem::exists(dir / "out1" / row.output)) << row.output;
        EXPECT_EQ(uwtest::read_file(dir / "out1" / row.output), uwtest::read_file(dir / "out2" / row.output));
        const bool has_ref = row.image_id < "img3";
        EXPECT_EQ(row.scores.mse.has_value(), has_ref) << row.image_id;
        EXPECT_EQ(row.scores.ssim.has_value(), has_ref) << row.image_id;
    }
    const std::string csv = uwtest::read_file(dir / "out1/scores.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "image_id,method,output,mse,psnr,ssim,uciqe,uiqm");
    EXPECT_NE(csv.find("img4,gc,gc/img4.png,,,,"), std::string::npos);
}

TEST(Benchmark, ReportReadsBackWhatWasWritten) {
    uwtest::TempDir dir("bench");
    const auto manifest = b::load_manifest(uwtest::write_corpus(dir / "corpus"));
    const auto report = b::run_benchmark(manifest, b::parse_methods("gc"), dir / "out");
    const auto back = b::read_report_dir(dir / "out");
    ASSERT_EQ(back.rows.size(), report.rows.size());
    EXPECT_EQ(b::scores_csv(back), b::scores_csv(report));
    const auto s = b::summarize(back);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].images, 5);
    EXPECT_EQ(s[0].with_reference, 3);
    EXPECT_NE(uwtest::read_file(dir / "out/report.md").find("gc"), std::string::npos);
}

TEST(Benchmark, UnreadableInputIsSkippedWithWarning) {
    uwtest::TempDir dir("bench");
    const auto path = uwtest::write_corpus(dir / "corpus");
    uwtest::write_file(dir / "corpus/raw/img1.png", "broken");
    std::ostringstream log;
    const auto report = b::run_benchmark(b::load_manifest(path), b::parse_methods("wb"), dir / "out", &log);
    EXPECT_EQ(report.rows.size(), 4u);
    ASSERT_EQ(report.skipped.size(), 1u);
    EXPECT_EQ(report.skipped[0].image_id, "img1");
    EXPECT_NE(log.str().find("img1"), std::string::npos);
    EXPECT_NE(uwtest::read_file(dir / "out/skipped.csv").find("img1"), std::string::npos);
}

TEST(Csv, QuotingRoundTrip) {
    const std::string line = b::csv_cell("a,b") + "," + b::csv_cell("say \"hi\"") + "," + b::csv_cell("plain") + "\n";
    const auto rows = b::parse_csv(line);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"a,b", "say \"hi\"", "plain"}));
    EXPECT_THROW(b::parse_csv("\"open\n"), uw::FormatError);
}

TEST(WinTable, SingleMethodTakesEverything) {
    const std::vector<std::string> refs(10, "dive+");
    const auto w = b::win_percentages(refs, std::vector<std::string>{"fusion", "dive+"});
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(w[0].method, "fusion");
    EXPECT_EQ(w[0].percent, 0.0);
    EXPECT_EQ(w[1].percent, 100.0);
}

TEST(WinTable, SimulatedStudySumsToHundred) {
    std::mt19937_64 rng(1);
    const std::vector<std::string> methods = {"fusion", "retinex", "dive+", "gc", "wb", "he"};
    std::vector<std::string> refs;
    for (int i = 0; i < 50; ++i) refs.push_back(methods[rng() % methods.size()]);
    const auto w = b::win_percentages(refs, methods);
    double total = 0;
    for (const auto& s : w) total += s.percent;
    EXPECT_NEAR(total, 100.0, 1e-9);
    const std::string md = b::render_win_table(w);
    EXPECT_EQ(md.substr(0, md.find('\n')), "| Method | Percentage (%) |");
}

TEST(WinTable, PublishedShareFormatting) {
    std::vector<std::string> refs(391, "dive+");
    refs.resize(890, "other");
    const auto w = b::win_percentages(refs);
    EXPECT_NE(b::render_win_table(w).find("| dive+ | 43.93 |"), std::string::npos);
}

TEST(Mos, MeanAndPopulationStddev) {
    const std::vector<b::MosScore> s = {{"i1", "r1", "a", 1}, {"i1", "r2", "a", 5}, {"i1", "r1", "b", 3},
                                        {"i2", "r1", "b", 3}};
    const auto m = b::mos_aggregate(s);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m[0].method, "a");
    EXPECT_DOUBLE_EQ(m[0].mean, 3.0);
    EXPECT_DOUBLE_EQ(m[0].stddev, 2.0);
    EXPECT_DOUBLE_EQ(m[1].stddev, 0.0);
    EXPECT_NE(b::render_mos_table(m).find("| a | 3.00 | 2.0000 |"), std::string::npos);
    EXPECT_THROW(b::mos_aggregate(std::vector<b::MosScore>{{"i", "r", "a", 6}}), uw::InvalidArgument);
    EXPECT_THROW(b::mos_aggregate(std::vector<b::MosScore>{{"i", "r", "a", 0}}), uw::InvalidArgument);
}

TEST(Runtime, TableShape) {
    const auto methods = b::parse_methods("wb,gc");
    const b::RuntimeSize sizes[] = {{16, 12}, {20, 20}};
    const auto t = b::runtime_table(methods, 3, sizes, 1);
    ASSERT_EQ(t.methods.size(), 2u);
    ASSERT_EQ(t.mean_seconds.size(), 2u);
    for (std::size_t m = 0; m < 2; ++m) {
        ASSERT_EQ(t.mean_seconds[m].size(), 2u);
        for (std::size_t s = 0; s < 2; ++s) EXPECT_GE(t.mean_seconds[m][s], t.min_seconds[m][s]);
    }
    EXPECT_NE(b::render_runtime(t).find("| Method | 16 x 12 | 20 x 20 |"), std::string::npos);
    EXPECT_THROW(b::runtime_table(methods, 2, sizes), uw::InvalidArgument);
}
