#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "uwbench/bench.hpp"

namespace uw::study {

namespace fs = std::filesystem;

struct StudyConfig {
    int candidate_count = 12;
    int raters_required = 50;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Candidate {
    std::string id;  // opaque; never reveals the method
    std::string method;
    fs::path path;
};

struct StudyImage {
    std::string id;
    fs::path raw;
    std::vector<Candidate> candidates;
};

struct Catalog {
    std::vector<StudyImage> images;
    std::vector<std::string> raters;
};

// {"images": [{"id", "raw", "candidates": [{"id", "method", "path"}]}], "raters": [...]}
// Relative paths resolve against base_dir.
Catalog parse_catalog(std::string_view json_text, const fs::path& base_dir);
Catalog load_catalog(const fs::path& path);

enum class Satisfaction { satisfied, dissatisfied };

std::string_view to_string(Satisfaction s);
Satisfaction parse_satisfaction(std::string_view s);

// Winner-stays bracket over a fixed permutation: the champion meets order[next_index]
// until every candidate has been seen.
struct TournamentState {
    std::string id;
    std::string image_id;
    std::string rater_id;
    std::vector<std::string> order;
    std::string champion;
    std::size_t next_index = 1;
    int comparisons_done = 0;
    std::optional<std::string> final_pick;
    std::optional<Satisfaction> satisfaction;

    int comparisons_needed() const { return static_cast<int>(order.size()) - 1; }
    bool closed() const { return satisfaction.has_value(); }
    // (champion, challenger) while comparisons remain.
    std::optional<std::pair<std::string, std::string>> current_pair() const;
};

// Seeded permutation for one (image, rater); stable across platforms and restarts.
std::vector<std::string> tournament_order(std::span<const std::string> candidate_ids, std::uint64_t seed,
                                          std::string_view image_id, std::string_view rater_id);

TournamentState new_tournament(std::string id, std::string image_id, std::string rater_id,
                               std::vector<std::string> order);
// Throws InvalidArgument when `chosen` is not on screen and StateError when finished.
void apply_choice(TournamentState& t, std::string_view chosen);
void apply_satisfaction(TournamentState& t, Satisfaction label);

struct ImageVerdict {
    std::string image_id;
    std::string winner;
    std::optional<std::string> reference;  // unset when challenging
    bool challenging = false;
    std::map<std::string, int> votes;  // every candidate, ordered by id
    int winner_votes = 0;
    int dissatisfied = 0;  // among the raters who picked the winner
};

// Majority vote over closed tournaments (ties go to the smallest candidate id); the image
// becomes challenging when strictly more than half the winner's voters were dissatisfied.
ImageVerdict decide(std::string_view image_id, std::span<const std::string> candidate_ids,
                    std::span<const TournamentState> closed);
bool demote(int winner_votes, int dissatisfied);

// Canonical JSON; equal verdicts give equal bytes.
std::string serialize_verdict(const ImageVerdict& v);

struct MosResult {
    bool overwritten = false;
};

// The study state plus its append-only event log. Every mutation is validated, appended
// to the log and only then applied, under one writer lock. Reads take a shared lock.
class Study {
public:
    // With a log path the existing log is replayed first; a torn final line (crash during
    // append) is dropped and the file trimmed back to the last complete event.
    Study(Catalog catalog, StudyConfig config, std::optional<fs::path> log_path = std::nullopt);
    ~Study();
    Study(const Study&) = delete;
    Study& operator=(const Study&) = delete;

    TournamentState start_tournament(const std::string& image_id, const std::string& rater_id);
    TournamentState submit_choice(const std::string& tournament_id, const std::string& candidate_id);
    TournamentState submit_satisfaction(const std::string& tournament_id, Satisfaction label);
    ImageVerdict finalize_image(const std::string& image_id) const;
    // Duplicate (image, rater, method) replaces the earlier score.
    MosResult record_mos(const std::string& image_id, const std::string& rater_id, const std::string& method,
                         int score);

    TournamentState tournament(const std::string& tournament_id) const;
    std::optional<TournamentState> find_tournament(const std::string& image_id, const std::string& rater_id) const;
    std::vector<TournamentState> tournaments() const;
    std::vector<bench::MosScore> mos_scores() const;
    int closed_count(const std::string& image_id) const;
    std::size_t events_applied() const;

    const Catalog& catalog() const { return catalog_; }
    const StudyConfig& config() const { return config_; }
    const StudyImage& image(const std::string& image_id) const;
    // The candidate and the image it belongs to.
    std::pair<const StudyImage*, const Candidate*> candidate(const std::string& candidate_id) const;

private:
    void replay();
    void append(const std::string& line);
    void apply_event(const std::string& line);
    void check_rater(const std::string& rater_id) const;

    // Callers hold the writer lock. `live` appends to the log; replay passes false.
    TournamentState start_locked(const std::string& tournament_id, const std::string& image_id,
                                 const std::string& rater_id, std::vector<std::string> order, bool live);
    TournamentState choice_locked(const std::string& tournament_id, const std::string& candidate_id, bool live);
    TournamentState satisfaction_locked(const std::string& tournament_id, Satisfaction label, bool live);
    MosResult mos_locked(const std::string& image_id, const std::string& rater_id, const std::string& method,
                         int score, bool live);

    Catalog catalog_;
    StudyConfig config_;
    std::optional<fs::path> log_path_;
    std::FILE* log_ = nullptr;

    std::map<std::string, std::size_t> image_index_;
    std::map<std::string, std::pair<std::size_t, std::size_t>> candidate_index_;

    mutable std::shared_mutex mu_;
    std::vector<TournamentState> tournaments_;
    std::map<std::string, std::size_t> tournament_index_;
    std::map<std::pair<std::string, std::string>, std::size_t> by_image_rater_;
    std::map<std::tuple<std::string, std::string, std::string>, bench::MosScore> mos_;
    std::size_t events_ = 0;
};

}  // namespace uw::study
