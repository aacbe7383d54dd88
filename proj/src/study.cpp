#include "uwbench/study.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "uwbench/error.hpp"

namespace uw::study {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void StudyConfig::validate() const {
    if (candidate_count < 2) throw InvalidArgument("candidate_count must be at least 2");
    if (raters_required < 1) throw InvalidArgument("raters_required must be at least 1");
}

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::string get_string(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
        throw FormatError(where + ": missing string field \"" + key + "\"");
    }
    return j[key].get<std::string>();
}

// FNV-1a, used only to derive a per-(image, rater) seed.
std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Unbiased draw in [0, n) from a 64-bit engine.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) return r % n;
    }
}

}  // namespace

Catalog parse_catalog(std::string_view json_text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("catalog: ") + e.what());
    }
    if (!j.is_object() || !j.contains("images") || !j["images"].is_array()) {
        throw FormatError("catalog: expected an object with an \"images\" array");
    }
    Catalog c;
    std::set<std::string> image_ids, candidate_ids;
    for (const auto& ji : j["images"]) {
        StudyImage img;
        img.id = get_string(ji, "id", "catalog image");
        img.raw = resolve(base_dir, get_string(ji, "raw", "catalog image " + img.id));
        if (!image_ids.insert(img.id).second) throw FormatError("catalog: duplicate image id " + img.id);
        if (!ji.contains("candidates") || !ji["candidates"].is_array()) {
            throw FormatError("catalog image " + img.id + ": missing candidates");
        }
        std::set<std::string> methods;
        for (const auto& jc : ji["candidates"]) {
            Candidate cand;
            cand.id = get_string(jc, "id", "catalog image " + img.id);
            cand.method = get_string(jc, "method", "candidate " + cand.id);
            cand.path = resolve(base_dir, get_string(jc, "path", "candidate " + cand.id));
            if (!candidate_ids.insert(cand.id).second) throw FormatError("catalog: duplicate candidate id " + cand.id);
            if (!methods.insert(cand.method).second) {
                throw FormatError("catalog image " + img.id + ": method " + cand.method + " listed twice");
            }
            img.candidates.push_back(std::move(cand));
        }
        c.images.push_back(std::move(img));
    }
    if (j.contains("raters")) {
        if (!j["raters"].is_array()) throw FormatError("catalog: \"raters\" must be an array");
        std::set<std::string> seen;
        for (const auto& r : j["raters"]) {
            if (!r.is_string()) throw FormatError("catalog: rater ids must be strings");
            if (!seen.insert(r.get<std::string>()).second) throw FormatError("catalog: duplicate rater");
            c.raters.push_back(r.get<std::string>());
        }
    }
    return c;
}

Catalog load_catalog(const fs::path& path) { return parse_catalog(read_text(path), path.parent_path()); }

std::string_view to_string(Satisfaction s) {
    return s == Satisfaction::satisfied ? "satisfied" : "dissatisfied";
}

Satisfaction parse_satisfaction(std::string_view s) {
    if (s == "satisfied") return Satisfaction::satisfied;
    if (s == "dissatisfied") return Satisfaction::dissatisfied;
    throw InvalidArgument("label must be \"satisfied\" or \"dissatisfied\"");
}

std::optional<std::pair<std::string, std::string>> TournamentState::current_pair() const {
    if (final_pick || next_index >= order.size()) return std::nullopt;
    return std::make_pair(champion, order[next_index]);
}

std::vector<std::string> tournament_order(std::span<const std::string> candidate_ids, std::uint64_t seed,
                                          std::string_view image_id, std::string_view rater_id) {
    std::vector<std::string> order(candidate_ids.begin(), candidate_ids.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int i = 0; i < 8; ++i) h = fnv1a(h, std::string(1, static_cast<char>((seed >> (8 * i)) & 0xff)));
    h = fnv1a(h, image_id);
    h = fnv1a(h, std::string_view("\0", 1));
    h = fnv1a(h, rater_id);
    std::mt19937_64 rng(h);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[bounded(rng, i)]);
    }
    return order;
}

TournamentState new_tournament(std::string id, std::string image_id, std::string rater_id,
                               std::vector<std::string> order) {
    if (order.size() < 2) throw InvalidArgument("a tournament needs at least two candidates");
    TournamentState t;
    t.id = std::move(id);
    t.image_id = std::move(image_id);
    t.rater_id = std::move(rater_id);
    t.order = std::move(order);
    t.champion = t.order[0];
    t.next_index = 1;
    return t;
}

void apply_choice(TournamentState& t, std::string_view chosen) {
    const auto pair = t.current_pair();
    if (!pair) throw StateError("tournament " + t.id + " has no open comparison");
    if (chosen != pair->first && chosen != pair->second) {
        throw InvalidArgument("candidate " + std::string(chosen) + " is not in the current pair");
    }
    t.champion = std::string(chosen);
    ++t.next_index;
    ++t.comparisons_done;
    if (t.next_index >= t.order.size()) t.final_pick = t.champion;
}

void apply_satisfaction(TournamentState& t, Satisfaction label) {
    if (!t.final_pick) throw StateError("tournament " + t.id + " has no final pick yet");
    if (t.satisfaction) throw StateError("tournament " + t.id + " is already labelled");
    t.satisfaction = label;
}

bool demote(int winner_votes, int dissatisfied) {
    // D > V/2 without leaving the integers.
    return 2 * dissatisfied > winner_votes;
}

ImageVerdict decide(std::string_view image_id, std::span<const std::string> candidate_ids,
                    std::span<const TournamentState> closed) {
    ImageVerdict v;
    v.image_id = std::string(image_id);
    for (const auto& c : candidate_ids) v.votes[c] = 0;
    for (const auto& t : closed) {
        if (!t.closed() || t.image_id != image_id) continue;
        ++v.votes[*t.final_pick];
    }
    if (v.votes.empty()) throw StateError("no candidates for image " + v.image_id);
    // std::map iterates in id order, so the first maximum is the smallest id.
    int best = -1;
    for (const auto& [id, n] : v.votes) {
        if (n > best) {
            best = n;
            v.winner = id;
        }
    }
    v.winner_votes = best;
    for (const auto& t : closed) {
        if (t.closed() && t.image_id == image_id && *t.final_pick == v.winner &&
            *t.satisfaction == Satisfaction::dissatisfied) {
            ++v.dissatisfied;
        }
    }
    v.challenging = demote(v.winner_votes, v.dissatisfied);
    if (!v.challenging) v.reference = v.winner;
    return v;
}

std::string serialize_verdict(const ImageVerdict& v) {
    ojson j;
    j["image_id"] = v.image_id;
    j["winner"] = v.winner;
    j["reference"] = v.reference ? ojson(*v.reference) : ojson(nullptr);
    j["challenging"] = v.challenging;
    j["winner_votes"] = v.winner_votes;
    j["dissatisfied"] = v.dissatisfied;
    ojson votes = ojson::object();
    for (const auto& [id, n] : v.votes) votes[id] = n;
    j["votes"] = std::move(votes);
    return j.dump();
}

Study::Study(Catalog catalog, StudyConfig config, std::optional<fs::path> log_path)
    : catalog_(std::move(catalog)), config_(config), log_path_(std::move(log_path)) {
    config_.validate();
    for (std::size_t i = 0; i < catalog_.images.size(); ++i) {
        const StudyImage& img = catalog_.images[i];
        if (static_cast<int>(img.candidates.size()) != config_.candidate_count) {
            throw InvalidArgument("image " + img.id + " has " + std::to_string(img.candidates.size()) +
                                  " candidates, study expects " + std::to_string(config_.candidate_count));
        }
        if (!image_index_.emplace(img.id, i).second) throw InvalidArgument("duplicate image id " + img.id);
        for (std::size_t c = 0; c < img.candidates.size(); ++c) {
            if (!candidate_index_.emplace(img.candidates[c].id, std::make_pair(i, c)).second) {
                throw InvalidArgument("duplicate candidate id " + img.candidates[c].id);
            }
        }
    }
    if (log_path_) {
        replay();
        log_ = std::fopen(log_path_->c_str(), "ab");
        if (!log_) throw IoError("cannot open event log " + log_path_->string() + ": " + std::strerror(errno));
    }
}

Study::~Study() {
    if (log_) std::fclose(log_);
}

void Study::replay() {
    if (!fs::exists(*log_path_)) return;
    const std::string text = read_text(*log_path_);
    std::size_t pos = 0, good = 0;
    int lineno = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        ++lineno;
        if (nl == std::string::npos) break;  // torn tail: never acknowledged, drop it
        const std::string line = text.substr(pos, nl - pos);
        const bool last = nl + 1 >= text.size();
        try {
            if (!line.empty()) apply_event(line);
        } catch (const json::exception& e) {
            if (last) break;
            throw CorruptionError("event log line " + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw CorruptionError("event log line " + std::to_string(lineno) + ": " + e.what());
        }
        pos = nl + 1;
        good = pos;
    }
    if (good < text.size()) fs::resize_file(*log_path_, good);
}

void Study::append(const std::string& line) {
    if (!log_) return;
    const std::string rec = line + "\n";
    if (std::fwrite(rec.data(), 1, rec.size(), log_) != rec.size() || std::fflush(log_) != 0) {
        throw IoError("event log append failed: " + std::string(std::strerror(errno)));
    }
    ::fsync(::fileno(log_));
}

void Study::check_rater(const std::string& rater_id) const {
    if (std::find(catalog_.raters.begin(), catalog_.raters.end(), rater_id) == catalog_.raters.end()) {
        throw NotFoundError("unknown rater " + rater_id);
    }
}

const StudyImage& Study::image(const std::string& image_id) const {
    const auto it = image_index_.find(image_id);
    if (it == image_index_.end()) throw NotFoundError("unknown image " + image_id);
    return catalog_.images[it->second];
}

std::pair<const StudyImage*, const Candidate*> Study::candidate(const std::string& candidate_id) const {
    const auto it = candidate_index_.find(candidate_id);
    if (it == candidate_index_.end()) throw NotFoundError("unknown candidate " + candidate_id);
    const StudyImage& img = catalog_.images[it->second.first];
    return {&img, &img.candidates[it->second.second]};
}

// Event application. Each checks everything first and mutates last, so a rejected event
// leaves no trace; live calls append to the log between the two.

TournamentState Study::start_locked(const std::string& tournament_id, const std::string& image_id,
                                    const std::string& rater_id, std::vector<std::string> order, bool live) {
    const StudyImage& img = image(image_id);
    check_rater(rater_id);
    if (by_image_rater_.count({image_id, rater_id})) {
        throw StateError("rater " + rater_id + " already has a tournament for image " + image_id);
    }
    if (tournament_index_.count(tournament_id)) throw StateError("duplicate tournament id " + tournament_id);
    std::vector<std::string> ids;
    for (const auto& c : img.candidates) ids.push_back(c.id);
    if (live) {
        order = tournament_order(ids, config_.seed, image_id, rater_id);
    } else {
        std::vector<std::string> a = order, b = ids;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) throw InvalidArgument("logged order is not a permutation of the image's candidates");
    }
    TournamentState t = new_tournament(tournament_id, image_id, rater_id, std::move(order));
    if (live) {
        ojson ev;
        ev["type"] = "tournament_started";
        ev["tournament_id"] = t.id;
        ev["image_id"] = t.image_id;
        ev["rater_id"] = t.rater_id;
        ev["order"] = t.order;
        append(ev.dump());
    }
    tournament_index_[t.id] = tournaments_.size();
    by_image_rater_[{image_id, rater_id}] = tournaments_.size();
    tournaments_.push_back(t);
    ++events_;
    return t;
}

TournamentState Study::choice_locked(const std::string& tournament_id, const std::string& candidate_id, bool live) {
    const auto it = tournament_index_.find(tournament_id);
    if (it == tournament_index_.end()) throw NotFoundError("unknown tournament " + tournament_id);
    TournamentState next = tournaments_[it->second];
    apply_choice(next, candidate_id);
    if (live) {
        ojson ev;
        ev["type"] = "choice";
        ev["tournament_id"] = tournament_id;
        ev["candidate_id"] = candidate_id;
        append(ev.dump());
    }
    tournaments_[it->second] = next;
    ++events_;
    return next;
}

TournamentState Study::satisfaction_locked(const std::string& tournament_id, Satisfaction label, bool live) {
    const auto it = tournament_index_.find(tournament_id);
    if (it == tournament_index_.end()) throw NotFoundError("unknown tournament " + tournament_id);
    TournamentState next = tournaments_[it->second];
    apply_satisfaction(next, label);
    if (live) {
        ojson ev;
        ev["type"] = "satisfaction";
        ev["tournament_id"] = tournament_id;
        ev["label"] = std::string(to_string(label));
        append(ev.dump());
    }
    tournaments_[it->second] = next;
    ++events_;
    return next;
}

MosResult Study::mos_locked(const std::string& image_id, const std::string& rater_id, const std::string& method,
                            int score, bool live) {
    const StudyImage& img = image(image_id);
    check_rater(rater_id);
    if (score < 1 || score > 5) throw InvalidArgument("score must be an integer from 1 to 5");
    const bool known = std::any_of(img.candidates.begin(), img.candidates.end(),
                                   [&](const Candidate& c) { return c.method == method; });
    if (!known) throw NotFoundError("image " + image_id + " has no result from method " + method);
    if (live) {
        ojson ev;
        ev["type"] = "mos";
        ev["image_id"] = image_id;
        ev["rater_id"] = rater_id;
        ev["method"] = method;
        ev["score"] = score;
        append(ev.dump());
    }
    auto [it, fresh] = mos_.insert_or_assign({image_id, rater_id, method}, bench::MosScore{image_id, rater_id, method, score});
    (void)it;
    ++events_;
    return {!fresh};
}

void Study::apply_event(const std::string& line) {
    const json ev = json::parse(line);
    const std::string type = get_string(ev, "type", "event");
    if (type == "tournament_started") {
        if (!ev.contains("order") || !ev["order"].is_array()) throw FormatError("event: missing order");
        start_locked(get_string(ev, "tournament_id", "event"), get_string(ev, "image_id", "event"),
                     get_string(ev, "rater_id", "event"), ev["order"].get<std::vector<std::string>>(), false);
    } else if (type == "choice") {
        choice_locked(get_string(ev, "tournament_id", "event"), get_string(ev, "candidate_id", "event"), false);
    } else if (type == "satisfaction") {
        satisfaction_locked(get_string(ev, "tournament_id", "event"),
                            parse_satisfaction(get_string(ev, "label", "event")), false);
    } else if (type == "mos") {
        if (!ev.contains("score") || !ev["score"].is_number_integer()) throw FormatError("event: missing score");
        mos_locked(get_string(ev, "image_id", "event"), get_string(ev, "rater_id", "event"),
                   get_string(ev, "method", "event"), ev["score"].get<int>(), false);
    } else {
        throw FormatError("unknown event type " + type);
    }
}

TournamentState Study::start_tournament(const std::string& image_id, const std::string& rater_id) {
    std::unique_lock lock(mu_);
    return start_locked("t" + std::to_string(tournaments_.size() + 1), image_id, rater_id, {}, true);
}

TournamentState Study::submit_choice(const std::string& tournament_id, const std::string& candidate_id) {
    std::unique_lock lock(mu_);
    return choice_locked(tournament_id, candidate_id, true);
}

TournamentState Study::submit_satisfaction(const std::string& tournament_id, Satisfaction label) {
    std::unique_lock lock(mu_);
    return satisfaction_locked(tournament_id, label, true);
}

MosResult Study::record_mos(const std::string& image_id, const std::string& rater_id, const std::string& method,
                            int score) {
    std::unique_lock lock(mu_);
    return mos_locked(image_id, rater_id, method, score, true);
}

ImageVerdict Study::finalize_image(const std::string& image_id) const {
    const StudyImage& img = image(image_id);
    std::shared_lock lock(mu_);
    std::vector<TournamentState> closed;
    for (const auto& t : tournaments_) {
        if (t.image_id == image_id && t.closed()) closed.push_back(t);
    }
    if (static_cast<int>(closed.size()) < config_.raters_required) {
        throw StateError("image " + image_id + " has " + std::to_string(closed.size()) + " closed tournaments, " +
                         std::to_string(config_.raters_required) + " required");
    }
    std::vector<std::string> ids;
    for (const auto& c : img.candidates) ids.push_back(c.id);
    return decide(image_id, ids, closed);
}

TournamentState Study::tournament(const std::string& tournament_id) const {
    std::shared_lock lock(mu_);
    const auto it = tournament_index_.find(tournament_id);
    if (it == tournament_index_.end()) throw NotFoundError("unknown tournament " + tournament_id);
    return tournaments_[it->second];
}

std::optional<TournamentState> Study::find_tournament(const std::string& image_id, const std::string& rater_id) const {
    std::shared_lock lock(mu_);
    const auto it = by_image_rater_.find({image_id, rater_id});
    if (it == by_image_rater_.end()) return std::nullopt;
    return tournaments_[it->second];
}

std::vector<TournamentState> Study::tournaments() const {
    std::shared_lock lock(mu_);
    return tournaments_;
}

std::vector<bench::MosScore> Study::mos_scores() const {
    std::shared_lock lock(mu_);
    std::vector<bench::MosScore> out;
    for (const auto& [key, s] : mos_) out.push_back(s);
    return out;
}

int Study::closed_count(const std::string& image_id) const {
    std::shared_lock lock(mu_);
    int n = 0;
    for (const auto& t : tournaments_) n += t.image_id == image_id && t.closed();
    return n;
}

std::size_t Study::events_applied() const {
    std::shared_lock lock(mu_);
    return events_;
}

}  // namespace uw::study
