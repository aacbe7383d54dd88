#pragma once

#include <functional>
#include <string>
#include <vector>

#include "uwbench/study.hpp"

namespace uwtest {

inline const std::vector<std::string>& sim_methods() {
    static const std::vector<std::string> m = {"fusion", "retinex", "dcp", "wb", "he", "gc",
                                               "dive+", "gdcp", "ibla", "udcp", "ulap", "clahe"};
    return m;
}

// Catalog with `images` images of `candidates` candidates each; paths are placeholders
// unless dir points at real files.
inline uw::study::Catalog sim_catalog(int images, int raters, int candidates) {
    uw::study::Catalog c;
    for (int i = 0; i < images; ++i) {
        uw::study::StudyImage img;
        img.id = "im" + std::to_string(i);
        img.raw = "raw/" + img.id + ".png";
        for (int k = 0; k < candidates; ++k) {
            const std::string cid = "c" + std::to_string(i) + "_" + (k < 10 ? "0" : "") + std::to_string(k);
            img.candidates.push_back({cid, sim_methods()[k], "results/" + cid + ".png"});
        }
        c.images.push_back(std::move(img));
    }
    for (int r = 0; r < raters; ++r) c.raters.push_back("r" + std::to_string(r));
    return c;
}

inline std::uint64_t sim_hash(const std::string& a, const std::string& b) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char ch : a + "|" + b) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ULL;
    }
    return h;
}

// Deterministic rater: strict preference by a per-rater hash, dissatisfied for about a
// third of the images.
struct SimRater {
    std::string id;

    std::string prefer(const std::string& a, const std::string& b) const {
        return sim_hash(id, a) >= sim_hash(id, b) ? a : b;
    }
    uw::study::Satisfaction label(const std::string& image_id) const {
        return sim_hash(id, image_id) % 3 == 0 ? uw::study::Satisfaction::dissatisfied
                                               : uw::study::Satisfaction::satisfied;
    }
    int mos(const std::string& image_id, const std::string& method) const {
        return static_cast<int>(sim_hash(id + image_id, method) % 5) + 1;
    }
};

// Drives every (image, rater) session to completion, resuming whatever state the study
// already holds, then records two MOS scores per session. Idempotent.
inline void sim_drive(uw::study::Study& s) {
    using namespace uw::study;
    for (const auto& img : s.catalog().images) {
        for (const auto& rid : s.catalog().raters) {
            const SimRater rater{rid};
            auto t = s.find_tournament(img.id, rid);
            if (!t) t = s.start_tournament(img.id, rid);
            while (auto pair = t->current_pair()) t = s.submit_choice(t->id, rater.prefer(pair->first, pair->second));
            if (!t->closed()) t = s.submit_satisfaction(t->id, rater.label(img.id));
            const auto existing = s.mos_scores();
            for (int k = 0; k < 2; ++k) {
                const std::string& method = img.candidates[k].method;
                bool have = false;
                for (const auto& m : existing) have |= m.image_id == img.id && m.rater_id == rid && m.method == method;
                if (!have) s.record_mos(img.id, rid, method, rater.mos(img.id, method));
            }
        }
    }
}

inline std::string sim_verdicts(const uw::study::Study& s) {
    std::string out;
    for (const auto& img : s.catalog().images) out += uw::study::serialize_verdict(s.finalize_image(img.id)) + "\n";
    return out;
}

}  // namespace uwtest
