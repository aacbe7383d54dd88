#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "uwbench/study.hpp"

namespace httplib {
class Server;
}

namespace uw::study {

// JSON view of a tournament for raters: candidate ids and image URLs only, never methods.
std::string tournament_view(const Study& study, const TournamentState& t);
// Raw URL plus every candidate id and URL of one image (for MOS scoring), again without methods.
std::string image_view(const Study& study, const std::string& image_id);

// Routes:
//   POST /tournaments                    {image_id, rater_id}
//   GET  /tournaments/{id}
//   POST /tournaments/{id}/choice        {candidate_id}
//   POST /tournaments/{id}/satisfaction  {label: satisfied|dissatisfied}
//   POST /mos                            {image_id, rater_id, score, method | candidate_id}
//   GET  /images/{id}                    raw and candidate URLs
//   GET  /images/{id}/verdict
//   GET  /images/{id}/raw
//   GET  /results/{candidate_id}
// plus the UI bundle under /ui/ when static_dir is given ("/" redirects there).
void install_routes(httplib::Server& server, Study& study, const std::optional<std::filesystem::path>& static_dir);

}  // namespace uw::study
