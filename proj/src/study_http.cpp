#include "uwbench/study_http.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "uwbench/error.hpp"

namespace uw::study {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

void send_json(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg) {
    ojson j;
    j["error"] = msg;
    send_json(res, status, j.dump());
}

// Maps library errors onto HTTP statuses; everything runs through here.
template <class F>
void guarded(httplib::Response& res, F&& body) {
    try {
        body();
    } catch (const NotFoundError& e) {
        send_error(res, 404, e.what());
    } catch (const StateError& e) {
        send_error(res, 409, e.what());
    } catch (const InvalidArgument& e) {
        send_error(res, 400, e.what());
    } catch (const FormatError& e) {
        send_error(res, 400, e.what());
    } catch (const json::exception& e) {
        send_error(res, 400, std::string("bad JSON: ") + e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, e.what());
    }
}

json body_object(const httplib::Request& req) {
    json j = json::parse(req.body);
    if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
    return j;
}

std::string field(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) throw InvalidArgument(std::string("missing string field ") + key);
    return j[key].get<std::string>();
}

std::string content_type_for(const std::filesystem::path& p) {
    const std::string ext = p.extension().string();
    if (ext == ".png") return "image/png";
    if (ext == ".ppm") return "image/x-portable-pixmap";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    return "application/octet-stream";
}

void send_file(httplib::Response& res, const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NotFoundError("file missing on server: " + p.filename().string());
    std::ostringstream ss;
    ss << in.rdbuf();
    res.status = 200;
    res.set_content(ss.str(), content_type_for(p).c_str());
}

}  // namespace

std::string tournament_view(const Study& study, const TournamentState& t) {
    ojson j;
    j["tournament_id"] = t.id;
    j["image_id"] = t.image_id;
    j["rater_id"] = t.rater_id;
    j["raw_url"] = "/images/" + httplib::detail::encode_url(t.image_id) + "/raw";
    if (const auto pair = t.current_pair()) {
        ojson p = ojson::array();
        for (const std::string* c : {&pair->first, &pair->second}) {
            ojson e;
            e["candidate_id"] = *c;
            e["url"] = "/results/" + httplib::detail::encode_url(*c);
            p.push_back(e);
        }
        j["pair"] = p;
    } else {
        j["pair"] = nullptr;
    }
    j["progress"] = {{"done", t.comparisons_done}, {"total", t.comparisons_needed()}};
    j["final_pick"] = t.final_pick ? ojson(*t.final_pick) : ojson(nullptr);
    j["awaiting_satisfaction"] = t.final_pick.has_value() && !t.satisfaction;
    j["closed"] = t.closed();
    (void)study;
    return j.dump();
}

std::string image_view(const Study& study, const std::string& image_id) {
    const StudyImage& img = study.image(image_id);
    ojson j;
    j["image_id"] = img.id;
    j["raw_url"] = "/images/" + httplib::detail::encode_url(img.id) + "/raw";
    ojson cands = ojson::array();
    for (const Candidate& c : img.candidates) {
        ojson e;
        e["candidate_id"] = c.id;
        e["url"] = "/results/" + httplib::detail::encode_url(c.id);
        cands.push_back(e);
    }
    j["candidates"] = cands;
    return j.dump();
}

void install_routes(httplib::Server& server, Study& study, const std::optional<std::filesystem::path>& static_dir) {
    server.Post("/tournaments", [&study](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json j = body_object(req);
            const TournamentState t = study.start_tournament(field(j, "image_id"), field(j, "rater_id"));
            send_json(res, 201, tournament_view(study, t));
        });
    });
    server.Get(R"(/tournaments/([^/]+))", [&study](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, tournament_view(study, study.tournament(req.matches[1]))); });
    });
    server.Post(R"(/tournaments/([^/]+)/choice)", [&study](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json j = body_object(req);
            const TournamentState t = study.submit_choice(req.matches[1], field(j, "candidate_id"));
            send_json(res, 200, tournament_view(study, t));
        });
    });
    server.Post(R"(/tournaments/([^/]+)/satisfaction)",
                [&study](const httplib::Request& req, httplib::Response& res) {
                    guarded(res, [&] {
                        const json j = body_object(req);
                        const TournamentState t =
                            study.submit_satisfaction(req.matches[1], parse_satisfaction(field(j, "label")));
                        send_json(res, 200, tournament_view(study, t));
                    });
                });
    server.Post("/mos", [&study](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json j = body_object(req);
            if (!j.contains("score") || !j["score"].is_number_integer()) {
                throw InvalidArgument("score must be an integer from 1 to 5");
            }
            const std::string image_id = field(j, "image_id");
            std::string method;
            if (j.contains("candidate_id")) {
                const auto [img, cand] = study.candidate(field(j, "candidate_id"));
                if (img->id != image_id) throw InvalidArgument("candidate does not belong to image " + image_id);
                method = cand->method;
            } else {
                method = field(j, "method");
            }
            const MosResult r = study.record_mos(image_id, field(j, "rater_id"), method, j["score"].get<int>());
            ojson out;
            out["stored"] = true;
            out["overwritten"] = r.overwritten;
            if (r.overwritten) out["warning"] = "earlier score for this image and method replaced";
            send_json(res, 200, out.dump());
        });
    });
    server.Get(R"(/images/([^/]+))", [&study](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, image_view(study, req.matches[1])); });
    });
    server.Get(R"(/images/([^/]+)/verdict)", [&study](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, serialize_verdict(study.finalize_image(req.matches[1]))); });
    });
    server.Get(R"(/images/([^/]+)/raw)", [&study](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_file(res, study.image(req.matches[1]).raw); });
    });
    server.Get(R"(/results/([^/]+))", [&study](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_file(res, study.candidate(req.matches[1]).second->path); });
    });
    if (static_dir) {
        if (!server.set_mount_point("/ui", static_dir->string())) {
            throw IoError("cannot mount UI bundle from " + static_dir->string());
        }
        server.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/ui/"); });
    }
}

}  // namespace uw::study
