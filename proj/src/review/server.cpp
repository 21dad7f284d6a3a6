#include <httplib.h>
#include <spdlog/spdlog.h>

#include "testmine/error.hpp"
#include "testmine/review/review.hpp"

namespace testmine::review {

namespace {

void send_json(httplib::Response& res, const nlohmann::ordered_json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"] = code;
    j["message"] = message;
    send_json(res, j, status);
}

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::validation:
        case ErrorCode::parse: return 400;
        case ErrorCode::not_found: return 404;
        case ErrorCode::review: return 409;
        default: return 500;
    }
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    auto v = req.get_param_value(name);
    if (v.empty()) return std::nullopt;
    return v;
}

template <class Fn>
httplib::Server::Handler guarded(const ServerOptions& options, Fn fn) {
    return [token = options.token, fn](const httplib::Request& req, httplib::Response& res) {
        if (!token.empty() && req.get_header_value("Authorization") != "Bearer " + token) {
            send_error(res, 401, "unauthorized", "missing or wrong bearer token");
            return;
        }
        try {
            fn(req, res);
        } catch (const Error& e) {
            send_error(res, http_status(e.code()), to_string(e.code()), e.what());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, 400, "validation", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "fatal", e.what());
        }
    };
}

}  // namespace

void register_routes(httplib::Server& server, ReviewService& service, const ServerOptions& options) {
    server.Get("/queue", guarded(options, [&service](const httplib::Request& req, httplib::Response& res) {
        std::optional<Kind> kind;
        std::optional<Status> status;
        if (auto k = param(req, "kind")) kind = corpus::kind_from_string(*k);
        if (auto s = param(req, "status")) status = status_from_string(*s);
        auto viewer = param(req, "reviewer").value_or("");
        auto items = nlohmann::ordered_json::array();
        for (const auto& item : service.queue(kind, status)) items.push_back(service.item_view(item, viewer));
        nlohmann::ordered_json body;
        body["reviewers"] = service.reviewers();
        body["items"] = items;
        send_json(res, body);
    }));

    server.Get(R"(/item/([^/]+))", guarded(options, [&service](const httplib::Request& req, httplib::Response& res) {
        auto item = service.item(req.matches[1]);
        if (!item) throw Error(ErrorCode::not_found, "no item " + std::string(req.matches[1]));
        send_json(res, service.item_view(*item, param(req, "reviewer").value_or("")));
    }));

    server.Post(R"(/item/([^/]+)/judgment)",
                guarded(options, [&service](const httplib::Request& req, httplib::Response& res) {
                    std::string id = req.matches[1];
                    if (!service.item(id)) throw Error(ErrorCode::not_found, "no item " + id);
                    auto body = nlohmann::json::parse(req.body);
                    Judgment j{id, body.at("reviewer").get<std::string>(),
                               verdict_from_string(body.at("verdict").get<std::string>()),
                               body.value("note", ""), body.value("timestamp", "")};
                    auto status = service.submit_judgment(j);
                    nlohmann::ordered_json out;
                    out["item_id"] = id;
                    out["status"] = to_string(status);
                    send_json(res, out);
                }));

    server.Post(R"(/item/([^/]+)/resolution)",
                guarded(options, [&service](const httplib::Request& req, httplib::Response& res) {
                    std::string id = req.matches[1];
                    if (!service.item(id)) throw Error(ErrorCode::not_found, "no item " + id);
                    auto body = nlohmann::json::parse(req.body);
                    auto item = service.resolve_dispute(id, verdict_from_string(body.at("verdict").get<std::string>()),
                                                        body.value("note", ""));
                    send_json(res, service.item_view(item, ""));
                }));

    server.Get("/report", guarded(options, [&service](const httplib::Request& req, httplib::Response& res) {
        std::optional<Kind> kind;
        if (auto k = param(req, "kind")) kind = corpus::kind_from_string(*k);
        send_json(res, to_json(service.agreement_report(kind)));
    }));

    server.Get("/export", guarded(options, [&service](const httplib::Request&, httplib::Response& res) {
        std::string text;
        for (const auto& r : service.export_records()) {
            text += to_json(r).dump();
            text += '\n';
        }
        res.set_content(text, "application/x-ndjson");
    }));

    if (!options.static_dir.empty()) {
        if (!server.set_mount_point("/", options.static_dir.string())) {
            spdlog::warn("static directory {} not mounted", options.static_dir.string());
        }
    }
}

void serve(ReviewService& service, const ServerOptions& options) {
    httplib::Server server;
    register_routes(server, service, options);
    spdlog::info("review service listening on {}:{}", options.host, options.port);
    if (!server.listen(options.host, options.port)) {
        throw Error(ErrorCode::io, "cannot listen on " + options.host + ":" + std::to_string(options.port));
    }
}

}  // namespace testmine::review
