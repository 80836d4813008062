/*
 * Copyright 2026 The AMODS Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// HTTP JSON surface for a single labeling session.
//
// All session mutations go through one mutex. Retraining runs inside the
// POST /api/advance request, so clients should allow a long read timeout.

#ifndef AMODS_SERVICE_HPP
#define AMODS_SERVICE_HPP

#include "amods/adaptive_loop.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <functional>
#include <mutex>
#include <string>

namespace amods {

class LabelService {
public:
    using AdvanceHook = std::function<void(const AdaptiveRun&, const BatchReport&)>;

    LabelService(AdaptiveRun run, std::string id, AdvanceHook on_advance = {})
        : run_(std::move(run)), id_(std::move(id)), on_advance_(std::move(on_advance)) {}

    // Registers the /api routes on `server`.
    void mount(httplib::Server& server) {
        server.Get("/api/session", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mu_);
            reply(res, 200, session_json());
        });
        server.Get("/api/pending", [this](const httplib::Request& req, httplib::Response& res) {
            std::size_t offset = 0, limit = 0;
            try {
                if (req.has_param("offset")) offset = std::stoul(req.get_param_value("offset"));
                if (req.has_param("limit")) limit = std::stoul(req.get_param_value("limit"));
            } catch (const std::exception&) {
                return fail(res, 400, "offset and limit must be non-negative integers");
            }
            std::lock_guard lock(mu_);
            reply(res, 200, pending_json(offset, limit));
        });
        server.Post("/api/labels", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mu_);
            post_labels(req.body, res);
        });
        server.Post("/api/advance", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mu_);
            if (run_.state() != RunState::ReadyToAdvance) return fail(res, 409, "state is " + std::string(to_string(run_.state())));
            try {
                const auto& r = run_.advance();
                if (on_advance_) on_advance_(run_, r);
                reply(res, 200, session_json());
            } catch (const std::exception& e) {
                fail(res, 500, e.what());
            }
        });
        server.Get(R"(/api/report/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mu_);
            std::size_t b = 0;
            try {
                b = std::stoul(req.matches[1].str());
            } catch (const std::exception&) {
                return fail(res, 404, "no such batch");
            }
            if (b >= run_.reports().size()) return fail(res, 404, "no report for batch " + req.matches[1].str());
            reply(res, 200, to_json(run_.reports()[b]));
        });
    }

    // Read access for the owner thread once the server has stopped.
    const AdaptiveRun& run() const noexcept { return run_; }

private:
    nlohmann::json session_json() const {
        nlohmann::json history = nlohmann::json::array();
        for (const auto& r : run_.reports()) history.push_back({{"batch", r.batch}, {"metrics", to_json(r.metrics)}});
        nlohmann::json j{{"id", id_},
                         {"state", to_string(run_.state())},
                         {"current_batch", run_.current_batch()},
                         {"batch_count", run_.batch_count()},
                         {"pending_count", run_.unlabeled_count()},
                         {"pool_size", run_.pool().size()},
                         {"metrics_history", std::move(history)}};
        j["current_metrics"] = run_.current_metrics() ? to_json(*run_.current_metrics()) : nlohmann::json(nullptr);
        return j;
    }

    nlohmann::json pending_json(std::size_t offset, std::size_t limit) const {
        nlohmann::json out = nlohmann::json::array();
        std::size_t seen = 0;
        for (const auto& p : run_.pending()) {
            if (p.answer) continue;
            if (seen++ < offset) continue;
            if (limit && out.size() >= limit) break;
            out.push_back({{"query_id", p.query_id}, {"text", p.text}, {"f_value", p.f}, {"origin", to_string(p.origin)}});
        }
        return out;
    }

    void post_labels(const std::string& body, httplib::Response& res) {
        if (run_.state() != RunState::AwaitingLabels) return fail(res, 409, "state is " + std::string(to_string(run_.state())));
        std::vector<std::pair<std::size_t, LabelAnswer>> answers;
        try {
            auto j = nlohmann::json::parse(body);
            if (!j.is_array()) throw DataError("body must be an array");
            for (const auto& item : j) {
                LabelAnswer a{parse_label(item.at("label").get<std::string>()), std::nullopt};
                if (item.contains("attack_class") && !item["attack_class"].is_null())
                    a.attack_class = parse_attack_class(item["attack_class"].get<std::string>());
                if (a.attack_class && a.label != Label::Malicious) throw DataError("attack_class requires a malicious label");
                answers.emplace_back(item.at("query_id").get<std::size_t>(), a);
            }
        } catch (const std::exception& e) {
            return fail(res, 400, e.what());
        }
        // Validate every id first so a bad request changes nothing.
        for (const auto& [id, a] : answers) {
            const auto& pend = run_.pending();
            if (std::none_of(pend.begin(), pend.end(), [id = id](const auto& p) { return p.query_id == id; }))
                return fail(res, 404, "unknown query_id " + std::to_string(id));
        }
        for (const auto& [id, a] : answers) run_.submit_label(id, a);
        reply(res, 200, {{"remaining", run_.unlabeled_count()}, {"state", to_string(run_.state())}});
    }

    static void reply(httplib::Response& res, int status, const nlohmann::json& j) {
        res.status = status;
        res.set_content(j.dump(), "application/json");
    }
    static void fail(httplib::Response& res, int status, const std::string& msg) {
        reply(res, status, {{"error", msg}});
    }

    std::mutex mu_;
    AdaptiveRun run_;
    std::string id_;
    AdvanceHook on_advance_;
};

} // namespace amods

#endif
