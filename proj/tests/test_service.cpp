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
#include "amods/service.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <thread>

namespace amods {
namespace {

const Corpus& corpus() {
    static const Corpus c = testing::fixture_corpus(31, 3, 300, 8);
    return c;
}

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override {
        service_ = std::make_unique<LabelService>(AdaptiveRun(testing::fixture_run(Strategy::Hybrid, 3), corpus()), "s1");
        service_->mount(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        ASSERT_GT(port_, 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
        client_->set_read_timeout(120, 0);
    }
    void TearDown() override {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    nlohmann::json get(const std::string& path, int expect = 200) {
        auto res = client_->Get(path);
        EXPECT_TRUE(res);
        if (!res) return {};
        EXPECT_EQ(res->status, expect) << path << " " << res->body;
        return nlohmann::json::parse(res->body);
    }
    nlohmann::json post(const std::string& path, const std::string& body, int expect = 200) {
        auto res = client_->Post(path, body, "application/json");
        EXPECT_TRUE(res);
        if (!res) return {};
        EXPECT_EQ(res->status, expect) << path << " " << res->body;
        return nlohmann::json::parse(res->body);
    }

    // Posts ground truth for every pending query.
    void label_all() {
        auto truth = oracle_labeler(testing::all_batches(corpus()));
        nlohmann::json body = nlohmann::json::array();
        for (const auto& p : get("/api/pending")) {
            auto a = truth(p["text"].get<std::string>());
            nlohmann::json item{{"query_id", p["query_id"]}, {"label", to_string(a.label)}};
            if (a.attack_class) item["attack_class"] = to_string(*a.attack_class);
            body.push_back(item);
        }
        post("/api/labels", body.dump());
    }

    httplib::Server server_;
    std::unique_ptr<LabelService> service_;
    std::unique_ptr<httplib::Client> client_;
    std::thread thread_;
    int port_ = 0;
};

TEST_F(ServiceTest, SessionAndPending) {
    auto s = get("/api/session");
    EXPECT_EQ(s["id"], "s1");
    EXPECT_EQ(s["state"], "AwaitingLabels");
    EXPECT_EQ(s["current_batch"], 0);
    EXPECT_TRUE(s["metrics_history"].empty());
    const std::size_t n = s["pending_count"];
    ASSERT_GT(n, 1u);
    auto all = get("/api/pending");
    EXPECT_EQ(all.size(), n);
    for (const auto& p : all) {
        EXPECT_TRUE(p.contains("text"));
        EXPECT_TRUE(p.contains("f_value"));
        EXPECT_TRUE(p["origin"] == "suspicion" || p["origin"] == "exemplar");
    }
    auto page = get("/api/pending?offset=1&limit=1");
    ASSERT_EQ(page.size(), 1u);
    EXPECT_EQ(page[0], all[1]);
    get("/api/pending?offset=x", 400);
}

TEST_F(ServiceTest, LabelErrorsLeaveStateUntouched) {
    const auto before = get("/api/session");
    post("/api/labels", "{not json", 400);
    post("/api/labels", R"([{"query_id": 1}])", 400);
    post("/api/labels", R"([{"query_id": 1, "label": "benign", "attack_class": "XSS"}])", 400);
    auto first = get("/api/pending")[0]["query_id"];
    nlohmann::json mixed = nlohmann::json::array({{{"query_id", first}, {"label", "benign"}}, {{"query_id", 987654}, {"label", "benign"}}});
    post("/api/labels", mixed.dump(), 404);
    EXPECT_EQ(get("/api/session"), before);
}

TEST_F(ServiceTest, StateMachine) {
    post("/api/advance", "", 409);
    auto pending = get("/api/pending");
    nlohmann::json one = nlohmann::json::array({{{"query_id", pending[0]["query_id"]}, {"label", "malicious"}, {"attack_class", "SQLI"}}});
    auto r = post("/api/labels", one.dump());
    EXPECT_EQ(r["remaining"], pending.size() - 1);
    EXPECT_EQ(get("/api/session")["state"], "AwaitingLabels");
    label_all();
    EXPECT_EQ(get("/api/session")["state"], "ReadyToAdvance");
    EXPECT_EQ(get("/api/session")["pending_count"], 0);
    post("/api/labels", one.dump(), 409);
    get("/api/report/0", 404);
    auto adv = post("/api/advance", "");
    EXPECT_EQ(adv["current_batch"], 1);
    EXPECT_EQ(adv["metrics_history"].size(), 1u);
    auto report = get("/api/report/0");
    EXPECT_EQ(report["batch"], 0);
    EXPECT_EQ(report["selection"]["items"].size(), pending.size());
    if (get("/api/session")["state"] == "AwaitingLabels") post("/api/advance", "", 409);
}

TEST_F(ServiceTest, ServiceRunEqualsOracleRun) {
    while (get("/api/session")["state"] != "Finished") {
        if (get("/api/session")["state"] == "AwaitingLabels") label_all();
        post("/api/advance", "");
    }
    EXPECT_EQ(get("/api/session")["metrics_history"].size(), 3u);
    server_.stop();
    thread_.join();

    AdaptiveRun oracle(testing::fixture_run(Strategy::Hybrid, 3), corpus());
    run_loop(oracle, oracle_labeler(testing::all_batches(corpus())));
    EXPECT_EQ(service_->run().snapshot().dump(), oracle.snapshot().dump());
}

} // namespace
} // namespace amods
