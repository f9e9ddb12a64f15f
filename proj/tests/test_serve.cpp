#include <future>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"

#include "panacea/cli.hpp"
#include "panacea/serve.hpp"
#include "panacea/training.hpp"

// After the Eigen-based headers: resolv.h, pulled in by httplib, defines `_res`.
#include "httplib.h"

using namespace panacea;
using nlohmann::json;

namespace {

Checkpoint trained_checkpoint() {
    TrainConfig c;
    c.iters = 500;
    const Problem problem = make_problem(c);
    return {c, c.iters, train_panacea(c, problem).model};
}

Checkpoint untrained_checkpoint() {
    TrainConfig c;
    c.iters = 0;
    return {c, 0, init_policy(c)};
}

class ServeTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        const Checkpoint ck = trained_checkpoint();
        const std::string text = serialize_checkpoint(ck);
        hash_ = new std::string(sha256_hex(text));
        service_ = new Service(parse_checkpoint(text), *hash_);
    }
    static void TearDownTestSuite() {
        delete service_;
        delete hash_;
    }

    static Service* service_;
    static std::string* hash_;
};

Service* ServeTest::service_ = nullptr;
std::string* ServeTest::hash_ = nullptr;

TEST_F(ServeTest, Info) {
    const Response r = service_->info();
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(r.body["m"], 2);
    EXPECT_EQ(r.body["k"], 4);
    EXPECT_EQ(r.body["n_ctx"], 8);
    EXPECT_EQ(r.body["n_resp"], 16);
    EXPECT_EQ(r.body["objective"], "rlhf");
    EXPECT_EQ(r.body["method"], "panacea");
    EXPECT_EQ(r.body["checkpoint_hash"], *hash_);
    EXPECT_EQ(service_->info().body.dump(), r.body.dump());
}

TEST_F(ServeTest, EvaluateMatchesDirectEvaluation) {
    const Response r = service_->evaluate(R"({"lambda": [0.3, 0.7]})");
    ASSERT_EQ(r.status, 200);
    const Checkpoint& ck = service_->checkpoint();
    const Eigen::VectorXd J = evaluate_objectives(ck.model, {0.3, 0.7}, ck.config, make_problem(ck.config));
    EXPECT_EQ(r.body["objectives"][0].get<double>(), J(0));
    EXPECT_EQ(r.body["objectives"][1].get<double>(), J(1));
    EXPECT_EQ(service_->evaluate(R"({"lambda": [0.5, 0.5]})").body.dump(),
              service_->evaluate(R"({"lambda": [0.5, 0.5]})").body.dump());
}

TEST_F(ServeTest, EvaluateVerticesTradeOff) {
    const json a = service_->evaluate(R"({"lambda": [1, 0]})").body;
    const json b = service_->evaluate(R"({"lambda": [0, 1]})").body;
    EXPECT_GE(a["objectives"][0].get<double>(), b["objectives"][0].get<double>());
    EXPECT_GE(b["objectives"][1].get<double>(), a["objectives"][1].get<double>());
}

TEST_F(ServeTest, EvaluateErrors) {
    const Response off = service_->evaluate(R"({"lambda": [0.6, 0.6]})");
    EXPECT_EQ(off.status, 400);
    EXPECT_EQ(off.body["field"], "lambda");
    const Response negative = service_->evaluate(R"({"lambda": [1.5, -0.5]})");
    EXPECT_EQ(negative.status, 400);
    EXPECT_EQ(negative.body["field"], "lambda[1]");
    EXPECT_EQ(service_->evaluate(R"({"lambda": [0.2, 0.3, 0.5]})").status, 422);
    EXPECT_EQ(service_->evaluate(R"({"lambda": "x"})").status, 400);
    EXPECT_EQ(service_->evaluate(R"({})").status, 400);
    EXPECT_EQ(service_->evaluate("not json").status, 400);
    EXPECT_EQ(service_->evaluate(R"({"lambda": [0.5, 0.5000001]})").status, 200);
}

TEST_F(ServeTest, GenerateIsSeededAndConsistent) {
    const Response a = service_->generate(R"({"lambda": [1, 0], "context": 2, "n": 20, "seed": 5})");
    ASSERT_EQ(a.status, 200);
    EXPECT_EQ(a.body["samples"].size(), 20u);
    EXPECT_EQ(a.body.dump(), service_->generate(R"({"lambda": [1, 0], "context": 2, "n": 20, "seed": 5})").body.dump());

    const Checkpoint& ck = service_->checkpoint();
    const Problem problem = make_problem(ck.config);
    const Eigen::RowVectorXd dist = response_dist(ck.model, 2, {1.0, 0.0});
    for (const json& s : a.body["samples"]) {
        const int y = s["response"].get<int>();
        EXPECT_EQ(s["prob"].get<double>(), dist(y));
        EXPECT_EQ(s["rewards"][0].get<double>(), problem.task.reward.dim(0)(2, y));
        EXPECT_EQ(s["rewards"][1].get<double>(), problem.task.reward.dim(1)(2, y));
    }
    EXPECT_EQ(service_->generate(R"({"lambda": [1, 0], "context": 2})").body["samples"].size(), 1u);
}

TEST_F(ServeTest, GenerateShiftsWithPreference) {
    auto mean_r1 = [&](const char* lam) {
        double total = 0.0;
        for (int x = 0; x < 8; ++x) {
            const std::string body =
                std::string(R"({"lambda": )") + lam + R"(, "context": )" + std::to_string(x) + R"(, "n": 1000, "seed": 1})";
            const Response r = service_->generate(body);
            for (const json& s : r.body["samples"]) {
                total += s["rewards"][0].get<double>();
            }
        }
        return total / 8000.0;
    };
    EXPECT_GT(mean_r1("[1, 0]"), mean_r1("[0, 1]"));
}

TEST_F(ServeTest, GenerateErrors) {
    EXPECT_EQ(service_->generate(R"({"lambda": [1, 0], "context": 999})").status, 404);
    EXPECT_EQ(service_->generate(R"({"lambda": [1, 0], "context": -1})").status, 404);
    EXPECT_EQ(service_->generate(R"({"lambda": [1, 0]})").status, 400);
    EXPECT_EQ(service_->generate(R"({"lambda": [1, 0], "context": 0, "n": 0})").status, 400);
    EXPECT_EQ(service_->generate(R"({"lambda": [0.7, 0.7], "context": 0})").status, 400);
    EXPECT_EQ(service_->generate(R"({"lambda": [1], "context": 0})").status, 422);
}

TEST_F(ServeTest, FrontGridAndCache) {
    const Response r = service_->front(std::string("11"));
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body["points"].size(), 11u);
    EXPECT_EQ(service_->front(std::nullopt).body.dump(), r.body.dump());
    const Response two = service_->front(std::string("2"));
    ASSERT_EQ(two.body["points"].size(), 2u);
    EXPECT_EQ(two.body["points"][0]["lambda"], json::parse("[0.0,1.0]"));
    EXPECT_EQ(two.body["points"][1]["lambda"], json::parse("[1.0,0.0]"));
    EXPECT_EQ(service_->front(std::string("1")).status, 400);
    EXPECT_EQ(service_->front(std::string("abc")).status, 400);
}

TEST_F(ServeTest, ConcurrentRequestsMatchSerial) {
    const std::string serial = service_->front(std::string("21")).body.dump();
    std::vector<std::future<std::string>> pending;
    for (int i = 0; i < 8; ++i) {
        pending.push_back(std::async(std::launch::async, [] { return service_->front(std::string("21")).body.dump(); }));
    }
    for (auto& f : pending) {
        EXPECT_EQ(f.get(), serial);
    }
}

TEST_F(ServeTest, DistributionsShiftAndNormalize) {
    const Response r = service_->distributions(std::string("1,0"));
    ASSERT_EQ(r.status, 200);
    ASSERT_EQ(r.body["dimensions"].size(), 2u);
    for (const json& d : r.body["dimensions"]) {
        double pol = 0.0;
        double ref = 0.0;
        for (const json& v : d["policy"]) pol += v.get<double>();
        for (const json& v : d["reference"]) ref += v.get<double>();
        EXPECT_NEAR(pol, 1.0, 1e-9);
        EXPECT_NEAR(ref, 1.0, 1e-9);
        EXPECT_EQ(d["edges"].size(), d["policy"].size() + 1);
    }
    const json& d0 = r.body["dimensions"][0];
    EXPECT_GE(d0["policy_mean"].get<double>(), d0["reference_mean"].get<double>());
    EXPECT_EQ(service_->distributions(std::string("0.6,0.6")).status, 400);
    EXPECT_EQ(service_->distributions(std::string("a,b")).status, 400);
    EXPECT_EQ(service_->distributions(std::nullopt).status, 400);
}

TEST(ServeUntrained, PolicyHistogramEqualsReference) {
    const Service service(untrained_checkpoint(), "h");
    const Response r = service.distributions(std::string("0.3,0.7"));
    ASSERT_EQ(r.status, 200);
    for (const json& d : r.body["dimensions"]) {
        EXPECT_EQ(d["policy"], d["reference"]);
    }
    const json front = service.front(std::string("11")).body;
    for (const json& p : front["points"]) {
        EXPECT_EQ(p["objectives"], front["points"][0]["objectives"]);
    }
}

TEST_F(ServeTest, LiveServer) {
    httplib::Server server;
    mount(server, *service_, "http://localhost:5173");
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto info = client.Get("/api/info");
    ASSERT_TRUE(info);
    EXPECT_EQ(info->status, 200);
    EXPECT_EQ(info->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");
    EXPECT_EQ(json::parse(info->body)["checkpoint_hash"], *hash_);

    auto eval = client.Post("/api/evaluate", R"({"lambda": [0.5, 0.5]})", "application/json");
    ASSERT_TRUE(eval);
    EXPECT_EQ(eval->status, 200);
    EXPECT_EQ(json::parse(eval->body)["objectives"].size(), 2u);

    auto bad = client.Post("/api/evaluate", R"({"lambda": [0.6, 0.6]})", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);
    auto wrong_length = client.Post("/api/evaluate", R"({"lambda": [1]})", "application/json");
    ASSERT_TRUE(wrong_length);
    EXPECT_EQ(wrong_length->status, 422);

    auto gen = client.Post("/api/generate", R"({"lambda": [1, 0], "context": 999})", "application/json");
    ASSERT_TRUE(gen);
    EXPECT_EQ(gen->status, 404);

    auto front = client.Get("/api/front?grid=11");
    ASSERT_TRUE(front);
    EXPECT_EQ(json::parse(front->body)["points"].size(), 11u);

    auto dist = client.Get("/api/distributions?lambda=0.5,0.5");
    ASSERT_TRUE(dist);
    EXPECT_EQ(dist->status, 200);

    auto preflight = client.Options("/api/evaluate");
    ASSERT_TRUE(preflight);
    EXPECT_EQ(preflight->status, 204);
    EXPECT_NE(preflight->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);

    server.stop();
    worker.join();
}

}  // namespace
