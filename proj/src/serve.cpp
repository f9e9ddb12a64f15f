#include "panacea/serve.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include "httplib.h"

#include "panacea/error.hpp"

namespace panacea {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

Response error(int status, const std::string& field, const std::string& message) {
    ordered_json body;
    body["error"] = message;
    body["field"] = field;
    return {status, std::move(body)};
}

// Checks a candidate preference vector against the served model. On failure
// returns the error response; on success fills `out`.
std::optional<Response> check_lambda(const std::vector<double>& values, std::size_t m, int length_status,
                                     std::optional<PreferenceVector>& out) {
    if (values.size() != m) {
        return error(length_status, "lambda", fmt::format("expected {} components, got {}", m, values.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            return error(400, fmt::format("lambda[{}]", i), "must be a finite number");
        }
        if (values[i] < 0.0) {
            return error(400, fmt::format("lambda[{}]", i), fmt::format("must be nonnegative, got {}", values[i]));
        }
        total += values[i];
    }
    if (std::abs(total - 1.0) > 1e-6) {
        return error(400, "lambda", fmt::format("components must sum to 1 within 1e-6, got {:.17g}", total));
    }
    std::vector<double> normalized = values;
    for (double& v : normalized) {
        v /= total;
    }
    out.emplace(std::move(normalized));
    return std::nullopt;
}

std::optional<Response> lambda_from_body(const json& body, std::size_t m, std::optional<PreferenceVector>& out) {
    if (!body.is_object() || !body.contains("lambda")) {
        return error(400, "lambda", "missing");
    }
    const json& raw = body["lambda"];
    if (!raw.is_array()) {
        return error(400, "lambda", "must be an array of numbers");
    }
    std::vector<double> values;
    for (const json& v : raw) {
        if (!v.is_number()) {
            return error(400, "lambda", "must be an array of numbers");
        }
        values.push_back(v.get<double>());
    }
    return check_lambda(values, m, 422, out);
}

std::optional<json> parse_body(const std::string& text) {
    json body = json::parse(text, nullptr, false);
    if (body.is_discarded()) {
        return std::nullopt;
    }
    return body;
}

bool parse_double(const std::string& text, double& out) {
    std::istringstream in(text);
    in >> out;
    return !in.fail() && in.eof();
}

ordered_json to_array(const Eigen::VectorXd& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

ordered_json to_array(std::span<const double> v) { return ordered_json(std::vector<double>(v.begin(), v.end())); }

struct Histogram {
    std::vector<double> edges;
    std::vector<double> mass;
    double mean = 0.0;
};

// Exact histogram of reward values weighted by uniform contexts and the
// policy's response probabilities.
Histogram reward_histogram(const Tensor& policy, const Tensor& reward, double lo, double hi) {
    Histogram h;
    h.mass.assign(histogram_bins, 0.0);
    for (int b = 0; b <= histogram_bins; ++b) {
        h.edges.push_back(lo + (hi - lo) * b / histogram_bins);
    }
    const double ctx_weight = 1.0 / static_cast<double>(policy.rows());
    for (Eigen::Index x = 0; x < policy.rows(); ++x) {
        for (Eigen::Index y = 0; y < policy.cols(); ++y) {
            const double w = ctx_weight * policy(x, y);
            const double r = reward(x, y);
            int bin = hi > lo ? static_cast<int>((r - lo) / (hi - lo) * histogram_bins) : 0;
            bin = std::clamp(bin, 0, histogram_bins - 1);
            h.mass[static_cast<std::size_t>(bin)] += w;
            h.mean += w * r;
        }
    }
    return h;
}

}  // namespace

Service::Service(Checkpoint checkpoint, std::string checkpoint_hash)
    : checkpoint_(std::move(checkpoint)), hash_(std::move(checkpoint_hash)), problem_(make_problem(checkpoint_.config)) {}

Response Service::info() const {
    const TrainConfig& c = checkpoint_.config;
    ordered_json body;
    body["m"] = c.m;
    body["k"] = c.k;
    body["n_ctx"] = c.n_ctx;
    body["n_resp"] = c.n_resp;
    body["objective"] = to_string(c.objective);
    body["method"] = to_string(c.method);
    body["checkpoint_hash"] = hash_;
    return {200, std::move(body)};
}

Response Service::evaluate(const std::string& text) const {
    const std::optional<json> body = parse_body(text);
    if (!body) {
        return error(400, "body", "not valid JSON");
    }
    std::optional<PreferenceVector> lam;
    if (auto bad = lambda_from_body(*body, checkpoint_.config.m, lam)) {
        return *bad;
    }
    ordered_json out;
    out["objectives"] = to_array(evaluate_objectives(checkpoint_.model, *lam, checkpoint_.config, problem_));
    return {200, std::move(out)};
}

Response Service::generate(const std::string& text) const {
    const std::optional<json> body = parse_body(text);
    if (!body) {
        return error(400, "body", "not valid JSON");
    }
    std::optional<PreferenceVector> lam;
    if (auto bad = lambda_from_body(*body, checkpoint_.config.m, lam)) {
        return *bad;
    }
    if (!body->contains("context") || !(*body)["context"].is_number_integer()) {
        return error(400, "context", "must be an integer");
    }
    const auto context = (*body)["context"].get<std::int64_t>();
    if (context < 0 || context >= static_cast<std::int64_t>(checkpoint_.config.n_ctx)) {
        return error(404, "context", fmt::format("unknown context {} (model has {})", context, checkpoint_.config.n_ctx));
    }
    std::int64_t n = 1;
    if (body->contains("n")) {
        if (!(*body)["n"].is_number_integer()) {
            return error(400, "n", "must be an integer");
        }
        n = (*body)["n"].get<std::int64_t>();
    }
    if (n < 1 || n > static_cast<std::int64_t>(max_generate_samples)) {
        return error(400, "n", fmt::format("must lie in [1, {}], got {}", max_generate_samples, n));
    }
    std::uint64_t seed = 0;
    if (body->contains("seed")) {
        if (!(*body)["seed"].is_number_unsigned()) {
            return error(400, "seed", "must be a nonnegative integer");
        }
        seed = (*body)["seed"].get<std::uint64_t>();
    }

    const Eigen::RowVectorXd dist = response_dist(checkpoint_.model, static_cast<Eigen::Index>(context), *lam);
    std::discrete_distribution<Eigen::Index> pick(dist.data(), dist.data() + dist.size());
    Rng rng(seed);
    ordered_json samples = ordered_json::array();
    for (std::int64_t i = 0; i < n; ++i) {
        const Eigen::Index y = pick(rng);
        ordered_json rewards = ordered_json::array();
        for (const Tensor& r : problem_.task.reward.values) {
            rewards.push_back(r(context, y));
        }
        ordered_json s;
        s["response"] = y;
        s["rewards"] = std::move(rewards);
        s["prob"] = dist(y);
        samples.push_back(std::move(s));
    }
    ordered_json out;
    out["samples"] = std::move(samples);
    return {200, std::move(out)};
}

ordered_json Service::compute_front(int points) const {
    const std::vector<PreferenceVector> grid = simplex_grid(checkpoint_.config.m, 1.0 / (points - 1));
    ordered_json list = ordered_json::array();
    for (const PreferenceVector& lam : grid) {
        ordered_json p;
        p["lambda"] = to_array(lam.weights());
        p["objectives"] = to_array(evaluate_objectives(checkpoint_.model, lam, checkpoint_.config, problem_));
        list.push_back(std::move(p));
    }
    ordered_json out;
    out["points"] = std::move(list);
    return out;
}

Response Service::front(const std::optional<std::string>& grid) const {
    int points = 11;
    if (grid) {
        int value = 0;
        const char* end = grid->data() + grid->size();
        const auto [ptr, ec] = std::from_chars(grid->data(), end, value);
        if (ec != std::errc() || ptr != end) {
            return error(400, "grid", fmt::format("not an integer: '{}'", *grid));
        }
        points = value;
    }
    if (points < 2 || points > 1001) {
        return error(400, "grid", fmt::format("must lie in [2, 1001], got {}", points));
    }
    // Single flight: the first caller computes outside the lock, later callers
    // wait on the same future.
    std::unique_lock lock(cache_mutex_);
    auto it = front_cache_.find(points);
    if (it != front_cache_.end()) {
        std::shared_future<ordered_json> cached = it->second;
        lock.unlock();
        return {200, cached.get()};
    }
    std::packaged_task<ordered_json()> task([this, points] { return compute_front(points); });
    std::shared_future<ordered_json> result = task.get_future().share();
    front_cache_.emplace(points, result);
    lock.unlock();
    task();
    return {200, result.get()};
}

Response Service::distributions(const std::optional<std::string>& lambda) const {
    if (!lambda) {
        return error(400, "lambda", "missing");
    }
    std::vector<double> values;
    std::stringstream in(*lambda);
    std::string item;
    while (std::getline(in, item, ',')) {
        double v = 0.0;
        if (!parse_double(item, v)) {
            return error(400, "lambda", fmt::format("not a number: '{}'", item));
        }
        values.push_back(v);
    }
    std::optional<PreferenceVector> lam;
    if (auto bad = check_lambda(values, checkpoint_.config.m, 400, lam)) {
        return *bad;
    }
    const Tensor policy = response_dist(checkpoint_.model, *lam);
    ordered_json dims = ordered_json::array();
    for (std::size_t i = 0; i < problem_.task.reward.m(); ++i) {
        const Tensor& r = problem_.task.reward.dim(i);
        const double lo = r.minCoeff();
        const double hi = r.maxCoeff();
        const Histogram pol = reward_histogram(policy, r, lo, hi);
        const Histogram ref = reward_histogram(problem_.reference, r, lo, hi);
        ordered_json d;
        d["dimension"] = i;
        d["edges"] = pol.edges;
        d["policy"] = pol.mass;
        d["reference"] = ref.mass;
        d["policy_mean"] = pol.mean;
        d["reference_mean"] = ref.mean;
        dims.push_back(std::move(d));
    }
    ordered_json out;
    out["lambda"] = to_array(lam->weights());
    out["dimensions"] = std::move(dims);
    return {200, std::move(out)};
}

namespace {

void reply(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

std::optional<std::string> query(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) {
        return std::nullopt;
    }
    return req.get_param_value(key);
}

}  // namespace

void mount(httplib::Server& server, const Service& service, const std::string& origin) {
    server.set_default_headers({{"Access-Control-Allow-Origin", origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/api/info", [&service](const httplib::Request&, httplib::Response& res) { reply(res, service.info()); });
    server.Post("/api/evaluate", [&service](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.evaluate(req.body));
    });
    server.Post("/api/generate", [&service](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.generate(req.body));
    });
    server.Get("/api/front", [&service](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.front(query(req, "grid")));
    });
    server.Get("/api/distributions", [&service](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.distributions(query(req, "lambda")));
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            message = e.what();
        } catch (...) {
        }
        reply(res, error(500, "server", message));
    });
}

}  // namespace panacea
