#include "panacea/synth_task.hpp"

#include <cmath>

#include <fmt/format.h>

#include "panacea/error.hpp"

namespace panacea {

namespace {

double sample_correlation(const Tensor& a, const Tensor& b) {
    const double ma = a.mean();
    const double mb = b.mean();
    const double cov = ((a.array() - ma) * (b.array() - mb)).sum();
    const double va = (a.array() - ma).square().sum();
    const double vb = (b.array() - mb).square().sum();
    return cov / std::sqrt(va * vb);
}

void standardize(Tensor& t) {
    const double mean = t.mean();
    t.array() -= mean;
    const double sd = std::sqrt(t.array().square().mean());
    t /= sd;
}

bool has_conflict(const RewardTable& reward) {
    for (std::size_t i = 0; i < reward.m(); ++i) {
        for (std::size_t j = i + 1; j < reward.m(); ++j) {
            if (sample_correlation(reward.dim(i), reward.dim(j)) < 0.0) {
                return true;
            }
        }
    }
    return false;
}

double sigmoid(double x) { return std::exp(ad::log_sigmoid(x)); }

PreferencePair draw_pair(const TaskSpec& spec, Rng& rng) {
    std::uniform_int_distribution<Eigen::Index> ctx(0, spec.n_ctx - 1);
    std::uniform_int_distribution<Eigen::Index> first(0, spec.n_resp - 1);
    std::uniform_int_distribution<Eigen::Index> second(0, spec.n_resp - 2);
    PreferencePair p;
    p.context = ctx(rng);
    p.winner = first(rng);
    p.loser = second(rng);
    if (p.loser >= p.winner) {
        ++p.loser;
    }
    return p;
}

// Orients (winner, loser) by a Bradley-Terry draw on the given reward table.
void judge(PreferencePair& p, const Tensor& reward, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double gap = reward(p.context, p.winner) - reward(p.context, p.loser);
    if (!(unif(rng) < sigmoid(gap))) {
        std::swap(p.winner, p.loser);
    }
}

}  // namespace

Task make_task(std::uint64_t seed, Eigen::Index n_ctx, Eigen::Index n_resp, std::size_t m, double corr) {
    if (!(corr > -1.0 && corr <= 0.0)) {
        throw InvalidArgument(fmt::format("reward correlation must lie in (-1, 0], got {}", corr));
    }
    if (m < 2) {
        throw InvalidArgument(fmt::format("a task needs at least two reward dimensions, got {}", m));
    }
    Task task;
    task.spec = {n_ctx, n_resp};
    validate(task.spec);
    task.seed = seed;
    task.corr = corr;

    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&] {
        Tensor t(n_ctx, n_resp);
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            t.data()[i] = normal(rng);
        }
        return t;
    };
    for (int attempt = 0; attempt < 1000; ++attempt) {
        RewardTable reward;
        if (m == 2) {
            Tensor a = draw();
            Tensor b = draw();
            reward.values.push_back(a);
            reward.values.push_back(corr * a + std::sqrt(1.0 - corr * corr) * b);
        } else {
            for (std::size_t i = 0; i < m; ++i) {
                reward.values.push_back(draw());
            }
        }
        for (Tensor& t : reward.values) {
            standardize(t);
        }
        if (has_conflict(reward)) {
            task.reward = std::move(reward);
            return task;
        }
    }
    throw Error("make_task: could not draw conflicting reward dimensions");
}

PreferenceSlice gen_preference_data(const Task& task, std::size_t dim, std::size_t n_pairs, std::uint64_t seed) {
    if (n_pairs < 1) {
        throw InvalidArgument("gen_preference_data: n_pairs must be >= 1");
    }
    const Tensor& reward = task.reward.dim(dim);
    Rng rng(seed);
    PreferenceSlice out;
    out.reserve(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        PreferencePair p = draw_pair(task.spec, rng);
        judge(p, reward, rng);
        out.push_back(p);
    }
    return out;
}

PreferenceDataset gen_preference_dataset(const Task& task, std::size_t n_pairs, std::uint64_t seed) {
    PreferenceDataset data;
    data.seed = seed;
    data.generator = "bradley-terry/v1";
    for (std::size_t i = 0; i < task.reward.m(); ++i) {
        // Documented per-dimension stream offset.
        data.per_dim.push_back(gen_preference_data(task, i, n_pairs, seed + 7919 * (i + 1)));
    }
    return data;
}

nlohmann::ordered_json dataset_to_json(const PreferenceDataset& data, const Task& task) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["generator"] = data.generator;
    j["seed"] = data.seed;
    j["task"] = {{"seed", task.seed},
                 {"n_ctx", task.spec.n_ctx},
                 {"n_resp", task.spec.n_resp},
                 {"m", task.reward.m()},
                 {"corr", task.corr}};
    nlohmann::ordered_json dims = nlohmann::ordered_json::array();
    for (const PreferenceSlice& slice : data.per_dim) {
        nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
        for (const PreferencePair& p : slice) {
            pairs.push_back({p.context, p.winner, p.loser});
        }
        dims.push_back(std::move(pairs));
    }
    j["dimensions"] = std::move(dims);
    return j;
}

PreferenceDataset dataset_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != 1) {
            throw InvalidArgument(fmt::format("unsupported dataset format_version {}", j.at("format_version").dump()));
        }
        PreferenceDataset data;
        data.generator = j.at("generator").get<std::string>();
        data.seed = j.at("seed").get<std::uint64_t>();
        const auto n_ctx = j.at("task").at("n_ctx").get<Eigen::Index>();
        const auto n_resp = j.at("task").at("n_resp").get<Eigen::Index>();
        for (const auto& dim : j.at("dimensions")) {
            PreferenceSlice slice;
            for (const auto& p : dim) {
                slice.push_back({p.at(0).get<Eigen::Index>(), p.at(1).get<Eigen::Index>(), p.at(2).get<Eigen::Index>()});
            }
            validate(slice, n_ctx, n_resp);
            data.per_dim.push_back(std::move(slice));
        }
        return data;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(fmt::format("malformed dataset: {}", e.what()));
    }
}

void validate(const std::vector<LabelerSpec>& labelers) {
    if (labelers.empty()) {
        throw InvalidArgument("at least one labeler is required");
    }
    double total = 0.0;
    for (const LabelerSpec& l : labelers) {
        if (!(l.portion >= 0.0 && l.portion <= 1.0)) {
            throw InvalidArgument(fmt::format("labeler portion {} outside [0, 1]", l.portion));
        }
        if (l.preference.size() != labelers.front().preference.size()) {
            throw InvalidArgument("labelers disagree on the number of preference dimensions");
        }
        total += l.portion;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw InvalidArgument(fmt::format("labeler portions sum to {:.17g}, expected 1", total));
    }
}

PreferenceVector effective_preference(const std::vector<LabelerSpec>& labelers) {
    validate(labelers);
    std::vector<double> w(labelers.front().preference.size(), 0.0);
    for (const LabelerSpec& l : labelers) {
        for (std::size_t j = 0; j < w.size(); ++j) {
            w[j] += l.portion * l.preference[j];
        }
    }
    return PreferenceVector(std::move(w));
}

std::vector<double> ScalarLabelDataset::portions(std::size_t n_labelers) const {
    std::vector<double> out(n_labelers, 0.0);
    for (std::size_t i : labeler) {
        out.at(i) += 1.0;
    }
    for (double& v : out) {
        v /= static_cast<double>(labeler.size());
    }
    return out;
}

ScalarLabelDataset gen_scalar_label_data(const Task& task, const std::vector<LabelerSpec>& labelers, std::size_t n,
                                         std::uint64_t seed) {
    validate(labelers);
    if (labelers.front().preference.size() != task.reward.m()) {
        throw InvalidArgument("labeler preferences do not match the task's reward dimensions");
    }
    std::vector<Tensor> labeler_rewards;
    std::vector<double> weights;
    for (const LabelerSpec& l : labelers) {
        labeler_rewards.push_back(scalarized_reward(task.reward, l.preference));
        weights.push_back(l.portion);
    }
    Rng rng(seed);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    ScalarLabelDataset out;
    out.seed = seed;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t who = pick(rng);
        PreferencePair p = draw_pair(task.spec, rng);
        judge(p, labeler_rewards[who], rng);
        out.pairs.push_back(p);
        out.labeler.push_back(who);
    }
    return out;
}

Tensor scalarized_reward(const RewardTable& reward, const PreferenceVector& lam) {
    if (lam.size() != reward.m()) {
        throw InvalidArgument(fmt::format("{}-dimensional preference for {} reward dimensions", lam.size(), reward.m()));
    }
    Tensor out = Tensor::Zero(reward.n_ctx(), reward.n_resp());
    for (std::size_t i = 0; i < reward.m(); ++i) {
        out += lam[i] * reward.dim(i);
    }
    return out;
}

Tensor closed_form_optimal_policy(const RewardTable& reward, const Tensor& reference, const PreferenceVector& lam,
                                  double beta) {
    if (!(beta > 0.0)) {
        throw InvalidArgument(fmt::format("beta must be positive, got {}", beta));
    }
    const Tensor r = scalarized_reward(reward, lam);
    const Tensor logits = reference.array().log().matrix() + r / beta;
    return ad::softmax_rows(logits);
}

OracleFront oracle_front(const RewardTable& reward, const Tensor& reference,
                         const std::vector<PreferenceVector>& grid, double beta) {
    OracleFront out;
    const Tensor log_ref = reference.array().log();
    std::vector<ObjectivePoint> points;
    for (const PreferenceVector& lam : grid) {
        Tensor policy = closed_form_optimal_policy(reward, reference, lam, beta);
        Eigen::VectorXd J = rlhf_objectives(Tensor(policy.array().log()), log_ref, reward, beta);
        const auto w = lam.weights();
        points.push_back({J, std::vector<double>(w.begin(), w.end()), "oracle"});
        out.entries.push_back({lam, std::move(J), std::move(policy)});
    }
    out.front = pareto_filter(points);
    return out;
}

IdealPoint oracle_ideal_point(const RewardTable& reward, const Tensor& reference, double beta, double margin) {
    const Tensor log_ref = reference.array().log();
    IdealPoint z;
    for (std::size_t i = 0; i < reward.m(); ++i) {
        const Tensor best = closed_form_optimal_policy(reward, reference, PreferenceVector::vertex(reward.m(), i), beta);
        z.z.push_back(rlhf_objective(Tensor(best.array().log()), log_ref, reward.dim(i), beta) + margin);
    }
    return z;
}

}  // namespace panacea
