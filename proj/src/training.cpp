#include "panacea/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "panacea/error.hpp"

namespace panacea {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(Method v) {
    switch (v) {
        case Method::Panacea: return "panacea";
        case Method::Dps: return "dps";
        case Method::Rs: return "rs";
    }
    return "?";
}

std::string to_string(ObjectiveKind v) { return v == ObjectiveKind::Rlhf ? "rlhf" : "dpo"; }
std::string to_string(Aggregation v) { return v == Aggregation::Ls ? "ls" : "tche"; }
std::string to_string(LrSchedule v) { return v == LrSchedule::Constant ? "constant" : "cosine"; }

Method parse_method(const std::string& s) {
    if (s == "panacea") return Method::Panacea;
    if (s == "dps") return Method::Dps;
    if (s == "rs") return Method::Rs;
    throw InvalidArgument(fmt::format("unknown method '{}' (panacea | dps | rs)", s));
}

ObjectiveKind parse_objective(const std::string& s) {
    if (s == "rlhf") return ObjectiveKind::Rlhf;
    if (s == "dpo") return ObjectiveKind::Dpo;
    throw InvalidArgument(fmt::format("unknown objective '{}' (rlhf | dpo)", s));
}

Aggregation parse_aggregation(const std::string& s) {
    if (s == "ls") return Aggregation::Ls;
    if (s == "tche") return Aggregation::Tche;
    throw InvalidArgument(fmt::format("unknown aggregation '{}' (ls | tche)", s));
}

LrSchedule parse_schedule(const std::string& s) {
    if (s == "constant") return LrSchedule::Constant;
    if (s == "cosine") return LrSchedule::Cosine;
    throw InvalidArgument(fmt::format("unknown lr schedule '{}' (constant | cosine)", s));
}

void validate(const TrainConfig& c) {
    auto fail = [](const std::string& what) { throw InvalidArgument(what); };
    if (c.batch == 0) fail("batch must be positive");
    if (!(c.lr > 0.0)) fail("lr must be positive");
    if (!(c.beta > 0.0)) fail("beta must be positive");
    if (!(c.lr_final_ratio >= 0.0 && c.lr_final_ratio <= 1.0)) fail("lr_final_ratio must lie in [0, 1]");
    if (c.m < 2) fail("m must be >= 2");
    if (c.ortho_coef < 0.0) fail("ortho_coef must be >= 0");
    if (c.n_ctx < 1 || c.n_resp < 2 || c.hidden < 1) fail("task dimensions must be positive (n_resp >= 2)");
    if (c.method == Method::Dps && !c.fixed_lambda) fail("method dps requires a fixed preference vector (--lambda)");
    if (c.fixed_lambda) {
        PreferenceVector lam(*c.fixed_lambda);
        if (lam.size() != c.m) fail(fmt::format("fixed lambda has {} entries, m = {}", lam.size(), c.m));
    }
    if (c.fixed_scaling && !std::isfinite(*c.fixed_scaling)) fail("fixed scaling must be finite");
    if (c.objective == ObjectiveKind::Dpo && (c.n_pairs == 0 || c.n_eval_pairs == 0)) {
        fail("dpo needs n_pairs and n_eval_pairs >= 1");
    }
}

ordered_json to_json(const TrainConfig& c) {
    ordered_json j;
    j["method"] = to_string(c.method);
    j["objective"] = to_string(c.objective);
    j["aggregation"] = to_string(c.aggregation);
    j["iters"] = c.iters;
    j["batch"] = c.batch;
    j["lr"] = c.lr;
    j["lr_schedule"] = to_string(c.schedule);
    j["lr_final_ratio"] = c.lr_final_ratio;
    j["beta"] = c.beta;
    j["k"] = c.k;
    j["m"] = c.m;
    j["seed"] = c.seed;
    j["ortho_coef"] = c.ortho_coef;
    j["fixed_lambda"] = c.fixed_lambda ? ordered_json(*c.fixed_lambda) : ordered_json(nullptr);
    j["fixed_scaling"] = c.fixed_scaling ? ordered_json(*c.fixed_scaling) : ordered_json(nullptr);
    j["ideal_margin"] = c.ideal_margin;
    j["task_seed"] = c.task_seed;
    j["n_ctx"] = c.n_ctx;
    j["n_resp"] = c.n_resp;
    j["hidden"] = c.hidden;
    j["corr"] = c.corr;
    j["n_pairs"] = c.n_pairs;
    j["n_eval_pairs"] = c.n_eval_pairs;
    j["data_seed"] = c.data_seed;
    j["eval_seed"] = c.eval_seed;
    return j;
}

TrainConfig config_from_json(const json& j, TrainConfig c) {
    if (!j.is_object()) {
        throw InvalidArgument("config must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "method") c.method = parse_method(value.get<std::string>());
        else if (key == "objective") c.objective = parse_objective(value.get<std::string>());
        else if (key == "aggregation") c.aggregation = parse_aggregation(value.get<std::string>());
        else if (key == "iters") c.iters = value.get<std::size_t>();
        else if (key == "batch") c.batch = value.get<std::size_t>();
        else if (key == "lr") c.lr = value.get<double>();
        else if (key == "lr_schedule") c.schedule = parse_schedule(value.get<std::string>());
        else if (key == "lr_final_ratio") c.lr_final_ratio = value.get<double>();
        else if (key == "beta") c.beta = value.get<double>();
        else if (key == "k") c.k = value.get<std::size_t>();
        else if (key == "m") c.m = value.get<std::size_t>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else if (key == "ortho_coef") c.ortho_coef = value.get<double>();
        else if (key == "fixed_lambda") {
            c.fixed_lambda = value.is_null() ? std::nullopt : std::optional(value.get<std::vector<double>>());
        } else if (key == "fixed_scaling") {
            c.fixed_scaling = value.is_null() ? std::nullopt : std::optional(value.get<double>());
        } else if (key == "ideal_margin") c.ideal_margin = value.get<double>();
        else if (key == "task_seed") c.task_seed = value.get<std::uint64_t>();
        else if (key == "n_ctx") c.n_ctx = value.get<std::size_t>();
        else if (key == "n_resp") c.n_resp = value.get<std::size_t>();
        else if (key == "hidden") c.hidden = value.get<std::size_t>();
        else if (key == "corr") c.corr = value.get<double>();
        else if (key == "n_pairs") c.n_pairs = value.get<std::size_t>();
        else if (key == "n_eval_pairs") c.n_eval_pairs = value.get<std::size_t>();
        else if (key == "data_seed") c.data_seed = value.get<std::uint64_t>();
        else if (key == "eval_seed") c.eval_seed = value.get<std::uint64_t>();
        else throw InvalidArgument(fmt::format("unknown config key '{}'", key));
    }
    return c;
}

std::uint64_t reference_seed(const TrainConfig& config) { return config.task_seed * 1000003ULL + 17ULL; }

PolicyNet init_policy(const TrainConfig& config) {
    const TaskSpec spec{static_cast<Eigen::Index>(config.n_ctx), static_cast<Eigen::Index>(config.n_resp)};
    PolicyNet net = make_policy(spec, {static_cast<Eigen::Index>(config.hidden)}, static_cast<Eigen::Index>(config.k),
                                static_cast<Eigen::Index>(config.m), reference_seed(config), config.seed);
    if (config.fixed_scaling) {
        for (Adapter& layer : net.layers) {
            layer.scale = *config.fixed_scaling;
        }
    }
    return net;
}

Problem make_problem(const TrainConfig& config) {
    validate(config);
    Problem p;
    p.task = make_task(config.task_seed, static_cast<Eigen::Index>(config.n_ctx),
                       static_cast<Eigen::Index>(config.n_resp), config.m, config.corr);
    // W0 depends only on the task, so the reference is shared by every run.
    TrainConfig ref_config = config;
    ref_config.fixed_scaling.reset();
    const PolicyNet net = init_policy(ref_config);
    p.reference = reference_dist(net);
    p.log_reference = log_reference_dist(net);
    if (config.objective == ObjectiveKind::Dpo) {
        p.train_data = gen_preference_dataset(p.task, config.n_pairs, config.data_seed);
        p.eval_data = gen_preference_dataset(p.task, config.n_eval_pairs, config.eval_seed);
        p.ideal = IdealPoint::zeros(config.m);
    } else {
        p.ideal = oracle_ideal_point(p.task.reward, p.reference, config.beta, config.ideal_margin);
    }
    return p;
}

namespace {

class Adam {
public:
    explicit Adam(Eigen::Index n) : m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

    // Descent step on `grad` (of a loss).
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
        ++t_;
        m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
        v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
    }

private:
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
    std::size_t t_ = 0;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
};

double learning_rate(const TrainConfig& c, std::size_t step) {
    if (c.schedule == LrSchedule::Constant || c.iters <= 1) {
        return c.lr;
    }
    const double progress = static_cast<double>(step) / static_cast<double>(c.iters - 1);
    const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    return c.lr * (c.lr_final_ratio + (1.0 - c.lr_final_ratio) * cosine);
}

PreferenceSlice draw_batch(const PreferenceSlice& data, std::size_t batch, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    PreferenceSlice out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        out.push_back(data[pick(rng)]);
    }
    return out;
}

}  // namespace

TrainResult run_training(const TrainConfig& config, PolicyNet model, const PreferenceSource& source,
                         const StepObjective& objective) {
    validate(config);
    Rng rng(config.seed ^ 0xA5A5A5A5ULL);
    Eigen::VectorXd params = flatten(model);
    const std::vector<Eigen::Index> frozen = config.fixed_scaling ? scale_offsets(model) : std::vector<Eigen::Index>{};
    Adam adam(params.size());
    TrainResult result;
    double smoothed = 0.0;
    for (std::size_t step = 0; step < config.iters; ++step) {
        const PreferenceVector lam = source(rng);
        ad::Tape tape;
        ad::Var flat = tape.variable(params);
        const PolicyVars vars = bind_flat(tape, flat, model);
        ad::Var value = objective(log_response_dist(vars, lam), lam, rng);
        ad::Var loss = ad::subtract(ad::scale(orthogonality_penalty(vars), config.ortho_coef), value);
        Eigen::VectorXd grad = tape.backward(loss)[flat];
        for (Eigen::Index at : frozen) {
            grad(at) = 0.0;
        }
        if (!grad.allFinite()) {
            throw Error(fmt::format("non-finite gradient at step {}", step));
        }
        smoothed = step == 0 ? value.scalar() : 0.98 * smoothed + 0.02 * value.scalar();
        result.curve.push_back({step, value.scalar(), smoothed});
        adam.step(params, grad, learning_rate(config, step));
        ++result.steps;
    }
    unflatten(model, params);
    result.model = std::move(model);
    return result;
}

StepObjective make_step_objective(const TrainConfig& config, const Problem& problem) {
    const double beta = config.beta;
    const std::size_t m = config.m;
    const bool tche = config.aggregation == Aggregation::Tche;
    if (config.objective == ObjectiveKind::Rlhf) {
        return [&problem, beta, m, tche](ad::Var log_policy, const PreferenceVector& lam, Rng&) {
            std::vector<ad::Var> J;
            for (std::size_t i = 0; i < m; ++i) {
                J.push_back(rlhf_objective(log_policy, problem.log_reference, problem.task.reward.dim(i), beta));
            }
            return tche ? aggregate_tche(J, lam, problem.ideal) : aggregate_ls(J, lam);
        };
    }
    const std::size_t batch = config.batch;
    return [&problem, beta, m, tche, batch](ad::Var log_policy, const PreferenceVector& lam, Rng& rng) {
        std::vector<ad::Var> J;
        for (std::size_t i = 0; i < m; ++i) {
            const PreferenceSlice sample = draw_batch(problem.train_data.per_dim.at(i), batch, rng);
            J.push_back(ad::scale(dpo_loss(log_policy, problem.log_reference, sample, beta), -1.0));
        }
        return tche ? aggregate_tche(J, lam, problem.ideal) : aggregate_ls(J, lam);
    };
}

TrainResult train_panacea(const TrainConfig& config, const Problem& problem) {
    validate(config);
    if (config.method != Method::Panacea) {
        throw InvalidArgument("train_panacea needs method = panacea");
    }
    const std::size_t m = config.m;
    return run_training(config, init_policy(config), [m](Rng& rng) { return sample_preference(rng, m); },
                        make_step_objective(config, problem));
}

TrainResult train_dps(const TrainConfig& config, const Problem& problem) {
    if (!config.fixed_lambda) {
        throw InvalidArgument("method dps requires a fixed preference vector (--lambda)");
    }
    validate(config);
    const PreferenceVector lam(*config.fixed_lambda);
    return run_training(config, init_policy(config), [lam](Rng&) { return lam; }, make_step_objective(config, problem));
}

std::vector<TrainResult> train_rs(const TrainConfig& config, const Problem& problem) {
    std::vector<TrainResult> out;
    for (std::size_t i = 0; i < config.m; ++i) {
        TrainConfig expert = config;
        expert.method = Method::Dps;
        const PreferenceVector vertex = PreferenceVector::vertex(config.m, i);
        expert.fixed_lambda = std::vector<double>(vertex.weights().begin(), vertex.weights().end());
        expert.seed = config.seed + rs_seed_offset * i;
        out.push_back(train_dps(expert, problem));
    }
    return out;
}

TrainResult train(const TrainConfig& config, const Problem& problem) {
    switch (config.method) {
        case Method::Panacea: return train_panacea(config, problem);
        case Method::Dps: return train_dps(config, problem);
        case Method::Rs: return std::move(train_rs(config, problem).front());
    }
    throw InvalidArgument("unknown method");
}

PolicyNet rs_interpolate(const std::vector<PolicyNet>& models, const PreferenceVector& lam) {
    if (models.empty() || models.size() != lam.size()) {
        throw InvalidArgument(fmt::format("rs_interpolate: {} models for a {}-dimensional preference", models.size(),
                                          lam.size()));
    }
    Eigen::VectorXd mixed = Eigen::VectorXd::Zero(parameter_count(models.front()));
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (!same_structure(models[i], models.front())) {
            throw InvalidArgument(fmt::format("rs_interpolate: model {} has a different structure", i));
        }
        for (std::size_t l = 0; l < models[i].layers.size(); ++l) {
            if (models[i].layers[l].W0 != models.front().layers[l].W0) {
                throw InvalidArgument(fmt::format("rs_interpolate: model {} does not share W0", i));
            }
        }
        mixed += lam[i] * flatten(models[i]);
    }
    PolicyNet out = models.front();
    unflatten(out, mixed);
    return out;
}

Eigen::VectorXd evaluate_objectives(const PolicyNet& model, const PreferenceVector& lam, const TrainConfig& config,
                                    const Problem& problem) {
    const Tensor log_policy = log_response_dist(model, lam);
    if (config.objective == ObjectiveKind::Rlhf) {
        return rlhf_objectives(log_policy, problem.log_reference, problem.task.reward, config.beta);
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(config.m));
    for (std::size_t i = 0; i < config.m; ++i) {
        out(static_cast<Eigen::Index>(i)) =
            -dpo_loss(log_policy, problem.log_reference, problem.eval_data.per_dim.at(i), config.beta);
    }
    return out;
}

SweepResult sweep_model(const PolicyNet& model, const std::vector<PreferenceVector>& grid, const TrainConfig& config,
                        const Problem& problem, const std::string& method) {
    return front_sweep(
        grid, [&](const PreferenceVector& lam) { return evaluate_objectives(model, lam, config, problem); }, method);
}

MisalignmentResult train_misaligned(const TrainConfig& config, const Problem& problem,
                                    const std::vector<LabelerSpec>& labelers, std::size_t n_labels,
                                    std::uint64_t label_seed) {
    validate(config);
    if (config.objective != ObjectiveKind::Rlhf) {
        throw InvalidArgument("misalignment runs use the rlhf objective");
    }
    const ScalarLabelDataset labels = gen_scalar_label_data(problem.task, labelers, n_labels, label_seed);
    MisalignmentReport report{effective_preference(labelers), labels.portions(labelers.size()), 0.0, {}};

    Tensor pooled = Tensor::Zero(problem.task.spec.n_ctx, problem.task.spec.n_resp);
    for (std::size_t i = 0; i < labelers.size(); ++i) {
        pooled += report.empirical_portions[i] * scalarized_reward(problem.task.reward, labelers[i].preference);
    }
    const double beta = config.beta;
    const StepObjective objective = [&problem, pooled, beta](ad::Var log_policy, const PreferenceVector&, Rng&) {
        return rlhf_objective(log_policy, problem.log_reference, pooled, beta);
    };
    const PreferenceVector neutral = PreferenceVector::uniform(config.m);
    TrainResult trained = run_training(config, init_policy(config), [neutral](Rng&) { return neutral; }, objective);

    const Tensor log_policy = log_response_dist(trained.model, neutral);
    auto kl_to = [&](const PreferenceVector& lam) {
        const Tensor target = closed_form_optimal_policy(problem.task.reward, problem.reference, lam, beta);
        return kl_divergence(log_policy, target.array().log().matrix());
    };
    report.kl_to_optimum = kl_to(report.lam_opt);
    for (const LabelerSpec& l : labelers) {
        report.kl_to_labelers.push_back(kl_to(l.preference));
    }
    return {std::move(trained), std::move(report)};
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

void dump_value(std::string& out, const ordered_json& j, int indent, int depth) {
    const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
    const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case ordered_json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{";
            out += nl;
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) {
                    out += ",";
                    out += nl;
                }
                first = false;
                out += pad + ordered_json(key).dump() + (indent > 0 ? ": " : ":");
                dump_value(out, value, indent, depth + 1);
            }
            out += nl + close_pad + "}";
            return;
        }
        case ordered_json::value_t::array: {
            // Arrays of scalars stay on one line.
            const bool flat = std::none_of(j.begin(), j.end(), [](const auto& v) { return v.is_structured(); });
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[";
            if (!flat) out += nl;
            bool first = true;
            for (const auto& value : j) {
                if (!first) {
                    out += ",";
                    out += flat ? "" : nl;
                }
                first = false;
                if (!flat) out += pad;
                dump_value(out, value, indent, depth + 1);
            }
            if (!flat) out += nl + close_pad;
            out += "]";
            return;
        }
        case ordered_json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                throw Error("cannot serialize a non-finite number");
            }
            if (v == 0.0 && std::signbit(v)) {
                out += "-0.0";
            } else {
                out += format_double(v);
            }
            return;
        }
        default:
            out += j.dump();
    }
}

ordered_json matrix_json(const Tensor& t) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < t.cols(); ++c) {
            row.push_back(t(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Tensor matrix_from(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) {
        throw CheckpointError(CheckpointError::Kind::Corrupt, fmt::format("checkpoint field {} is not a matrix", what));
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Tensor out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw CheckpointError(CheckpointError::Kind::Corrupt, fmt::format("checkpoint field {} is ragged", what));
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            out(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return out;
}

}  // namespace

std::string dump_exact(const ordered_json& j, int indent) {
    std::string out;
    dump_value(out, j, indent, 0);
    return out;
}

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
    ordered_json doc;
    doc["format_version"] = checkpoint_format_version;
    doc["config"] = to_json(checkpoint.config);
    doc["step"] = checkpoint.step;
    ordered_json params;
    for (std::size_t l = 0; l < checkpoint.model.layers.size(); ++l) {
        const Adapter& layer = checkpoint.model.layers[l];
        ordered_json lj;
        lj["W0"] = matrix_json(layer.W0);
        lj["U"] = matrix_json(layer.U);
        lj["V"] = matrix_json(layer.V);
        ordered_json sigma = ordered_json::array();
        for (Eigen::Index j = 0; j < layer.k(); ++j) {
            sigma.push_back(layer.sigma(0, j));
        }
        lj["sigma"] = std::move(sigma);
        lj["s"] = layer.scale;
        params[fmt::format("layer_{}", l)] = std::move(lj);
    }
    doc["params"] = std::move(params);
    return dump_exact(doc) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw CheckpointError(CheckpointError::Kind::Corrupt, fmt::format("checkpoint is not valid JSON: {}", e.what()));
    }
    try {
        if (!doc.is_object() || !doc.contains("format_version")) {
            throw CheckpointError(CheckpointError::Kind::Corrupt, "checkpoint lacks format_version");
        }
        const json& version = doc.at("format_version");
        if (!version.is_number_integer() || version.get<int>() != checkpoint_format_version) {
            throw CheckpointError(CheckpointError::Kind::Version,
                                  fmt::format("unsupported checkpoint format_version {} (expected {})", version.dump(),
                                              checkpoint_format_version));
        }
        Checkpoint out;
        out.config = config_from_json(doc.at("config"));
        out.step = doc.at("step").get<std::size_t>();
        const json& params = doc.at("params");
        for (std::size_t l = 0; params.contains(fmt::format("layer_{}", l)); ++l) {
            const json& lj = params.at(fmt::format("layer_{}", l));
            Adapter layer;
            layer.W0 = matrix_from(lj.at("W0"), "W0");
            layer.U = matrix_from(lj.at("U"), "U");
            layer.V = matrix_from(lj.at("V"), "V");
            const auto sigma = lj.at("sigma").get<std::vector<double>>();
            layer.sigma = Tensor(1, static_cast<Eigen::Index>(sigma.size()));
            for (std::size_t j = 0; j < sigma.size(); ++j) {
                layer.sigma(0, static_cast<Eigen::Index>(j)) = sigma[j];
            }
            layer.scale = lj.at("s").get<double>();
            if (layer.U.rows() != layer.W0.rows() || layer.V.rows() != layer.W0.cols() ||
                layer.U.cols() != layer.V.cols() ||
                layer.U.cols() != static_cast<Eigen::Index>(out.config.k + out.config.m) ||
                layer.k() != static_cast<Eigen::Index>(out.config.k)) {
                throw CheckpointError(CheckpointError::Kind::Corrupt,
                                      fmt::format("layer_{} shapes disagree with the config", l));
            }
            out.model.layers.push_back(std::move(layer));
        }
        if (out.model.layers.empty()) {
            throw CheckpointError(CheckpointError::Kind::Corrupt, "checkpoint has no layers");
        }
        return out;
    } catch (const json::exception& e) {
        throw CheckpointError(CheckpointError::Kind::Corrupt, fmt::format("malformed checkpoint: {}", e.what()));
    } catch (const InvalidArgument& e) {
        throw CheckpointError(CheckpointError::Kind::Corrupt, fmt::format("malformed checkpoint config: {}", e.what()));
    }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    const std::string text = serialize_checkpoint(checkpoint);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw CheckpointError(CheckpointError::Kind::Io, fmt::format("cannot open {} for writing", path));
    }
    out << text;
    if (!out.flush()) {
        throw CheckpointError(CheckpointError::Kind::Io, fmt::format("failed writing {}", path));
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError(CheckpointError::Kind::Io, fmt::format("cannot open checkpoint {}", path));
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_checkpoint(buffer.str());
}

}  // namespace panacea
