#pragma once

// Panacea training (one model, a fresh preference vector every step) and the
// DPS / RS baselines, plus the versioned JSON checkpoint format.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "panacea/adapter.hpp"
#include "panacea/objectives.hpp"
#include "panacea/pareto.hpp"
#include "panacea/policy.hpp"
#include "panacea/synth_task.hpp"

namespace panacea {

enum class Method { Panacea, Dps, Rs };
enum class ObjectiveKind { Rlhf, Dpo };
enum class Aggregation { Ls, Tche };
enum class LrSchedule { Constant, Cosine };

std::string to_string(Method v);
std::string to_string(ObjectiveKind v);
std::string to_string(Aggregation v);
std::string to_string(LrSchedule v);
Method parse_method(const std::string& s);
ObjectiveKind parse_objective(const std::string& s);
Aggregation parse_aggregation(const std::string& s);
LrSchedule parse_schedule(const std::string& s);

struct TrainConfig {
    Method method = Method::Panacea;
    ObjectiveKind objective = ObjectiveKind::Rlhf;
    Aggregation aggregation = Aggregation::Ls;
    std::size_t iters = 2000;
    std::size_t batch = 64;
    double lr = 1e-2;
    LrSchedule schedule = LrSchedule::Cosine;
    double lr_final_ratio = 0.05;
    double beta = 0.1;
    std::size_t k = 4;
    std::size_t m = 2;
    std::uint64_t seed = 7;
    double ortho_coef = 1e-3;
    std::optional<std::vector<double>> fixed_lambda;  // dps
    std::optional<double> fixed_scaling;              // ablation: s frozen at this value
    double ideal_margin = 0.1;                        // rlhf + tche

    // Task generation.
    std::uint64_t task_seed = 7;
    std::size_t n_ctx = 8;
    std::size_t n_resp = 16;
    std::size_t hidden = 32;
    double corr = -0.5;

    // DPO data.
    std::size_t n_pairs = 2000;
    std::size_t n_eval_pairs = 2000;
    std::uint64_t data_seed = 101;
    std::uint64_t eval_seed = 202;
};

/// Throws InvalidArgument naming the offending field.
void validate(const TrainConfig& config);

nlohmann::ordered_json to_json(const TrainConfig& config);
/// Fields absent from `j` keep their value in `base`.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Everything derived deterministically from a config: the task, the frozen
/// reference policy, DPO datasets and the ideal point.
struct Problem {
    Task task;
    Tensor reference;
    Tensor log_reference;
    PreferenceDataset train_data;  // empty for rlhf
    PreferenceDataset eval_data;
    IdealPoint ideal;
};

Problem make_problem(const TrainConfig& config);
PolicyNet init_policy(const TrainConfig& config);
std::uint64_t reference_seed(const TrainConfig& config);

struct CurvePoint {
    std::size_t step = 0;
    double objective = 0.0;
    double smoothed = 0.0;
};

struct TrainResult {
    PolicyNet model;
    std::size_t steps = 0;
    std::vector<CurvePoint> curve;
};

using PreferenceSource = std::function<PreferenceVector(Rng&)>;
/// Objective to maximize for one step, given the log-policy node and the
/// embedded preference vector.
using StepObjective = std::function<ad::Var(ad::Var log_policy, const PreferenceVector& lam, Rng& rng)>;

/// Adam ascent on `objective - ortho_coef * orthogonality_penalty`.
TrainResult run_training(const TrainConfig& config, PolicyNet model, const PreferenceSource& source,
                         const StepObjective& objective);

/// Aggregated per-dimension objective selected by the config.
StepObjective make_step_objective(const TrainConfig& config, const Problem& problem);

TrainResult train_panacea(const TrainConfig& config, const Problem& problem);
TrainResult train_dps(const TrainConfig& config, const Problem& problem);
/// Run i is train_dps at vertex e_i with seed + rs_seed_offset * i.
std::vector<TrainResult> train_rs(const TrainConfig& config, const Problem& problem);
inline constexpr std::uint64_t rs_seed_offset = 1000;

/// Dispatches on config.method; RS returns its first expert.
TrainResult train(const TrainConfig& config, const Problem& problem);

/// Trainable parameters set to sum_i lam_i theta_i; W0 must be shared.
PolicyNet rs_interpolate(const std::vector<PolicyNet>& models, const PreferenceVector& lam);

/// Exact objective vector: J_i for rlhf, -L_i on the held-out set for dpo.
Eigen::VectorXd evaluate_objectives(const PolicyNet& model, const PreferenceVector& lam, const TrainConfig& config,
                                    const Problem& problem);

SweepResult sweep_model(const PolicyNet& model, const std::vector<PreferenceVector>& grid, const TrainConfig& config,
                        const Problem& problem, const std::string& method);

struct MisalignmentReport {
    PreferenceVector lam_opt;              // sum_i p^i lam^i with the configured portions
    std::vector<double> empirical_portions;  // measured on the generated labels
    double kl_to_optimum = 0.0;            // KL(pi_trained || pi*_{lam_opt})
    std::vector<double> kl_to_labelers;    // KL(pi_trained || pi*_{lam^i})
};

struct MisalignmentResult {
    TrainResult trained;
    MisalignmentReport report;
};

/// Trains a single-objective model on scalar labels pooled from heterogeneous
/// labelers. Labeler i judges with r^i = sum_j lam^i_j r_j; the pooled reward
/// weights each r^i by its empirical share of the `n_labels` labels. The
/// model's preference input is held at the uniform vector.
MisalignmentResult train_misaligned(const TrainConfig& config, const Problem& problem,
                                    const std::vector<LabelerSpec>& labelers, std::size_t n_labels,
                                    std::uint64_t label_seed);

struct Checkpoint {
    TrainConfig config;
    std::size_t step = 0;
    PolicyNet model;
};

inline constexpr int checkpoint_format_version = 1;

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// JSON text with every floating-point value written with 17 significant digits.
std::string dump_exact(const nlohmann::ordered_json& j, int indent = 2);

}  // namespace panacea
