#pragma once

// Synthetic alignment tasks with known ground truth: conflicting reward
// tables, Bradley-Terry preference data, heterogeneous scalar labelers, and
// the closed-form KL-regularized optimum used as the reference front.

#include <cstdint>
#include <vector>

#include "panacea/adapter.hpp"
#include "panacea/objectives.hpp"
#include "panacea/pareto.hpp"
#include "panacea/policy.hpp"

namespace panacea {

struct Task {
    TaskSpec spec;
    RewardTable reward;
    std::uint64_t seed = 0;
    double corr = 0.0;
};

/// Rewards are jointly Gaussian with correlation `corr` (m = 2; m >= 3 draws
/// independent dimensions) and then standardized per dimension over all (x, y).
Task make_task(std::uint64_t seed, Eigen::Index n_ctx, Eigen::Index n_resp, std::size_t m, double corr);

/// Uniform (x, y_a, y_b) with y_a != y_b; y_a wins with probability
/// sigmoid(r(x, y_a) - r(x, y_b)).
PreferenceSlice gen_preference_data(const Task& task, std::size_t dim, std::size_t n_pairs, std::uint64_t seed);

PreferenceDataset gen_preference_dataset(const Task& task, std::size_t n_pairs, std::uint64_t seed);

/// {format_version, generator, seed, task: {seed, n_ctx, n_resp, m, corr},
///  dimensions: [[[context, winner, loser], ...], ...]}
nlohmann::ordered_json dataset_to_json(const PreferenceDataset& data, const Task& task);
/// Validates every pair against the recorded task shape.
PreferenceDataset dataset_from_json(const nlohmann::json& j);

struct LabelerSpec {
    double portion = 0.0;
    PreferenceVector preference;
};

void validate(const std::vector<LabelerSpec>& labelers);

/// lam_opt_j = sum_i p^i lam^i_j
PreferenceVector effective_preference(const std::vector<LabelerSpec>& labelers);

struct ScalarLabelDataset {
    PreferenceSlice pairs;
    std::vector<std::size_t> labeler;  // which labeler judged each pair
    std::uint64_t seed = 0;

    /// Fraction of pairs judged by each labeler.
    std::vector<double> portions(std::size_t n_labelers) const;
};

ScalarLabelDataset gen_scalar_label_data(const Task& task, const std::vector<LabelerSpec>& labelers, std::size_t n,
                                         std::uint64_t seed);

/// r_lam(x, y) = sum_i lam_i r_i(x, y)
Tensor scalarized_reward(const RewardTable& reward, const PreferenceVector& lam);

/// pi*(y|x) proportional to pi_ref(y|x) exp(r_lam(x, y) / beta), row-normalized.
Tensor closed_form_optimal_policy(const RewardTable& reward, const Tensor& reference, const PreferenceVector& lam,
                                  double beta);

struct OracleEntry {
    PreferenceVector lam;
    Eigen::VectorXd objectives;
    Tensor policy;
};

struct OracleFront {
    std::vector<OracleEntry> entries;  // one per grid point, grid order
    Front front;                       // Pareto-filtered
};

OracleFront oracle_front(const RewardTable& reward, const Tensor& reference,
                         const std::vector<PreferenceVector>& grid, double beta);

/// Per-dimension maximum of J_i over all policies (attained at the vertex
/// optimum) plus `margin`.
IdealPoint oracle_ideal_point(const RewardTable& reward, const Tensor& reference, double beta, double margin = 0.1);

}  // namespace panacea
