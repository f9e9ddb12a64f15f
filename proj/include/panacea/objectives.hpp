#pragma once

// Per-dimension alignment objectives and their aggregations.
//
// Policies enter as log-probability tables (n_ctx x n_resp). The RLHF
// objective is evaluated exactly, as an expectation over uniform contexts and
// the policy's response distribution; DPO losses average over tuples.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "panacea/adapter.hpp"
#include "panacea/autodiff.hpp"
#include "panacea/policy.hpp"

namespace panacea {

struct RewardTable {
    std::vector<Tensor> values;  // one n_ctx x n_resp table per dimension

    std::size_t m() const { return values.size(); }
    Eigen::Index n_ctx() const { return values.front().rows(); }
    Eigen::Index n_resp() const { return values.front().cols(); }
    const Tensor& dim(std::size_t i) const { return values.at(i); }
};

struct PreferencePair {
    Eigen::Index context = 0;
    Eigen::Index winner = 0;
    Eigen::Index loser = 0;

    friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

using PreferenceSlice = std::vector<PreferencePair>;

struct PreferenceDataset {
    std::vector<PreferenceSlice> per_dim;
    std::uint64_t seed = 0;
    std::string generator;
};

void validate(const PreferenceSlice& slice, Eigen::Index n_ctx, Eigen::Index n_resp);

struct IdealPoint {
    std::vector<double> z;

    static IdealPoint zeros(std::size_t m) { return {std::vector<double>(m, 0.0)}; }
    bool covers(std::span<const double> values) const;
};

// Mean over contexts of KL(pi(.|x) || pi_ref(.|x)).
double kl_divergence(const Tensor& log_policy, const Tensor& log_reference);

double rlhf_objective(const Tensor& log_policy, const Tensor& log_reference, const Tensor& reward, double beta);
Eigen::VectorXd rlhf_objectives(const Tensor& log_policy, const Tensor& log_reference, const RewardTable& reward,
                                double beta);
double rlhf_objective(const PolicyNet& model, const PreferenceVector& lam, std::size_t dim, const RewardTable& reward,
                      double beta);

ad::Var rlhf_objective(ad::Var log_policy, const Tensor& log_reference, const Tensor& reward, double beta);

double dpo_loss(const Tensor& log_policy, const Tensor& log_reference, const PreferenceSlice& data, double beta);
double dpo_loss(const PolicyNet& model, const PreferenceVector& lam, const PreferenceSlice& data, double beta);
ad::Var dpo_loss(ad::Var log_policy, const Tensor& log_reference, const PreferenceSlice& data, double beta);

double aggregate_ls(std::span<const double> values, const PreferenceVector& lam);
ad::Var aggregate_ls(std::span<const ad::Var> values, const PreferenceVector& lam);

// Maximization form min_i lam_i (v_i - z_i). Terms with lam_i = 0 contribute 0.
double aggregate_tche(std::span<const double> values, const PreferenceVector& lam, const IdealPoint& z);
ad::Var aggregate_tche(std::span<const ad::Var> values, const PreferenceVector& lam, const IdealPoint& z);

double implicit_reward_accuracy(const Tensor& log_policy, const Tensor& log_reference, const PreferenceSlice& data,
                                double beta);
double implicit_reward_accuracy(const PolicyNet& model, const PreferenceSlice& data, double beta,
                                const PreferenceVector& lam);

// max_i lam_i (v_i - z_i) - min_i lam_i (v_i - z_i); interior lam only.
double tche_exactness_residual(std::span<const double> values, const PreferenceVector& lam, const IdealPoint& z);

}  // namespace panacea
