#include "panacea/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "panacea/error.hpp"

namespace panacea {

namespace {

void require_beta(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw InvalidArgument(fmt::format("beta must be positive, got {}", beta));
    }
}

void require_nonempty(const PreferenceSlice& data) {
    if (data.empty()) {
        throw InvalidArgument("preference dataset is empty");
    }
}

void require_lengths(std::size_t values, const PreferenceVector& lam) {
    if (values != lam.size()) {
        throw InvalidArgument(fmt::format("{} objective values for a {}-dimensional preference", values, lam.size()));
    }
}

void require_lengths(std::size_t values, const PreferenceVector& lam, const IdealPoint& z) {
    require_lengths(values, lam);
    if (z.z.size() != values) {
        throw InvalidArgument(fmt::format("ideal point has {} entries, expected {}", z.z.size(), values));
    }
}

void require_table(const Tensor& log_policy, const Tensor& other, const char* what) {
    if (log_policy.rows() != other.rows() || log_policy.cols() != other.cols()) {
        throw ShapeError(fmt::format("{} table is {}x{}, policy is {}x{}", what, other.rows(), other.cols(),
                                     log_policy.rows(), log_policy.cols()));
    }
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> entries_of(const PreferenceSlice& data, bool winners) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
    out.reserve(data.size());
    for (const PreferencePair& p : data) {
        out.emplace_back(p.context, winners ? p.winner : p.loser);
    }
    return out;
}

// beta * [log-ratio(y_w) - log-ratio(y_l)] per tuple
Eigen::VectorXd dpo_margins(const Tensor& log_policy, const Tensor& log_reference, const PreferenceSlice& data,
                            double beta) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const PreferencePair& p = data[i];
        const double rw = log_policy(p.context, p.winner) - log_reference(p.context, p.winner);
        const double rl = log_policy(p.context, p.loser) - log_reference(p.context, p.loser);
        out(static_cast<Eigen::Index>(i)) = beta * rw - beta * rl;
    }
    return out;
}

}  // namespace

void validate(const PreferenceSlice& slice, Eigen::Index n_ctx, Eigen::Index n_resp) {
    for (const PreferencePair& p : slice) {
        if (p.context < 0 || p.context >= n_ctx || p.winner < 0 || p.winner >= n_resp || p.loser < 0 ||
            p.loser >= n_resp) {
            throw InvalidArgument(fmt::format("preference tuple ({}, {}, {}) outside {}x{} task", p.context, p.winner,
                                              p.loser, n_ctx, n_resp));
        }
        if (p.winner == p.loser) {
            throw InvalidArgument(fmt::format("preference tuple in context {} has winner == loser", p.context));
        }
    }
}

bool IdealPoint::covers(std::span<const double> values) const {
    if (values.size() != z.size()) {
        return false;
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (values[i] > z[i]) {
            return false;
        }
    }
    return true;
}

double kl_divergence(const Tensor& log_policy, const Tensor& log_reference) {
    require_table(log_policy, log_reference, "reference");
    const Tensor probs = log_policy.array().exp();
    return (probs.array() * (log_policy - log_reference).array()).sum() / static_cast<double>(log_policy.rows());
}

double rlhf_objective(const Tensor& log_policy, const Tensor& log_reference, const Tensor& reward, double beta) {
    require_beta(beta);
    require_table(log_policy, reward, "reward");
    const Tensor probs = log_policy.array().exp();
    const double expected = probs.cwiseProduct(reward).sum() / static_cast<double>(log_policy.rows());
    return expected - beta * kl_divergence(log_policy, log_reference);
}

Eigen::VectorXd rlhf_objectives(const Tensor& log_policy, const Tensor& log_reference, const RewardTable& reward,
                                double beta) {
    require_beta(beta);
    const double kl = kl_divergence(log_policy, log_reference);
    const Tensor probs = log_policy.array().exp();
    Eigen::VectorXd out(static_cast<Eigen::Index>(reward.m()));
    for (std::size_t i = 0; i < reward.m(); ++i) {
        require_table(log_policy, reward.dim(i), "reward");
        out(static_cast<Eigen::Index>(i)) =
            probs.cwiseProduct(reward.dim(i)).sum() / static_cast<double>(log_policy.rows()) - beta * kl;
    }
    return out;
}

double rlhf_objective(const PolicyNet& model, const PreferenceVector& lam, std::size_t dim, const RewardTable& reward,
                      double beta) {
    return rlhf_objective(log_response_dist(model, lam), log_reference_dist(model), reward.dim(dim), beta);
}

ad::Var rlhf_objective(ad::Var log_policy, const Tensor& log_reference, const Tensor& reward, double beta) {
    require_beta(beta);
    require_table(log_policy.value(), reward, "reward");
    require_table(log_policy.value(), log_reference, "reference");
    ad::Tape& tape = *log_policy.tape;
    const double inv_ctx = 1.0 / static_cast<double>(log_policy.rows());
    ad::Var probs = ad::exp(log_policy);
    // E[r] - beta * KL = sum_x,y p * (r - beta * (log p - log p_ref)) / n_ctx
    ad::Var log_ratio = ad::subtract(log_policy, tape.constant(log_reference));
    ad::Var integrand = ad::subtract(tape.constant(reward), ad::scale(log_ratio, beta));
    return ad::scale(ad::sum(ad::multiply(probs, integrand)), inv_ctx);
}

double dpo_loss(const Tensor& log_policy, const Tensor& log_reference, const PreferenceSlice& data, double beta) {
    require_beta(beta);
    require_nonempty(data);
    validate(data, log_policy.rows(), log_policy.cols());
    const Eigen::VectorXd margins = dpo_margins(log_policy, log_reference, data, beta);
    double total = 0.0;
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
        total -= ad::log_sigmoid(margins(i));
    }
    return total / static_cast<double>(margins.size());
}

double dpo_loss(const PolicyNet& model, const PreferenceVector& lam, const PreferenceSlice& data, double beta) {
    return dpo_loss(log_response_dist(model, lam), log_reference_dist(model), data, beta);
}

ad::Var dpo_loss(ad::Var log_policy, const Tensor& log_reference, const PreferenceSlice& data, double beta) {
    require_beta(beta);
    require_nonempty(data);
    validate(data, log_policy.rows(), log_policy.cols());
    ad::Tape& tape = *log_policy.tape;
    const auto winners = entries_of(data, true);
    const auto losers = entries_of(data, false);
    Tensor ref_offset(static_cast<Eigen::Index>(data.size()), 1);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const PreferencePair& p = data[i];
        ref_offset(static_cast<Eigen::Index>(i), 0) =
            log_reference(p.context, p.winner) - log_reference(p.context, p.loser);
    }
    ad::Var diff = ad::subtract(ad::gather(log_policy, winners), ad::gather(log_policy, losers));
    ad::Var margin = ad::scale(ad::subtract(diff, tape.constant(std::move(ref_offset))), beta);
    return ad::scale(ad::mean(ad::log_sigmoid(margin)), -1.0);
}

double aggregate_ls(std::span<const double> values, const PreferenceVector& lam) {
    require_lengths(values.size(), lam);
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        total += lam[i] * values[i];
    }
    return total;
}

ad::Var aggregate_ls(std::span<const ad::Var> values, const PreferenceVector& lam) {
    require_lengths(values.size(), lam);
    ad::Var total = ad::scale(values[0], lam[0]);
    for (std::size_t i = 1; i < values.size(); ++i) {
        total = ad::add(total, ad::scale(values[i], lam[i]));
    }
    return total;
}

double aggregate_tche(std::span<const double> values, const PreferenceVector& lam, const IdealPoint& z) {
    require_lengths(values.size(), lam, z);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double term = lam[i] == 0.0 ? 0.0 : lam[i] * (values[i] - z.z[i]);
        worst = std::min(worst, term);
    }
    return worst;
}

ad::Var aggregate_tche(std::span<const ad::Var> values, const PreferenceVector& lam, const IdealPoint& z) {
    require_lengths(values.size(), lam, z);
    std::vector<ad::Var> terms;
    terms.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        terms.push_back(ad::scale(ad::add_scalar(values[i], -z.z[i]), lam[i]));
    }
    return ad::min_of(terms);
}

double implicit_reward_accuracy(const Tensor& log_policy, const Tensor& log_reference, const PreferenceSlice& data,
                                double beta) {
    require_nonempty(data);
    validate(data, log_policy.rows(), log_policy.cols());
    double hits = 0.0;
    for (const PreferencePair& p : data) {
        const double rw = beta * (log_policy(p.context, p.winner) - log_reference(p.context, p.winner));
        const double rl = beta * (log_policy(p.context, p.loser) - log_reference(p.context, p.loser));
        if (rw > rl) {
            hits += 1.0;
        } else if (rw == rl) {
            hits += 0.5;
        }
    }
    return hits / static_cast<double>(data.size());
}

double implicit_reward_accuracy(const PolicyNet& model, const PreferenceSlice& data, double beta,
                                const PreferenceVector& lam) {
    return implicit_reward_accuracy(log_response_dist(model, lam), log_reference_dist(model), data, beta);
}

double tche_exactness_residual(std::span<const double> values, const PreferenceVector& lam, const IdealPoint& z) {
    require_lengths(values.size(), lam, z);
    if (!lam.is_interior()) {
        throw InvalidArgument("tche_exactness_residual needs an interior preference vector");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double term = lam[i] * (values[i] - z.z[i]);
        lo = std::min(lo, term);
        hi = std::max(hi, term);
    }
    return hi - lo;
}

}  // namespace panacea
