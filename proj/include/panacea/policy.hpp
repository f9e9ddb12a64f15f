#pragma once

// Feed-forward stochastic policy over one-hot contexts and atomic responses.
// Every weight matrix is an SVD-LoRA adapter; tanh between layers, softmax on
// the output. The reference policy is the same network evaluated with W0 only.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "panacea/adapter.hpp"
#include "panacea/autodiff.hpp"

namespace panacea {

struct TaskSpec {
    Eigen::Index n_ctx = 8;
    Eigen::Index n_resp = 16;
};

void validate(const TaskSpec& spec);

struct PolicyNet {
    std::vector<Adapter> layers;

    Eigen::Index n_ctx() const { return layers.front().rows(); }
    Eigen::Index n_resp() const { return layers.back().cols(); }
    Eigen::Index k() const { return layers.front().k(); }
    Eigen::Index m() const { return layers.front().m(); }
};

inline constexpr double reference_weight_std = 0.5;

/// W0 entries ~ N(0, reference_weight_std) from `reference_seed`, so every method trained on
/// one task shares the same reference policy. Adapter factors come from
/// `adapter_seed`.
PolicyNet make_policy(const TaskSpec& spec, const std::vector<Eigen::Index>& hidden, Eigen::Index k, Eigen::Index m,
                      std::uint64_t reference_seed, std::uint64_t adapter_seed);

bool same_structure(const PolicyNet& a, const PolicyNet& b);

// Value-level evaluation. Rows are contexts, columns responses.
Tensor response_logits(const PolicyNet& net, const PreferenceVector& lam);
Tensor response_dist(const PolicyNet& net, const PreferenceVector& lam);
Tensor log_response_dist(const PolicyNet& net, const PreferenceVector& lam);
Tensor reference_dist(const PolicyNet& net);
Tensor log_reference_dist(const PolicyNet& net);

Eigen::RowVectorXd response_dist(const PolicyNet& net, Eigen::Index context, const PreferenceVector& lam);
Eigen::RowVectorXd reference_dist(const PolicyNet& net, Eigen::Index context);
double log_prob(const PolicyNet& net, Eigen::Index context, Eigen::Index response, const PreferenceVector& lam);

// Flat trainable parameters: per layer U, V, sigma (row-major), then s.
Eigen::Index parameter_count(const PolicyNet& net);
Eigen::VectorXd flatten(const PolicyNet& net);
void unflatten(PolicyNet& net, const Eigen::VectorXd& params);
/// Offsets of each layer's scale factor inside the flat vector.
std::vector<Eigen::Index> scale_offsets(const PolicyNet& net);

struct PolicyVars {
    std::vector<AdapterVars> layers;
    Eigen::Index n_ctx = 0;
};

/// Binds the network to `flat` (a parameter_count x 1 leaf); W0 enters as constants.
PolicyVars bind_flat(ad::Tape& tape, ad::Var flat, const PolicyNet& structure);

ad::Var log_response_dist(const PolicyVars& vars, const PreferenceVector& lam);
ad::Var orthogonality_penalty(const PolicyVars& vars);

}  // namespace panacea
