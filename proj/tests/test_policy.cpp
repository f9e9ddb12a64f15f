#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "panacea/error.hpp"
#include "panacea/policy.hpp"
#include "panacea/training.hpp"

using namespace panacea;

namespace {

PolicyNet small_policy(std::uint64_t adapter_seed = 2) { return make_policy({8, 16}, {32}, 4, 2, 1, adapter_seed); }

// Same network with every trainable factor perturbed away from init.
PolicyNet perturbed(PolicyNet net, std::uint64_t seed, double stddev = 0.5) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, stddev);
    Eigen::VectorXd flat = flatten(net);
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
        flat(i) = normal(rng);
    }
    unflatten(net, flat);
    return net;
}

TEST(Policy, InitEqualsReference) {
    const PolicyNet net = small_policy();
    const Tensor ref = reference_dist(net);
    for (const PreferenceVector& lam : {PreferenceVector{1.0, 0.0}, PreferenceVector{0.5, 0.5}, PreferenceVector{0.1, 0.9}}) {
        EXPECT_EQ(response_dist(net, lam), ref);
        for (Eigen::Index x = 0; x < net.n_ctx(); ++x) {
            EXPECT_EQ(response_dist(net, x, lam), reference_dist(net, x));
        }
    }
}

TEST(Policy, DistributionsAreNormalized) {
    const PolicyNet net = perturbed(small_policy(), 3);
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        const Tensor p = response_dist(net, sample_preference(rng, 2));
        EXPECT_GE(p.minCoeff(), 0.0);
        for (Eigen::Index x = 0; x < p.rows(); ++x) {
            EXPECT_NEAR(p.row(x).sum(), 1.0, 1e-12);
        }
    }
}

TEST(Policy, ReferenceIsSharedAcrossAdapterSeeds) {
    EXPECT_EQ(reference_dist(small_policy(2)), reference_dist(small_policy(99)));
}

TEST(Policy, UniformOutputLogProb) {
    PolicyNet net = small_policy();
    net.layers.back().W0.setZero();
    EXPECT_NEAR(log_prob(net, 0, 3, {0.5, 0.5}), -std::log(16.0), 1e-12);
}

TEST(Policy, LogProbMatchesDistribution) {
    const PolicyNet net = perturbed(small_policy(), 5);
    const PreferenceVector lam{0.3, 0.7};
    const Tensor p = response_dist(net, lam);
    EXPECT_NEAR(std::exp(log_prob(net, 2, 5, lam)), p(2, 5), 1e-14);
    EXPECT_LT((log_response_dist(net, lam).array().exp().matrix() - p).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Policy, InvalidContextRejected) {
    const PolicyNet net = small_policy();
    EXPECT_THROW(response_dist(net, 8, {0.5, 0.5}), InvalidArgument);
    EXPECT_THROW(reference_dist(net, -1), InvalidArgument);
    EXPECT_THROW(log_prob(net, 0, 16, {0.5, 0.5}), InvalidArgument);
}

TEST(Policy, WrongPreferenceLengthRejected) {
    const PolicyNet net = small_policy();
    EXPECT_THROW(response_dist(net, {0.2, 0.3, 0.5}), InvalidArgument);
}

TEST(Policy, FlattenRoundTrip) {
    const PolicyNet net = perturbed(small_policy(), 6);
    PolicyNet copy = small_policy();
    unflatten(copy, flatten(net));
    EXPECT_EQ(flatten(copy), flatten(net));
    EXPECT_EQ(response_dist(copy, {0.4, 0.6}), response_dist(net, {0.4, 0.6}));
    EXPECT_EQ(parameter_count(net), flatten(net).size());
    for (Eigen::Index off : scale_offsets(net)) {
        EXPECT_LT(off, parameter_count(net));
    }
}

TEST(Policy, BoundForwardMatchesValueLevel) {
    const PolicyNet net = perturbed(small_policy(), 7);
    const PreferenceVector lam{0.25, 0.75};
    ad::Tape tape;
    const ad::Var flat = tape.variable(flatten(net));
    const PolicyVars vars = bind_flat(tape, flat, net);
    EXPECT_LT((log_response_dist(vars, lam).value() - log_response_dist(net, lam)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Policy, CompositeForwardMatchesFiniteDifferences) {
    const PolicyNet net = perturbed(small_policy(), 8, 0.3);
    const PreferenceVector lam{0.6, 0.4};
    Rng rng(9);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor weights(net.n_ctx(), net.n_resp());
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        weights.data()[i] = normal(rng);
    }
    const double err = ad::grad_check(
        [&](ad::Tape& tape, ad::Var flat) {
            const PolicyVars vars = bind_flat(tape, flat, net);
            return ad::sum(ad::multiply(ad::softmax_rows(log_response_dist(vars, lam)), tape.constant(weights)));
        },
        flatten(net), 1e-5, ad::Differencing::richardson);
    EXPECT_LT(err, 1e-5);
}

TEST(Policy, ReferenceFrozenByTraining) {
    TrainConfig config;
    config.iters = 100;
    const Problem problem = make_problem(config);
    const PolicyNet before = init_policy(config);
    const TrainResult trained = train_panacea(config, problem);
    EXPECT_EQ(reference_dist(trained.model), reference_dist(before));
    for (std::size_t l = 0; l < before.layers.size(); ++l) {
        EXPECT_EQ(trained.model.layers[l].W0, before.layers[l].W0);
    }
    EXPECT_NE(response_dist(trained.model, {1.0, 0.0}), reference_dist(before));
}

TEST(Policy, SameStructure) {
    EXPECT_TRUE(same_structure(small_policy(2), small_policy(3)));
    EXPECT_FALSE(same_structure(small_policy(), make_policy({8, 16}, {16}, 4, 2, 1, 2)));
}

}  // namespace
