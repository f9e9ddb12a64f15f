#include "panacea/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "panacea/error.hpp"

namespace panacea {

PreferenceVector::PreferenceVector(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) {
        throw InvalidArgument("preference vector must have at least one component");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
            throw InvalidArgument(fmt::format("preference weight {} is {} (must be finite and >= 0)", i, weights_[i]));
        }
        total += weights_[i];
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
        throw InvalidArgument(fmt::format("preference weights sum to {:.17g}, expected 1", total));
    }
}

PreferenceVector PreferenceVector::vertex(std::size_t m, std::size_t i) {
    if (i >= m) {
        throw InvalidArgument(fmt::format("vertex {} out of range for m={}", i, m));
    }
    std::vector<double> w(m, 0.0);
    w[i] = 1.0;
    return PreferenceVector(std::move(w));
}

PreferenceVector PreferenceVector::uniform(std::size_t m) {
    return PreferenceVector(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

bool PreferenceVector::is_interior() const {
    return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w > 0.0; });
}

PreferenceVector sample_preference(Rng& rng, std::size_t m) {
    if (m < 2) {
        throw InvalidArgument(fmt::format("sample_preference: m must be >= 2, got {}", m));
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> cuts(m + 1);
    cuts[0] = 0.0;
    cuts[m] = 1.0;
    for (std::size_t i = 1; i < m; ++i) {
        cuts[i] = unif(rng);
    }
    std::sort(cuts.begin() + 1, cuts.end() - 1);
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) {
        w[i] = cuts[i + 1] - cuts[i];
    }
    // Gaps telescope to exactly 1 up to rounding; renormalize the last slot.
    w[m - 1] = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
    w[m - 1] = std::max(w[m - 1], 0.0);
    return PreferenceVector(std::move(w));
}

std::vector<PreferenceVector> simplex_grid(std::size_t m, double interval) {
    if (!(interval > 0.0) || interval > 1.0) {
        throw InvalidArgument(fmt::format("grid interval must lie in (0, 1], got {}", interval));
    }
    const double steps_real = 1.0 / interval;
    const auto steps = static_cast<long>(std::llround(steps_real));
    if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9) {
        throw InvalidArgument(fmt::format("grid interval {} does not divide 1", interval));
    }
    const double n = static_cast<double>(steps);
    std::vector<PreferenceVector> grid;
    if (m == 2) {
        for (long i = 0; i <= steps; ++i) {
            const double a = static_cast<double>(i) / n;
            grid.emplace_back(std::vector<double>{a, static_cast<double>(steps - i) / n});
        }
    } else if (m == 3) {
        for (long i = 0; i <= steps; ++i) {
            for (long j = 0; i + j <= steps; ++j) {
                const long l = steps - i - j;
                grid.emplace_back(std::vector<double>{static_cast<double>(i) / n, static_cast<double>(j) / n,
                                                      static_cast<double>(l) / n});
            }
        }
    } else {
        throw InvalidArgument(fmt::format("simplex_grid supports m = 2 or 3, got {}", m));
    }
    return grid;
}

void validate_preference_length(Eigen::Index m, const PreferenceVector& lam) {
    if (static_cast<Eigen::Index>(lam.size()) != m) {
        throw InvalidArgument(fmt::format("preference vector has {} components, layer expects {}", lam.size(), m));
    }
}

namespace {

Tensor gaussian(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
    std::normal_distribution<double> normal(0.0, stddev);
    Tensor out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        out.data()[i] = normal(rng);
    }
    return out;
}

}  // namespace

Adapter init_adapter(Tensor W0, Eigen::Index k, Eigen::Index m, Rng& rng) {
    if (W0.rows() < 1 || W0.cols() < 1 || k < 0 || m < 2) {
        throw InvalidArgument(
            fmt::format("init_adapter: invalid dimensions n1={} n2={} k={} m={}", W0.rows(), W0.cols(), k, m));
    }
    Adapter layer;
    layer.U = gaussian(W0.rows(), k + m, 0.02, rng);
    layer.V = gaussian(W0.cols(), k + m, 0.02, rng);
    layer.W0 = std::move(W0);
    layer.sigma = Tensor::Zero(1, k);
    layer.scale = 0.0;
    return layer;
}

Adapter init_adapter(Eigen::Index n1, Eigen::Index n2, Eigen::Index k, Eigen::Index m, Rng& rng, double w0_std) {
    if (n1 < 1 || n2 < 1) {
        throw InvalidArgument(fmt::format("init_adapter: invalid dimensions n1={} n2={}", n1, n2));
    }
    Tensor W0 = gaussian(n1, n2, w0_std, rng);
    return init_adapter(std::move(W0), k, m, rng);
}

AdapterVars bind(ad::Tape& tape, const Adapter& layer) {
    ad::Tensor s(1, 1);
    s(0, 0) = layer.scale;
    return {tape.constant(layer.W0), tape.variable(layer.U), tape.variable(layer.V), tape.variable(layer.sigma),
            tape.variable(std::move(s)), layer.k(), layer.m()};
}

ad::Var build_sigma(const AdapterVars& layer, const PreferenceVector& lam) {
    validate_preference_length(layer.m, lam);
    ad::Tape& tape = *layer.scale.tape;
    ad::Var pref = ad::scale(tape.constant(Tensor(lam.row())), layer.scale);
    return ad::diag_embed(ad::concat_cols(layer.sigma, pref));
}

ad::Var effective_weight(const AdapterVars& layer, const PreferenceVector& lam) {
    ad::Var sigma = build_sigma(layer, lam);
    return ad::add(layer.W0, ad::matmul(ad::matmul(layer.U, sigma), ad::transpose(layer.V)));
}

ad::Var orthogonality_penalty(const AdapterVars& layer) {
    ad::Tape& tape = *layer.U.tape;
    const Eigen::Index r = layer.U.cols();
    ad::Var eye = tape.constant(Tensor::Identity(r, r));
    ad::Var gu = ad::subtract(ad::matmul(ad::transpose(layer.U), layer.U), eye);
    ad::Var gv = ad::subtract(ad::matmul(ad::transpose(layer.V), layer.V), eye);
    return ad::add(ad::frobenius_norm_sq(gu), ad::frobenius_norm_sq(gv));
}

}  // namespace panacea
