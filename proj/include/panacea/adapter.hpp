#pragma once

// SVD-LoRA layer with the preference vector written into the trailing
// singular values:
//
//   W = W0 + U diag(sigma_1..sigma_k, s*lam_1..s*lam_m) V^T
//
// W0 is frozen. U, V, sigma and the per-matrix scale s are trainable. The
// preference vector is a forward-pass input and is never stored in the layer.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "panacea/autodiff.hpp"

namespace panacea {

using ad::MatrixX;
using ad::Tensor;
using ad::VectorX;
using Rng = std::mt19937_64;

/// A point on the probability simplex: nonnegative weights summing to one.
class PreferenceVector {
public:
    static constexpr double kSumTolerance = 1e-9;

    explicit PreferenceVector(std::vector<double> weights);
    PreferenceVector(std::initializer_list<double> weights) : PreferenceVector(std::vector<double>(weights)) {}

    static PreferenceVector vertex(std::size_t m, std::size_t i);
    static PreferenceVector uniform(std::size_t m);

    std::size_t size() const { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }
    std::span<const double> weights() const { return weights_; }
    Eigen::Map<const Eigen::RowVectorXd> row() const {
        return {weights_.data(), static_cast<Eigen::Index>(weights_.size())};
    }

    bool is_interior() const;

    friend bool operator==(const PreferenceVector&, const PreferenceVector&) = default;

private:
    std::vector<double> weights_;
};

/// Uniform sample on the (m-1)-simplex from the gaps of sorted uniforms.
PreferenceVector sample_preference(Rng& rng, std::size_t m);

/// Evenly spaced grid on the simplex with the given interval (m = 2 or 3).
/// For m = 2 the points are ordered by increasing first weight.
std::vector<PreferenceVector> simplex_grid(std::size_t m, double interval);

template <typename Scalar>
struct AdapterLayer {
    MatrixX<Scalar> W0;     // n1 x n2, frozen
    MatrixX<Scalar> U;      // n1 x (k+m)
    MatrixX<Scalar> V;      // n2 x (k+m)
    MatrixX<Scalar> sigma;  // 1 x k
    Scalar scale{0};

    Eigen::Index k() const { return sigma.cols(); }
    Eigen::Index m() const { return U.cols() - sigma.cols(); }
    Eigen::Index rows() const { return W0.rows(); }
    Eigen::Index cols() const { return W0.cols(); }
};

using Adapter = AdapterLayer<double>;

/// U and V entries ~ N(0, 0.02); sigma and s start at zero so the adapted
/// weight equals W0 exactly.
Adapter init_adapter(Tensor W0, Eigen::Index k, Eigen::Index m, Rng& rng);

/// Draws W0 ~ N(0, w0_std) first, then the adapter factors from the same stream.
Adapter init_adapter(Eigen::Index n1, Eigen::Index n2, Eigen::Index k, Eigen::Index m, Rng& rng,
                     double w0_std = 0.5);

void validate_preference_length(Eigen::Index m, const PreferenceVector& lam);

template <typename Scalar>
MatrixX<Scalar> build_sigma(const AdapterLayer<Scalar>& layer, const PreferenceVector& lam) {
    validate_preference_length(layer.m(), lam);
    const Eigen::Index k = layer.k();
    const Eigen::Index r = k + layer.m();
    MatrixX<Scalar> out = MatrixX<Scalar>::Zero(r, r);
    for (Eigen::Index j = 0; j < k; ++j) {
        out(j, j) = layer.sigma(0, j);
    }
    for (Eigen::Index j = 0; j < layer.m(); ++j) {
        out(k + j, k + j) = layer.scale * static_cast<Scalar>(lam[static_cast<std::size_t>(j)]);
    }
    return out;
}

template <typename Scalar>
MatrixX<Scalar> effective_weight(const AdapterLayer<Scalar>& layer, const PreferenceVector& lam) {
    return layer.W0 + layer.U * build_sigma(layer, lam) * layer.V.transpose();
}

template <typename Scalar>
Scalar orthogonality_penalty(const AdapterLayer<Scalar>& layer) {
    const Eigen::Index r = layer.U.cols();
    const MatrixX<Scalar> eye = MatrixX<Scalar>::Identity(r, r);
    return (layer.U.transpose() * layer.U - eye).squaredNorm() + (layer.V.transpose() * layer.V - eye).squaredNorm();
}

template <typename Scalar>
struct Decomposition {
    MatrixX<Scalar> shared;      // sum_j sigma_j u_j v_j^T over the k core columns
    MatrixX<Scalar> preference;  // sum_j s lam_j u_{k+j} v_{k+j}^T
};

template <typename Scalar>
Decomposition<Scalar> decompose(const AdapterLayer<Scalar>& layer, const PreferenceVector& lam) {
    validate_preference_length(layer.m(), lam);
    const Eigen::Index k = layer.k();
    const Eigen::Index m = layer.m();
    Decomposition<Scalar> out{MatrixX<Scalar>::Zero(layer.rows(), layer.cols()),
                              MatrixX<Scalar>::Zero(layer.rows(), layer.cols())};
    for (Eigen::Index j = 0; j < k; ++j) {
        out.shared.noalias() += layer.sigma(0, j) * layer.U.col(j) * layer.V.col(j).transpose();
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        const Scalar w = layer.scale * static_cast<Scalar>(lam[static_cast<std::size_t>(j)]);
        out.preference.noalias() += w * layer.U.col(k + j) * layer.V.col(k + j).transpose();
    }
    return out;
}

// Differentiable counterparts. A bound layer is a set of Vars on one tape.
struct AdapterVars {
    ad::Var W0;
    ad::Var U;
    ad::Var V;
    ad::Var sigma;  // 1 x k
    ad::Var scale;  // 1 x 1
    Eigen::Index k = 0;
    Eigen::Index m = 0;
};

/// Binds every tensor of the layer as its own leaf.
AdapterVars bind(ad::Tape& tape, const Adapter& layer);

ad::Var build_sigma(const AdapterVars& layer, const PreferenceVector& lam);
ad::Var effective_weight(const AdapterVars& layer, const PreferenceVector& lam);
ad::Var orthogonality_penalty(const AdapterVars& layer);

}  // namespace panacea
