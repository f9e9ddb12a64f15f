#pragma once

// Dense reverse-mode differentiation over row-major Eigen matrices.
//
// A Tape records every primitive applied to its Vars. Calling backward() on a
// scalar (1x1) node walks the record in reverse and returns the gradient of
// that node with respect to every node on the tape. Tapes are rebuilt for each
// evaluation and are not thread-safe; Tensor values are plain Eigen objects.

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace panacea::ad {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Tensor = MatrixX<double>;

class Tape;

struct Var {
    Tape* tape = nullptr;
    std::size_t index = 0;

    const Tensor& value() const;
    double scalar() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

class Gradients {
public:
    Gradients() = default;
    explicit Gradients(std::vector<Tensor> grads) : grads_(std::move(grads)) {}

    // Gradient with respect to v. Nodes the output does not depend on get zeros.
    const Tensor& operator[](Var v) const { return grads_.at(v.index); }

private:
    std::vector<Tensor> grads_;
};

class Tape {
public:
    // Accumulates the incoming gradient of a node into the gradients of its
    // inputs. `grads` is indexed by node.
    using Backprop = std::function<void(const Tensor& grad_out, std::vector<Tensor>& grads)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var variable(Tensor value);
    Var constant(Tensor value);
    Var scalar_constant(double value);

    Var record(Tensor value, Backprop backprop);

    const Tensor& value(Var v) const { return nodes_.at(v.index).value; }
    std::size_t size() const { return nodes_.size(); }

    // Throws ShapeError unless `output` is 1x1.
    Gradients backward(Var output) const;

private:
    struct Node {
        Tensor value;
        Backprop backprop;  // empty for leaves
    };
    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }
inline double Var::scalar() const { return value()(0, 0); }

// Primitives. Shapes are explicit; the only broadcast is scalar x tensor.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var subtract(Var a, Var b);
Var multiply(Var a, Var b);
Var scale(Var a, double factor);
Var scale(Var a, Var factor);  // factor must be 1x1
Var add_scalar(Var a, double offset);
Var transpose(Var a);
Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var sum(Var a);
Var mean(Var a);
Var frobenius_norm_sq(Var a);
Var diag_embed(Var v);  // 1xn or nx1 -> nxn
Var concat_cols(Var a, Var b);
Var softmax_rows(Var x);
Var log_softmax_rows(Var x);
Var log_sigmoid(Var x);  // elementwise
// Reads rows*cols consecutive entries of `flat` starting at `offset`, row-major.
Var segment(Var flat, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols);
Var gather(Var a, std::span<const std::pair<Eigen::Index, Eigen::Index>> entries);  // -> kx1
Var min_of(std::span<const Var> scalars);  // subgradient flows to the first minimizer
Var max_of(std::span<const Var> scalars);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return subtract(a, b); }
inline Var operator*(double f, Var a) { return scale(a, f); }

// Plain-value helpers shared with the non-differentiable evaluation paths.
Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);
double log_sigmoid(double x);

using ScalarFunction = std::function<Var(Tape&, Var)>;

struct GradCheck {
    Tensor analytic;
    Tensor numeric;

    /// max_i |g_ad,i - g_fd,i| / max(|g_ad,i|, |g_fd,i|, floor)
    double relative_error(double floor = 1e-8) const;
    /// |g_ad - g_fd|_2 / max(|g_ad|_2, |g_fd|_2, floor)
    double norm_error(double floor = 1e-12) const;
};

enum class Differencing {
    central,     // (f(x+h) - f(x-h)) / 2h
    richardson,  // (4 D(h/2) - D(h)) / 3 on central differences D, O(h^4)
};

/// backward() next to finite differences with step `eps`.
GradCheck compare_gradients(const ScalarFunction& f, const Tensor& x, double eps = 1e-5,
                            Differencing scheme = Differencing::central);

/// Worst coordinatewise relative error of backward() against finite differences,
/// with a 1e-8 absolute floor on the denominator.
double grad_check(const ScalarFunction& f, const Tensor& x, double eps = 1e-5,
                  Differencing scheme = Differencing::central);

}  // namespace panacea::ad
