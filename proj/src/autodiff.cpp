#include "panacea/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "panacea/error.hpp"

namespace panacea::ad {

namespace {

std::string shape_of(const Tensor& t) { return fmt::format("{}x{}", t.rows(), t.cols()); }

Tape& tape_of(Var a, Var b) {
    if (a.tape == nullptr || a.tape != b.tape) {
        throw InvalidArgument("operands belong to different tapes");
    }
    return *a.tape;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", op, shape_of(a), shape_of(b)));
    }
}

void require_scalar(const char* op, const Tensor& t) {
    if (t.rows() != 1 || t.cols() != 1) {
        throw ShapeError(fmt::format("{}: expected a 1x1 operand, got {}", op, shape_of(t)));
    }
}

void require_finite(const char* op, const Tensor& t) {
    if (!t.allFinite()) {
        throw InvalidArgument(fmt::format("{}: non-finite input", op));
    }
}

Tensor scalar_tensor(double v) {
    Tensor t(1, 1);
    t(0, 0) = v;
    return t;
}

}  // namespace

Var Tape::variable(Tensor value) {
    nodes_.push_back({std::move(value), {}});
    return {this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) { return variable(std::move(value)); }

Var Tape::scalar_constant(double value) { return constant(scalar_tensor(value)); }

Var Tape::record(Tensor value, Backprop backprop) {
    nodes_.push_back({std::move(value), std::move(backprop)});
    return {this, nodes_.size() - 1};
}

Gradients Tape::backward(Var output) const {
    if (output.tape != this) {
        throw InvalidArgument("backward: output belongs to another tape");
    }
    require_scalar("backward", value(output));

    std::vector<Tensor> grads(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        grads[i] = Tensor::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
    }
    grads[output.index](0, 0) = 1.0;
    for (std::size_t i = output.index + 1; i-- > 0;) {
        if (nodes_[i].backprop) {
            nodes_[i].backprop(grads[i], grads);
        }
    }
    return Gradients(std::move(grads));
}

Var matmul(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.cols() != bv.rows()) {
        throw ShapeError(fmt::format("matmul: inner dimensions disagree ({} x {})", shape_of(av), shape_of(bv)));
    }
    Tensor out = av * bv;
    return tape.record(std::move(out), [ia = a.index, ib = b.index, av, bv](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia].noalias() += g * bv.transpose();
        grads[ib].noalias() += av.transpose() * g;
    });
}

Var add(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    require_same_shape("add", a.value(), b.value());
    return tape.record(a.value() + b.value(), [ia = a.index, ib = b.index](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia] += g;
        grads[ib] += g;
    });
}

Var subtract(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    require_same_shape("subtract", a.value(), b.value());
    return tape.record(a.value() - b.value(), [ia = a.index, ib = b.index](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia] += g;
        grads[ib] -= g;
    });
}

Var multiply(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    require_same_shape("multiply", a.value(), b.value());
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    Tensor out = av.cwiseProduct(bv);
    return tape.record(std::move(out), [ia = a.index, ib = b.index, av, bv](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia] += g.cwiseProduct(bv);
        grads[ib] += g.cwiseProduct(av);
    });
}

Var scale(Var a, double factor) {
    return a.tape->record(a.value() * factor, [ia = a.index, factor](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia] += g * factor;
    });
}

Var scale(Var a, Var factor) {
    Tape& tape = tape_of(a, factor);
    require_scalar("scale", factor.value());
    const Tensor& av = a.value();
    const double f = factor.scalar();
    return tape.record(av * f, [ia = a.index, ifac = factor.index, av, f](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia] += g * f;
        grads[ifac](0, 0) += g.cwiseProduct(av).sum();
    });
}

Var add_scalar(Var a, double offset) {
    Tensor out = a.value().array() + offset;
    return a.tape->record(std::move(out), [ia = a.index](const Tensor& g, std::vector<Tensor>& grads) { grads[ia] += g; });
}

Var transpose(Var a) {
    return a.tape->record(a.value().transpose(), [ia = a.index](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia] += g.transpose();
    });
}

Var exp(Var a) {
    Tensor out = a.value().array().exp();
    return a.tape->record(out, [ia = a.index, out](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia] += g.cwiseProduct(out);
    });
}

Var log(Var a) {
    const Tensor& av = a.value();
    if ((av.array() <= 0.0).any()) {
        throw InvalidArgument("log: non-positive input");
    }
    Tensor out = av.array().log();
    return a.tape->record(std::move(out), [ia = a.index, av](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia] += g.cwiseQuotient(av);
    });
}

Var tanh(Var a) {
    Tensor out = a.value().array().tanh();
    return a.tape->record(out, [ia = a.index, out](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia].array() += g.array() * (1.0 - out.array().square());
    });
}

Var sum(Var a) {
    return a.tape->record(scalar_tensor(a.value().sum()), [ia = a.index](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia].array() += g(0, 0);
    });
}

Var mean(Var a) {
    const double n = static_cast<double>(a.value().size());
    return a.tape->record(scalar_tensor(a.value().sum() / n), [ia = a.index, n](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia].array() += g(0, 0) / n;
    });
}

Var frobenius_norm_sq(Var a) {
    const Tensor& av = a.value();
    return a.tape->record(scalar_tensor(av.squaredNorm()), [ia = a.index, av](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia] += 2.0 * g(0, 0) * av;
    });
}

Var diag_embed(Var v) {
    const Tensor& vv = v.value();
    if (vv.rows() != 1 && vv.cols() != 1) {
        throw ShapeError(fmt::format("diag_embed: expected a vector, got {}", shape_of(vv)));
    }
    const Eigen::Index n = vv.size();
    Tensor out = Tensor::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i, i) = vv.data()[i];
    }
    return v.tape->record(std::move(out), [iv = v.index, n](const Tensor& g, std::vector<Tensor>& grads) {
        for (Eigen::Index i = 0; i < n; ++i) {
            grads[iv].data()[i] += g(i, i);
        }
    });
}

Var concat_cols(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rows() != bv.rows()) {
        throw ShapeError(fmt::format("concat_cols: row counts disagree ({} vs {})", shape_of(av), shape_of(bv)));
    }
    Tensor out(av.rows(), av.cols() + bv.cols());
    out << av, bv;
    const Eigen::Index ac = av.cols();
    const Eigen::Index bc = bv.cols();
    return tape.record(std::move(out), [ia = a.index, ib = b.index, ac, bc](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ia] += g.leftCols(ac);
        grads[ib] += g.rightCols(bc);
    });
}

Tensor log_softmax_rows(const Tensor& x) {
    require_finite("log_softmax", x);
    Tensor out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mx = x.row(r).maxCoeff();
        const double lse = mx + std::log((x.row(r).array() - mx).exp().sum());
        out.row(r) = x.row(r).array() - lse;
    }
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    require_finite("softmax", x);
    Tensor out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mx = x.row(r).maxCoeff();
        out.row(r) = (x.row(r).array() - mx).exp();
        out.row(r) /= out.row(r).sum();
    }
    return out;
}

Var softmax_rows(Var x) {
    Tensor p = softmax_rows(x.value());
    return x.tape->record(p, [ix = x.index, p](const Tensor& g, std::vector<Tensor>& grads) {
        // dx = p * (g - <g, p>) per row
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            const double dot = g.row(r).dot(p.row(r));
            grads[ix].row(r).array() += p.row(r).array() * (g.row(r).array() - dot);
        }
    });
}

Var log_softmax_rows(Var x) {
    Tensor lp = log_softmax_rows(x.value());
    Tensor p = lp.array().exp();
    return x.tape->record(std::move(lp), [ix = x.index, p](const Tensor& g, std::vector<Tensor>& grads) {
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            const double total = g.row(r).sum();
            grads[ix].row(r).array() += g.row(r).array() - p.row(r).array() * total;
        }
    });
}

double log_sigmoid(double x) {
    // -log(1 + e^{-x}) without overflow on either tail
    if (x >= 0.0) {
        return -std::log1p(std::exp(-x));
    }
    return x - std::log1p(std::exp(x));
}

Var log_sigmoid(Var x) {
    const Tensor& xv = x.value();
    require_finite("log_sigmoid", xv);
    Tensor out = xv.unaryExpr([](double v) { return log_sigmoid(v); });
    // d/dx log sigma(x) = sigma(-x)
    Tensor slope = xv.unaryExpr([](double v) { return std::exp(log_sigmoid(-v)); });
    return x.tape->record(std::move(out), [ix = x.index, slope](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ix] += g.cwiseProduct(slope);
    });
}

Var segment(Var flat, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
    const Tensor& fv = flat.value();
    if (offset < 0 || rows < 0 || cols < 0 || offset + rows * cols > fv.size()) {
        throw ShapeError(fmt::format("segment: [{}, {}) outside {}", offset, offset + rows * cols, shape_of(fv)));
    }
    Tensor out(rows, cols);
    std::copy_n(fv.data() + offset, rows * cols, out.data());
    return flat.tape->record(std::move(out), [ifl = flat.index, offset](const Tensor& g, std::vector<Tensor>& grads) {
        double* dst = grads[ifl].data() + offset;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            dst[i] += g.data()[i];
        }
    });
}

Var gather(Var a, std::span<const std::pair<Eigen::Index, Eigen::Index>> entries) {
    const Tensor& av = a.value();
    Tensor out(static_cast<Eigen::Index>(entries.size()), 1);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> idx(entries.begin(), entries.end());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto [r, c] = idx[i];
        if (r < 0 || r >= av.rows() || c < 0 || c >= av.cols()) {
            throw ShapeError(fmt::format("gather: index ({}, {}) outside {}", r, c, shape_of(av)));
        }
        out(static_cast<Eigen::Index>(i), 0) = av(r, c);
    }
    return a.tape->record(std::move(out), [ia = a.index, idx = std::move(idx)](const Tensor& g, std::vector<Tensor>& grads) {
        for (std::size_t i = 0; i < idx.size(); ++i) {
            grads[ia](idx[i].first, idx[i].second) += g(static_cast<Eigen::Index>(i), 0);
        }
    });
}

namespace {

template <typename Better>
Var select_scalar(const char* op, std::span<const Var> scalars, Better better) {
    if (scalars.empty()) {
        throw InvalidArgument(fmt::format("{}: empty input", op));
    }
    std::size_t best = 0;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        require_scalar(op, scalars[i].value());
        if (better(scalars[i].scalar(), scalars[best].scalar())) {
            best = i;
        }
    }
    const Var chosen = scalars[best];
    return chosen.tape->record(chosen.value(), [ic = chosen.index](const Tensor& g, std::vector<Tensor>& grads) {
        grads[ic] += g;
    });
}

}  // namespace

Var min_of(std::span<const Var> scalars) {
    return select_scalar("min_of", scalars, [](double a, double b) { return a < b; });
}

Var max_of(std::span<const Var> scalars) {
    return select_scalar("max_of", scalars, [](double a, double b) { return a > b; });
}

double GradCheck::relative_error(double floor) const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        const double a = analytic.data()[i];
        const double n = numeric.data()[i];
        worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
    }
    return worst;
}

double GradCheck::norm_error(double floor) const {
    const double denom = std::max({analytic.norm(), numeric.norm(), floor});
    return (analytic - numeric).norm() / denom;
}

GradCheck compare_gradients(const ScalarFunction& f, const Tensor& x, double eps, Differencing scheme) {
    GradCheck out;
    {
        Tape tape;
        Var xv = tape.variable(x);
        Var y = f(tape, xv);
        out.analytic = tape.backward(y)[xv];
    }
    auto eval = [&](const Tensor& at) {
        Tape tape;
        Var xv = tape.variable(at);
        return f(tape, xv).scalar();
    };
    Tensor probe = x;
    auto central = [&](Eigen::Index i, double h) {
        const double orig = probe.data()[i];
        probe.data()[i] = orig + h;
        const double up = eval(probe);
        probe.data()[i] = orig - h;
        const double down = eval(probe);
        probe.data()[i] = orig;
        return (up - down) / (2.0 * h);
    };
    out.numeric = Tensor::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out.numeric.data()[i] = scheme == Differencing::central
                                    ? central(i, eps)
                                    : (4.0 * central(i, 0.5 * eps) - central(i, eps)) / 3.0;
    }
    return out;
}

double grad_check(const ScalarFunction& f, const Tensor& x, double eps, Differencing scheme) {
    return compare_gradients(f, x, eps, scheme).relative_error();
}

}  // namespace panacea::ad
