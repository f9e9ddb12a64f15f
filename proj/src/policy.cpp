#include "panacea/policy.hpp"

#include <cmath>

#include <fmt/format.h>

#include "panacea/error.hpp"

namespace panacea {

void validate(const TaskSpec& spec) {
    if (spec.n_ctx < 1 || spec.n_resp < 2) {
        throw InvalidArgument(fmt::format("task needs n_ctx >= 1 and n_resp >= 2 (got {}, {})", spec.n_ctx, spec.n_resp));
    }
}

PolicyNet make_policy(const TaskSpec& spec, const std::vector<Eigen::Index>& hidden, Eigen::Index k, Eigen::Index m,
                      std::uint64_t reference_seed, std::uint64_t adapter_seed) {
    validate(spec);
    std::vector<Eigen::Index> dims;
    dims.push_back(spec.n_ctx);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(spec.n_resp);

    Rng ref_rng(reference_seed);
    Rng adapter_rng(adapter_seed);
    std::normal_distribution<double> w0_normal(0.0, reference_weight_std);
    PolicyNet net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        if (dims[l + 1] < 1) {
            throw InvalidArgument("hidden layer widths must be positive");
        }
        Tensor W0(dims[l], dims[l + 1]);
        for (Eigen::Index i = 0; i < W0.size(); ++i) {
            W0.data()[i] = w0_normal(ref_rng);
        }
        net.layers.push_back(init_adapter(std::move(W0), k, m, adapter_rng));
    }
    return net;
}

bool same_structure(const PolicyNet& a, const PolicyNet& b) {
    if (a.layers.size() != b.layers.size()) {
        return false;
    }
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        const Adapter& x = a.layers[l];
        const Adapter& y = b.layers[l];
        if (x.rows() != y.rows() || x.cols() != y.cols() || x.k() != y.k() || x.m() != y.m()) {
            return false;
        }
    }
    return true;
}

namespace {

template <typename WeightOf>
Tensor forward_logits(const PolicyNet& net, WeightOf weight_of) {
    Tensor x = Tensor::Identity(net.n_ctx(), net.n_ctx());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        Tensor z = x * weight_of(net.layers[l]);
        if (l + 1 < net.layers.size()) {
            x = z.array().tanh();
        } else {
            x = std::move(z);
        }
    }
    return x;
}

void check_context(const PolicyNet& net, Eigen::Index context) {
    if (context < 0 || context >= net.n_ctx()) {
        throw InvalidArgument(fmt::format("context {} out of range [0, {})", context, net.n_ctx()));
    }
}

}  // namespace

Tensor response_logits(const PolicyNet& net, const PreferenceVector& lam) {
    return forward_logits(net, [&](const Adapter& layer) { return effective_weight(layer, lam); });
}

Tensor response_dist(const PolicyNet& net, const PreferenceVector& lam) {
    return ad::softmax_rows(response_logits(net, lam));
}

Tensor log_response_dist(const PolicyNet& net, const PreferenceVector& lam) {
    return ad::log_softmax_rows(response_logits(net, lam));
}

Tensor reference_dist(const PolicyNet& net) {
    return ad::softmax_rows(forward_logits(net, [](const Adapter& layer) { return layer.W0; }));
}

Tensor log_reference_dist(const PolicyNet& net) {
    return ad::log_softmax_rows(forward_logits(net, [](const Adapter& layer) { return layer.W0; }));
}

Eigen::RowVectorXd response_dist(const PolicyNet& net, Eigen::Index context, const PreferenceVector& lam) {
    check_context(net, context);
    return response_dist(net, lam).row(context);
}

Eigen::RowVectorXd reference_dist(const PolicyNet& net, Eigen::Index context) {
    check_context(net, context);
    return reference_dist(net).row(context);
}

double log_prob(const PolicyNet& net, Eigen::Index context, Eigen::Index response, const PreferenceVector& lam) {
    check_context(net, context);
    if (response < 0 || response >= net.n_resp()) {
        throw InvalidArgument(fmt::format("response {} out of range [0, {})", response, net.n_resp()));
    }
    return log_response_dist(net, lam)(context, response);
}

Eigen::Index parameter_count(const PolicyNet& net) {
    Eigen::Index n = 0;
    for (const Adapter& layer : net.layers) {
        n += layer.U.size() + layer.V.size() + layer.sigma.size() + 1;
    }
    return n;
}

Eigen::VectorXd flatten(const PolicyNet& net) {
    Eigen::VectorXd out(parameter_count(net));
    Eigen::Index at = 0;
    auto put = [&](const Tensor& t) {
        std::copy_n(t.data(), t.size(), out.data() + at);
        at += t.size();
    };
    for (const Adapter& layer : net.layers) {
        put(layer.U);
        put(layer.V);
        put(layer.sigma);
        out(at++) = layer.scale;
    }
    return out;
}

void unflatten(PolicyNet& net, const Eigen::VectorXd& params) {
    if (params.size() != parameter_count(net)) {
        throw ShapeError(fmt::format("unflatten: {} values for {} parameters", params.size(), parameter_count(net)));
    }
    Eigen::Index at = 0;
    auto take = [&](Tensor& t) {
        std::copy_n(params.data() + at, t.size(), t.data());
        at += t.size();
    };
    for (Adapter& layer : net.layers) {
        take(layer.U);
        take(layer.V);
        take(layer.sigma);
        layer.scale = params(at++);
    }
}

std::vector<Eigen::Index> scale_offsets(const PolicyNet& net) {
    std::vector<Eigen::Index> out;
    Eigen::Index at = 0;
    for (const Adapter& layer : net.layers) {
        at += layer.U.size() + layer.V.size() + layer.sigma.size();
        out.push_back(at++);
    }
    return out;
}

PolicyVars bind_flat(ad::Tape& tape, ad::Var flat, const PolicyNet& structure) {
    if (flat.value().size() != parameter_count(structure)) {
        throw ShapeError(fmt::format("bind_flat: {} values for {} parameters", flat.value().size(),
                                     parameter_count(structure)));
    }
    PolicyVars vars;
    vars.n_ctx = structure.n_ctx();
    Eigen::Index at = 0;
    auto take = [&](Eigen::Index rows, Eigen::Index cols) {
        ad::Var v = ad::segment(flat, at, rows, cols);
        at += rows * cols;
        return v;
    };
    for (const Adapter& layer : structure.layers) {
        AdapterVars av;
        av.W0 = tape.constant(layer.W0);
        av.U = take(layer.U.rows(), layer.U.cols());
        av.V = take(layer.V.rows(), layer.V.cols());
        av.sigma = take(1, layer.k());
        av.scale = take(1, 1);
        av.k = layer.k();
        av.m = layer.m();
        vars.layers.push_back(av);
    }
    return vars;
}

ad::Var log_response_dist(const PolicyVars& vars, const PreferenceVector& lam) {
    ad::Tape& tape = *vars.layers.front().U.tape;
    ad::Var x = tape.constant(Tensor::Identity(vars.n_ctx, vars.n_ctx));
    for (std::size_t l = 0; l < vars.layers.size(); ++l) {
        ad::Var z = ad::matmul(x, effective_weight(vars.layers[l], lam));
        x = (l + 1 < vars.layers.size()) ? ad::tanh(z) : z;
    }
    return ad::log_softmax_rows(x);
}

ad::Var orthogonality_penalty(const PolicyVars& vars) {
    ad::Var total = orthogonality_penalty(vars.layers.front());
    for (std::size_t l = 1; l < vars.layers.size(); ++l) {
        total = ad::add(total, orthogonality_penalty(vars.layers[l]));
    }
    return total;
}

}  // namespace panacea
