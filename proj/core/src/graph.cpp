#include "obslab/graph.hpp"

#include <cmath>

#include "obslab/error.hpp"

namespace obslab {

void Graph::check(NodeId id, const char* who) const {
    if (id >= nodes_.size())
        raise(ErrorCode::invalid_input, std::string(who) + ": node id out of range");
}

NodeId Graph::push(Node n) {
    if (n.op != Op::leaf) eval(n);
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

NodeId Graph::input(Tensor value, std::string name) {
    ensure_finite(value, "graph input");
    Node n;
    n.op = Op::leaf;
    n.value = std::move(value);
    n.name = std::move(name);
    const NodeId id = nodes_.size();
    nodes_.push_back(std::move(n));
    if (!nodes_[id].name.empty()) by_name_[nodes_[id].name] = id;
    return id;
}

NodeId Graph::param(std::string name, Tensor value) {
    if (name.empty()) raise(ErrorCode::invalid_parameter, "param: name required");
    if (by_name_.count(name)) raise(ErrorCode::invalid_parameter, "param: duplicate name " + name);
    const NodeId id = input(std::move(value), std::move(name));
    nodes_[id].trainable = true;
    trainable_.push_back(id);
    return id;
}

NodeId Graph::param_id(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) raise(ErrorCode::invalid_input, "param_id: unknown name " + name);
    return it->second;
}

void Graph::eval(Node& n) {
    const auto& v = [&](std::size_t i) -> const Tensor& { return nodes_[n.inputs[i]].value; };
    switch (n.op) {
        case Op::leaf: break;
        case Op::add: n.value = obslab::add(v(0), v(1)); break;
        case Op::sub: n.value = obslab::sub(v(0), v(1)); break;
        case Op::mul: n.value = obslab::mul(v(0), v(1)); break;
        case Op::scale: n.value = obslab::scale(v(0), n.scalar); break;
        case Op::exp_map: n.value = obslab::exp_map(v(0)); break;
        case Op::tanh_map: n.value = obslab::tanh_map(v(0)); break;
        case Op::gelu: n.value = obslab::gelu_map(v(0)); break;
        case Op::matmul: n.value = obslab::matmul(v(0), v(1), n.trans_a, n.trans_b); break;
        case Op::add_bias: n.value = obslab::add_bias_rows(v(0), v(1)); break;
        case Op::gather_rows: n.value = obslab::gather_rows(v(0), n.ids); break;
        case Op::concat_rows: {
            std::vector<const Tensor*> parts;
            for (NodeId id : n.inputs) parts.push_back(&nodes_[id].value);
            n.value = obslab::concat_rows(parts);
            break;
        }
        case Op::slice_cols: n.value = obslab::slice_cols(v(0), n.start, n.count); break;
        case Op::concat_cols: {
            std::vector<const Tensor*> parts;
            for (NodeId id : n.inputs) parts.push_back(&nodes_[id].value);
            n.value = obslab::concat_cols(parts);
            break;
        }
        case Op::causal_softmax_rows: n.value = obslab::causal_softmax_rows(v(0)); break;
        case Op::log_softmax_rows: n.value = obslab::log_softmax_rows(v(0)); break;
        case Op::layer_norm_rows: n.value = obslab::layer_norm_rows(v(0), v(1), v(2), n.scalar); break;
        case Op::pick_rows: n.value = obslab::pick_rows(v(0), n.ids); break;
        case Op::sum: n.value = Tensor::from({1}, {obslab::sum_all(v(0))}); break;
    }
}

NodeId Graph::add(NodeId a, NodeId b) {
    check(a, "add"); check(b, "add");
    Node n; n.op = Op::add; n.inputs = {a, b};
    return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
    check(a, "sub"); check(b, "sub");
    Node n; n.op = Op::sub; n.inputs = {a, b};
    return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
    check(a, "mul"); check(b, "mul");
    Node n; n.op = Op::mul; n.inputs = {a, b};
    return push(std::move(n));
}

NodeId Graph::scale(NodeId a, double c) {
    check(a, "scale");
    Node n; n.op = Op::scale; n.inputs = {a}; n.scalar = c;
    return push(std::move(n));
}

NodeId Graph::exp_map(NodeId a) {
    check(a, "exp_map");
    Node n; n.op = Op::exp_map; n.inputs = {a};
    return push(std::move(n));
}

NodeId Graph::tanh_map(NodeId a) {
    check(a, "tanh_map");
    Node n; n.op = Op::tanh_map; n.inputs = {a};
    return push(std::move(n));
}

NodeId Graph::gelu(NodeId a) {
    check(a, "gelu");
    Node n; n.op = Op::gelu; n.inputs = {a};
    return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
    check(a, "matmul"); check(b, "matmul");
    Node n; n.op = Op::matmul; n.inputs = {a, b}; n.trans_a = trans_a; n.trans_b = trans_b;
    return push(std::move(n));
}

NodeId Graph::add_bias(NodeId m, NodeId bias) {
    check(m, "add_bias"); check(bias, "add_bias");
    Node n; n.op = Op::add_bias; n.inputs = {m, bias};
    return push(std::move(n));
}

NodeId Graph::gather_rows(NodeId m, std::vector<int> ids) {
    check(m, "gather_rows");
    Node n; n.op = Op::gather_rows; n.inputs = {m}; n.ids = std::move(ids);
    return push(std::move(n));
}

NodeId Graph::concat_rows(const std::vector<NodeId>& parts) {
    for (NodeId p : parts) check(p, "concat_rows");
    Node n; n.op = Op::concat_rows; n.inputs = parts;
    return push(std::move(n));
}

NodeId Graph::slice_cols(NodeId m, std::size_t start, std::size_t count) {
    check(m, "slice_cols");
    Node n; n.op = Op::slice_cols; n.inputs = {m}; n.start = start; n.count = count;
    return push(std::move(n));
}

NodeId Graph::concat_cols(const std::vector<NodeId>& parts) {
    for (NodeId p : parts) check(p, "concat_cols");
    Node n; n.op = Op::concat_cols; n.inputs = parts;
    return push(std::move(n));
}

NodeId Graph::causal_softmax_rows(NodeId scores) {
    check(scores, "causal_softmax_rows");
    Node n; n.op = Op::causal_softmax_rows; n.inputs = {scores};
    return push(std::move(n));
}

NodeId Graph::log_softmax_rows(NodeId m) {
    check(m, "log_softmax_rows");
    Node n; n.op = Op::log_softmax_rows; n.inputs = {m};
    return push(std::move(n));
}

NodeId Graph::layer_norm_rows(NodeId x, NodeId gain, NodeId bias, double eps) {
    check(x, "layer_norm_rows"); check(gain, "layer_norm_rows"); check(bias, "layer_norm_rows");
    Node n; n.op = Op::layer_norm_rows; n.inputs = {x, gain, bias}; n.scalar = eps;
    return push(std::move(n));
}

NodeId Graph::pick_rows(NodeId m, std::vector<int> ids) {
    check(m, "pick_rows");
    Node n; n.op = Op::pick_rows; n.inputs = {m}; n.ids = std::move(ids);
    return push(std::move(n));
}

NodeId Graph::sum(NodeId a) {
    check(a, "sum");
    Node n; n.op = Op::sum; n.inputs = {a};
    return push(std::move(n));
}

NodeId Graph::kl_softmax_rows(NodeId p_logits, NodeId q_logits) {
    const NodeId lp = log_softmax_rows(p_logits);
    const NodeId lq = log_softmax_rows(q_logits);
    const NodeId p = exp_map(lp);
    const NodeId diff = sub(lp, lq);
    return sum(mul(p, diff));
}

NodeId Graph::cross_entropy_mean(NodeId logits, std::vector<int> targets) {
    check(logits, "cross_entropy_mean");
    const std::size_t rows = nodes_[logits].value.rows();
    if (targets.size() != rows)
        raise(ErrorCode::invalid_input, "cross_entropy_mean: one target per logit row required");
    const NodeId lsm = log_softmax_rows(logits);
    const NodeId picked = pick_rows(lsm, std::move(targets));
    return scale(sum(picked), -1.0 / static_cast<double>(rows));
}

const Tensor& Graph::value(NodeId id) const {
    check(id, "value");
    return nodes_[id].value;
}

const Tensor& Graph::grad(NodeId id) const {
    check(id, "grad");
    if (nodes_[id].grad.numel() == 0)
        raise(ErrorCode::contract_violation, "grad: backward() has not been run");
    return nodes_[id].grad;
}

const Node& Graph::node(NodeId id) const {
    check(id, "node");
    return nodes_[id];
}

void Graph::set_value(NodeId id, Tensor value) {
    check(id, "set_value");
    if (nodes_[id].op != Op::leaf)
        raise(ErrorCode::contract_violation, "set_value: only leaf values may be assigned");
    if (!nodes_[id].value.same_shape(value))
        raise(ErrorCode::invalid_input, "set_value: shape mismatch");
    ensure_finite(value, "set_value");
    nodes_[id].value = std::move(value);
}

void Graph::recompute() {
    for (Node& n : nodes_)
        if (n.op != Op::leaf) eval(n);
}

void Graph::backward(NodeId loss) {
    check(loss, "backward");
    if (nodes_[loss].value.numel() != 1)
        raise(ErrorCode::invalid_input, "backward: loss must be scalar");
    for (Node& n : nodes_) n.grad = Tensor::zeros(n.value.shape);
    nodes_[loss].grad.values[0] = 1.0;

    for (std::size_t idx = nodes_.size(); idx-- > 0;) {
        Node& n = nodes_[idx];
        const Tensor& g = n.grad;
        auto gin = [&](std::size_t i) -> Tensor& { return nodes_[n.inputs[i]].grad; };
        auto vin = [&](std::size_t i) -> const Tensor& { return nodes_[n.inputs[i]].value; };
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::add:
                for (std::size_t i = 0; i < g.numel(); ++i) gin(0).values[i] += g.values[i];
                for (std::size_t i = 0; i < g.numel(); ++i) gin(1).values[i] += g.values[i];
                break;
            case Op::sub:
                for (std::size_t i = 0; i < g.numel(); ++i) gin(0).values[i] += g.values[i];
                for (std::size_t i = 0; i < g.numel(); ++i) gin(1).values[i] -= g.values[i];
                break;
            case Op::mul:
                for (std::size_t i = 0; i < g.numel(); ++i) gin(0).values[i] += g.values[i] * vin(1).values[i];
                for (std::size_t i = 0; i < g.numel(); ++i) gin(1).values[i] += g.values[i] * vin(0).values[i];
                break;
            case Op::scale:
                for (std::size_t i = 0; i < g.numel(); ++i) gin(0).values[i] += n.scalar * g.values[i];
                break;
            case Op::exp_map:
                for (std::size_t i = 0; i < g.numel(); ++i) gin(0).values[i] += g.values[i] * n.value.values[i];
                break;
            case Op::tanh_map:
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    const double t = n.value.values[i];
                    gin(0).values[i] += g.values[i] * (1.0 - t * t);
                }
                break;
            case Op::gelu:
                for (std::size_t i = 0; i < g.numel(); ++i)
                    gin(0).values[i] += g.values[i] * gelu_derivative(vin(0).values[i]);
                break;
            case Op::matmul: {
                const Tensor& a = vin(0);
                const Tensor& b = vin(1);
                Tensor da, db;
                if (!n.trans_a && !n.trans_b) {
                    da = obslab::matmul(g, b, false, true);
                    db = obslab::matmul(a, g, true, false);
                } else if (n.trans_a && !n.trans_b) {
                    da = obslab::matmul(b, g, false, true);
                    db = obslab::matmul(a, g, false, false);
                } else if (!n.trans_a && n.trans_b) {
                    da = obslab::matmul(g, b, false, false);
                    db = obslab::matmul(g, a, true, false);
                } else {
                    da = obslab::matmul(b, g, true, true);
                    db = obslab::matmul(g, a, true, true);
                }
                for (std::size_t i = 0; i < da.numel(); ++i) gin(0).values[i] += da.values[i];
                for (std::size_t i = 0; i < db.numel(); ++i) gin(1).values[i] += db.values[i];
                break;
            }
            case Op::add_bias: {
                for (std::size_t i = 0; i < g.numel(); ++i) gin(0).values[i] += g.values[i];
                const std::size_t cols = g.cols();
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < cols; ++j) gin(1).values[j] += g.at(i, j);
                break;
            }
            case Op::gather_rows: {
                const std::size_t cols = g.cols();
                for (std::size_t t = 0; t < n.ids.size(); ++t)
                    for (std::size_t j = 0; j < cols; ++j)
                        gin(0).at(static_cast<std::size_t>(n.ids[t]), j) += g.at(t, j);
                break;
            }
            case Op::concat_rows: {
                std::size_t r = 0;
                const std::size_t cols = g.cols();
                for (std::size_t p = 0; p < n.inputs.size(); ++p) {
                    Tensor& dst = gin(p);
                    for (std::size_t i = 0; i < dst.rows(); ++i)
                        for (std::size_t j = 0; j < cols; ++j) dst.at(i, j) += g.at(r + i, j);
                    r += dst.rows();
                }
                break;
            }
            case Op::slice_cols:
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < n.count; ++j) gin(0).at(i, n.start + j) += g.at(i, j);
                break;
            case Op::concat_cols: {
                std::size_t off = 0;
                for (std::size_t p = 0; p < n.inputs.size(); ++p) {
                    Tensor& dst = gin(p);
                    for (std::size_t i = 0; i < dst.rows(); ++i)
                        for (std::size_t j = 0; j < dst.cols(); ++j) dst.at(i, j) += g.at(i, off + j);
                    off += dst.cols();
                }
                break;
            }
            case Op::causal_softmax_rows: {
                const std::size_t nn = n.value.rows();
                for (std::size_t i = 0; i < nn; ++i) {
                    double dot = 0.0;
                    for (std::size_t k = 0; k <= i; ++k) dot += g.at(i, k) * n.value.at(i, k);
                    for (std::size_t j = 0; j <= i; ++j)
                        gin(0).at(i, j) += n.value.at(i, j) * (g.at(i, j) - dot);
                }
                break;
            }
            case Op::log_softmax_rows: {
                const std::size_t cols = g.cols();
                for (std::size_t i = 0; i < g.rows(); ++i) {
                    double gsum = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) gsum += g.at(i, j);
                    for (std::size_t j = 0; j < cols; ++j)
                        gin(0).at(i, j) += g.at(i, j) - std::exp(n.value.at(i, j)) * gsum;
                }
                break;
            }
            case Op::layer_norm_rows: {
                const Tensor& x = vin(0);
                const Tensor& gain = vin(1);
                const std::size_t cols = x.cols();
                const double inv_c = 1.0 / static_cast<double>(cols);
                for (std::size_t i = 0; i < x.rows(); ++i) {
                    double mean = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) mean += x.at(i, j);
                    mean *= inv_c;
                    double var = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) var += (x.at(i, j) - mean) * (x.at(i, j) - mean);
                    var *= inv_c;
                    const double rstd = 1.0 / std::sqrt(var + n.scalar);
                    double dxhat_mean = 0.0, dxhat_xhat_mean = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) {
                        const double xhat = (x.at(i, j) - mean) * rstd;
                        const double dxhat = g.at(i, j) * gain.values[j];
                        gin(1).values[j] += g.at(i, j) * xhat;
                        gin(2).values[j] += g.at(i, j);
                        dxhat_mean += dxhat;
                        dxhat_xhat_mean += dxhat * xhat;
                    }
                    dxhat_mean *= inv_c;
                    dxhat_xhat_mean *= inv_c;
                    for (std::size_t j = 0; j < cols; ++j) {
                        const double xhat = (x.at(i, j) - mean) * rstd;
                        const double dxhat = g.at(i, j) * gain.values[j];
                        gin(0).at(i, j) += rstd * (dxhat - dxhat_mean - xhat * dxhat_xhat_mean);
                    }
                }
                break;
            }
            case Op::pick_rows:
                for (std::size_t i = 0; i < n.ids.size(); ++i)
                    gin(0).at(i, static_cast<std::size_t>(n.ids[i])) += g.values[i];
                break;
            case Op::sum:
                for (std::size_t i = 0; i < gin(0).numel(); ++i) gin(0).values[i] += g.values[0];
                break;
        }
    }
}

}  // namespace obslab
