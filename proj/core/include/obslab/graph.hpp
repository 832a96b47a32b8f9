#pragma once

// Tape-based reverse-mode autodiff over Tensor values.
//
// Nodes are evaluated eagerly at construction with the same dense kernels the
// non-differentiated code paths use, so a graph forward pass is bitwise equal
// to the corresponding plain computation. recompute() re-runs the tape in
// order after leaf values have been mutated (finite differences, optimizer
// steps on a fixed graph).

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "obslab/numerics.hpp"
#include "obslab/tensor.hpp"

namespace obslab {

using NodeId = std::size_t;

enum class Op {
    leaf,
    add,
    sub,
    mul,
    scale,
    exp_map,
    tanh_map,
    gelu,
    matmul,
    add_bias,
    gather_rows,
    concat_rows,
    slice_cols,
    concat_cols,
    causal_softmax_rows,
    log_softmax_rows,
    layer_norm_rows,
    pick_rows,
    sum,
};

struct Node {
    Op op = Op::leaf;
    std::vector<NodeId> inputs;
    Tensor value;
    Tensor grad;
    std::string name;            // leaves only
    bool trainable = false;      // leaves only
    double scalar = 0.0;         // scale factor / layer-norm epsilon
    bool trans_a = false, trans_b = false;  // matmul
    std::vector<int> ids;        // gather_rows / pick_rows
    std::size_t start = 0, count = 0;       // slice_cols
};

class Graph {
public:
    NodeId input(Tensor value, std::string name = "");
    NodeId param(std::string name, Tensor value);

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double c);
    NodeId exp_map(NodeId a);
    NodeId tanh_map(NodeId a);
    NodeId gelu(NodeId a);
    NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);
    NodeId add_bias(NodeId m, NodeId bias);
    NodeId gather_rows(NodeId m, std::vector<int> ids);
    NodeId concat_rows(const std::vector<NodeId>& parts);
    NodeId slice_cols(NodeId m, std::size_t start, std::size_t count);
    NodeId concat_cols(const std::vector<NodeId>& parts);
    NodeId causal_softmax_rows(NodeId scores);
    NodeId log_softmax_rows(NodeId m);
    NodeId layer_norm_rows(NodeId x, NodeId gain, NodeId bias, double eps = 1e-5);
    NodeId pick_rows(NodeId m, std::vector<int> ids);
    NodeId sum(NodeId a);

    // Composite: sum over rows of KL(softmax(p_logits_row) || softmax(q_logits_row)).
    NodeId kl_softmax_rows(NodeId p_logits, NodeId q_logits);
    // Composite: mean cross-entropy of logit rows against target ids.
    NodeId cross_entropy_mean(NodeId logits, std::vector<int> targets);

    const Tensor& value(NodeId id) const;
    const Tensor& grad(NodeId id) const;
    const Node& node(NodeId id) const;
    std::size_t size() const { return nodes_.size(); }

    // Replace a leaf's value (shape-checked). Call recompute() afterwards.
    void set_value(NodeId id, Tensor value);
    // Re-evaluate every non-leaf node in tape order.
    void recompute();
    // Reverse pass from a scalar node; fills grad on every node.
    void backward(NodeId loss);

    const std::vector<NodeId>& trainable_params() const { return trainable_; }
    NodeId param_id(const std::string& name) const;

private:
    NodeId push(Node n);
    void eval(Node& n);
    void check(NodeId id, const char* who) const;

    std::vector<Node> nodes_;
    std::vector<NodeId> trainable_;
    std::map<std::string, NodeId> by_name_;
};

}  // namespace obslab
