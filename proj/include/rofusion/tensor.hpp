#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace rofusion::ag {

// Dense row-major 2-D tensor of doubles. Everything trained here is tiny, so
// 64-bit throughout keeps the finite-difference checks tight; checkpoints
// round to 32-bit on disk.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    Tensor(int r, int c, std::vector<double> d);
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const;
};

using NodeId = std::int32_t;

enum class OpKind {
    Leaf,
    Linear,
    Relu,
    ConcatCols,
    MaxpoolRows,
    SegmentMaxpool,
    SoftmaxCE,
    SmoothL1,
    Add,
    Scale,
};

const char* op_name(OpKind k);

struct Node {
    OpKind op = OpKind::Leaf;
    Tensor value;
    NodeId in0 = -1, in1 = -1, in2 = -1;
    std::vector<int> argmax;        // MaxpoolRows: per column; SegmentMaxpool: groups x cols
    std::vector<int> ints;          // SoftmaxCE targets / SegmentMaxpool group-per-row
    std::vector<std::uint8_t> mask; // SoftmaxCE row mask / SmoothL1 entry mask
    Tensor saved;                   // SoftmaxCE probs / SmoothL1 diffs / SmoothL1 targets aside
    Tensor aux;                     // secondary saved payload
    double scalar = 0.0;            // Scale factor / unmasked count
};

// Reverse-mode differentiation record. Nodes are appended in topological
// order; values are immutable once recorded. One tape per forward pass,
// single-threaded by contract.
class Tape {
public:
    NodeId leaf(Tensor value);

    // out[n,j] = sum_i x[n,i] W[i,j] + b[0,j], fixed left-to-right summation
    // over i for bit-reproducibility.
    NodeId linear(NodeId x, NodeId w, NodeId b);

    NodeId relu(NodeId x);

    NodeId concat_cols(NodeId a, NodeId b);

    // N x C -> 1 x C column maxima; argmax kept (first occurrence on ties)
    // and drives the backward routing.
    NodeId maxpool_rows(NodeId x);

    // Per-group column max broadcast back to every row of the group.
    // group_of_row[n] >= 0; groups are identified by value, order-independent.
    NodeId segment_maxpool(NodeId x, const std::vector<int>& group_of_row);

    // Mean over unmasked rows of -log softmax(logits)[target], computed with
    // max-subtraction. Masked rows contribute zero loss and zero gradient.
    // All rows masked -> value 0 with zero gradient.
    NodeId softmax_cross_entropy(NodeId logits, const std::vector<int>& targets,
                                 const std::vector<std::uint8_t>& row_mask);

    // Mean over unmasked entries of huber(pred - target) with transition 1.
    // target is a constant, not a differentiable input.
    NodeId smooth_l1(NodeId pred, const Tensor& target,
                     const std::vector<std::uint8_t>& entry_mask);

    NodeId add(NodeId a, NodeId b);
    NodeId scale(NodeId a, double k);

    const Tensor& value(NodeId id) const;
    const std::vector<int>& argmax_of(NodeId id) const;
    const Node& node(NodeId id) const;
    std::size_t size() const { return nodes_.size(); }

    // Exact reverse-mode gradients for every node reachable from loss.
    // loss must be 1x1. Result is indexed by NodeId; unreachable nodes get
    // zero gradients of their value's shape.
    std::vector<Tensor> backward(NodeId loss) const;

    // Smallest |pre-activation| over all Relu nodes; infinity when none.
    // grad_check uses it to skip instances sitting on a kink.
    double min_abs_relu_input() const;

private:
    NodeId push(Node n);
    void check_finite(NodeId id) const;
    std::vector<Node> nodes_;
};

// Builds a scalar computation from leaf ids on the given tape.
using ScalarFn = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;

struct GradCheckReport {
    double max_rel_err = 0.0;
    int checked = 0;
    int skipped_kinks = 0;
};

// Compares backward() to central finite differences coordinate-by-coordinate.
// Relative error denominator is floored at 1e-8. Coordinates whose perturbed
// evaluations cross a relu kink (|pre-activation| < kink_eps) are excluded.
GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& inputs,
                           double step = 1e-5, double kink_eps = 1e-4);

}  // namespace rofusion::ag
