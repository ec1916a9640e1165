#include "rofusion/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rofusion/errors.hpp"

namespace rofusion::ag {

Tensor::Tensor(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != static_cast<std::size_t>(r) * c) {
        throw DimensionError("Tensor: data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str());
    }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rs) {
    Tensor t(static_cast<int>(rs.size()), rs.size() ? static_cast<int>(rs.begin()->size()) : 0);
    int r = 0;
    for (const auto& row : rs) {
        if (static_cast<int>(row.size()) != t.cols) {
            throw DimensionError("Tensor::from_rows: ragged rows");
        }
        int c = 0;
        for (double v : row) t.at(r, c++) = v;
        ++r;
    }
    return t;
}

std::string Tensor::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Leaf: return "leaf";
        case OpKind::Linear: return "linear_forward";
        case OpKind::Relu: return "relu";
        case OpKind::ConcatCols: return "concat_cols";
        case OpKind::MaxpoolRows: return "maxpool_rows";
        case OpKind::SegmentMaxpool: return "segment_maxpool";
        case OpKind::SoftmaxCE: return "softmax_cross_entropy";
        case OpKind::SmoothL1: return "smooth_l1";
        case OpKind::Add: return "add";
        case OpKind::Scale: return "scale";
    }
    return "?";
}

NodeId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    const NodeId id = static_cast<NodeId>(nodes_.size() - 1);
    check_finite(id);
    return id;
}

void Tape::check_finite(NodeId id) const {
    for (double v : nodes_[id].value.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(op_name(nodes_[id].op)) +
                               ": non-finite value in node " + std::to_string(id));
        }
    }
}

const Tensor& Tape::value(NodeId id) const { return nodes_.at(id).value; }
const Node& Tape::node(NodeId id) const { return nodes_.at(id); }

const std::vector<int>& Tape::argmax_of(NodeId id) const {
    const Node& n = nodes_.at(id);
    if (n.op != OpKind::MaxpoolRows && n.op != OpKind::SegmentMaxpool) {
        throw IndexError("argmax_of: node is not a pooling op");
    }
    return n.argmax;
}

NodeId Tape::leaf(Tensor value) {
    Node n;
    n.op = OpKind::Leaf;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::linear(NodeId x, NodeId w, NodeId b) {
    const Tensor& X = value(x);
    const Tensor& W = value(w);
    const Tensor& B = value(b);
    if (X.cols != W.rows) {
        throw DimensionError("linear_forward: x " + X.shape_str() + " vs W " + W.shape_str());
    }
    if (B.rows != 1 || B.cols != W.cols) {
        throw DimensionError("linear_forward: b " + B.shape_str() + " vs W " + W.shape_str());
    }
    Node n;
    n.op = OpKind::Linear;
    n.in0 = x;
    n.in1 = w;
    n.in2 = b;
    Tensor out(X.rows, W.cols);
    for (int r = 0; r < X.rows; ++r) {
        double* orow = out.data.data() + static_cast<std::size_t>(r) * out.cols;
        for (int j = 0; j < out.cols; ++j) orow[j] = B.data[j];
        const double* xrow = X.data.data() + static_cast<std::size_t>(r) * X.cols;
        // ikj order: per output element the k-sum stays strictly
        // left-to-right, so results are bit-identical across runs.
        for (int k = 0; k < X.cols; ++k) {
            const double xv = xrow[k];
            const double* wrow = W.data.data() + static_cast<std::size_t>(k) * W.cols;
            for (int j = 0; j < out.cols; ++j) orow[j] += xv * wrow[j];
        }
    }
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::relu(NodeId x) {
    const Tensor& X = value(x);
    Node n;
    n.op = OpKind::Relu;
    n.in0 = x;
    Tensor out(X.rows, X.cols);
    for (std::size_t i = 0; i < X.size(); ++i) out.data[i] = X.data[i] > 0.0 ? X.data[i] : 0.0;
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.rows != B.rows) {
        throw DimensionError("concat_cols: row mismatch " + A.shape_str() + " vs " + B.shape_str());
    }
    Node n;
    n.op = OpKind::ConcatCols;
    n.in0 = a;
    n.in1 = b;
    Tensor out(A.rows, A.cols + B.cols);
    for (int r = 0; r < A.rows; ++r) {
        for (int c = 0; c < A.cols; ++c) out.at(r, c) = A.at(r, c);
        for (int c = 0; c < B.cols; ++c) out.at(r, A.cols + c) = B.at(r, c);
    }
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::maxpool_rows(NodeId x) {
    const Tensor& X = value(x);
    if (X.rows < 1) {
        throw DimensionError("maxpool_rows: empty pool (0 rows)");
    }
    Node n;
    n.op = OpKind::MaxpoolRows;
    n.in0 = x;
    Tensor out(1, X.cols);
    n.argmax.assign(X.cols, 0);
    for (int c = 0; c < X.cols; ++c) {
        double best = X.at(0, c);
        int arg = 0;
        for (int r = 1; r < X.rows; ++r) {
            if (X.at(r, c) > best) {  // strict: first occurrence wins ties
                best = X.at(r, c);
                arg = r;
            }
        }
        out.at(0, c) = best;
        n.argmax[c] = arg;
    }
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::segment_maxpool(NodeId x, const std::vector<int>& group_of_row) {
    const Tensor& X = value(x);
    if (static_cast<int>(group_of_row.size()) != X.rows) {
        throw DimensionError("segment_maxpool: group ids length " +
                             std::to_string(group_of_row.size()) + " vs rows " +
                             std::to_string(X.rows));
    }
    if (X.rows < 1) {
        throw DimensionError("segment_maxpool: empty pool (0 rows)");
    }
    // Remap group values to dense indices in order of first appearance.
    std::vector<int> dense(group_of_row.size());
    std::vector<int> firsts;
    for (std::size_t i = 0; i < group_of_row.size(); ++i) {
        const int g = group_of_row[i];
        if (g < 0) throw IndexError("segment_maxpool: negative group id");
        int d = -1;
        for (std::size_t k = 0; k < firsts.size(); ++k) {
            if (group_of_row[firsts[k]] == g) {
                d = static_cast<int>(k);
                break;
            }
        }
        if (d < 0) {
            d = static_cast<int>(firsts.size());
            firsts.push_back(static_cast<int>(i));
        }
        dense[i] = d;
    }
    const int n_groups = static_cast<int>(firsts.size());

    Node n;
    n.op = OpKind::SegmentMaxpool;
    n.in0 = x;
    n.ints = dense;
    n.argmax.assign(static_cast<std::size_t>(n_groups) * X.cols, -1);
    Tensor pooled(n_groups, X.cols);
    std::vector<bool> seen(n_groups, false);
    for (int r = 0; r < X.rows; ++r) {
        const int g = dense[r];
        for (int c = 0; c < X.cols; ++c) {
            const double v = X.at(r, c);
            const std::size_t idx = static_cast<std::size_t>(g) * X.cols + c;
            if (!seen[g] || v > pooled.at(g, c)) {
                pooled.at(g, c) = v;
                n.argmax[idx] = r;
            }
        }
        seen[g] = true;
    }
    Tensor out(X.rows, X.cols);
    for (int r = 0; r < X.rows; ++r) {
        for (int c = 0; c < X.cols; ++c) out.at(r, c) = pooled.at(dense[r], c);
    }
    n.value = std::move(out);
    n.aux = std::move(pooled);
    return push(std::move(n));
}

NodeId Tape::softmax_cross_entropy(NodeId logits, const std::vector<int>& targets,
                                   const std::vector<std::uint8_t>& row_mask) {
    const Tensor& L = value(logits);
    if (static_cast<int>(targets.size()) != L.rows ||
        static_cast<int>(row_mask.size()) != L.rows) {
        throw DimensionError("softmax_cross_entropy: targets/mask length vs logits rows " +
                             std::to_string(L.rows));
    }
    Node n;
    n.op = OpKind::SoftmaxCE;
    n.in0 = logits;
    n.ints = targets;
    n.mask = row_mask;
    n.saved = Tensor(L.rows, L.cols);  // probabilities
    double total = 0.0;
    int unmasked = 0;
    for (int r = 0; r < L.rows; ++r) {
        const int t = targets[r];
        if (t < 0 || t >= L.cols) {
            throw IndexError("softmax_cross_entropy: target " + std::to_string(t) +
                             " out of [0," + std::to_string(L.cols) + ") at row " +
                             std::to_string(r));
        }
        double m = L.at(r, 0);
        for (int c = 1; c < L.cols; ++c) m = std::max(m, L.at(r, c));
        double z = 0.0;
        for (int c = 0; c < L.cols; ++c) z += std::exp(L.at(r, c) - m);
        for (int c = 0; c < L.cols; ++c) n.saved.at(r, c) = std::exp(L.at(r, c) - m) / z;
        if (row_mask[r]) {
            total += -(L.at(r, t) - m - std::log(z));
            ++unmasked;
        }
    }
    n.scalar = static_cast<double>(unmasked);
    n.value = Tensor(1, 1);
    n.value.at(0, 0) = unmasked > 0 ? total / unmasked : 0.0;
    return push(std::move(n));
}

NodeId Tape::smooth_l1(NodeId pred, const Tensor& target,
                       const std::vector<std::uint8_t>& entry_mask) {
    const Tensor& P = value(pred);
    if (!P.same_shape(target)) {
        throw DimensionError("smooth_l1: pred " + P.shape_str() + " vs target " +
                             target.shape_str());
    }
    if (entry_mask.size() != P.size()) {
        throw DimensionError("smooth_l1: mask length " + std::to_string(entry_mask.size()) +
                             " vs entries " + std::to_string(P.size()));
    }
    Node n;
    n.op = OpKind::SmoothL1;
    n.in0 = pred;
    n.mask = entry_mask;
    n.saved = Tensor(P.rows, P.cols);  // diffs
    double total = 0.0;
    int unmasked = 0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double d = P.data[i] - target.data[i];
        n.saved.data[i] = d;
        if (entry_mask[i]) {
            const double a = std::abs(d);
            total += a < 1.0 ? 0.5 * d * d : a - 0.5;
            ++unmasked;
        }
    }
    n.scalar = static_cast<double>(unmasked);
    n.value = Tensor(1, 1);
    n.value.at(0, 0) = unmasked > 0 ? total / unmasked : 0.0;
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B)) {
        throw DimensionError("add: " + A.shape_str() + " vs " + B.shape_str());
    }
    Node n;
    n.op = OpKind::Add;
    n.in0 = a;
    n.in1 = b;
    Tensor out(A.rows, A.cols);
    for (std::size_t i = 0; i < A.size(); ++i) out.data[i] = A.data[i] + B.data[i];
    n.value = std::move(out);
    return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double k) {
    const Tensor& A = value(a);
    Node n;
    n.op = OpKind::Scale;
    n.in0 = a;
    n.scalar = k;
    Tensor out(A.rows, A.cols);
    for (std::size_t i = 0; i < A.size(); ++i) out.data[i] = A.data[i] * k;
    n.value = std::move(out);
    return push(std::move(n));
}

std::vector<Tensor> Tape::backward(NodeId loss) const {
    const Tensor& L = value(loss);
    if (L.rows != 1 || L.cols != 1) {
        throw DimensionError("backward: seed must be scalar, got " + L.shape_str());
    }
    std::vector<Tensor> grads(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        grads[i] = Tensor(nodes_[i].value.rows, nodes_[i].value.cols);
    }
    grads[loss].at(0, 0) = 1.0;

    for (NodeId id = loss; id >= 0; --id) {
        const Node& n = nodes_[id];
        const Tensor& g = grads[id];
        switch (n.op) {
            case OpKind::Leaf:
                break;
            case OpKind::Linear: {
                const Tensor& X = nodes_[n.in0].value;
                const Tensor& W = nodes_[n.in1].value;
                Tensor& gx = grads[n.in0];
                Tensor& gw = grads[n.in1];
                Tensor& gb = grads[n.in2];
                for (int r = 0; r < X.rows; ++r) {
                    const double* grow = g.data.data() + static_cast<std::size_t>(r) * g.cols;
                    double* gxrow = gx.data.data() + static_cast<std::size_t>(r) * gx.cols;
                    const double* xrow = X.data.data() + static_cast<std::size_t>(r) * X.cols;
                    for (int k = 0; k < X.cols; ++k) {
                        const double* wrow = W.data.data() + static_cast<std::size_t>(k) * W.cols;
                        double* gwrow = gw.data.data() + static_cast<std::size_t>(k) * gw.cols;
                        double acc = 0.0;
                        const double xv = xrow[k];
                        for (int j = 0; j < g.cols; ++j) {
                            acc += grow[j] * wrow[j];
                            gwrow[j] += xv * grow[j];
                        }
                        gxrow[k] += acc;
                    }
                    for (int j = 0; j < g.cols; ++j) gb.data[j] += grow[j];
                }
                break;
            }
            case OpKind::Relu: {
                const Tensor& X = nodes_[n.in0].value;
                Tensor& gx = grads[n.in0];
                for (std::size_t i = 0; i < X.size(); ++i) {
                    if (X.data[i] > 0.0) gx.data[i] += g.data[i];
                }
                break;
            }
            case OpKind::ConcatCols: {
                Tensor& ga = grads[n.in0];
                Tensor& gb = grads[n.in1];
                const int ca = ga.cols;
                for (int r = 0; r < g.rows; ++r) {
                    for (int c = 0; c < ca; ++c) ga.at(r, c) += g.at(r, c);
                    for (int c = 0; c < gb.cols; ++c) gb.at(r, c) += g.at(r, ca + c);
                }
                break;
            }
            case OpKind::MaxpoolRows: {
                Tensor& gx = grads[n.in0];
                for (int c = 0; c < g.cols; ++c) gx.at(n.argmax[c], c) += g.at(0, c);
                break;
            }
            case OpKind::SegmentMaxpool: {
                Tensor& gx = grads[n.in0];
                for (int r = 0; r < g.rows; ++r) {
                    const int grp = n.ints[r];
                    for (int c = 0; c < g.cols; ++c) {
                        const int src = n.argmax[static_cast<std::size_t>(grp) * g.cols + c];
                        gx.at(src, c) += g.at(r, c);
                    }
                }
                break;
            }
            case OpKind::SoftmaxCE: {
                if (n.scalar <= 0.0) break;
                const double gup = g.at(0, 0) / n.scalar;
                Tensor& gl = grads[n.in0];
                for (int r = 0; r < gl.rows; ++r) {
                    if (!n.mask[r]) continue;
                    for (int c = 0; c < gl.cols; ++c) {
                        const double ind = c == n.ints[r] ? 1.0 : 0.0;
                        gl.at(r, c) += gup * (n.saved.at(r, c) - ind);
                    }
                }
                break;
            }
            case OpKind::SmoothL1: {
                if (n.scalar <= 0.0) break;
                const double gup = g.at(0, 0) / n.scalar;
                Tensor& gp = grads[n.in0];
                for (std::size_t i = 0; i < gp.size(); ++i) {
                    if (!n.mask[i]) continue;
                    const double d = n.saved.data[i];
                    gp.data[i] += gup * (std::abs(d) < 1.0 ? d : (d > 0.0 ? 1.0 : -1.0));
                }
                break;
            }
            case OpKind::Add: {
                Tensor& ga = grads[n.in0];
                Tensor& gb = grads[n.in1];
                for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += g.data[i];
                for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] += g.data[i];
                break;
            }
            case OpKind::Scale: {
                Tensor& ga = grads[n.in0];
                for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += g.data[i] * n.scalar;
                break;
            }
        }
    }
    return grads;
}

double Tape::min_abs_relu_input() const {
    double best = std::numeric_limits<double>::infinity();
    for (const Node& n : nodes_) {
        if (n.op != OpKind::Relu) continue;
        const Tensor& X = nodes_[n.in0].value;
        for (double v : X.data) best = std::min(best, std::abs(v));
    }
    return best;
}

GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& inputs, double step,
                           double kink_eps) {
    Tape tape;
    std::vector<NodeId> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t));
    const NodeId loss = f(tape, leaves);
    const std::vector<Tensor> grads = tape.backward(loss);

    const auto eval = [&](const std::vector<Tensor>& xs, double* min_relu) {
        Tape t2;
        std::vector<NodeId> ls;
        ls.reserve(xs.size());
        for (const Tensor& t : xs) ls.push_back(t2.leaf(t));
        const NodeId out = f(t2, ls);
        if (min_relu) *min_relu = t2.min_abs_relu_input();
        return t2.value(out).at(0, 0);
    };

    GradCheckReport rep;
    std::vector<Tensor> xs = inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t k = 0; k < inputs[i].size(); ++k) {
            const double orig = xs[i].data[k];
            double kink_plus = 0.0, kink_minus = 0.0;
            xs[i].data[k] = orig + step;
            const double fp = eval(xs, &kink_plus);
            xs[i].data[k] = orig - step;
            const double fm = eval(xs, &kink_minus);
            xs[i].data[k] = orig;
            if (std::min(kink_plus, kink_minus) < kink_eps) {
                ++rep.skipped_kinks;
                continue;
            }
            const double fd = (fp - fm) / (2.0 * step);
            const double ga = grads[leaves[i]].data[k];
            const double denom = std::max(1e-8, std::max(std::abs(ga), std::abs(fd)));
            rep.max_rel_err = std::max(rep.max_rel_err, std::abs(ga - fd) / denom);
            ++rep.checked;
        }
    }
    return rep;
}

}  // namespace rofusion::ag
