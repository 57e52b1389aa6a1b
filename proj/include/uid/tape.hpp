#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "uid/tensor.hpp"

namespace uid {

using VarId = int;

// Gradients of a scalar loss with respect to named parameters.
using Gradients = std::map<std::string, Tensor>;

// Reverse-mode autodiff over dense tensors. Nodes only reference earlier
// nodes, so reverse creation order is a valid topological order for the
// backward sweep. One tape per sample/batch; tapes share nothing mutable.
class Tape {
public:
    // Leaf holding a constant or input value. Gradients flow but are not exported.
    VarId input(Tensor value);
    // Leaf bound to an external parameter tensor (not copied; must outlive the tape).
    VarId param(const std::string& name, const Tensor& value);

    VarId matmul(VarId a, VarId b);     // [m x k] * [k x n]
    VarId matmul_nt(VarId a, VarId b);  // [m x k] * [n x k]^T
    VarId add(VarId a, VarId b);        // same shape
    VarId add_bias(VarId a, VarId b);   // b is a row vector broadcast over a's rows
    VarId scale(VarId a, double c);
    VarId relu(VarId a);
    VarId gelu(VarId a);
    VarId softmax_rows(VarId a);
    VarId layer_norm_rows(VarId a, VarId gain, VarId bias, double eps = 1e-5);
    VarId embedding_lookup(VarId table, const std::vector<int>& ids);
    VarId concat_rows(const std::vector<VarId>& parts);
    VarId concat_cols(const std::vector<VarId>& parts);
    VarId take_row(VarId a, long row);
    VarId mean_rows(VarId a);
    // Mean of -log softmax(logits)[target] over rows. logits [B x C], targets size B.
    VarId cross_entropy(VarId logits, const std::vector<int>& targets);

    const Tensor& val(VarId id) const { return node_val(id); }
    // Valid after backward(); zero tensor if the node was not reached.
    Tensor grad_of(VarId id) const;

    void backward(VarId loss);
    // All registered params; unreached ones get zero gradients.
    Gradients grads() const;

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor owned;
        const Tensor* ext = nullptr;
        Tensor grad;  // empty until touched by backward
        std::function<void(Tape&, VarId)> back;
    };

    std::vector<Node> nodes_;
    std::vector<std::pair<std::string, VarId>> params_;

    const Tensor& node_val(VarId id) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        return n.ext ? *n.ext : n.owned;
    }
    Tensor& grad_buf(VarId id);
    const Tensor& grad_ref(VarId id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
    VarId push(Tensor value, std::function<void(Tape&, VarId)> back);

    friend struct TapeTestAccess;
};

}  // namespace uid
