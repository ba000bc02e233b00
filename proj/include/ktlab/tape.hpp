#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ktlab/tensor.hpp"

namespace ktlab {

using VarId = int;
inline constexpr VarId kNoVar = -1;

// Reverse-mode tape. Every op computes its output eagerly and registers a
// backward closure; backward() replays closures in reverse creation order,
// which is a valid reverse topological order because ops may only reference
// earlier nodes. Gradients are allocated lazily: nodes whose gradient was
// never touched are skipped on the way down. The closure receives the node's
// own id so it can read its output value and gradient.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, VarId)>;

    // Owned value node with no backward (data-dependent constants).
    VarId constant(Tensor value) {
        nodes_.push_back(Node{std::move(value), nullptr, Tensor{}, false, {}});
        return static_cast<VarId>(nodes_.size() - 1);
    }

    // Leaf viewing external storage (parameters). No copy; the gradient is
    // harvested from the tape after backward().
    VarId leaf(const Tensor& external) {
        nodes_.push_back(Node{Tensor{}, &external, Tensor{}, false, {}});
        return static_cast<VarId>(nodes_.size() - 1);
    }

    VarId op(Tensor value, BackwardFn backward) {
        nodes_.push_back(Node{std::move(value), nullptr, Tensor{}, false, std::move(backward)});
        return static_cast<VarId>(nodes_.size() - 1);
    }

    const Tensor& val(VarId id) const {
        const Node& n = nodes_[static_cast<size_t>(id)];
        return n.view ? *n.view : n.value;
    }

    // Gradient accumulator for a node, allocated zeroed on first use.
    Tensor& grad(VarId id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.grad_live) {
            n.grad = Tensor(val(id).shape());
            n.grad_live = true;
        }
        return n.grad;
    }

    bool grad_live(VarId id) const { return nodes_[static_cast<size_t>(id)].grad_live; }

    // Seeds d(root)/d(root) = 1 and propagates. Root must be scalar.
    void backward(VarId root) {
        grad(root)[0] = 1.0;
        for (size_t i = nodes_.size(); i-- > 0;) {
            Node& n = nodes_[i];
            if (n.grad_live && n.backward) {
                n.backward(*this, static_cast<VarId>(i));
            }
        }
    }

    size_t node_count() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

private:
    struct Node {
        Tensor value;
        const Tensor* view;
        Tensor grad;
        bool grad_live;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
};

} // namespace ktlab
