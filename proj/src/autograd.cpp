#include "hyformer/autograd.hpp"

#include <unordered_set>

namespace hyformer::nn {

Var make_leaf(Tensor value, bool requires_grad, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    n->is_leaf = true;
    n->name = std::move(name);
    return n;
}

Var make_const(Tensor value) { return make_leaf(std::move(value), false); }

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    for (const auto& p : parents)
        if (p && p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return n;
}

namespace {

// Iterative post-order DFS; recursion would overflow on deep decoder graphs.
void topo_sort(const Var& root, std::vector<Node*>& order) {
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        if (next_child < node->parents.size()) {
            Node* child = node->parents[next_child++].get();
            if (child && child->requires_grad && !visited.count(child)) {
                visited.insert(child);
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
}

}  // namespace

void backward(const Var& root, const Tensor* seed) {
    check(root != nullptr, "backward: null root");
    check(root->requires_grad, "backward: root does not require grad");
    root->ensure_grad();
    if (seed) {
        check(seed->same_shape(root->value), "backward: seed shape mismatch");
        root->grad = *seed;
    } else {
        root->grad.fill(1.0);
    }
    std::vector<Node*> order;
    topo_sort(root, order);
    // order is post-order (parents before node); walk in reverse.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

void zero_grad(const std::vector<Var>& vars) {
    for (const auto& v : vars)
        if (v) v->grad = Tensor();
}

}  // namespace hyformer::nn
