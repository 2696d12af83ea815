#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hyformer/tensor.hpp"

namespace hyformer::nn {

struct Node;
using Var = std::shared_ptr<Node>;

// One vertex of a define-by-run computation graph. Graphs are built per
// forward pass and discarded after backward().
struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily during backward
    bool requires_grad = false;
    bool is_leaf = false;
    std::string name;
    std::vector<Var> parents;
    std::function<void(Node&)> backward_fn;

    Tensor& ensure_grad() {
        if (grad.empty() && value.numel() > 0) grad = zeros_like(value);
        return grad;
    }
};

Var make_leaf(Tensor value, bool requires_grad, std::string name = "");
Var make_const(Tensor value);
Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

// Reverse-mode sweep from `root`. Seeds root->grad with `seed` when given,
// otherwise with ones (the usual scalar-loss case).
void backward(const Var& root, const Tensor* seed = nullptr);

void zero_grad(const std::vector<Var>& vars);

}  // namespace hyformer::nn
