#include "recoat/graph.hpp"

#include "recoat/error.hpp"

namespace recoat {

Var Graph::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(const std::string& name, const Tensor* value) {
  if (param_ids_.count(name))
    throw ValueError("parameter registered twice on one graph: " + name);
  Node n;
  n.external = value;
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size()) - 1;
  param_ids_[name] = id;
  param_list_.emplace_back(name, id);
  return Var{this, id};
}

Var Graph::add_op(Tensor value, std::vector<int> parents, BackwardFn bw) {
  if (check_finite_ && !value.all_finite())
    throw ValueError("non-finite values produced by graph op");
  Node n;
  n.owned = std::move(value);
  n.parents = std::move(parents);
  n.backward = std::move(bw);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Graph::backward(int root) {
  if (root < 0 || root >= size()) throw ValueError("backward: bad node id");
  if (value(root).size() != 1)
    throw ShapeError("backward requires a scalar loss, got shape " +
                     value(root).shape_str());

  // reset state from any previous sweep
  for (Node& n : nodes_) {
    n.reachable = false;
    n.grad = Tensor();
  }

  // mark reachable via parents (iterative DFS)
  std::vector<int> stack{root};
  nodes_[static_cast<std::size_t>(root)].reachable = true;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int p : nodes_[static_cast<std::size_t>(u)].parents) {
      Node& pn = nodes_[static_cast<std::size_t>(p)];
      if (!pn.reachable) {
        pn.reachable = true;
        stack.push_back(p);
      }
    }
  }

  for (int i = 0; i <= root; ++i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.reachable) n.grad = Tensor(value(i).shape());
  }

  nodes_[static_cast<std::size_t>(root)].grad[0] = 1.0;
  for (int i = root; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.reachable && n.backward) n.backward(*this, i);
  }
}

Tensor Graph::param_grad(const std::string& name) const {
  auto it = param_ids_.find(name);
  if (it == param_ids_.end())
    throw ValueError("unknown parameter: " + name);
  const Node& n = nodes_[static_cast<std::size_t>(it->second)];
  if (n.grad.empty()) return Tensor(value(it->second).shape());
  return n.grad;
}

GradMap Graph::harvest_grads() const {
  GradMap out;
  for (const auto& [name, id] : param_list_) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    out[name] = n.grad.empty() ? Tensor(value(id).shape()) : n.grad;
  }
  return out;
}

void Graph::clear() {
  nodes_.clear();
  param_list_.clear();
  param_ids_.clear();
}

void backward(Var loss) {
  if (!loss.valid()) throw ValueError("backward on invalid Var");
  loss.g->backward(loss.id);
}

}  // namespace recoat
