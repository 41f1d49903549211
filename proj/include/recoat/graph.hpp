#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "recoat/tensor.hpp"

namespace recoat {

class Graph;

// Handle to a node on a Graph's tape.
struct Var {
  Graph* g = nullptr;
  int id = -1;

  bool valid() const { return g != nullptr && id >= 0; }
  const Tensor& value() const;
};

using GradMap = std::map<std::string, Tensor>;

// Reverse-mode tape. Nodes are appended in evaluation order, so the reverse
// of the tape is a topological order and backward() is a single sweep.
class Graph {
 public:
  // Accumulates into the parents' grads, reading this node's grad.
  using BackwardFn = std::function<void(Graph&, int)>;

  explicit Graph(bool check_finite = false) : check_finite_(check_finite) {}

  Var constant(Tensor value);
  // Leaf whose storage lives outside the graph (parameters). The pointer must
  // stay valid for the graph's lifetime. Names must be unique per graph.
  Var param(const std::string& name, const Tensor* value);
  Var add_op(Tensor value, std::vector<int> parents, BackwardFn bw);

  const Tensor& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external ? *n.external : n.owned;
  }
  Tensor& grad(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  const Tensor& grad(int id) const {
    return nodes_[static_cast<std::size_t>(id)].grad;
  }

  int size() const { return static_cast<int>(nodes_.size()); }

  // Reverse-mode sweep from a scalar node. Grads from any previous backward
  // call are discarded. Nodes unreachable from `root` keep exactly-zero grads.
  void backward(int root);

  // Gradient of a registered parameter after backward(); exact zeros when the
  // parameter was not reachable from the loss.
  Tensor param_grad(const std::string& name) const;
  GradMap harvest_grads() const;

  const std::vector<std::pair<std::string, int>>& params() const {
    return param_list_;
  }

  void clear();

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    std::vector<int> parents;
    BackwardFn backward;
    bool reachable = false;
  };

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, int>> param_list_;
  std::map<std::string, int> param_ids_;
  bool check_finite_ = false;
};

inline const Tensor& Var::value() const { return g->value(id); }

// Free-function form used by training code; checks the loss is scalar.
void backward(Var loss);

}  // namespace recoat
