#pragma once

#include <map>
#include <string>
#include <vector>

#include "recoat/tensor.hpp"

namespace recoat {

// Which part of the network a parameter belongs to. The regression/scoring
// split per decoder exists to support winner-take-all gradient routing.
struct Partition {
  enum class Kind { shared, regression, scoring };
  Kind kind = Kind::shared;
  int decoder = -1;  // meaningful for regression/scoring

  static Partition shared() { return {Kind::shared, -1}; }
  static Partition regression(int j) { return {Kind::regression, j}; }
  static Partition scoring(int j) { return {Kind::scoring, j}; }
};

// Ordered name -> Tensor map with a partition label per parameter.
class ParamStore {
 public:
  Tensor& create(const std::string& name, Tensor value,
                 Partition partition = Partition::shared());

  bool has(const std::string& name) const { return values_.count(name) > 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  Partition partition(const std::string& name) const;

  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }
  std::size_t value_count() const;

  // every decoder 0..k-1 must have non-empty regression and scoring partitions
  void validate_partitions(int k_decoders) const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, Tensor> values_;
  std::map<std::string, Partition> partitions_;
};

}  // namespace recoat
