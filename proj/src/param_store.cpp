#include "recoat/param_store.hpp"

#include "recoat/error.hpp"

namespace recoat {

Tensor& ParamStore::create(const std::string& name, Tensor value,
                           Partition partition) {
  if (values_.count(name))
    throw ValueError("duplicate parameter name: " + name);
  order_.push_back(name);
  partitions_[name] = partition;
  return values_[name] = std::move(value);
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw ValueError("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw ValueError("unknown parameter: " + name);
  return it->second;
}

Partition ParamStore::partition(const std::string& name) const {
  auto it = partitions_.find(name);
  if (it == partitions_.end())
    throw ValueError("unknown partition label for parameter: " + name);
  return it->second;
}

std::size_t ParamStore::value_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : values_) n += t.size();
  return n;
}

void ParamStore::validate_partitions(int k_decoders) const {
  std::vector<bool> has_reg(static_cast<std::size_t>(k_decoders), false);
  std::vector<bool> has_score(static_cast<std::size_t>(k_decoders), false);
  for (const auto& [name, p] : partitions_) {
    if (p.kind == Partition::Kind::shared) continue;
    if (p.decoder < 0 || p.decoder >= k_decoders)
      throw ValueError("partition decoder index out of range for " + name);
    (p.kind == Partition::Kind::regression ? has_reg : has_score)
        [static_cast<std::size_t>(p.decoder)] = true;
  }
  for (int j = 0; j < k_decoders; ++j)
    if (!has_reg[static_cast<std::size_t>(j)] ||
        !has_score[static_cast<std::size_t>(j)])
      throw ValueError("decoder " + std::to_string(j) +
                       " lacks a regression or scoring partition");
}

}  // namespace recoat
