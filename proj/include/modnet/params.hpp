#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "modnet/tensor.hpp"

namespace modnet {

enum class Init { Uniform, Zero, One };

// All trainable weights, addressed by name. Names are namespaced per module
// kind ("find/B", "relate/e", "describe/v/city", "encoder/emb/what", ...).
// A parameter absent at first read is created on the spot; its initial value
// depends only on (store seed, name), never on creation order, so training
// runs and checkpoint reloads that allocate fresh per-lexeme vectors in
// different orders still agree bit for bit.
class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(std::uint64_t seed) : seed_(seed) {}

  Tensor& ensure(const std::string& name, const std::vector<int>& shape,
                 Init init = Init::Uniform);

  bool has(const std::string& name) const { return values_.count(name) != 0; }
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  void set(const std::string& name, Tensor value) { values_[name] = std::move(value); }

  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  const std::map<std::string, Tensor>& all() const { return values_; }
  std::map<std::string, Tensor>& all() { return values_; }

 private:
  std::uint64_t seed_ = 0;
  std::map<std::string, Tensor> values_;
};

}  // namespace modnet
