#include "modnet/params.hpp"

#include "modnet/errors.hpp"
#include "modnet/rng.hpp"

namespace modnet {

namespace {

// Uniform in [-s, s] with s = sqrt(6 / (fan_in + fan_out)). Matrices map
// cols -> rows; vectors are treated as embeddings (fan_in = fan_out = n).
void fill_uniform(Tensor& t, std::uint64_t seed, const std::string& name) {
  int fan_in = 1, fan_out = 1;
  if (t.rank() == 2) {
    fan_in = t.cols();
    fan_out = t.rows();
  } else if (t.rank() == 1) {
    fan_in = t.rows();
    fan_out = t.rows();
  }
  const double s = std::sqrt(6.0 / (fan_in + fan_out));
  Rng rng(seed ^ fnv1a64(name));
  for (double& x : t.v) x = rng.uniform(-s, s);
}

}  // namespace

Tensor& ParamStore::ensure(const std::string& name, const std::vector<int>& shape,
                           Init init) {
  auto it = values_.find(name);
  if (it != values_.end()) {
    if (it->second.shape != shape) {
      Tensor want;
      want.shape = shape;
      throw ShapeError("param '" + name + "': stored shape " +
                       it->second.shape_str() + " does not match requested " +
                       want.shape_str());
    }
    return it->second;
  }

  Tensor t;
  t.shape = shape;
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  t.v.assign(n, 0.0);
  switch (init) {
    case Init::Uniform:
      fill_uniform(t, seed_, name);
      break;
    case Init::Zero:
      break;
    case Init::One:
      t.v.assign(n, 1.0);
      break;
  }
  return values_.emplace(name, std::move(t)).first->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end())
    throw ConfigError("param '" + name + "' not found in store");
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end())
    throw ConfigError("param '" + name + "' not found in store");
  return it->second;
}

}  // namespace modnet
