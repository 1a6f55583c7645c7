#include "modnet/optimizer.hpp"

#include <cmath>

#include "modnet/errors.hpp"

namespace modnet {

double global_norm(const GradMap& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (double x : g.v) sq += x * x;
  return std::sqrt(sq);
}

void clip_by_global_norm(GradMap& grads, double clip_norm) {
  if (clip_norm <= 0.0)
    throw ConfigError("clip_by_global_norm: clip_norm must be positive");
  const double norm = global_norm(grads);
  if (norm <= clip_norm) return;
  const double scale = clip_norm / norm;
  for (auto& [name, g] : grads)
    for (double& x : g.v) x *= scale;
}

void adadelta_step(ParamStore& params, AdadeltaState& state, const GradMap& grads) {
  for (const auto& [name, g] : grads) {
    Tensor& x = params.get(name);
    if (!x.same_shape(g))
      throw ShapeError("adadelta_step: param '" + name + "' has shape " +
                       x.shape_str() + " but gradient has " + g.shape_str());
    auto it = state.acc.find(name);
    if (it == state.acc.end())
      it = state.acc
               .emplace(name, std::make_pair(Tensor::zeros_like(x),
                                             Tensor::zeros_like(x)))
               .first;
    Tensor& eg2 = it->second.first;
    Tensor& edx2 = it->second.second;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double gi = g.v[i];
      eg2.v[i] = state.rho * eg2.v[i] + (1.0 - state.rho) * gi * gi;
      const double dx = -std::sqrt(edx2.v[i] + state.epsilon) /
                        std::sqrt(eg2.v[i] + state.epsilon) * gi;
      edx2.v[i] = state.rho * edx2.v[i] + (1.0 - state.rho) * dx * dx;
      x.v[i] += dx;
    }
  }
}

}  // namespace modnet
