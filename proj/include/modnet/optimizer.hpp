#pragma once

#include <map>
#include <string>
#include <utility>

#include "modnet/params.hpp"
#include "modnet/tensor.hpp"

namespace modnet {

using GradMap = std::map<std::string, Tensor>;

// Per-parameter running averages of squared gradients and squared updates.
struct AdadeltaState {
  double rho = 0.95;
  double epsilon = 1e-6;
  std::map<std::string, std::pair<Tensor, Tensor>> acc;  // E[g^2], E[dx^2]

  AdadeltaState() = default;
  AdadeltaState(double rho_, double epsilon_) : rho(rho_), epsilon(epsilon_) {}
};

double global_norm(const GradMap& grads);

// Scales every gradient by clip_norm / norm when the global L2 norm across
// all tensors in the map exceeds clip_norm. One norm for the whole update,
// not per tensor.
void clip_by_global_norm(GradMap& grads, double clip_norm);

// Accumulator-before-update ordering:
//   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
//   dx       = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
//   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
//   x       <- x + dx
void adadelta_step(ParamStore& params, AdadeltaState& state, const GradMap& grads);

}  // namespace modnet
