#pragma once

#include <vector>

#include "modnet/params.hpp"
#include "modnet/rng.hpp"
#include "modnet/tape.hpp"
#include "modnet/tensor.hpp"

namespace modnet {

struct ScorerConfig {
  int hidden = 32;
};

// Scalar candidate score a^T relu(B h_q + C f + d) with parameters
// scorer/{a,B,C,d}. features is the dense layout feature vector.
int score_layout(int h_q, const Tensor& features, const ScorerConfig& cfg,
                 ParamStore& params, Tape& tape);

// Softmax over per-candidate scalar score nodes.
int layout_distribution(const std::vector<int>& scores, Tape& tape);

// Inverse-CDF draw from a probability vector; deterministic under the rng.
int sample_index(const Tensor& probs, Rng& rng);

int argmax_index(const Tensor& probs);

}  // namespace modnet
