#include "modnet/scorer.hpp"

#include "modnet/errors.hpp"

namespace modnet {

int score_layout(int h_q, const Tensor& features, const ScorerConfig& cfg,
                 ParamStore& params, Tape& tape) {
  const int dh = cfg.hidden;
  const int dq = static_cast<int>(tape.val(h_q).size());
  const int df = static_cast<int>(features.size());
  int a = tape.param(params, "scorer/a", {dh});
  int B = tape.param(params, "scorer/B", {dh, dq});
  int C = tape.param(params, "scorer/C", {dh, df});
  int d = tape.param(params, "scorer/d", {dh}, Init::Zero);
  int f = tape.constant(features);
  int u = tape.add(tape.add(tape.matvec(B, h_q), tape.matvec(C, f)), d);
  return tape.sum(tape.mul(a, tape.relu(u)));
}

int layout_distribution(const std::vector<int>& scores, Tape& tape) {
  if (scores.empty())
    throw ConfigError("layout_distribution: empty candidate list");
  return tape.softmax(tape.concat(scores));
}

int sample_index(const Tensor& probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  const int n = static_cast<int>(probs.size());
  for (int i = 0; i < n; ++i) {
    cum += probs.at(i);
    if (u < cum) return i;
  }
  return n - 1;
}

int argmax_index(const Tensor& probs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(probs.size()); ++i)
    if (probs.at(i) > probs.at(best)) best = i;
  return best;
}

}  // namespace modnet
