#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "modnet/data.hpp"
#include "modnet/encoder.hpp"
#include "modnet/modules.hpp"
#include "modnet/optimizer.hpp"
#include "modnet/rng.hpp"
#include "modnet/scorer.hpp"

namespace modnet {

enum class EvalMode { Greedy, Sample };
// Learned: score and sample the generated candidates. FixedFullConjunction:
// always the describe layout over the conjunction of all fragments (the
// static-layout baseline the learned policy is compared against).
enum class LayoutPolicy { Learned, FixedFullConjunction };

const char* eval_mode_name(EvalMode m);
EvalMode eval_mode_from_name(const std::string& name);
const char* layout_policy_name(LayoutPolicy p);
LayoutPolicy layout_policy_from_name(const std::string& name);

struct TrainConfig {
  int epochs = 50;
  std::uint64_t seed = 0;
  double rho = 0.95;
  double epsilon = 1e-6;
  double clip_norm = 10.0;
  bool fusion_enabled = false;
  EvalMode eval_mode = EvalMode::Greedy;
  bool baseline_enabled = false;  // moving-average reward baseline, off by default
  double baseline_decay = 0.9;
  // The layout update direction is grad log p(z|x) * log p(y|z,w) as
  // printed; this flag negates the reward for the opposite reading.
  bool flip_reward_sign = false;
  // Reward when the sampled root cannot assign the gold answer positive
  // probability (an exists root with an entity-name gold); the execution
  // update is skipped for such rollouts.
  double reward_floor = -20.0;
  LayoutPolicy layout_policy = LayoutPolicy::Learned;
  ModuleConfig module;
  EncoderConfig encoder;
  ScorerConfig scorer;
};

struct Dataset {
  std::map<std::string, World> worlds;
  std::vector<Example> examples;
};

struct Model {
  TrainConfig config;
  Vocab vocab;
  ParamStore params;
  std::set<std::string> encoder_words;  // lexemes with their own embedding row
};

Model make_model(const TrainConfig& config, const Vocab& vocab);

// Candidate layouts for one example under the configured policy. Empty when
// the question yields no fragments.
std::vector<Layout> candidates_for(const Example& ex, const TrainConfig& config);

struct StepResult {
  bool skipped = false;
  double exec_loss = 0.0;  // -log p(gold | z, w), -reward_floor when unsupported
  double reward = 0.0;
  bool gold_in_support = true;
  int sampled_index = -1;
  Layout layout;
  bool correct = false;
};

// One joint update: sample a layout from the scorer distribution, update the
// module weights by backprop on -log p(gold), update the encoder/scorer
// weights in the direction grad log p(z|x) * reward. The two computations
// live on separate tapes; a scope check rejects any parameter crossing over.
StepResult train_step(const Example& ex, const World& world, Model& model,
                      AdadeltaState& exec_state, AdadeltaState& policy_state,
                      double& reward_baseline, Rng& rng);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double dev_accuracy = 0.0;
  double mean_layout_depth = 0.0;
  int skipped = 0;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
};

// Runs config.epochs passes over the "train"-split examples (per-epoch
// shuffle), evaluating the "dev" split after each. Deterministic given the
// config seed.
TrainResult train(const Dataset& data, Model& model);

struct EvalAttention {
  std::string path;
  std::string node;
  std::vector<double> weights;
};

struct EvalRecord {
  std::string id;
  std::string layout;
  std::string answer;
  std::string gold;
  double layout_prob = 0.0;
  bool correct = false;
  bool skipped = false;  // no candidate layouts
  std::vector<EvalAttention> attentions;
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<EvalRecord> records;
};

// Accuracy of argmax answers over the given examples. Layout choice is
// argmax under Greedy, drawn from the candidate distribution under Sample
// (rng required). Attention intermediates are captured on request.
EvalResult evaluate(const Dataset& data, Model& model, EvalMode mode,
                    Rng* rng = nullptr, bool with_attentions = false);

struct FoldResult {
  std::string held_out;
  double accuracy = 0.0;
  int test_count = 0;
};

struct LoeoResult {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;     // unweighted mean over folds
  double overall_accuracy = 0.0;  // example-weighted
};

// Leave-one-environment-out: per fold, train a fresh model on every other
// environment's examples and test on the held-out one.
LoeoResult cross_validate_loeo(const Dataset& data, const TrainConfig& config);

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

void save_metrics(const std::vector<EpochMetrics>& metrics, const std::string& path);
std::vector<EpochMetrics> load_metrics(const std::string& path);

void save_records(const EvalResult& result, const std::string& path);

}  // namespace modnet
