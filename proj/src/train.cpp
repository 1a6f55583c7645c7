#include "modnet/train.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "modnet/errors.hpp"

namespace modnet {

using nlohmann::json;

const char* eval_mode_name(EvalMode m) {
  return m == EvalMode::Greedy ? "greedy" : "sample";
}

EvalMode eval_mode_from_name(const std::string& name) {
  if (name == "greedy") return EvalMode::Greedy;
  if (name == "sample") return EvalMode::Sample;
  throw ConfigError("unknown eval mode '" + name + "'");
}

const char* layout_policy_name(LayoutPolicy p) {
  return p == LayoutPolicy::Learned ? "learned" : "fixed";
}

LayoutPolicy layout_policy_from_name(const std::string& name) {
  if (name == "learned") return LayoutPolicy::Learned;
  if (name == "fixed") return LayoutPolicy::FixedFullConjunction;
  throw ConfigError("unknown layout policy '" + name + "'");
}

Model make_model(const TrainConfig& config, const Vocab& vocab) {
  Model m;
  m.config = config;
  m.vocab = vocab;
  m.params = ParamStore(config.seed);
  m.encoder_words.insert(vocab.lexemes.begin(), vocab.lexemes.end());
  return m;
}

std::vector<Layout> candidates_for(const Example& ex, const TrainConfig& config) {
  if (config.layout_policy == LayoutPolicy::Learned)
    return generate_candidates(ex.parse);
  std::vector<Fragment> fragments = extract_fragments(ex.parse);
  if (fragments.empty()) return {};
  LayoutNode body;
  if (fragments.size() == 1) {
    body = fragments[0].node;
  } else {
    body.kind = ModuleKind::And;
    for (Fragment& f : fragments) body.children.push_back(std::move(f.node));
  }
  return {Layout{LayoutNode{ModuleKind::Describe, describe_arg(ex.parse), {body}}}};
}

namespace {

bool has_prefix(const std::string& s, const std::string& prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

// The policy and execution updates must stay disjoint: a parameter showing
// up on the wrong tape means gradient is leaking across the REINFORCE
// boundary, which is a bug, not a tolerable approximation.
void assert_grad_scope(const GradMap& grads,
                       const std::vector<std::string>& allowed,
                       const char* tape_name) {
  for (const auto& [name, g] : grads) {
    bool ok = false;
    for (const std::string& prefix : allowed)
      if (has_prefix(name, prefix)) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::logic_error(std::string("gradient leak: parameter '") + name +
                             "' reached the " + tape_name + " tape");
  }
}

const std::vector<std::string> kPolicyScope = {"encoder/", "scorer/"};
const std::vector<std::string> kExecScope = {"find/", "relate/", "describe/",
                                             "exists/"};
const std::vector<std::string> kExecFusionScope = {
    "find/", "relate/", "describe/", "exists/", "fusion/", "encoder/"};

struct Chosen {
  int index = -1;
  double prob = 1.0;
  Tensor probs;
};

// Scores all candidates on the given tape and returns the distribution node
// (-1 for a single forced candidate under the fixed policy).
int score_candidates(const Example& ex, const std::vector<Layout>& candidates,
                     Model& model, Tape& tape, std::vector<Tensor>* features_out) {
  int h_q = encode_question(ex.tokens, model.encoder_words,
                            model.config.encoder, model.params, tape);
  std::vector<int> scores;
  for (const Layout& c : candidates) {
    Tensor f = featurize(layout_features(c), model.vocab.lexeme_index);
    if (features_out) features_out->push_back(f);
    scores.push_back(
        score_layout(h_q, f, model.config.scorer, model.params, tape));
  }
  return layout_distribution(scores, tape);
}

struct Execution {
  int dist = -1;
  int gold_index = -1;
  ExecutionResult result;
};

Execution run_execution(const Example& ex, const Layout& layout,
                        const World& world, Model& model, Tape& tape) {
  Execution e;
  e.result = execute_layout(layout, world, model.config.module,
                            model.vocab.answers, model.params, tape);
  e.dist = e.result.dist;
  if (model.config.fusion_enabled) {
    int h_q = encode_question(ex.tokens, model.encoder_words,
                              model.config.encoder, model.params, tape);
    e.dist = fuse_with_question(h_q, e.result.embedding, layout.root.kind,
                                model.params, tape);
  }
  const auto& vocab = e.result.vocab;
  for (int i = 0; i < static_cast<int>(vocab.size()); ++i)
    if (vocab[static_cast<std::size_t>(i)] == ex.answer) {
      e.gold_index = i;
      break;
    }
  return e;
}

}  // namespace

StepResult train_step(const Example& ex, const World& world, Model& model,
                      AdadeltaState& exec_state, AdadeltaState& policy_state,
                      double& reward_baseline, Rng& rng) {
  const TrainConfig& cfg = model.config;
  StepResult out;
  std::vector<Layout> candidates = candidates_for(ex, cfg);
  if (candidates.empty()) {
    out.skipped = true;
    return out;
  }

  Tape policy;
  int dist = score_candidates(ex, candidates, model, policy, nullptr);
  const Tensor probs = policy.val(dist);
  out.sampled_index = sample_index(probs, rng);
  out.layout = candidates[static_cast<std::size_t>(out.sampled_index)];

  Tape exec;
  Execution run = run_execution(ex, out.layout, world, model, exec);
  if (run.gold_index < 0) {
    out.gold_in_support = false;
    out.reward = cfg.reward_floor;
    out.exec_loss = -cfg.reward_floor;
  } else {
    int loss = exec.neg(exec.log_(exec.pick(run.dist, run.gold_index)));
    out.exec_loss = exec.val(loss).item();
    out.reward = -out.exec_loss;
    out.correct =
        argmax_index(exec.val(run.dist)) == run.gold_index;
    GradMap grads = exec.backward(loss).by_param;
    assert_grad_scope(grads, cfg.fusion_enabled ? kExecFusionScope : kExecScope,
                      "execution");
    clip_by_global_norm(grads, cfg.clip_norm);
    adadelta_step(model.params, exec_state, grads);
  }

  double reward = cfg.flip_reward_sign ? -out.reward : out.reward;
  if (cfg.baseline_enabled) {
    const double advantage = reward - reward_baseline;
    reward_baseline = cfg.baseline_decay * reward_baseline +
                      (1.0 - cfg.baseline_decay) * reward;
    reward = advantage;
  }

  int neg_logp = policy.neg(policy.log_(policy.pick(dist, out.sampled_index)));
  int policy_loss =
      policy.mul(neg_logp, policy.constant(Tensor::scalar(reward)));
  GradMap grads = policy.backward(policy_loss).by_param;
  assert_grad_scope(grads, kPolicyScope, "policy");
  clip_by_global_norm(grads, cfg.clip_norm);
  adadelta_step(model.params, policy_state, grads);
  return out;
}

TrainResult train(const Dataset& data, Model& model) {
  const TrainConfig& cfg = model.config;
  Dataset train_part, dev_part;
  train_part.worlds = data.worlds;
  dev_part.worlds = data.worlds;
  for (const Example& ex : data.examples)
    (ex.split == "dev" ? dev_part : train_part).examples.push_back(ex);

  AdadeltaState exec_state(cfg.rho, cfg.epsilon);
  AdadeltaState policy_state(cfg.rho, cfg.epsilon);
  double reward_baseline = 0.0;
  Rng rng(cfg.seed);

  std::vector<std::size_t> order(train_part.examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);

    EpochMetrics m;
    m.epoch = epoch;
    int counted = 0, correct = 0;
    double loss_sum = 0.0, depth_sum = 0.0;
    for (std::size_t i : order) {
      const Example& ex = train_part.examples[i];
      auto wit = data.worlds.find(ex.world_id);
      if (wit == data.worlds.end())
        throw SchemaError("question '" + ex.id + "' references unknown world '" +
                          ex.world_id + "'");
      StepResult step = train_step(ex, wit->second, model, exec_state,
                                   policy_state, reward_baseline, rng);
      if (step.skipped) {
        ++m.skipped;
        continue;
      }
      ++counted;
      loss_sum += step.exec_loss;
      depth_sum += layout_depth(step.layout);
      if (step.correct) ++correct;
    }
    m.train_loss = counted ? loss_sum / counted : 0.0;
    m.train_accuracy = counted ? static_cast<double>(correct) / counted : 0.0;
    m.mean_layout_depth = counted ? depth_sum / counted : 0.0;
    m.dev_accuracy = dev_part.examples.empty()
                         ? 0.0
                         : evaluate(dev_part, model, cfg.eval_mode, &rng).accuracy;
    result.epochs.push_back(m);
  }
  return result;
}

EvalResult evaluate(const Dataset& data, Model& model, EvalMode mode, Rng* rng,
                    bool with_attentions) {
  if (mode == EvalMode::Sample && !rng)
    throw ConfigError("sampled evaluation needs an rng");
  EvalResult out;
  int correct = 0;
  for (const Example& ex : data.examples) {
    EvalRecord rec;
    rec.id = ex.id;
    rec.gold = ex.answer;
    std::vector<Layout> candidates = candidates_for(ex, model.config);
    if (candidates.empty()) {
      rec.skipped = true;
      out.records.push_back(std::move(rec));
      continue;
    }
    auto wit = data.worlds.find(ex.world_id);
    if (wit == data.worlds.end())
      throw SchemaError("question '" + ex.id + "' references unknown world '" +
                        ex.world_id + "'");

    Tape policy;
    int dist = score_candidates(ex, candidates, model, policy, nullptr);
    const Tensor& probs = policy.val(dist);
    const int idx = mode == EvalMode::Greedy ? argmax_index(probs)
                                             : sample_index(probs, *rng);
    rec.layout_prob = probs.at(idx);
    const Layout& layout = candidates[static_cast<std::size_t>(idx)];
    rec.layout = print_layout(layout);

    Tape exec;
    Execution run = run_execution(ex, layout, wit->second, model, exec);
    const Tensor& answer_probs = exec.val(run.dist);
    rec.answer = run.result.vocab[static_cast<std::size_t>(argmax_index(answer_probs))];
    rec.correct = rec.answer == ex.answer;
    if (rec.correct) ++correct;
    if (with_attentions)
      for (const AttentionRecord& att : run.result.attentions)
        rec.attentions.push_back(
            {att.path, att.node, exec.val(att.tape_node).v});
    out.records.push_back(std::move(rec));
  }
  out.accuracy = data.examples.empty()
                     ? 0.0
                     : static_cast<double>(correct) / data.examples.size();
  return out;
}

LoeoResult cross_validate_loeo(const Dataset& data, const TrainConfig& config) {
  std::set<std::string> envs;
  for (const auto& [id, w] : data.worlds) envs.insert(id);
  if (envs.size() < 2)
    throw ConfigError("leave-one-environment-out needs at least 2 environments");

  LoeoResult out;
  int total = 0, total_correct = 0;
  for (const std::string& held : envs) {
    Dataset train_data, test_data;
    for (const auto& [id, w] : data.worlds)
      (id == held ? test_data : train_data).worlds.emplace(id, w);
    for (const Example& ex : data.examples) {
      if (ex.world_id == held)
        test_data.examples.push_back(ex);
      else
        train_data.examples.push_back(ex);
    }
    // the held-out world's questions never reach training in any split
    for (Example& ex : train_data.examples)
      if (ex.split == "dev") ex.split = "train";

    Model model = make_model(config, build_vocab(train_data.examples,
                                                 train_data.worlds));
    train(train_data, model);
    EvalResult ev = evaluate(test_data, model, EvalMode::Greedy);
    out.folds.push_back({held, ev.accuracy,
                         static_cast<int>(test_data.examples.size())});
    total += static_cast<int>(test_data.examples.size());
    for (const EvalRecord& r : ev.records)
      if (r.correct) ++total_correct;
  }
  for (const FoldResult& f : out.folds) out.mean_accuracy += f.accuracy;
  out.mean_accuracy /= static_cast<double>(out.folds.size());
  out.overall_accuracy =
      total ? static_cast<double>(total_correct) / total : 0.0;
  return out;
}

namespace {

json config_to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"seed", c.seed},
              {"rho", c.rho},
              {"epsilon", c.epsilon},
              {"clip_norm", c.clip_norm},
              {"fusion_enabled", c.fusion_enabled},
              {"eval_mode", eval_mode_name(c.eval_mode)},
              {"baseline_enabled", c.baseline_enabled},
              {"baseline_decay", c.baseline_decay},
              {"flip_reward_sign", c.flip_reward_sign},
              {"reward_floor", c.reward_floor},
              {"layout_policy", layout_policy_name(c.layout_policy)},
              {"module_hidden", c.module.hidden},
              {"find_view", c.module.find_view},
              {"relate_view", c.module.relate_view},
              {"d_emb", c.encoder.d_emb},
              {"d_h", c.encoder.d_h},
              {"scorer_hidden", c.scorer.hidden}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.rho = j.at("rho").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.fusion_enabled = j.at("fusion_enabled").get<bool>();
  c.eval_mode = eval_mode_from_name(j.at("eval_mode").get<std::string>());
  c.baseline_enabled = j.at("baseline_enabled").get<bool>();
  c.baseline_decay = j.at("baseline_decay").get<double>();
  c.flip_reward_sign = j.at("flip_reward_sign").get<bool>();
  c.reward_floor = j.at("reward_floor").get<double>();
  c.layout_policy =
      layout_policy_from_name(j.at("layout_policy").get<std::string>());
  c.module.hidden = j.at("module_hidden").get<int>();
  c.module.find_view = j.at("find_view").get<std::string>();
  c.module.relate_view = j.at("relate_view").get<std::string>();
  c.encoder.d_emb = j.at("d_emb").get<int>();
  c.encoder.d_h = j.at("d_h").get<int>();
  c.scorer.hidden = j.at("scorer_hidden").get<int>();
  return c;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  json params = json::object();
  for (const auto& [name, t] : model.params.all())
    params[name] = json{{"shape", t.shape}, {"values", t.v}};
  json j{{"schema_version", 1},
         {"config", config_to_json(model.config)},
         {"vocab",
          json{{"lexemes", model.vocab.lexemes}, {"answers", model.vocab.answers}}},
         {"params", params}};
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << j.dump(1) << "\n";
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw SchemaError(path + ": malformed JSON");
  if (!j.contains("config") || !j.contains("vocab") || !j.contains("params"))
    throw SchemaError(path + ": not a checkpoint file");

  Vocab vocab;
  vocab.lexemes = j.at("vocab").at("lexemes").get<std::vector<std::string>>();
  vocab.answers = j.at("vocab").at("answers").get<std::vector<std::string>>();
  for (int i = 0; i < static_cast<int>(vocab.lexemes.size()); ++i)
    vocab.lexeme_index[vocab.lexemes[static_cast<std::size_t>(i)]] = i;
  for (int i = 0; i < static_cast<int>(vocab.answers.size()); ++i)
    vocab.answer_index[vocab.answers[static_cast<std::size_t>(i)]] = i;

  Model model = make_model(config_from_json(j.at("config")), vocab);
  for (const auto& [name, tj] : j.at("params").items()) {
    Tensor t;
    t.shape = tj.at("shape").get<std::vector<int>>();
    t.v = tj.at("values").get<std::vector<double>>();
    std::size_t expect = 1;
    for (int d : t.shape) expect *= static_cast<std::size_t>(d);
    if (t.v.size() != expect)
      throw SchemaError(path + ": parameter '" + name + "' shape mismatch");
    model.params.set(name, std::move(t));
  }
  return model;
}

void save_metrics(const std::vector<EpochMetrics>& metrics, const std::string& path) {
  json arr = json::array();
  for (const EpochMetrics& m : metrics)
    arr.push_back(json{{"epoch", m.epoch},
                       {"train_loss", m.train_loss},
                       {"train_accuracy", m.train_accuracy},
                       {"dev_accuracy", m.dev_accuracy},
                       {"mean_layout_depth", m.mean_layout_depth},
                       {"skipped", m.skipped}});
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << json{{"schema_version", 1}, {"epochs", arr}}.dump(1) << "\n";
}

std::vector<EpochMetrics> load_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw SchemaError(path + ": malformed JSON");
  std::vector<EpochMetrics> out;
  for (const json& mj : j.at("epochs")) {
    EpochMetrics m;
    m.epoch = mj.at("epoch").get<int>();
    m.train_loss = mj.at("train_loss").get<double>();
    m.train_accuracy = mj.at("train_accuracy").get<double>();
    m.dev_accuracy = mj.at("dev_accuracy").get<double>();
    m.mean_layout_depth = mj.at("mean_layout_depth").get<double>();
    m.skipped = mj.at("skipped").get<int>();
    out.push_back(m);
  }
  return out;
}

void save_records(const EvalResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  for (const EvalRecord& r : result.records) {
    json rec{{"id", r.id},           {"layout", r.layout},
             {"answer", r.answer},   {"gold", r.gold},
             {"layout_prob", r.layout_prob}, {"correct", r.correct},
             {"skipped", r.skipped}};
    if (!r.attentions.empty()) {
      json atts = json::array();
      for (const EvalAttention& a : r.attentions)
        atts.push_back(json{{"path", a.path}, {"node", a.node},
                            {"weights", a.weights}});
      rec["attentions"] = atts;
    }
    out << rec.dump() << "\n";
  }
}

}  // namespace modnet
