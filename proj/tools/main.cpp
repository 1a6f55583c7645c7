#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "modnet/data.hpp"
#include "modnet/errors.hpp"
#include "modnet/gradcheck.hpp"
#include "modnet/tape.hpp"
#include "modnet/train.hpp"

using namespace modnet;

namespace {

Dataset load_dataset(const std::string& worlds_path, const std::string& questions_path,
                     const std::string& split) {
  Dataset data;
  for (World& w : load_worlds(worlds_path)) {
    std::string id = w.id;
    data.worlds.emplace(std::move(id), std::move(w));
  }
  for (Example& ex : load_questions(questions_path)) {
    if (!split.empty() && split != "all" && ex.split != split) continue;
    if (!data.worlds.count(ex.world_id))
      throw SchemaError("question '" + ex.id + "' references unknown world '" +
                        ex.world_id + "'");
    data.examples.push_back(std::move(ex));
  }
  return data;
}

void check_vocab_overlap(const Model& model, const Dataset& data) {
  for (const Example& ex : data.examples)
    if (model.vocab.answer_index.count(ex.answer)) return;
  if (!data.examples.empty())
    throw ConfigError(
        "checkpoint vocabulary shares no answers with this dataset; "
        "wrong checkpoint?");
}

int cmd_synth(const SynthSpec& spec, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  SynthOutput out = synth_generate(spec);
  save_worlds(out.worlds, out_dir + "/worlds.json");
  save_questions(out.examples, out_dir + "/questions.jsonl");
  save_gold_layouts(out.gold_layouts, out_dir + "/gold_layouts.jsonl");
  std::printf("wrote %zu worlds, %zu questions to %s\n", out.worlds.size(),
              out.examples.size(), out_dir.c_str());
  return 0;
}

int cmd_train(const TrainConfig& cfg, const std::string& worlds_path,
              const std::string& questions_path, const std::string& out_dir) {
  Dataset data = load_dataset(worlds_path, questions_path, "all");
  std::filesystem::create_directories(out_dir);
  Model model = make_model(cfg, build_vocab(data.examples, data.worlds));
  TrainResult result = train(data, model);
  save_checkpoint(model, out_dir + "/checkpoint.json");
  save_metrics(result.epochs, out_dir + "/metrics.json");
  if (!result.epochs.empty()) {
    const EpochMetrics& last = result.epochs.back();
    std::printf("epoch %d  train_loss %.4f  train_acc %.4f  dev_acc %.4f\n",
                last.epoch, last.train_loss, last.train_accuracy,
                last.dev_accuracy);
  }
  return 0;
}

int cmd_eval(const std::string& worlds_path, const std::string& questions_path,
             const std::string& checkpoint, const std::string& out_dir,
             const std::string& split, EvalMode mode, std::uint64_t seed) {
  Dataset data = load_dataset(worlds_path, questions_path, split);
  Model model = load_checkpoint(checkpoint);
  check_vocab_overlap(model, data);
  bool with_attentions = true;
  for (const auto& [id, w] : data.worlds)
    if (w.entity_count() > 1000) with_attentions = false;
  Rng rng(seed);
  EvalResult result = evaluate(data, model, mode, &rng, with_attentions);
  int correct = 0;
  for (const EvalRecord& r : result.records) correct += r.correct ? 1 : 0;
  std::printf("accuracy %.4f (%d/%zu)\n", result.accuracy, correct,
              result.records.size());
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    save_records(result, out_dir + "/records.jsonl");
  }
  return 0;
}

int cmd_predict(const std::string& worlds_path, const std::string& questions_path,
                const std::string& checkpoint, const std::string& id) {
  Dataset data = load_dataset(worlds_path, questions_path, "all");
  Model model = load_checkpoint(checkpoint);
  check_vocab_overlap(model, data);
  for (const Example& ex : data.examples) {
    if (!id.empty() && ex.id != id) continue;
    Dataset one;
    one.worlds = data.worlds;
    one.examples = {ex};
    EvalResult result = evaluate(one, model, EvalMode::Greedy);
    const EvalRecord& r = result.records[0];
    if (r.skipped) {
      std::printf("%s: no candidate layouts\n", ex.id.c_str());
      return 1;
    }
    std::printf("question: %s\nlayout: %s\nanswer: %s\n", ex.id.c_str(),
                r.layout.c_str(), r.answer.c_str());
    return 0;
  }
  std::fprintf(stderr, "no question with id '%s'\n", id.c_str());
  return 2;
}

int cmd_inspect(const std::string& questions_path, const std::string& worlds_path,
                const std::string& checkpoint, const std::string& id) {
  std::vector<Example> examples = load_questions(questions_path);
  bool scored = !checkpoint.empty();
  Model model;
  if (scored) model = load_checkpoint(checkpoint);
  (void)worlds_path;

  bool any = false;
  for (const Example& ex : examples) {
    if (!id.empty() && ex.id != id) continue;
    any = true;
    std::vector<Layout> candidates = generate_candidates(ex.parse);
    if (candidates.empty()) {
      std::printf("%s: no candidate layouts\n", ex.id.c_str());
      continue;
    }
    std::vector<double> probs(candidates.size(), 0.0);
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (scored) {
      Tape tape;
      int h_q = encode_question(ex.tokens, model.encoder_words,
                                model.config.encoder, model.params, tape);
      std::vector<int> scores;
      for (const Layout& c : candidates)
        scores.push_back(score_layout(
            h_q, featurize(layout_features(c), model.vocab.lexeme_index),
            model.config.scorer, model.params, tape));
      const Tensor& p = tape.val(layout_distribution(scores, tape));
      for (std::size_t i = 0; i < candidates.size(); ++i) probs[i] = p.at(static_cast<int>(i));
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    }
    std::printf("%s (%zu candidates)\n", ex.id.c_str(), candidates.size());
    for (std::size_t i : order) {
      const Layout& c = candidates[i];
      LayoutFeatures f = layout_features(c);
      std::string args;
      for (const std::string& a : f.param_args) args += (args.empty() ? "" : ",") + a;
      if (scored)
        std::printf("  p=%.4f  %s  args=[%s]\n", probs[i],
                    print_layout(c).c_str(), args.c_str());
      else
        std::printf("  %s  args=[%s]\n", print_layout(c).c_str(), args.c_str());
    }
  }
  if (!any && !id.empty()) {
    std::fprintf(stderr, "no question with id '%s'\n", id.c_str());
    return 2;
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, int configs, bool inject_relu_fault) {
  if (inject_relu_fault) tape_debug::relu_backward_sign = -1.0;
  GradCheckReport report = run_gradient_suite(seed, configs);
  tape_debug::relu_backward_sign = 1.0;
  std::string failing;
  for (const GradCheckEntry& e : report.entries) {
    std::printf("%-14s configs %3d  coords %6d  max_rel_err %.3e\n",
                e.name.c_str(), e.configs, e.coords, e.max_rel_err);
    if (e.max_rel_err >= report.tolerance) failing += " " + e.name;
  }
  std::printf("worst: %s (%.3e), tolerance %.0e\n", report.worst_name.c_str(),
              report.worst, report.tolerance);
  if (!report.ok()) {
    std::fprintf(stderr, "gradient check FAILED at:%s\n", failing.c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamically assembled module networks for grounded QA"};
  app.require_subcommand(1);

  std::string worlds_path, questions_path, checkpoint, out_dir, id, split = "all";
  std::string eval_mode = "greedy", reward_sign = "printed", layout_policy = "learned";
  std::uint64_t seed = 0;
  TrainConfig cfg;
  SynthSpec spec;
  int gc_configs = 100;
  bool fusion = false, baseline = false, inject_relu_fault = false;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--envs", spec.environments, "number of environments");
  synth->add_option("--entities", spec.entities_per_env, "entities per environment");
  synth->add_option("--questions", spec.questions_per_env, "questions per environment");
  synth->add_option("--noise", spec.noise, "feature noise amplitude");
  synth->add_option("--feature-dim", spec.feature_dim, "rows per feature view");
  synth->add_option("--seed", spec.seed, "generator seed");

  auto add_train_flags = [&](CLI::App* c) {
    c->add_option("--seed", cfg.seed, "run seed");
    c->add_option("--epochs", cfg.epochs, "training epochs");
    c->add_flag("--fusion", fusion, "fuse the question encoding into the answer");
    c->add_option("--eval-mode", eval_mode, "greedy|sample")
        ->check(CLI::IsMember({"greedy", "sample"}));
    c->add_option("--reward-sign", reward_sign,
                  "printed: update direction grad log p(z|x) * log p(y|z,w); "
                  "flipped: negate")
        ->check(CLI::IsMember({"printed", "flipped"}));
    c->add_flag("--baseline", baseline, "moving-average reward baseline");
    c->add_option("--layout-policy", layout_policy, "learned|fixed")
        ->check(CLI::IsMember({"learned", "fixed"}));
    c->add_option("--module-hidden", cfg.module.hidden, "module hidden width");
    c->add_option("--d-emb", cfg.encoder.d_emb, "word embedding width");
    c->add_option("--d-h", cfg.encoder.d_h, "encoder hidden width");
    c->add_option("--scorer-hidden", cfg.scorer.hidden, "scorer hidden width");
    c->add_option("--clip-norm", cfg.clip_norm, "gradient clipping norm");
    c->add_option("--baseline-decay", cfg.baseline_decay,
                  "reward baseline moving-average decay");
    c->add_option("--reward-floor", cfg.reward_floor,
                  "reward when the sampled root cannot express the gold answer");
  };

  CLI::App* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--worlds", worlds_path, "worlds JSON file")->required();
  tr->add_option("--questions", questions_path, "questions JSONL file")->required();
  tr->add_option("--out", out_dir, "output directory")->required();
  add_train_flags(tr);

  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--worlds", worlds_path, "worlds JSON file")->required();
  ev->add_option("--questions", questions_path, "questions JSONL file")->required();
  ev->add_option("--checkpoint", checkpoint, "checkpoint JSON file")->required();
  ev->add_option("--out", out_dir, "directory for per-question records");
  ev->add_option("--split", split, "train|dev|all")
      ->check(CLI::IsMember({"train", "dev", "all"}));
  ev->add_option("--eval-mode", eval_mode, "greedy|sample")
      ->check(CLI::IsMember({"greedy", "sample"}));
  ev->add_option("--seed", seed, "rng seed for sampled evaluation");

  CLI::App* pr = app.add_subcommand("predict", "answer one question");
  pr->add_option("--worlds", worlds_path, "worlds JSON file")->required();
  pr->add_option("--questions", questions_path, "questions JSONL file")->required();
  pr->add_option("--checkpoint", checkpoint, "checkpoint JSON file")->required();
  pr->add_option("--id", id, "question id (default: first question)");

  CLI::App* ic = app.add_subcommand("inspect-candidates",
                                    "list candidate layouts per question");
  ic->add_option("--questions", questions_path, "questions JSONL file")->required();
  ic->add_option("--worlds", worlds_path, "worlds JSON file (unused, accepted)");
  ic->add_option("--checkpoint", checkpoint, "score candidates with this checkpoint");
  ic->add_option("--id", id, "restrict to one question id");

  CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gc->add_option("--seed", seed, "configuration seed");
  gc->add_option("--configs", gc_configs, "configurations per op");
  gc->add_flag("--inject-relu-sign-flip", inject_relu_fault,
               "test harness: break the relu backward rule on purpose")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  cfg.fusion_enabled = fusion;
  cfg.baseline_enabled = baseline;
  cfg.flip_reward_sign = reward_sign == "flipped";

  try {
    cfg.eval_mode = eval_mode_from_name(eval_mode);
    cfg.layout_policy = layout_policy_from_name(layout_policy);
    if (synth->parsed()) return cmd_synth(spec, out_dir);
    if (tr->parsed()) return cmd_train(cfg, worlds_path, questions_path, out_dir);
    if (ev->parsed())
      return cmd_eval(worlds_path, questions_path, checkpoint, out_dir, split,
                      cfg.eval_mode, seed);
    if (pr->parsed()) return cmd_predict(worlds_path, questions_path, checkpoint, id);
    if (ic->parsed()) return cmd_inspect(questions_path, worlds_path, checkpoint, id);
    if (gc->parsed()) return cmd_gradcheck(seed, gc_configs, inject_relu_fault);
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
