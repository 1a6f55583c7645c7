#include "modnet/modules.hpp"

#include "modnet/errors.hpp"

namespace modnet {

const std::vector<std::string> kExistsVocab = {"yes", "no"};

int eval_lookup(const std::string& lexeme, const World& world, Tape& tape) {
  auto it = world.lookup_index.find(lexeme);
  if (it == world.lookup_index.end())
    throw UnknownEntityLexeme("lookup[" + lexeme + "]: no such entity in world '" +
                              world.id + "'");
  Tensor h = Tensor::vec(world.entity_count());
  h.at(it->second) = 1.0;
  return tape.constant(std::move(h));
}

namespace {

// Shared core of find and relate: per-entity scores a^T relu(M_k + u) over
// the columns M_k of a d x n matrix, softmaxed into an attention.
int attention_scores(int a, int mat, int u, Tape& tape) {
  int s = tape.relu(tape.add(mat, u));
  int scores = tape.col_sum(tape.mul(a, s));
  return tape.softmax(scores);
}

}  // namespace

int eval_find(const std::string& lexeme, const World& world,
              const ModuleConfig& cfg, ParamStore& params, Tape& tape) {
  const Tensor& w = world.view(cfg.find_view);
  const int dh = cfg.hidden;
  int a = tape.param(params, "find/a", {dh});
  int B = tape.param(params, "find/B", {dh, dh});
  int C = tape.param(params, "find/C", {dh, w.rows()});
  int d = tape.param(params, "find/d", {dh}, Init::Zero);
  int v = tape.param(params, "find/v/" + lexeme, {dh});
  int W = tape.constant(w);
  int u = tape.add(tape.matvec(B, v), d);
  return attention_scores(a, tape.matmul(C, W), u, tape);
}

int eval_relate(const std::string& lexeme, int h, const World& world,
                const ModuleConfig& cfg, ParamStore& params, Tape& tape) {
  const Tensor& w = world.view(cfg.relate_view);
  if (tape.val(h).shape != std::vector<int>{w.cols()})
    throw ShapeError("relate[" + lexeme + "]: attention " + tape.val(h).shape_str() +
                     " does not match entity count " + std::to_string(w.cols()));
  const int dh = cfg.hidden;
  int a = tape.param(params, "relate/a", {dh});
  int B = tape.param(params, "relate/B", {dh, dh});
  int C = tape.param(params, "relate/C", {dh, w.rows()});
  int D = tape.param(params, "relate/D", {dh, w.rows()});
  int e = tape.param(params, "relate/e", {dh}, Init::Zero);
  int v = tape.param(params, "relate/v/" + lexeme, {dh});
  int W = tape.constant(w);
  int wbar = tape.matvec(W, h);  // attention-weighted average entity feature
  int u = tape.add(tape.add(tape.matvec(B, v), tape.matvec(D, wbar)), e);
  return attention_scores(a, tape.matmul(C, W), u, tape);
}

int eval_and(const std::vector<int>& attentions, Tape& tape) {
  if (attentions.empty()) throw ShapeError("and: needs at least one attention");
  int out = attentions[0];
  for (std::size_t i = 1; i < attentions.size(); ++i)
    out = tape.mul(out, attentions[i]);  // entrywise product, not renormalized
  return out;
}

int eval_describe(const std::string& lexeme, int h, const World& world,
                  const ModuleConfig& cfg, int vocab_size, ParamStore& params,
                  Tape& tape, int* out_embedding) {
  const Tensor& w = world.view(cfg.find_view);
  if (tape.val(h).shape != std::vector<int>{w.cols()})
    throw ShapeError("describe[" + lexeme + "]: attention " +
                     tape.val(h).shape_str() + " does not match entity count " +
                     std::to_string(w.cols()));
  const int dh = cfg.hidden;
  int A = tape.param(params, "describe/A", {vocab_size, dh});
  int B = tape.param(params, "describe/B", {dh, w.rows()});
  int v = tape.param(params, "describe/v/" + lexeme, {dh});
  int W = tape.constant(w);
  int wbar = tape.matvec(W, h);
  int hid = tape.relu(tape.add(tape.matvec(B, wbar), v));
  int logits = tape.matvec(A, hid);
  if (out_embedding) *out_embedding = logits;
  return tape.softmax(logits);
}

int eval_exists(int h, ParamStore& params, Tape& tape, int* out_embedding) {
  if (tape.val(h).size() == 0) throw ShapeError("exists: empty attention");
  int a = tape.param(params, "exists/a", {2});
  int b = tape.param(params, "exists/b", {2}, Init::Zero);
  int m = tape.max_reduce(h);
  int logits = tape.add(tape.mul(a, m), b);
  if (out_embedding) *out_embedding = logits;
  return tape.softmax(logits);
}

namespace {

struct Executor {
  const World& world;
  const ModuleConfig& cfg;
  const std::vector<std::string>& answer_vocab;
  ParamStore& params;
  Tape& tape;
  ExecutionResult& result;

  int attention_of(const LayoutNode& node, const std::string& path) {
    if (module_output_type(node.kind) != ValueType::Attention)
      throw LayoutTypeError("module " + std::string(module_kind_name(node.kind)) +
                            " used where an attention is required");
    int out = -1;
    switch (node.kind) {
      case ModuleKind::Lookup:
        out = eval_lookup(node.param_arg, world, tape);
        break;
      case ModuleKind::Find:
        out = eval_find(node.param_arg, world, cfg, params, tape);
        break;
      case ModuleKind::Relate:
        out = eval_relate(node.param_arg, child(node, path, 0), world, cfg,
                          params, tape);
        break;
      case ModuleKind::And: {
        std::vector<int> hs;
        for (std::size_t i = 0; i < node.children.size(); ++i)
          hs.push_back(child(node, path, static_cast<int>(i)));
        out = eval_and(hs, tape);
        break;
      }
      default:
        break;
    }
    result.attentions.push_back({path, print_layout(node), out});
    return out;
  }

  int child(const LayoutNode& node, const std::string& path, int i) {
    std::string sub = path.empty() ? std::to_string(i)
                                   : path + "." + std::to_string(i);
    return attention_of(node.children[static_cast<std::size_t>(i)], sub);
  }

  void labels_root(const LayoutNode& node) {
    switch (node.kind) {
      case ModuleKind::Describe:
        result.dist = eval_describe(node.param_arg, child(node, "", 0), world,
                                    cfg, static_cast<int>(answer_vocab.size()),
                                    params, tape, &result.embedding);
        result.vocab = answer_vocab;
        break;
      case ModuleKind::Exists:
        result.dist = eval_exists(child(node, "", 0), params, tape, &result.embedding);
        result.vocab = kExistsVocab;
        break;
      default:
        throw LayoutTypeError("layout root " +
                              std::string(module_kind_name(node.kind)) +
                              " does not produce labels");
    }
  }
};

}  // namespace

ExecutionResult execute_layout(const Layout& layout, const World& world,
                               const ModuleConfig& cfg,
                               const std::vector<std::string>& answer_vocab,
                               ParamStore& params, Tape& tape) {
  require_typechecked(layout);
  ExecutionResult result;
  Executor ex{world, cfg, answer_vocab, params, tape, result};
  ex.labels_root(layout.root);
  return result;
}

int fuse_with_question(int h_q, int embedding, ModuleKind root_kind,
                       ParamStore& params, Tape& tape) {
  const std::string kind = module_kind_name(root_kind);
  const int dv = static_cast<int>(tape.val(embedding).size());
  const int dq = static_cast<int>(tape.val(h_q).size());
  int A = tape.param(params, "fusion/A/" + kind, {dv, dq});
  int B = tape.param(params, "fusion/B/" + kind, {dv, dv});
  int logits = tape.add(tape.matvec(A, h_q), tape.matvec(B, embedding));
  return tape.softmax(logits);
}

}  // namespace modnet
