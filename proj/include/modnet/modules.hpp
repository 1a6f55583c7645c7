#pragma once

#include <string>
#include <vector>

#include "modnet/layout.hpp"
#include "modnet/params.hpp"
#include "modnet/tape.hpp"
#include "modnet/world.hpp"

namespace modnet {

// Shared settings for the entity-attention modules. find reads the category
// view, relate the relation view; both are configurable. Per-lexeme vectors
// and the module hidden layers share one width.
//
// Parameter names: find/{a,B,C,d}, relate/{a,B,C,D,e}, describe/{A,B},
// exists/{a,b}; per-lexeme vectors find/v/<lexeme>, relate/v/<lexeme>,
// describe/v/<lexeme>. The u/<lexeme> namespace is reserved and never
// allocated. Biases (find/d, relate/e, exists/b) start at zero, everything
// else uniform in the usual fan-in/fan-out range.
struct ModuleConfig {
  int hidden = 32;
  std::string find_view = "category";
  std::string relate_view = "relation";
};

// Each eval_* appends the module's computation to the tape and returns the
// node holding its output: a length-n attention for lookup/find/relate/and,
// a probability vector over an answer vocabulary for describe/exists.

int eval_lookup(const std::string& lexeme, const World& world, Tape& tape);

int eval_find(const std::string& lexeme, const World& world,
              const ModuleConfig& cfg, ParamStore& params, Tape& tape);

int eval_relate(const std::string& lexeme, int h, const World& world,
                const ModuleConfig& cfg, ParamStore& params, Tape& tape);

int eval_and(const std::vector<int>& attentions, Tape& tape);

// Distribution over answer_vocab. Also exposes the pre-softmax answer
// embedding for the fusion head via out_embedding when non-null.
int eval_describe(const std::string& lexeme, int h, const World& world,
                  const ModuleConfig& cfg, int vocab_size, ParamStore& params,
                  Tape& tape, int* out_embedding = nullptr);

// 2-way {yes, no} distribution from the attention maximum.
int eval_exists(int h, ParamStore& params, Tape& tape, int* out_embedding = nullptr);

extern const std::vector<std::string> kExistsVocab;  // {"yes", "no"}

// One attention-valued intermediate of an executed layout. path is the
// root-to-node child index string ("" for the root, "0.1" for second child
// of first child), node the printed subtree.
struct AttentionRecord {
  std::string path;
  std::string node;
  int tape_node;
};

struct ExecutionResult {
  int dist = -1;       // probability vector node at the root
  int embedding = -1;  // pre-softmax logits at the root
  std::vector<std::string> vocab;  // answer strings the distribution ranges over
  std::vector<AttentionRecord> attentions;
};

// Recursive post-order evaluation of a typechecked layout. answer_vocab is
// the global answer vocabulary used by describe roots; exists roots use the
// fixed {yes, no} vocabulary.
ExecutionResult execute_layout(const Layout& layout, const World& world,
                               const ModuleConfig& cfg,
                               const std::vector<std::string>& answer_vocab,
                               ParamStore& params, Tape& tape);

// softmax(A h_q + B embedding): lets the question bias the answer directly.
// A and B are per-root-kind ("fusion/A/describe", "fusion/B/exists", ...)
// because describe and exists embeddings live in different vocabularies.
int fuse_with_question(int h_q, int embedding, ModuleKind root_kind,
                       ParamStore& params, Tape& tape);

}  // namespace modnet
