#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "modnet/layout.hpp"
#include "modnet/tensor.hpp"

namespace modnet {

// One dependency-parse token, CoNLL-U column subset. id is 1-based; head 0
// marks the root.
struct DepToken {
  int id = 0;
  std::string form;
  std::string lemma;
  std::string upos;
  int head = 0;
  std::string deprel;
};

struct DepTree {
  std::vector<DepToken> tokens;

  // Throws SchemaError unless heads are in range, exactly one token is the
  // root, and the head edges form a tree.
  void validate() const;
};

bool is_wh_lemma(const std::string& lemma);
bool is_copula_lemma(const std::string& lemma);

// Depth-at-most-2 partial layout rooted at one question constituent, plus
// the 0-based token index it came from (for deterministic ordering).
struct Fragment {
  LayoutNode node;
  int anchor = 0;
};

// Nouns, verbs and prepositional phrases attached directly to a wh-word or
// copula: NOUN/VERB become find[lemma], PROPN lookup[lemma], and an ADP with
// a nominal dependent becomes (relate[adp] find-or-lookup[dependent]).
std::vector<Fragment> extract_fragments(const DepTree& tree);

// Lexeme for a describe root: the question's wh-word lemma, falling back to
// the copula lemma, then "what".
std::string describe_arg(const DepTree& tree);

// Every nonempty subset of the (first max_fragments) fragments, joined with
// `and` when larger than one, once under an exists root and once under a
// describe root. Subsets are ordered by size, then lexicographically by
// fragment index; 2 * (2^k - 1) candidates for k fragments.
std::vector<Layout> generate_candidates(const DepTree& tree, int max_fragments = 6);

struct LayoutFeatures {
  std::array<int, kModuleKindCount> kind_counts{};  // indexed by ModuleKind
  std::vector<std::string> param_args;              // sorted, deduplicated
};

LayoutFeatures layout_features(const Layout& layout);

// Dense scorer input: the six kind counts followed by a lexeme-vocabulary
// indicator block. Lexemes missing from the index fall back to "<unk>" when
// present, otherwise drop out.
Tensor featurize(const LayoutFeatures& features,
                 const std::map<std::string, int>& lexeme_index);

}  // namespace modnet
