#include "modnet/candidates.hpp"

#include <algorithm>
#include <set>

#include "modnet/errors.hpp"

namespace modnet {

void DepTree::validate() const {
  const int n = static_cast<int>(tokens.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const DepToken& t = tokens[static_cast<std::size_t>(i)];
    if (t.id != i + 1)
      throw SchemaError("parse token " + std::to_string(i) + " has id " +
                        std::to_string(t.id) + ", expected " + std::to_string(i + 1));
    if (t.head < 0 || t.head > n)
      throw SchemaError("parse token '" + t.form + "' has head " +
                        std::to_string(t.head) + " out of range");
    if (t.head == 0) ++roots;
    if (t.head == t.id)
      throw SchemaError("parse token '" + t.form + "' is its own head");
  }
  if (roots != 1)
    throw SchemaError("parse has " + std::to_string(roots) + " roots, expected 1");
  // walk each token to the root; a cycle never reaches head 0
  for (const DepToken& t : tokens) {
    int cur = t.id, steps = 0;
    while (cur != 0) {
      cur = tokens[static_cast<std::size_t>(cur - 1)].head;
      if (++steps > n)
        throw SchemaError("parse has a head cycle through token '" + t.form + "'");
    }
  }
}

bool is_wh_lemma(const std::string& lemma) {
  static const std::set<std::string> wh = {"what", "which", "who",
                                           "where", "when", "why", "how"};
  return wh.count(lemma) != 0;
}

bool is_copula_lemma(const std::string& lemma) { return lemma == "be"; }

namespace {

bool is_wh_or_copula(const DepToken& t) {
  return is_wh_lemma(t.lemma) || is_copula_lemma(t.lemma);
}

}  // namespace

std::vector<Fragment> extract_fragments(const DepTree& tree) {
  tree.validate();
  std::vector<Fragment> fragments;
  const auto& toks = tree.tokens;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const DepToken& t = toks[i];
    if (t.head == 0) continue;
    const DepToken& head = toks[static_cast<std::size_t>(t.head - 1)];
    if (!is_wh_or_copula(head)) continue;
    if (t.upos == "NOUN" || t.upos == "VERB") {
      fragments.push_back({LayoutNode{ModuleKind::Find, t.lemma, {}},
                           static_cast<int>(i)});
    } else if (t.upos == "PROPN") {
      fragments.push_back({LayoutNode{ModuleKind::Lookup, t.lemma, {}},
                           static_cast<int>(i)});
    } else if (t.upos == "ADP") {
      // prepositional phrase: relate over the preposition's nominal dependent
      for (std::size_t j = 0; j < toks.size(); ++j) {
        const DepToken& dep = toks[j];
        if (dep.head != t.id) continue;
        if (dep.upos == "NOUN" || dep.upos == "VERB" || dep.upos == "PROPN") {
          ModuleKind inner =
              dep.upos == "PROPN" ? ModuleKind::Lookup : ModuleKind::Find;
          LayoutNode pp{ModuleKind::Relate, t.lemma,
                        {LayoutNode{inner, dep.lemma, {}}}};
          fragments.push_back({std::move(pp), static_cast<int>(i)});
          break;
        }
      }
    }
  }
  return fragments;
}

std::string describe_arg(const DepTree& tree) {
  for (const DepToken& t : tree.tokens)
    if (is_wh_lemma(t.lemma)) return t.lemma;
  for (const DepToken& t : tree.tokens)
    if (is_copula_lemma(t.lemma)) return t.lemma;
  return "what";
}

std::vector<Layout> generate_candidates(const DepTree& tree, int max_fragments) {
  std::vector<Fragment> fragments = extract_fragments(tree);
  const int k = std::min<int>(static_cast<int>(fragments.size()), max_fragments);
  const std::string wh = describe_arg(tree);

  // all nonempty subsets of {0..k-1}, by size then lexicographically
  std::vector<std::vector<int>> subsets;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> subset;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) subset.push_back(i);
    subsets.push_back(std::move(subset));
  }
  std::stable_sort(subsets.begin(), subsets.end(),
                   [](const std::vector<int>& a, const std::vector<int>& b) {
                     if (a.size() != b.size()) return a.size() < b.size();
                     return a < b;
                   });

  std::vector<Layout> candidates;
  for (const std::vector<int>& subset : subsets) {
    LayoutNode body;
    if (subset.size() == 1) {
      body = fragments[static_cast<std::size_t>(subset[0])].node;
    } else {
      body.kind = ModuleKind::And;
      for (int i : subset)
        body.children.push_back(fragments[static_cast<std::size_t>(i)].node);
    }
    candidates.push_back(Layout{LayoutNode{ModuleKind::Exists, "", {body}}});
    candidates.push_back(Layout{LayoutNode{ModuleKind::Describe, wh, {body}}});
  }
  return candidates;
}

namespace {

void collect_features(const LayoutNode& node, LayoutFeatures& f) {
  ++f.kind_counts[static_cast<std::size_t>(node.kind)];
  if (!node.param_arg.empty()) f.param_args.push_back(node.param_arg);
  for (const LayoutNode& c : node.children) collect_features(c, f);
}

}  // namespace

LayoutFeatures layout_features(const Layout& layout) {
  LayoutFeatures f;
  collect_features(layout.root, f);
  std::sort(f.param_args.begin(), f.param_args.end());
  f.param_args.erase(std::unique(f.param_args.begin(), f.param_args.end()),
                     f.param_args.end());
  return f;
}

Tensor featurize(const LayoutFeatures& features,
                 const std::map<std::string, int>& lexeme_index) {
  Tensor out = Tensor::vec(kModuleKindCount + static_cast<int>(lexeme_index.size()));
  for (int i = 0; i < kModuleKindCount; ++i)
    out.at(i) = features.kind_counts[static_cast<std::size_t>(i)];
  for (const std::string& arg : features.param_args) {
    auto it = lexeme_index.find(arg);
    if (it == lexeme_index.end()) it = lexeme_index.find("<unk>");
    if (it != lexeme_index.end()) out.at(kModuleKindCount + it->second) = 1.0;
  }
  return out;
}

}  // namespace modnet
