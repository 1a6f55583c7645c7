#include "modnet/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "modnet/errors.hpp"
#include "modnet/rng.hpp"

namespace modnet {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* name, const std::string& where) {
  if (!j.contains(name))
    throw SchemaError(where + ": missing field '" + name + "'");
  return j.at(name);
}

json tensor_to_json(const Tensor& t) {
  return json{{"rows", t.rows()}, {"cols", t.cols()}, {"values", t.v}};
}

Tensor tensor_from_json(const json& j, const std::string& where) {
  const int rows = field(j, "rows", where).get<int>();
  const int cols = field(j, "cols", where).get<int>();
  if (rows <= 0 || cols <= 0)
    throw SchemaError(where + ": non-positive matrix dimensions");
  Tensor t = Tensor::mat(rows, cols);
  const auto values = field(j, "values", where).get<std::vector<double>>();
  if (values.size() != t.v.size())
    throw SchemaError(where + ": has " + std::to_string(values.size()) +
                      " values for a " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " matrix");
  t.v = values;
  return t;
}

json world_to_json(const World& w) {
  json views = json::object();
  for (const auto& [name, m] : w.views) views[name] = tensor_to_json(m);
  return json{{"schema_version", 1},
              {"id", w.id},
              {"entities", w.entities},
              {"views", views},
              {"lookup_index", w.lookup_index}};
}

World world_from_json(const json& j) {
  World w;
  w.id = field(j, "id", "world").get<std::string>();
  const std::string where = "world '" + w.id + "'";
  w.entities = field(j, "entities", where).get<std::vector<std::string>>();
  for (const auto& [name, m] : field(j, "views", where).items())
    w.views[name] = tensor_from_json(m, where + " view '" + name + "'");
  for (const auto& [lex, pos] : field(j, "lookup_index", where).items())
    w.lookup_index[lex] = pos.get<int>();
  w.validate();
  return w;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  return out;
}

json parse_json(const std::string& text, const std::string& where) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw SchemaError(where + ": malformed JSON");
  return j;
}

}  // namespace

std::vector<World> load_worlds(const std::string& path) {
  std::ifstream in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  json j = parse_json(buf.str(), path);
  std::vector<World> worlds;
  std::set<std::string> ids;
  for (const json& wj : field(j, "worlds", path)) {
    worlds.push_back(world_from_json(wj));
    if (!ids.insert(worlds.back().id).second)
      throw SchemaError(path + ": duplicate world id '" + worlds.back().id + "'");
  }
  return worlds;
}

void save_worlds(const std::vector<World>& worlds, const std::string& path) {
  json arr = json::array();
  for (const World& w : worlds) arr.push_back(world_to_json(w));
  std::ofstream out = open_out(path);
  out << json{{"schema_version", 1}, {"worlds", arr}}.dump(2) << "\n";
}

std::vector<Example> load_questions(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<Example> examples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j = parse_json(line, where);
    Example ex;
    ex.id = field(j, "id", where).get<std::string>();
    const std::string rec = "question '" + ex.id + "'";
    ex.world_id = field(j, "world", rec).get<std::string>();
    ex.tokens = field(j, "tokens", rec).get<std::vector<std::string>>();
    for (const json& tj : field(j, "parse", rec)) {
      DepToken t;
      t.id = field(tj, "id", rec).get<int>();
      t.form = field(tj, "form", rec).get<std::string>();
      t.lemma = field(tj, "lemma", rec).get<std::string>();
      t.upos = field(tj, "upos", rec).get<std::string>();
      t.head = field(tj, "head", rec).get<int>();
      t.deprel = field(tj, "deprel", rec).get<std::string>();
      ex.parse.tokens.push_back(std::move(t));
    }
    ex.answer = field(j, "answer", rec).get<std::string>();
    if (ex.answer.empty()) throw SchemaError(rec + ": empty answer");
    if (j.contains("split")) ex.split = j.at("split").get<std::string>();
    try {
      ex.parse.validate();
    } catch (const SchemaError& e) {
      throw SchemaError(rec + ": " + e.what());
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

void save_questions(const std::vector<Example>& examples, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const Example& ex : examples) {
    json parse = json::array();
    for (const DepToken& t : ex.parse.tokens)
      parse.push_back(json{{"id", t.id},
                           {"form", t.form},
                           {"lemma", t.lemma},
                           {"upos", t.upos},
                           {"head", t.head},
                           {"deprel", t.deprel}});
    out << json{{"schema_version", 1},
                {"id", ex.id},
                {"world", ex.world_id},
                {"tokens", ex.tokens},
                {"parse", parse},
                {"answer", ex.answer},
                {"split", ex.split}}
               .dump()
        << "\n";
  }
}

std::map<std::string, std::string> load_gold_layouts(const std::string& path) {
  std::ifstream in = open_in(path);
  std::map<std::string, std::string> layouts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j = parse_json(line, where);
    layouts[field(j, "id", where).get<std::string>()] =
        field(j, "layout", where).get<std::string>();
  }
  return layouts;
}

void save_gold_layouts(const std::map<std::string, std::string>& layouts,
                       const std::string& path) {
  std::ofstream out = open_out(path);
  for (const auto& [id, layout] : layouts)
    out << json{{"id", id}, {"layout", layout}}.dump() << "\n";
}

Vocab build_vocab(const std::vector<Example>& examples,
                  const std::map<std::string, World>& worlds) {
  std::set<std::string> lex = {"<unk>"};
  std::set<std::string> ans = {"yes", "no"};
  for (const Example& ex : examples) {
    for (const std::string& t : ex.tokens) lex.insert(t);
    for (const DepToken& t : ex.parse.tokens) lex.insert(t.lemma);
    ans.insert(ex.answer);
  }
  for (const auto& [id, w] : worlds)
    for (const std::string& e : w.entities) {
      lex.insert(e);
      ans.insert(e);
    }
  Vocab v;
  v.lexemes.assign(lex.begin(), lex.end());
  v.answers.assign(ans.begin(), ans.end());
  for (int i = 0; i < static_cast<int>(v.lexemes.size()); ++i)
    v.lexeme_index[v.lexemes[static_cast<std::size_t>(i)]] = i;
  for (int i = 0; i < static_cast<int>(v.answers.size()); ++i)
    v.answer_index[v.answers[static_cast<std::size_t>(i)]] = i;
  return v;
}

namespace {

std::set<std::string> symbolic_set(const LayoutNode& node, const EnvFacts& facts) {
  std::set<std::string> out;
  switch (node.kind) {
    case ModuleKind::Lookup:
      if (facts.by_entity.count(node.param_arg)) out.insert(node.param_arg);
      break;
    case ModuleKind::Find:
      for (const auto& [name, f] : facts.by_entity)
        if (f.category == node.param_arg) out.insert(name);
      break;
    case ModuleKind::Relate: {
      std::set<std::string> targets = symbolic_set(node.children[0], facts);
      for (const auto& [name, f] : facts.by_entity)
        for (const auto& [rel, lm] : f.relations)
          if (rel == node.param_arg && targets.count(lm)) out.insert(name);
      break;
    }
    case ModuleKind::And: {
      out = symbolic_set(node.children[0], facts);
      for (std::size_t i = 1; i < node.children.size(); ++i) {
        std::set<std::string> next = symbolic_set(node.children[i], facts);
        std::set<std::string> kept;
        for (const std::string& e : out)
          if (next.count(e)) kept.insert(e);
        out = std::move(kept);
      }
      break;
    }
    default:
      throw LayoutTypeError("symbolic evaluation reached a labels module");
  }
  return out;
}

}  // namespace

std::string symbolic_answer(const Layout& layout, const EnvFacts& facts) {
  const LayoutNode& root = layout.root;
  if (root.kind == ModuleKind::Exists)
    return symbolic_set(root.children[0], facts).empty() ? "no" : "yes";
  if (root.kind == ModuleKind::Describe) {
    std::set<std::string> s = symbolic_set(root.children[0], facts);
    return s.size() == 1 ? *s.begin() : std::string();
  }
  throw LayoutTypeError("symbolic evaluation needs a describe or exists root");
}

namespace {

const std::vector<std::string> kLandmarkPool = {
    "avalon", "brimstead", "calder", "dorset",
    "everly", "fenwick",   "garland", "harmon"};

const std::vector<std::pair<std::string, std::string>> kCategoryForms = {
    {"city", "cities"},       {"lake", "lakes"},
    {"park", "parks"},        {"river", "rivers"},
    {"forest", "forests"},    {"mountain", "mountains"},
    {"island", "islands"},    {"beach", "beaches"}};

const std::vector<std::string> kRelations = {"in", "near"};

const std::vector<std::string> kNamePool = {
    "alder",   "barlow",  "casper",  "delmar",  "edison",  "farley",
    "gideon",  "hollis",  "ingram",  "jasper",  "keaton",  "landry",
    "merritt", "norwood", "oakley",  "preston", "quimby",  "radley",
    "sutton",  "thatcher","ulster",  "vernon",  "walden",  "xavier",
    "yardley", "zephyr",  "ashford", "bexley",  "crandall", "dexter",
    "ellison", "fletcher","granger", "hawkins", "irving",  "jericho",
    "kendall", "lambert", "marlowe", "newland"};

constexpr int kNameCodeDim = 24;
constexpr int kCategoryRows = 9;  // 8 regular categories + "state"

int category_index(const std::string& cat) {
  for (int i = 0; i < static_cast<int>(kCategoryForms.size()); ++i)
    if (kCategoryForms[static_cast<std::size_t>(i)].first == cat) return i;
  return 8;  // "state"
}

int landmark_index(const std::string& name) {
  for (int i = 0; i < static_cast<int>(kLandmarkPool.size()); ++i)
    if (kLandmarkPool[static_cast<std::size_t>(i)] == name) return i;
  return -1;
}

std::vector<double> name_code(const std::string& name, std::uint64_t seed) {
  Rng rng(splitmix64(seed ^ 0x636f6465ull) ^ fnv1a64(name));
  std::vector<double> code(kNameCodeDim);
  for (double& x : code) x = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return code;
}

template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
    std::swap(v[static_cast<std::size_t>(i)],
              v[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
}

struct DepSpec {
  const char* form;
  const char* lemma;
  const char* upos;
  int head;
  const char* deprel;
};

void fill_parse(Example& ex, const std::vector<DepSpec>& specs) {
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const DepSpec& s = specs[i];
    ex.tokens.push_back(s.form);
    ex.parse.tokens.push_back(DepToken{static_cast<int>(i) + 1, s.form,
                                       s.lemma, s.upos, s.head, s.deprel});
  }
}

struct EnvGen {
  const SynthSpec& spec;
  Rng& rng;
  std::string env_id;
  std::vector<std::string> landmarks;         // this environment's subset
  std::vector<std::string> order;             // entity column order
  EnvFacts facts;

  // regular-entity bookkeeping in creation order
  std::vector<std::string> regulars;

  void build_entities(int env_index) {
    const int n = spec.entities_per_env;
    const int num_lm = n >= 12 ? 4 : 2;
    const int num_reg = n - num_lm;
    if (num_reg > static_cast<int>(kNamePool.size()))
      throw ConfigError("entities_per_env exceeds the name pool");
    if (num_reg < 3) throw ConfigError("entities_per_env too small");

    for (int j = 0; j < num_lm; ++j) {
      const std::string& lm = kLandmarkPool[static_cast<std::size_t>(
          (env_index + 3 * j) % static_cast<int>(kLandmarkPool.size()))];
      landmarks.push_back(lm);
      facts.by_entity[lm] = EntityFacts{"state", {}};
    }
    for (int j = 0; j < num_reg; ++j)
      regulars.push_back(kNamePool[static_cast<std::size_t>(
          (env_index * num_reg + j) % static_cast<int>(kNamePool.size()))]);

    // category plan: two categories absent, three singletons, the rest
    // split the remaining entities
    std::vector<std::string> cats;
    for (const auto& [cat, plural] : kCategoryForms) cats.push_back(cat);
    shuffle_vec(cats, rng);
    const int absent = 2;
    const int singles = 3;
    std::vector<int> counts(cats.size(), 0);
    for (int i = 0; i < singles; ++i) counts[static_cast<std::size_t>(absent + i)] = 1;
    int rest = num_reg - singles;
    std::size_t slot = absent + singles;
    while (rest > 0) {
      ++counts[slot];
      --rest;
      if (++slot == cats.size()) slot = absent + singles;
    }
    std::size_t next = 0;
    for (std::size_t c = 0; c < cats.size(); ++c)
      for (int i = 0; i < counts[c]; ++i)
        facts.by_entity[regulars[next++]].category = cats[c];

    // relations: regulars[0] is the only entity in landmarks[0], and
    // regulars[1] the only entity near landmarks[1], so single-match
    // relation questions always exist
    const int L = static_cast<int>(landmarks.size());
    for (std::size_t j = 0; j < regulars.size(); ++j) {
      EntityFacts& f = facts.by_entity[regulars[j]];
      if (j == 0)
        f.relations.emplace_back("in", landmarks[0]);
      else
        f.relations.emplace_back(
            "in", landmarks[static_cast<std::size_t>(1 + rng.uniform_int(L - 1))]);
      for (int i = 0; i < L; ++i) {
        if (i == 1) continue;
        if (j != 1 && rng.uniform() < 0.2)
          f.relations.emplace_back("near", landmarks[static_cast<std::size_t>(i)]);
      }
      if (j == 1) f.relations.emplace_back("near", landmarks[1 % landmarks.size()]);
    }

    order = landmarks;
    order.insert(order.end(), regulars.begin(), regulars.end());
    shuffle_vec(order, rng);
  }

  World build_world() {
    const int n = static_cast<int>(order.size());
    const int fdim = spec.feature_dim;
    if (fdim < kCategoryRows + kNameCodeDim)
      throw ConfigError("feature_dim below " +
                        std::to_string(kCategoryRows + kNameCodeDim));
    World w;
    w.id = env_id;
    w.entities = order;
    Tensor cat = Tensor::mat(fdim, n);
    Tensor rel = Tensor::mat(fdim, n);
    for (int k = 0; k < n; ++k) {
      const std::string& name = order[static_cast<std::size_t>(k)];
      const EntityFacts& f = facts.by_entity.at(name);
      cat.at(category_index(f.category), k) += 1.0;
      std::vector<double> code = name_code(name, spec.seed);
      for (int r = 0; r < kNameCodeDim; ++r)
        cat.at(kCategoryRows + r, k) += code[static_cast<std::size_t>(r)];
      for (const auto& [r, lm] : f.relations) {
        const int block = r == "in" ? 0 : 1;
        rel.at(block * 8 + landmark_index(lm), k) += 1.0;
      }
      const int self = landmark_index(name);
      if (self >= 0) rel.at(16 + self, k) += 1.0;
      w.lookup_index[name] = k;
    }
    for (double& x : cat.v) x += rng.uniform(-spec.noise, spec.noise);
    for (double& x : rel.v) x += rng.uniform(-spec.noise, spec.noise);
    w.views["category"] = std::move(cat);
    w.views["relation"] = std::move(rel);
    w.validate();
    return w;
  }

  const std::string& plural(const std::string& cat) const {
    for (const auto& [c, p] : kCategoryForms)
      if (c == cat) return p;
    throw ConfigError("no plural for category '" + cat + "'");
  }

  int category_count(const std::string& cat) const {
    int c = 0;
    for (const auto& [name, f] : facts.by_entity)
      if (f.category == cat) ++c;
    return c;
  }

  std::vector<std::string> matches(const std::string& cat, const std::string& rel,
                                   const std::string& lm) const {
    std::vector<std::string> out;
    for (const auto& [name, f] : facts.by_entity) {
      if (!cat.empty() && f.category != cat) continue;
      if (f.category == "state") continue;
      for (const auto& [r, l] : f.relations)
        if (r == rel && l == lm) {
          out.push_back(name);
          break;
        }
    }
    return out;
  }
};

struct QuestionPlan {
  int t1 = 0, t2 = 0, t3 = 0, t4 = 0, t5 = 0;
};

QuestionPlan plan_questions(int total) {
  // weights 3:2:2:3:3 across the five templates, largest remainder
  const std::vector<std::pair<int, int>> weights = {
      {0, 3}, {1, 2}, {2, 2}, {3, 3}, {4, 3}};
  std::vector<int> counts(5, 0);
  int assigned = 0;
  std::vector<std::pair<double, int>> rema;
  for (const auto& [i, w] : weights) {
    const double exact = static_cast<double>(total) * w / 13.0;
    counts[static_cast<std::size_t>(i)] = static_cast<int>(exact);
    assigned += static_cast<int>(exact);
    rema.push_back({exact - static_cast<int>(exact), i});
  }
  std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int i = 0; assigned < total; ++i, ++assigned)
    ++counts[static_cast<std::size_t>(rema[static_cast<std::size_t>(i % 5)].second)];
  return QuestionPlan{counts[0], counts[1], counts[2], counts[3], counts[4]};
}

}  // namespace

SynthOutput synth_generate(const SynthSpec& spec) {
  if (spec.environments < 1) throw ConfigError("need at least one environment");
  if (spec.questions_per_env < 5) throw ConfigError("too few questions per environment");
  SynthOutput out;
  Rng master(spec.seed);

  for (int e = 0; e < spec.environments; ++e) {
    Rng env_rng(master.fork("env" + std::to_string(e)));
    EnvGen gen{spec, env_rng, "env" + std::to_string(e), {}, {}, {}, {}};
    gen.build_entities(e);
    out.worlds.push_back(gen.build_world());
    out.facts[gen.env_id] = gen.facts;

    const QuestionPlan plan = plan_questions(spec.questions_per_env);
    int qnum = 0;
    auto add_example = [&](const std::vector<DepSpec>& parse, const std::string& gold_layout,
                           int index_in_template) {
      Example ex;
      ex.id = gen.env_id + "-q" + std::to_string(qnum++);
      ex.world_id = gen.env_id;
      fill_parse(ex, parse);
      Layout gold = parse_layout_string(gold_layout);
      ex.answer = symbolic_answer(gold, gen.facts);
      if (ex.answer.empty())
        throw ConfigError("generator produced an unanswerable question " + ex.id);
      ex.split = index_in_template % 5 == 4 ? "dev" : "train";
      out.gold_layouts[ex.id] = gold_layout;
      out.examples.push_back(std::move(ex));
    };

    // enumerate satisfiable (category, relation, landmark) triples.
    // Attention scales must stay compatible across templates: exists
    // thresholds one global affine on max attention and describe is
    // positively homogeneous in its input, so conjunction questions are
    // restricted to small categories and small regions. A conjunction of a
    // singleton category with a <=4 entity region keeps the product's peak
    // above the uniform floor an absent-category find produces, which is
    // what makes a single learned yes/no boundary feasible.
    std::vector<std::tuple<std::string, std::string, std::string>> unique_any,
        unique_multi, unique_small, yes_combos, no_combos, yes_sharp, no_sharp;
    for (const auto& [cat, pl] : kCategoryForms) {
      for (const std::string& rel : kRelations) {
        for (const std::string& lm : gen.landmarks) {
          const auto m = gen.matches(cat, rel, lm);
          const std::size_t region = gen.matches("", rel, lm).size();
          const int cat_n = gen.category_count(cat);
          if (m.size() == 1) {
            unique_any.emplace_back(cat, rel, lm);
            if (cat_n > 1) {
              unique_multi.emplace_back(cat, rel, lm);
              if (region <= 3) unique_small.emplace_back(cat, rel, lm);
            }
          }
          if (!m.empty()) {
            yes_combos.emplace_back(cat, rel, lm);
            if (cat_n == 1 && region <= 4) yes_sharp.emplace_back(cat, rel, lm);
          } else if (cat_n > 0 && region > 0) {
            no_combos.emplace_back(cat, rel, lm);
            if (cat_n == 1) no_sharp.emplace_back(cat, rel, lm);
          }
        }
      }
    }
    std::vector<std::pair<std::string, std::string>> rel_unique;  // (rel, lm)
    for (const std::string& rel : kRelations)
      for (const std::string& lm : gen.landmarks)
        if (gen.matches("", rel, lm).size() == 1) rel_unique.emplace_back(rel, lm);
    std::vector<std::string> singleton_cats, present_cats, absent_cats;
    for (const auto& [cat, pl] : kCategoryForms) {
      const int c = gen.category_count(cat);
      if (c == 1) singleton_cats.push_back(cat);
      if (c > 0)
        present_cats.push_back(cat);
      else
        absent_cats.push_back(cat);
    }

    // Each template walks its pool round-robin from a random start. Even
    // coverage matters: a combination that shows up with only one polarity
    // across the corpus lets the question text alone predict the answer,
    // which trains shortcuts instead of layout execution.
    auto cycler = [&](const auto& options) {
      const int start = options.empty()
                            ? 0
                            : env_rng.uniform_int(static_cast<int>(options.size()));
      return [&options, at = start]() mutable -> decltype(options[0]) {
        return options[static_cast<std::size_t>(at++) % options.size()];
      };
    };

    const auto& t1_pool = !unique_small.empty()  ? unique_small
                          : !unique_multi.empty() ? unique_multi
                                                  : unique_any;
    if (plan.t1 > 0 && t1_pool.empty())
      throw ConfigError(gen.env_id + ": no unique-match triple");
    auto next_t1 = cycler(t1_pool);
    for (int i = 0; i < plan.t1; ++i) {  // what <cats> are <rel> <lm> ?
      const auto& [cat, rel, lm] = next_t1();
      add_example(
          {{"what", "what", "PRON", 2, "det"},
           {gen.plural(cat).c_str(), cat.c_str(), "NOUN", 3, "nsubj"},
           {"are", "be", "AUX", 0, "root"},
           {rel.c_str(), rel.c_str(), "ADP", 3, "prep"},
           {lm.c_str(), lm.c_str(), "PROPN", 4, "pobj"},
           {"?", "?", "PUNCT", 3, "punct"}},
          "(describe[what] (and find[" + cat + "] (relate[" + rel + "] lookup[" +
              lm + "])))",
          i);
    }
    if (plan.t2 > 0 && rel_unique.empty())
      throw ConfigError(gen.env_id + ": no unique relation pair");
    auto next_t2 = cycler(rel_unique);
    for (int i = 0; i < plan.t2; ++i) {  // what is <rel> <lm> ?
      const auto& [rel, lm] = next_t2();
      add_example({{"what", "what", "PRON", 2, "nsubj"},
                   {"is", "be", "AUX", 0, "root"},
                   {rel.c_str(), rel.c_str(), "ADP", 2, "prep"},
                   {lm.c_str(), lm.c_str(), "PROPN", 3, "pobj"},
                   {"?", "?", "PUNCT", 2, "punct"}},
                  "(describe[what] (relate[" + rel + "] lookup[" + lm + "]))", i);
    }
    auto next_t3 = cycler(singleton_cats);
    for (int i = 0; i < plan.t3; ++i) {  // what is the <cat> ?
      const std::string& cat = next_t3();
      add_example({{"what", "what", "PRON", 2, "nsubj"},
                   {"is", "be", "AUX", 0, "root"},
                   {"the", "the", "DET", 4, "det"},
                   {cat.c_str(), cat.c_str(), "NOUN", 2, "attr"},
                   {"?", "?", "PUNCT", 2, "punct"}},
                  "(describe[what] find[" + cat + "])", i);
    }
    const auto& t4_yes_pool = !yes_sharp.empty() ? yes_sharp : yes_combos;
    const auto& t4_no_pool = !no_sharp.empty()    ? no_sharp
                             : !no_combos.empty() ? no_combos
                                                  : yes_combos;
    auto next_t4_yes = cycler(t4_yes_pool);
    auto next_t4_no = cycler(t4_no_pool);
    for (int i = 0; i < plan.t4; ++i) {  // is there a <cat> <rel> <lm> ?
      const bool want_yes = i % 2 == 0;
      const auto& [cat, rel, lm] = want_yes ? next_t4_yes() : next_t4_no();
      add_example(
          {{"is", "be", "AUX", 0, "root"},
           {"there", "there", "PRON", 1, "expl"},
           {"a", "a", "DET", 4, "det"},
           {cat.c_str(), cat.c_str(), "NOUN", 1, "attr"},
           {rel.c_str(), rel.c_str(), "ADP", 1, "prep"},
           {lm.c_str(), lm.c_str(), "PROPN", 5, "pobj"},
           {"?", "?", "PUNCT", 1, "punct"}},
          "(exists (and find[" + cat + "] (relate[" + rel + "] lookup[" + lm + "])))",
          i);
    }
    for (int i = 0; i < plan.t5; ++i) {  // are there any <cats> ?
      const bool want_yes = i % 2 == 0;
      const std::string& cat = want_yes ? pick(present_cats) : pick(absent_cats);
      add_example({{"are", "be", "AUX", 0, "root"},
                   {"there", "there", "PRON", 1, "expl"},
                   {"any", "any", "DET", 4, "det"},
                   {gen.plural(cat).c_str(), cat.c_str(), "NOUN", 1, "attr"},
                   {"?", "?", "PUNCT", 1, "punct"}},
                  "(exists find[" + cat + "])", i);
    }
  }
  return out;
}

}  // namespace modnet
