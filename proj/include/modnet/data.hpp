#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "modnet/candidates.hpp"
#include "modnet/layout.hpp"
#include "modnet/world.hpp"

namespace modnet {

struct Example {
  std::string id;
  std::string world_id;
  std::vector<std::string> tokens;
  DepTree parse;
  std::string answer;
  std::string split;  // "train", "dev" or empty
};

// Stable sorted vocabularies. lexemes covers question forms, lemmas and
// entity names plus "<unk>"; answers covers entity names, observed answers
// and always {"yes", "no"}.
struct Vocab {
  std::vector<std::string> lexemes;
  std::vector<std::string> answers;
  std::map<std::string, int> lexeme_index;
  std::map<std::string, int> answer_index;
};

Vocab build_vocab(const std::vector<Example>& examples,
                  const std::map<std::string, World>& worlds);

std::vector<World> load_worlds(const std::string& path);
void save_worlds(const std::vector<World>& worlds, const std::string& path);

std::vector<Example> load_questions(const std::string& path);
void save_questions(const std::vector<Example>& examples, const std::string& path);

std::map<std::string, std::string> load_gold_layouts(const std::string& path);
void save_gold_layouts(const std::map<std::string, std::string>& layouts,
                       const std::string& path);

// The symbolic facts a generated environment encodes into its feature
// views. Kept out of the World itself: the model only ever sees features.
struct EntityFacts {
  std::string category;
  std::vector<std::pair<std::string, std::string>> relations;  // (relation, landmark)
};

struct EnvFacts {
  std::map<std::string, EntityFacts> by_entity;
};

// Set-semantics evaluation of a layout over facts: find collects a
// category, lookup names an entity, relate follows relations, and
// intersects, exists tests emptiness, describe names the unique member
// (empty string when not unique). No neural machinery involved.
std::string symbolic_answer(const Layout& layout, const EnvFacts& facts);

struct SynthSpec {
  int environments = 10;
  int entities_per_env = 20;
  int questions_per_env = 52;
  double noise = 0.05;
  std::uint64_t seed = 0;
  int feature_dim = 64;
};

struct SynthOutput {
  std::vector<World> worlds;
  std::vector<Example> examples;
  std::map<std::string, std::string> gold_layouts;  // example id -> s-expression
  std::map<std::string, EnvFacts> facts;            // world id -> facts
};

// Deterministic generator of grounded QA environments: entities with
// categories and in/near relations to a shared landmark pool, noisy feature
// views encoding those facts, and template questions whose answers come
// from the symbolic facts. Gold layouts are emitted for tests only; the
// trainer never reads them.
SynthOutput synth_generate(const SynthSpec& spec);

}  // namespace modnet
