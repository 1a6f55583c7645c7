#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "modnet/candidates.hpp"
#include "modnet/data.hpp"
#include "modnet/errors.hpp"

using namespace modnet;

namespace {

std::filesystem::path temp_dir() {
  static std::filesystem::path dir = [] {
    auto p = std::filesystem::temp_directory_path() / "modnet_data_tests";
    std::filesystem::create_directories(p);
    return p;
  }();
  return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
  auto path = temp_dir() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

std::string fixture(const std::string& name) {
  const char* src = std::getenv("MODNET_SOURCE_DIR");
  std::filesystem::path base = src ? src : ".";
  return (base / "tests" / "fixtures" / name).string();
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("fixture worlds and questions load") {
  std::vector<World> worlds = load_worlds(fixture("worlds.json"));
  REQUIRE(worlds.size() == 1);
  CHECK(worlds[0].id == "w-demo");
  CHECK(worlds[0].entities == std::vector<std::string>{"robin", "georgia"});
  CHECK(worlds[0].views.at("category").rows() == 3);
  CHECK(worlds[0].views.at("category").at(2, 1) == -0.5);
  CHECK(worlds[0].lookup_index.at("georgia") == 1);

  std::vector<Example> qs = load_questions(fixture("questions.jsonl"));
  REQUIRE(qs.size() == 2);
  CHECK(qs[0].id == "q-color");
  CHECK(qs[0].tokens.size() == 6);
  CHECK(qs[0].parse.tokens.size() == 6);
  CHECK(qs[0].answer == "blue");
  CHECK(qs[0].split == "train");
  CHECK(qs[1].tokens.size() == 5);
  CHECK(qs[1].split == "dev");

  // the fixture parses drive candidate generation end to end
  CHECK(generate_candidates(qs[0].parse).size() == 6);  // two fragments
  CHECK(generate_candidates(qs[1].parse).size() == 2);  // one fragment
}

TEST_CASE("world round-trip preserves every value bit for bit") {
  std::vector<World> worlds = load_worlds(fixture("worlds.json"));
  std::string path = write_file("roundtrip_worlds.json", "");
  save_worlds(worlds, path);
  std::vector<World> back = load_worlds(path);
  REQUIRE(back.size() == worlds.size());
  CHECK(back[0].id == worlds[0].id);
  CHECK(back[0].entities == worlds[0].entities);
  CHECK(back[0].views.at("category") == worlds[0].views.at("category"));
  CHECK(back[0].views.at("relation") == worlds[0].views.at("relation"));
  CHECK(back[0].lookup_index == worlds[0].lookup_index);

  // and the rewrite is byte-stable
  std::string again = write_file("roundtrip_worlds2.json", "");
  save_worlds(back, again);
  std::ifstream a(path), b(again);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("question round-trip preserves parses and splits") {
  std::vector<Example> qs = load_questions(fixture("questions.jsonl"));
  std::string path = write_file("roundtrip_questions.jsonl", "");
  save_questions(qs, path);
  std::vector<Example> back = load_questions(path);
  REQUIRE(back.size() == qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    CHECK(back[i].id == qs[i].id);
    CHECK(back[i].world_id == qs[i].world_id);
    CHECK(back[i].tokens == qs[i].tokens);
    CHECK(back[i].answer == qs[i].answer);
    CHECK(back[i].split == qs[i].split);
    REQUIRE(back[i].parse.tokens.size() == qs[i].parse.tokens.size());
    for (std::size_t t = 0; t < qs[i].parse.tokens.size(); ++t) {
      CHECK(back[i].parse.tokens[t].lemma == qs[i].parse.tokens[t].lemma);
      CHECK(back[i].parse.tokens[t].head == qs[i].parse.tokens[t].head);
    }
  }
}

TEST_CASE("gold layout round-trip") {
  std::map<std::string, std::string> gold = {
      {"q1", "(exists find[state])"},
      {"q2", "(describe[what] (relate[in] lookup[georgia]))"}};
  std::string path = write_file("gold.jsonl", "");
  save_gold_layouts(gold, path);
  CHECK(load_gold_layouts(path) == gold);
}

TEST_CASE("missing files and malformed JSON are schema errors") {
  CHECK_THROWS_AS(load_worlds((temp_dir() / "no_such_file.json").string()),
                  SchemaError);
  CHECK_THROWS_AS(load_questions((temp_dir() / "no_such_file.jsonl").string()),
                  SchemaError);
  CHECK_THROWS_AS(load_worlds(write_file("garbage.json", "{not json")), SchemaError);
  CHECK_THROWS_AS(load_questions(write_file("garbage.jsonl", "{not json")),
                  SchemaError);
  CHECK_THROWS_AS(load_worlds(write_file("noworlds.json", "{\"schema_version\":1}")),
                  SchemaError);
}

TEST_CASE("empty question file loads as an empty list") {
  CHECK(load_questions(write_file("empty.jsonl", "")).empty());
  CHECK(load_questions(write_file("blank.jsonl", "\n\n")).empty());
}

TEST_CASE("world schema violations carry the world id") {
  auto world_json = [](const std::string& patch) {
    return std::string("{\"schema_version\":1,\"worlds\":[") + patch + "]}";
  };

  SUBCASE("view width disagrees with the entity count") {
    std::string bad = world_json(
        R"({"id":"wx","entities":["a","b"],
            "views":{"category":{"rows":2,"cols":3,"values":[1,2,3,4,5,6]}},
            "lookup_index":{}})");
    std::string msg = message_of(
        [&] { load_worlds(write_file("bad_width.json", bad)); });
    CHECK(msg.find("wx") != std::string::npos);
    CHECK(msg.find("3 columns") != std::string::npos);
  }
  SUBCASE("duplicate entity") {
    std::string bad = world_json(
        R"({"id":"wx","entities":["a","a"],
            "views":{"category":{"rows":1,"cols":2,"values":[1,2]}},
            "lookup_index":{}})");
    CHECK_THROWS_AS(load_worlds(write_file("bad_dup.json", bad)), SchemaError);
  }
  SUBCASE("lookup index out of range") {
    std::string bad = world_json(
        R"({"id":"wx","entities":["a","b"],
            "views":{"category":{"rows":1,"cols":2,"values":[1,2]}},
            "lookup_index":{"a":5}})");
    std::string msg =
        message_of([&] { load_worlds(write_file("bad_idx.json", bad)); });
    CHECK(msg.find("lookup_index") != std::string::npos);
  }
  SUBCASE("value count disagrees with dimensions") {
    std::string bad = world_json(
        R"({"id":"wx","entities":["a"],
            "views":{"category":{"rows":2,"cols":1,"values":[1,2,3]}},
            "lookup_index":{}})");
    CHECK_THROWS_AS(load_worlds(write_file("bad_count.json", bad)), SchemaError);
  }
  SUBCASE("duplicate world ids") {
    std::string one =
        R"({"id":"wx","entities":["a"],
            "views":{"category":{"rows":1,"cols":1,"values":[1]}},
            "lookup_index":{}})";
    std::string bad = std::string("{\"schema_version\":1,\"worlds\":[") + one +
                      "," + one + "]}";
    std::string msg =
        message_of([&] { load_worlds(write_file("bad_dupw.json", bad)); });
    CHECK(msg.find("duplicate world id") != std::string::npos);
  }
}

TEST_CASE("question schema violations carry the question id") {
  auto q = [](const std::string& parse, const std::string& answer) {
    return std::string(R"({"id":"qx","world":"w","tokens":["a"],"parse":)") +
           parse + R"(,"answer":")" + answer + R"("})";
  };
  std::string good_tok =
      R"([{"id":1,"form":"a","lemma":"a","upos":"NOUN","head":0,"deprel":"root"}])";

  SUBCASE("head out of range") {
    std::string bad = q(
        R"([{"id":1,"form":"a","lemma":"a","upos":"NOUN","head":9,"deprel":"root"}])",
        "yes");
    std::string msg =
        message_of([&] { load_questions(write_file("bad_head.jsonl", bad)); });
    CHECK(msg.find("qx") != std::string::npos);
  }
  SUBCASE("cycle") {
    std::string bad = q(
        R"([{"id":1,"form":"a","lemma":"a","upos":"NOUN","head":0,"deprel":"root"},)"
        R"({"id":2,"form":"b","lemma":"b","upos":"NOUN","head":3,"deprel":"x"},)"
        R"({"id":3,"form":"c","lemma":"c","upos":"NOUN","head":2,"deprel":"x"}])",
        "yes");
    std::string msg =
        message_of([&] { load_questions(write_file("bad_cycle.jsonl", bad)); });
    CHECK(msg.find("qx") != std::string::npos);
  }
  SUBCASE("empty answer") {
    std::string bad = q(good_tok, "");
    std::string msg =
        message_of([&] { load_questions(write_file("bad_answer.jsonl", bad)); });
    CHECK(msg.find("empty answer") != std::string::npos);
  }
  SUBCASE("missing field") {
    std::string bad = R"({"id":"qx","tokens":["a"]})";
    std::string msg =
        message_of([&] { load_questions(write_file("bad_missing.jsonl", bad)); });
    CHECK(msg.find("world") != std::string::npos);
  }
}

TEST_CASE("build_vocab is sorted, deduplicated and complete") {
  std::vector<World> worlds = load_worlds(fixture("worlds.json"));
  std::vector<Example> qs = load_questions(fixture("questions.jsonl"));
  std::map<std::string, World> wmap;
  for (World& w : worlds) wmap.emplace(w.id, std::move(w));

  Vocab v = build_vocab(qs, wmap);
  CHECK(std::is_sorted(v.lexemes.begin(), v.lexemes.end()));
  CHECK(std::is_sorted(v.answers.begin(), v.answers.end()));
  CHECK(v.lexeme_index.count("<unk>") == 1);
  CHECK(v.lexeme_index.count("state") == 1);    // lemma
  CHECK(v.lexeme_index.count("states") == 1);   // surface form
  CHECK(v.lexeme_index.count("georgia") == 1);  // entity
  CHECK(v.answer_index.count("yes") == 1);
  CHECK(v.answer_index.count("no") == 1);
  CHECK(v.answer_index.count("blue") == 1);
  CHECK(v.answer_index.count("robin") == 1);
  for (std::size_t i = 0; i < v.answers.size(); ++i)
    CHECK(v.answer_index.at(v.answers[i]) == static_cast<int>(i));

  // input order does not matter
  std::vector<Example> reversed(qs.rbegin(), qs.rend());
  Vocab v2 = build_vocab(reversed, wmap);
  CHECK(v2.lexemes == v.lexemes);
  CHECK(v2.answers == v.answers);
}

TEST_CASE("symbolic answers over handcrafted facts") {
  EnvFacts facts;
  facts.by_entity["alder"] = {"city", {{"in", "avalon"}}};
  facts.by_entity["barlow"] = {"city", {{"in", "calder"}, {"near", "avalon"}}};
  facts.by_entity["casper"] = {"lake", {{"near", "avalon"}}};
  facts.by_entity["avalon"] = {"state", {}};
  facts.by_entity["calder"] = {"state", {}};

  auto answer = [&](const std::string& s) {
    return symbolic_answer(parse_layout_string(s), facts);
  };

  CHECK(answer("(exists find[city])") == "yes");
  CHECK(answer("(exists find[forest])") == "no");
  CHECK(answer("(describe[what] find[lake])") == "casper");
  CHECK(answer("(describe[what] find[city])") == "");  // not unique
  CHECK(answer("(describe[what] (relate[in] lookup[avalon]))") == "alder");
  CHECK(answer("(describe[what] (relate[near] lookup[avalon]))") == "");  // two
  CHECK(answer("(describe[what] (and find[lake] (relate[near] lookup[avalon])))") ==
        "casper");
  CHECK(answer("(exists (and find[city] (relate[near] lookup[avalon])))") == "yes");
  CHECK(answer("(exists (and find[lake] (relate[in] lookup[calder])))") == "no");
  CHECK(answer("(describe[what] lookup[barlow])") == "barlow");
  CHECK(answer("(exists lookup[nowhere])") == "no");
}

TEST_CASE("synthetic generation is deterministic") {
  SynthSpec spec;
  spec.environments = 3;
  spec.entities_per_env = 12;
  spec.questions_per_env = 13;
  spec.seed = 5;
  SynthOutput a = synth_generate(spec);
  SynthOutput b = synth_generate(spec);

  REQUIRE(a.worlds.size() == b.worlds.size());
  for (std::size_t i = 0; i < a.worlds.size(); ++i) {
    CHECK(a.worlds[i].id == b.worlds[i].id);
    CHECK(a.worlds[i].entities == b.worlds[i].entities);
    CHECK(a.worlds[i].views.at("category") == b.worlds[i].views.at("category"));
    CHECK(a.worlds[i].views.at("relation") == b.worlds[i].views.at("relation"));
  }
  REQUIRE(a.examples.size() == b.examples.size());
  for (std::size_t i = 0; i < a.examples.size(); ++i) {
    CHECK(a.examples[i].id == b.examples[i].id);
    CHECK(a.examples[i].tokens == b.examples[i].tokens);
    CHECK(a.examples[i].answer == b.examples[i].answer);
    CHECK(a.examples[i].split == b.examples[i].split);
  }
  CHECK(a.gold_layouts == b.gold_layouts);

  SynthSpec other = spec;
  other.seed = 6;
  SynthOutput c = synth_generate(other);
  CHECK_FALSE(a.worlds[0].views.at("category") == c.worlds[0].views.at("category"));
}

TEST_CASE("default synthetic dataset shape") {
  SynthSpec spec;  // 10 environments, 20 entities, 52 questions each
  SynthOutput out = synth_generate(spec);
  CHECK(out.worlds.size() == 10);
  CHECK(out.examples.size() == 520);
  CHECK(out.gold_layouts.size() == 520);

  std::set<std::string> world_ids;
  for (const World& w : out.worlds) {
    CHECK(w.entity_count() == 20);
    CHECK_NOTHROW(w.validate());
    world_ids.insert(w.id);
  }
  CHECK(world_ids.size() == 10);

  int dev = 0;
  for (const Example& ex : out.examples) {
    CHECK(world_ids.count(ex.world_id) == 1);
    CHECK_FALSE(ex.answer.empty());
    CHECK((ex.split == "train" || ex.split == "dev"));
    if (ex.split == "dev") ++dev;
    CHECK_NOTHROW(ex.parse.validate());
  }
  // every 5th instance of each template goes to dev: 8 of 52 per environment
  CHECK(dev == 80);

  // answers recompute from the gold layout and the stored facts
  for (const Example& ex : out.examples) {
    const EnvFacts& facts = out.facts.at(ex.world_id);
    Layout gold = parse_layout_string(out.gold_layouts.at(ex.id));
    CHECK(symbolic_answer(gold, facts) == ex.answer);
    CHECK(typecheck(gold).ok);
  }

  // held-out-environment coverage: every entity name recurs elsewhere
  std::map<std::string, int> envs_per_name;
  for (const World& w : out.worlds)
    for (const std::string& e : w.entities) ++envs_per_name[e];
  for (const auto& [name, count] : envs_per_name) CHECK(count >= 2);
}

TEST_CASE("generated questions answer their own candidate space") {
  SynthSpec spec;
  spec.environments = 2;
  spec.entities_per_env = 12;
  spec.questions_per_env = 13;
  SynthOutput out = synth_generate(spec);

  for (const Example& ex : out.examples) {
    std::vector<Layout> cands = generate_candidates(ex.parse);
    Layout gold = parse_layout_string(out.gold_layouts.at(ex.id));
    bool found = false;
    for (const Layout& c : cands) found = found || c == gold;
    CHECK_MESSAGE(found, "gold layout missing from candidates for ", ex.id);
  }
}

TEST_CASE("yes/no questions cross-check against raw facts") {
  SynthSpec spec;
  spec.environments = 4;
  spec.entities_per_env = 16;
  spec.questions_per_env = 26;
  SynthOutput out = synth_generate(spec);

  int yes = 0, no = 0;
  for (const Example& ex : out.examples) {
    Layout gold = parse_layout_string(out.gold_layouts.at(ex.id));
    if (gold.root.kind != ModuleKind::Exists) continue;
    const EnvFacts& facts = out.facts.at(ex.world_id);

    if (gold.root.children[0].kind == ModuleKind::Find) {
      // direct scan, independent of the symbolic evaluator
      const std::string& cat = gold.root.children[0].param_arg;
      bool present = false;
      for (const auto& [name, f] : facts.by_entity)
        present = present || f.category == cat;
      CHECK(ex.answer == (present ? "yes" : "no"));
    }
    (ex.answer == "yes" ? yes : no) += 1;
  }
  CHECK(yes > 0);
  CHECK(no > 0);  // the generator alternates polarity
}

TEST_CASE("noise-free views encode the facts exactly") {
  SynthSpec spec;
  spec.environments = 1;
  spec.entities_per_env = 12;
  spec.questions_per_env = 13;
  spec.noise = 0.0;
  SynthOutput out = synth_generate(spec);
  const World& w = out.worlds[0];
  const EnvFacts& facts = out.facts.at(w.id);
  const Tensor& cat = w.views.at("category");
  const Tensor& rel = w.views.at("relation");

  const std::vector<std::string> cat_names = {"city", "lake",     "park",
                                              "river", "forest",  "mountain",
                                              "island", "beach",  "state"};
  for (int k = 0; k < w.entity_count(); ++k) {
    const EntityFacts& f = facts.by_entity.at(w.entities[static_cast<std::size_t>(k)]);
    for (int r = 0; r < 9; ++r) {
      double want = cat_names[static_cast<std::size_t>(r)] == f.category ? 1.0 : 0.0;
      CHECK(cat.at(r, k) == want);
    }
    for (int r = 9; r < 33; ++r)  // name code block
      CHECK(std::abs(cat.at(r, k)) == 1.0);
    double rel_mass = 0.0;
    for (int r = 0; r < 16; ++r) rel_mass += rel.at(r, k);
    CHECK(rel_mass == doctest::Approx(static_cast<double>(f.relations.size())));
  }
}

TEST_CASE("generator rejects impossible specs") {
  SynthSpec spec;
  spec.environments = 0;
  CHECK_THROWS_AS(synth_generate(spec), ConfigError);
  spec.environments = 1;
  spec.questions_per_env = 2;
  CHECK_THROWS_AS(synth_generate(spec), ConfigError);
  spec.questions_per_env = 13;
  spec.entities_per_env = 4;  // fewer than 3 regulars
  CHECK_THROWS_AS(synth_generate(spec), ConfigError);
  spec.entities_per_env = 12;
  spec.feature_dim = 16;  // below the encoding floor
  CHECK_THROWS_AS(synth_generate(spec), ConfigError);
}
