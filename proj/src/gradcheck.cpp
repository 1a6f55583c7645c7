#include "modnet/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "modnet/encoder.hpp"
#include "modnet/modules.hpp"
#include "modnet/rng.hpp"
#include "modnet/scorer.hpp"
#include "modnet/tape.hpp"

namespace modnet {

namespace {

constexpr double kStep = 1e-5;
constexpr double kMarginFloor = 1e-3;

Tensor rand_vec(int n, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::vec(n);
  for (double& x : t.v) x = rng.uniform(-scale, scale);
  return t;
}

Tensor rand_mat(int r, int c, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::mat(r, c);
  for (double& x : t.v) x = rng.uniform(-scale, scale);
  return t;
}

Tensor rand_attention(int n, Rng& rng) {
  Tensor t = Tensor::vec(n);
  double sum = 0.0;
  for (double& x : t.v) {
    x = rng.uniform(0.05, 1.0);
    sum += x;
  }
  for (double& x : t.v) x /= sum;
  return t;
}

// Rebuilds the same computation for finite differencing: all constants are
// baked in, only the parameter store varies.
using Builder = std::function<int(Tape&, ParamStore&)>;
using Factory = std::function<Builder(Rng&)>;

// Distance of the forward pass from any nondifferentiable point: relu
// inputs near 0, near-ties in max_reduce, log arguments near 0.
double tape_margin(const Tape& t) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < t.size(); ++id) {
    const TapeNode& n = t.node(static_cast<int>(id));
    if (n.op == Op::Relu) {
      for (double x : t.val(n.in[0]).v) margin = std::min(margin, std::fabs(x));
    } else if (n.op == Op::MaxReduce) {
      const auto& v = t.val(n.in[0]).v;
      double top = -std::numeric_limits<double>::infinity(), second = top;
      for (double x : v) {
        if (x > top) {
          second = top;
          top = x;
        } else if (x > second) {
          second = x;
        }
      }
      if (v.size() > 1) margin = std::min(margin, top - second);
    } else if (n.op == Op::Log) {
      for (double x : t.val(n.in[0]).v) margin = std::min(margin, x);
    }
  }
  return margin;
}

// Scalar readout with case-specific weights so every output coordinate
// influences the root.
int weighted_sum(Tape& t, int node, const Tensor& weights) {
  return t.sum(t.mul(node, t.constant(weights)));
}

struct Case {
  std::string name;
  Factory factory;
};

std::vector<Case> make_cases() {
  std::vector<Case> cases;
  auto add = [&](std::string name, Factory f) {
    cases.push_back({std::move(name), std::move(f)});
  };

  // --- primitive ops ---
  add("add", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    Tensor w = rand_vec(n, rng);
    return [n, w](Tape& t, ParamStore& p) {
      int a = t.param(p, "x/a", {n});
      int b = t.param(p, "x/b", {n});
      return weighted_sum(t, t.add(a, b), w);
    };
  });
  add("add_vec_cols", [](Rng& rng) -> Builder {
    const int d = 2 + rng.uniform_int(3), n = 2 + rng.uniform_int(3);
    Tensor w = rand_mat(d, n, rng);
    return [d, n, w](Tape& t, ParamStore& p) {
      int m = t.param(p, "x/m", {d, n});
      int v = t.param(p, "x/v", {d});
      return weighted_sum(t, t.add(m, v), w);
    };
  });
  add("add_scalar", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    Tensor w = rand_vec(n, rng);
    return [n, w](Tape& t, ParamStore& p) {
      int a = t.param(p, "x/a", {n});
      int s = t.param(p, "x/s", {});
      return weighted_sum(t, t.add(s, a), w);
    };
  });
  add("mul", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    Tensor w = rand_vec(n, rng);
    return [n, w](Tape& t, ParamStore& p) {
      int a = t.param(p, "x/a", {n});
      int b = t.param(p, "x/b", {n});
      return weighted_sum(t, t.mul(a, b), w);
    };
  });
  add("mul_vec_cols", [](Rng& rng) -> Builder {
    const int d = 2 + rng.uniform_int(3), n = 2 + rng.uniform_int(3);
    Tensor w = rand_mat(d, n, rng);
    return [d, n, w](Tape& t, ParamStore& p) {
      int m = t.param(p, "x/m", {d, n});
      int v = t.param(p, "x/v", {d});
      return weighted_sum(t, t.mul(v, m), w);
    };
  });
  add("mul_scalar", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    Tensor w = rand_vec(n, rng);
    return [n, w](Tape& t, ParamStore& p) {
      int a = t.param(p, "x/a", {n});
      int s = t.param(p, "x/s", {});
      return weighted_sum(t, t.mul(a, s), w);
    };
  });
  add("matmul", [](Rng& rng) -> Builder {
    const int r = 2 + rng.uniform_int(3), k = 2 + rng.uniform_int(3),
              c = 2 + rng.uniform_int(3);
    Tensor w = rand_mat(r, c, rng);
    return [r, k, c, w](Tape& t, ParamStore& p) {
      int a = t.param(p, "x/a", {r, k});
      int b = t.param(p, "x/b", {k, c});
      return weighted_sum(t, t.matmul(a, b), w);
    };
  });
  add("matvec", [](Rng& rng) -> Builder {
    const int r = 2 + rng.uniform_int(3), c = 2 + rng.uniform_int(3);
    Tensor w = rand_vec(r, rng);
    return [r, c, w](Tape& t, ParamStore& p) {
      int a = t.param(p, "x/a", {r, c});
      int b = t.param(p, "x/b", {c});
      return weighted_sum(t, t.matvec(a, b), w);
    };
  });
  add("relu", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    Tensor w = rand_vec(n, rng);
    return [n, w](Tape& t, ParamStore& p) {
      return weighted_sum(t, t.relu(t.param(p, "x/a", {n})), w);
    };
  });
  add("sigmoid", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    Tensor w = rand_vec(n, rng);
    return [n, w](Tape& t, ParamStore& p) {
      return weighted_sum(t, t.sigmoid(t.param(p, "x/a", {n})), w);
    };
  });
  add("tanh", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    Tensor w = rand_vec(n, rng);
    return [n, w](Tape& t, ParamStore& p) {
      return weighted_sum(t, t.tanh_(t.param(p, "x/a", {n})), w);
    };
  });
  add("softmax", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    Tensor w = rand_vec(n, rng);
    return [n, w](Tape& t, ParamStore& p) {
      return weighted_sum(t, t.softmax(t.param(p, "x/a", {n})), w);
    };
  });
  add("max_reduce", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    const double w = rng.uniform(-1.0, 1.0);
    return [n, w](Tape& t, ParamStore& p) {
      int m = t.max_reduce(t.param(p, "x/a", {n}));
      return t.mul(m, t.constant(Tensor::scalar(w)));
    };
  });
  add("col_sum", [](Rng& rng) -> Builder {
    const int d = 2 + rng.uniform_int(3), n = 2 + rng.uniform_int(3);
    Tensor w = rand_vec(n, rng);
    return [d, n, w](Tape& t, ParamStore& p) {
      return weighted_sum(t, t.col_sum(t.param(p, "x/m", {d, n})), w);
    };
  });
  add("sum", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    (void)rng;
    return [n](Tape& t, ParamStore& p) {
      return t.sum(t.param(p, "x/a", {n}));
    };
  });
  add("concat", [](Rng& rng) -> Builder {
    const int n1 = 1 + rng.uniform_int(3), n2 = 1 + rng.uniform_int(3);
    Tensor w = rand_vec(n1 + n2 + 1, rng);
    return [n1, n2, w](Tape& t, ParamStore& p) {
      int a = t.param(p, "x/a", {n1});
      int b = t.param(p, "x/b", {n2});
      int s = t.param(p, "x/s", {});
      return weighted_sum(t, t.concat({a, s, b}), w);
    };
  });
  add("pick", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    const int idx = rng.uniform_int(n);
    const double w = rng.uniform(-1.0, 1.0);
    return [n, idx, w](Tape& t, ParamStore& p) {
      int x = t.pick(t.param(p, "x/a", {n}), idx);
      return t.mul(x, t.constant(Tensor::scalar(w)));
    };
  });
  add("log", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    Tensor w = rand_vec(n, rng);
    return [n, w](Tape& t, ParamStore& p) {
      // softmax keeps the log argument strictly positive
      return weighted_sum(t, t.log_(t.softmax(t.param(p, "x/a", {n}))), w);
    };
  });
  add("neg", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    Tensor w = rand_vec(n, rng);
    return [n, w](Tape& t, ParamStore& p) {
      return weighted_sum(t, t.neg(t.param(p, "x/a", {n})), w);
    };
  });

  // --- module equations ---
  add("find", [](Rng& rng) -> Builder {
    World world;
    world.id = "g";
    const int n = 2 + rng.uniform_int(3), dv = 2 + rng.uniform_int(3);
    for (int i = 0; i < n; ++i) world.entities.push_back("e" + std::to_string(i));
    world.views["category"] = rand_mat(dv, n, rng);
    world.views["relation"] = rand_mat(dv, n, rng);
    for (int i = 0; i < n; ++i) world.lookup_index[world.entities[i]] = i;
    ModuleConfig cfg;
    cfg.hidden = 2 + rng.uniform_int(3);
    Tensor w = rand_vec(n, rng);
    return [world, cfg, w](Tape& t, ParamStore& p) {
      return weighted_sum(t, eval_find("city", world, cfg, p, t), w);
    };
  });
  add("relate", [](Rng& rng) -> Builder {
    World world;
    world.id = "g";
    const int n = 2 + rng.uniform_int(3), dv = 2 + rng.uniform_int(3);
    for (int i = 0; i < n; ++i) world.entities.push_back("e" + std::to_string(i));
    world.views["category"] = rand_mat(dv, n, rng);
    world.views["relation"] = rand_mat(dv, n, rng);
    ModuleConfig cfg;
    cfg.hidden = 2 + rng.uniform_int(3);
    Tensor h = rand_attention(n, rng);
    Tensor w = rand_vec(n, rng);
    return [world, cfg, h, w](Tape& t, ParamStore& p) {
      int hin = t.constant(h);
      return weighted_sum(t, eval_relate("in", hin, world, cfg, p, t), w);
    };
  });
  add("describe", [](Rng& rng) -> Builder {
    World world;
    world.id = "g";
    const int n = 2 + rng.uniform_int(3), dv = 2 + rng.uniform_int(3);
    const int vocab = 2 + rng.uniform_int(3);
    for (int i = 0; i < n; ++i) world.entities.push_back("e" + std::to_string(i));
    world.views["category"] = rand_mat(dv, n, rng);
    ModuleConfig cfg;
    cfg.hidden = 2 + rng.uniform_int(3);
    Tensor h = rand_attention(n, rng);
    Tensor w = rand_vec(vocab, rng);
    return [world, cfg, vocab, h, w](Tape& t, ParamStore& p) {
      int hin = t.constant(h);
      return weighted_sum(t, eval_describe("what", hin, world, cfg, vocab, p, t), w);
    };
  });
  add("exists", [](Rng& rng) -> Builder {
    const int n = 2 + rng.uniform_int(4);
    Tensor h = rand_attention(n, rng);
    Tensor w = rand_vec(2, rng);
    return [h, w](Tape& t, ParamStore& p) {
      int hin = t.constant(h);
      return weighted_sum(t, eval_exists(hin, p, t), w);
    };
  });
  add("layout", [](Rng& rng) -> Builder {
    World world;
    world.id = "g";
    const int n = 3 + rng.uniform_int(3), dv = 3 + rng.uniform_int(3);
    for (int i = 0; i < n; ++i) world.entities.push_back("e" + std::to_string(i));
    world.views["category"] = rand_mat(dv, n, rng);
    world.views["relation"] = rand_mat(dv, n, rng);
    for (int i = 0; i < n; ++i) world.lookup_index[world.entities[i]] = i;
    ModuleConfig cfg;
    cfg.hidden = 2 + rng.uniform_int(3);
    std::vector<std::string> vocab = {"red", "green", "blue"};
    const int gold = rng.uniform_int(3);
    Layout layout = parse_layout_string(
        "(describe[what] (and find[city] (relate[in] lookup[e0])))");
    return [world, cfg, vocab, gold, layout](Tape& t, ParamStore& p) {
      ExecutionResult r = execute_layout(layout, world, cfg, vocab, p, t);
      return t.log_(t.pick(r.dist, gold));
    };
  });
  add("scorer", [](Rng& rng) -> Builder {
    const int dq = 2 + rng.uniform_int(3), df = 3 + rng.uniform_int(4);
    ScorerConfig cfg;
    cfg.hidden = 2 + rng.uniform_int(3);
    Tensor f = rand_vec(df, rng);
    return [dq, cfg, f](Tape& t, ParamStore& p) {
      int hq = t.param(p, "encoder/hq", {dq});
      return score_layout(hq, f, cfg, p, t);
    };
  });
  add("fusion", [](Rng& rng) -> Builder {
    const int dq = 2 + rng.uniform_int(3), dv = 2 + rng.uniform_int(3);
    const int gold = rng.uniform_int(dv);
    return [dq, dv, gold](Tape& t, ParamStore& p) {
      int hq = t.param(p, "encoder/hq", {dq});
      int emb = t.param(p, "describe/emb", {dv});
      int dist = fuse_with_question(hq, emb, ModuleKind::Describe, p, t);
      return t.log_(t.pick(dist, gold));
    };
  });
  add("encoder", [](Rng& rng) -> Builder {
    EncoderConfig cfg;
    cfg.d_emb = 2 + rng.uniform_int(2);
    cfg.d_h = 2 + rng.uniform_int(3);
    const std::vector<std::string> tokens = {"what", "is", "the", "city", "?"};
    const std::set<std::string> words(tokens.begin(), tokens.end());
    Tensor w = rand_vec(cfg.d_h, rng);
    return [cfg, tokens, words, w](Tape& t, ParamStore& p) {
      return weighted_sum(t, encode_question(tokens, words, cfg, p, t), w);
    };
  });

  return cases;
}

double forward_value(const Builder& build, ParamStore& store) {
  Tape t;
  return t.val(build(t, store)).item();
}

}  // namespace

GradCheckReport run_gradient_suite(std::uint64_t seed, int configs_per_case) {
  GradCheckReport report;
  for (const Case& c : make_cases()) {
    GradCheckEntry entry;
    entry.name = c.name;
    for (int cfg = 0; cfg < configs_per_case; ++cfg) {
      Builder build;
      ParamStore store;
      Tape tape;
      int root = -1;
      for (int attempt = 0; attempt < 16; ++attempt) {
        Rng rng(splitmix64(seed ^ fnv1a64(c.name)) + 1000003ull * cfg + attempt);
        store = ParamStore(rng.next_u64());
        build = c.factory(rng);
        tape = Tape();
        root = build(tape, store);
        if (tape_margin(tape) >= kMarginFloor) break;
      }
      ++entry.configs;
      Gradients grads = tape.backward(root);
      for (const auto& [name, g] : grads.by_param) {
        Tensor& p = store.get(name);
        for (std::size_t i = 0; i < p.v.size(); ++i) {
          const double orig = p.v[i];
          p.v[i] = orig + kStep;
          const double up = forward_value(build, store);
          p.v[i] = orig - kStep;
          const double down = forward_value(build, store);
          p.v[i] = orig;
          const double fd = (up - down) / (2.0 * kStep);
          const double ad = g.v[i];
          const double rel =
              std::fabs(ad - fd) / std::max(1e-4, std::fabs(ad) + std::fabs(fd));
          ++entry.coords;
          if (rel > entry.max_rel_err) entry.max_rel_err = rel;
        }
      }
    }
    if (entry.max_rel_err > report.worst) {
      report.worst = entry.max_rel_err;
      report.worst_name = entry.name;
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace modnet
