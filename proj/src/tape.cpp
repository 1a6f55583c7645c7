#include "modnet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "modnet/errors.hpp"

namespace modnet {

namespace tape_debug {
double relu_backward_sign = 1.0;
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Param: return "param";
    case Op::Add: return "add";
    case Op::Mul: return "mul";
    case Op::MatMul: return "matmul";
    case Op::MatVec: return "matvec";
    case Op::Relu: return "relu";
    case Op::Sigmoid: return "sigmoid";
    case Op::Tanh: return "tanh";
    case Op::Softmax: return "softmax";
    case Op::MaxReduce: return "max_reduce";
    case Op::ColSum: return "col_sum";
    case Op::Sum: return "sum";
    case Op::Concat: return "concat";
    case Op::Pick: return "pick";
    case Op::Log: return "log";
    case Op::Neg: return "neg";
  }
  return "?";
}

namespace {

[[noreturn]] void shape_fail(Op op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " +
                   a.shape_str() + " and " + b.shape_str());
}

[[noreturn]] void shape_fail(Op op, const Tensor& a, const char* why) {
  throw ShapeError(std::string(op_name(op)) + ": " + why + ", got " +
                   a.shape_str());
}

enum class Bcast { Same, ScalarLeft, ScalarRight, VecColsLeft, VecColsRight };

Bcast broadcast_kind(Op op, const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) return Bcast::Same;
  if (a.is_scalar()) return Bcast::ScalarLeft;
  if (b.is_scalar()) return Bcast::ScalarRight;
  if (a.rank() == 1 && b.rank() == 2 && a.rows() == b.rows())
    return Bcast::VecColsLeft;
  if (b.rank() == 1 && a.rank() == 2 && b.rows() == a.rows())
    return Bcast::VecColsRight;
  shape_fail(op, a, b);
}

template <typename F>
Tensor broadcast_apply(Op op, const Tensor& a, const Tensor& b, F f) {
  switch (broadcast_kind(op, a, b)) {
    case Bcast::Same: {
      Tensor out = Tensor::zeros_like(a);
      for (std::size_t i = 0; i < a.size(); ++i) out.v[i] = f(a.v[i], b.v[i]);
      return out;
    }
    case Bcast::ScalarLeft: {
      Tensor out = Tensor::zeros_like(b);
      for (std::size_t i = 0; i < b.size(); ++i) out.v[i] = f(a.v[0], b.v[i]);
      return out;
    }
    case Bcast::ScalarRight: {
      Tensor out = Tensor::zeros_like(a);
      for (std::size_t i = 0; i < a.size(); ++i) out.v[i] = f(a.v[i], b.v[0]);
      return out;
    }
    case Bcast::VecColsLeft: {
      Tensor out = Tensor::zeros_like(b);
      const int r = b.rows(), c = b.cols();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out.at(i, j) = f(a.at(i), b.at(i, j));
      return out;
    }
    case Bcast::VecColsRight: {
      Tensor out = Tensor::zeros_like(a);
      const int r = a.rows(), c = a.cols();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out.at(i, j) = f(a.at(i, j), b.at(i));
      return out;
    }
  }
  shape_fail(op, a, b);
}

// Accumulates `grad` (shaped like the broadcast output) back into a tensor
// of shape `like`, summing over the broadcast dimensions.
void reduce_into(Tensor& acc, const Tensor& like, const Tensor& grad) {
  if (grad.same_shape(like)) {
    for (std::size_t i = 0; i < grad.size(); ++i) acc.v[i] += grad.v[i];
    return;
  }
  if (like.is_scalar()) {
    for (double g : grad.v) acc.v[0] += g;
    return;
  }
  // vector broadcast across matrix columns
  const int r = grad.rows(), c = grad.cols();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) acc.at(i) += grad.at(i, j);
}

}  // namespace

int Tape::push(TapeNode node) {
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::constant(Tensor value) {
  return push({Op::Constant, {}, -1, std::move(value)});
}

int Tape::param(ParamStore& store, const std::string& name,
                const std::vector<int>& shape, Init init) {
  auto it = param_ids_.find(name);
  if (it != param_ids_.end()) return it->second;
  const Tensor& value = store.ensure(name, shape, init);
  int id = push({Op::Param, {}, -1, value});
  param_ids_.emplace(name, id);
  return id;
}

int Tape::add(int a, int b) {
  Tensor out = broadcast_apply(Op::Add, val(a), val(b),
                               [](double x, double y) { return x + y; });
  return push({Op::Add, {a, b}, -1, std::move(out)});
}

int Tape::mul(int a, int b) {
  Tensor out = broadcast_apply(Op::Mul, val(a), val(b),
                               [](double x, double y) { return x * y; });
  return push({Op::Mul, {a, b}, -1, std::move(out)});
}

int Tape::matmul(int a, int b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows())
    shape_fail(Op::MatMul, A, B);
  Tensor out = Tensor::mat(A.rows(), B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int k = 0; k < A.cols(); ++k) {
      const double aik = A.at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < B.cols(); ++j) out.at(i, j) += aik * B.at(k, j);
    }
  return push({Op::MatMul, {a, b}, -1, std::move(out)});
}

int Tape::matvec(int a, int b) {
  const Tensor& A = val(a);
  const Tensor& x = val(b);
  if (A.rank() != 2 || x.rank() != 1 || A.cols() != x.rows())
    shape_fail(Op::MatVec, A, x);
  Tensor out = Tensor::vec(A.rows());
  for (int i = 0; i < A.rows(); ++i) {
    double acc = 0.0;
    for (int k = 0; k < A.cols(); ++k) acc += A.at(i, k) * x.at(k);
    out.at(i) = acc;
  }
  return push({Op::MatVec, {a, b}, -1, std::move(out)});
}

int Tape::relu(int a) {
  Tensor out = val(a);
  for (double& x : out.v) x = x > 0.0 ? x : 0.0;
  return push({Op::Relu, {a}, -1, std::move(out)});
}

int Tape::sigmoid(int a) {
  Tensor out = val(a);
  for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
  return push({Op::Sigmoid, {a}, -1, std::move(out)});
}

int Tape::tanh_(int a) {
  Tensor out = val(a);
  for (double& x : out.v) x = std::tanh(x);
  return push({Op::Tanh, {a}, -1, std::move(out)});
}

int Tape::softmax(int a) {
  const Tensor& x = val(a);
  if (x.rank() != 1 || x.rows() == 0)
    shape_fail(Op::Softmax, x, "expects a nonempty vector");
  Tensor out = Tensor::vec(x.rows());
  const double m = *std::max_element(x.v.begin(), x.v.end());
  double denom = 0.0;
  for (int i = 0; i < x.rows(); ++i) {
    out.at(i) = std::exp(x.at(i) - m);
    denom += out.at(i);
  }
  for (double& p : out.v) p /= denom;
  return push({Op::Softmax, {a}, -1, std::move(out)});
}

int Tape::max_reduce(int a) {
  const Tensor& x = val(a);
  if (x.rank() != 1 || x.rows() == 0)
    shape_fail(Op::MaxReduce, x, "expects a nonempty vector");
  return push({Op::MaxReduce, {a}, -1,
               Tensor::scalar(*std::max_element(x.v.begin(), x.v.end()))});
}

int Tape::col_sum(int a) {
  const Tensor& m = val(a);
  if (m.rank() != 2) shape_fail(Op::ColSum, m, "expects a matrix");
  Tensor out = Tensor::vec(m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out.at(j) += m.at(i, j);
  return push({Op::ColSum, {a}, -1, std::move(out)});
}

int Tape::sum(int a) {
  double acc = 0.0;
  for (double x : val(a).v) acc += x;
  return push({Op::Sum, {a}, -1, Tensor::scalar(acc)});
}

int Tape::concat(const std::vector<int>& parts) {
  if (parts.empty())
    throw ShapeError("concat: needs at least one input");
  std::vector<double> out;
  for (int id : parts) {
    const Tensor& t = val(id);
    if (t.rank() > 1) shape_fail(Op::Concat, t, "expects scalars or vectors");
    out.insert(out.end(), t.v.begin(), t.v.end());
  }
  return push({Op::Concat, parts, -1, Tensor::vec(std::move(out))});
}

int Tape::pick(int a, int index) {
  const Tensor& x = val(a);
  if (x.rank() != 1) shape_fail(Op::Pick, x, "expects a vector");
  if (index < 0 || index >= x.rows())
    throw ShapeError("pick: index " + std::to_string(index) +
                     " out of range for " + x.shape_str());
  return push({Op::Pick, {a}, index, Tensor::scalar(x.at(index))});
}

int Tape::log_(int a) {
  Tensor out = val(a);
  for (double& x : out.v) {
    if (x <= 0.0)
      throw ShapeError("log: non-positive input " + std::to_string(x));
    x = std::log(x);
  }
  return push({Op::Log, {a}, -1, std::move(out)});
}

int Tape::neg(int a) {
  Tensor out = val(a);
  for (double& x : out.v) x = -x;
  return push({Op::Neg, {a}, -1, std::move(out)});
}

Gradients Tape::backward(int root) const {
  const Tensor& root_val = val(root);
  if (!root_val.is_scalar())
    throw ShapeError("backward: root must be scalar, got " +
                     root_val.shape_str());

  Gradients g;
  g.by_node.resize(nodes_.size());
  g.reached.assign(nodes_.size(), false);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    g.by_node[i] = Tensor::zeros_like(nodes_[i].val);
  g.by_node[static_cast<std::size_t>(root)].v[0] = 1.0;
  g.reached[static_cast<std::size_t>(root)] = true;

  for (int id = root; id >= 0; --id) {
    const std::size_t ui = static_cast<std::size_t>(id);
    if (!g.reached[ui]) continue;
    const TapeNode& n = nodes_[ui];
    const Tensor& gy = g.by_node[ui];
    for (int in : n.in) g.reached[static_cast<std::size_t>(in)] = true;

    switch (n.op) {
      case Op::Constant:
      case Op::Param:
        break;
      case Op::Add: {
        const Tensor& a = val(n.in[0]);
        const Tensor& b = val(n.in[1]);
        reduce_into(g.by_node[n.in[0]], a, gy);
        reduce_into(g.by_node[n.in[1]], b, gy);
        break;
      }
      case Op::Mul: {
        const Tensor& a = val(n.in[0]);
        const Tensor& b = val(n.in[1]);
        Tensor ga = broadcast_apply(Op::Mul, gy, val(n.in[1]),
                                    [](double gv, double bv) { return gv * bv; });
        Tensor gb = broadcast_apply(Op::Mul, gy, val(n.in[0]),
                                    [](double gv, double av) { return gv * av; });
        reduce_into(g.by_node[n.in[0]], a, ga);
        reduce_into(g.by_node[n.in[1]], b, gb);
        break;
      }
      case Op::MatMul: {
        const Tensor& A = val(n.in[0]);
        const Tensor& B = val(n.in[1]);
        Tensor& gA = g.by_node[n.in[0]];
        Tensor& gB = g.by_node[n.in[1]];
        for (int i = 0; i < A.rows(); ++i)
          for (int j = 0; j < B.cols(); ++j) {
            const double gij = gy.at(i, j);
            if (gij == 0.0) continue;
            for (int k = 0; k < A.cols(); ++k) {
              gA.at(i, k) += gij * B.at(k, j);
              gB.at(k, j) += gij * A.at(i, k);
            }
          }
        break;
      }
      case Op::MatVec: {
        const Tensor& A = val(n.in[0]);
        const Tensor& x = val(n.in[1]);
        Tensor& gA = g.by_node[n.in[0]];
        Tensor& gx = g.by_node[n.in[1]];
        for (int i = 0; i < A.rows(); ++i) {
          const double gi = gy.at(i);
          if (gi == 0.0) continue;
          for (int k = 0; k < A.cols(); ++k) {
            gA.at(i, k) += gi * x.at(k);
            gx.at(k) += gi * A.at(i, k);
          }
        }
        break;
      }
      case Op::Relu: {
        const Tensor& x = val(n.in[0]);
        Tensor& gx = g.by_node[n.in[0]];
        // subgradient at 0 is defined as 0
        for (std::size_t i = 0; i < x.size(); ++i)
          if (x.v[i] > 0.0)
            gx.v[i] += tape_debug::relu_backward_sign * gy.v[i];
        break;
      }
      case Op::Sigmoid: {
        Tensor& gx = g.by_node[n.in[0]];
        for (std::size_t i = 0; i < n.val.size(); ++i) {
          const double s = n.val.v[i];
          gx.v[i] += gy.v[i] * s * (1.0 - s);
        }
        break;
      }
      case Op::Tanh: {
        Tensor& gx = g.by_node[n.in[0]];
        for (std::size_t i = 0; i < n.val.size(); ++i) {
          const double t = n.val.v[i];
          gx.v[i] += gy.v[i] * (1.0 - t * t);
        }
        break;
      }
      case Op::Softmax: {
        const Tensor& p = n.val;
        Tensor& gx = g.by_node[n.in[0]];
        double dot = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) dot += gy.v[i] * p.v[i];
        for (std::size_t i = 0; i < p.size(); ++i)
          gx.v[i] += p.v[i] * (gy.v[i] - dot);
        break;
      }
      case Op::MaxReduce: {
        // ties route the gradient to the first maximal index
        const Tensor& x = val(n.in[0]);
        int best = 0;
        for (int i = 1; i < x.rows(); ++i)
          if (x.at(i) > x.at(best)) best = i;
        g.by_node[n.in[0]].at(best) += gy.v[0];
        break;
      }
      case Op::ColSum: {
        const Tensor& m = val(n.in[0]);
        Tensor& gm = g.by_node[n.in[0]];
        for (int i = 0; i < m.rows(); ++i)
          for (int j = 0; j < m.cols(); ++j) gm.at(i, j) += gy.at(j);
        break;
      }
      case Op::Sum: {
        Tensor& gx = g.by_node[n.in[0]];
        for (double& gi : gx.v) gi += gy.v[0];
        break;
      }
      case Op::Concat: {
        std::size_t offset = 0;
        for (int in : n.in) {
          Tensor& gi = g.by_node[in];
          for (std::size_t i = 0; i < gi.size(); ++i)
            gi.v[i] += gy.v[offset + i];
          offset += gi.size();
        }
        break;
      }
      case Op::Pick: {
        g.by_node[n.in[0]].at(n.arg) += gy.v[0];
        break;
      }
      case Op::Log: {
        const Tensor& x = val(n.in[0]);
        Tensor& gx = g.by_node[n.in[0]];
        for (std::size_t i = 0; i < x.size(); ++i) gx.v[i] += gy.v[i] / x.v[i];
        break;
      }
      case Op::Neg: {
        Tensor& gx = g.by_node[n.in[0]];
        for (std::size_t i = 0; i < gx.size(); ++i) gx.v[i] -= gy.v[i];
        break;
      }
    }
  }

  for (const auto& [name, id] : param_ids_)
    g.by_param.emplace(name, g.by_node[static_cast<std::size_t>(id)]);
  return g;
}

std::string Tape::dump_json() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TapeNode& n = nodes_[i];
    if (i) os << ",";
    os << "{\"id\":" << i << ",\"op\":\"" << op_name(n.op) << "\",\"in\":[";
    for (std::size_t j = 0; j < n.in.size(); ++j) {
      if (j) os << ",";
      os << n.in[j];
    }
    os << "],\"shape\":\"" << n.val.shape_str() << "\"";
    if (n.op == Op::Pick) os << ",\"index\":" << n.arg;
    for (const auto& [name, id] : param_ids_)
      if (id == static_cast<int>(i)) os << ",\"param\":\"" << name << "\"";
    os << "}";
  }
  os << "]";
  return os.str();
}

}  // namespace modnet
