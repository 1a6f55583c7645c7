#pragma once

#include <map>
#include <string>
#include <vector>

#include "modnet/params.hpp"
#include "modnet/tensor.hpp"

namespace modnet {

enum class Op {
  Constant,
  Param,
  Add,
  Mul,
  MatMul,
  MatVec,
  Relu,
  Sigmoid,
  Tanh,
  Softmax,
  MaxReduce,
  ColSum,
  Sum,
  Concat,
  Pick,
  Log,
  Neg,
};

const char* op_name(Op op);

struct TapeNode {
  Op op;
  std::vector<int> in;
  int arg = -1;  // element index for Pick
  Tensor val;
};

// Gradients of one backward pass: one tensor per reachable node, plus the
// same gradients gathered per parameter name. Parameters read by the tape
// but unreachable from the root get explicit zeros.
struct Gradients {
  std::vector<Tensor> by_node;
  std::vector<bool> reached;
  std::map<std::string, Tensor> by_param;
};

// Append-only computation graph. Forward values are computed eagerly as
// nodes are recorded; node inputs always refer to earlier ids, so one
// reverse sweep from a scalar root yields all gradients.
//
// Broadcasting in Add/Mul is limited to what the module equations need:
// same-shape elementwise, scalar against anything, and a length-d vector
// applied per column of a d-by-n matrix.
class Tape {
 public:
  int constant(Tensor value);
  // Reads (and if necessary creates) a named parameter. Repeated reads of
  // the same name within one tape share a node, so gradients from multiple
  // uses accumulate naturally.
  int param(ParamStore& store, const std::string& name,
            const std::vector<int>& shape, Init init = Init::Uniform);

  int add(int a, int b);
  int mul(int a, int b);
  int matmul(int a, int b);
  int matvec(int a, int b);
  int relu(int a);
  int sigmoid(int a);
  int tanh_(int a);
  int softmax(int a);
  int max_reduce(int a);
  int col_sum(int a);
  int sum(int a);
  int concat(const std::vector<int>& parts);
  int pick(int a, int index);
  int log_(int a);
  int neg(int a);

  const Tensor& val(int id) const { return nodes_[static_cast<std::size_t>(id)].val; }
  const TapeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }
  const std::map<std::string, int>& param_nodes() const { return param_ids_; }

  Gradients backward(int root) const;

  // Debug dump of the op list as a JSON array string.
  std::string dump_json() const;

 private:
  int push(TapeNode node);

  std::vector<TapeNode> nodes_;
  std::map<std::string, int> param_ids_;
};

namespace tape_debug {
// Test-harness fault injection: flips the sign of the relu backward rule so
// the gradient checker can be shown to catch a broken derivative.
extern double relu_backward_sign;
}  // namespace tape_debug

}  // namespace modnet
