#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace absgd {

// Scalar operation kinds recorded on the tape. Step is the derivative of
// Relu (1 for x > 0, else 0, so the Relu subgradient at 0 is 0); its own
// derivative is taken as 0 everywhere, which keeps second-order passes
// well defined away from the kink.
enum class Op : std::uint8_t {
  kInput,
  kConst,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kExp,
  kLog,
  kTanh,
  kSigmoid,
  kLog1pExp,
  kRelu,
  kStep,
};

const char* op_name(Op op);

struct DiffResult {
  double loss = 0.0;
  std::vector<double> grad;
};

// Reverse-mode tape over scalars. Nodes are appended in topological order
// (inputs precede consumers) and there is a single scalar output.
//
// First-order gradients run a numeric reverse sweep over stored values.
// Hessian-vector products are built by emitting the adjoint computation
// itself as tape nodes (gradient_nodes), dotting the resulting gradient
// nodes with a constant vector v, and differentiating that scalar once
// more; the Hessian is never materialized.
class Tape {
 public:
  using NodeId = std::int32_t;

  // Creates the tape with input nodes 0..n_slots-1 (node id == slot id).
  explicit Tape(std::int32_t n_slots);

  std::int32_t num_slots() const { return n_slots_; }
  std::size_t size() const { return ops_.size(); }

  // Appends additional input slots (used for vectors that must be treated
  // as constants by one differentiation pass but still settable, e.g. the
  // v in an H*v product). Returns the node ids.
  std::vector<NodeId> add_slots(std::int32_t count);

  void reserve(std::size_t nodes);

  void set_slot(NodeId slot_node, double v);

  NodeId constant(double c);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);
  NodeId neg(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId log1p_exp(NodeId a);
  NodeId relu(NodeId a);
  NodeId step(NodeId a);

  void set_output(NodeId id) { output_ = id; }
  NodeId output() const { return output_; }

  // Evaluates all node values in order.
  void forward();

  double value(NodeId id) const { return val_[static_cast<std::size_t>(id)]; }

  // Numeric reverse sweep seeded at `of`; returns the adjoint of every node.
  // Requires forward() to have run.
  std::vector<double> adjoints(NodeId of) const;

  // Emits the adjoint computation of `of` w.r.t. each node in `wrt` as new
  // tape nodes and returns their ids (a constant-zero node where `of` does
  // not depend on the entry). Only differentiates through nodes <= `of`.
  std::vector<NodeId> gradient_nodes(NodeId of, std::span<const NodeId> wrt);

  // Throws naming the first non-finite node; call after forward().
  void check_finite() const;

 private:
  NodeId push(Op op, NodeId a, NodeId b, double payload);

  std::vector<Op> ops_;
  std::vector<NodeId> lhs_;
  std::vector<NodeId> rhs_;
  std::vector<double> payload_;  // constant value, or the slot's current value
  std::vector<double> val_;
  std::int32_t n_slots_ = 0;
  NodeId output_ = -1;
};

}  // namespace absgd
