#include "absgd/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace absgd {

const char* op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kConst: return "const";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kLog1pExp: return "log1p_exp";
    case Op::kRelu: return "relu";
    case Op::kStep: return "step";
  }
  return "?";
}

namespace {

// Overflow-safe log(1 + exp(t)).
double log1p_exp_value(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double sigmoid_value(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

Tape::Tape(std::int32_t n_slots) : n_slots_(n_slots) {
  if (n_slots < 0) throw std::invalid_argument("Tape: negative slot count");
  ops_.reserve(static_cast<std::size_t>(n_slots) + 64);
  for (std::int32_t i = 0; i < n_slots; ++i) push(Op::kInput, -1, -1, 0.0);
}

void Tape::reserve(std::size_t nodes) {
  ops_.reserve(nodes);
  lhs_.reserve(nodes);
  rhs_.reserve(nodes);
  payload_.reserve(nodes);
}

std::vector<Tape::NodeId> Tape::add_slots(std::int32_t count) {
  std::vector<NodeId> ids;
  ids.reserve(static_cast<std::size_t>(count));
  for (std::int32_t i = 0; i < count; ++i) ids.push_back(push(Op::kInput, -1, -1, 0.0));
  n_slots_ += count;
  return ids;
}

void Tape::set_slot(NodeId slot_node, double v) {
  if (slot_node < 0 || static_cast<std::size_t>(slot_node) >= ops_.size() ||
      ops_[static_cast<std::size_t>(slot_node)] != Op::kInput)
    throw std::invalid_argument("Tape::set_slot: node is not an input");
  payload_[static_cast<std::size_t>(slot_node)] = v;
}

Tape::NodeId Tape::push(Op op, NodeId a, NodeId b, double payload) {
  const auto id = static_cast<NodeId>(ops_.size());
  ops_.push_back(op);
  lhs_.push_back(a);
  rhs_.push_back(b);
  payload_.push_back(payload);
  return id;
}

Tape::NodeId Tape::constant(double c) { return push(Op::kConst, -1, -1, c); }
Tape::NodeId Tape::add(NodeId a, NodeId b) { return push(Op::kAdd, a, b, 0.0); }
Tape::NodeId Tape::sub(NodeId a, NodeId b) { return push(Op::kSub, a, b, 0.0); }
Tape::NodeId Tape::mul(NodeId a, NodeId b) { return push(Op::kMul, a, b, 0.0); }
Tape::NodeId Tape::div(NodeId a, NodeId b) { return push(Op::kDiv, a, b, 0.0); }
Tape::NodeId Tape::neg(NodeId a) { return push(Op::kNeg, a, -1, 0.0); }
Tape::NodeId Tape::exp(NodeId a) { return push(Op::kExp, a, -1, 0.0); }
Tape::NodeId Tape::log(NodeId a) { return push(Op::kLog, a, -1, 0.0); }
Tape::NodeId Tape::tanh(NodeId a) { return push(Op::kTanh, a, -1, 0.0); }
Tape::NodeId Tape::sigmoid(NodeId a) { return push(Op::kSigmoid, a, -1, 0.0); }
Tape::NodeId Tape::log1p_exp(NodeId a) { return push(Op::kLog1pExp, a, -1, 0.0); }
Tape::NodeId Tape::relu(NodeId a) { return push(Op::kRelu, a, -1, 0.0); }
Tape::NodeId Tape::step(NodeId a) { return push(Op::kStep, a, -1, 0.0); }

void Tape::forward() {
  const std::size_t n = ops_.size();
  val_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double* v = val_.data();
    const auto a = lhs_[k];
    const auto b = rhs_[k];
    switch (ops_[k]) {
      case Op::kInput:
      case Op::kConst: val_[k] = payload_[k]; break;
      case Op::kAdd: val_[k] = v[a] + v[b]; break;
      case Op::kSub: val_[k] = v[a] - v[b]; break;
      case Op::kMul: val_[k] = v[a] * v[b]; break;
      case Op::kDiv: val_[k] = v[a] / v[b]; break;
      case Op::kNeg: val_[k] = -v[a]; break;
      case Op::kExp: val_[k] = std::exp(v[a]); break;
      case Op::kLog: val_[k] = std::log(v[a]); break;
      case Op::kTanh: val_[k] = std::tanh(v[a]); break;
      case Op::kSigmoid: val_[k] = sigmoid_value(v[a]); break;
      case Op::kLog1pExp: val_[k] = log1p_exp_value(v[a]); break;
      case Op::kRelu: val_[k] = v[a] > 0.0 ? v[a] : 0.0; break;
      case Op::kStep: val_[k] = v[a] > 0.0 ? 1.0 : 0.0; break;
    }
  }
}

std::vector<double> Tape::adjoints(NodeId of) const {
  if (of < 0 || static_cast<std::size_t>(of) >= ops_.size())
    throw std::invalid_argument("Tape::adjoints: bad seed node");
  if (val_.size() != ops_.size())
    throw std::logic_error("Tape::adjoints: forward() has not run");
  std::vector<double> adj(ops_.size(), 0.0);
  adj[static_cast<std::size_t>(of)] = 1.0;
  const double* v = val_.data();
  for (std::int32_t k = of; k >= 0; --k) {
    const double ak = adj[static_cast<std::size_t>(k)];
    if (ak == 0.0) continue;
    const auto a = lhs_[static_cast<std::size_t>(k)];
    const auto b = rhs_[static_cast<std::size_t>(k)];
    switch (ops_[static_cast<std::size_t>(k)]) {
      case Op::kInput:
      case Op::kConst:
      case Op::kStep: break;
      case Op::kAdd:
        adj[static_cast<std::size_t>(a)] += ak;
        adj[static_cast<std::size_t>(b)] += ak;
        break;
      case Op::kSub:
        adj[static_cast<std::size_t>(a)] += ak;
        adj[static_cast<std::size_t>(b)] -= ak;
        break;
      case Op::kMul:
        adj[static_cast<std::size_t>(a)] += ak * v[b];
        adj[static_cast<std::size_t>(b)] += ak * v[a];
        break;
      case Op::kDiv:
        adj[static_cast<std::size_t>(a)] += ak / v[b];
        adj[static_cast<std::size_t>(b)] -= ak * v[k] / v[b];
        break;
      case Op::kNeg: adj[static_cast<std::size_t>(a)] -= ak; break;
      case Op::kExp: adj[static_cast<std::size_t>(a)] += ak * v[k]; break;
      case Op::kLog: adj[static_cast<std::size_t>(a)] += ak / v[a]; break;
      case Op::kTanh: adj[static_cast<std::size_t>(a)] += ak * (1.0 - v[k] * v[k]); break;
      case Op::kSigmoid: adj[static_cast<std::size_t>(a)] += ak * v[k] * (1.0 - v[k]); break;
      case Op::kLog1pExp: adj[static_cast<std::size_t>(a)] += ak * sigmoid_value(v[a]); break;
      case Op::kRelu: adj[static_cast<std::size_t>(a)] += v[a] > 0.0 ? ak : 0.0; break;
    }
  }
  return adj;
}

std::vector<Tape::NodeId> Tape::gradient_nodes(NodeId of, std::span<const NodeId> wrt) {
  if (of < 0 || static_cast<std::size_t>(of) >= ops_.size())
    throw std::invalid_argument("Tape::gradient_nodes: bad seed node");
  // Symbolic adjoints for the original nodes only; everything this sweep
  // appends has an id greater than `of` and is never revisited.
  std::vector<NodeId> adj(static_cast<std::size_t>(of) + 1, -1);
  adj[static_cast<std::size_t>(of)] = constant(1.0);
  auto accumulate = [&](NodeId node, NodeId term) {
    auto& slot = adj[static_cast<std::size_t>(node)];
    slot = slot < 0 ? term : add(slot, term);
  };
  for (NodeId k = of; k >= 0; --k) {
    const NodeId ak = adj[static_cast<std::size_t>(k)];
    if (ak < 0) continue;
    const NodeId a = lhs_[static_cast<std::size_t>(k)];
    const NodeId b = rhs_[static_cast<std::size_t>(k)];
    switch (ops_[static_cast<std::size_t>(k)]) {
      case Op::kInput:
      case Op::kConst:
      case Op::kStep: break;
      case Op::kAdd:
        accumulate(a, ak);
        accumulate(b, ak);
        break;
      case Op::kSub:
        accumulate(a, ak);
        accumulate(b, neg(ak));
        break;
      case Op::kMul:
        accumulate(a, mul(ak, b));
        accumulate(b, mul(ak, a));
        break;
      case Op::kDiv:
        accumulate(a, div(ak, b));
        accumulate(b, neg(div(mul(ak, k), b)));
        break;
      case Op::kNeg: accumulate(a, neg(ak)); break;
      case Op::kExp: accumulate(a, mul(ak, k)); break;
      case Op::kLog: accumulate(a, div(ak, a)); break;
      case Op::kTanh: accumulate(a, mul(ak, sub(constant(1.0), mul(k, k)))); break;
      case Op::kSigmoid: accumulate(a, mul(ak, mul(k, sub(constant(1.0), k)))); break;
      case Op::kLog1pExp: accumulate(a, mul(ak, sigmoid(a))); break;
      case Op::kRelu: accumulate(a, mul(ak, step(a))); break;
    }
  }
  std::vector<NodeId> out;
  out.reserve(wrt.size());
  NodeId zero = -1;
  for (const NodeId w : wrt) {
    if (w < 0 || w > of || adj[static_cast<std::size_t>(w)] < 0) {
      if (zero < 0) zero = constant(0.0);
      out.push_back(zero);
    } else {
      out.push_back(adj[static_cast<std::size_t>(w)]);
    }
  }
  return out;
}

void Tape::check_finite() const {
  if (val_.size() != ops_.size())
    throw std::logic_error("Tape::check_finite: forward() has not run");
  for (std::size_t k = 0; k < val_.size(); ++k) {
    if (!std::isfinite(val_[k]))
      throw std::runtime_error("non-finite value at node " + std::to_string(k) + " (" +
                               op_name(ops_[k]) + ")");
  }
}

}  // namespace absgd
