#include "absgd/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace absgd {

namespace {

Tape make_param_tape(const Model& model, const ParamVector& params) {
  if (params.size() != model.param_dim())
    throw std::invalid_argument("parameter vector has length " + std::to_string(params.size()) +
                                ", model expects " + std::to_string(model.param_dim()));
  if (!params.all_finite()) throw std::invalid_argument("parameters must be finite");
  Tape tape(model.param_dim());
  for (std::int32_t i = 0; i < params.size(); ++i) tape.set_slot(i, params[i]);
  return tape;
}

void check_scalar(const Tape& tape, double v, const char* what) {
  if (!std::isfinite(v)) {
    tape.check_finite();  // throws naming the first bad node
    throw std::runtime_error(std::string(what) + " is non-finite");
  }
}

}  // namespace

DiffResult evaluate(const Model& model, const ParamVector& params, const Batch& batch) {
  Tape tape = make_param_tape(model, params);
  const Tape::NodeId loss = model.emit_batch_loss(tape, batch);
  tape.set_output(loss);
  tape.forward();
  DiffResult out;
  out.loss = tape.value(loss);
  check_scalar(tape, out.loss, "loss");
  const auto adj = tape.adjoints(loss);
  out.grad.resize(static_cast<std::size_t>(model.param_dim()));
  for (std::int32_t i = 0; i < model.param_dim(); ++i) {
    out.grad[static_cast<std::size_t>(i)] = adj[static_cast<std::size_t>(i)];
    check_scalar(tape, out.grad[static_cast<std::size_t>(i)], "gradient entry");
  }
  return out;
}

double loss_value(const Model& model, const ParamVector& params, const Batch& batch) {
  Tape tape = make_param_tape(model, params);
  const Tape::NodeId loss = model.emit_batch_loss(tape, batch);
  tape.set_output(loss);
  tape.forward();
  const double v = tape.value(loss);
  check_scalar(tape, v, "loss");
  return v;
}

std::vector<std::vector<double>> per_example_gradients(const Model& model,
                                                       const ParamVector& params,
                                                       const Batch& batch) {
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(batch.n));
  Batch one;
  one.n = 1;
  one.d = batch.d;
  for (std::int32_t i = 0; i < batch.n; ++i) {
    const auto row = batch.row(i);
    one.x.assign(row.begin(), row.end());
    one.y.assign(1, batch.y[static_cast<std::size_t>(i)]);
    out.push_back(evaluate(model, params, one).grad);
  }
  return out;
}

std::vector<double> input_gradient(const Model& model, const ParamVector& params,
                                   std::span<const double> x, double label) {
  if (static_cast<std::int32_t>(x.size()) != model.input_dim())
    throw std::invalid_argument("input_gradient: feature dimension mismatch");
  Tape tape = make_param_tape(model, params);
  const auto x_nodes = tape.add_slots(static_cast<std::int32_t>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) tape.set_slot(x_nodes[j], x[j]);
  const Tape::NodeId loss = model.emit_example_loss(tape, x_nodes, label);
  tape.set_output(loss);
  tape.forward();
  check_scalar(tape, tape.value(loss), "loss");
  const auto adj = tape.adjoints(loss);
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = adj[static_cast<std::size_t>(x_nodes[j])];
    check_scalar(tape, out[j], "input gradient entry");
  }
  return out;
}

HvpOperator::HvpOperator(const Model& model, const ParamVector& params, const Batch& batch)
    : tape_(make_param_tape(model, params)), dim_(model.param_dim()) {
  const Tape::NodeId loss = model.emit_batch_loss(tape_, batch);
  std::vector<Tape::NodeId> wrt(static_cast<std::size_t>(dim_));
  for (std::int32_t i = 0; i < dim_; ++i) wrt[static_cast<std::size_t>(i)] = i;
  const auto grad_nodes = tape_.gradient_nodes(loss, wrt);
  v_slots_ = tape_.add_slots(dim_);
  // g'v with v as fresh input slots: constant for this differentiation.
  Tape::NodeId dot = -1;
  for (std::int32_t i = 0; i < dim_; ++i) {
    const Tape::NodeId t =
        tape_.mul(grad_nodes[static_cast<std::size_t>(i)], v_slots_[static_cast<std::size_t>(i)]);
    dot = (dot < 0) ? t : tape_.add(dot, t);
  }
  dot_ = dot;
  tape_.set_output(dot_);
}

std::vector<double> HvpOperator::apply(std::span<const double> v) {
  if (static_cast<std::int32_t>(v.size()) != dim_)
    throw std::invalid_argument("hvp: vector has length " + std::to_string(v.size()) +
                                ", expected " + std::to_string(dim_));
  for (std::int32_t i = 0; i < dim_; ++i)
    tape_.set_slot(v_slots_[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(i)]);
  tape_.forward();
  const double gv = tape_.value(dot_);
  if (!std::isfinite(gv)) tape_.check_finite();
  const auto adj = tape_.adjoints(dot_);
  std::vector<double> out(static_cast<std::size_t>(dim_));
  for (std::int32_t i = 0; i < dim_; ++i) {
    out[static_cast<std::size_t>(i)] = adj[static_cast<std::size_t>(i)];
    if (!std::isfinite(out[static_cast<std::size_t>(i)]))
      throw std::runtime_error("hvp produced a non-finite entry");
  }
  return out;
}

std::vector<double> hvp(const Model& model, const ParamVector& params, const Batch& batch,
                        std::span<const double> v) {
  HvpOperator op(model, params, batch);
  return op.apply(v);
}

}  // namespace absgd
