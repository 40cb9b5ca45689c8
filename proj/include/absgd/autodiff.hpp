#pragma once

#include <span>
#include <vector>

#include "absgd/model.hpp"

namespace absgd {

// Mean batch loss and its exact reverse-mode gradient.
DiffResult evaluate(const Model& model, const ParamVector& params, const Batch& batch);

// Forward pass only.
double loss_value(const Model& model, const ParamVector& params, const Batch& batch);

// Gradient of each example's loss separately, in batch order.
std::vector<std::vector<double>> per_example_gradients(const Model& model,
                                                       const ParamVector& params,
                                                       const Batch& batch);

// Gradient of a single example's loss w.r.t. its features.
std::vector<double> input_gradient(const Model& model, const ParamVector& params,
                                   std::span<const double> x, double label);

// H*v for the batch-mean loss, computed as the gradient of g'v with v held
// constant. The operator form keeps the doubly-differentiated tape and only
// reruns its numeric passes per product, so repeated products are cheap.
class HvpOperator {
 public:
  HvpOperator(const Model& model, const ParamVector& params, const Batch& batch);

  std::int32_t dim() const { return dim_; }
  std::vector<double> apply(std::span<const double> v);

 private:
  Tape tape_;
  std::vector<Tape::NodeId> v_slots_;
  Tape::NodeId dot_ = -1;
  std::int32_t dim_ = 0;
};

std::vector<double> hvp(const Model& model, const ParamVector& params, const Batch& batch,
                        std::span<const double> v);

}  // namespace absgd
