#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "absgd/dataset.hpp"
#include "absgd/param_vector.hpp"
#include "absgd/tape.hpp"

namespace absgd {

enum class ModelKind { kQuadratic, kLogistic, kMlp };
enum class Activation { kIdentity, kRelu, kTanh };
enum class LossKind { kSquared, kCrossEntropy };

// Declarative model description. `quadratic` interprets each example's
// feature row as a linear noise term: l(b_i, theta) = 0.5 theta'A theta + b_i'theta.
struct ModelSpec {
  ModelKind kind = ModelKind::kLogistic;
  std::vector<std::int32_t> dims;        // mlp layer widths; [d] for logistic
  double l2 = 0.0;                       // logistic regularization, >= 0
  Activation activation = Activation::kTanh;
  LossKind loss = LossKind::kCrossEntropy;
  std::vector<double> matrix_a;          // quadratic: dense symmetric, row-major
};

// Differentiable model over a flat parameter vector. Loss graphs are emitted
// onto a Tape whose first param_dim() input slots hold the parameters.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::int32_t param_dim() const = 0;
  virtual std::int32_t input_dim() const = 0;
  virtual std::vector<Segment> param_segments() const = 0;
  // True when the loss is convex in the parameters (theory checks refuse
  // anything else).
  virtual bool convex() const = 0;

  // Mean loss over the batch; per-example losses are summed in batch order
  // and scaled by 1/n last.
  Tape::NodeId emit_batch_loss(Tape& tape, const Batch& batch) const;

  // One example's loss with its features given as tape nodes (inputs or
  // constants), so callers can differentiate w.r.t. the example.
  virtual Tape::NodeId emit_example_loss(Tape& tape, std::span<const Tape::NodeId> x,
                                         double label) const = 0;

  // Plain-arithmetic class prediction for accuracy reporting.
  virtual std::int32_t classify(const ParamVector& params, std::span<const double> x) const = 0;
};

// Builds the model and its seed-deterministic initial parameters: zeros for
// logistic, uniform(-1,1)/sqrt(fan_in) for mlp weights, none for quadratic.
std::pair<std::unique_ptr<Model>, ParamVector> build(const ModelSpec& spec, std::uint64_t seed);

struct ConvexConstants {
  double lipschitz = 0.0;        // L_g
  double strong_convexity = 0.0; // c_s
  double variance_const = 0.0;   // M
  double variance_slope = 0.0;   // M_v
  double optimal_loss = 0.0;     // L_*
  // M_g is structurally M_v + 1, never stored.
  double gradient_bound_slope() const { return variance_slope + 1.0; }
};

// For L = 0.5 theta'A theta: L_g = lambda_max(A), c_s = lambda_min(A), L_* = 0.
// Throws unless A is symmetric positive definite.
ConvexConstants quadratic_constants(std::span<const double> a, std::int32_t dim);

// For l2-regularized logistic loss: c_s = l2, L_g = l2 + lambda_max(X'X/N)/4,
// L_* from full-batch gradient descent run to gradient norm < 1e-10.
ConvexConstants logistic_constants(const Dataset& data, double l2);

}  // namespace absgd
