#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absgd/model.hpp"
#include "absgd/param_vector.hpp"

namespace absgd {

// Per-step batch sizes b_1..b_t with the base step size eta0; the realized
// learning rate at step k is b_k * eta0.
struct BatchSchedule {
  std::vector<std::int32_t> batches;
  double eta0 = 0.0;

  std::int32_t b_max() const;
};

// Step-size ceiling 1 / (L_g * (M_v + B_max)).
double eta0_max(const ConvexConstants& c, std::int32_t b_max);

// Smallest nonnegative (M, M_v) with V(theta) <= M + M_v * ||grad L(theta)||
// across the sampled parameter points (least total slack over the feasible
// cone), inflated by 5%. V is the per-example gradient variance
// E||g_i||^2 - ||mean g_i||^2 over the dataset. Refuses non-convex models.
std::pair<double, double> estimate_variance_bounds(const Model& model, const Dataset& data,
                                                   std::span<const ParamVector> sample_thetas);

// Expected-optimality-gap bound sequence:
//   bound_t = prod_{k<=t} (1 - b_k eta0 c_s) * (gap0 - floor) + floor,
//   floor   = eta0 L_g M / (2 c_s),  bound_0 = gap0.
// Throws "step size violates contraction" unless every factor is in (0, 1].
std::vector<double> theorem_bound(const ConvexConstants& c, const BatchSchedule& sched,
                                  double gap0);

struct Lemma3Report {
  bool pass = true;
  double worst_slack = 0.0;        // min over samples of ||g||^2 + 1e-10 - 2c_s(L - L_*)
  std::int64_t violating_index = -1;
};

// Checks 2 c_s (L(theta) - L_*) <= ||grad L(theta)||^2 + 1e-10 at each
// sampled theta. A violation signals a bad c_s or L_* estimate.
Lemma3Report check_lemma3(const Model& model, const ConvexConstants& c, const Dataset& data,
                          std::span<const ParamVector> thetas);

struct Lemma4Row {
  std::int32_t batch_size = 0;
  double measured_variance = 0.0;
  double bound = 0.0;              // (M + M_v ||grad L||) / |B|
  double std_error = 0.0;
  bool pass = false;
};

struct Lemma4Report {
  bool pass = true;
  std::vector<Lemma4Row> rows;
};

// Measures Var(grad L_B) over with-replacement batches (every batch when
// |B| = 1, otherwise `resamples` of them) against the Lemma bound plus a
// 3-standard-error Monte Carlo margin.
Lemma4Report check_lemma4(const Model& model, const Dataset& data, const ParamVector& theta,
                          std::span<const std::int32_t> batch_sizes, const ConvexConstants& c,
                          std::int64_t resamples = 10000, std::uint64_t seed = 0);

struct ValidationReport {
  bool pass = true;
  std::int64_t first_violation = -1;  // step index, -1 when none
  std::int32_t seeds = 0;
  std::vector<double> mean_gap;
  std::vector<double> bound;
  std::vector<double> margin;  // 3 * standard error of the mean
};

// Runs `seeds` independent theory-mode trajectories from theta0 and asserts
// mean(L(theta_t)) - L_* <= bound_t + margin_t at every step. Refuses step
// sizes above eta0_max and non-convex models.
ValidationReport validate_run(const Model& model, const Dataset& data,
                              const ConvexConstants& c, const BatchSchedule& sched,
                              const ParamVector& theta0, std::int32_t seeds,
                              std::uint64_t seed0);

}  // namespace absgd
