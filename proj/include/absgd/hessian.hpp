#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "absgd/model.hpp"

namespace absgd {

struct PowerConfig {
  std::int32_t max_iter = 100;
  double rel_tol = 1e-2;
  std::uint64_t seed = 0;
  // Samples used for HVPs; <= 0 selects min(1024, dataset size).
  std::int32_t hessian_batch = 0;
};

struct HessianEstimate {
  double eigenvalue = 0.0;           // signed; dominant in magnitude
  std::vector<double> eigenvector;   // unit 2-norm
  std::int32_t iterations = 0;       // matvec count
  double rel_change = 0.0;
  bool converged = false;
  std::vector<double> rayleigh_history;

  double magnitude() const { return eigenvalue < 0.0 ? -eigenvalue : eigenvalue; }
};

using HvpFn = std::function<std::vector<double>(std::span<const double>)>;

// Power iteration (normalized Gaussian start) for the dominant-in-magnitude
// eigenvalue of a symmetric operator. Stops when the relative change of the
// per-iteration magnitude estimate ||Hv|| stays below rel_tol; the sign
// comes from the Rayleigh quotient of the final iterate.
HessianEstimate top_eigenvalue(const HvpFn& apply, std::int32_t dim, const PowerConfig& cfg);

// Runs top_eigenvalue over autodiff HVPs on a fixed, seed-deterministic
// sample of the dataset.
HessianEstimate model_top_eigenvalue(const Model& model, const ParamVector& params,
                                     const Dataset& data, const PowerConfig& cfg);

// Restriction of the Hessian to the named parameter segments: vectors live
// on the block, products zero-extend, apply the full HVP, and restrict.
HessianEstimate block_top_eigenvalue(const Model& model, const ParamVector& params,
                                     const Dataset& data,
                                     std::span<const std::string> block,
                                     const PowerConfig& cfg);

}  // namespace absgd
