#pragma once

#include <span>
#include <vector>

#include "absgd/model.hpp"
#include "absgd/rng.hpp"

namespace absgd {

struct AdvConfig {
  double epsilon = 0.005;  // infinity-norm perturbation budget, >= 0
  double ratio = 0.2;      // fraction of each batch replaced, in [0, 1]
  bool clip01 = false;     // clamp perturbed inputs to [0, 1] (image-like data)
};

// epsilon * sign(grad_x loss), with sign(0) = 0. Components are exactly in
// {-epsilon, 0, +epsilon}.
std::vector<double> fgsm_perturbation(const Model& model, const ParamVector& params,
                                      std::span<const double> x, double label, double epsilon);

// One-step gradient-ascent adversarial example x + epsilon * sign(grad_x l).
std::vector<double> fgsm(const Model& model, const ParamVector& params,
                         std::span<const double> x, double label, double epsilon,
                         bool clip01 = false);

// Replaces exactly floor(ratio * n) examples of the batch (chosen from rng,
// no draws when the count is zero) with their FGSM versions, in place.
// Labels and batch size are unchanged. Returns the number replaced.
std::int32_t mix_adversarial(const Model& model, const ParamVector& params, Batch& batch,
                             const AdvConfig& cfg, Rng& rng);

}  // namespace absgd
