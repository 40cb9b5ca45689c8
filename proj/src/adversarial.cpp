#include "absgd/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "absgd/autodiff.hpp"

namespace absgd {

std::vector<double> fgsm_perturbation(const Model& model, const ParamVector& params,
                                      std::span<const double> x, double label, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("fgsm: epsilon must be >= 0");
  std::vector<double> p = input_gradient(model, params, x, label);
  for (auto& g : p) g = g > 0.0 ? epsilon : (g < 0.0 ? -epsilon : 0.0);
  return p;
}

std::vector<double> fgsm(const Model& model, const ParamVector& params,
                         std::span<const double> x, double label, double epsilon, bool clip01) {
  const auto p = fgsm_perturbation(model, params, x, label, epsilon);
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (p[j] != 0.0) out[j] += p[j];
    if (clip01) out[j] = std::clamp(out[j], 0.0, 1.0);
  }
  return out;
}

std::int32_t mix_adversarial(const Model& model, const ParamVector& params, Batch& batch,
                             const AdvConfig& cfg, Rng& rng) {
  if (batch.n < 1) throw std::invalid_argument("mix_adversarial: empty batch");
  if (cfg.ratio < 0.0 || cfg.ratio > 1.0)
    throw std::invalid_argument("mix_adversarial: ratio must be in [0, 1]");
  const auto count = static_cast<std::int32_t>(std::floor(cfg.ratio * batch.n));
  if (count == 0) return 0;
  const auto chosen = rng.sample_without_replacement(batch.n, count);
  for (const std::int32_t i : chosen) {
    const auto row = batch.row(i);
    const auto x_adv =
        fgsm(model, params, row, batch.y[static_cast<std::size_t>(i)], cfg.epsilon, cfg.clip01);
    std::copy(x_adv.begin(), x_adv.end(), row.begin());
  }
  return count;
}

}  // namespace absgd
