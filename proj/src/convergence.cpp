#include "absgd/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "absgd/autodiff.hpp"
#include "absgd/linalg.hpp"
#include "absgd/rng.hpp"
#include "absgd/trainer.hpp"

namespace absgd {

std::int32_t BatchSchedule::b_max() const {
  std::int32_t m = 1;
  for (const auto b : batches) m = std::max(m, b);
  return m;
}

double eta0_max(const ConvexConstants& c, std::int32_t b_max) {
  if (!(c.lipschitz > 0.0) || b_max < 1)
    throw std::invalid_argument("eta0_max: need L_g > 0 and B_max >= 1");
  return 1.0 / (c.lipschitz * (c.variance_slope + static_cast<double>(b_max)));
}

namespace {

// Variance of the per-example gradient at theta, and ||grad L(theta)||.
std::pair<double, double> gradient_variance(const Model& model, const ParamVector& theta,
                                            const Batch& full) {
  const auto grads = per_example_gradients(model, theta, full);
  const std::size_t dim = grads.front().size();
  std::vector<double> mean(dim, 0.0);
  double second = 0.0;
  for (const auto& g : grads) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += g[j];
    second += dot(g, g);
  }
  for (auto& m : mean) m /= static_cast<double>(grads.size());
  second /= static_cast<double>(grads.size());
  const double mean_sq = dot(mean, mean);
  return {std::max(0.0, second - mean_sq), std::sqrt(mean_sq)};
}

}  // namespace

std::pair<double, double> estimate_variance_bounds(const Model& model, const Dataset& data,
                                                   std::span<const ParamVector> sample_thetas) {
  if (!model.convex())
    throw std::invalid_argument("estimate_variance_bounds: refused for non-convex models");
  if (sample_thetas.empty())
    throw std::invalid_argument("estimate_variance_bounds: need at least one sample point");
  const Batch full = gather_all(data);

  std::vector<double> v(sample_thetas.size());  // variance
  std::vector<double> g(sample_thetas.size());  // gradient norm
  for (std::size_t k = 0; k < sample_thetas.size(); ++k) {
    const auto [vk, gk] = gradient_variance(model, sample_thetas[k], full);
    v[k] = vk;
    g[k] = gk;
  }

  // Least-total-slack linear fit over the nonnegative cone: minimize
  // sum_j (M + M_v g_j - v_j) subject to M + M_v g_j >= v_j, M, M_v >= 0.
  // The optimum sits on a vertex: M-only, M_v-only, or a two-point line.
  const std::size_t n = v.size();
  auto feasible = [&](double m, double mv) {
    if (m < 0.0 || mv < 0.0) return false;
    for (std::size_t j = 0; j < n; ++j)
      if (m + mv * g[j] < v[j] - 1e-12 * (1.0 + std::fabs(v[j]))) return false;
    return true;
  };
  double sum_g = 0.0;
  for (const double x : g) sum_g += x;
  auto objective = [&](double m, double mv) { return m * static_cast<double>(n) + mv * sum_g; };

  double best_m = *std::max_element(v.begin(), v.end());
  double best_mv = 0.0;
  double best_obj = objective(best_m, best_mv);
  auto consider = [&](double m, double mv) {
    if (!feasible(m, mv)) return;
    const double obj = objective(m, mv);
    if (obj < best_obj - 1e-15 * (1.0 + std::fabs(best_obj)) ||
        (std::fabs(obj - best_obj) <= 1e-15 * (1.0 + std::fabs(best_obj)) && mv < best_mv)) {
      best_obj = obj;
      best_m = m;
      best_mv = mv;
    }
  };
  if (std::all_of(g.begin(), g.end(), [](double x) { return x > 0.0; })) {
    double slope = 0.0;
    for (std::size_t j = 0; j < n; ++j) slope = std::max(slope, v[j] / g[j]);
    consider(0.0, slope);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (g[i] == g[j]) continue;
      const double mv = (v[j] - v[i]) / (g[j] - g[i]);
      consider(v[i] - mv * g[i], mv);
    }

  return {best_m * 1.05, best_mv * 1.05};
}

std::vector<double> theorem_bound(const ConvexConstants& c, const BatchSchedule& sched,
                                  double gap0) {
  if (!(c.strong_convexity > 0.0) || c.lipschitz < c.strong_convexity)
    throw std::invalid_argument("theorem_bound: need L_g >= c_s > 0");
  if (gap0 < 0.0) throw std::invalid_argument("theorem_bound: gap0 must be >= 0");
  const double floor =
      sched.eta0 * c.lipschitz * c.variance_const / (2.0 * c.strong_convexity);
  std::vector<double> bound;
  bound.reserve(sched.batches.size() + 1);
  bound.push_back(gap0);
  double prod = 1.0;
  for (const std::int32_t b : sched.batches) {
    const double factor = 1.0 - static_cast<double>(b) * sched.eta0 * c.strong_convexity;
    if (!(factor > 0.0) || factor > 1.0)
      throw std::invalid_argument("theorem_bound: step size violates contraction");
    prod *= factor;
    bound.push_back(prod * (gap0 - floor) + floor);
  }
  return bound;
}

Lemma3Report check_lemma3(const Model& model, const ConvexConstants& c, const Dataset& data,
                          std::span<const ParamVector> thetas) {
  if (!model.convex()) throw std::invalid_argument("check_lemma3: refused for non-convex models");
  const Batch full = gather_all(data);
  Lemma3Report report;
  report.worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const DiffResult res = evaluate(model, thetas[k], full);
    const double gap = res.loss - c.optimal_loss;
    const double slack = dot(res.grad, res.grad) + 1e-10 - 2.0 * c.strong_convexity * gap;
    if (slack < report.worst_slack) report.worst_slack = slack;
    if (slack < 0.0 && report.violating_index < 0) {
      report.pass = false;
      report.violating_index = static_cast<std::int64_t>(k);
    }
  }
  return report;
}

Lemma4Report check_lemma4(const Model& model, const Dataset& data, const ParamVector& theta,
                          std::span<const std::int32_t> batch_sizes, const ConvexConstants& c,
                          std::int64_t resamples, std::uint64_t seed) {
  const Batch full = gather_all(data);
  const DiffResult full_res = evaluate(model, theta, full);
  const double grad_norm = norm2(full_res.grad);

  // Per-example gradients once; a with-replacement batch mean is then a mean
  // of rows.
  const auto grads = per_example_gradients(model, theta, full);
  const std::size_t dim = full_res.grad.size();

  Lemma4Report report;
  Rng rng(seed);
  for (const std::int32_t b : batch_sizes) {
    if (b < 1 || b > data.n)
      throw std::invalid_argument("check_lemma4: batch sizes must be within [1, N]");
    Lemma4Row row;
    row.batch_size = b;
    row.bound = (c.variance_const + c.variance_slope * grad_norm) / static_cast<double>(b);

    std::vector<double> sq_dev;
    if (b == 1) {  // enumerate: every single-example batch, uniformly likely
      sq_dev.reserve(static_cast<std::size_t>(data.n));
      for (const auto& gi : grads) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          const double d = gi[j] - full_res.grad[j];
          s += d * d;
        }
        sq_dev.push_back(s);
      }
    } else {
      sq_dev.reserve(static_cast<std::size_t>(resamples));
      std::vector<double> mean(dim);
      for (std::int64_t r = 0; r < resamples; ++r) {
        std::fill(mean.begin(), mean.end(), 0.0);
        for (std::int32_t i = 0; i < b; ++i) {
          const auto pick = static_cast<std::size_t>(rng.bounded(
              static_cast<std::uint64_t>(data.n)));
          for (std::size_t j = 0; j < dim; ++j) mean[j] += grads[pick][j];
        }
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          const double d = mean[j] / b - full_res.grad[j];
          s += d * d;
        }
        sq_dev.push_back(s);
      }
    }

    double v = 0.0;
    for (const double s : sq_dev) v += s;
    v /= static_cast<double>(sq_dev.size());
    double var_of_sq = 0.0;
    for (const double s : sq_dev) var_of_sq += (s - v) * (s - v);
    var_of_sq /= static_cast<double>(sq_dev.size());
    row.measured_variance = v;
    row.std_error = std::sqrt(var_of_sq / static_cast<double>(sq_dev.size()));
    row.pass = v <= row.bound + 3.0 * row.std_error;
    if (!row.pass) report.pass = false;
    report.rows.push_back(row);
  }
  return report;
}

ValidationReport validate_run(const Model& model, const Dataset& data,
                              const ConvexConstants& c, const BatchSchedule& sched,
                              const ParamVector& theta0, std::int32_t seeds,
                              std::uint64_t seed0) {
  if (!model.convex()) throw std::invalid_argument("validate_run: refused for non-convex models");
  if (seeds < 1) throw std::invalid_argument("validate_run: need at least one seed");
  const double ceiling = eta0_max(c, sched.b_max());
  if (sched.eta0 > ceiling)
    throw std::invalid_argument("validate_run: eta0 " + std::to_string(sched.eta0) +
                                " exceeds the step-size ceiling " + std::to_string(ceiling));

  const std::size_t horizon = sched.batches.size() + 1;
  std::vector<double> sum(horizon, 0.0);
  std::vector<double> sum_sq(horizon, 0.0);
  for (std::int32_t s = 0; s < seeds; ++s) {
    const auto losses = run_theory(model, theta0, data, sched.batches, sched.eta0,
                                   seed0 + static_cast<std::uint64_t>(s));
    for (std::size_t t = 0; t < horizon; ++t) {
      const double gap = losses[t] - c.optimal_loss;
      sum[t] += gap;
      sum_sq[t] += gap * gap;
    }
  }

  ValidationReport report;
  report.seeds = seeds;
  report.mean_gap.resize(horizon);
  report.margin.resize(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    const double mean = sum[t] / seeds;
    report.mean_gap[t] = mean;
    const double var = std::max(0.0, sum_sq[t] / seeds - mean * mean);
    report.margin[t] = seeds > 1 ? 3.0 * std::sqrt(var / seeds) : 0.0;
  }
  report.bound = theorem_bound(c, sched, report.mean_gap[0]);

  for (std::size_t t = 0; t < horizon; ++t) {
    const double allowance =
        report.margin[t] + 1e-12 * std::max(1.0, std::fabs(report.bound[t]));
    if (report.mean_gap[t] > report.bound[t] + allowance) {
      report.pass = false;
      report.first_violation = static_cast<std::int64_t>(t);
      break;
    }
  }
  return report;
}

}  // namespace absgd
