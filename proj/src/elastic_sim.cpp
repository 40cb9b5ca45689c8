#include "absgd/elastic_sim.hpp"

#include <cmath>
#include <stdexcept>

namespace absgd {

void CostModel::validate() const {
  if (per_sample_compute < 0.0 || allreduce_base < 0.0 || allreduce_per_param < 0.0 ||
      resize_latency < 0.0 || hessian_matvec_cost < 0.0)
    throw std::invalid_argument("cost model: all costs must be >= 0");
  if (samples_per_gpu < 1) throw std::invalid_argument("cost model: samples_per_gpu must be >= 1");
}

double allreduce_seconds(const CostModel& cost, std::int32_t workers, std::int64_t params) {
  if (workers < 1) throw std::invalid_argument("allreduce: zero workers");
  const double frac = static_cast<double>(workers - 1) / static_cast<double>(workers);
  return cost.allreduce_base + cost.allreduce_per_param * frac * static_cast<double>(params);
}

namespace {

std::int32_t worker_count(std::int64_t batch, std::int32_t samples_per_gpu) {
  if (batch < 1) throw std::invalid_argument("simulate: batch sizes must be >= 1");
  return static_cast<std::int32_t>((batch + samples_per_gpu - 1) / samples_per_gpu);
}

}  // namespace

TimeBreakdown simulate(const SimSchedule& schedule, const CostModel& cost) {
  cost.validate();
  if (schedule.epoch_batches.empty())
    throw std::invalid_argument("simulate: schedule must cover at least one epoch");
  if (schedule.dataset_size < 1) throw std::invalid_argument("simulate: empty dataset");

  TimeBreakdown t;
  std::int32_t prev_workers = -1;
  const double n = static_cast<double>(schedule.dataset_size);
  for (const std::int32_t batch : schedule.epoch_batches) {
    const std::int32_t w = worker_count(batch, cost.samples_per_gpu);
    if (w < 1) throw std::invalid_argument("simulate: zero workers");
    const auto steps = static_cast<double>(
        (schedule.dataset_size + batch - 1) / batch);

    t.comp += cost.per_sample_compute * n / static_cast<double>(w);
    t.comm += steps * allreduce_seconds(cost, w, schedule.param_count);
    if (prev_workers >= 0 && w != prev_workers) t.resize += cost.resize_latency;
    prev_workers = w;

    if (schedule.hessian_matvecs > 0) {
      const double per_matvec =
          cost.hessian_matvec_cost * static_cast<double>(schedule.hessian_batch) /
              static_cast<double>(w) +
          allreduce_seconds(cost, w, schedule.param_count);
      t.hessian += schedule.hessian_matvecs * per_matvec;
    }
  }
  t.total = t.comp + t.comm + t.resize + t.hessian;
  return t;
}

TimeBreakdown breakdown_total(double comp, double comm, double resize, double hessian) {
  if (comp < 0.0 || comm < 0.0 || resize < 0.0 || hessian < 0.0)
    throw std::invalid_argument("breakdown_total: components must be >= 0");
  TimeBreakdown t{comp, comm, resize, hessian, 0.0};
  t.total = comp + comm + resize + hessian;
  return t;
}

double speedup(const TimeBreakdown& breakdown, double baseline_total) {
  if (!(baseline_total > 0.0)) throw std::invalid_argument("speedup: baseline must be > 0");
  return std::round(baseline_total / breakdown.total * 100.0) / 100.0;
}

CostModel calibrate(std::span<const CalibrationRow> rows, std::int32_t samples_per_gpu) {
  if (rows.empty()) throw std::invalid_argument("calibrate: need at least one row");

  struct Features {
    double comp_coeff = 0.0;     // sum over epochs of N / w
    double steps = 0.0;          // sum of per-epoch step counts
    double comm_weight = 0.0;    // sum of steps * (w-1)/w * P
    double resizes = 0.0;        // worker-count changes
    double hess_samples = 0.0;   // sum of matvecs * hessian_batch / w
    double hess_base = 0.0;      // matvec count (pays allreduce_base each)
    double hess_weight = 0.0;    // sum of matvecs * (w-1)/w * P
  };
  std::vector<Features> feats(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const SimSchedule& s = rows[r].schedule;
    if (s.epoch_batches.empty() || s.dataset_size < 1)
      throw std::invalid_argument("calibrate: bad schedule in row " + std::to_string(r));
    Features& f = feats[r];
    std::int32_t prev = -1;
    for (const std::int32_t batch : s.epoch_batches) {
      const std::int32_t w = worker_count(batch, samples_per_gpu);
      const auto steps = static_cast<double>((s.dataset_size + batch - 1) / batch);
      const double frac = static_cast<double>(w - 1) / static_cast<double>(w);
      f.comp_coeff += static_cast<double>(s.dataset_size) / w;
      f.steps += steps;
      f.comm_weight += steps * frac * static_cast<double>(s.param_count);
      if (prev >= 0 && w != prev) f.resizes += 1.0;
      prev = w;
      if (s.hessian_matvecs > 0) {
        f.hess_samples += s.hessian_matvecs * static_cast<double>(s.hessian_batch) / w;
        f.hess_base += s.hessian_matvecs;
        f.hess_weight += s.hessian_matvecs * frac * static_cast<double>(s.param_count);
      }
    }
  }

  auto ls_single = [](std::span<const double> coeff, std::span<const double> target) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < coeff.size(); ++i) {
      num += coeff[i] * target[i];
      den += coeff[i] * coeff[i];
    }
    return den > 0.0 ? std::max(0.0, num / den) : 0.0;
  };

  CostModel cost;
  cost.samples_per_gpu = samples_per_gpu;

  std::vector<double> coeff(rows.size()), target(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    coeff[r] = feats[r].comp_coeff;
    target[r] = rows[r].target.comp;
  }
  cost.per_sample_compute = ls_single(coeff, target);

  // comm = a * steps + b * comm_weight: 2x2 normal equations, falling back
  // to single-parameter fits when a coefficient leaves the cone.
  double saa = 0.0, sab = 0.0, sbb = 0.0, sat = 0.0, sbt = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double sa = feats[r].steps, sb = feats[r].comm_weight, tt = rows[r].target.comm;
    saa += sa * sa;
    sab += sa * sb;
    sbb += sb * sb;
    sat += sa * tt;
    sbt += sb * tt;
  }
  const double det = saa * sbb - sab * sab;
  double a = 0.0, b = 0.0;
  if (det > 1e-12 * saa * sbb) {
    a = (sat * sbb - sbt * sab) / det;
    b = (saa * sbt - sab * sat) / det;
  }
  if (a < 0.0 || b < 0.0 || det <= 1e-12 * saa * sbb) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      coeff[r] = feats[r].comm_weight;
      target[r] = rows[r].target.comm;
    }
    b = ls_single(coeff, target);
    a = 0.0;
    if (b == 0.0) {
      for (std::size_t r = 0; r < rows.size(); ++r) coeff[r] = feats[r].steps;
      a = ls_single(coeff, target);
    }
  }
  cost.allreduce_base = a;
  cost.allreduce_per_param = b;

  for (std::size_t r = 0; r < rows.size(); ++r) {
    coeff[r] = feats[r].resizes;
    target[r] = rows[r].target.resize;
  }
  cost.resize_latency = ls_single(coeff, target);

  // Hessian matvec cost from rows that measured curvature, after removing
  // the fitted communication share.
  double hnum = 0.0, hden = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (feats[r].hess_samples <= 0.0) continue;
    const double comm_share = a * feats[r].hess_base + b * feats[r].hess_weight;
    hnum += feats[r].hess_samples * (rows[r].target.hessian - comm_share);
    hden += feats[r].hess_samples * feats[r].hess_samples;
  }
  cost.hessian_matvec_cost = hden > 0.0 ? std::max(0.0, hnum / hden) : 0.0;

  cost.validate();
  return cost;
}

}  // namespace absgd
