#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace absgd {

// Linear cluster cost model. All-reduce time is a + b * (w-1)/w * P for w
// workers and P parameters (ring-style bandwidth term with a latency base).
struct CostModel {
  double per_sample_compute = 0.0;   // seconds per sample per worker
  double allreduce_base = 0.0;       // a
  double allreduce_per_param = 0.0;  // b
  double resize_latency = 0.0;       // seconds per worker-count change
  double hessian_matvec_cost = 0.0;  // seconds per sample per matvec
  std::int32_t samples_per_gpu = 256;

  void validate() const;
};

double allreduce_seconds(const CostModel& cost, std::int32_t workers, std::int64_t params);

struct TimeBreakdown {
  double comp = 0.0;
  double comm = 0.0;
  double resize = 0.0;
  double hessian = 0.0;
  double total = 0.0;  // always the exact component sum
};

// One training scenario: per-epoch batch sizes plus the curvature
// measurement profile (matvecs per end-of-epoch measurement; 0 disables).
struct SimSchedule {
  std::string name;
  std::vector<std::int32_t> epoch_batches;
  std::int64_t dataset_size = 0;
  std::int64_t param_count = 0;
  std::int32_t hessian_matvecs = 0;
  std::int32_t hessian_batch = 0;
};

// Per-epoch accounting: workers = ceil(batch / samples_per_gpu); compute is
// work-conserving (N / workers per epoch), each step pays one all-reduce,
// every worker-count change pays resize_latency, and Hessian matvecs run on
// the current cluster with gradient accumulation when the batch is small.
TimeBreakdown simulate(const SimSchedule& schedule, const CostModel& cost);

// Exact component sum; negative inputs are an error.
TimeBreakdown breakdown_total(double comp, double comm, double resize, double hessian);

// baseline_total / breakdown.total, rounded to 2 decimals.
double speedup(const TimeBreakdown& breakdown, double baseline_total);

struct CalibrationRow {
  SimSchedule schedule;
  TimeBreakdown target;
};

// Fits the cost parameters to measured breakdown rows, one least-squares
// problem per component family (comm solves its 2x2 system exactly when the
// result stays nonnegative). Rows without Hessian work are excluded from the
// matvec-cost fit.
CostModel calibrate(std::span<const CalibrationRow> rows, std::int32_t samples_per_gpu);

}  // namespace absgd
