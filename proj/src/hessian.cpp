#include "absgd/hessian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "absgd/autodiff.hpp"
#include "absgd/linalg.hpp"
#include "absgd/rng.hpp"

namespace absgd {

namespace {

std::vector<double> gaussian_unit_vector(std::int32_t dim, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  for (auto& x : v) x = rng.gaussian();
  const double n = norm2(v);
  if (n > 0.0)
    for (auto& x : v) x /= n;
  return v;
}

}  // namespace

HessianEstimate top_eigenvalue(const HvpFn& apply, std::int32_t dim, const PowerConfig& cfg) {
  if (dim < 1) throw std::invalid_argument("top_eigenvalue: dim must be >= 1");
  if (cfg.max_iter < 1 || cfg.rel_tol <= 0.0)
    throw std::invalid_argument("top_eigenvalue: need max_iter >= 1 and rel_tol > 0");

  Rng rng(cfg.seed);
  std::vector<double> v = gaussian_unit_vector(dim, rng);
  if (norm2(v) == 0.0) {
    Rng retry(cfg.seed + 1);
    v = gaussian_unit_vector(dim, retry);
    if (norm2(v) == 0.0)
      throw std::runtime_error("top_eigenvalue: start vector vanished twice");
  }

  // Readout: a two-dimensional Rayleigh-Ritz step over the span of the last
  // two power iterates (their H-images are already in hand, so it costs no
  // extra matvecs). A plain Rayleigh quotient stalls between near-tied
  // +/- extreme eigenvalues; the 2x2 Ritz problem separates that pair and
  // the reported value is still a Rayleigh quotient, of the Ritz vector.
  //
  // Stopping forecasts the remaining error from the geometric tail of the
  // estimate sequence; the raw change alone cannot distinguish slow
  // convergence from convergence.
  HessianEstimate est;
  std::vector<double> history;
  std::vector<double> prev_v, prev_w;
  for (std::int32_t k = 1; k <= cfg.max_iter; ++k) {
    std::vector<double> w = apply(v);
    if (static_cast<std::int32_t>(w.size()) != dim)
      throw std::runtime_error("top_eigenvalue: operator returned length " +
                               std::to_string(w.size()) + ", expected " + std::to_string(dim));
    const double rayleigh = dot(v, w);  // v is unit
    const double magnitude = norm2(w);
    est.iterations = k;
    est.rayleigh_history.push_back(rayleigh);
    est.eigenvector = v;

    if (magnitude == 0.0) {  // operator annihilates v: eigenvalue 0
      est.eigenvalue = 0.0;
      est.rel_change = 0.0;
      est.converged = true;
      return est;
    }

    double lam = std::copysign(magnitude, rayleigh == 0.0 ? 1.0 : rayleigh);
    if (!prev_v.empty()) {
      const double c = dot(v, prev_v);
      std::vector<double> b2(static_cast<std::size_t>(dim));
      for (std::int32_t i = 0; i < dim; ++i)
        b2[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)] -
                                          c * prev_v[static_cast<std::size_t>(i)];
      const double n2 = norm2(b2);
      if (n2 > 1e-10) {
        std::vector<double> h2(static_cast<std::size_t>(dim));
        for (std::int32_t i = 0; i < dim; ++i) {
          b2[static_cast<std::size_t>(i)] /= n2;
          h2[static_cast<std::size_t>(i)] = (w[static_cast<std::size_t>(i)] -
                                             c * prev_w[static_cast<std::size_t>(i)]) / n2;
        }
        const double s11 = dot(prev_v, prev_w);
        const double s12 = 0.5 * (dot(prev_v, h2) + dot(b2, prev_w));
        const double s22 = dot(b2, h2);
        const double mid = 0.5 * (s11 + s22);
        const double disc = std::hypot(0.5 * (s11 - s22), s12);
        const double hi = mid + disc;
        const double lo = mid - disc;
        lam = std::fabs(hi) >= std::fabs(lo) ? hi : lo;
      } else {
        lam = rayleigh;  // iterate already aligned with an eigenvector
      }
    }
    est.eigenvalue = lam;
    history.push_back(std::fabs(lam));

    const std::size_t h = history.size();
    if (h > 1)
      est.rel_change = std::fabs(history[h - 1] - history[h - 2]) / history[h - 1];
    // The floor of 10 matvecs rides out transient plateaus near interior
    // eigenvectors, which stall every sequence-based test for a few
    // iterations before the dominant mode takes over.
    if (h > 3 && k >= std::min<std::int32_t>(10, cfg.max_iter)) {
      // Largest recent difference ratio; early iterations mix fast
      // transients with the slow mode, so one ratio underestimates the tail.
      const double dk = std::fabs(history[h - 1] - history[h - 2]);
      double q = 0.0;
      bool usable = true;
      for (std::size_t i = h - 3; i < h - 1; ++i) {
        const double da = std::fabs(history[i + 1] - history[i]);
        const double db = std::fabs(history[i] - history[i - 1]);
        if (da == 0.0 && db == 0.0) continue;
        if (db == 0.0) {
          usable = false;
          break;
        }
        q = std::max(q, da / db);
      }
      if (usable && q < 0.995) {
        const double forecast = dk * q / (1.0 - q);
        if (forecast <= 0.5 * cfg.rel_tol * history[h - 1] && est.rel_change < cfg.rel_tol) {
          est.converged = true;
          break;
        }
      }
    }
    prev_v = v;
    prev_w = w;
    for (std::int32_t i = 0; i < dim; ++i) v[static_cast<std::size_t>(i)] =
        w[static_cast<std::size_t>(i)] / magnitude;
  }
  return est;
}

HessianEstimate model_top_eigenvalue(const Model& model, const ParamVector& params,
                                     const Dataset& data, const PowerConfig& cfg) {
  if (data.n < 1) throw std::invalid_argument("model_top_eigenvalue: empty dataset");
  const std::int32_t want = cfg.hessian_batch <= 0 ? std::min<std::int32_t>(1024, data.n)
                                                   : std::min(cfg.hessian_batch, data.n);
  Rng rng(cfg.seed);
  const auto idx = rng.sample_without_replacement(data.n, want);
  const Batch batch = gather(data, idx);
  HvpOperator op(model, params, batch);
  PowerConfig inner = cfg;
  inner.seed = cfg.seed ^ 0x9e3779b97f4a7c15ull;  // separate stream for the start vector
  return top_eigenvalue([&op](std::span<const double> v) { return op.apply(v); },
                        model.param_dim(), inner);
}

HessianEstimate block_top_eigenvalue(const Model& model, const ParamVector& params,
                                     const Dataset& data,
                                     std::span<const std::string> block,
                                     const PowerConfig& cfg) {
  if (block.empty()) throw std::invalid_argument("block_top_eigenvalue: empty block");
  std::vector<std::int32_t> index;
  for (const auto& name : block) {
    const Segment& seg = params.segment(name);  // throws on unknown name
    for (std::int32_t i = 0; i < seg.length; ++i) index.push_back(seg.offset + i);
  }
  std::sort(index.begin(), index.end());

  const std::int32_t want = cfg.hessian_batch <= 0 ? std::min<std::int32_t>(1024, data.n)
                                                   : std::min(cfg.hessian_batch, data.n);
  Rng rng(cfg.seed);
  const auto idx = rng.sample_without_replacement(data.n, want);
  const Batch batch = gather(data, idx);
  HvpOperator op(model, params, batch);

  const std::int32_t full_dim = model.param_dim();
  const auto block_dim = static_cast<std::int32_t>(index.size());
  auto restricted = [&](std::span<const double> vb) {
    std::vector<double> v(static_cast<std::size_t>(full_dim), 0.0);
    for (std::size_t i = 0; i < index.size(); ++i)
      v[static_cast<std::size_t>(index[i])] = vb[i];
    const auto w = op.apply(v);
    std::vector<double> wb(index.size());
    for (std::size_t i = 0; i < index.size(); ++i)
      wb[i] = w[static_cast<std::size_t>(index[i])];
    return wb;
  };
  PowerConfig inner = cfg;
  inner.seed = cfg.seed ^ 0x9e3779b97f4a7c15ull;
  return top_eigenvalue(restricted, block_dim, inner);
}

}  // namespace absgd
