#include "absgd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace absgd {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::vector<double> symmetric_eigenvalues(std::span<const double> a, std::int32_t n) {
  if (n < 1 || a.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("symmetric_eigenvalues: bad dimensions");
  std::vector<double> m(a.begin(), a.end());
  auto at = [&](std::int32_t i, std::int32_t j) -> double& {
    return m[static_cast<std::size_t>(i) * n + j];
  };

  double scale = 0.0;
  for (double v : m) scale = std::max(scale, std::fabs(v));
  for (std::int32_t i = 0; i < n; ++i)
    for (std::int32_t j = i + 1; j < n; ++j)
      if (std::fabs(at(i, j) - at(j, i)) > 1e-9 * (1.0 + scale))
        throw std::invalid_argument("symmetric_eigenvalues: matrix is not symmetric");

  const std::int32_t max_sweeps = 100;
  for (std::int32_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::int32_t i = 0; i < n; ++i)
      for (std::int32_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off <= 1e-30 * (1.0 + scale * scale)) break;

    for (std::int32_t p = 0; p < n - 1; ++p) {
      for (std::int32_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::int32_t k = 0; k < n; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::int32_t k = 0; k < n; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }

  std::vector<double> eig(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace absgd
