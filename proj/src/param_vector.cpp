#include "absgd/param_vector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace absgd {

ParamVector::ParamVector(std::vector<double> values, std::vector<Segment> segments)
    : values_(std::move(values)), segments_(std::move(segments)) {
  // Segments must tile [0, size) exactly, in order, without overlap.
  std::int32_t cursor = 0;
  for (const Segment& s : segments_) {
    if (s.offset != cursor || s.length < 0)
      throw std::invalid_argument("ParamVector: segments must tile the vector (bad segment '" +
                                  s.name + "')");
    cursor += s.length;
  }
  if (cursor != size())
    throw std::invalid_argument("ParamVector: segments cover " + std::to_string(cursor) +
                                " of " + std::to_string(size()) + " values");
}

ParamVector ParamVector::flat(std::vector<double> values) {
  const auto n = static_cast<std::int32_t>(values.size());
  return ParamVector(std::move(values), {Segment{"params", 0, n}});
}

const Segment& ParamVector::segment(std::string_view name) const {
  for (const Segment& s : segments_)
    if (s.name == name) return s;
  throw std::invalid_argument("ParamVector: unknown segment '" + std::string(name) + "'");
}

bool ParamVector::has_segment(std::string_view name) const {
  return std::any_of(segments_.begin(), segments_.end(),
                     [&](const Segment& s) { return s.name == name; });
}

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace absgd
