#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace absgd {

// Named slice of the flat parameter vector (one model layer).
struct Segment {
  std::string name;
  std::int32_t offset = 0;
  std::int32_t length = 0;
};

// Flat model parameter state. Segments must tile [0, size) exactly.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(std::vector<double> values, std::vector<Segment> segments);

  // Single unnamed segment covering everything.
  static ParamVector flat(std::vector<double> values);

  std::int32_t size() const { return static_cast<std::int32_t>(values_.size()); }
  double operator[](std::int32_t i) const { return values_[static_cast<std::size_t>(i)]; }
  double& operator[](std::int32_t i) { return values_[static_cast<std::size_t>(i)]; }
  std::span<const double> view() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& segment(std::string_view name) const;  // throws on unknown name
  bool has_segment(std::string_view name) const;

  bool all_finite() const;

 private:
  std::vector<double> values_;
  std::vector<Segment> segments_;
};

}  // namespace absgd
