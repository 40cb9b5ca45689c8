#include "absgd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace absgd {

static_assert(std::endian::native == std::endian::little,
              "checkpoint i/o assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'B', 'S', 'G', 'D', 'C', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamVector& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, std::uint32_t{0});

  write_pod(out, static_cast<std::uint64_t>(params.segments().size()));
  for (const Segment& s : params.segments()) {
    write_pod(out, static_cast<std::uint32_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    write_pod(out, static_cast<std::uint64_t>(s.offset));
    write_pod(out, static_cast<std::uint64_t>(s.length));
  }
  write_pod(out, static_cast<std::uint64_t>(params.size()));
  out.write(reinterpret_cast<const char*>(params.values().data()),
            static_cast<std::streamsize>(params.values().size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

ParamVector load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  read_pod<std::uint32_t>(in);  // reserved

  const auto n_segments = read_pod<std::uint64_t>(in);
  std::vector<Segment> segments;
  segments.reserve(n_segments);
  for (std::uint64_t i = 0; i < n_segments; ++i) {
    const auto name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto offset = read_pod<std::uint64_t>(in);
    const auto length = read_pod<std::uint64_t>(in);
    segments.push_back({std::move(name), static_cast<std::int32_t>(offset),
                        static_cast<std::int32_t>(length)});
  }
  const auto n_values = read_pod<std::uint64_t>(in);
  std::vector<double> values(n_values);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(n_values * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated values in " + path);
  return ParamVector(std::move(values), std::move(segments));
}

}  // namespace absgd
