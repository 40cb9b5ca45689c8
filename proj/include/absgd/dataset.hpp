#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace absgd {

// Row-major feature matrix with one real label per row.
struct Dataset {
  std::string name;
  std::int32_t n = 0;
  std::int32_t d = 0;
  std::vector<double> features;  // n * d
  std::vector<double> labels;    // n

  // Normalization metadata (per feature column; empty until standardized).
  std::vector<double> feature_mean;
  std::vector<double> feature_std;

  std::span<const double> row(std::int32_t i) const {
    return {features.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
  }
  double label(std::int32_t i) const { return labels[static_cast<std::size_t>(i)]; }
};

// A materialized mini-batch (features may be adversarially perturbed copies).
struct Batch {
  std::int32_t n = 0;
  std::int32_t d = 0;
  std::vector<double> x;  // n * d
  std::vector<double> y;  // n

  std::span<double> row(std::int32_t i) {
    return {x.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
  }
  std::span<const double> row(std::int32_t i) const {
    return {x.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
  }
};

Batch gather(const Dataset& data, std::span<const std::int32_t> idx);
Batch gather_all(const Dataset& data);

// CSV schema: the label column (mapped to {0,1}) plus optional declared
// category sets. Columns that fail to parse as numbers are one-hot encoded;
// when a column is declared here, any value outside its set is an error.
struct CsvSchema {
  std::string label_column;
  std::map<std::string, std::vector<std::string>> categories;
};

// One-hot block bookkeeping for encoded categorical columns.
struct ColumnEncoding {
  std::string column;
  std::int32_t offset = 0;                  // first feature index of the block
  std::vector<std::string> values;          // category -> indicator position
};

struct CsvResult {
  Dataset data;
  std::vector<ColumnEncoding> encodings;    // empty for numeric columns
  std::vector<std::string> label_values;    // category names mapped to 0/1, if categorical
};

// First row is the header. Throws with the offending row number on ragged
// rows, unknown categories (when declared), or a missing label column.
CsvResult load_csv(const std::string& path, const CsvSchema& schema);

// Two Gaussian classes at +/- separation/2 along a random unit direction.
Dataset synth_blobs(std::int32_t n, std::int32_t d, double separation, std::uint64_t seed);

// Deterministic shuffled split into (train, validation); a partition.
std::pair<Dataset, Dataset> split(const Dataset& data, std::int32_t n_train, std::uint64_t seed);

// Zero-mean unit-variance columns, statistics computed on `train` only and
// applied to both splits. Constant columns are left unscaled.
void standardize(Dataset& train, Dataset* validation);

}  // namespace absgd
