#include "absgd/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "absgd/rng.hpp"

namespace absgd {

Batch gather(const Dataset& data, std::span<const std::int32_t> idx) {
  Batch b;
  b.n = static_cast<std::int32_t>(idx.size());
  b.d = data.d;
  b.x.resize(static_cast<std::size_t>(b.n) * b.d);
  b.y.resize(static_cast<std::size_t>(b.n));
  for (std::int32_t i = 0; i < b.n; ++i) {
    const auto src = data.row(idx[static_cast<std::size_t>(i)]);
    std::copy(src.begin(), src.end(), b.x.begin() + static_cast<std::size_t>(i) * b.d);
    b.y[static_cast<std::size_t>(i)] = data.label(idx[static_cast<std::size_t>(i)]);
  }
  return b;
}

Batch gather_all(const Dataset& data) {
  Batch b;
  b.n = data.n;
  b.d = data.d;
  b.x = data.features;
  b.y = data.labels;
  return b;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_number(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size()) return false;
  *out = v;
  return true;
}

[[noreturn]] void csv_error(std::size_t row, const std::string& what) {
  throw std::runtime_error("csv parse error at row " + std::to_string(row) + ": " + what);
}

}  // namespace

CsvResult load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  const std::size_t n_cols = header.size();

  std::int64_t label_col = -1;
  for (std::size_t c = 0; c < n_cols; ++c)
    if (header[c] == schema.label_column) label_col = static_cast<std::int64_t>(c);
  if (label_col < 0)
    throw std::runtime_error("csv parse error at row 1: missing label column '" +
                             schema.label_column + "'");

  std::vector<std::vector<std::string>> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != n_cols)
      csv_error(row_no, "expected " + std::to_string(n_cols) + " cells, got " +
                            std::to_string(cells.size()));
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw std::runtime_error("csv file has no data rows: " + path);

  // A column is numeric iff every value parses; otherwise it is categorical.
  const std::size_t n_rows = rows.size();
  std::vector<bool> numeric(n_cols, true);
  for (std::size_t c = 0; c < n_cols; ++c) {
    double tmp;
    for (std::size_t r = 0; r < n_rows && numeric[c]; ++r)
      if (!parse_number(rows[r][c], &tmp)) numeric[c] = false;
  }

  // Category sets: declared in the schema, or discovered (sorted) from data.
  std::vector<std::vector<std::string>> cats(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    if (numeric[c] && static_cast<std::int64_t>(c) != label_col) continue;
    const auto declared = schema.categories.find(header[c]);
    if (declared != schema.categories.end()) {
      cats[c] = declared->second;
    } else if (!numeric[c]) {
      std::set<std::string> seen;
      for (const auto& r : rows) seen.insert(r[c]);
      cats[c].assign(seen.begin(), seen.end());
    }
  }
  auto cat_index = [&](std::size_t c, const std::string& v, std::size_t row) {
    const auto it = std::find(cats[c].begin(), cats[c].end(), v);
    if (it == cats[c].end())
      csv_error(row, "unknown category '" + v + "' in column '" + header[c] + "'");
    return static_cast<std::int32_t>(it - cats[c].begin());
  };

  CsvResult out;
  std::int32_t width = 0;
  for (std::size_t c = 0; c < n_cols; ++c) {
    if (static_cast<std::int64_t>(c) == label_col) continue;
    if (numeric[c]) {
      width += 1;
    } else {
      out.encodings.push_back({header[c], width, cats[c]});
      width += static_cast<std::int32_t>(cats[c].size());
    }
  }

  Dataset& data = out.data;
  data.name = path;
  data.n = static_cast<std::int32_t>(n_rows);
  data.d = width;
  data.features.assign(static_cast<std::size_t>(data.n) * width, 0.0);
  data.labels.resize(n_rows);

  const bool label_categorical = !numeric[static_cast<std::size_t>(label_col)] ||
                                 !cats[static_cast<std::size_t>(label_col)].empty();
  if (label_categorical) {
    const auto& lv = cats[static_cast<std::size_t>(label_col)];
    if (lv.size() != 2)
      throw std::runtime_error("label column '" + schema.label_column + "' must have 2 categories, has " +
                               std::to_string(lv.size()));
    out.label_values = lv;
  }

  for (std::size_t r = 0; r < n_rows; ++r) {
    double* dst = data.features.data() + r * static_cast<std::size_t>(width);
    std::int32_t f = 0;
    for (std::size_t c = 0; c < n_cols; ++c) {
      const std::string& cell = rows[r][c];
      if (static_cast<std::int64_t>(c) == label_col) {
        if (label_categorical) {
          data.labels[r] = static_cast<double>(cat_index(c, cell, r + 2));
        } else {
          double v;
          if (!parse_number(cell, &v)) csv_error(r + 2, "bad label '" + cell + "'");
          if (v != 0.0 && v != 1.0) csv_error(r + 2, "numeric label must be 0 or 1");
          data.labels[r] = v;
        }
        continue;
      }
      if (numeric[c]) {
        double v;
        if (!parse_number(cell, &v)) csv_error(r + 2, "bad number '" + cell + "'");
        if (!std::isfinite(v)) csv_error(r + 2, "non-finite feature");
        dst[f] = v;
        f += 1;
      } else {
        dst[f + cat_index(c, cell, r + 2)] = 1.0;
        f += static_cast<std::int32_t>(cats[c].size());
      }
    }
  }
  return out;
}

Dataset synth_blobs(std::int32_t n, std::int32_t d, double separation, std::uint64_t seed) {
  if (n < 2 || d < 1) throw std::invalid_argument("synth_blobs: need n >= 2 and d >= 1");
  Rng rng(seed);
  std::vector<double> dir(static_cast<std::size_t>(d));
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& u : dir) {
      u = rng.gaussian();
      norm2 += u * u;
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& u : dir) u *= inv;

  Dataset data;
  data.name = "blobs";
  data.n = n;
  data.d = d;
  data.features.resize(static_cast<std::size_t>(n) * d);
  data.labels.resize(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i) {
    const double label = static_cast<double>(i % 2);
    const double shift = (label > 0.5 ? 0.5 : -0.5) * separation;
    double* row = data.features.data() + static_cast<std::size_t>(i) * d;
    for (std::int32_t j = 0; j < d; ++j)
      row[j] = rng.gaussian() + shift * dir[static_cast<std::size_t>(j)];
    data.labels[static_cast<std::size_t>(i)] = label;
  }
  return data;
}

std::pair<Dataset, Dataset> split(const Dataset& data, std::int32_t n_train, std::uint64_t seed) {
  if (n_train < 1 || n_train >= data.n)
    throw std::invalid_argument("split: n_train must be in [1, N)");
  std::vector<std::int32_t> order(static_cast<std::size_t>(data.n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::int32_t>(order));

  auto take = [&](std::int32_t begin, std::int32_t count, const char* suffix) {
    Batch b = gather(data, std::span<const std::int32_t>(order).subspan(
                               static_cast<std::size_t>(begin), static_cast<std::size_t>(count)));
    Dataset out;
    out.name = data.name + suffix;
    out.n = b.n;
    out.d = b.d;
    out.features = std::move(b.x);
    out.labels = std::move(b.y);
    return out;
  };
  return {take(0, n_train, "/train"), take(n_train, data.n - n_train, "/val")};
}

void standardize(Dataset& train, Dataset* validation) {
  const std::int32_t d = train.d;
  std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
  std::vector<double> sd(static_cast<std::size_t>(d), 0.0);
  for (std::int32_t i = 0; i < train.n; ++i) {
    const auto row = train.row(i);
    for (std::int32_t j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] += row[j];
  }
  for (auto& m : mean) m /= train.n;
  for (std::int32_t i = 0; i < train.n; ++i) {
    const auto row = train.row(i);
    for (std::int32_t j = 0; j < d; ++j) {
      const double c = row[j] - mean[static_cast<std::size_t>(j)];
      sd[static_cast<std::size_t>(j)] += c * c;
    }
  }
  for (auto& s : sd) s = std::sqrt(s / train.n);

  auto apply = [&](Dataset& ds) {
    for (std::int32_t i = 0; i < ds.n; ++i) {
      double* row = ds.features.data() + static_cast<std::size_t>(i) * d;
      for (std::int32_t j = 0; j < d; ++j) {
        const double s = sd[static_cast<std::size_t>(j)];
        row[j] = (row[j] - mean[static_cast<std::size_t>(j)]) / (s > 0.0 ? s : 1.0);
      }
    }
    ds.feature_mean = mean;
    ds.feature_std = sd;
  };
  apply(train);
  if (validation) {
    if (validation->d != d) throw std::invalid_argument("standardize: dimension mismatch");
    apply(*validation);
  }
}

}  // namespace absgd
