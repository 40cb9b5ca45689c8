#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "absgd/autodiff.hpp"
#include "absgd/dataset.hpp"
#include "absgd/linalg.hpp"
#include "absgd/rng.hpp"

using namespace absgd;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::trunc);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("load_csv one-hot encodes categorical columns") {
  const auto path = write_temp("absgd_cat.csv",
                               "class,cap,odor\n"
                               "e,x,a\n"
                               "p,b,a\n"
                               "e,x,n\n");
  CsvSchema schema;
  schema.label_column = "class";
  const CsvResult res = load_csv(path, schema);
  CHECK(res.data.n == 3);
  CHECK(res.data.d <= 4);
  CHECK(res.data.d == 4);  // two binary categorical features
  CHECK(res.label_values == std::vector<std::string>{"e", "p"});
  CHECK(res.data.labels == std::vector<double>{0, 1, 0});

  // Round trip: each block has exactly one hot indicator naming the value.
  for (std::int32_t i = 0; i < res.data.n; ++i) {
    for (const ColumnEncoding& enc : res.encodings) {
      int hot = -1;
      for (std::size_t k = 0; k < enc.values.size(); ++k)
        if (res.data.row(i)[enc.offset + static_cast<std::int32_t>(k)] == 1.0) {
          CHECK(hot == -1);
          hot = static_cast<int>(k);
        }
      CHECK(hot >= 0);
    }
  }
}

TEST_CASE("load_csv error paths carry row numbers") {
  CsvSchema schema;
  schema.label_column = "class";

  const auto empty = write_temp("absgd_empty.csv", "");
  CHECK_THROWS_AS(load_csv(empty, schema), std::runtime_error);

  const auto ragged = write_temp("absgd_ragged.csv", "class,a\ne,1\np\n");
  CHECK_THROWS_WITH_AS(load_csv(ragged, schema), doctest::Contains("row 3"),
                       std::runtime_error);

  const auto missing = write_temp("absgd_nolabel.csv", "x,y\n1,2\n");
  CHECK_THROWS_WITH_AS(load_csv(missing, schema), doctest::Contains("label"),
                       std::runtime_error);

  CsvSchema declared = schema;
  declared.categories["odor"] = {"a", "n"};
  const auto unknown = write_temp("absgd_unknown.csv", "class,odor\ne,a\np,z\n");
  CHECK_THROWS_WITH_AS(load_csv(unknown, declared), doctest::Contains("unknown category"),
                       std::runtime_error);
}

TEST_CASE("synth_blobs separation controls separability") {
  const Dataset same_seed_a = synth_blobs(100, 3, 2.0, 5);
  const Dataset same_seed_b = synth_blobs(100, 3, 2.0, 5);
  CHECK(same_seed_a.features == same_seed_b.features);
  CHECK(same_seed_a.labels == same_seed_b.labels);

  // Indistinguishable classes: the best linear rule is a coin flip.
  {
    Dataset flat = synth_blobs(10000, 2, 0.0, 11);
    ModelSpec spec;
    spec.kind = ModelKind::kLogistic;
    spec.dims = {2};
    spec.l2 = 0.01;
    auto [model, params] = build(spec, 0);
    const Batch full = gather_all(flat);
    for (int it = 0; it < 300; ++it) {
      const DiffResult res = evaluate(*model, params, full);
      for (std::int32_t i = 0; i < params.size(); ++i) params[i] -= 1.0 * res.grad[i];
    }
    std::int64_t correct = 0;
    for (std::int32_t i = 0; i < flat.n; ++i)
      if (model->classify(params, flat.row(i)) == static_cast<std::int32_t>(flat.label(i)))
        ++correct;
    const double acc = static_cast<double>(correct) / flat.n;
    CHECK(acc > 0.45);
    CHECK(acc < 0.55);
  }

  // Wide margin: essentially perfectly separable.
  {
    Dataset wide = synth_blobs(2000, 2, 10.0, 13);
    ModelSpec spec;
    spec.kind = ModelKind::kLogistic;
    spec.dims = {2};
    spec.l2 = 0.001;
    auto [model, params] = build(spec, 0);
    const Batch full = gather_all(wide);
    for (int it = 0; it < 500; ++it) {
      const DiffResult res = evaluate(*model, params, full);
      for (std::int32_t i = 0; i < params.size(); ++i) params[i] -= 2.0 * res.grad[i];
    }
    std::int64_t correct = 0;
    for (std::int32_t i = 0; i < wide.n; ++i)
      if (model->classify(params, wide.row(i)) == static_cast<std::int32_t>(wide.label(i)))
        ++correct;
    CHECK(static_cast<double>(correct) / wide.n > 0.99);
  }
}

TEST_CASE("split is a deterministic partition") {
  const Dataset data = synth_blobs(8724, 4, 1.0, 3);
  auto [train, val] = split(data, 6905, 42);
  CHECK(train.n == 6905);
  CHECK(val.n == 1819);

  auto [train2, val2] = split(data, 6905, 42);
  CHECK(train.features == train2.features);
  CHECK(val.features == val2.features);

  auto [tiny_train, tiny_val] = split(data, data.n - 1, 0);
  CHECK(tiny_val.n == 1);

  // Union restores the original multiset of rows.
  std::vector<double> merged;
  merged.insert(merged.end(), train.features.begin(), train.features.end());
  merged.insert(merged.end(), val.features.begin(), val.features.end());
  std::vector<double> original = data.features;
  std::sort(merged.begin(), merged.end());
  std::sort(original.begin(), original.end());
  CHECK(merged == original);

  CHECK_THROWS_AS(split(data, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(split(data, data.n, 0), std::invalid_argument);
}

TEST_CASE("standardize centers and scales on the train split only") {
  Dataset data = synth_blobs(512, 3, 2.0, 7);
  auto [train, val] = split(data, 400, 1);
  standardize(train, &val);
  for (std::int32_t j = 0; j < train.d; ++j) {
    double mean = 0.0, var = 0.0;
    for (std::int32_t i = 0; i < train.n; ++i) mean += train.row(i)[j];
    mean /= train.n;
    for (std::int32_t i = 0; i < train.n; ++i) {
      const double c = train.row(i)[j] - mean;
      var += c * c;
    }
    var /= train.n;
    CHECK(std::fabs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(val.feature_mean == train.feature_mean);
}
