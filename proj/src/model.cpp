#include "absgd/model.hpp"

#include <cmath>
#include <stdexcept>

#include "absgd/linalg.hpp"
#include "absgd/rng.hpp"

namespace absgd {

Tape::NodeId Model::emit_batch_loss(Tape& tape, const Batch& batch) const {
  if (batch.n < 1) throw std::invalid_argument("emit_batch_loss: empty batch");
  if (batch.d != input_dim())
    throw std::invalid_argument("emit_batch_loss: feature dimension mismatch");
  tape.reserve(tape.size() +
               static_cast<std::size_t>(batch.n) * (4 * static_cast<std::size_t>(batch.d) + 32));
  Tape::NodeId sum = -1;
  std::vector<Tape::NodeId> xs(static_cast<std::size_t>(batch.d));
  for (std::int32_t i = 0; i < batch.n; ++i) {
    const auto row = batch.row(i);
    for (std::int32_t j = 0; j < batch.d; ++j)
      xs[static_cast<std::size_t>(j)] = tape.constant(row[j]);
    const Tape::NodeId li = emit_example_loss(tape, xs, batch.y[static_cast<std::size_t>(i)]);
    sum = (sum < 0) ? li : tape.add(sum, li);
  }
  return tape.mul(sum, tape.constant(1.0 / batch.n));
}

namespace {

class QuadraticModel final : public Model {
 public:
  QuadraticModel(std::vector<double> a, std::int32_t dim) : a_(std::move(a)), dim_(dim) {}

  std::int32_t param_dim() const override { return dim_; }
  std::int32_t input_dim() const override { return dim_; }
  std::vector<Segment> param_segments() const override { return {{"params", 0, dim_}}; }
  bool convex() const override { return true; }

  Tape::NodeId emit_example_loss(Tape& tape, std::span<const Tape::NodeId> x,
                                 double /*label*/) const override {
    // 0.5 theta'A theta + x'theta, with x the example's linear noise term.
    Tape::NodeId quad = -1;
    for (std::int32_t i = 0; i < dim_; ++i) {
      Tape::NodeId inner = -1;
      for (std::int32_t j = 0; j < dim_; ++j) {
        const Tape::NodeId t = tape.mul(tape.constant(a_[static_cast<std::size_t>(i) * dim_ + j]),
                                        static_cast<Tape::NodeId>(j));
        inner = (inner < 0) ? t : tape.add(inner, t);
      }
      const Tape::NodeId t = tape.mul(static_cast<Tape::NodeId>(i), inner);
      quad = (quad < 0) ? t : tape.add(quad, t);
    }
    Tape::NodeId loss = tape.mul(tape.constant(0.5), quad);
    for (std::int32_t j = 0; j < dim_; ++j)
      loss = tape.add(loss, tape.mul(x[static_cast<std::size_t>(j)], static_cast<Tape::NodeId>(j)));
    return loss;
  }

  std::int32_t classify(const ParamVector&, std::span<const double>) const override {
    return -1;  // not a classifier
  }

  const std::vector<double>& matrix() const { return a_; }

 private:
  std::vector<double> a_;
  std::int32_t dim_;
};

class LogisticModel final : public Model {
 public:
  LogisticModel(std::int32_t dim, double l2) : dim_(dim), l2_(l2) {}

  std::int32_t param_dim() const override { return dim_ + 1; }
  std::int32_t input_dim() const override { return dim_; }
  std::vector<Segment> param_segments() const override {
    return {{"weights", 0, dim_}, {"bias", dim_, 1}};
  }
  bool convex() const override { return true; }

  Tape::NodeId emit_example_loss(Tape& tape, std::span<const Tape::NodeId> x,
                                 double label) const override {
    Tape::NodeId z = -1;
    for (std::int32_t j = 0; j < dim_; ++j) {
      const Tape::NodeId t = tape.mul(static_cast<Tape::NodeId>(j), x[static_cast<std::size_t>(j)]);
      z = (z < 0) ? t : tape.add(z, t);
    }
    z = tape.add(z, static_cast<Tape::NodeId>(dim_));  // bias
    Tape::NodeId loss = tape.sub(tape.log1p_exp(z), tape.mul(tape.constant(label), z));
    if (l2_ > 0.0) {
      // The penalty covers the bias too; that is what makes the whole loss
      // l2-strongly convex (the data term alone flattens out in the bias
      // direction once the sigmoids saturate).
      Tape::NodeId ss = -1;
      for (std::int32_t j = 0; j <= dim_; ++j) {
        const Tape::NodeId t =
            tape.mul(static_cast<Tape::NodeId>(j), static_cast<Tape::NodeId>(j));
        ss = (ss < 0) ? t : tape.add(ss, t);
      }
      loss = tape.add(loss, tape.mul(tape.constant(0.5 * l2_), ss));
    }
    return loss;
  }

  std::int32_t classify(const ParamVector& params, std::span<const double> x) const override {
    double z = params[dim_];
    for (std::int32_t j = 0; j < dim_; ++j) z += params[j] * x[j];
    return z > 0.0 ? 1 : 0;
  }

  double l2() const { return l2_; }

 private:
  std::int32_t dim_;
  double l2_;
};

class MlpModel final : public Model {
 public:
  MlpModel(std::vector<std::int32_t> dims, Activation act, LossKind loss)
      : dims_(std::move(dims)), act_(act), loss_(loss) {
    offsets_.push_back(0);
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l)
      offsets_.push_back(offsets_.back() + dims_[l] * dims_[l + 1] + dims_[l + 1]);
  }

  std::int32_t param_dim() const override { return offsets_.back(); }
  std::int32_t input_dim() const override { return dims_.front(); }
  std::vector<Segment> param_segments() const override {
    std::vector<Segment> segs;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l)
      segs.push_back({"layer" + std::to_string(l), offsets_[l], offsets_[l + 1] - offsets_[l]});
    return segs;
  }
  bool convex() const override { return false; }

  Tape::NodeId emit_example_loss(Tape& tape, std::span<const Tape::NodeId> x,
                                 double label) const override {
    std::vector<Tape::NodeId> h(x.begin(), x.end());
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      const bool last = (l + 2 == dims_.size());
      h = emit_layer(tape, h, static_cast<std::int32_t>(l), last);
    }
    const std::int32_t m = dims_.back();
    if (loss_ == LossKind::kSquared) {
      // sum((z - target)^2); target is the label itself for a single output,
      // a one-hot vector otherwise.
      Tape::NodeId ss = -1;
      for (std::int32_t o = 0; o < m; ++o) {
        const double target = (m == 1) ? label : (static_cast<std::int32_t>(label) == o ? 1.0 : 0.0);
        const Tape::NodeId dz = tape.sub(h[static_cast<std::size_t>(o)], tape.constant(target));
        const Tape::NodeId sq = tape.mul(dz, dz);
        ss = (ss < 0) ? sq : tape.add(ss, sq);
      }
      return ss;
    }
    if (m == 1) {  // binary cross-entropy on the logit
      const Tape::NodeId z = h[0];
      return tape.sub(tape.log1p_exp(z), tape.mul(tape.constant(label), z));
    }
    // softmax cross-entropy: log(sum exp(z)) - z_label
    Tape::NodeId se = -1;
    for (std::int32_t o = 0; o < m; ++o) {
      const Tape::NodeId e = tape.exp(h[static_cast<std::size_t>(o)]);
      se = (se < 0) ? e : tape.add(se, e);
    }
    const auto cls = static_cast<std::size_t>(label);
    if (cls >= h.size()) throw std::invalid_argument("mlp: label out of class range");
    return tape.sub(tape.log(se), h[cls]);
  }

  std::int32_t classify(const ParamVector& params, std::span<const double> x) const override {
    std::vector<double> h(x.begin(), x.end());
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      const bool last = (l + 2 == dims_.size());
      const std::int32_t in = dims_[l], out = dims_[l + 1];
      const std::int32_t w0 = offsets_[l];
      std::vector<double> next(static_cast<std::size_t>(out));
      for (std::int32_t o = 0; o < out; ++o) {
        double z = params[w0 + in * out + o];
        for (std::int32_t i = 0; i < in; ++i) z += params[w0 + i * out + o] * h[static_cast<std::size_t>(i)];
        if (!last) {
          if (act_ == Activation::kRelu) z = z > 0.0 ? z : 0.0;
          else if (act_ == Activation::kTanh) z = std::tanh(z);
        }
        next[static_cast<std::size_t>(o)] = z;
      }
      h = std::move(next);
    }
    if (h.size() == 1) return (loss_ == LossKind::kSquared ? h[0] > 0.5 : h[0] > 0.0) ? 1 : 0;
    std::int32_t best = 0;
    for (std::size_t o = 1; o < h.size(); ++o)
      if (h[o] > h[best]) best = static_cast<std::int32_t>(o);
    return best;
  }

 private:
  // Weight layout per layer: W (in x out, row-major) then bias (out).
  std::vector<Tape::NodeId> emit_layer(Tape& tape, std::span<const Tape::NodeId> h,
                                       std::int32_t l, bool last) const {
    const std::int32_t in = dims_[static_cast<std::size_t>(l)];
    const std::int32_t out = dims_[static_cast<std::size_t>(l) + 1];
    const std::int32_t w0 = offsets_[static_cast<std::size_t>(l)];
    std::vector<Tape::NodeId> next(static_cast<std::size_t>(out));
    for (std::int32_t o = 0; o < out; ++o) {
      Tape::NodeId z = static_cast<Tape::NodeId>(w0 + in * out + o);  // bias
      for (std::int32_t i = 0; i < in; ++i) {
        const auto w = static_cast<Tape::NodeId>(w0 + i * out + o);
        z = tape.add(z, tape.mul(w, h[static_cast<std::size_t>(i)]));
      }
      if (!last) {
        if (act_ == Activation::kRelu) z = tape.relu(z);
        else if (act_ == Activation::kTanh) z = tape.tanh(z);
      }
      next[static_cast<std::size_t>(o)] = z;
    }
    return next;
  }

  std::vector<std::int32_t> dims_;
  Activation act_;
  LossKind loss_;
  std::vector<std::int32_t> offsets_;
};

}  // namespace

std::pair<std::unique_ptr<Model>, ParamVector> build(const ModelSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::kQuadratic: {
      if (spec.dims.size() != 1 || spec.dims[0] < 1)
        throw std::invalid_argument("quadratic model: dims must be [n]");
      const std::int32_t n = spec.dims[0];
      if (spec.matrix_a.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("quadratic model: matrix A must be n x n");
      for (std::int32_t i = 0; i < n; ++i)
        for (std::int32_t j = 0; j < n; ++j)
          if (spec.matrix_a[static_cast<std::size_t>(i) * n + j] !=
              spec.matrix_a[static_cast<std::size_t>(j) * n + i])
            throw std::invalid_argument("quadratic model: matrix A must be symmetric");
      auto model = std::make_unique<QuadraticModel>(spec.matrix_a, n);
      ParamVector params(std::vector<double>(static_cast<std::size_t>(n), 0.0),
                         model->param_segments());
      return {std::move(model), std::move(params)};
    }
    case ModelKind::kLogistic: {
      if (spec.dims.size() != 1 || spec.dims[0] < 1)
        throw std::invalid_argument("logistic model: dims must be [d]");
      if (spec.l2 < 0.0) throw std::invalid_argument("logistic model: l2 must be >= 0");
      auto model = std::make_unique<LogisticModel>(spec.dims[0], spec.l2);
      ParamVector params(std::vector<double>(static_cast<std::size_t>(spec.dims[0]) + 1, 0.0),
                         model->param_segments());
      return {std::move(model), std::move(params)};
    }
    case ModelKind::kMlp: {
      if (spec.dims.size() < 2)
        throw std::invalid_argument("mlp model: need at least [in, out] widths");
      for (const auto w : spec.dims)
        if (w < 1) throw std::invalid_argument("mlp model: widths must be >= 1");
      auto model = std::make_unique<MlpModel>(spec.dims, spec.activation, spec.loss);
      std::vector<double> values(static_cast<std::size_t>(model->param_dim()));
      Rng rng(seed);
      std::size_t k = 0;
      for (std::size_t l = 0; l + 1 < spec.dims.size(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(spec.dims[l]));
        const std::size_t count =
            static_cast<std::size_t>(spec.dims[l]) * spec.dims[l + 1] + spec.dims[l + 1];
        for (std::size_t i = 0; i < count; ++i) values[k++] = rng.uniform(-1.0, 1.0) * scale;
      }
      auto segments = model->param_segments();
      return {std::move(model), ParamVector(std::move(values), std::move(segments))};
    }
  }
  throw std::invalid_argument("build: unknown model kind");
}

ConvexConstants quadratic_constants(std::span<const double> a, std::int32_t dim) {
  const auto eig = symmetric_eigenvalues(a, dim);
  if (eig.front() <= 0.0)
    throw std::invalid_argument("quadratic_constants: matrix is not positive definite");
  ConvexConstants c;
  c.lipschitz = eig.back();
  c.strong_convexity = eig.front();
  c.optimal_loss = 0.0;
  return c;
}

ConvexConstants logistic_constants(const Dataset& data, double l2) {
  if (l2 <= 0.0)
    throw std::invalid_argument("logistic_constants: strong convexity requires positive regularization");
  const std::int32_t d = data.d;
  const std::int32_t n = data.n;

  // lambda_max(X'X/N) bounds the unregularized Hessian spectrum via the 1/4
  // cap on sigmoid curvature.
  std::vector<double> gram(static_cast<std::size_t>(d) * d, 0.0);
  for (std::int32_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    for (std::int32_t p = 0; p < d; ++p)
      for (std::int32_t q = 0; q < d; ++q)
        gram[static_cast<std::size_t>(p) * d + q] += row[p] * row[q];
  }
  for (auto& g : gram) g /= n;
  const auto eig = symmetric_eigenvalues(gram, d);

  ConvexConstants c;
  c.strong_convexity = l2;
  c.lipschitz = l2 + 0.25 * eig.back();

  // L_* by full-batch gradient descent to gradient norm < 1e-10.
  const std::int32_t dim = d + 1;
  std::vector<double> theta(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> grad(static_cast<std::size_t>(dim), 0.0);
  const double step = 2.0 / (c.lipschitz + l2);
  double loss = 0.0;
  bool converged = false;
  for (std::int64_t iter = 0; iter < 1000000; ++iter) {
    loss = 0.0;
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::int32_t i = 0; i < n; ++i) {
      const auto row = data.row(i);
      double z = theta[static_cast<std::size_t>(d)];
      for (std::int32_t j = 0; j < d; ++j) z += theta[static_cast<std::size_t>(j)] * row[j];
      const double y = data.label(i);
      loss += (z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - y * z;
      const double s = (z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)));
      const double r = s - y;
      for (std::int32_t j = 0; j < d; ++j) grad[static_cast<std::size_t>(j)] += r * row[j];
      grad[static_cast<std::size_t>(d)] += r;
    }
    loss /= n;
    double reg = 0.0;
    for (std::int32_t j = 0; j <= d; ++j) {
      const double w = theta[static_cast<std::size_t>(j)];
      reg += w * w;
      grad[static_cast<std::size_t>(j)] = grad[static_cast<std::size_t>(j)] / n + l2 * w;
    }
    loss += 0.5 * l2 * reg;

    if (norm2(grad) < 1e-10) {
      converged = true;
      break;
    }
    for (std::int32_t j = 0; j < dim; ++j)
      theta[static_cast<std::size_t>(j)] -= step * grad[static_cast<std::size_t>(j)];
  }
  if (!converged)
    throw std::runtime_error("logistic_constants: gradient descent did not reach tolerance 1e-10");
  c.optimal_loss = loss;
  return c;
}

}  // namespace absgd
