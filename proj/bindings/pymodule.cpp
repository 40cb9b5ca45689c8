#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "absgd/adversarial.hpp"
#include "absgd/autodiff.hpp"
#include "absgd/convergence.hpp"
#include "absgd/elastic_sim.hpp"
#include "absgd/hessian.hpp"
#include "absgd/trainer.hpp"

namespace py = pybind11;
using namespace absgd;

namespace {

// Owns a model plus its initial parameters; the python surface works with
// plain lists of doubles.
struct PyModel {
  std::shared_ptr<Model> model;
  ParamVector init;
  std::shared_ptr<Dataset> data;  // optional bound dataset

  ParamVector wrap(const std::vector<double>& theta) const {
    return ParamVector(theta, model->param_segments());
  }
};

ModelSpec spec_from_kwargs(const std::string& kind, const std::vector<std::int32_t>& dims,
                           double l2, const std::string& activation, const std::string& loss,
                           const std::vector<std::vector<double>>& matrix) {
  ModelSpec spec;
  if (kind == "quadratic") {
    spec.kind = ModelKind::kQuadratic;
    const auto n = static_cast<std::int32_t>(matrix.size());
    spec.dims = {n};
    for (const auto& row : matrix)
      spec.matrix_a.insert(spec.matrix_a.end(), row.begin(), row.end());
  } else if (kind == "logistic") {
    spec.kind = ModelKind::kLogistic;
    spec.dims = dims;
    spec.l2 = l2;
  } else if (kind == "mlp") {
    spec.kind = ModelKind::kMlp;
    spec.dims = dims;
    spec.activation = activation == "relu"       ? Activation::kRelu
                      : activation == "identity" ? Activation::kIdentity
                                                 : Activation::kTanh;
    spec.loss = loss == "squared" ? LossKind::kSquared : LossKind::kCrossEntropy;
  } else {
    throw std::invalid_argument("kind must be quadratic, logistic or mlp");
  }
  return spec;
}

Batch batch_from(const Dataset& data) { return gather_all(data); }

py::dict event_to_dict(const MeasurementEvent& ev) {
  py::dict d;
  d["epoch"] = ev.epoch;
  d["lambda_new"] = ev.lambda_new;
  d["lambda_old"] = ev.lambda_old;
  d["flag_reason"] = scale_reason_name(ev.reason);
  d["batch"] = ev.batch;
  d["lr"] = ev.lr;
  d["gamma"] = ev.gamma;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "curvature-adaptive batch size SGD engine";

  py::class_<Dataset, std::shared_ptr<Dataset>>(m, "Dataset")
      .def_readonly("n", &Dataset::n)
      .def_readonly("d", &Dataset::d)
      .def_readonly("features", &Dataset::features)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("name", &Dataset::name);

  m.def(
      "synth_blobs",
      [](std::int32_t n, std::int32_t d, double separation, std::uint64_t seed) {
        return std::make_shared<Dataset>(synth_blobs(n, d, separation, seed));
      },
      py::arg("n"), py::arg("d"), py::arg("separation"), py::arg("seed") = 0);

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& label) {
        CsvSchema schema;
        schema.label_column = label;
        return std::make_shared<Dataset>(load_csv(path, schema).data);
      },
      py::arg("path"), py::arg("label"));

  m.def(
      "split",
      [](const std::shared_ptr<Dataset>& data, std::int32_t n_train, std::uint64_t seed) {
        auto [tr, va] = split(*data, n_train, seed);
        return py::make_tuple(std::make_shared<Dataset>(std::move(tr)),
                              std::make_shared<Dataset>(std::move(va)));
      },
      py::arg("dataset"), py::arg("n_train"), py::arg("seed") = 0);

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("dim", [](const PyModel& self) { return self.model->param_dim(); })
      .def_property_readonly("init",
                             [](const PyModel& self) { return self.init.values(); })
      .def_property_readonly("segments",
                             [](const PyModel& self) {
                               py::list out;
                               for (const Segment& s : self.init.segments())
                                 out.append(py::make_tuple(s.name, s.offset, s.length));
                               return out;
                             })
      .def(
          "evaluate",
          [](const PyModel& self, const std::vector<double>& theta,
             const std::shared_ptr<Dataset>& data) {
            const DiffResult res = evaluate(*self.model, self.wrap(theta), batch_from(*data));
            return py::make_tuple(res.loss, res.grad);
          },
          py::arg("theta"), py::arg("dataset"))
      .def(
          "loss",
          [](const PyModel& self, const std::vector<double>& theta,
             const std::shared_ptr<Dataset>& data) {
            return loss_value(*self.model, self.wrap(theta), batch_from(*data));
          },
          py::arg("theta"), py::arg("dataset"))
      .def(
          "hvp",
          [](const PyModel& self, const std::vector<double>& theta,
             const std::shared_ptr<Dataset>& data, const std::vector<double>& v) {
            return hvp(*self.model, self.wrap(theta), batch_from(*data), v);
          },
          py::arg("theta"), py::arg("dataset"), py::arg("v"))
      .def(
          "input_gradient",
          [](const PyModel& self, const std::vector<double>& theta,
             const std::vector<double>& x, double y) {
            return input_gradient(*self.model, self.wrap(theta), x, y);
          },
          py::arg("theta"), py::arg("x"), py::arg("y"))
      .def(
          "fgsm",
          [](const PyModel& self, const std::vector<double>& theta,
             const std::vector<double>& x, double y, double epsilon) {
            return fgsm(*self.model, self.wrap(theta), x, y, epsilon);
          },
          py::arg("theta"), py::arg("x"), py::arg("y"), py::arg("epsilon"))
      .def(
          "top_eigenvalue",
          [](const PyModel& self, const std::vector<double>& theta,
             const std::shared_ptr<Dataset>& data, std::int32_t max_iter, double rel_tol,
             std::uint64_t seed, std::int32_t hessian_batch) {
            PowerConfig cfg{max_iter, rel_tol, seed, hessian_batch};
            const HessianEstimate est = model_top_eigenvalue(*self.model, self.wrap(theta),
                                                             *data, cfg);
            py::dict d;
            d["eigenvalue"] = est.eigenvalue;
            d["eigenvector"] = est.eigenvector;
            d["iterations"] = est.iterations;
            d["rel_change"] = est.rel_change;
            d["converged"] = est.converged;
            return d;
          },
          py::arg("theta"), py::arg("dataset"), py::arg("max_iter") = 100,
          py::arg("rel_tol") = 1e-2, py::arg("seed") = 0, py::arg("hessian_batch") = 0);

  m.def(
      "build_model",
      [](const std::string& kind, const std::vector<std::int32_t>& dims, double l2,
         const std::string& activation, const std::string& loss,
         const std::vector<std::vector<double>>& matrix, std::uint64_t seed) {
        auto [model, init] = build(spec_from_kwargs(kind, dims, l2, activation, loss, matrix),
                                   seed);
        return PyModel{std::move(model), std::move(init), nullptr};
      },
      py::arg("kind"), py::arg("dims") = std::vector<std::int32_t>{},
      py::arg("l2") = 0.0, py::arg("activation") = "tanh",
      py::arg("loss") = "cross-entropy",
      py::arg("matrix") = std::vector<std::vector<double>>{}, py::arg("seed") = 0);

  m.def(
      "power_iteration",
      [](const std::function<std::vector<double>(std::vector<double>)>& apply, std::int32_t dim,
         std::int32_t max_iter, double rel_tol, std::uint64_t seed) {
        PowerConfig cfg{max_iter, rel_tol, seed, 0};
        const HessianEstimate est = top_eigenvalue(
            [&apply](std::span<const double> v) {
              return apply(std::vector<double>(v.begin(), v.end()));
            },
            dim, cfg);
        py::dict d;
        d["eigenvalue"] = est.eigenvalue;
        d["iterations"] = est.iterations;
        d["converged"] = est.converged;
        return d;
      },
      py::arg("apply"), py::arg("dim"), py::arg("max_iter") = 100, py::arg("rel_tol") = 1e-2,
      py::arg("seed") = 0);

  py::class_<SchedulerConfig>(m, "SchedulerConfig")
      .def(py::init<>())
      .def_readwrite("eta0", &SchedulerConfig::eta0)
      .def_readwrite("decay_epochs", &SchedulerConfig::decay_epochs)
      .def_readwrite("decay_ratio", &SchedulerConfig::decay_ratio)
      .def_readwrite("b_init", &SchedulerConfig::b_init)
      .def_readwrite("b_max", &SchedulerConfig::b_max)
      .def_readwrite("alpha", &SchedulerConfig::alpha)
      .def_readwrite("beta", &SchedulerConfig::beta)
      .def_readwrite("kappa", &SchedulerConfig::kappa)
      .def_readwrite("gamma0", &SchedulerConfig::gamma0)
      .def_readwrite("eps_adv", &SchedulerConfig::eps_adv)
      .def_readwrite("omega", &SchedulerConfig::omega)
      .def_readwrite("tau", &SchedulerConfig::tau);

  py::class_<SchedulerState>(m, "SchedulerState")
      .def_readonly("batch", &SchedulerState::batch)
      .def_readonly("lr", &SchedulerState::lr)
      .def_readonly("gamma", &SchedulerState::gamma)
      .def_readonly("kappa_itr", &SchedulerState::kappa_itr)
      .def_readwrite("epoch", &SchedulerState::epoch)
      .def_property_readonly("lambda_old", [](const SchedulerState& s) {
        return s.lambda_old ? py::object(py::float_(*s.lambda_old)) : py::object(py::none());
      });

  m.def("scheduler_init", &scheduler_init, py::arg("config"));
  m.def(
      "on_epoch_end",
      [](SchedulerState& state, double lambda_new, const SchedulerConfig& cfg) {
        return event_to_dict(on_epoch_end(state, lambda_new, cfg));
      },
      py::arg("state"), py::arg("lambda_new"), py::arg("config"));
  m.def("lr_decay", &lr_decay, py::arg("state"), py::arg("epoch"), py::arg("config"));

  m.def(
      "train",
      [](const PyModel& model, const std::shared_ptr<Dataset>& data, const std::string& strategy,
         std::int32_t epochs, std::uint64_t seed, const SchedulerConfig& scheduler,
         std::int32_t hessian_batch, std::uint64_t hessian_seed) {
        TrainConfig cfg;
        cfg.strategy = strategy_from_name(strategy);
        cfg.epochs = epochs;
        cfg.seed = seed;
        cfg.scheduler = scheduler;
        cfg.hessian.hessian_batch = hessian_batch;
        cfg.hessian.seed = hessian_seed;
        const TrainingLog log = train(*model.model, model.init, *data, nullptr, cfg);
        py::dict out;
        out["strategy"] = log.strategy;
        out["diverged"] = log.diverged;
        out["updates"] = log.updates();
        py::list steps;
        for (const StepRecord& s : log.steps)
          steps.append(py::make_tuple(s.step, s.epoch, s.batch_size, s.lr, s.loss));
        out["steps"] = steps;
        py::list epochs_out;
        for (const EpochRecord& e : log.epochs) {
          py::dict rec;
          rec["epoch"] = e.epoch;
          rec["train_loss"] = e.train_loss;
          rec["batch"] = e.batch;
          rec["lr"] = e.lr;
          rec["gamma"] = e.gamma;
          rec["updates"] = e.cum_updates;
          epochs_out.append(rec);
        }
        out["epochs"] = epochs_out;
        out["final_params"] = log.final_params.values();
        return out;
      },
      py::arg("model"), py::arg("dataset"), py::arg("strategy"), py::arg("epochs"),
      py::arg("seed"), py::arg("scheduler"), py::arg("hessian_batch") = 0,
      py::arg("hessian_seed") = 0);

  py::class_<ConvexConstants>(m, "ConvexConstants")
      .def(py::init<>())
      .def_readwrite("lipschitz", &ConvexConstants::lipschitz)
      .def_readwrite("strong_convexity", &ConvexConstants::strong_convexity)
      .def_readwrite("variance_const", &ConvexConstants::variance_const)
      .def_readwrite("variance_slope", &ConvexConstants::variance_slope)
      .def_readwrite("optimal_loss", &ConvexConstants::optimal_loss)
      .def_property_readonly("gradient_bound_slope", &ConvexConstants::gradient_bound_slope);

  m.def(
      "eta0_max",
      [](const ConvexConstants& c, std::int32_t b_max) { return eta0_max(c, b_max); },
      py::arg("constants"), py::arg("b_max"));
  m.def(
      "theorem_bound",
      [](const ConvexConstants& c, const std::vector<std::int32_t>& batches, double eta0,
         double gap0) {
        BatchSchedule sched;
        sched.batches = batches;
        sched.eta0 = eta0;
        return theorem_bound(c, sched, gap0);
      },
      py::arg("constants"), py::arg("batches"), py::arg("eta0"), py::arg("gap0"));

  py::class_<TimeBreakdown>(m, "TimeBreakdown")
      .def_readonly("comp", &TimeBreakdown::comp)
      .def_readonly("comm", &TimeBreakdown::comm)
      .def_readonly("resize", &TimeBreakdown::resize)
      .def_readonly("hessian", &TimeBreakdown::hessian)
      .def_readonly("total", &TimeBreakdown::total);

  m.def("breakdown_total", &breakdown_total, py::arg("comp"), py::arg("comm"),
        py::arg("resize"), py::arg("hessian"));
  m.def("speedup", &speedup, py::arg("breakdown"), py::arg("baseline_total"));

  m.attr("__version__") = "1.0.0";
}
