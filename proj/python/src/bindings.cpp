#include <cstring>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "hgpop/config.hpp"
#include "hgpop/direct_mle.hpp"
#include "hgpop/error.hpp"
#include "hgpop/evaluation.hpp"
#include "hgpop/experiment.hpp"
#include "hgpop/io.hpp"
#include "hgpop/latent_model.hpp"
#include "hgpop/likelihood.hpp"
#include "hgpop/simulator.hpp"

namespace py = pybind11;
using namespace hgpop;

namespace {

using CountArray = py::array_t<Count, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

CountMatrix to_matrix(const CountArray& a) {
    if (a.ndim() != 2) throw ValidationError("expected a 2-D count array");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return CountMatrix(rows, cols, std::vector<Count>(a.data(), a.data() + rows * cols));
}

CountArray to_array(const CountMatrix& m) {
    CountArray out({m.rows(), m.cols()});
    if (!m.data().empty()) std::memcpy(out.mutable_data(), m.data().data(), m.data().size() * sizeof(Count));
    return out;
}

RealArray to_array(const RealMatrix& m) {
    RealArray out({m.rows, m.cols});
    if (!m.data.empty()) std::memcpy(out.mutable_data(), m.data.data(), m.data.size() * sizeof(double));
    return out;
}

RealMatrix to_real(const RealArray& a) {
    if (a.ndim() != 2) throw ValidationError("expected a 2-D array");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return {rows, cols, std::vector<double>(a.data(), a.data() + rows * cols)};
}

// configs cross the boundary as plain dicts via their JSON mapping
template <typename T>
T from_dict(const py::object& d) {
    T out{};
    if (d.is_none()) return out;
    const std::string text = py::module_::import("json").attr("dumps")(d).cast<std::string>();
    nlohmann::ordered_json::parse(text).get_to(out);
    return out;
}

template <typename T>
py::object to_dict(const T& value) {
    const nlohmann::ordered_json j = value;
    return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Population size estimation from under-sampled count data";

    static py::exception<ValidationError> validation_error(m, "ValidationError", PyExc_ValueError);
    static py::exception<DomainError> domain_error(m, "DomainError", PyExc_ValueError);
    static py::exception<PreconditionError> precondition_error(m, "PreconditionError", PyExc_ValueError);
    static py::exception<UnsupportedError> unsupported_error(m, "UnsupportedError", PyExc_ValueError);
    static py::exception<UndefinedMetricError> undefined_metric(m, "UndefinedMetricError", PyExc_ArithmeticError);
    static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            validation_error(e.what());
        } catch (const DomainError& e) {
            domain_error(e.what());
        } catch (const PreconditionError& e) {
            precondition_error(e.what());
        } catch (const UnsupportedError& e) {
            unsupported_error(e.what());
        } catch (const UndefinedMetricError& e) {
            undefined_metric(e.what());
        } catch (const NumericalError& e) {
            numerical_error(e.what());
        } catch (const nlohmann::json::exception& e) {
            validation_error(e.what());
        }
    });

    m.def("hypergeom_log_pmf",
          [](const std::vector<Count>& c, const std::vector<double>& est) { return hypergeom_log_pmf(c, est); },
          py::arg("counts"), py::arg("estimate"));
    m.def("hypergeom_nll",
          [](const CountArray& batch, const std::vector<double>& est) { return hypergeom_nll(to_matrix(batch), est); },
          py::arg("batch"), py::arg("estimate"));
    m.def("hypergeom_nll_grad",
          [](const CountArray& batch, const std::vector<double>& est) {
              return hypergeom_nll_grad(to_matrix(batch), est);
          },
          py::arg("batch"), py::arg("estimate"));
    m.def("violation_penalty",
          [](const std::vector<Count>& c, const std::vector<double>& raw) { return violation_penalty(c, raw); },
          py::arg("counts"), py::arg("raw"));
    m.def("threshold_estimates",
          [](const std::vector<Count>& c, const std::vector<double>& raw) { return threshold_estimates(c, raw); },
          py::arg("counts"), py::arg("raw"));

    m.def(
        "simulate",
        [](const py::object& config) {
            const SimulatedDataset ds = simulate_dataset(from_dict<SimulationConfig>(config));
            py::dict out;
            out["counts"] = to_array(ds.counts);
            out["labels"] = ds.labels;
            out["ground_truth"] = ds.ground_truth;
            return out;
        },
        py::arg("config") = py::none(), "Simulate a dataset from a simulation config dict.");

    m.def(
        "nll_landscape",
        [](const CountArray& batch, Count lo, Count hi) {
            const NllLandscape land = nll_landscape(to_matrix(batch), {lo, hi}, {lo, hi});
            RealArray grid({land.n1_values.size(), land.n2_values.size()});
            std::memcpy(grid.mutable_data(), land.nll.data(), land.nll.size() * sizeof(double));
            return py::make_tuple(land.n1_values, land.n2_values, grid, land.argmin());
        },
        py::arg("batch"), py::arg("lo"), py::arg("hi"),
        "Returns (n1_values, n2_values, nll grid, argmin) over [lo, hi] in both coordinates.");

    m.def(
        "fit_single",
        [](const CountArray& batch, const py::object& optimizer, std::optional<std::vector<Count>> truth) {
            const FitResult fit = fit_single(to_matrix(batch), from_dict<OptimizerConfig>(optimizer), truth);
            py::dict out;
            out["estimate"] = std::vector<double>(fit.estimate.sizes().begin(), fit.estimate.sizes().end());
            out["nll"] = fit.trajectory.nll;
            out["loss"] = fit.trajectory.loss;
            out["error"] = fit.trajectory.error;
            out["estimates"] = fit.trajectory.estimates;
            return out;
        },
        py::arg("batch"), py::arg("optimizer") = py::none(), py::arg("ground_truth") = py::none());

    py::class_<NetworkParams>(m, "Model")
        .def_property_readonly("spec", [](const NetworkParams& p) { return to_dict(p.spec()); })
        .def_property_readonly("num_categories", &NetworkParams::num_categories)
        .def_property_readonly("num_parameters", &NetworkParams::size)
        .def(
            "latent_means",
            [](const NetworkParams& p, const CountArray& data) { return to_array(latent_means(to_matrix(data), p)); },
            py::arg("counts"))
        .def(
            "estimates",
            [](const NetworkParams& p, const CountArray& data, bool round) {
                return to_array(infer_estimates(to_matrix(data), p, round));
            },
            py::arg("counts"), py::arg("round") = false)
        .def("save", [](const NetworkParams& p, const std::string& path) { save_checkpoint(path, p); })
        .def_static("load", [](const std::string& path) { return load_checkpoint(path); });

    m.def(
        "train",
        [](const CountArray& data, const py::object& network, const py::object& train_cfg) {
            const CountMatrix counts = to_matrix(data);
            const NetworkSpec spec = from_dict<NetworkSpec>(network);
            const TrainConfig tc = from_dict<TrainConfig>(train_cfg);
            TrainResult res;
            {
                py::gil_scoped_release release;
                res = train(counts, spec, tc);
            }
            py::list history;
            for (const auto& h : res.history) {
                py::dict e;
                e["epoch"] = h.epoch;
                e["kl"] = h.mean.kl;
                e["nll"] = h.mean.nll;
                e["penalty"] = h.mean.penalty;
                e["total"] = h.mean.total;
                e["violated_fraction"] = h.violated_fraction;
                history.append(e);
            }
            return py::make_tuple(std::move(res.params), history);
        },
        py::arg("counts"), py::arg("network") = py::none(), py::arg("train") = py::none(),
        "Train the latent model; returns (model, per-epoch history).");

    m.def(
        "kmeans",
        [](const RealArray& points, int k, int restarts, std::uint64_t seed) {
            Rng rng(seed);
            const KMeansResult r = kmeans(to_real(points), k, restarts, rng);
            return py::make_tuple(r.labels, r.inertia);
        },
        py::arg("points"), py::arg("k"), py::arg("restarts") = 10, py::arg("seed") = 0);
    m.def("adjusted_rand_index",
          [](const std::vector<int>& a, const std::vector<int>& b) { return adjusted_rand_index(a, b); });
    m.def(
        "mpe", [](const RealArray& est, const std::vector<std::vector<Count>>& truth) { return mpe(to_real(est), truth); },
        py::arg("estimates"), py::arg("truth"));
    m.def(
        "mae", [](const RealArray& est, const std::vector<std::vector<Count>>& truth) { return mae(to_real(est), truth); },
        py::arg("estimates"), py::arg("truth"));

    m.def(
        "run_experiment",
        [](const py::object& config) {
            const std::string text = py::module_::import("json").attr("dumps")(config).cast<std::string>();
            const ExperimentConfig cfg = parse_experiment_config(text);
            py::gil_scoped_release release;
            return run_experiment(cfg).string();
        },
        py::arg("config"), "Run one experiment from a config dict; returns the output directory.");
    m.def(
        "emit_figure_data",
        [](const std::string& run_dir, const std::string& figure, const std::string& out_dir) {
            return emit_figure_data(run_dir, parse_figure_kind(figure), out_dir.empty() ? run_dir : out_dir).string();
        },
        py::arg("run_dir"), py::arg("figure"), py::arg("out_dir") = "");
}
