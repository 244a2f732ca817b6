#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hmmrates/baseline.hpp"
#include "hmmrates/basis.hpp"
#include "hmmrates/em.hpp"
#include "hmmrates/error.hpp"
#include "hmmrates/forecast.hpp"
#include "hmmrates/grid_oracle.hpp"
#include "hmmrates/panel.hpp"
#include "hmmrates/paris.hpp"
#include "hmmrates/smc.hpp"
#include "hmmrates/synth.hpp"

namespace py = pybind11;
using namespace hmmrates;

namespace {

py::dict stats_dict(const SmoothedStats& s) {
    py::dict d;
    d["S_ij"] = s.S_ij;
    d["S_i"] = s.S_i;
    d["E_ij"] = s.E_ij;
    d["E_i"] = s.E_i;
    d["n"] = s.n;
    return d;
}

// Panel from [cell][period] nested lists.
CellPanel panel_from_rows(CellKind kind, const std::vector<Cell>& cells,
                          const std::vector<std::vector<std::int64_t>>& exposure,
                          const std::vector<std::vector<std::int64_t>>& events) {
    if (exposure.size() != cells.size() || events.size() != cells.size())
        throw UsageError("exposure and events need one row per cell");
    const int periods = exposure.empty() ? 0 : static_cast<int>(exposure.front().size());
    std::vector<std::int64_t> e, n;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (static_cast<int>(exposure[c].size()) != periods || static_cast<int>(events[c].size()) != periods)
            throw UsageError("every cell needs the same number of periods");
        e.insert(e.end(), exposure[c].begin(), exposure[c].end());
        n.insert(n.end(), events[c].begin(), events[c].end());
    }
    return CellPanel(kind, cells, periods, e, n);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Latent random-walk transition rate models";
    m.attr("__version__") = HMMRATES_VERSION;

    // translators run newest first, so the base class goes in first
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::enum_<CellKind>(m, "CellKind").value("inception", CellKind::inception).value("termination", CellKind::termination);
    py::enum_<AgeFamily>(m, "AgeFamily").value("linear2", AgeFamily::linear2).value("piecewise3", AgeFamily::piecewise3);
    py::enum_<DurationFamily>(m, "DurationFamily")
        .value("linear", DurationFamily::linear)
        .value("exponential", DurationFamily::exponential);
    py::enum_<BackwardSampler>(m, "BackwardSampler")
        .value("direct", BackwardSampler::direct)
        .value("rejection", BackwardSampler::rejection)
        .value("expectation", BackwardSampler::expectation);

    py::class_<Cell>(m, "Cell")
        .def_static("inception", &Cell::inception, py::arg("age"))
        .def_static("termination", &Cell::termination, py::arg("age"), py::arg("duration"), py::arg("width") = 1.0)
        .def_readonly("kind", &Cell::kind)
        .def_readonly("age", &Cell::age)
        .def_readonly("duration", &Cell::duration)
        .def("label", &Cell::label)
        .def("__eq__", [](const Cell& a, const Cell& b) { return a == b; })
        .def("__repr__", [](const Cell& c) { return "Cell(" + c.label() + ")"; });

    py::class_<LatentParams>(m, "LatentParams")
        .def(py::init([](Vector mu, Matrix chol, Vector nu0) {
                 LatentParams t{std::move(mu), std::move(chol), std::move(nu0)};
                 require_valid(t);
                 return t;
             }),
             py::arg("mu"), py::arg("chol"), py::arg("nu0"))
        .def_readonly("mu", &LatentParams::mu)
        .def_readonly("chol", &LatentParams::chol)
        .def_readonly("nu0", &LatentParams::nu0)
        .def_property_readonly("dim", &LatentParams::dim)
        .def("covariance", &LatentParams::covariance)
        .def("volatility", &LatentParams::volatility);

    py::class_<BasisSet>(m, "BasisSet")
        .def_static("linear2", &BasisSet::linear2, py::arg("age_lo") = 25, py::arg("age_hi") = 64)
        .def_static("piecewise3", &BasisSet::piecewise3, py::arg("midpoint") = 40.0, py::arg("age_lo") = 25,
                    py::arg("age_hi") = 64)
        .def_static("tensor", &BasisSet::tensor, py::arg("age") = AgeFamily::linear2,
                    py::arg("duration") = DurationFamily::linear, py::arg("age_lo") = 25, py::arg("age_hi") = 64,
                    py::arg("midpoint") = 40.0)
        .def_property_readonly("dim", &BasisSet::dim)
        .def("labels", &BasisSet::labels)
        .def("design", [](const BasisSet& b, const Cell& c) { return eval_design(b, c); })
        .def("full_rank", [](const BasisSet& b, const std::vector<Cell>& cells) { return check_rank(b, cells); });

    py::class_<CellPanel>(m, "CellPanel")
        .def(py::init(&panel_from_rows), py::arg("kind"), py::arg("cells"), py::arg("exposure"), py::arg("events"),
             "exposure and events are indexed [cell][period]")
        .def_property_readonly("kind", &CellPanel::kind)
        .def_property_readonly("periods", &CellPanel::periods)
        .def_property_readonly("cells", &CellPanel::cells)
        .def("exposure", &CellPanel::exposure, py::arg("cell"), py::arg("period"))
        .def("events", &CellPanel::events, py::arg("cell"), py::arg("period"));

    m.def("load_panel", [](const std::string& path, CellKind kind) { return load_panel_file(path, kind); },
          py::arg("path"), py::arg("kind") = CellKind::inception);

    m.def(
        "two_step_fit",
        [](const CellPanel& panel, const BasisSet& basis) {
            const auto r = two_step_fit(panel, basis);
            py::dict d;
            d["yearly"] = r.fit.nu;
            d["theta0"] = r.theta0;
            d["jittered"] = r.jittered;
            return d;
        },
        py::arg("panel"), py::arg("basis"), "Per-period fits followed by the random-walk fit to them.");

    m.def(
        "filter_panel",
        [](const CellPanel& panel, const BasisSet& basis, const LatentParams& theta, int particles,
           std::uint64_t seed) {
            const auto out = bootstrap_filter(panel, basis, theta, particles, RngKey{seed, 0});
            std::vector<Vector> means;
            for (const auto& cloud : out.clouds) means.push_back(filter_mean(cloud));
            py::dict d;
            d["mean"] = means;
            d["ess"] = out.ess;
            d["loglik"] = out.loglik_estimate;
            return d;
        },
        py::arg("panel"), py::arg("basis"), py::arg("theta"), py::arg("particles") = 1000, py::arg("seed") = 1);

    m.def(
        "smooth_stats",
        [](const CellPanel& panel, const BasisSet& basis, const LatentParams& theta, int particles,
           int backward_draws, BackwardSampler sampler, std::uint64_t seed) {
            ParisOptions o;
            o.particles = particles;
            o.backward_draws = backward_draws;
            o.sampler = sampler;
            return stats_dict(paris_smooth(panel, basis, theta, o, RngKey{seed, 0}));
        },
        py::arg("panel"), py::arg("basis"), py::arg("theta"), py::arg("particles") = 1000,
        py::arg("backward_draws") = 2, py::arg("sampler") = BackwardSampler::direct, py::arg("seed") = 1);

    m.def(
        "exact_loglik",
        [](const CellPanel& panel, const BasisSet& basis, const LatentParams& theta, int points) {
            const auto r = exact_forward_backward(panel, basis, theta, LatentGrid::covering(theta, panel.periods(), points));
            py::dict d;
            d["loglik"] = r.loglik;
            d["filter_mean"] = r.filter_mean;
            d["smoothed_mean"] = r.smoothed_mean;
            d["stats"] = stats_dict(r.stats);
            return d;
        },
        py::arg("panel"), py::arg("basis"), py::arg("theta"), py::arg("points") = 512,
        "Exact forward-backward on a discretised latent space (dimension 1 or 2).");

    py::class_<EMConfig>(m, "EMConfig")
        .def(py::init<>())
        .def_readwrite("max_iters", &EMConfig::max_iters)
        .def_readwrite("tail_window", &EMConfig::tail_window)
        .def_readwrite("particles", &EMConfig::particles)
        .def_readwrite("backward_draws", &EMConfig::backward_draws)
        .def_readwrite("seed", &EMConfig::seed)
        .def_readwrite("sampler", &EMConfig::sampler);

    m.def(
        "em_fit",
        [](const CellPanel& panel, const BasisSet& basis, const LatentParams& theta0, const EMConfig& config) {
            EMTrace trace;
            {
                py::gil_scoped_release release;
                trace = em_fit(panel, basis, theta0, config);
            }
            std::vector<std::string> repairs;
            for (auto r : trace.repairs) repairs.emplace_back(to_string(r));
            py::dict d;
            d["theta"] = trace.final;
            d["trace"] = trace.theta;
            d["q"] = trace.q;
            d["loglik_estimate"] = trace.loglik_estimate;
            d["repairs"] = repairs;
            return d;
        },
        py::arg("panel"), py::arg("basis"), py::arg("theta0"), py::arg("config") = EMConfig{});

    m.def(
        "generate",
        [](const LatentParams& theta, const BasisSet& basis, const std::vector<Cell>& cells, std::int64_t exposure,
           int periods, std::uint64_t seed) {
            const auto s = generate(theta, basis, cells, exposure, periods, RngKey{seed, 0});
            return py::make_tuple(s.panel, s.path);
        },
        py::arg("theta"), py::arg("basis"), py::arg("cells"), py::arg("exposure"), py::arg("periods"),
        py::arg("seed") = 1, "Synthetic panel and its true latent path.");

    m.def(
        "forecast_rates",
        [](const CellPanel& panel, const BasisSet& basis, const LatentParams& theta, const std::vector<Cell>& cells,
           int horizon, int paths, std::vector<double> probs, int particles, std::uint64_t seed) {
            const auto filt = bootstrap_filter(panel, basis, theta, particles, RngKey{seed, 1});
            const auto future = simulate_future(theta, filt.clouds.back(), horizon, paths, RngKey{seed, 2});
            const auto surface = rate_surface(future, basis, cells, probs);
            py::dict d;
            d["quantiles"] = surface.quantiles;
            d["mean"] = surface.mean;
            d["probs"] = surface.probs;
            return d;
        },
        py::arg("panel"), py::arg("basis"), py::arg("theta"), py::arg("cells"), py::arg("horizon") = 5,
        py::arg("paths") = 10000, py::arg("probs") = std::vector<double>{0.05, 0.5, 0.95}, py::arg("particles") = 1000,
        py::arg("seed") = 1, "Quantiles of future transition probabilities, indexed [horizon][cell][level].");
}
