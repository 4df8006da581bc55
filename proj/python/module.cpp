#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "pthmm/diagnostics.hpp"
#include "pthmm/hmm.hpp"
#include "pthmm/priors.hpp"
#include "pthmm/pt.hpp"
#include "pthmm/target.hpp"
#include "pthmm/tempering.hpp"
#include "pthmm/tuner.hpp"

namespace py = pybind11;
using namespace pthmm;

namespace {

ModelSpec make_spec(int n_states, const std::vector<std::string>& streams,
                    int covariate_levels) {
  ModelSpec spec;
  spec.n_states = n_states;
  for (const std::string& s : streams) {
    spec.streams.push_back(stream_family_from_string(s));
  }
  spec.covariate_levels = covariate_levels;
  spec.validate();
  return spec;
}

// Sequences come in as dicts: {"values": [[y_t1..], ...], "covariates": [...]}.
ObservationSet make_data(const ModelSpec& spec, const py::list& sequences) {
  ObservationSet data;
  for (const auto& item : sequences) {
    const py::dict d = item.cast<py::dict>();
    Sequence seq;
    for (const auto& row : d["values"].cast<py::list>()) {
      const auto values = row.cast<std::vector<double>>();
      if (values.size() != static_cast<std::size_t>(spec.n_streams())) {
        throw DataError("each time step needs one value per stream");
      }
      seq.values.insert(seq.values.end(), values.begin(), values.end());
      ++seq.length;
    }
    if (d.contains("covariates")) {
      seq.covariates = d["covariates"].cast<std::vector<int>>();
    } else {
      seq.covariates.assign(seq.length, 0);
    }
    data.sequences.push_back(std::move(seq));
  }
  validate_observations(spec, data);
  return data;
}

py::dict store_to_dict(const SampleStore& store) {
  py::dict out;
  out["names"] = store.names;
  out["iterations"] = store.iterations;
  py::list rows;
  for (std::size_t r = 0; r < store.n_rows(); ++r) {
    const auto row = store.row(r);
    rows.append(std::vector<double>(row.begin(), row.end()));
  }
  out["draws"] = rows;
  return out;
}

SampleStore store_from_dict(const py::dict& d) {
  SampleStore store;
  store.names = d["names"].cast<std::vector<std::string>>();
  if (d.contains("iterations")) {
    store.iterations = d["iterations"].cast<std::vector<std::uint64_t>>();
  }
  std::uint64_t it = 0;
  for (const auto& row : d["draws"].cast<py::list>()) {
    const auto values = row.cast<std::vector<double>>();
    if (values.size() != store.names.size()) {
      throw DataError("draw length does not match names");
    }
    if (store.iterations.size() <= it) store.iterations.push_back(it + 1);
    store.values.insert(store.values.end(), values.begin(), values.end());
    ++it;
  }
  store.iterations.resize(it);
  return store;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Parallel-tempered Bayesian inference for multivariate HMMs";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init(&make_spec), py::arg("n_states"), py::arg("streams"),
           py::arg("covariate_levels") = 0)
      .def_readonly("n_states", &ModelSpec::n_states)
      .def_readonly("covariate_levels", &ModelSpec::covariate_levels)
      .def_property_readonly("streams", [](const ModelSpec& spec) {
        std::vector<std::string> out;
        for (StreamFamily f : spec.streams) out.push_back(to_string(f));
        return out;
      });

  m.def("coord_names",
        [](const ModelSpec& spec) { return coord_names(spec); });

  m.def(
      "sample_prior",
      [](const ModelSpec& spec, std::uint64_t seed) {
        return flatten(spec, sample_prior(spec, PriorConfig::defaults(spec),
                                          seed));
      },
      py::arg("spec"), py::arg("seed") = 0);

  m.def(
      "log_prior",
      [](const ModelSpec& spec, const std::vector<double>& x) {
        return log_prior(spec, unflatten(spec, x),
                         PriorConfig::defaults(spec));
      },
      py::arg("spec"), py::arg("theta"));

  m.def(
      "log_likelihood",
      [](const ModelSpec& spec, const std::vector<double>& x,
         const py::list& sequences) {
        return log_likelihood(spec, unflatten(spec, x),
                              make_data(spec, sequences));
      },
      py::arg("spec"), py::arg("theta"), py::arg("sequences"));

  m.def(
      "transition_matrix",
      [](const ModelSpec& spec, const std::vector<double>& x, int level) {
        const auto flat = transition_matrix(spec, unflatten(spec, x), level);
        py::list rows;
        for (int i = 0; i < spec.n_states; ++i) {
          rows.append(std::vector<double>(
              flat.begin() + i * spec.n_states,
              flat.begin() + (i + 1) * spec.n_states));
        }
        return rows;
      },
      py::arg("spec"), py::arg("theta"), py::arg("level") = 0);

  m.def(
      "simulate",
      [](const ModelSpec& spec, const std::vector<double>& x,
         const std::vector<std::size_t>& lengths, std::uint64_t seed) {
        const ObservationSet data =
            simulate(spec, unflatten(spec, x), lengths, {}, seed);
        py::list out;
        for (const Sequence& seq : data.sequences) {
          py::dict d;
          py::list values;
          for (std::size_t t = 0; t < seq.length; ++t) {
            std::vector<double> row;
            for (int p = 0; p < spec.n_streams(); ++p) {
              row.push_back(seq.value(t, p, spec.n_streams()));
            }
            values.append(row);
          }
          d["values"] = values;
          d["covariates"] = seq.covariates;
          out.append(d);
        }
        return out;
      },
      py::arg("spec"), py::arg("theta"), py::arg("lengths"),
      py::arg("seed") = 0);

  m.def("geometric_ladder",
        [](double beta_hot, std::size_t m) {
          return geometric_ladder(beta_hot, m).betas;
        },
        py::arg("beta_hot"), py::arg("m"));

  m.def(
      "pt_sample",
      [](const ModelSpec& spec, const py::list& sequences,
         const std::vector<double>& betas, std::uint64_t n_iters,
         std::uint64_t burn_in, std::uint64_t thin, std::uint64_t seed,
         const std::string& scheme, int n_threads) {
        const HmmTarget target(spec, make_data(spec, sequences),
                               PriorConfig::defaults(spec));
        PtConfig config;
        config.ladder = TemperatureLadder::from_betas(betas);
        config.n_iters = n_iters;
        config.burn_in = burn_in;
        config.thin = thin;
        config.seed = seed;
        config.scheme = swap_scheme_from_string(scheme);
        config.n_threads = n_threads;
        PtResult result;
        {
          py::gil_scoped_release release;
          result = pt_run(target, config);
        }
        py::dict out = store_to_dict(result.store);
        out["round_trips"] = result.round_trips;
        std::vector<double> rates;
        for (std::size_t k = 0; k < result.ladder.n_pairs(); ++k) {
          rates.push_back(result.ladder.rate(k));
        }
        out["swap_rates"] = rates;
        return out;
      },
      py::arg("spec"), py::arg("sequences"), py::arg("betas"),
      py::arg("n_iters"), py::arg("burn_in") = 0, py::arg("thin") = 1,
      py::arg("seed") = 0, py::arg("scheme") = "deo",
      py::arg("n_threads") = 1);

  m.def(
      "relabel_by_ordering",
      [](const ModelSpec& spec, const py::dict& store,
         const std::vector<std::string>& constraint) {
        const RelabelResult result =
            relabel_by_ordering(store_from_dict(store), spec, constraint);
        py::dict out = store_to_dict(result.store);
        out["draws_permuted"] = result.n_permuted;
        out["warnings"] = result.warnings;
        return out;
      },
      py::arg("spec"), py::arg("store"), py::arg("constraint"));

  m.def("split_rhat", &split_rhat, py::arg("chains"));
  m.def("ess_basic", &ess_basic, py::arg("chains"));
  m.def("tempered_prior_demo", &tempered_prior_demo, py::arg("beta"),
        py::arg("n_states") = 3, py::arg("n_draws") = 100000,
        py::arg("seed") = 0);
}
