#include "pthmm/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pthmm {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  // ERANGE with a subnormal result is underflow, which round-trips fine;
  // only reject outright overflow.
  if (end == text.c_str() || *end != '\0' ||
      (errno == ERANGE && (v == HUGE_VAL || v == -HUGE_VAL))) {
    throw DataError("not a number: '" + text + "'");
  }
  return v;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << content;
  if (!out) throw DataError("write failed for " + path);
}

std::vector<double> doubles_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(what + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

ParamVector theta_from_json(const ModelSpec& spec, const json& j) {
  ParamVector theta;
  theta.delta = doubles_from(j.at("delta"), "theta.delta");
  theta.zeta = doubles_from(j.at("zeta"), "theta.zeta");
  for (const auto& row : j.at("alpha0")) {
    theta.alpha0.push_back(doubles_from(row, "theta.alpha0 row"));
  }
  if (j.contains("alpha1")) {
    for (const auto& row : j.at("alpha1")) {
      std::vector<std::vector<double>> cells;
      for (const auto& cell : row) {
        cells.push_back(doubles_from(cell, "theta.alpha1 cell"));
      }
      theta.alpha1.push_back(std::move(cells));
    }
  }
  for (const auto& em : j.at("emissions")) {
    EmissionParams e;
    e.family = stream_family_from_string(em.at("family").get<std::string>());
    if (e.family == StreamFamily::Poisson) {
      e.rate = doubles_from(em.at("rate"), "emission rate");
    } else {
      e.mean = doubles_from(em.at("mean"), "emission mean");
      e.sd = doubles_from(em.at("sd"), "emission sd");
    }
    theta.emissions.push_back(std::move(e));
  }
  validate_params(spec, theta);
  return theta;
}

GammaHyper hyper_from_json(const json& j) {
  GammaHyper h;
  h.shape = j.at("shape").get<double>();
  h.rate = j.at("rate").get<double>();
  if (!(h.shape > 0.0) || !(h.rate > 0.0)) {
    throw ConfigError("prior shape and rate must be positive");
  }
  return h;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    RunConfig config;

    const json& jm = j.at("model");
    config.model.n_states = jm.at("n_states").get<int>();
    for (const auto& s : jm.at("streams")) {
      config.model.streams.push_back(
          stream_family_from_string(s.get<std::string>()));
    }
    config.model.covariate_levels = jm.value("covariate_levels", 0);
    config.model.validate();

    config.prior = PriorConfig::defaults(config.model);
    if (j.contains("prior")) {
      const json& jp = j.at("prior");
      if (jp.contains("delta_concentration")) {
        config.prior.delta_concentration =
            doubles_from(jp.at("delta_concentration"), "delta_concentration");
      }
      if (jp.contains("streams")) {
        const json& js = jp.at("streams");
        if (js.size() != config.prior.streams.size()) {
          throw ConfigError("prior.streams length must match model.streams");
        }
        for (std::size_t p = 0; p < js.size(); ++p) {
          StreamPrior& sp = config.prior.streams[p];
          if (js[p].contains("rate_prior")) {
            sp.rate_prior = hyper_from_json(js[p].at("rate_prior"));
          }
          if (js[p].contains("mean_prior")) {
            sp.mean_prior = hyper_from_json(js[p].at("mean_prior"));
          }
          if (js[p].contains("sd_prior")) {
            sp.sd_prior = hyper_from_json(js[p].at("sd_prior"));
          }
        }
      }
    }
    config.prior.validate(config.model);

    if (j.contains("seeds")) {
      for (const auto& s : j.at("seeds")) {
        config.seeds.push_back(s.get<std::uint64_t>());
      }
    } else {
      config.seeds.push_back(j.value("seed", 0ull));
    }
    if (config.seeds.empty()) throw ConfigError("seeds must not be empty");

    if (j.contains("pt")) {
      const json& jp = j.at("pt");
      PtConfig pt;
      if (jp.contains("ladder")) {
        pt.ladder =
            TemperatureLadder::from_betas(doubles_from(jp.at("ladder"), "ladder"));
      }
      pt.n_iters = jp.at("n_iters").get<std::uint64_t>();
      pt.burn_in = jp.value("burn_in", 0ull);
      pt.sweeps_per_swap = jp.value("sweeps_per_swap", 1);
      pt.scheme = swap_scheme_from_string(jp.value("scheme", "deo"));
      pt.thin = jp.value("thin", 1ull);
      pt.n_threads = jp.value("n_threads", 1);
      pt.retain_all = jp.value("retain_all", false);
      pt.adapt_window = jp.value("adapt_window", 250ull);
      pt.initial_step = jp.value("initial_step", 0.5);
      config.pt = std::move(pt);
    }

    if (j.contains("tune")) {
      const json& jt = j.at("tune");
      TuneOptions tune;
      tune.beta_floor = jt.at("beta_floor").get<double>();
      tune.pilot_iters = jt.value("pilot_iters", 50000ull);
      if (jt.contains("band")) {
        const auto band = doubles_from(jt.at("band"), "tune.band");
        if (band.size() != 2) throw ConfigError("tune.band must have 2 entries");
        tune.band_lo = band[0];
        tune.band_hi = band[1];
      }
      tune.max_adjust = jt.value("max_adjust", 20);
      tune.sweeps_per_swap = jt.value("sweeps_per_swap", 1);
      tune.initial_step = jt.value("initial_step", 0.5);
      config.tune = tune;
    }

    if (j.contains("simulate")) {
      const json& js = j.at("simulate");
      RunConfig::SimulateBlock sim;
      sim.theta = theta_from_json(config.model, js.at("theta"));
      for (const auto& len : js.at("lengths")) {
        sim.lengths.push_back(len.get<std::size_t>());
      }
      if (js.contains("covariates")) {
        for (const auto& seq : js.at("covariates")) {
          std::vector<int> levels;
          for (const auto& v : seq) levels.push_back(v.get<int>());
          sim.covariates.push_back(std::move(levels));
        }
      }
      config.simulate = std::move(sim);
    }

    if (j.contains("diagnose")) {
      const json& jd = j.at("diagnose");
      RunConfig::DiagnoseBlock diag;
      if (jd.contains("constraint")) {
        for (const auto& c : jd.at("constraint")) {
          diag.constraint.push_back(c.get<std::string>());
        }
      }
      if (jd.contains("regions")) {
        for (const auto& r : jd.at("regions")) {
          ModeRegion region;
          region.name = r.at("name").get<std::string>();
          region.coordinate = r.at("coordinate").get<std::string>();
          if (r.contains("lower")) region.lower = r.at("lower").get<double>();
          if (r.contains("upper")) region.upper = r.at("upper").get<double>();
          if (!(region.lower < region.upper)) {
            throw ConfigError("region bounds must satisfy lower < upper");
          }
          diag.regions.push_back(std::move(region));
        }
      }
      diag.burn_in_index = jd.value("burn_in_index", 0ull);
      config.diagnose = std::move(diag);
    }

    if (j.contains("io")) {
      const json& ji = j.at("io");
      config.io.data_path = ji.value("data_path", "");
      config.io.checkpoint_path = ji.value("checkpoint_path", "");
      config.io.checkpoint_every = ji.value("checkpoint_every", 0ull);
    }

    return config;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

ObservationSet load_sequences(const std::string& path, const ModelSpec& spec) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  const std::size_t n_streams = static_cast<std::size_t>(spec.n_streams());
  const bool has_covariate = spec.covariate_levels > 0;

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto header = split_csv_line(line);
  const std::size_t expected_cols = 2 + n_streams + (has_covariate ? 1 : 0);
  if (header.size() != expected_cols || header[0] != "sequence_id" ||
      header[1] != "t" ||
      (has_covariate && header.back() != "covariate")) {
    throw DataError(path + ": header must be sequence_id,t," +
                    std::to_string(n_streams) + " stream column(s)" +
                    (has_covariate ? ",covariate" : ""));
  }

  ObservationSet data;
  std::vector<std::string> seen_ids;
  std::string current_id;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string at = path + " row " + std::to_string(row_no) + ": ";
    if (fields.size() != expected_cols) {
      throw DataError(at + "expected " + std::to_string(expected_cols) +
                      " fields, got " + std::to_string(fields.size()));
    }
    const std::string& id = fields[0];
    if (id != current_id) {
      for (const std::string& prev : seen_ids) {
        if (prev == id) {
          throw DataError(at + "sequence_id '" + id +
                          "' reappears after another sequence");
        }
      }
      seen_ids.push_back(id);
      current_id = id;
      data.sequences.emplace_back();
    }
    Sequence& seq = data.sequences.back();
    std::size_t t = 0;
    try {
      t = static_cast<std::size_t>(std::stoull(fields[1]));
    } catch (const std::exception&) {
      throw DataError(at + "t is not an integer: '" + fields[1] + "'");
    }
    if (t != seq.length + 1) {
      throw DataError(at + "t must be contiguous from 1; expected " +
                      std::to_string(seq.length + 1) + ", got " +
                      std::to_string(t));
    }
    for (std::size_t p = 0; p < n_streams; ++p) {
      const std::string& cell = fields[2 + p];
      if (cell.empty()) {
        seq.values.push_back(kMissing);
      } else {
        try {
          seq.values.push_back(parse_double(cell));
        } catch (const DataError&) {
          throw DataError(at + "stream column " + std::to_string(p + 1) +
                          " is not a number: '" + cell + "'");
        }
      }
    }
    int level = 0;
    if (has_covariate) {
      const std::string& cell = fields.back();
      try {
        level = std::stoi(cell);
      } catch (const std::exception&) {
        throw DataError(at + "covariate is not an integer: '" + cell + "'");
      }
      if (level < 0 || level > spec.covariate_levels) {
        throw DataError(at + "covariate level " + std::to_string(level) +
                        " outside 0.." +
                        std::to_string(spec.covariate_levels));
      }
    }
    seq.covariates.push_back(level);
    ++seq.length;
  }
  if (data.sequences.empty()) throw DataError(path + ": no data rows");
  validate_observations(spec, data);
  return data;
}

void write_sequences(const std::string& path, const ModelSpec& spec,
                     const ObservationSet& data) {
  std::ostringstream out;
  out << "sequence_id,t";
  for (int p = 1; p <= spec.n_streams(); ++p) out << ",stream" << p;
  if (spec.covariate_levels > 0) out << ",covariate";
  out << '\n';
  for (std::size_t w = 0; w < data.sequences.size(); ++w) {
    const Sequence& seq = data.sequences[w];
    for (std::size_t t = 0; t < seq.length; ++t) {
      out << "seq" << (w + 1) << ',' << (t + 1);
      for (int p = 0; p < spec.n_streams(); ++p) {
        const double y = seq.value(t, p, spec.n_streams());
        out << ',';
        if (!is_missing(y)) out << format_double(y);
      }
      if (spec.covariate_levels > 0) out << ',' << seq.covariates[t];
      out << '\n';
    }
  }
  write_file(path, out.str());
}

void write_samples(const SampleStore& store, const std::string& path) {
  std::ostringstream out;
  out << "iteration";
  for (const std::string& name : store.names) out << ',' << name;
  out << '\n';
  for (std::size_t r = 0; r < store.n_rows(); ++r) {
    out << store.iterations[r];
    for (double v : store.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
  write_file(path, out.str());
}

SampleStore read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "iteration") {
    throw DataError(path + ": first column must be 'iteration'");
  }
  SampleStore store;
  store.names.assign(header.begin() + 1, header.end());
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError(path + " row " + std::to_string(row_no) +
                      ": wrong field count");
    }
    store.iterations.push_back(std::stoull(fields[0]));
    for (std::size_t c = 1; c < fields.size(); ++c) {
      store.values.push_back(parse_double(fields[c]));
    }
  }
  return store;
}

void checkpoint_to_file(const PtEngine& engine, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp);
    engine.save(out);
    if (!out) throw DataError("checkpoint write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("cannot move checkpoint into place at " + path);
  }
}

void resume_from_file(PtEngine& engine, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  engine.load(in);
}

std::string ladder_to_json(const TemperatureLadder& ladder) {
  json j;
  j["betas"] = ladder.betas;
  j["swap_attempts"] = ladder.attempts;
  j["swap_accepts"] = ladder.accepts;
  std::vector<double> rates;
  for (std::size_t k = 0; k < ladder.n_pairs(); ++k) {
    rates.push_back(ladder.rate(k));
  }
  j["swap_rates"] = rates;
  return j.dump(2) + "\n";
}

TemperatureLadder ladder_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("ladder file is not valid JSON: ") + e.what());
  }
  TemperatureLadder ladder =
      TemperatureLadder::from_betas(doubles_from(j.at("betas"), "betas"));
  if (j.contains("swap_attempts")) {
    ladder.attempts = j.at("swap_attempts").get<std::vector<std::uint64_t>>();
    ladder.accepts = j.at("swap_accepts").get<std::vector<std::uint64_t>>();
  }
  ladder.validate();
  return ladder;
}

}  // namespace pthmm
