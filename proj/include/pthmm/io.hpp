#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pthmm/diagnostics.hpp"
#include "pthmm/model.hpp"
#include "pthmm/priors.hpp"
#include "pthmm/pt.hpp"
#include "pthmm/store.hpp"
#include "pthmm/tuner.hpp"

namespace pthmm {

// Parsed run configuration. Sections beyond `model` and `prior` are
// optional; each subcommand validates the sections it needs.
struct RunConfig {
  ModelSpec model;
  PriorConfig prior;
  std::vector<std::uint64_t> seeds;  // at least one

  std::optional<PtConfig> pt;  // ladder left empty when tuning is requested
  std::optional<TuneOptions> tune;

  struct SimulateBlock {
    ParamVector theta;
    std::vector<std::size_t> lengths;
    std::vector<std::vector<int>> covariates;  // may be empty
  };
  std::optional<SimulateBlock> simulate;

  struct DiagnoseBlock {
    std::vector<std::string> constraint;  // empty = no relabeling
    std::vector<ModeRegion> regions;
    std::size_t burn_in_index = 0;  // into retained draws, for running weights
  };
  std::optional<DiagnoseBlock> diagnose;

  struct IoBlock {
    std::string data_path;
    std::string checkpoint_path;
    std::uint64_t checkpoint_every = 0;
  };
  IoBlock io;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Observation CSV: header sequence_id,t,<stream names...>[,covariate];
// rows sorted by (sequence_id, t), t contiguous from 1, blank cells missing.
ObservationSet load_sequences(const std::string& path, const ModelSpec& spec);
void write_sequences(const std::string& path, const ModelSpec& spec,
                     const ObservationSet& data);

// Sample CSV: iteration column then the named coordinates, rendered with
// %.17g so a read inverts a write bit-exactly.
void write_samples(const SampleStore& store, const std::string& path);
SampleStore read_samples(const std::string& path);

void checkpoint_to_file(const PtEngine& engine, const std::string& path);
void resume_from_file(PtEngine& engine, const std::string& path);

// Ladder with swap statistics, as JSON.
std::string ladder_to_json(const TemperatureLadder& ladder);
TemperatureLadder ladder_from_json(const std::string& text);

std::string format_double(double v);  // %.17g
double parse_double(const std::string& text);

}  // namespace pthmm
