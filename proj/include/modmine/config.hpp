#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "modmine/dataset.hpp"
#include "modmine/embedder.hpp"
#include "modmine/metric.hpp"
#include "modmine/trainer.hpp"

namespace modmine {

// Experiment configuration file grammar:
//
//   file    := { line }
//   line    := blank | comment | section | entry
//   comment := '#' any-text
//   section := '[' name ']'
//   entry   := key '=' value [ comment ]
//   value   := scalar | scalar { ',' scalar }
//
// Sections: experiment, dataset, embedder, metric, train, eval, ablation, run.
// Every key belongs to the most recent section header. Unknown sections or
// keys, duplicate keys and missing required keys are reported with the file
// name, line number and section.key name.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "run";

  struct DatasetSection {
    bool synthetic = true;
    std::filesystem::path path;  // when !synthetic
    SyntheticConfig synthetic_config;
    std::array<double, 3> split = {0.6, 0.2, 0.2};
  } dataset;

  EmbedderConfig embedder;  // input_dim is taken from the dataset
  MetricConfig metric;
  TrainConfig train;

  struct EvalSection {
    std::size_t gallery_draws = 10;
    std::vector<std::size_t> ranks = {1, 5, 10};
  } eval;

  struct AblationSection {
    std::vector<MiningMode> arms = {MiningMode::moderate_plus_hard_negative,
                                    MiningMode::hard_negative_only, MiningMode::none};
    std::vector<double> lambdas;  // empty: no lambda sweep
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  } ablation;

  // Informational fields echoed in run manifests.
  std::map<std::string, std::string> run_info;
};

// Parses the grammar above. `source` names the input in diagnostics. Relative
// dataset paths are resolved against `base_dir`.
ExperimentConfig parse_config(std::string_view text, const std::string& source,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Renders a config in the same grammar; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& config);

struct DerivedSeeds {
  std::uint64_t data = 0;
  std::uint64_t split = 0;
  std::uint64_t embedder = 0;
  std::uint64_t metric = 0;
  std::uint64_t train = 0;
  std::uint64_t eval = 0;
};

// Component seeds derived deterministically from one master seed.
DerivedSeeds derive_seeds(std::uint64_t master);

Dataset load_dataset(const ExperimentConfig& config);
ProtocolSplit make_split(const ExperimentConfig& config, const Dataset& dataset);
TrainSetup make_setup(const ExperimentConfig& config, std::size_t input_dim);

}  // namespace modmine
