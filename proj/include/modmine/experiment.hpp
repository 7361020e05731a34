#pragma once

#include <string>
#include <vector>

#include "modmine/config.hpp"
#include "modmine/evaluation.hpp"
#include "modmine/trainer.hpp"

namespace modmine {

struct RunResult {
  TrainState state;
  CmcSummary validation;
};

// Generates or loads the dataset, splits it, trains, and evaluates the
// validation CMC over config.eval.gallery_draws gallery draws.
RunResult run_experiment(const ExperimentConfig& config);

struct AblationRow {
  std::string label;
  MiningMode mode = MiningMode::moderate_plus_hard_negative;
  double lambda = 0.0;
  std::vector<double> rank1;  // one validation rank-1 per seed
  double rank1_mean = 0.0;
  double rank1_sd = 0.0;
  CmcCurve mean_curve;        // averaged over seeds
};

// One row per configured mining arm (at the configured lambda), followed by
// one row per lambda in the optional sweep (at the configured mining mode).
// Every row is trained on the same list of master seeds.
std::vector<AblationRow> run_ablation(const ExperimentConfig& config);

// `arm,lambda,rank1_mean,rank1_sd,rank1_per_seed` (per-seed values joined with ';').
void write_ablation_table(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

}  // namespace modmine
