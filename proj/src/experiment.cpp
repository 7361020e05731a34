#include "modmine/experiment.hpp"

#include <cmath>

#include "modmine/io.hpp"

namespace modmine {

RunResult run_experiment(const ExperimentConfig& config) {
  const Dataset data = load_dataset(config);
  const ProtocolSplit split = make_split(config, data);
  const TrainSetup setup = make_setup(config, data.input_dim);
  RunResult out;
  out.state = train(setup, split);
  out.validation = evaluate_cmc(out.state.embedder, out.state.metric, split.validation,
                                config.eval.gallery_draws, derive_seeds(config.seed).eval);
  return out;
}

namespace {

AblationRow run_row(const ExperimentConfig& base, MiningMode mode, double lambda, std::string label) {
  AblationRow row;
  row.label = std::move(label);
  row.mode = mode;
  row.lambda = lambda;
  for (auto seed : base.ablation.seeds) {
    ExperimentConfig c = base;
    c.seed = seed;
    c.train.mining_mode = mode;
    c.metric.lambda = lambda;
    const auto result = run_experiment(c);
    row.rank1.push_back(result.validation.mean.rates.front());
    const auto& rates = result.validation.mean.rates;
    if (row.mean_curve.rates.empty()) row.mean_curve.rates.assign(rates.size(), 0.0);
    if (row.mean_curve.rates.size() == rates.size()) {
      for (std::size_t r = 0; r < rates.size(); ++r) row.mean_curve.rates[r] += rates[r];
    }
    row.mean_curve.num_probes += result.validation.mean.num_probes;
  }
  const double n = static_cast<double>(row.rank1.size());
  for (double& r : row.mean_curve.rates) r /= n;
  for (double r : row.rank1) row.rank1_mean += r / n;
  double var = 0.0;
  for (double r : row.rank1) var += (r - row.rank1_mean) * (r - row.rank1_mean);
  row.rank1_sd = row.rank1.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  return row;
}

}  // namespace

std::vector<AblationRow> run_ablation(const ExperimentConfig& config) {
  if (config.ablation.seeds.empty()) throw std::invalid_argument("ablation needs at least one seed");
  std::vector<AblationRow> rows;
  for (auto mode : config.ablation.arms)
    rows.push_back(run_row(config, mode, config.metric.lambda, to_string(mode)));
  for (double lambda : config.ablation.lambdas) {
    rows.push_back(run_row(config, config.train.mining_mode, lambda,
                           "lambda=" + format_double(lambda)));
  }
  return rows;
}

void write_ablation_table(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
  std::string text = "arm,lambda,rank1_mean,rank1_sd,rank1_per_seed\n";
  for (const auto& r : rows) {
    text += to_string(r.mode) + "," + format_double(r.lambda) + "," + format_double(r.rank1_mean) +
            "," + format_double(r.rank1_sd) + ",";
    for (std::size_t i = 0; i < r.rank1.size(); ++i) text += (i ? ";" : "") + format_double(r.rank1[i]);
    text += "\n";
  }
  write_text(path, text);
}

}  // namespace modmine
