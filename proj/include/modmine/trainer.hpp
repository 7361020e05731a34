#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "modmine/dataset.hpp"
#include "modmine/embedder.hpp"
#include "modmine/metric.hpp"
#include "modmine/mining.hpp"

namespace modmine {

enum class MiningMode { moderate_plus_hard_negative, hard_negative_only, none };

std::string to_string(MiningMode mode);
MiningMode parse_mining_mode(std::string_view text);

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t steps = 1000;
  std::size_t k = 8;
  MiningMode mining_mode = MiningMode::moderate_plus_hard_negative;
  double augment_magnitude = 0.0;
  std::uint64_t seed = 0;
  // Loss history is recorded at step 0, every report_every steps and at the end.
  std::size_t report_every = 100;
  // Anchors averaged per recorded train/validation loss; fixed evaluation seed.
  std::size_t eval_anchors = 64;
  std::uint64_t eval_seed = 20160101;
  // 0: mine with the live parameters every step. n > 0: mine with a parameter
  // snapshot refreshed every n steps.
  std::size_t mining_refresh_every = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainSetup {
  EmbedderConfig embedder;
  MetricConfig metric;
  TrainConfig train;
  // Seed for the metric layer's initial noise.
  std::uint64_t metric_seed = 0;
  // Copy branch 0 into every untied branch at initialization.
  bool equal_branch_init = false;
};

struct LossRecord {
  std::size_t step = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;

  bool operator==(const LossRecord&) const = default;
};

struct TrainState {
  EmbedderParams embedder;
  MetricParams metric;
  std::size_t step = 0;
  std::vector<LossRecord> loss_history;

  struct Snapshot {
    EmbedderParams embedder;
    MetricParams metric;
  };
  // Parameters used for mining when TrainConfig::mining_refresh_every > 0.
  std::optional<Snapshot> mining_snapshot;
};

class DivergenceError : public NumericError {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : NumericError(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// d_pos + max(0, margin - d_neg)
double contrastive_loss(double d_pos, double d_neg, double margin);

// Contrastive loss of the mined pair plus (lambda/2)|W W^T - I|_F^2.
double total_loss(const TrainState& state, const MiningResult& result, const MetricConfig& metric);

// Raw feature vectors of one training triple.
struct Triple {
  Vector anchor;
  Vector positive;
  Vector negative;
};

struct Gradients {
  EmbedderParams embedder;
  Matrix w;
};

struct TripleLoss {
  double total = 0.0;
  double contrastive = 0.0;
  double d_pos = 0.0;
  double d_neg = 0.0;
};

// Objective value only.
TripleLoss triple_objective(const EmbedderParams& embedder, const MetricParams& metric,
                            const Triple& triple, const MetricConfig& config);

// Objective value and exact gradients. The positive term is skipped when
// d_pos < 1e-12 and the negative term when the hinge is inactive.
TripleLoss triple_gradients(const EmbedderParams& embedder, const MetricParams& metric,
                            const Triple& triple, const MetricConfig& config, Gradients& grads);

TrainState init_state(const TrainSetup& setup);

struct StepReport {
  double loss = 0.0;
  MiningResult mining;
  int anchor_identity = 0;
};

// Builds a batch, selects the pair per mining mode, and applies one SGD update.
StepReport train_step(TrainState& state, const TrainSetup& setup, const Dataset& dataset, Rng& rng);

// Mean objective over `anchors` batches drawn with a fixed seed (no augmentation).
double evaluate_loss(const EmbedderParams& embedder, const MetricParams& metric,
                     const TrainSetup& setup, const Dataset& dataset, std::size_t anchors,
                     std::uint64_t seed);

TrainState train(const TrainSetup& setup, const ProtocolSplit& split);

// `step,train_loss,val_loss`
void write_loss_history(const std::vector<LossRecord>& history, const std::filesystem::path& path);
std::vector<LossRecord> read_loss_history(const std::filesystem::path& path);

}  // namespace modmine
