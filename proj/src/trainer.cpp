#include "modmine/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "modmine/io.hpp"

namespace modmine {

std::string to_string(MiningMode mode) {
  switch (mode) {
    case MiningMode::moderate_plus_hard_negative: return "moderate_plus_hard_negative";
    case MiningMode::hard_negative_only: return "hard_negative_only";
    case MiningMode::none: return "none";
  }
  return "unknown";
}

MiningMode parse_mining_mode(std::string_view text) {
  if (text == "moderate_plus_hard_negative") return MiningMode::moderate_plus_hard_negative;
  if (text == "hard_negative_only") return MiningMode::hard_negative_only;
  if (text == "none") return MiningMode::none;
  throw std::invalid_argument("unknown mining mode '" + std::string(text) +
                              "' (expected moderate_plus_hard_negative, hard_negative_only or none)");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("train: learning_rate must be a finite value >= 0");
  if (k < 1) throw std::invalid_argument("train: k must be >= 1");
  if (!(augment_magnitude >= 0.0)) throw std::invalid_argument("train: augment_magnitude must be >= 0");
  if (report_every < 1) throw std::invalid_argument("train: report_every must be >= 1");
}

double contrastive_loss(double d_pos, double d_neg, double margin) {
  return d_pos + std::max(0.0, margin - d_neg);
}

double total_loss(const TrainState& state, const MiningResult& result, const MetricConfig& metric) {
  return contrastive_loss(result.positive_distance, result.negative_distance, metric.margin) +
         regularizer(state.metric, metric.lambda);
}

TripleLoss triple_objective(const EmbedderParams& embedder, const MetricParams& metric,
                            const Triple& triple, const MetricConfig& config) {
  const Vector a = embed(embedder, triple.anchor);
  const Vector p = embed(embedder, triple.positive);
  const Vector n = embed(embedder, triple.negative);
  TripleLoss out;
  out.d_pos = distance(metric, a, p);
  out.d_neg = distance(metric, a, n);
  out.contrastive = contrastive_loss(out.d_pos, out.d_neg, config.margin);
  out.total = out.contrastive + regularizer(metric, config.lambda);
  return out;
}

namespace {

constexpr double kMinDifferentiableDistance = 1e-12;

void add_into(Matrix& dst, const Matrix& src, double scale) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * s[i];
}

void add_into(Vector& dst, const Vector& src, double scale) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

}  // namespace

TripleLoss triple_gradients(const EmbedderParams& embedder, const MetricParams& metric,
                            const Triple& triple, const MetricConfig& config, Gradients& grads) {
  auto fa = forward(embedder, triple.anchor);
  auto fp = forward(embedder, triple.positive);
  auto fn = forward(embedder, triple.negative);

  TripleLoss out;
  out.d_pos = distance(metric, fa.embedding, fp.embedding);
  out.d_neg = distance(metric, fa.embedding, fn.embedding);
  out.contrastive = contrastive_loss(out.d_pos, out.d_neg, config.margin);
  out.total = out.contrastive + regularizer(metric, config.lambda);

  Vector grad_a(fa.embedding.size(), 0.0);
  Vector grad_p(fa.embedding.size(), 0.0);
  Vector grad_n(fa.embedding.size(), 0.0);
  if (out.d_pos >= kMinDifferentiableDistance) {
    const auto g = distance_grads(metric, fa.embedding, fp.embedding);
    add_into(grads.w, g.grad_w, 1.0);
    add_into(grad_a, g.grad_x1, 1.0);
    add_into(grad_p, g.grad_x2, 1.0);
  }
  if (config.margin - out.d_neg > 0.0 && out.d_neg >= kMinDifferentiableDistance) {
    const auto g = distance_grads(metric, fa.embedding, fn.embedding);
    add_into(grads.w, g.grad_w, -1.0);
    add_into(grad_a, g.grad_x1, -1.0);
    add_into(grad_n, g.grad_x2, -1.0);
  }
  if (config.lambda != 0.0) add_into(grads.w, regularizer_grad(metric, config.lambda), 1.0);

  backward_accumulate(embedder, fa.tape, grad_a, grads.embedder);
  backward_accumulate(embedder, fp.tape, grad_p, grads.embedder);
  backward_accumulate(embedder, fn.tape, grad_n, grads.embedder);
  return out;
}

TrainState init_state(const TrainSetup& setup) {
  setup.embedder.validate();
  setup.metric.validate();
  setup.train.validate();
  TrainState state;
  state.embedder = init_embedder(setup.embedder);
  if (setup.equal_branch_init) equalize_branches(state.embedder);
  state.metric = init_metric(setup.embedder.output_dim, setup.metric, setup.metric_seed);
  return state;
}

namespace {

struct Selection {
  std::size_t positive = 0;
  std::size_t negative = 0;
  MiningResult result;
};

Selection select_pair(MiningMode mode, const std::vector<double>& pos_d,
                      const std::vector<double>& neg_d, Rng& rng) {
  Selection s;
  switch (mode) {
    case MiningMode::moderate_plus_hard_negative:
      s.result = mine_distances(pos_d, neg_d);
      break;
    case MiningMode::hard_negative_only: {
      s.result.hardest_negative_index = mine_hardest_negative(neg_d);
      std::uniform_int_distribution<std::size_t> pick(0, pos_d.size() - 1);
      s.result.moderate_positive_index = pick(rng);
      break;
    }
    case MiningMode::none: {
      std::uniform_int_distribution<std::size_t> pick_pos(0, pos_d.size() - 1);
      std::uniform_int_distribution<std::size_t> pick_neg(0, neg_d.size() - 1);
      s.result.moderate_positive_index = pick_pos(rng);
      s.result.hardest_negative_index = pick_neg(rng);
      break;
    }
  }
  s.positive = s.result.moderate_positive_index;
  s.negative = s.result.hardest_negative_index;
  s.result.positive_distance = pos_d[s.positive];
  s.result.negative_distance = neg_d[s.negative];
  return s;
}

MiniBatch draw_batch(const Dataset& dataset, std::size_t k, Rng& rng) {
  if (dataset.samples.empty()) throw DataError("cannot draw a batch from an empty dataset");
  std::uniform_int_distribution<std::size_t> pick(0, dataset.samples.size() - 1);
  constexpr int kAttempts = 64;
  for (int attempt = 1;; ++attempt) {
    const Sample& anchor = dataset.samples[pick(rng)];
    try {
      return build_minibatch(dataset, anchor, k, rng);
    } catch (const UnusableAnchorError&) {
      if (attempt == kAttempts) throw;
    }
  }
}

struct Distances {
  std::vector<double> positive;
  std::vector<double> negative;
};

Distances batch_distances(const EmbedderParams& embedder, const MetricParams& metric,
                          const MiniBatch& batch) {
  const Vector anchor = embed(embedder, batch.anchor.features);
  Distances d;
  for (const auto& s : batch.positives)
    d.positive.push_back(distance(metric, anchor, embed(embedder, s.features)));
  for (const auto& s : batch.negatives)
    d.negative.push_back(distance(metric, anchor, embed(embedder, s.features)));
  return d;
}

}  // namespace

StepReport train_step(TrainState& state, const TrainSetup& setup, const Dataset& dataset, Rng& rng) {
  const auto& cfg = setup.train;
  MiniBatch batch = draw_batch(dataset, cfg.k, rng);
  if (cfg.augment_magnitude > 0.0) {
    batch.anchor = augment(batch.anchor, cfg.augment_magnitude, rng);
    for (auto& s : batch.positives) s = augment(s, cfg.augment_magnitude, rng);
    for (auto& s : batch.negatives) s = augment(s, cfg.augment_magnitude, rng);
  }

  if (cfg.mining_refresh_every > 0 &&
      (!state.mining_snapshot || state.step % cfg.mining_refresh_every == 0)) {
    state.mining_snapshot = TrainState::Snapshot{state.embedder, state.metric};
  }
  const auto& mining_embedder =
      state.mining_snapshot && cfg.mining_refresh_every > 0 ? state.mining_snapshot->embedder : state.embedder;
  const auto& mining_metric =
      state.mining_snapshot && cfg.mining_refresh_every > 0 ? state.mining_snapshot->metric : state.metric;

  const auto d = batch_distances(mining_embedder, mining_metric, batch);
  const auto sel = select_pair(cfg.mining_mode, d.positive, d.negative, rng);

  const Triple triple{batch.anchor.features, batch.positives[sel.positive].features,
                      batch.negatives[sel.negative].features};
  Gradients grads{state.embedder.zeros_like(), Matrix(state.metric.w.rows(), state.metric.w.cols())};
  const auto loss = triple_gradients(state.embedder, state.metric, triple, setup.metric, grads);

  state.embedder.add_scaled(grads.embedder, -cfg.learning_rate);
  add_into(state.metric.w, grads.w, -cfg.learning_rate);
  ++state.step;
  if (!state.embedder.all_finite() || !all_finite(state.metric.w.data())) {
    throw DivergenceError(state.step, "training diverged: non-finite parameter after step " +
                                          std::to_string(state.step));
  }

  StepReport report;
  report.loss = loss.total;
  report.mining = sel.result;
  report.anchor_identity = batch.anchor.identity;
  return report;
}

double evaluate_loss(const EmbedderParams& embedder, const MetricParams& metric,
                     const TrainSetup& setup, const Dataset& dataset, std::size_t anchors,
                     std::uint64_t seed) {
  if (anchors == 0) return 0.0;
  Rng rng(seed);
  const double reg = regularizer(metric, setup.metric.lambda);
  double sum = 0.0;
  for (std::size_t i = 0; i < anchors; ++i) {
    const MiniBatch batch = draw_batch(dataset, setup.train.k, rng);
    const auto d = batch_distances(embedder, metric, batch);
    const auto sel = select_pair(setup.train.mining_mode, d.positive, d.negative, rng);
    sum += contrastive_loss(sel.result.positive_distance, sel.result.negative_distance,
                            setup.metric.margin) +
           reg;
  }
  return sum / static_cast<double>(anchors);
}

TrainState train(const TrainSetup& setup, const ProtocolSplit& split) {
  TrainState state = init_state(setup);
  const auto& cfg = setup.train;
  auto record = [&] {
    LossRecord r;
    r.step = state.step;
    r.train_loss = evaluate_loss(state.embedder, state.metric, setup, split.train,
                                 cfg.eval_anchors, cfg.eval_seed);
    r.validation_loss = split.validation.samples.empty()
                            ? 0.0
                            : evaluate_loss(state.embedder, state.metric, setup, split.validation,
                                            cfg.eval_anchors, cfg.eval_seed);
    state.loss_history.push_back(r);
  };

  record();
  Rng rng(cfg.seed);
  for (std::size_t i = 0; i < cfg.steps; ++i) {
    train_step(state, setup, split.train, rng);
    if (state.step % cfg.report_every == 0 || state.step == cfg.steps) record();
  }
  state.mining_snapshot.reset();
  return state;
}

void write_loss_history(const std::vector<LossRecord>& history, const std::filesystem::path& path) {
  std::string text = "step,train_loss,val_loss\n";
  for (const auto& r : history) {
    text += std::to_string(r.step) + "," + format_double(r.train_loss) + "," +
            format_double(r.validation_loss) + "\n";
  }
  write_text(path, text);
}

std::vector<LossRecord> read_loss_history(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || trim(lines[0]) != "step,train_loss,val_loss")
    throw std::runtime_error(path.string() + ": missing header step,train_loss,val_loss");
  std::vector<LossRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto f = split(lines[i], ',');
    LossRecord r;
    long long step = 0;
    if (f.size() != 3 || !parse_int(f[0], step) || step < 0 || !parse_double(f[1], r.train_loss) ||
        !parse_double(f[2], r.validation_loss)) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(i + 1) + ": malformed");
    }
    r.step = static_cast<std::size_t>(step);
    out.push_back(r);
  }
  return out;
}

}  // namespace modmine
