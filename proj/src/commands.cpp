#include "modmine/commands.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>

#include "modmine/checkpoint.hpp"
#include "modmine/config.hpp"
#include "modmine/evaluation.hpp"
#include "modmine/experiment.hpp"
#include "modmine/io.hpp"
#include "modmine/mining.hpp"
#include "modmine/plot.hpp"

namespace modmine::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DivergenceError& e) {
    err << "numeric error at step " << e.step() << ": " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

ExperimentConfig config_from(const Options& o) {
  if (!o.config) throw UsageError("--config is required for this command");
  ExperimentConfig c = load_config(*o.config);
  if (o.seed) c.seed = *o.seed;
  return c;
}

fs::path output_dir(const Options& o, const fs::path& fallback) {
  fs::path dir = o.out ? *o.out : fallback;
  fs::create_directories(dir);
  return dir;
}

Checkpoint checkpoint_from(const Options& o) {
  if (!o.checkpoint) throw UsageError("--checkpoint is required for this command");
  if (!fs::exists(*o.checkpoint)) throw UsageError("checkpoint not found: " + o.checkpoint->string());
  return read_checkpoint(*o.checkpoint);
}

void require_compatible(const Checkpoint& ckpt, const ExperimentConfig& config, std::size_t input_dim) {
  const auto& a = ckpt.embedder.config;
  const auto& b = config.embedder;
  std::string diffs;
  auto check = [&diffs](bool same, const std::string& name, const std::string& lhs,
                        const std::string& rhs) {
    if (!same) diffs += "\n  " + name + ": checkpoint " + lhs + ", config " + rhs;
  };
  auto dims = [](const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return "[" + s + "]";
  };
  check(a.input_dim == input_dim, "input_dim", std::to_string(a.input_dim), std::to_string(input_dim));
  check(a.num_branches == b.num_branches, "num_branches", std::to_string(a.num_branches),
        std::to_string(b.num_branches));
  check(a.overlap_fraction == b.overlap_fraction, "overlap_fraction",
        format_double(a.overlap_fraction), format_double(b.overlap_fraction));
  check(a.branch_hidden_dims == b.branch_hidden_dims, "branch_hidden_dims",
        dims(a.branch_hidden_dims), dims(b.branch_hidden_dims));
  check(a.joint_hidden_dim == b.joint_hidden_dim, "joint_hidden_dim",
        std::to_string(a.joint_hidden_dim), std::to_string(b.joint_hidden_dim));
  check(a.output_dim == b.output_dim, "output_dim", std::to_string(a.output_dim),
        std::to_string(b.output_dim));
  check(a.tied_branches == b.tied_branches, "tied_branches", a.tied_branches ? "true" : "false",
        b.tied_branches ? "true" : "false");
  if (!diffs.empty()) throw ConfigError("checkpoint does not match config dimensions:" + diffs);
}

PlotSpec cmc_plot(const std::string& title) {
  return {title, "rank", "identification rate", {}, false};
}

PlotSeries cmc_series(const std::string& label, const CmcCurve& curve) {
  PlotSeries s{label, {}, {}};
  for (std::size_t r = 0; r < curve.rates.size(); ++r) {
    s.x.push_back(static_cast<double>(r + 1));
    s.y.push_back(curve.rates[r]);
  }
  return s;
}

}  // namespace

int cmd_train(const Options& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ExperimentConfig config = config_from(options);
    const fs::path dir = output_dir(options, config.output_dir);
    const RunResult result = run_experiment(config);

    write_checkpoint({result.state.embedder, result.state.metric}, dir / "checkpoint.txt");
    write_loss_history(result.state.loss_history, dir / "loss_history.csv");

    ExperimentConfig manifest = config;
    manifest.run_info["version"] = MODMINE_VERSION;
    manifest.run_info["command"] = "train";
    manifest.run_info["seed"] = std::to_string(config.seed);
    write_text(dir / "manifest.cfg", "# modmine run manifest; rerun with: modmine train --config "
                                     "manifest.cfg --out <dir>\n" +
                                         render_config(manifest));

    PlotSpec loss{"loss", "step", "loss", {}, false};
    PlotSeries train_s{"train", {}, {}}, val_s{"validation", {}, {}};
    for (const auto& r : result.state.loss_history) {
      train_s.x.push_back(static_cast<double>(r.step));
      train_s.y.push_back(r.train_loss);
      val_s.x.push_back(static_cast<double>(r.step));
      val_s.y.push_back(r.validation_loss);
    }
    loss.series = {train_s, val_s};
    write_svg(loss, dir / "loss_history.svg");

    const auto& last = result.state.loss_history.back();
    out << "trained " << result.state.step << " steps; final train loss "
        << format_double(last.train_loss) << ", validation loss "
        << format_double(last.validation_loss) << ", validation rank-1 "
        << format_double(result.validation.mean.rates.front()) << "\n"
        << "wrote " << (dir / "checkpoint.txt").string() << ", "
        << (dir / "loss_history.csv").string() << ", " << (dir / "manifest.cfg").string() << "\n";
    return kOk;
  });
}

int cmd_eval(const Options& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig config = config_from(options);
    const Checkpoint ckpt = checkpoint_from(options);
    const Dataset data = load_dataset(config);
    require_compatible(ckpt, config, data.input_dim);
    const ProtocolSplit split = make_split(config, data);
    const CmcSummary summary = evaluate_cmc(ckpt.embedder, ckpt.metric, split.test,
                                            config.eval.gallery_draws, derive_seeds(config.seed).eval);

    const fs::path dir = output_dir(options, config.output_dir);
    write_cmc(summary.mean, dir / "cmc.csv");
    PlotSpec plot = cmc_plot("CMC (test split)");
    plot.series.push_back(cmc_series("test", summary.mean));
    write_svg(plot, dir / "cmc.svg");

    for (auto k : config.eval.ranks) {
      if (k > summary.mean.length()) {
        out << "rank-" << k << ": n/a (gallery has " << summary.mean.length() << " entries)\n";
        continue;
      }
      out << "rank-" << k << ": " << std::fixed << std::setprecision(4) << rank_k(summary.mean, k)
          << std::defaultfloat << "\n";
    }
    out << "rank-1 sd over " << config.eval.gallery_draws << " gallery draws: "
        << format_double(summary.rank1_sd) << "\n";
    return kOk;
  });
}

int cmd_spectrum(const Options& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Checkpoint ckpt = checkpoint_from(options);
    const fs::path dir = output_dir(options, ".");
    const auto eig = spectrum(ckpt.metric);
    write_spectrum(eig, dir / "spectrum.csv");
    PlotSeries s{"eigenvalues of M", {}, eig};
    for (std::size_t i = 0; i < eig.size(); ++i) s.x.push_back(static_cast<double>(i + 1));
    write_svg({"spectrum of M", "index", "eigenvalue", {s}, false}, dir / "spectrum.svg");
    double max_dev = 0.0;
    for (double v : eig) max_dev = std::max(max_dev, std::abs(v - 1.0));
    out << "eigenvalues: " << eig.size() << ", largest " << format_double(eig.front())
        << ", smallest " << format_double(eig.back()) << ", max |eig - 1| " << format_double(max_dev)
        << "\n";
    return kOk;
  });
}

int cmd_ablation(const Options& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig config = config_from(options);
    const fs::path dir = output_dir(options, config.output_dir);
    const auto rows = run_ablation(config);
    write_ablation_table(rows, dir / "ablation.csv");
    PlotSpec plot = cmc_plot("CMC by training arm (validation)");
    for (const auto& r : rows) {
      std::string name = r.label;
      for (char& c : name)
        if (c == '=') c = '_';
      write_cmc(r.mean_curve, dir / ("cmc_" + name + ".csv"));
      plot.series.push_back(cmc_series(r.label, r.mean_curve));
      out << std::left << std::setw(32) << r.label << " rank-1 " << std::fixed << std::setprecision(4)
          << r.rank1_mean << " +- " << r.rank1_sd << std::defaultfloat << "\n";
    }
    write_svg(plot, dir / "ablation_cmc.svg");
    return kOk;
  });
}

int cmd_mine_debug(const Options& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig config = config_from(options);
    const Dataset data = load_dataset(config);
    const ProtocolSplit split = make_split(config, data);
    const TrainSetup setup = make_setup(config, data.input_dim);
    Checkpoint params;
    if (options.checkpoint) {
      params = checkpoint_from(options);
      require_compatible(params, config, data.input_dim);
    } else {
      const TrainState fresh = init_state(setup);
      params = {fresh.embedder, fresh.metric};
    }
    const fs::path dir = output_dir(options, config.output_dir);
    std::ofstream trace(dir / "mine_trace.csv");
    if (!trace) throw std::runtime_error("cannot write " + (dir / "mine_trace.csv").string());
    write_trace_header(trace);
    Rng rng(setup.train.seed);
    std::uniform_int_distribution<std::size_t> pick(0, split.train.samples.size() - 1);
    std::size_t fallbacks = 0;
    for (std::size_t i = 0; i < options.trace_batches; ++i) {
      const Sample& anchor = split.train.samples[pick(rng)];
      const MiniBatch batch = build_minibatch(split.train, anchor, setup.train.k, rng);
      const MiningResult r = mine(params.embedder, params.metric, batch);
      fallbacks += r.fallback_used ? 1 : 0;
      write_trace_line(trace, anchor.identity, r);
    }
    out << "traced " << options.trace_batches << " batches (" << fallbacks
        << " used the fallback) to " << (dir / "mine_trace.csv").string() << "\n";
    return kOk;
  });
}

int cmd_gen_data(const Options& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig config = config_from(options);
    if (!config.dataset.synthetic) throw UsageError("gen-data needs dataset.source = synthetic");
    const fs::path dir = output_dir(options, config.output_dir);
    const Dataset data = load_dataset(config);
    write_delimited(data, dir / "dataset.csv");
    out << "wrote " << data.samples.size() << " samples (" << data.identities().size()
        << " identities, dim " << data.input_dim << ") to " << (dir / "dataset.csv").string() << "\n";
    return kOk;
  });
}

}  // namespace modmine::cli
