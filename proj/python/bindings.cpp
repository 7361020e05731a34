#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "modmine/commands.hpp"
#include "modmine/config.hpp"
#include "modmine/evaluation.hpp"
#include "modmine/experiment.hpp"
#include "modmine/mining.hpp"
#include "modmine/trainer.hpp"

namespace py = pybind11;
using namespace modmine;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  const auto r = static_cast<std::size_t>(a.shape(0)), c = static_cast<std::size_t>(a.shape(1));
  return Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

Vector to_vector(const Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
  return {a.data(), a.data() + a.shape(0)};
}

Array from_matrix(const Matrix& m) {
  return Array({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())}, m.entries().data());
}

Array from_vector(const std::vector<double>& v) {
  return Array(static_cast<py::ssize_t>(v.size()), v.data());
}

py::dict mining_dict(const MiningResult& r) {
  py::dict d;
  d["positive"] = r.moderate_positive_index;
  d["negative"] = r.hardest_negative_index;
  d["positive_distance"] = r.positive_distance;
  d["negative_distance"] = r.negative_distance;
  d["fallback"] = r.fallback_used;
  return d;
}

ExperimentConfig config_from_text(const std::string& text, const std::filesystem::path& base_dir) {
  return parse_config(text, "<string>", base_dir);
}

py::tuple run_command(const std::string& name, std::optional<std::filesystem::path> config,
                      std::optional<std::filesystem::path> checkpoint, std::optional<std::filesystem::path> out,
                      std::optional<std::uint64_t> seed) {
  cli::Options o{config, checkpoint, out, seed};
  std::ostringstream so, se;
  int code = 0;
  if (name == "train") code = cli::cmd_train(o, so, se);
  else if (name == "eval") code = cli::cmd_eval(o, so, se);
  else if (name == "spectrum") code = cli::cmd_spectrum(o, so, se);
  else if (name == "ablation") code = cli::cmd_ablation(o, so, se);
  else if (name == "mine-debug") code = cli::cmd_mine_debug(o, so, se);
  else if (name == "gen-data") code = cli::cmd_gen_data(o, so, se);
  else throw std::invalid_argument("unknown command: " + name);
  return py::make_tuple(code, so.str(), se.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Moderate positive mining with a regularized Mahalanobis metric.";
  m.attr("__version__") = MODMINE_VERSION;

  m.def("distance", [](const Array& w, const Array& x1, const Array& x2) {
    return distance(MetricParams{to_matrix(w)}, to_vector(x1), to_vector(x2));
  }, py::arg("w"), py::arg("x1"), py::arg("x2"), "||W^T (x1 - x2)||");
  m.def("metric_matrix", [](const Array& w) { return from_matrix(metric_matrix(MetricParams{to_matrix(w)})); },
        py::arg("w"));
  m.def("regularizer", [](const Array& w, double lambda) { return regularizer(MetricParams{to_matrix(w)}, lambda); },
        py::arg("w"), py::arg("lam"));
  m.def("regularizer_grad", [](const Array& w, double lambda) {
    return from_matrix(regularizer_grad(MetricParams{to_matrix(w)}, lambda));
  }, py::arg("w"), py::arg("lam"));
  m.def("spectrum", [](const Array& w) { return from_vector(spectrum(MetricParams{to_matrix(w)})); }, py::arg("w"),
        "Eigenvalues of W W^T, descending.");

  m.def("mine_hardest_negative", [](const Array& d) { return mine_hardest_negative(to_vector(d)); },
        py::arg("negative_distances"));
  m.def("mine_moderate_positive", [](const Array& d, double hardest) {
    const auto r = mine_moderate_positive(to_vector(d), hardest);
    return py::make_tuple(r.index, r.fallback_used);
  }, py::arg("positive_distances"), py::arg("hardest_negative_distance"));
  m.def("mine_distances", [](const Array& pos, const Array& neg) {
    return mining_dict(mine_distances(to_vector(pos), to_vector(neg)));
  }, py::arg("positive_distances"), py::arg("negative_distances"));

  m.def("contrastive_loss", &contrastive_loss, py::arg("d_pos"), py::arg("d_neg"), py::arg("margin"));

  m.def("generate_synthetic", [](std::size_t identities, std::size_t per_view, std::size_t dim, double curvature,
                                 double spread, double offset, std::uint64_t seed) {
    const auto d = generate_synthetic({identities, per_view, dim, curvature, spread, offset, seed});
    py::array_t<int> ids(static_cast<py::ssize_t>(d.samples.size())), views(static_cast<py::ssize_t>(d.samples.size()));
    Matrix features(d.samples.size(), d.input_dim);
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
      ids.mutable_at(i) = d.samples[i].identity;
      views.mutable_at(i) = d.samples[i].view;
      for (std::size_t k = 0; k < d.input_dim; ++k) features(i, k) = d.samples[i].features[k];
    }
    return py::make_tuple(ids, views, from_matrix(features));
  }, py::arg("num_identities") = 50, py::arg("samples_per_view") = 5, py::arg("input_dim") = 30,
     py::arg("manifold_curvature") = 1.0, py::arg("intra_class_spread") = 1.0,
     py::arg("view_offset_magnitude") = 0.5, py::arg("seed") = 0,
     "Returns (identities, views, features).");

  m.def("cmc_from_distances", [](const Array& distances, const std::vector<std::size_t>& truth) {
    const Matrix d = to_matrix(distances);
    std::vector<std::vector<double>> rows(d.rows(), std::vector<double>(d.cols()));
    for (std::size_t r = 0; r < d.rows(); ++r)
      for (std::size_t c = 0; c < d.cols(); ++c) rows[r][c] = d(r, c);
    return from_vector(cmc_from_distances(rows, truth).rates);
  }, py::arg("distances"), py::arg("true_match"), "distances[probe, gallery]; ties rank by gallery index.");

  m.def("render_config", [](const std::string& text, const std::filesystem::path& base_dir) {
    return render_config(config_from_text(text, base_dir));
  }, py::arg("text"), py::arg("base_dir") = std::filesystem::path("."));

  m.def("run_experiment", [](const std::string& text, const std::filesystem::path& base_dir) {
    RunResult r;
    {
      py::gil_scoped_release release;
      r = run_experiment(config_from_text(text, base_dir));
    }
    py::list history;
    for (const auto& rec : r.state.loss_history)
      history.append(py::make_tuple(rec.step, rec.train_loss, rec.validation_loss));
    py::dict out;
    out["loss_history"] = history;
    out["cmc"] = from_vector(r.validation.mean.rates);
    out["rank1_sd"] = r.validation.rank1_sd;
    out["w"] = from_matrix(r.state.metric.w);
    return out;
  }, py::arg("config_text"), py::arg("base_dir") = std::filesystem::path("."),
     "Trains from config text and returns the loss history and validation CMC.");

  m.def("run_ablation", [](const std::string& text, const std::filesystem::path& base_dir) {
    std::vector<AblationRow> rows;
    {
      py::gil_scoped_release release;
      rows = run_ablation(config_from_text(text, base_dir));
    }
    py::list out;
    for (const auto& r : rows) {
      py::dict d;
      d["label"] = r.label;
      d["lambda"] = r.lambda;
      d["rank1"] = r.rank1;
      d["rank1_mean"] = r.rank1_mean;
      d["rank1_sd"] = r.rank1_sd;
      out.append(d);
    }
    return out;
  }, py::arg("config_text"), py::arg("base_dir") = std::filesystem::path("."));

  m.def("command", &run_command, py::arg("name"), py::arg("config") = py::none(),
        py::arg("checkpoint") = py::none(), py::arg("out") = py::none(), py::arg("seed") = py::none(),
        "Runs a CLI subcommand; returns (exit_code, stdout, stderr).");
}
