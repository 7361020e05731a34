#include "modmine/config.hpp"

#include <set>
#include <cmath>
#include <sstream>

#include "modmine/io.hpp"

namespace modmine {

namespace {

struct Entry {
  std::string value;
  std::size_t line = 0;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment", {"seed", "output_dir"}},
      {"dataset",
       {"source", "path", "num_identities", "samples_per_view", "input_dim", "manifold_curvature",
        "intra_class_spread", "view_offset_magnitude", "split"}},
      {"embedder",
       {"num_branches", "overlap_fraction", "branch_hidden_dims", "joint_hidden_dim", "output_dim",
        "tied_branches"}},
      {"metric", {"metric_dim", "lambda", "margin"}},
      {"train",
       {"learning_rate", "steps", "k", "mining_mode", "augment_magnitude", "report_every",
        "eval_anchors", "mining_refresh_every"}},
      {"eval", {"gallery_draws", "ranks"}},
      {"ablation", {"arms", "lambdas", "seeds"}},
      {"run", {}},  // free-form
  };
  return keys;
}

class Reader {
 public:
  Reader(std::map<std::string, Section> sections, std::string source)
      : sections_(std::move(sections)), source_(std::move(source)) {}

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.contains(key);
  }

  const Entry& entry(const std::string& section, const std::string& key) const {
    if (!has(section, key)) {
      throw ConfigError(source_ + ": missing required field " + section + "." + key);
    }
    return sections_.at(section).at(key);
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& why) const {
    const auto& e = entry(section, key);
    throw ConfigError(source_ + ":" + std::to_string(e.line) + ": " + section + "." + key + ": " +
                      why + " (got '" + e.value + "')");
  }

  std::string text(const std::string& section, const std::string& key) const {
    return entry(section, key).value;
  }

  double real(const std::string& section, const std::string& key) const {
    double v = 0.0;
    if (!parse_double(text(section, key), v) || !std::isfinite(v))
      fail(section, key, "expected a number");
    return v;
  }

  std::uint64_t unsigned_int(const std::string& section, const std::string& key) const {
    unsigned long long v = 0;
    if (!parse_uint(text(section, key), v)) fail(section, key, "expected a non-negative integer");
    return v;
  }

  bool flag(const std::string& section, const std::string& key) const {
    const auto v = text(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(section, key, "expected true or false");
  }

  std::vector<std::string> list(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    const auto v = text(section, key);
    if (trim(v).empty()) return out;
    for (auto item : split(v, ',')) {
      item = trim(item);
      if (item.empty()) fail(section, key, "empty list element");
      out.emplace_back(item);
    }
    return out;
  }

  std::vector<double> real_list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : list(section, key)) {
      double v = 0.0;
      if (!parse_double(item, v) || !std::isfinite(v)) fail(section, key, "expected numbers");
      out.push_back(v);
    }
    return out;
  }

  std::vector<std::uint64_t> count_list(const std::string& section, const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const auto& item : list(section, key)) {
      unsigned long long v = 0;
      if (!parse_uint(item, v)) fail(section, key, "expected non-negative integers");
      out.push_back(v);
    }
    return out;
  }

  const std::map<std::string, Section>& sections() const { return sections_; }

 private:
  std::map<std::string, Section> sections_;
  std::string source_;
};

std::map<std::string, Section> tokenize(std::string_view text, const std::string& source) {
  std::map<std::string, Section> sections;
  std::string current;
  std::size_t line_no = 0;
  std::istringstream is{std::string(text)};
  std::string raw;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_keys().contains(current))
        throw ConfigError(where() + "unknown section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where() + "expected key = value");
    if (current.empty()) throw ConfigError(where() + "entry outside of any section");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(where() + "empty key");
    const auto& allowed = known_keys().at(current);
    if (current != "run" && !allowed.contains(key))
      throw ConfigError(where() + "unknown field " + current + "." + key);
    auto& section = sections[current];
    if (section.contains(key)) {
      throw ConfigError(where() + "duplicate field " + current + "." + key + " (first set on line " +
                        std::to_string(section.at(key).line) + ")");
    }
    section[key] = {value, line_no};
  }
  return sections;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::string& source,
                              const std::filesystem::path& base_dir) {
  const Reader r(tokenize(text, source), source);
  ExperimentConfig c;

  c.seed = r.unsigned_int("experiment", "seed");
  if (r.has("experiment", "output_dir")) c.output_dir = r.text("experiment", "output_dir");

  const auto kind = r.text("dataset", "source");
  if (kind == "synthetic") {
    c.dataset.synthetic = true;
    auto& s = c.dataset.synthetic_config;
    s.num_identities = r.unsigned_int("dataset", "num_identities");
    s.samples_per_view = r.unsigned_int("dataset", "samples_per_view");
    s.input_dim = r.unsigned_int("dataset", "input_dim");
    s.manifold_curvature = r.real("dataset", "manifold_curvature");
    s.intra_class_spread = r.real("dataset", "intra_class_spread");
    s.view_offset_magnitude = r.real("dataset", "view_offset_magnitude");
  } else if (kind == "file") {
    c.dataset.synthetic = false;
    std::filesystem::path p = r.text("dataset", "path");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.dataset.path = p;
  } else {
    r.fail("dataset", "source", "expected synthetic or file");
  }
  if (r.has("dataset", "split")) {
    const auto f = r.real_list("dataset", "split");
    if (f.size() != 3) r.fail("dataset", "split", "expected three fractions");
    c.dataset.split = {f[0], f[1], f[2]};
  }

  auto& e = c.embedder;
  e.num_branches = r.unsigned_int("embedder", "num_branches");
  e.overlap_fraction = r.real("embedder", "overlap_fraction");
  e.branch_hidden_dims.clear();
  for (auto h : r.count_list("embedder", "branch_hidden_dims")) e.branch_hidden_dims.push_back(h);
  e.joint_hidden_dim = r.unsigned_int("embedder", "joint_hidden_dim");
  e.output_dim = r.unsigned_int("embedder", "output_dim");
  e.tied_branches = r.flag("embedder", "tied_branches");
  if (c.dataset.synthetic) e.input_dim = c.dataset.synthetic_config.input_dim;

  if (r.has("metric", "metric_dim")) c.metric.metric_dim = r.unsigned_int("metric", "metric_dim");
  c.metric.lambda = r.real("metric", "lambda");
  c.metric.margin = r.real("metric", "margin");
  if (c.metric.lambda < 0) r.fail("metric", "lambda", "must be >= 0");
  if (c.metric.margin <= 0) r.fail("metric", "margin", "must be > 0");

  auto& t = c.train;
  t.learning_rate = r.real("train", "learning_rate");
  t.steps = r.unsigned_int("train", "steps");
  t.k = r.unsigned_int("train", "k");
  try {
    t.mining_mode = parse_mining_mode(r.text("train", "mining_mode"));
  } catch (const std::invalid_argument& ex) {
    r.fail("train", "mining_mode", ex.what());
  }
  if (r.has("train", "augment_magnitude")) t.augment_magnitude = r.real("train", "augment_magnitude");
  else if (c.dataset.synthetic) t.augment_magnitude = 0.05 * c.dataset.synthetic_config.intra_class_spread;
  if (r.has("train", "report_every")) t.report_every = r.unsigned_int("train", "report_every");
  if (r.has("train", "eval_anchors")) t.eval_anchors = r.unsigned_int("train", "eval_anchors");
  if (r.has("train", "mining_refresh_every"))
    t.mining_refresh_every = r.unsigned_int("train", "mining_refresh_every");
  if (t.learning_rate < 0) r.fail("train", "learning_rate", "must be >= 0");
  if (t.k < 1) r.fail("train", "k", "must be >= 1");
  if (t.report_every < 1) r.fail("train", "report_every", "must be >= 1");

  if (r.has("eval", "gallery_draws")) {
    c.eval.gallery_draws = r.unsigned_int("eval", "gallery_draws");
    if (c.eval.gallery_draws < 1) r.fail("eval", "gallery_draws", "must be >= 1");
  }
  if (r.has("eval", "ranks")) {
    c.eval.ranks.clear();
    for (auto k : r.count_list("eval", "ranks")) {
      if (k < 1) r.fail("eval", "ranks", "ranks start at 1");
      c.eval.ranks.push_back(k);
    }
  }

  if (r.has("ablation", "arms")) {
    c.ablation.arms.clear();
    for (const auto& a : r.list("ablation", "arms")) {
      try {
        c.ablation.arms.push_back(parse_mining_mode(a));
      } catch (const std::invalid_argument& ex) {
        r.fail("ablation", "arms", ex.what());
      }
    }
  }
  if (r.has("ablation", "lambdas")) c.ablation.lambdas = r.real_list("ablation", "lambdas");
  if (r.has("ablation", "seeds")) c.ablation.seeds = r.count_list("ablation", "seeds");

  if (auto it = r.sections().find("run"); it != r.sections().end())
    for (const auto& [k, v] : it->second) c.run_info[k] = v.value;

  try {
    if (c.dataset.synthetic) c.dataset.synthetic_config.validate();
    c.embedder.validate();
  } catch (const std::exception& ex) {
    throw ConfigError(source + ": " + ex.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  try {
    lines = read_lines(path);
  } catch (const std::runtime_error&) {
    throw ConfigError("cannot open config file " + path.string());
  }
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  return parse_config(text, path.string(), std::filesystem::absolute(path).parent_path());
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream os;
  auto count_list = [](const auto& v) {
    std::vector<std::string> items;
    for (auto x : v) items.push_back(std::to_string(x));
    return join(items);
  };
  auto real_list = [](const auto& v) {
    std::vector<std::string> items;
    for (auto x : v) items.push_back(format_double(x));
    return join(items);
  };

  if (!c.run_info.empty()) {
    os << "[run]\n";
    for (const auto& [k, v] : c.run_info) os << k << " = " << v << "\n";
    os << "\n";
  }
  os << "[experiment]\n"
     << "seed = " << c.seed << "\n"
     << "output_dir = " << c.output_dir.string() << "\n\n";

  os << "[dataset]\n";
  if (c.dataset.synthetic) {
    const auto& s = c.dataset.synthetic_config;
    os << "source = synthetic\n"
       << "num_identities = " << s.num_identities << "\n"
       << "samples_per_view = " << s.samples_per_view << "\n"
       << "input_dim = " << s.input_dim << "\n"
       << "manifold_curvature = " << format_double(s.manifold_curvature) << "\n"
       << "intra_class_spread = " << format_double(s.intra_class_spread) << "\n"
       << "view_offset_magnitude = " << format_double(s.view_offset_magnitude) << "\n";
  } else {
    os << "source = file\n"
       << "path = " << c.dataset.path.string() << "\n";
  }
  os << "split = " << real_list(c.dataset.split) << "\n\n";

  const auto& e = c.embedder;
  os << "[embedder]\n"
     << "num_branches = " << e.num_branches << "\n"
     << "overlap_fraction = " << format_double(e.overlap_fraction) << "\n"
     << "branch_hidden_dims = " << count_list(e.branch_hidden_dims) << "\n"
     << "joint_hidden_dim = " << e.joint_hidden_dim << "\n"
     << "output_dim = " << e.output_dim << "\n"
     << "tied_branches = " << (e.tied_branches ? "true" : "false") << "\n\n";

  os << "[metric]\n"
     << "metric_dim = " << c.metric.metric_dim << "\n"
     << "lambda = " << format_double(c.metric.lambda) << "\n"
     << "margin = " << format_double(c.metric.margin) << "\n\n";

  const auto& t = c.train;
  os << "[train]\n"
     << "learning_rate = " << format_double(t.learning_rate) << "\n"
     << "steps = " << t.steps << "\n"
     << "k = " << t.k << "\n"
     << "mining_mode = " << to_string(t.mining_mode) << "\n"
     << "augment_magnitude = " << format_double(t.augment_magnitude) << "\n"
     << "report_every = " << t.report_every << "\n"
     << "eval_anchors = " << t.eval_anchors << "\n"
     << "mining_refresh_every = " << t.mining_refresh_every << "\n\n";

  os << "[eval]\n"
     << "gallery_draws = " << c.eval.gallery_draws << "\n"
     << "ranks = " << count_list(c.eval.ranks) << "\n\n";

  std::vector<std::string> arms;
  for (auto a : c.ablation.arms) arms.push_back(to_string(a));
  os << "[ablation]\n"
     << "arms = " << join(arms) << "\n"
     << "lambdas = " << real_list(c.ablation.lambdas) << "\n"
     << "seeds = " << count_list(c.ablation.seeds) << "\n";
  return os.str();
}

DerivedSeeds derive_seeds(std::uint64_t master) {
  DerivedSeeds s;
  s.data = splitmix64(master ^ 0x11);
  s.split = splitmix64(master ^ 0x22);
  s.embedder = splitmix64(master ^ 0x33);
  s.metric = splitmix64(master ^ 0x44);
  s.train = splitmix64(master ^ 0x55);
  s.eval = splitmix64(master ^ 0x66);
  return s;
}

Dataset load_dataset(const ExperimentConfig& config) {
  if (!config.dataset.synthetic) return load_delimited(config.dataset.path);
  SyntheticConfig s = config.dataset.synthetic_config;
  s.seed = derive_seeds(config.seed).data;
  return generate_synthetic(s);
}

ProtocolSplit make_split(const ExperimentConfig& config, const Dataset& dataset) {
  return split_protocol(dataset, config.dataset.split, derive_seeds(config.seed).split);
}

TrainSetup make_setup(const ExperimentConfig& config, std::size_t input_dim) {
  const auto seeds = derive_seeds(config.seed);
  TrainSetup setup;
  setup.embedder = config.embedder;
  setup.embedder.input_dim = input_dim;
  setup.embedder.seed = seeds.embedder;
  setup.metric = config.metric;
  setup.train = config.train;
  setup.train.seed = seeds.train;
  setup.metric_seed = seeds.metric;
  return setup;
}

}  // namespace modmine
