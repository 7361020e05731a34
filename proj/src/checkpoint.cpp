#include "modmine/checkpoint.hpp"

#include <cmath>
#include <sstream>

#include "modmine/io.hpp"

namespace modmine {

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto& c = checkpoint.embedder.config;
  std::ostringstream os;
  os << "modmine-checkpoint 1\n[embedder]\n"
     << "input_dim = " << c.input_dim << "\n"
     << "num_branches = " << c.num_branches << "\n"
     << "overlap_fraction = " << format_double(c.overlap_fraction) << "\n"
     << "branch_hidden_dims = ";
  for (std::size_t i = 0; i < c.branch_hidden_dims.size(); ++i)
    os << (i ? ", " : "") << c.branch_hidden_dims[i];
  os << "\njoint_hidden_dim = " << c.joint_hidden_dim << "\n"
     << "output_dim = " << c.output_dim << "\n"
     << "tied_branches = " << (c.tied_branches ? "true" : "false") << "\n"
     << "seed = " << c.seed << "\n"
     << "[metric]\nrows = " << checkpoint.metric.w.rows() << "\ncols = " << checkpoint.metric.w.cols()
     << "\n[embedder_params]\ncount = " << checkpoint.embedder.parameter_count() << "\n";
  checkpoint.embedder.visit([&os](std::span<const double> t) {
    for (double v : t) os << format_double(v) << "\n";
  });
  os << "[metric_params]\ncount = " << checkpoint.metric.w.size() << "\n";
  for (double v : checkpoint.metric.w.data()) os << format_double(v) << "\n";
  write_text(path, os.str());
}

namespace {

class LineCursor {
 public:
  LineCursor(std::vector<std::string> lines, std::string source)
      : lines_(std::move(lines)), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw std::runtime_error(source_ + ": line " + std::to_string(pos_) + ": " + why);
  }

  std::string_view next() {
    if (pos_ >= lines_.size()) {
      ++pos_;
      fail("unexpected end of checkpoint");
    }
    return trim(lines_[pos_++]);
  }

  void expect(std::string_view literal) {
    if (next() != literal) fail("expected '" + std::string(literal) + "'");
  }

  std::string_view value(std::string_view key) {
    const auto line = next();
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || trim(line.substr(0, eq)) != key)
      fail("expected '" + std::string(key) + " = ...'");
    return trim(line.substr(eq + 1));
  }

  std::size_t count(std::string_view key) {
    long long v = 0;
    if (!parse_int(value(key), v) || v < 0) fail(std::string(key) + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  double real(std::string_view key) {
    double v = 0.0;
    if (!parse_double(value(key), v)) fail(std::string(key) + " must be a number");
    return v;
  }

  std::vector<double> reals(std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out)
      if (!parse_double(next(), v) || !std::isfinite(v)) fail("expected a finite parameter value");
    return out;
  }

  bool at_end() const {
    for (std::size_t i = pos_; i < lines_.size(); ++i)
      if (!trim(lines_[i]).empty()) return false;
    return true;
  }

 private:
  std::vector<std::string> lines_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  try {
    lines = read_lines(path);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("cannot open checkpoint " + path.string());
  }
  LineCursor in(std::move(lines), path.string());
  in.expect("modmine-checkpoint 1");
  in.expect("[embedder]");
  EmbedderConfig c;
  c.input_dim = in.count("input_dim");
  c.num_branches = in.count("num_branches");
  c.overlap_fraction = in.real("overlap_fraction");
  c.branch_hidden_dims.clear();
  const auto dims = in.value("branch_hidden_dims");
  if (!dims.empty()) {
    for (auto item : split(dims, ',')) {
      long long v = 0;
      if (!parse_int(item, v) || v < 1) in.fail("bad branch_hidden_dims entry");
      c.branch_hidden_dims.push_back(static_cast<std::size_t>(v));
    }
  }
  c.joint_hidden_dim = in.count("joint_hidden_dim");
  c.output_dim = in.count("output_dim");
  const auto tied = in.value("tied_branches");
  if (tied != "true" && tied != "false") in.fail("tied_branches must be true or false");
  c.tied_branches = tied == "true";
  unsigned long long seed = 0;
  if (!parse_uint(in.value("seed"), seed)) in.fail("seed must be an unsigned integer");
  c.seed = seed;

  in.expect("[metric]");
  const std::size_t rows = in.count("rows");
  const std::size_t cols = in.count("cols");

  Checkpoint out;
  try {
    out.embedder = init_embedder(c);
  } catch (const std::exception& ex) {
    in.fail(std::string("invalid embedder config: ") + ex.what());
  }
  in.expect("[embedder_params]");
  const std::size_t n = in.count("count");
  if (n != out.embedder.parameter_count()) {
    in.fail("embedder parameter count " + std::to_string(n) + " does not match config (" +
            std::to_string(out.embedder.parameter_count()) + ")");
  }
  out.embedder.assign(in.reals(n));

  in.expect("[metric_params]");
  const std::size_t m = in.count("count");
  if (m != rows * cols) in.fail("metric parameter count does not match rows*cols");
  if (rows != c.output_dim) in.fail("metric rows must equal embedder output_dim");
  out.metric.w = Matrix(rows, cols, in.reals(m));
  if (!in.at_end()) in.fail("trailing content after metric parameters");
  return out;
}

}  // namespace modmine
