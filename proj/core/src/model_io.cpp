#include "kanfit/model_io.hpp"

#include <sstream>

#include "kanfit/errors.hpp"
#include "kanfit/text.hpp"

namespace kanfit {

namespace {

constexpr std::size_t kValuesPerLine = 8;

void write_values(std::ostringstream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << format_double(values[i]);
    out << ((i + 1) % kValuesPerLine == 0 || i + 1 == values.size() ? '\n' : ' ');
  }
}

// Line-oriented token reader that reports positions as IntegrityErrors.
class Reader {
 public:
  explicit Reader(std::string_view text) : lines_(split(text, '\n')) {}

  std::size_t line_no() const noexcept { return line_; }

  // Next non-blank line split on whitespace.
  std::vector<std::string> next(const std::string& expecting) {
    while (line_ < lines_.size()) {
      const auto t = trim(lines_[line_++]);
      if (t.empty()) continue;
      std::vector<std::string> tokens;
      std::istringstream ss{std::string(t)};
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      return tokens;
    }
    fail("unexpected end of file, expected " + expecting);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw IntegrityError("model file line " + std::to_string(line_) + ": " + what);
  }

  double number(const std::string& tok, const std::string& what) const {
    try {
      return parse_double(tok, what);
    } catch (const ParseError& e) {
      fail(e.what());
    }
  }

  long long integer(const std::string& tok, const std::string& what) const {
    try {
      return parse_int(tok, what);
    } catch (const ParseError& e) {
      fail(e.what());
    }
  }

  std::vector<double> values(std::size_t count, const std::string& what) {
    std::vector<double> out;
    out.reserve(count);
    while (out.size() < count) {
      const auto tokens = next(what + " (" + std::to_string(out.size()) + " of " +
                               std::to_string(count) + " read)");
      if (out.size() + tokens.size() > count) fail("too many values for " + what);
      for (const auto& t : tokens) out.push_back(number(t, what));
    }
    return out;
  }

 private:
  std::vector<std::string> lines_;
  std::size_t line_ = 0;
};

// Key/value pairs following a fixed prefix on one line, checked against the
// expected key order.
std::vector<std::string> keyed(Reader& rd, const std::vector<std::string>& tokens,
                               std::size_t start, const std::vector<std::string>& keys) {
  if (tokens.size() != start + 2 * keys.size())
    rd.fail("expected " + std::to_string(keys.size()) + " key/value pairs");
  std::vector<std::string> values;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    if (tokens[start + 2 * k] != keys[k])
      rd.fail("expected key '" + keys[k] + "', found '" + tokens[start + 2 * k] + "'");
    values.push_back(tokens[start + 2 * k + 1]);
  }
  return values;
}

}  // namespace

std::string format_model(const ModelFile& model) {
  std::ostringstream out;
  out << kModelHeader << '\n';
  out << "model_kind " << (model.model_kind.empty() ? "custom" : model.model_kind) << '\n';
  const auto& specs = model.network.specs();
  out << "layer_count " << specs.size() << '\n';
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto& s = specs[l];
    out << "layer " << l;
    if (s.kind == LayerKind::KanEdge) {
      const auto& b = s.basis;
      out << " kan n_in " << s.n_in << " n_out " << s.n_out << " family " << family_name(b.family)
          << " degree " << b.degree << " expansion_point " << format_double(b.expansion_point)
          << " jacobi_alpha " << format_double(b.jacobi_alpha) << " jacobi_beta "
          << format_double(b.jacobi_beta) << " grid_min " << format_double(b.grid_min)
          << " grid_max " << format_double(b.grid_max) << " n_spline " << b.n_spline
          << " spline_degree " << b.spline_degree << " rbf_epsilon "
          << format_double(b.rbf_epsilon) << " squash " << (b.squash ? 1 : 0) << '\n';
    } else {
      out << " dense n_in " << s.n_in << " n_out " << s.n_out << " activation "
          << (s.activation == Activation::ReLU ? "relu" : "identity") << '\n';
    }
    const auto params = model.network.layer_parameters(l);
    out << "params " << params.size() << '\n';
    write_values(out, params);
  }
  const auto& st = model.standardizer;
  out << "standardizer standardize_features " << (st.standardize_features ? 1 : 0)
      << " n_features " << st.mean.size() << " score_low " << format_double(st.scores.low)
      << " score_high " << format_double(st.scores.high) << '\n';
  out << "mean";
  for (double v : st.mean) out << ' ' << format_double(v);
  out << "\nstddev";
  for (double v : st.stddev) out << ' ' << format_double(v);
  out << "\nend\n";
  return out.str();
}

ModelFile parse_model(std::string_view text) {
  Reader rd(text);
  {
    const auto header = rd.next("header");
    if (header.size() != 2 || header[0] + " " + header[1] != kModelHeader)
      rd.fail("missing '" + std::string(kModelHeader) + "' header");
  }
  ModelFile model;
  {
    const auto t = rd.next("model_kind");
    if (t.size() != 2 || t[0] != "model_kind") rd.fail("expected 'model_kind <name>'");
    model.model_kind = t[1];
  }
  const auto count_tokens = rd.next("layer_count");
  if (count_tokens.size() != 2 || count_tokens[0] != "layer_count")
    rd.fail("expected 'layer_count <L>'");
  const auto layer_count = rd.integer(count_tokens[1], "layer_count");
  if (layer_count < 1 || layer_count > 1000) rd.fail("implausible layer_count");

  std::vector<LayerSpec> specs;
  std::vector<std::vector<double>> blocks;
  for (long long l = 0; l < layer_count; ++l) {
    const auto t = rd.next("layer " + std::to_string(l));
    if (t.size() < 3 || t[0] != "layer" || t[1] != std::to_string(l))
      rd.fail("expected 'layer " + std::to_string(l) + " ...'");
    LayerSpec spec;
    if (t[2] == "kan") {
      const auto v = keyed(rd, t, 3,
                           {"n_in", "n_out", "family", "degree", "expansion_point", "jacobi_alpha",
                            "jacobi_beta", "grid_min", "grid_max", "n_spline", "spline_degree",
                            "rbf_epsilon", "squash"});
      spec.kind = LayerKind::KanEdge;
      spec.n_in = static_cast<int>(rd.integer(v[0], "n_in"));
      spec.n_out = static_cast<int>(rd.integer(v[1], "n_out"));
      try {
        spec.basis.family = parse_family(v[2]);
      } catch (const ParameterError& e) {
        rd.fail(e.what());
      }
      spec.basis.degree = static_cast<int>(rd.integer(v[3], "degree"));
      spec.basis.expansion_point = rd.number(v[4], "expansion_point");
      spec.basis.jacobi_alpha = rd.number(v[5], "jacobi_alpha");
      spec.basis.jacobi_beta = rd.number(v[6], "jacobi_beta");
      spec.basis.grid_min = rd.number(v[7], "grid_min");
      spec.basis.grid_max = rd.number(v[8], "grid_max");
      spec.basis.n_spline = static_cast<int>(rd.integer(v[9], "n_spline"));
      spec.basis.spline_degree = static_cast<int>(rd.integer(v[10], "spline_degree"));
      spec.basis.rbf_epsilon = rd.number(v[11], "rbf_epsilon");
      const auto squash_flag = rd.integer(v[12], "squash");
      if (squash_flag != 0 && squash_flag != 1) rd.fail("squash must be 0 or 1");
      spec.basis.squash = squash_flag == 1;
    } else if (t[2] == "dense") {
      const auto v = keyed(rd, t, 3, {"n_in", "n_out", "activation"});
      spec.kind = LayerKind::Dense;
      spec.n_in = static_cast<int>(rd.integer(v[0], "n_in"));
      spec.n_out = static_cast<int>(rd.integer(v[1], "n_out"));
      if (v[2] == "relu")
        spec.activation = Activation::ReLU;
      else if (v[2] == "identity")
        spec.activation = Activation::Identity;
      else
        rd.fail("unknown activation '" + v[2] + "'");
    } else {
      rd.fail("unknown layer kind '" + t[2] + "'");
    }
    if (spec.n_in < 1 || spec.n_out < 1) rd.fail("layer widths must be >= 1");

    const auto p = rd.next("params");
    if (p.size() != 2 || p[0] != "params") rd.fail("expected 'params <count>'");
    const auto count = rd.integer(p[1], "params");
    if (count < 0 || static_cast<std::size_t>(count) != spec.parameter_count())
      rd.fail("layer " + std::to_string(l) + " declares " + p[1] + " parameters, expected " +
              std::to_string(spec.parameter_count()));
    blocks.push_back(rd.values(static_cast<std::size_t>(count), "layer parameters"));
    specs.push_back(spec);
  }

  try {
    model.network = Network(specs);
  } catch (const Error& e) {
    rd.fail(std::string("invalid layer stack: ") + e.what());
  }
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    auto dst = model.network.layer_parameters(l);
    std::copy(blocks[l].begin(), blocks[l].end(), dst.begin());
  }

  const auto st = rd.next("standardizer");
  if (st.size() < 1 || st[0] != "standardizer") rd.fail("expected 'standardizer ...'");
  const auto sv = keyed(rd, st, 1, {"standardize_features", "n_features", "score_low", "score_high"});
  const auto flag = rd.integer(sv[0], "standardize_features");
  if (flag != 0 && flag != 1) rd.fail("standardize_features must be 0 or 1");
  model.standardizer.standardize_features = flag == 1;
  const auto m = rd.integer(sv[1], "n_features");
  if (m != model.network.n_inputs())
    rd.fail("standardizer has " + sv[1] + " features, network expects " +
            std::to_string(model.network.n_inputs()));
  model.standardizer.scores = {rd.number(sv[2], "score_low"), rd.number(sv[3], "score_high")};

  auto vector_line = [&](const std::string& key) {
    const auto t = rd.next(key);
    if (t.empty() || t[0] != key) rd.fail("expected '" + key + "'");
    if (t.size() != static_cast<std::size_t>(m) + 1)
      rd.fail(key + " has " + std::to_string(t.size() - 1) + " values, expected " + sv[1]);
    std::vector<double> out;
    for (std::size_t i = 1; i < t.size(); ++i) out.push_back(rd.number(t[i], key));
    return out;
  };
  model.standardizer.mean = vector_line("mean");
  model.standardizer.stddev = vector_line("stddev");

  const auto end = rd.next("end");
  if (end.size() != 1 || end[0] != "end") rd.fail("expected 'end'");
  return model;
}

void save_model(const ModelFile& model, const std::filesystem::path& path) {
  write_file_atomic(path, format_model(model));
}

ModelFile load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

}  // namespace kanfit
