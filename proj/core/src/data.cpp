#include "kanfit/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "kanfit/errors.hpp"
#include "kanfit/network.hpp"
#include "kanfit/text.hpp"

namespace kanfit {

void Dataset::validate() const {
  if (rows() == 0) throw ShapeError("dataset has no rows");
  if (scores.size() != rows())
    throw ShapeError("dataset has " + std::to_string(rows()) + " feature rows but " +
                     std::to_string(scores.size()) + " scores");
  if (!feature_names.empty() && feature_names.size() != cols())
    throw ShapeError("dataset feature_names length does not match column count");
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < cols(); ++c)
      if (!std::isfinite(features(r, c)))
        throw ParameterError("dataset: non-finite feature at row " + std::to_string(r + 1) +
                             ", column " + std::to_string(c + 1));
    if (!std::isfinite(scores[r]))
      throw ParameterError("dataset: non-finite score at row " + std::to_string(r + 1));
  }
  if (score_range) {
    if (!(score_range->low < score_range->high))
      throw ParameterError("dataset: score range low must be < high");
    for (std::size_t r = 0; r < rows(); ++r)
      if (scores[r] < score_range->low || scores[r] > score_range->high)
        throw ParameterError("dataset: score at row " + std::to_string(r + 1) +
                             " outside the declared range");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
  Dataset out;
  out.features = Matrix(idx.size(), cols());
  out.scores.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= rows()) throw ShapeError("Dataset::subset: row index out of range");
    std::copy_n(features.row(idx[r]).begin(), cols(), out.features.row(r).begin());
    out.scores.push_back(scores[idx[r]]);
  }
  out.feature_names = feature_names;
  out.score_range = score_range;
  out.name = name;
  return out;
}

Dataset parse_feature_csv(std::istream& in, std::string_view source) {
  const std::string src(source);
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first_row = true;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (first_row) {
      first_row = false;
      width = cells.size();
      if (width < 2)
        throw ParseError(src + ": line " + std::to_string(line_no) +
                         ": need at least one feature column and a score column");
      bool header = false;
      for (const auto& c : cells) {
        try {
          parse_double(c, "");
        } catch (const ParseError&) {
          header = true;
          break;
        }
      }
      if (header) {
        for (std::size_t c = 0; c + 1 < cells.size(); ++c)
          ds.feature_names.emplace_back(trim(cells[c]));
        continue;
      }
    }
    if (cells.size() != width)
      throw ParseError(src + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " columns, expected " +
                       std::to_string(width));
    values.clear();
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string where = src + ": line " + std::to_string(line_no) + ", column " +
                                std::to_string(c + 1);
      const double v = parse_double(cells[c], where);
      if (!std::isfinite(v)) throw ParseError(where + ": value is not finite");
      values.push_back(v);
    }
    ds.scores.push_back(values.back());
    values.pop_back();
    ds.features.append_row(values);
  }
  if (ds.rows() == 0) throw ParseError(src + ": no data rows");
  return ds;
}

Dataset load_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");
  Dataset ds = parse_feature_csv(in, path.string());
  auto meta = path;
  meta += ".meta";
  if (std::filesystem::exists(meta)) {
    const auto kv = parse_kv(read_file(meta));
    for (const auto& [key, value] : kv)
      if (key != "score_low" && key != "score_high" && key != "name")
        throw ParseError(meta.string() + ": unknown key '" + key + "'");
    const bool has_low = kv.contains("score_low");
    if (has_low != kv.contains("score_high"))
      throw ParseError(meta.string() + ": score_low and score_high must be given together");
    if (has_low)
      ds.score_range = ScoreRange{parse_double(kv.at("score_low"), meta.string() + ": score_low"),
                                  parse_double(kv.at("score_high"), meta.string() + ": score_high")};
    if (kv.contains("name")) ds.name = kv.at("name");
  }
  ds.validate();
  return ds;
}

std::string format_feature_csv(const Dataset& ds) {
  std::ostringstream out;
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    out << (ds.feature_names.empty() ? "f" + std::to_string(c + 1) : ds.feature_names[c]);
    out << ',';
  }
  out << "score\n";
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (double v : ds.features.row(r)) out << format_double(v) << ',';
    out << format_double(ds.scores[r]) << '\n';
  }
  return out.str();
}

void save_feature_csv(const Dataset& ds, const std::filesystem::path& path) {
  write_file_atomic(path, format_feature_csv(ds));
  if (ds.score_range || !ds.name.empty()) {
    std::ostringstream meta;
    if (ds.score_range)
      meta << "score_low = " << format_double(ds.score_range->low) << '\n'
           << "score_high = " << format_double(ds.score_range->high) << '\n';
    if (!ds.name.empty()) meta << "name = " << ds.name << '\n';
    auto meta_path = path;
    meta_path += ".meta";
    write_file_atomic(meta_path, meta.str());
  }
}

namespace {

// Unbiased draw from [0, bound) by rejection; independent of the standard
// library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

std::size_t floor_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

}  // namespace

SplitIndices split_dataset(std::size_t n, SplitRatios ratios, std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.train + ratios.val < 1.0))
    throw ParameterError("split: ratios must be positive and sum to less than 1");
  const std::size_t n_train = floor_count(ratios.train, n);
  const std::size_t n_val = floor_count(ratios.val, n);
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
    throw ParameterError("split: n = " + std::to_string(n) +
                         " is too small for non-empty train/validation/test parts");

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[bounded(rng, i + 1)]);

  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                 perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  return out;
}

Standardizer fit_standardizer(const Dataset& ds, std::span<const std::size_t> train_idx,
                              bool standardize_features) {
  if (train_idx.empty()) throw ParameterError("fit_standardizer: empty training index set");
  Standardizer st;
  st.standardize_features = standardize_features;
  const std::size_t m = ds.cols();
  st.mean.assign(m, 0.0);
  st.stddev.assign(m, 1.0);
  const double n = static_cast<double>(train_idx.size());
  if (standardize_features) {
    for (std::size_t c = 0; c < m; ++c) {
      double sum = 0.0;
      for (auto r : train_idx) sum += ds.features(r, c);
      const double mu = sum / n;
      double ss = 0.0;
      for (auto r : train_idx) ss += (ds.features(r, c) - mu) * (ds.features(r, c) - mu);
      const double sd = std::sqrt(ss / n);
      st.mean[c] = mu;
      st.stddev[c] = sd > 1e-12 * std::max(1.0, std::abs(mu)) ? sd : 0.0;
    }
  }
  if (ds.score_range) {
    st.scores = *ds.score_range;
  } else {
    double lo = ds.scores[train_idx[0]];
    double hi = lo;
    for (auto r : train_idx) {
      lo = std::min(lo, ds.scores[r]);
      hi = std::max(hi, ds.scores[r]);
    }
    st.scores = hi > lo ? ScoreRange{lo, hi} : ScoreRange{lo, lo + 1.0};
  }
  return st;
}

void Standardizer::transform_row(std::span<const double> in, std::span<double> out) const {
  if (in.size() != out.size() || (standardize_features && in.size() != mean.size()))
    throw ShapeError("Standardizer: row has " + std::to_string(in.size()) +
                     " features, expected " + std::to_string(mean.size()));
  for (std::size_t c = 0; c < in.size(); ++c) {
    if (!standardize_features)
      out[c] = in[c];
    else
      out[c] = stddev[c] > 0.0 ? (in[c] - mean[c]) / stddev[c] : 0.0;
  }
}

double Standardizer::normalize_score(double y) const noexcept {
  return (y - scores.low) / (scores.high - scores.low);
}

double Standardizer::denormalize_score(double t) const noexcept {
  return scores.low + t * (scores.high - scores.low);
}

Dataset Standardizer::apply(const Dataset& ds) const {
  Dataset out = ds;
  for (std::size_t r = 0; r < ds.rows(); ++r) transform_row(ds.features.row(r), out.features.row(r));
  for (auto& y : out.scores) y = normalize_score(y);
  out.score_range.reset();
  return out;
}

std::string_view synthetic_kind_name(SyntheticKind kind) noexcept {
  switch (kind) {
    case SyntheticKind::Product: return "product";
    case SyntheticKind::Friedman: return "friedman";
    case SyntheticKind::RandKan: return "randkan";
    case SyntheticKind::Monotone: return "monotone";
  }
  return "unknown";
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  for (auto k : {SyntheticKind::Product, SyntheticKind::Friedman, SyntheticKind::RandKan,
                 SyntheticKind::Monotone})
    if (synthetic_kind_name(k) == name) return k;
  throw ParameterError("unknown synthetic kind '" + std::string(name) +
                       "' (valid: product, friedman, randkan, monotone)");
}

double friedman_target(std::span<const double> x) {
  if (x.size() < 5) throw ShapeError("friedman_target: needs at least 5 inputs");
  const double pi = std::numbers::pi;
  return 10.0 * std::sin(pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] +
         5.0 * x[4];
}

Dataset gen_synthetic(SyntheticKind kind, std::size_t n, std::size_t dim, double noise_sd,
                      std::uint64_t seed) {
  if (n < 1) throw ParameterError("gen_synthetic: n must be >= 1");
  if (dim < 1) throw ParameterError("gen_synthetic: dim must be >= 1");
  if (kind == SyntheticKind::Friedman && dim < 5)
    throw ParameterError("gen_synthetic: friedman needs dim >= 5 (got " + std::to_string(dim) +
                         ")");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
    throw ParameterError("gen_synthetic: noise_sd must be >= 0");

  std::mt19937_64 rng(seed);
  const double lo = kind == SyntheticKind::Friedman ? 0.0 : -1.0;
  std::uniform_real_distribution<double> unif(lo, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Task-specific structure is drawn before the samples so it only depends on seed.
  std::vector<double> direction;
  std::optional<Network> frozen;
  if (kind == SyntheticKind::Monotone) {
    direction.resize(dim);
    double norm = 0.0;
    for (auto& w : direction) {
      w = normal(rng);
      norm += w * w;
    }
    // x ~ U[-1,1] has variance 1/3; scale so the projection has unit variance.
    const double scale = std::sqrt(3.0) / std::sqrt(norm);
    for (auto& w : direction) w *= scale;
  } else if (kind == SyntheticKind::RandKan) {
    const auto basis = BasisSpec::defaults(BasisFamily::Chebyshev);
    frozen.emplace(std::vector<LayerSpec>{LayerSpec::kan(static_cast<int>(dim), 4, basis),
                                           LayerSpec::kan(4, 1, basis)});
    // Unit-variance node outputs, independent of the training init scale.
    for (std::size_t l = 0; l < frozen->layer_count(); ++l) {
      const auto& spec = frozen->specs()[l];
      const double sd = 1.0 / std::sqrt(static_cast<double>(spec.n_in) * spec.n_basis());
      for (auto& c : frozen->coefficients(l)) c = sd * normal(rng);
    }
  }

  Dataset ds;
  ds.name = std::string(synthetic_kind_name(kind));
  ds.features = Matrix(n, dim);
  ds.scores.resize(n);
  Tape tape;
  for (std::size_t r = 0; r < n; ++r) {
    auto x = ds.features.row(r);
    for (auto& v : x) v = unif(rng);
    double y = 0.0;
    switch (kind) {
      case SyntheticKind::Product:
        y = 1.0;
        for (double v : x) y *= v;
        break;
      case SyntheticKind::Friedman:
        y = friedman_target(x);
        break;
      case SyntheticKind::RandKan:
        y = forward(*frozen, x, tape);
        break;
      case SyntheticKind::Monotone: {
        double t = 0.0;
        for (std::size_t c = 0; c < dim; ++c) t += direction[c] * x[c];
        y = t + 0.5 * std::tanh(2.0 * t);
        break;
      }
    }
    ds.scores[r] = noise_sd > 0.0 ? y + noise_sd * normal(rng) : y;
  }
  return ds;
}

}  // namespace kanfit
