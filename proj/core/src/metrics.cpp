#include "kanfit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kanfit/errors.hpp"
#include "kanfit/optim.hpp"
#include "kanfit/text.hpp"

namespace kanfit {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, std::size_t min_n,
                const char* who) {
  if (a.size() != b.size()) throw MetricError(std::string(who) + ": input lengths differ");
  if (a.size() < min_n)
    throw MetricError(std::string(who) + ": need at least " + std::to_string(min_n) + " points");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a[i]) || !std::isfinite(b[i]))
      throw MetricError(std::string(who) + ": non-finite value at index " + std::to_string(i));
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double clamp_unit(double r) { return std::clamp(r, -1.0, 1.0); }

}  // namespace

std::vector<double> ranks_with_ties(std::span<const double> v) {
  if (v.empty()) throw MetricError("ranks_with_ties: empty input");
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw MetricError("ranks_with_ties: non-finite value at index " + std::to_string(i));

  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    // positions i..j (0-based) share rank mean((i+1)..(j+1))
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double plcc(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, 2, "plcc");
  const double ma = mean(a);
  const double mb = mean(b);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (!(va > 0.0) || !(vb > 0.0)) throw MetricError("correlation undefined: zero-variance input");
  return clamp_unit(cov / std::sqrt(va * vb));
}

double srcc(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, 2, "srcc");
  const auto ra = ranks_with_ties(a);
  const auto rb = ranks_with_ties(b);
  return plcc(ra, rb);
}

namespace {

// Logistic sigma(z) = 1 / (1 + e^z) evaluated without overflow.
double inv_one_plus_exp(double z) noexcept {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

double LogisticParams::operator()(double s) const noexcept {
  const double sigma = inv_one_plus_exp(q[1] * (s - q[2]));
  return q[0] * (0.5 - sigma) + q[3] * s + q[4];
}

std::array<double, 5> LogisticParams::gradient(double s) const noexcept {
  const double sigma = inv_one_plus_exp(q[1] * (s - q[2]));
  const double slope = q[0] * sigma * (1.0 - sigma);  // df/dz
  return {0.5 - sigma, slope * (s - q[2]), -slope * q[1], s, 1.0};
}

std::vector<double> apply_logistic(const LogisticParams& p, std::span<const double> s) {
  std::vector<double> out(s.size());
  std::transform(s.begin(), s.end(), out.begin(), [&](double v) { return p(v); });
  return out;
}

LogisticFit fit_logistic5(std::span<const double> s, std::span<const double> y) {
  check_pair(s, y, 5, "fit_logistic5");
  const double ms = mean(s);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sxx += (s[i] - ms) * (s[i] - ms);
    sxy += (s[i] - ms) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw MetricError("fit_logistic5: predicted scores have zero variance");
  const double slope = sxy / sxx;
  const double intercept = my - slope * ms;
  const double sd = std::sqrt(sxx / static_cast<double>(s.size()));
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  const double yspan = *ymax - *ymin;

  const ResidualFn residuals = [&](std::span<const double> q) {
    LogisticParams p;
    std::copy(q.begin(), q.end(), p.q.begin());
    std::vector<double> r(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) r[i] = p(s[i]) - y[i];
    return r;
  };
  const JacobianFn jacobian = [&](std::span<const double> q) {
    LogisticParams p;
    std::copy(q.begin(), q.end(), p.q.begin());
    Matrix j(s.size(), 5);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto g = p.gradient(s[i]);
      for (std::size_t k = 0; k < 5; ++k) j(i, k) = g[k];
    }
    return j;
  };

  const std::array<std::array<double, 5>, 4> starts{{
      {0.0, 1.0, ms, slope, intercept},        // least-squares line, logistic term off
      {0.0, 1.0 / sd, ms, slope, intercept},
      {yspan, 1.0 / sd, ms, 0.0, my},          // conventional IQA start
      {-yspan, 1.0 / sd, ms, 0.0, my},
  }};

  LmOptions opts;
  opts.max_iters = 500;

  LogisticFit best;
  bool have_best = false;
  {
    double affine = 0.0;
    for (double r : residuals(starts[0])) affine += r * r;
    best.affine_sse = affine;
  }
  for (const auto& start : starts) {
    const auto res = levenberg_marquardt(residuals, jacobian, start, opts);
    if (!have_best || res.sse < best.sse) {
      std::copy(res.params.begin(), res.params.end(), best.params.q.begin());
      best.sse = res.sse;
      best.degenerate = res.degenerate;
      have_best = true;
    }
  }
  return best;
}

MappedPlcc mapped_plcc(std::span<const double> s, std::span<const double> y) {
  const auto fit = fit_logistic5(s, y);
  MappedPlcc out;
  out.params = fit.params;
  if (!fit.degenerate) {
    try {
      auto mapped = apply_logistic(fit.params, s);
      double r = plcc(mapped, y);
      if (r < 0.0) {
        // Reflect the mapping about its mean: f' = 2 m - f stays in the family.
        const double m = mean(mapped);
        out.params.q[0] = -out.params.q[0];
        out.params.q[3] = -out.params.q[3];
        out.params.q[4] = 2.0 * m - out.params.q[4];
        mapped = apply_logistic(out.params, s);
        r = plcc(mapped, y);
      }
      out.plcc = r;
      return out;
    } catch (const MetricError&) {
      // constant mapped scores; fall through to the raw correlation
    }
  }
  out.degenerate = true;
  out.plcc = std::abs(plcc(s, y));
  return out;
}

EvalReport evaluate_scores(std::span<const double> predicted, std::span<const double> subjective) {
  check_pair(predicted, subjective, 5, "evaluate_scores");
  EvalReport report;
  report.n = predicted.size();
  try {
    report.srcc = srcc(predicted, subjective);
    report.plcc_raw = plcc(predicted, subjective);
    const auto mapped = mapped_plcc(predicted, subjective);
    report.plcc_mapped = mapped.plcc;
    report.logistic = mapped.params;
    report.fit_degenerate = mapped.degenerate;
  } catch (const MetricError&) {
    report.srcc = 0.0;
    report.plcc_raw = 0.0;
    report.plcc_mapped = 0.0;
    report.logistic = LogisticParams{};
    report.fit_degenerate = true;
  }
  return report;
}

std::string EvalReport::to_kv() const {
  std::ostringstream out;
  out << "plcc_mapped = " << format_double(plcc_mapped) << '\n'
      << "plcc_raw = " << format_double(plcc_raw) << '\n'
      << "srcc = " << format_double(srcc) << '\n';
  for (std::size_t k = 0; k < 5; ++k)
    out << 'q' << (k + 1) << " = " << format_double(logistic.q[k]) << '\n';
  out << "n = " << n << '\n' << "fit_degenerate = " << (fit_degenerate ? 1 : 0) << '\n';
  return out.str();
}

EvalReport EvalReport::from_kv(const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("report: missing key '" + key + "'");
    return it->second;
  };
  EvalReport r;
  r.plcc_mapped = parse_double(get("plcc_mapped"), "plcc_mapped");
  r.plcc_raw = parse_double(get("plcc_raw"), "plcc_raw");
  r.srcc = parse_double(get("srcc"), "srcc");
  for (std::size_t k = 0; k < 5; ++k) {
    const std::string key = "q" + std::to_string(k + 1);
    r.logistic.q[k] = parse_double(get(key), key);
  }
  const auto n = parse_int(get("n"), "n");
  if (n < 0) throw ParseError("report: n must be non-negative");
  r.n = static_cast<std::size_t>(n);
  const auto flag = parse_int(get("fit_degenerate"), "fit_degenerate");
  if (flag != 0 && flag != 1) throw ParseError("report: fit_degenerate must be 0 or 1");
  r.fit_degenerate = flag == 1;
  return r;
}

}  // namespace kanfit
