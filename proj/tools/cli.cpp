#include "cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "kanfit/basis.hpp"
#include "kanfit/data.hpp"
#include "kanfit/errors.hpp"
#include "kanfit/model_io.hpp"
#include "kanfit/text.hpp"
#include "kanfit/train.hpp"

#ifndef KANFIT_VERSION
#define KANFIT_VERSION "unknown"
#endif

namespace kanfit::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

class KvWriter {
 public:
  template <class T>
  KvWriter& operator()(const std::string& key, const T& value) {
    out_ << key << " = " << value << '\n';
    return *this;
  }
  KvWriter& num(const std::string& key, double v) { return (*this)(key, format_double(v)); }
  KvWriter& raw(const std::string& text) {
    out_ << text;
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

// ---- synth ----------------------------------------------------------------

struct SynthOptions {
  std::string kind;
  std::size_t n = 0;
  std::size_t dim = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  SyntheticKind kind;
  try {
    kind = parse_synthetic_kind(o.kind);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  const fs::path path(o.out);
  if (!o.force && (fs::exists(path) || fs::exists(fs::path(o.out + ".meta"))))
    throw ParameterError("refusing to overwrite '" + o.out + "' (pass --force)");
  const Dataset ds = gen_synthetic(kind, o.n, o.dim, o.noise, o.seed);
  save_feature_csv(ds, path);
  out << "wrote " << o.out << ": " << ds.rows() << " rows, " << ds.cols() << " features ("
      << synthetic_kind_name(kind) << ", seed " << o.seed << ")\n";
  return kOk;
}

// ---- train ----------------------------------------------------------------

struct TrainOptions {
  std::string config;
  std::string out_dir;
  int threads = -1;
};

std::string manifest_text(const RunConfig& rc, const std::string& config_path,
                          const std::string& config_text, const std::string& data_text,
                          const std::string& started, const std::string& finished) {
  const auto& t = rc.train;
  const auto& b = t.basis;
  KvWriter kv;
  kv.raw("# kanfit run manifest\n");
  kv("kanfit_version", KANFIT_VERSION)("name", rc.output_name);
  kv("config_path", config_path)("config_sha256", sha256_hex(config_text));
  kv("dataset_path", rc.data_path.string())("dataset_sha256", sha256_hex(data_text));
  kv("seed", t.seed)("started_utc", started)("finished_utc", finished);
  kv("model_kind", model_kind_name(t.model_kind))("layer_widths", join_ints(t.layer_widths));
  if (t.model_kind != ModelKind::MLP) {
    kv("basis_family", family_name(b.family))("basis_degree", b.degree);
    if (b.family != BasisFamily::BSplineRBF && b.family != BasisFamily::Wavelet)
      kv("basis_order", basis_order_name(b.degree));
    kv.num("expansion_point", b.expansion_point)
        .num("jacobi_alpha", b.jacobi_alpha)
        .num("jacobi_beta", b.jacobi_beta)
        .num("grid_min", b.grid_min)
        .num("grid_max", b.grid_max);
    kv("n_spline", b.n_spline)("spline_degree", b.spline_degree).num("rbf_epsilon", b.rbf_epsilon);
    kv("squash", b.squash ? "tanh" : "none");
    kv("init", "coefficients normal sd 1/(n_in*n_basis)");
  } else {
    kv("hidden_activation", "relu")("init", "he normal");
  }
  kv("optimizer", "adam").num("adam_beta1", t.adam.beta1).num("adam_beta2", t.adam.beta2);
  kv.num("adam_eps", t.adam.eps_hat);
  kv("loss", "mse")("batch", "full");
  kv("lr_grid", join_doubles(t.lr_grid))("selection", "val plcc_mapped + srcc");
  kv("max_epochs", t.max_epochs)("patience", t.patience);
  kv.num("split_train", t.split.train).num("split_val", t.split.val);
  kv("split_rounding", "floor/floor/remainder");
  kv("standardize_features", t.standardize ? "true" : "false");
  kv("score_normalization", "[0,1] from declared range else train min/max");
  kv("threads", t.threads);
  kv("model_file", rc.output_name + ".model")("results_file", rc.output_name + ".results");
  kv("history_file", rc.output_name + ".history.csv");
  return kv.str();
}

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  const fs::path config_path(o.config);
  const std::string config_text = read_file(config_path);
  auto base = config_path.parent_path();
  if (base.empty()) base = ".";
  RunConfig rc = parse_run_config(config_text, o.config, base);
  if (!o.out_dir.empty()) rc.output_dir = o.out_dir;
  if (o.threads >= 0) rc.train.threads = static_cast<unsigned>(o.threads);

  const std::string data_text = read_file(rc.data_path);
  Dataset ds = load_feature_csv(rc.data_path);
  if (!rc.data_name.empty()) ds.name = rc.data_name;
  rc.train.validate(ds.cols());
  const SplitIndices splits = split_dataset(ds.rows(), rc.train.split, rc.train.seed);

  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  SweepResult sweep = lr_sweep(rc.train, ds, splits);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string finished = utc_now();

  for (const auto& run : sweep.runs)
    if (!run.ok) err << "warning: lr " << format_double(run.lr) << " diverged: " << run.diagnostic << '\n';

  const SweepRun& best = sweep.runs[sweep.best_index];
  double train_seconds = 0.0;
  int total_epochs = 0;
  for (const auto& run : sweep.runs) {
    train_seconds += run.history.total_seconds;
    total_epochs += run.history.epochs_run;
  }

  KvWriter kv;
  kv.raw("# kanfit results\n");
  kv("name", rc.output_name)("model_kind", model_kind_name(rc.train.model_kind));
  kv("dataset", ds.name.empty() ? rc.data_path.filename().string() : ds.name);
  kv("manifest", rc.output_name + ".manifest");
  kv("n_train", splits.train.size())("n_val", splits.val.size())("n_test", splits.test.size());
  kv.num("best_lr", sweep.best_lr);
  kv("epochs_run", best.history.epochs_run)("best_epoch", best.history.best_epoch);
  kv.num("best_val_loss", best.history.best_val_loss);
  kv.num("val_plcc_mapped", best.val_report.plcc_mapped).num("val_srcc", best.val_report.srcc);
  kv.raw(sweep.test_report.to_kv());
  for (std::size_t i = 0; i < sweep.runs.size(); ++i) {
    const auto& run = sweep.runs[i];
    const std::string p = "run" + std::to_string(i) + "_";
    kv.num(p + "lr", run.lr)(p + "status", run.ok ? "ok" : "diverged");
    if (run.ok) kv(p + "epochs_run", run.history.epochs_run).num(p + "val_score", run.selection_score);
  }
  // Timing fields; everything above is deterministic for a fixed config.
  kv.num("epochs_per_sec", train_seconds > 0.0 ? total_epochs / train_seconds : 0.0);
  kv.num("train_seconds", wall);

  fs::create_directories(rc.output_dir);
  const fs::path stem = rc.output_dir / rc.output_name;
  save_model(ModelFile{std::string(model_kind_name(rc.train.model_kind)), sweep.network,
                       sweep.standardizer},
             fs::path(stem.string() + ".model"));
  write_file_atomic(stem.string() + ".results", kv.str());
  std::ostringstream hist;
  best.history.write_csv(hist);
  write_file_atomic(stem.string() + ".history.csv", hist.str());
  write_file_atomic(stem.string() + ".manifest",
                    manifest_text(rc, o.config, config_text, data_text, started, finished));

  out << model_kind_name(rc.train.model_kind) << ": best lr " << format_double(sweep.best_lr)
      << ", test plcc " << std::fixed << std::setprecision(4) << sweep.test_report.plcc_mapped
      << ", srcc " << sweep.test_report.srcc << std::defaultfloat << " -> " << stem.string()
      << ".{model,results,manifest,history.csv}\n";
  return kOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalOptions {
  std::string model;
  std::string data;
  std::string out;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const ModelFile mf = load_model(o.model);
  const Dataset ds = load_feature_csv(o.data);
  const auto expected = static_cast<std::size_t>(mf.network.n_inputs());
  if (ds.cols() != expected)
    throw ShapeError("feature count mismatch: model expects " + std::to_string(expected) +
                     " features, dataset has " + std::to_string(ds.cols()));
  const Dataset prepared = mf.standardizer.apply(ds);
  std::vector<std::size_t> rows(ds.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const EvalReport report = evaluate(mf.network, prepared, rows, mf.standardizer);

  KvWriter kv;
  kv("model", o.model)("model_kind", mf.model_kind)("dataset", o.data);
  kv.raw(report.to_kv());
  const std::string text = kv.str();
  out << text;
  if (!o.out.empty()) write_file_atomic(o.out, text);
  return kOk;
}

// ---- compare --------------------------------------------------------------

struct CompareRow {
  std::string name;
  std::string file;
  double plcc = 0.0;
  double srcc = 0.0;
  double eps = 0.0;
};

int cmd_compare(const std::string& dir, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(dir)) throw ParameterError("'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".results") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<CompareRow> rows;
  for (const auto& f : files) {
    try {
      const auto kv = parse_kv(read_file(f));
      const auto report = EvalReport::from_kv(kv);
      CompareRow row;
      row.file = f.filename().string();
      if (auto it = kv.find("name"); it != kv.end())
        row.name = it->second;
      else if (auto mk = kv.find("model_kind"); mk != kv.end())
        row.name = mk->second;
      else
        row.name = f.stem().string();
      row.plcc = report.plcc_mapped;
      row.srcc = report.srcc;
      if (auto it = kv.find("epochs_per_sec"); it != kv.end())
        row.eps = parse_double(it->second, "epochs_per_sec");
      rows.push_back(row);
    } catch (const std::exception& e) {
      err << "warning: skipping " << f.string() << ": " << e.what() << '\n';
    }
  }
  if (rows.empty()) throw ParameterError("no results in '" + dir + "'");
  std::stable_sort(rows.begin(), rows.end(), [](const CompareRow& a, const CompareRow& b) {
    return a.name < b.name;
  });

  double best_plcc = rows[0].plcc, best_srcc = rows[0].srcc, best_eps = rows[0].eps;
  for (const auto& r : rows) {
    best_plcc = std::max(best_plcc, r.plcc);
    best_srcc = std::max(best_srcc, r.srcc);
    best_eps = std::max(best_eps, r.eps);
  }
  std::size_t name_w = 5;
  for (const auto& r : rows) name_w = std::max(name_w, r.name.size());

  auto cell = [](double v, int prec, bool best) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v << (best ? "*" : " ");
    return s.str();
  };
  out << std::left << std::setw(static_cast<int>(name_w)) << "model" << "  " << std::right
      << std::setw(8) << "PLCC" << "   " << std::setw(8) << "SRCC" << "   " << std::setw(10)
      << "epochs/s" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(name_w)) << r.name << "  " << std::right
        << std::setw(9) << cell(r.plcc, 4, r.plcc == best_plcc) << "  " << std::setw(9)
        << cell(r.srcc, 4, r.srcc == best_srcc) << "  " << std::setw(11)
        << cell(r.eps, 1, r.eps == best_eps) << '\n';
  }
  out << "* best in column\n";
  return kOk;
}

// ---- basis ----------------------------------------------------------------

struct BasisOptions {
  std::string family;
  int degree = -1;
  double x = 0.0;
  double expansion_point = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  int n_spline = 5;
  int spline_degree = 3;
  double epsilon = 0.0;
  double scale = 1.0;
  double shift = 0.0;
};

int cmd_basis(const BasisOptions& o, std::ostream& out) {
  BasisFamily family;
  try {
    family = parse_family(o.family);
  } catch (const ParameterError&) {
    throw UsageError("unknown family '" + o.family + "' (valid: " + valid_family_names() + ")");
  }
  out << "family = " << family_name(family) << '\n';
  out << "x = " << format_double(o.x) << '\n';
  if (family == BasisFamily::Wavelet) {
    const auto w = wavelet_eval(o.scale, o.shift, o.x);
    out << "a = " << format_double(o.scale) << "\nb = " << format_double(o.shift) << '\n';
    out << "value = " << format_double(w.value) << "\nd_dx = " << format_double(w.d_dx)
        << "\nd_da = " << format_double(w.d_da) << "\nd_db = " << format_double(w.d_db) << '\n';
    return kOk;
  }
  BasisSpec spec = BasisSpec::defaults(family);
  if (o.degree >= 0) spec.degree = o.degree;
  spec.expansion_point = o.expansion_point;
  spec.jacobi_alpha = o.alpha;
  spec.jacobi_beta = o.beta;
  spec.n_spline = o.n_spline;
  spec.spline_degree = o.spline_degree;
  spec.rbf_epsilon = o.epsilon > 0.0 ? o.epsilon
                                     : default_rbf_epsilon(spec.grid_min, spec.grid_max, spec.n_spline);
  spec.validate();
  if (family != BasisFamily::BSplineRBF) out << "degree = " << spec.degree << '\n';
  const auto ev = evaluate_basis(spec, o.x);
  out << "k value deriv\n";
  for (std::size_t k = 0; k < ev.values.size(); ++k)
    out << k << ' ' << format_double(ev.values[k]) << ' ' << format_double(ev.derivs[k]) << '\n';
  return kOk;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[digest[i] >> 4];
    s += hex[digest[i] & 0xF];
  }
  return s;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"kanfit: KAN regressors for feature-based image quality scores", "kanfit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", KANFIT_VERSION);

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "generate a synthetic feature CSV");
  synth->add_option("--kind", so.kind, "product | friedman | randkan | monotone")->required();
  synth->add_option("--n", so.n, "rows")->required()->check(CLI::PositiveNumber);
  synth->add_option("--dim", so.dim, "feature count")->required()->check(CLI::PositiveNumber);
  synth->add_option("--noise", so.noise, "target noise sd")->capture_default_str();
  synth->add_option("--seed", so.seed, "random seed")->capture_default_str();
  synth->add_option("--out", so.out, "output CSV path")->required();
  synth->add_flag("--force", so.force, "overwrite an existing file");

  TrainOptions to;
  auto* train = app.add_subcommand("train", "run a learning-rate sweep from a config file");
  train->add_option("--config", to.config, "config file")->required();
  train->add_option("--out-dir", to.out_dir, "override [output] dir");
  train->add_option("--threads", to.threads, "override [train] threads")->check(CLI::NonNegativeNumber);

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "score a saved model on a feature CSV");
  eval->add_option("--model", eo.model, "model file")->required();
  eval->add_option("--data", eo.data, "feature CSV")->required();
  eval->add_option("--out", eo.out, "also write the report here");

  std::string compare_dir;
  auto* compare = app.add_subcommand("compare", "tabulate .results files");
  compare->add_option("--dir", compare_dir, "directory of .results files")->required();

  BasisOptions bo;
  auto* basis = app.add_subcommand("basis", "print basis values and derivatives at a point");
  basis->add_option("--family", bo.family, valid_family_names())->required();
  basis->add_option("--degree", bo.degree, "polynomial degree");
  basis->add_option("--x", bo.x, "evaluation point")->required();
  basis->add_option("--expansion-point", bo.expansion_point, "taylor centre");
  basis->add_option("--alpha", bo.alpha, "jacobi alpha");
  basis->add_option("--beta", bo.beta, "jacobi beta");
  basis->add_option("--n-spline", bo.n_spline, "bsrbf grid points");
  basis->add_option("--spline-degree", bo.spline_degree, "bsrbf spline degree");
  basis->add_option("--epsilon", bo.epsilon, "bsrbf gaussian width (default from grid)");
  basis->add_option("--scale", bo.scale, "wavelet scale a");
  basis->add_option("--shift", bo.shift, "wavelet shift b");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(so, out);
    if (*train) return cmd_train(to, out, err);
    if (*eval) return cmd_eval(eo, out);
    if (*compare) return cmd_compare(compare_dir, out, err);
    if (*basis) return cmd_basis(bo, out);
    return kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const IntegrityError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const MetricError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace kanfit::cli
