#include <filesystem>
#include <string>

#include "cli_run.hpp"
#include "config.hpp"
#include "doctest.h"
#include "kanfit/errors.hpp"
#include "kanfit/text.hpp"

using namespace kanfit;
using testcli::run;
using testcli::slurp;
using testcli::spit;

namespace fs = std::filesystem;

namespace {

const char* kSmallConfig =
    "[data]\n"
    "path = d.csv\n"
    "[model]\n"
    "kind = ChebyKAN\n"
    "widths = 3, 4, 1\n"
    "[train]\n"
    "lr_grid = 1e-2, 1e-3\n"
    "max_epochs = 30\n"
    "patience = 5\n"
    "seed = 2\n"
    "threads = 1\n"
    "[output]\n"
    "dir = out\n";

fs::path with_small_dataset(const std::string& name) {
  const auto dir = testcli::fresh_dir(name);
  const auto r = run({"synth", "--kind", "monotone", "--n", "120", "--dim", "3", "--noise", "0.05",
                      "--seed", "4", "--out", (dir / "d.csv").string()});
  REQUIRE(r.code == 0);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"synth", "--kind", "product", "--n", "10", "--dim", "2"}).code == 2);
  CHECK(run({"synth", "--kind", "nope", "--n", "10", "--dim", "2", "--out", "/tmp/x.csv"}).code == 2);
  CHECK(run({"basis", "--family", "legendre", "--x", "0"}).code == 2);
  const auto r = run({"basis", "--family", "legendre", "--x", "0"});
  CHECK(r.err.find("valid:") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("synth is deterministic and refuses to overwrite") {
  const auto dir = testcli::fresh_dir("synth");
  const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
  auto synth = [](const std::string& out, const std::string& seed) {
    return run({"synth", "--kind", "friedman", "--n", "50", "--dim", "6", "--noise", "0.1", "--seed",
                seed, "--out", out});
  };
  const auto r = synth(a, "3");
  REQUIRE(r.code == 0);
  CHECK(r.out == "wrote " + a + ": 50 rows, 6 features (friedman, seed 3)\n");
  REQUIRE(synth(b, "3").code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(synth(a, "3").code == 3);
  CHECK(run({"synth", "--kind", "friedman", "--n", "50", "--dim", "6", "--seed", "4", "--out", a,
             "--force"})
            .code == 0);
  CHECK(slurp(a) != slurp(b));
  CHECK(run({"synth", "--kind", "friedman", "--n", "50", "--dim", "3", "--out",
             (dir / "c.csv").string()})
            .code == 3);
  fs::remove_all(dir);
}

TEST_CASE("config errors carry line numbers") {
  const fs::path base = ".";
  auto error_of = [&](const std::string& text) {
    try {
      cli::parse_run_config(text, "c.ini", base);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("[data]\npath = d.csv\n[model]\nkind = ChebyKAN\ncolour = red\n")
            .find("c.ini:5: unknown key 'colour'") == 0);
  CHECK(error_of("[data]\npath = d.csv\n[extras]\n").find("c.ini:3: unknown section") == 0);
  CHECK(error_of("[data]\npath = d.csv\npath = e.csv\n").find("c.ini:3: duplicate key") == 0);
  CHECK(error_of("[data]\npath = d.csv\n[model]\nkind = ChebyKAN\n[train]\nmax_epochs = ten\n")
            .find("c.ini:6:") == 0);
  CHECK(error_of("[data]\npath = d.csv\n[model]\nkind = Chebykan\n").find("c.ini:4:") == 0);
  CHECK(error_of("[model]\nkind = ChebyKAN\n").find("[data] path is required") !=
        std::string::npos);
  CHECK(error_of("[data]\npath = \n").find("c.ini:2: empty value") == 0);
  CHECK(error_of("path = x\n").find("c.ini:1: key outside") == 0);
}

TEST_CASE("config values") {
  const auto rc = cli::parse_run_config(
      "[data]\npath = sub/d.csv\n[model]\nkind = HermiteKAN\nwidths = 4, 2, 1\ndegree = 2\n"
      "[train]\nlr_grid = 1e-3\nseed = 9\nstandardize = false\n[output]\nname = h\n",
      "c.ini", "/base");
  CHECK(rc.data_path == fs::path("/base/sub/d.csv"));
  CHECK(rc.train.model_kind == ModelKind::HermiteKAN);
  CHECK(rc.train.basis.family == BasisFamily::Hermite);
  CHECK(rc.train.basis.degree == 2);
  CHECK(rc.train.layer_widths == std::vector<int>{4, 2, 1});
  CHECK(rc.train.lr_grid == std::vector<double>{1e-3});
  CHECK(rc.train.seed == 9);
  CHECK_FALSE(rc.train.standardize);
  CHECK(rc.output_dir == fs::path("/base"));
  CHECK(rc.output_name == "h");
  CHECK(cli::basis_order_name(2) == "quadratic");
  CHECK(cli::basis_order_name(3) == "cubic");
  CHECK(cli::basis_order_name(7) == "degree-7");
}

TEST_CASE("train writes artifacts and eval reads them back") {
  const auto dir = with_small_dataset("train");
  spit(dir / "c.ini", kSmallConfig);
  const auto r = run({"train", "--config", (dir / "c.ini").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* ext : {".model", ".results", ".manifest", ".history.csv"})
    CHECK(fs::exists(dir / "out" / (std::string("ChebyKAN") + ext)));

  const auto manifest = parse_kv(slurp(dir / "out/ChebyKAN.manifest"));
  CHECK(manifest.at("basis_order") == "cubic");
  CHECK(manifest.at("config_sha256") == cli::sha256_hex(kSmallConfig));
  CHECK(manifest.at("dataset_sha256").size() == 64);
  CHECK(manifest.at("seed") == "2");

  const auto results = parse_kv(slurp(dir / "out/ChebyKAN.results"));
  CHECK(results.at("model_kind") == "ChebyKAN");
  CHECK(results.at("n_train") == "84");
  CHECK(results.contains("plcc_mapped"));
  CHECK(results.contains("run1_status"));

  const auto ev = run({"eval", "--model", (dir / "out/ChebyKAN.model").string(), "--data",
                       (dir / "d.csv").string(), "--out", (dir / "eval.txt").string()});
  REQUIRE_MESSAGE(ev.code == 0, ev.err);
  CHECK(ev.out == slurp(dir / "eval.txt"));
  CHECK(parse_kv(ev.out).at("n") == "120");

  // Mismatched width.
  REQUIRE(run({"synth", "--kind", "product", "--n", "20", "--dim", "4", "--out",
               (dir / "wide.csv").string()})
              .code == 0);
  const auto mismatch = run({"eval", "--model", (dir / "out/ChebyKAN.model").string(), "--data",
                             (dir / "wide.csv").string()});
  CHECK(mismatch.code == 3);
  CHECK(mismatch.err.find("model expects 3 features, dataset has 4") != std::string::npos);

  // Truncated model.
  const auto model_text = slurp(dir / "out/ChebyKAN.model");
  spit(dir / "cut.model", model_text.substr(0, model_text.size() / 2));
  const auto cut = run({"eval", "--model", (dir / "cut.model").string(), "--data",
                        (dir / "d.csv").string()});
  CHECK(cut.code == 3);
  CHECK(cut.err.find("model file line") != std::string::npos);

  CHECK(run({"eval", "--model", (dir / "none.model").string(), "--data", (dir / "d.csv").string()})
            .code == 4);
  fs::remove_all(dir);
}

TEST_CASE("train rejects bad configs") {
  const auto dir = with_small_dataset("train_bad");
  spit(dir / "c.ini", "[data]\npath = d.csv\n[model]\nkind = ChebyKAN\nwidths = 5, 1\n");
  const auto r = run({"train", "--config", (dir / "c.ini").string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("starts with 5") != std::string::npos);
  spit(dir / "c.ini", "[data]\npath = d.csv\n[model]\nkind = ChebyKAN\nbogus = 1\n");
  CHECK(run({"train", "--config", (dir / "c.ini").string()}).err.find(":5:") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("compare") {
  const auto dir = testcli::fresh_dir("compare");
  CHECK(run({"compare", "--dir", dir.string()}).code == 3);
  auto results = [](const std::string& name, double plcc, double srcc, double eps) {
    return "name = " + name + "\nplcc_mapped = " + format_double(plcc) +
           "\nplcc_raw = 0.5\nsrcc = " + format_double(srcc) +
           "\nq1 = 1\nq2 = 0\nq3 = 0\nq4 = 1\nq5 = 0\nn = 10\nfit_degenerate = 0\n"
           "epochs_per_sec = " +
           format_double(eps) + "\n";
  };
  spit(dir / "b.results", results("Beta", 0.91, 0.95, 100.0));
  const auto one = run({"compare", "--dir", dir.string()});
  REQUIRE(one.code == 0);
  CHECK(one.out.find("Beta") != std::string::npos);
  CHECK(one.out.find("0.9100*") != std::string::npos);

  spit(dir / "a.results", results("Alpha", 0.93, 0.90, 250.0));
  spit(dir / "junk.results", "this is not a results file\n");
  const auto two = run({"compare", "--dir", dir.string()});
  REQUIRE(two.code == 0);
  CHECK(two.err.find("skipping") != std::string::npos);
  const auto lines = split(two.out, '\n');
  REQUIRE(lines.size() >= 4);
  CHECK(lines[1].find("Alpha") == 0);
  CHECK(lines[2].find("Beta") == 0);
  CHECK(lines[1].find("0.9300*") != std::string::npos);
  CHECK(lines[1].find("0.9000 ") != std::string::npos);
  CHECK(lines[1].find("250.0*") != std::string::npos);
  CHECK(lines[2].find("0.9500*") != std::string::npos);
  CHECK(lines[3] == "* best in column");
  fs::remove_all(dir);
}

TEST_CASE("basis subcommand") {
  const auto c = run({"basis", "--family", "chebyshev", "--degree", "3", "--x", "0.5"});
  REQUIRE(c.code == 0);
  CHECK(c.out.find("3 -1 ") != std::string::npos);
  const auto w = run({"basis", "--family", "wavelet", "--x", "0"});
  REQUIRE(w.code == 0);
  CHECK(w.out.find("value = 0.8673250705840775") != std::string::npos);
  CHECK(run({"basis", "--family", "chebyshev", "--x", "1.5"}).code == 3);
  CHECK(run({"basis", "--family", "jacobi", "--x", "0", "--alpha", "-2"}).code == 3);
}

}  // TEST_SUITE
