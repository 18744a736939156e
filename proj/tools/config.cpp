#include "config.hpp"

#include <map>
#include <set>
#include <vector>

#include "kanfit/errors.hpp"
#include "kanfit/text.hpp"

namespace kanfit::cli {

namespace {

struct Entry {
  std::string value;
  std::size_t line = 0;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"data", {"path", "name"}},
      {"model",
       {"kind", "widths", "degree", "expansion_point", "jacobi_alpha", "jacobi_beta", "grid_min",
        "grid_max", "n_spline", "spline_degree", "rbf_epsilon", "squash"}},
      {"train",
       {"lr_grid", "max_epochs", "patience", "seed", "train_ratio", "val_ratio", "standardize",
        "threads"}},
      {"output", {"dir", "name"}},
  };
  return s;
}

class Reader {
 public:
  Reader(std::string source, std::map<std::string, Section> sections)
      : source_(std::move(source)), sections_(std::move(sections)) {}

  [[noreturn]] void fail(std::size_t line, const std::string& what) const {
    throw ParseError(source_ + ":" + std::to_string(line) + ": " + what);
  }

  const Entry* find(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto e = s->second.find(key);
    return e == s->second.end() ? nullptr : &e->second;
  }

  // Runs `fn(entry)`, rewrapping parse errors with the entry's line number.
  template <class Fn>
  void with(const std::string& section, const std::string& key, Fn&& fn) const {
    const Entry* e = find(section, key);
    if (!e) return;
    try {
      fn(*e);
    } catch (const ParseError& err) {
      fail(e->line, "[" + section + "] " + key + ": " + err.what());
    } catch (const ParameterError& err) {
      fail(e->line, "[" + section + "] " + key + ": " + err.what());
    }
  }

  double real(const Entry& e) const { return parse_double(e.value, "value"); }

  long long integer(const Entry& e) const { return parse_int(e.value, "value"); }

  int small_int(const Entry& e) const {
    const auto v = integer(e);
    if (v < -1000000 || v > 1000000) throw ParseError("value out of range");
    return static_cast<int>(v);
  }

  bool boolean(const Entry& e) const {
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    throw ParseError("expected true or false, got '" + e.value + "'");
  }

  std::vector<std::string> list(const Entry& e) const {
    std::vector<std::string> out;
    for (const auto& part : split(e.value, ',')) {
      const auto t = trim(part);
      if (t.empty()) throw ParseError("empty list entry");
      out.emplace_back(t);
    }
    return out;
  }

 private:
  std::string source_;
  std::map<std::string, Section> sections_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

std::string basis_order_name(int degree) {
  switch (degree) {
    case 0: return "constant";
    case 1: return "linear";
    case 2: return "quadratic";
    case 3: return "cubic";
    default: return "degree-" + std::to_string(degree);
  }
}

RunConfig parse_run_config(std::string_view text, const std::string& source,
                           const std::filesystem::path& base_dir) {
  std::map<std::string, Section> sections;
  std::string current;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    throw ParseError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (!schema().contains(current)) fail("unknown section [" + current + "]");
      if (sections.contains(current)) fail("duplicate section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    if (current.empty()) fail("key outside of any section");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) fail("empty key");
    if (!schema().at(current).contains(key)) fail("unknown key '" + key + "' in [" + current + "]");
    if (value.empty()) fail("empty value for '" + key + "'");
    auto& sec = sections[current];
    if (sec.contains(key)) fail("duplicate key '" + key + "' in [" + current + "]");
    sec[key] = Entry{value, line_no};
  }

  Reader rd(source, std::move(sections));
  RunConfig rc;

  const Entry* path = rd.find("data", "path");
  if (!path) throw ParseError(source + ": [data] path is required");
  rc.data_path = resolve(base_dir, path->value);
  rd.with("data", "name", [&](const Entry& e) { rc.data_name = e.value; });

  const Entry* kind = rd.find("model", "kind");
  if (!kind) throw ParseError(source + ": [model] kind is required");
  rd.with("model", "kind", [&](const Entry& e) {
    rc.train = TrainConfig::for_model(parse_model_kind(e.value));
  });

  auto& t = rc.train;
  auto& b = t.basis;
  rd.with("model", "widths", [&](const Entry& e) {
    t.layer_widths.clear();
    for (const auto& w : rd.list(e)) t.layer_widths.push_back(static_cast<int>(parse_int(w, "width")));
  });
  rd.with("model", "degree", [&](const Entry& e) { b.degree = rd.small_int(e); });
  rd.with("model", "expansion_point", [&](const Entry& e) { b.expansion_point = rd.real(e); });
  rd.with("model", "jacobi_alpha", [&](const Entry& e) { b.jacobi_alpha = rd.real(e); });
  rd.with("model", "jacobi_beta", [&](const Entry& e) { b.jacobi_beta = rd.real(e); });
  rd.with("model", "grid_min", [&](const Entry& e) { b.grid_min = rd.real(e); });
  rd.with("model", "grid_max", [&](const Entry& e) { b.grid_max = rd.real(e); });
  rd.with("model", "n_spline", [&](const Entry& e) { b.n_spline = rd.small_int(e); });
  rd.with("model", "spline_degree", [&](const Entry& e) { b.spline_degree = rd.small_int(e); });
  rd.with("model", "rbf_epsilon", [&](const Entry& e) { b.rbf_epsilon = rd.real(e); });
  rd.with("model", "squash", [&](const Entry& e) { b.squash = rd.boolean(e); });
  if (t.model_kind != ModelKind::MLP) {
    try {
      b.validate();
    } catch (const ParameterError& err) {
      rd.fail(kind->line, std::string("[model] basis settings: ") + err.what());
    }
  }

  rd.with("train", "lr_grid", [&](const Entry& e) {
    t.lr_grid.clear();
    for (const auto& v : rd.list(e)) t.lr_grid.push_back(parse_double(v, "learning rate"));
  });
  rd.with("train", "max_epochs", [&](const Entry& e) { t.max_epochs = rd.small_int(e); });
  rd.with("train", "patience", [&](const Entry& e) { t.patience = rd.small_int(e); });
  rd.with("train", "seed", [&](const Entry& e) {
    const auto v = rd.integer(e);
    if (v < 0) throw ParseError("seed must be >= 0");
    t.seed = static_cast<std::uint64_t>(v);
  });
  rd.with("train", "train_ratio", [&](const Entry& e) { t.split.train = rd.real(e); });
  rd.with("train", "val_ratio", [&](const Entry& e) { t.split.val = rd.real(e); });
  rd.with("train", "standardize", [&](const Entry& e) { t.standardize = rd.boolean(e); });
  rd.with("train", "threads", [&](const Entry& e) {
    const auto v = rd.integer(e);
    if (v < 0 || v > 1024) throw ParseError("threads must be in 0..1024");
    t.threads = static_cast<unsigned>(v);
  });

  rd.with("output", "dir", [&](const Entry& e) { rc.output_dir = resolve(base_dir, e.value); });
  if (!rd.find("output", "dir")) rc.output_dir = base_dir;
  rd.with("output", "name", [&](const Entry& e) {
    if (e.value.find_first_of("/\\") != std::string::npos)
      throw ParseError("name must not contain path separators");
    rc.output_name = e.value;
  });
  if (rc.output_name.empty()) rc.output_name = std::string(model_kind_name(t.model_kind));

  t.validate();
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_run_config(read_file(path), path.string(), base);
}

}  // namespace kanfit::cli
