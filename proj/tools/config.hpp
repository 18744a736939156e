#pragma once

// Train config files: INI-style sections with `key = value` lines.
//
//   [data]    path (required), name
//   [model]   kind (required), widths, degree, expansion_point, jacobi_alpha,
//             jacobi_beta, grid_min, grid_max, n_spline, spline_degree,
//             rbf_epsilon, squash
//   [train]   lr_grid, max_epochs, patience, seed, train_ratio, val_ratio,
//             standardize, threads
//   [output]  dir, name
//
// Lists are comma separated, booleans are true/false/1/0. Relative paths are
// resolved against the config file's directory. Unknown sections and keys are
// errors.

#include <filesystem>
#include <string>
#include <string_view>

#include "kanfit/train.hpp"

namespace kanfit::cli {

struct RunConfig {
  std::filesystem::path data_path;
  std::string data_name;  // empty: keep the dataset's own name
  TrainConfig train;
  std::filesystem::path output_dir{"."};
  std::string output_name;  // defaults to the model kind name
};

/// Throws ParseError ("<source>:<line>: ...") on syntax, unknown keys and bad
/// values, and ParameterError/ShapeError from TrainConfig::validate.
RunConfig parse_run_config(std::string_view text, const std::string& source,
                           const std::filesystem::path& base_dir);

RunConfig load_run_config(const std::filesystem::path& path);

/// "constant", "linear", "quadratic", "cubic", else "degree-<n>".
std::string basis_order_name(int degree);

}  // namespace kanfit::cli
