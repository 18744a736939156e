#pragma once

// KANFIT-MODEL v1: plain-text model persistence.
//
//   KANFIT-MODEL v1
//   model_kind <name>
//   layer_count <L>
//   layer <i> kan n_in <a> n_out <b> family <f> degree <d> expansion_point <x>
//         jacobi_alpha <x> jacobi_beta <x> grid_min <x> grid_max <x> n_spline <k>
//         spline_degree <k> rbf_epsilon <x> squash <0|1>        (one line)
//   layer <i> dense n_in <a> n_out <b> activation <identity|relu>
//   params <count>
//   <values, whitespace separated, at most 8 per line>
//   ... (layer/params repeated per layer, in network order)
//   standardizer standardize_features <0|1> n_features <m> score_low <x> score_high <x>
//   mean <m values>
//   stddev <m values>
//   end
//
// Parameter order inside a layer follows Network's flat layout. Numbers are
// written in shortest round-trip form, so save/load is exact.

#include <filesystem>
#include <string>
#include <string_view>

#include "kanfit/data.hpp"
#include "kanfit/network.hpp"

namespace kanfit {

inline constexpr std::string_view kModelHeader = "KANFIT-MODEL v1";

struct ModelFile {
  std::string model_kind;
  Network network;
  Standardizer standardizer;

  friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

std::string format_model(const ModelFile& model);

/// Throws IntegrityError (with the line number) on a bad header, truncation,
/// count mismatch or malformed token.
ModelFile parse_model(std::string_view text);

void save_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace kanfit
