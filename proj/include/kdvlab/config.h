#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "kdvlab/common.h"

namespace kdvlab {

inline constexpr const char* kVersion = "0.3.0";

/// Effective settings of one run. Every field has a `key = value` spelling
/// (the member name) in configuration files and a --key flag on the CLI.
struct RunConfig {
  double L = 1.0;
  double T = 1.0;
  /// Sweep horizons, strictly decreasing, all at most T0.
  std::vector<double> T_list{1.0, 0.5, 0.25, 0.125};
  /// Upper horizon for sweeps.
  double T0 = 1.0;
  int K = 8;
  int N_prod = 200;
  int n_x = 1600;
  double dt_max = 2.5e-5;
  std::string method = "gramian";
  std::optional<double> gamma;
  double gamma_start = 0.5;
  double band_width = 4000.0;
  /// Modal content "k:re[:im],..." or "random" (conjugate pairs drawn from seed).
  std::string y0 = "1:1,-1:1";
  /// Rescales y0 to this L2 norm when positive.
  double amplitude = 0.0;
  std::string mode = "null";
  std::string system = "neumann";
  /// Constant control value for `simulate`.
  double control = 0.0;
  double tol = 1e-3;
  int max_iter = 20;
  double critical_tol = 1e-9;
  std::string output_dir = "kdvlab_out";
  std::uint64_t seed = 0;
  int workers = 1;

  /// Where each key got its value: "default", "<file>:<line>" or "flag".
  std::map<std::string, std::string> origin;

  /// Assigns one key from text. Throws UsageError for unknown keys or
  /// malformed values.
  void set(const std::string& key, const std::string& value, const std::string& where);
  /// Throws UsageError on the first violated invariant.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Known keys in declaration order.
const std::vector<std::string>& config_keys();

/// Defaults with the output directory taken from KDVLAB_OUT when set.
RunConfig default_config();

/// Reads `key = value` lines ('#' starts a comment) on top of the defaults.
/// Errors name the file and line. The result is not yet validated so that
/// flags can still override it.
RunConfig parse_config_text(const std::string& text, const std::string& name,
                            RunConfig base = default_config());
RunConfig parse_config(const std::string& path, RunConfig base = default_config());

/// Parses "k:re[:im],..." into modal coefficients and checks that each pair
/// k, -k carries conjugate values.
std::vector<std::pair<int, cd>> parse_modes(const std::string& text);

/// Modal content for the run: parse_modes(y0), or K conjugate pairs with
/// standard normal parts drawn from seed when y0 = "random".
std::vector<std::pair<int, cd>> initial_modes(const RunConfig& cfg);

}  // namespace kdvlab
