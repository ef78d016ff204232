#include "kdvlab/config.h"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <fmt/format.h>

namespace kdvlab {

namespace {

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end) {
    throw UsageError(fmt::format("{}: '{}' is not a number", key, s));
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& s) {
  long long v = 0;
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end) {
    throw UsageError(fmt::format("{}: '{}' is not an integer", key, s));
  }
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  return parts;
}

std::string one_of(const std::string& key, const std::string& s,
                   std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (s == a) return s;
  }
  throw UsageError(fmt::format("{}: '{}' is not one of {}", key, s,
                               fmt::join(std::vector<std::string>(allowed.begin(), allowed.end()), ", ")));
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "L",      "T",         "T_list",     "T0",      "K",          "N_prod",  "n_x",
      "dt_max", "method",    "gamma",      "gamma_start", "band_width", "y0", "amplitude",
      "mode",   "system",    "control",    "tol",     "max_iter",   "critical_tol",
      "output_dir", "seed",  "workers"};
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& raw, const std::string& where) {
  const std::string value = boost::trim_copy(raw);
  if (key == "L") {
    L = to_double(key, value);
  } else if (key == "T") {
    T = to_double(key, value);
  } else if (key == "T_list") {
    T_list.clear();
    for (const auto& p : split_list(value)) T_list.push_back(to_double(key, p));
  } else if (key == "T0") {
    T0 = to_double(key, value);
  } else if (key == "K") {
    K = static_cast<int>(to_integer(key, value));
  } else if (key == "N_prod") {
    N_prod = static_cast<int>(to_integer(key, value));
  } else if (key == "n_x") {
    n_x = static_cast<int>(to_integer(key, value));
  } else if (key == "dt_max") {
    dt_max = to_double(key, value);
  } else if (key == "method") {
    method = one_of(key, value, {"window", "gramian"});
  } else if (key == "gamma") {
    if (value == "auto") {
      gamma.reset();
    } else {
      gamma = to_double(key, value);
    }
  } else if (key == "gamma_start") {
    gamma_start = to_double(key, value);
  } else if (key == "band_width") {
    band_width = to_double(key, value);
  } else if (key == "y0") {
    if (value != "random") parse_modes(value);
    y0 = value;
  } else if (key == "amplitude") {
    amplitude = to_double(key, value);
  } else if (key == "mode") {
    mode = one_of(key, value, {"reach", "null"});
  } else if (key == "system") {
    system = one_of(key, value, {"neumann", "jump", "modal", "nonlinear"});
  } else if (key == "control") {
    control = to_double(key, value);
  } else if (key == "tol") {
    tol = to_double(key, value);
  } else if (key == "max_iter") {
    max_iter = static_cast<int>(to_integer(key, value));
  } else if (key == "critical_tol") {
    critical_tol = to_double(key, value);
  } else if (key == "output_dir") {
    if (value.empty()) throw UsageError("output_dir: empty path");
    output_dir = value;
  } else if (key == "seed") {
    const long long s = to_integer(key, value);
    if (s < 0) throw UsageError("seed: must be nonnegative");
    seed = static_cast<std::uint64_t>(s);
  } else if (key == "workers") {
    workers = static_cast<int>(to_integer(key, value));
  } else {
    throw UsageError(fmt::format("unknown key '{}'", key));
  }
  origin[key] = where;
}

void RunConfig::validate() const {
  auto positive = [](const char* name, double v) {
    if (!(v > 0.0)) throw UsageError(fmt::format("{} must be positive (got {})", name, v));
  };
  positive("L", L);
  positive("T", T);
  positive("T0", T0);
  positive("dt_max", dt_max);
  positive("tol", tol);
  positive("critical_tol", critical_tol);
  positive("gamma_start", gamma_start);
  positive("band_width", band_width);
  if (gamma) positive("gamma", *gamma);
  if (amplitude < 0.0) throw UsageError("amplitude must be nonnegative");
  if (K < 1) throw UsageError(fmt::format("K must be at least 1 (got {})", K));
  if (N_prod < K) throw UsageError(fmt::format("N_prod = {} below K = {}", N_prod, K));
  if (n_x < 16) throw UsageError(fmt::format("n_x must be at least 16 (got {})", n_x));
  if (n_x % 2 != 0) throw UsageError(fmt::format("n_x must be even (got {})", n_x));
  if (max_iter < 0) throw UsageError("max_iter must be nonnegative");
  if (workers < 1) throw UsageError("workers must be at least 1");
  if (T_list.empty()) throw UsageError("T_list is empty");
  for (size_t i = 0; i < T_list.size(); ++i) {
    positive("T_list entry", T_list[i]);
    if (i > 0 && !(T_list[i] < T_list[i - 1])) {
      throw UsageError("T_list must be sorted strictly decreasing");
    }
  }
  if (T_list.front() > T0) {
    throw UsageError(fmt::format("T_list starts at {} above T0 = {}", T_list.front(), T0));
  }
  if (y0 != "random") {
    for (const auto& [k, c] : parse_modes(y0)) {
      if (std::abs(k) > K) {
        throw UsageError(fmt::format("y0 uses mode {} beyond K = {}", k, K));
      }
    }
  }
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["L"] = L;
  j["T"] = T;
  j["T_list"] = T_list;
  j["T0"] = T0;
  j["K"] = K;
  j["N_prod"] = N_prod;
  j["n_x"] = n_x;
  j["dt_max"] = dt_max;
  j["method"] = method;
  j["gamma"] = gamma ? nlohmann::json(*gamma) : nlohmann::json("auto");
  j["gamma_start"] = gamma_start;
  j["band_width"] = band_width;
  j["y0"] = y0;
  j["amplitude"] = amplitude;
  j["mode"] = mode;
  j["system"] = system;
  j["control"] = control;
  j["tol"] = tol;
  j["max_iter"] = max_iter;
  j["critical_tol"] = critical_tol;
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  j["workers"] = workers;
  nlohmann::json o = nlohmann::json::object();
  for (const auto& k : config_keys()) {
    auto it = origin.find(k);
    o[k] = it == origin.end() ? "default" : it->second;
  }
  j["origin"] = o;
  return j;
}

RunConfig default_config() {
  RunConfig cfg;
  if (const char* env = std::getenv("KDVLAB_OUT"); env != nullptr && *env != '\0') {
    cfg.output_dir = env;
    cfg.origin["output_dir"] = "env:KDVLAB_OUT";
  }
  return cfg;
}

RunConfig parse_config_text(const std::string& text, const std::string& name, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    boost::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = fmt::format("{}:{}", name, number);
    if (eq == std::string::npos) throw UsageError(fmt::format("{}: expected 'key = value'", where));
    const std::string key = boost::trim_copy(line.substr(0, eq));
    try {
      base.set(key, line.substr(eq + 1), where);
    } catch (const UsageError& e) {
      throw UsageError(fmt::format("{}: {}", where, e.what()));
    }
  }
  return base;
}

RunConfig parse_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path, std::move(base));
}

std::vector<std::pair<int, cd>> parse_modes(const std::string& text) {
  std::vector<std::pair<int, cd>> out;
  for (const auto& item : split_list(text)) {
    std::vector<std::string> f;
    boost::split(f, item, boost::is_any_of(":"));
    if (f.size() < 2 || f.size() > 3) {
      throw UsageError(fmt::format("y0: '{}' is not k:re or k:re:im", item));
    }
    const long long k = to_integer("y0 index", boost::trim_copy(f[0]));
    if (k == 0) throw UsageError("y0: mode index 0 does not exist");
    const double re = to_double("y0 real part", boost::trim_copy(f[1]));
    const double im = f.size() == 3 ? to_double("y0 imaginary part", boost::trim_copy(f[2])) : 0.0;
    for (const auto& [kk, c] : out) {
      if (kk == k) throw UsageError(fmt::format("y0: mode {} listed twice", k));
    }
    out.emplace_back(static_cast<int>(k), cd(re, im));
  }
  for (const auto& [k, c] : out) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == -k; });
    if (it == out.end()) throw UsageError(fmt::format("y0: mode {} has no partner {}", k, -k));
    if (std::abs(it->second - std::conj(c)) > 1e-12 * std::max(1.0, std::abs(c))) {
      throw UsageError(fmt::format("y0: modes {} and {} are not conjugate", k, -k));
    }
  }
  return out;
}

std::vector<std::pair<int, cd>> initial_modes(const RunConfig& cfg) {
  if (cfg.y0 != "random") return parse_modes(cfg.y0);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::vector<std::pair<int, cd>> out;
  for (int k = 1; k <= cfg.K; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    out.emplace_back(k, cd(re, im));
    out.emplace_back(-k, cd(re, -im));
  }
  return out;
}

}  // namespace kdvlab
