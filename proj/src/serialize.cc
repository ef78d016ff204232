#include "kdvlab/serialize.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>

#include <fmt/format.h>

#include "kdvlab/config.h"

namespace kdvlab {

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

Json complex_list(const std::vector<cd>& v) {
  Json a = Json::array();
  for (const cd& z : v) a.push_back(to_json(z));
  return a;
}

}  // namespace

Json metadata(const std::string& artifact, const Json& config) {
  Json m;
  m["artifact"] = artifact;
  m["version"] = kVersion;
  m["config"] = config;
  return m;
}

std::string csv_preamble(const Json& meta) { return "# " + meta.dump() + "\n"; }

Json to_json(cd z) { return Json::array({z.real(), z.imag()}); }

Json to_json(const Spectrum& spec) {
  Json j;
  j["L"] = spec.length;
  j["K"] = spec.count;
  Json modes = Json::array();
  for (const EigenMode& m : spec.modes) {
    Json e;
    e["k"] = m.k;
    e["lambda"] = m.lambda;
    Json roots = Json::array(), coeffs = Json::array(), scaled = Json::array();
    const auto c = m.coeffs();
    for (int i = 0; i < 3; ++i) {
      roots.push_back(to_json(m.roots[i]));
      coeffs.push_back(to_json(c[i]));
      scaled.push_back(to_json(m.scaled_coeffs[i]));
    }
    e["roots"] = roots;
    e["coeffs"] = coeffs;
    e["scaled_coeffs"] = scaled;
    e["shifts"] = m.shifts;
    e["slope0"] = to_json(m.slope0);
    e["slopeL"] = to_json(m.slopeL);
    modes.push_back(e);
  }
  j["modes"] = modes;
  return j;
}

Json to_json(const MomentProblem& p) {
  Json j;
  j["T"] = p.horizon;
  j["K"] = p.count;
  j["indices"] = p.indices;
  j["frequencies"] = p.frequencies;
  j["targets"] = complex_list(p.targets);
  j["check_indices"] = p.check_indices;
  j["check_frequencies"] = p.check_frequencies;
  j["check_targets"] = complex_list(p.check_targets);
  j["asymptotic_a"] = p.asymptotic_a;
  j["pairings"] = complex_list(p.pairings);
  j["slopes"] = complex_list(p.slopes);
  j["state_norm"] = p.state_norm;
  j["projection_tail"] = p.projection_tail;
  j["source"] = p.source;
  return j;
}

Json to_json(const SynthesisAudit& a) {
  return Json{{"tail_mass", a.tail_mass},   {"max_imag", a.max_imag},
              {"xi_max", a.xi_max},         {"dxi", a.dxi},
              {"band_half_width", a.band_half_width}, {"edge_ratio", a.edge_ratio},
              {"fft_size", a.fft_size},     {"samples", a.samples}};
}

Json to_json(const TimeSignal& s) {
  Json j;
  j["label"] = s.label;
  j["T"] = s.horizon;
  j["steps"] = s.steps();
  j["l2_norm"] = s.values.empty() ? 0.0 : s.l2_norm();
  j["max_imag"] = s.max_imag;
  return j;
}

Json to_json(const CostCurve& c) {
  Json j;
  j["method"] = method_name(c.method);
  j["K"] = c.K;
  Json entries = Json::array();
  for (const CostEntry& e : c.entries) {
    entries.push_back(Json{{"T", e.T},
                           {"norm_u", e.norm_u},
                           {"norm_v", e.norm_v},
                           {"residual", e.residual},
                           {"cond_estimate", e.condition},
                           {"gamma", e.gamma_param},
                           {"ok", e.ok},
                           {"error", e.error}});
  }
  j["entries"] = entries;
  auto fit = [](const CostFit& f) {
    return Json{{"exponent", f.exponent}, {"slope", f.slope},         {"intercept", f.intercept},
                {"r2", f.r2},             {"residuals", f.residuals}};
  };
  j["fit"] = fit(c.fit);
  j["free_fit"] = fit(c.free_fit);
  return j;
}

Json to_json(const ReachResult& r) {
  return Json{{"target_norm", r.target_norm},
              {"iterate_norms", r.iterate_norms},
              {"residuals", r.residuals},
              {"span_residuals", r.span_residuals},
              {"ratios", r.ratios},
              {"mean_ratio", r.mean_ratio()},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"control_norm", r.control.values.empty() ? 0.0 : r.control.l2_norm()}};
}

Json to_json(const NullResult& r) {
  return Json{{"initial_norm", r.initial_norm},
              {"residuals", r.residuals},
              {"control_norms", r.control_norms},
              {"converged", r.converged},
              {"iterations", r.iterations}};
}

Json to_json(const RemainderFit& f) {
  return Json{{"scales", f.scales}, {"gaps", f.gaps}, {"exponent", f.exponent}};
}

Json to_json(const Trajectory& t) {
  Json j;
  j["system"] = t.system;
  j["grid"] = Json{{"L", t.grid.length}, {"T", t.grid.horizon}, {"n_x", t.grid.n_x}, {"n_t", t.grid.n_t}};
  j["stride"] = t.stride;
  j["snapshot_steps"] = t.snapshot_steps;
  j["energy"] = t.energy;
  j["h1"] = t.h1;
  const TrajectoryNorms n = norms(t);
  j["norms"] = Json{{"sup_l2", n.sup_l2},
                    {"h1_l2t", n.h1_l2t},
                    {"trace0_l2", n.trace0_l2},
                    {"traceL_l2", n.traceL_l2}};
  j["projection_tail"] = t.projection_tail;
  return j;
}

std::string signal_csv(const TimeSignal& s) {
  std::string out = "t,re,im\n";
  for (int i = 0; i <= s.steps(); ++i) {
    out += fmt::format("{},{},{}\n", num(s.time(i)), num(s.values[i].real()), num(s.values[i].imag()));
  }
  return out;
}

std::string cost_csv(const CostCurve& c) {
  std::string out = "T,inv_sqrt_T,norm_u,norm_v,residual,cond_estimate,ok\n";
  for (const CostEntry& e : c.entries) {
    out += fmt::format("{},{},{},{},{},{},{}\n", num(e.T), num(1.0 / std::sqrt(e.T)), num(e.norm_u),
                       num(e.norm_v), num(e.residual), num(e.condition), e.ok ? 1 : 0);
  }
  return out;
}

std::string snapshots_csv(const Trajectory& t) {
  std::string out = "t,x,y\n";
  const double h = t.grid.h();
  for (size_t s = 0; s < t.snapshots.size(); ++s) {
    const std::string ts = num(t.grid.time(t.snapshot_steps[s]));
    const Vec& y = t.snapshots[s];
    out += fmt::format("{},0,0\n", ts);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      out += fmt::format("{},{},{}\n", ts, num((i + 1) * h), num(y(i)));
    }
    out += fmt::format("{},{},0\n", ts, num(t.grid.length));
  }
  return out;
}

std::string traces_csv(const Trajectory& t) {
  std::string out = "t,y_x0,y_xL\n";
  for (size_t n = 0; n < t.trace0.size(); ++n) {
    out += fmt::format("{},{},{}\n", num(t.grid.time(static_cast<int>(n))), num(t.trace0[n]),
                       num(t.traceL[n]));
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  static std::mutex registry_lock;
  static std::map<std::string, std::mutex> locks;
  std::mutex* m = nullptr;
  {
    std::lock_guard<std::mutex> g(registry_lock);
    m = &locks[path];
  }
  std::lock_guard<std::mutex> g(*m);
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  if (ec) throw Error(fmt::format("cannot create directory for '{}': {}", path, ec.message()));
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot open '{}' for writing", path));
  out << text;
  if (!out) throw Error(fmt::format("write to '{}' failed", path));
}

}  // namespace kdvlab
