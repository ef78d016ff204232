#pragma once

#include <string>

#include "json.hpp"

#include "kdvlab/control.h"
#include "kdvlab/moment.h"
#include "kdvlab/nonlinear.h"
#include "kdvlab/pde.h"
#include "kdvlab/spectral.h"

namespace kdvlab {

using Json = nlohmann::json;

/// {"artifact", "version", "config"} block carried by every output.
Json metadata(const std::string& artifact, const Json& config);

/// One '#'-prefixed line holding the compact metadata, for CSV files.
std::string csv_preamble(const Json& meta);

Json to_json(cd z);
Json to_json(const Spectrum& spec);
Json to_json(const MomentProblem& p);
Json to_json(const SynthesisAudit& a);
Json to_json(const TimeSignal& s);
Json to_json(const CostCurve& c);
Json to_json(const ReachResult& r);
Json to_json(const NullResult& r);
Json to_json(const RemainderFit& f);
/// Grid, system, energy and H1 series and norms; states go to CSV.
Json to_json(const Trajectory& t);

/// Columns t, re, im.
std::string signal_csv(const TimeSignal& s);
/// Columns T, inv_sqrt_T, norm_u, norm_v, residual, cond_estimate, ok.
std::string cost_csv(const CostCurve& c);
/// Long format t, x, y over the stored snapshots, boundary zeros included.
std::string snapshots_csv(const Trajectory& t);
/// Columns t, y_x0, y_xL.
std::string traces_csv(const Trajectory& t);

/// Writes text to path, creating parent directories. Writes to the same
/// path are serialized. Throws Error on I/O failure.
void write_text(const std::string& path, const std::string& text);

}  // namespace kdvlab
