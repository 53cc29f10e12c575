#pragma once

#include <string>
#include <vector>

#include "diag.hpp"
#include "flowpipe.hpp"
#include "monitor.hpp"
#include "sim.hpp"
#include "trace.hpp"

namespace featkit {

/// dReach 3.x text for the product with goal `@accept (and (feat >= a)
/// (feat <= b))`. Variable range declarations come from `var_ranges`
/// (typically the flowpipe hull), inflated 10% and widened to cover the
/// initial set, the goal interval and the register sentinel. Urgent
/// locations are encoded with an auxiliary clock pinned to zero dwell.
std::string emit_drh(const ProductModel& pm, const CompiledModel& cm,
                     const std::vector<Interval>& var_ranges, double a, double b,
                     double horizon);

/// Convenience form: derives the ranges from a fresh flowpipe run.
std::string emit_drh(const ProductModel& pm, double a, double b, const SimSettings& sim);

/// Recognizer for the documented .drh dialect: variable range declarations,
/// numbered mode blocks with invt/flow/jump sections, init and goal clauses.
/// Returns one diagnostic per violation (empty = well formed).
std::vector<ParseDiagnostic> check_drh(const std::string& text);

/// Parses a solver JSON trace (see tests/fixtures/solver_trace_sample.json):
/// a `steps` array whose elements are either objects with mode, a
/// [t0, t1] domain and per-variable [enclosure@t0, enclosure@t1] pairs, or
/// literal `null` for an urgent-location visit. Valuations take enclosure
/// midpoints; widths are recorded per step. Unknown fields are ignored.
Trace parse_solver_trace(const std::string& text);

}  // namespace featkit
