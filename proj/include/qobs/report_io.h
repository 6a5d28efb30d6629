#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qobs/estimator_pr.h"
#include "qobs/filter.h"
#include "qobs/moments.h"
#include "qobs/realizability.h"

namespace qobs {

using Json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the same double.
std::string FormatNumber(double x);

/// Row-major nested arrays.
Json MatrixToJson(const Matrix& m);

Json PlantReportToJson(const RealizabilityReport& report);

/// {status, P, K, J, hurwitz, ...}; the estimator realizability verdict is
/// included when given.
Json SteadyReportToJson(const EstimatorSynthesis& synthesis,
                        const std::optional<EstimatorPRReport>& pr);

Json EstimatorPRToJson(const EstimatorPRReport& report);

Json CoherentReportToJson(const CoherentObserver& observer);

/// Columns: t, P_i_j (upper triangle, 1-based), K_i_j, trace_P.
void WriteRiccatiCsv(std::ostream& out,
                     const std::vector<TrajectorySample>& trajectory);

/// Columns: t, mean_i, Sigma_i_j (upper triangle), err_trace, riccati_trace,
/// max_dev (running maximum of the oracle deviation).
void WriteMomentCsv(std::ostream& out, const OracleReport& report);

/// Two-space indented JSON with a trailing newline.
std::string DumpJson(const Json& doc);

}  // namespace qobs
