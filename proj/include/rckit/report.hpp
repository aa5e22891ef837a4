#pragma once

#include <nlohmann/json.hpp>

#include "rckit/calibration.hpp"
#include "rckit/mediation.hpp"
#include "rckit/rc.hpp"
#include "rckit/samplesize.hpp"
#include "rckit/simulate.hpp"
#include "rckit/survey.hpp"
#include "rckit/variance.hpp"

namespace rckit {

using ordered_json = nlohmann::ordered_json;

// JSON views of result types for the analysis report. Key order is fixed so
// a (config, data, seed) triple always produces the same bytes.
ordered_json json_of(const GlmFit& fit);
ordered_json json_of(const CalibrationModel& model);
ordered_json json_of(const BerksonDiagnostics& diag);
ordered_json json_of(const AlignmentReport& report);
ordered_json json_of(const RcResult& result, bool include_fit = true);
ordered_json json_of(const OrPerIncrease& orr);
ordered_json json_of(const AttenuationResult& att);
ordered_json json_of(const VarianceReport& report);
ordered_json json_of(const SandwichResult& sandwich);
ordered_json json_of(const MediationFit& fit);
ordered_json json_of(const ThreeMethodComparison& cmp);
ordered_json json_of(const MethodSummary& summary);
ordered_json json_of(const ExperimentSummary& summary);
ordered_json json_of(const MediationStudyResult& result);
ordered_json json_of(const PowerTable& table);
ordered_json json_of(const SurveyRcFit& fit);
ordered_json json_of(const MiPooledEstimate& pooled);

} // namespace rckit
