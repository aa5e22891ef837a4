#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rckit/calibration.hpp"
#include "rckit/dataset.hpp"
#include "rckit/glm.hpp"

namespace rckit {

struct OutcomeSpec {
    std::string outcome;                  // Y
    std::vector<std::string> exposure_columns; // calibrated column(s) or raw X*
    std::vector<std::string> confounders; // Z
    ModelFamily family = ModelFamily::Logistic;
    // Scale the exposure entered the model on; odds-ratio-per-increase
    // conversion is only meaningful for Log.
    Transform exposure_transform = Transform::None;
};

enum class AlignmentSeverity { Warning, Error };

struct AlignmentEntry {
    AlignmentSeverity severity = AlignmentSeverity::Warning;
    // 'a': outcome confounder missing from the calibration equation.
    // 'b': calibration covariate (other than the exposure) missing from the
    //      outcome model.
    char kind = 'a';
    std::string column;
    std::string message;
};

struct AlignmentReport {
    std::vector<AlignmentEntry> entries;
    bool empty() const { return entries.empty(); }
    std::string summary() const;
};

struct OrPerIncrease {
    double factor = 1.0;
    double odds_ratio = 1.0;
    double ci_low = 1.0;
    double ci_high = 1.0;
    bool not_log_scale = false; // set when the exposure was not log-scale
};

struct RcResult {
    GlmFit fit;
    std::string exposure_label;  // design label the coefficient refers to
    double exposure_coefficient = 0.0;
    // Model-based SE of the exposure coefficient; ignores the uncertainty of
    // the calibration equation coefficients.
    double unadjusted_se = 0.0;
    AlignmentReport alignment_report;
    std::optional<OrPerIncrease> or_per_increase;
    std::size_t n_excluded_missing = 0;
};

struct AttenuationResult {
    double lambda_hat = 0.0;
    double var_lambda = 0.0;
    double beta_star_hat = 0.0;
    double beta_corrected = 0.0;
    double var_corrected = 0.0;
};

// Compares the covariate sets of the calibration equation and the outcome
// model. Both directions matter: missing confounders in the calibration
// equation and calibration-only covariates absent from the outcome model
// each bias the exposure coefficient.
AlignmentReport check_alignment(const CalibrationSpec& cal,
                                const OutcomeSpec& outcome,
                                bool strict = false);

// Outcome model on the calibrated exposure. Runs the alignment check first;
// in strict mode a violation throws AlignmentError. outcome.exposure_columns
// is ignored: the model's calibrated columns are used.
RcResult rc_fit(const AnalysisDataset& cohort, const CalibrationModel& model,
                const OutcomeSpec& outcome, bool strict = false);

// Outcome model on the raw error-prone exposure (no correction).
RcResult naive_fit(const AnalysisDataset& cohort, const OutcomeSpec& outcome);

// Simple attenuation-division corrector for the single-exposure linear
// model: lambda is the slope of the reference on the exposure in the
// validation data, the corrected estimate is beta_star / lambda with a
// delta-method variance.
AttenuationResult attenuation_correct(double beta_star, double var_beta_star,
                                      const AnalysisDataset& validation,
                                      const std::string& exposure,
                                      const std::string& reference);

// OR for a multiplicative `factor` increase in the exposure; requires the
// exposure on the log scale in the outcome model.
OrPerIncrease or_per_increase(double beta, double ci_low, double ci_high, double factor,
                              Transform exposure_transform = Transform::Log);

} // namespace rckit
