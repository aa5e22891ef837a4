#include "rckit/rc.hpp"

#include <algorithm>
#include <cmath>

#include "rckit/errors.hpp"

namespace rckit {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

// apply_exposure_transform: raw exposures (naive fit) enter on the outcome
// model's scale; calibrated columns are already on that scale.
RcResult fit_outcome(const AnalysisDataset& cohort, const OutcomeSpec& outcome,
                     const std::vector<std::string>& exposure_columns,
                     bool apply_exposure_transform = false) {
    std::vector<std::string> covariates = exposure_columns;
    covariates.insert(covariates.end(), outcome.confounders.begin(),
                      outcome.confounders.end());
    std::vector<std::string> needed = covariates;
    needed.push_back(outcome.outcome);
    std::vector<std::size_t> rows = cohort.complete_rows(needed);

    std::vector<Transform> transforms;
    if (apply_exposure_transform && outcome.exposure_transform != Transform::None) {
        transforms.assign(covariates.size(), Transform::None);
        for (std::size_t k = 0; k < exposure_columns.size(); ++k)
            transforms[k] = outcome.exposure_transform;
    }
    DesignMatrix design = build_design(cohort, covariates, transforms, rows);
    const Column& yc = cohort.col(outcome.outcome);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        y(static_cast<Eigen::Index>(i)) = yc.values[rows[i]];

    RcResult res;
    res.fit = glm::fit(outcome.family, y, design);
    res.exposure_label = design.column_labels[1]; // first column after intercept
    res.exposure_coefficient = res.fit.coefficient(res.exposure_label);
    res.unadjusted_se = res.fit.se(res.exposure_label);
    res.n_excluded_missing = cohort.n_rows() - rows.size();
    return res;
}

} // namespace

std::string AlignmentReport::summary() const {
    std::string s;
    for (const auto& e : entries) {
        if (!s.empty()) s += "; ";
        s += (e.severity == AlignmentSeverity::Error ? "ERROR: " : "WARN: ") + e.message;
    }
    return s;
}

AlignmentReport check_alignment(const CalibrationSpec& cal, const OutcomeSpec& outcome,
                                bool strict) {
    AlignmentReport report;
    const AlignmentSeverity sev =
        strict ? AlignmentSeverity::Error : AlignmentSeverity::Warning;

    std::vector<std::string> cal_covariates = cal.confounders;
    cal_covariates.insert(cal_covariates.end(), cal.extras.begin(), cal.extras.end());

    for (const auto& z : outcome.confounders) {
        if (!contains(cal_covariates, z)) {
            report.entries.push_back(
                {sev, 'a', z,
                 "outcome-model confounder '" + z +
                     "' is not in the calibration equation; the calibration residual "
                     "can correlate with it and bias the exposure coefficient"});
        }
    }
    for (const auto& z : cal_covariates) {
        if (!contains(outcome.confounders, z)) {
            report.entries.push_back(
                {sev, 'b', z,
                 "calibration covariate '" + z +
                     "' is not in the outcome model; omit it only if it carries no "
                     "outcome information beyond the exposure and confounders"});
        }
    }
    return report;
}

RcResult rc_fit(const AnalysisDataset& cohort, const CalibrationModel& model,
                const OutcomeSpec& outcome, bool strict) {
    AlignmentReport report = check_alignment(model.spec, outcome, strict);
    if (strict && !report.empty())
        throw AlignmentError("covariate alignment violated: " + report.summary());

    AnalysisDataset with_hat = calibrate(model, cohort);
    RcResult res = fit_outcome(with_hat, outcome, model.output_names);
    res.alignment_report = std::move(report);
    return res;
}

RcResult naive_fit(const AnalysisDataset& cohort, const OutcomeSpec& outcome) {
    if (outcome.exposure_columns.empty())
        throw ConfigError("naive fit needs the raw exposure column in the outcome spec");
    return fit_outcome(cohort, outcome, outcome.exposure_columns,
                       /*apply_exposure_transform=*/true);
}

AttenuationResult attenuation_correct(double beta_star, double var_beta_star,
                                      const AnalysisDataset& validation,
                                      const std::string& exposure,
                                      const std::string& reference) {
    std::vector<std::size_t> rows = validation.complete_rows({exposure, reference});
    DesignMatrix design = build_design(validation, {exposure}, {}, rows);
    const Column& ref = validation.col(reference);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        y(static_cast<Eigen::Index>(i)) = ref.values[rows[i]];

    GlmFit fit = glm::fit(ModelFamily::Linear, y, design);
    AttenuationResult res;
    res.lambda_hat = fit.coefficients(1);
    res.var_lambda = fit.vcov_model(1, 1);
    res.beta_star_hat = beta_star;
    if (std::abs(res.lambda_hat) < 1e-6)
        throw LambdaNearZero("attenuation slope " + std::to_string(res.lambda_hat) +
                             " too close to zero; division correction is unstable");
    const double l2 = res.lambda_hat * res.lambda_hat;
    res.beta_corrected = beta_star / res.lambda_hat;
    res.var_corrected =
        var_beta_star / l2 + beta_star * beta_star * res.var_lambda / (l2 * l2);
    return res;
}

OrPerIncrease or_per_increase(double beta, double ci_low, double ci_high, double factor,
                              Transform exposure_transform) {
    if (!(factor > 0.0)) throw InvalidInput("factor must be positive");
    OrPerIncrease out;
    out.factor = factor;
    const double lf = std::log(factor);
    out.odds_ratio = std::exp(beta * lf);
    // exp(b*lf) is monotone in b for factor > 1 and antitone for factor < 1;
    // order the endpoints accordingly.
    const double a = std::exp(ci_low * lf);
    const double b = std::exp(ci_high * lf);
    out.ci_low = std::min(a, b);
    out.ci_high = std::max(a, b);
    out.not_log_scale = exposure_transform != Transform::Log;
    return out;
}

} // namespace rckit
