#include "rckit/report.hpp"

namespace rckit {

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

} // namespace

ordered_json json_of(const GlmFit& fit) {
    ordered_json j;
    j["family"] = family_name(fit.family);
    j["labels"] = fit.column_labels;
    j["coefficients"] = to_vec(fit.coefficients);
    std::vector<double> se;
    for (Eigen::Index k = 0; k < fit.coefficients.size(); ++k)
        se.push_back(std::sqrt(fit.vcov_model(k, k)));
    j["model_se"] = se;
    j["n_used"] = fit.n_used;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["weights_used"] = fit.weights_used;
    return j;
}

ordered_json json_of(const CalibrationModel& model) {
    ordered_json j;
    j["mode"] = model.spec.mode == CalibrationMode::Replicate ? "replicate" : "reference";
    j["dependent"] = model.spec.mode == CalibrationMode::Replicate
                         ? model.spec.replicates[0]
                         : model.spec.dependent;
    j["transform"] = model.spec.transform.label();
    j["predictors"] = model.predictor_labels;
    j["output_columns"] = model.output_names;
    j["n_fit"] = model.n_fit;
    j["r_squared"] = model.r_squared;
    j["basis_coefficients"] = ordered_json::array();
    for (const auto& fit : model.basis_fits)
        j["basis_coefficients"].push_back(to_vec(fit.coefficients));
    if (!model.spline_knots.empty()) j["spline_knots"] = model.spline_knots;
    return j;
}

ordered_json json_of(const BerksonDiagnostics& diag) {
    ordered_json j;
    j["residual_mean"] = diag.residual_mean;
    ordered_json corr = ordered_json::object();
    for (const auto& [label, c] : diag.residual_covariate_correlations) corr[label] = c;
    j["residual_covariate_correlations"] = corr;
    j["r_squared"] = diag.r_squared;
    j["n"] = diag.n;
    j["out_of_sample"] = diag.out_of_sample;
    return j;
}

ordered_json json_of(const AlignmentReport& report) {
    ordered_json j = ordered_json::array();
    for (const auto& e : report.entries) {
        ordered_json entry;
        entry["severity"] = e.severity == AlignmentSeverity::Error ? "error" : "warning";
        entry["kind"] = e.kind == 'a' ? "confounder missing from calibration"
                                      : "calibration covariate missing from outcome model";
        entry["column"] = e.column;
        entry["message"] = e.message;
        j.push_back(entry);
    }
    return j;
}

ordered_json json_of(const RcResult& result, bool include_fit) {
    ordered_json j;
    j["exposure"] = result.exposure_label;
    j["estimate"] = result.exposure_coefficient;
    j["unadjusted_se"] = result.unadjusted_se;
    j["unadjusted_se_note"] = "ignores calibration-equation uncertainty";
    j["n_excluded_missing"] = result.n_excluded_missing;
    if (include_fit) j["fit"] = json_of(result.fit);
    if (!result.alignment_report.empty())
        j["alignment"] = json_of(result.alignment_report);
    if (result.or_per_increase) j["or_per_increase"] = json_of(*result.or_per_increase);
    return j;
}

ordered_json json_of(const OrPerIncrease& orr) {
    ordered_json j;
    j["factor"] = orr.factor;
    j["odds_ratio"] = orr.odds_ratio;
    j["ci_low"] = orr.ci_low;
    j["ci_high"] = orr.ci_high;
    if (orr.not_log_scale)
        j["not_log_scale"] = "exposure did not enter the model on the log scale; "
                             "per-factor odds ratios are not interpretable";
    return j;
}

ordered_json json_of(const AttenuationResult& att) {
    ordered_json j;
    j["lambda_hat"] = att.lambda_hat;
    j["var_lambda"] = att.var_lambda;
    j["beta_star_hat"] = att.beta_star_hat;
    j["beta_corrected"] = att.beta_corrected;
    j["var_corrected"] = att.var_corrected;
    return j;
}

ordered_json json_of(const VarianceReport& report) {
    ordered_json j;
    j["point_estimate"] = report.point_estimate;
    j["se_unadjusted"] = report.se_unadjusted;
    j["se_bootstrap"] = report.se_bootstrap;
    j["ci_bootstrap"] = {report.ci_bootstrap.first, report.ci_bootstrap.second};
    j["ci_method"] = "percentile";
    j["ci_level"] = report.ci_level;
    if (report.se_sandwich) j["se_sandwich"] = *report.se_sandwich;
    j["n_replicates"] = report.n_replicates;
    j["n_failed_replicates"] = report.n_failed_replicates;
    j["seed"] = report.seed;
    return j;
}

ordered_json json_of(const SandwichResult& sandwich) {
    ordered_json j;
    j["se_exposure"] = sandwich.se_exposure;
    j["labels"] = sandwich.labels;
    return j;
}

ordered_json json_of(const MediationFit& fit) {
    ordered_json j;
    j["gamma_x_hat"] = fit.gamma_x_hat;
    j["beta_x_hat"] = fit.beta_x_hat;
    j["beta_m_hat"] = fit.beta_m_hat;
    j["total_effect"] = fit.total_effect;
    if (fit.se_total) j["se_total"] = *fit.se_total;
    if (fit.ci_total) j["ci_total"] = {fit.ci_total->first, fit.ci_total->second};
    if (fit.approximate_decomposition)
        j["note"] = "logistic outcome: the direct+indirect decomposition is approximate";
    return j;
}

ordered_json json_of(const ThreeMethodComparison& cmp) {
    auto row = [](const MethodRow& r) {
        ordered_json j;
        j["method"] = r.method;
        j["estimate"] = r.estimate;
        j["se"] = r.se;
        j["ci"] = {r.ci_low, r.ci_high};
        return j;
    };
    return ordered_json::array(
        {row(cmp.include_mediator), row(cmp.omit_mediator), row(cmp.total_effect)});
}

ordered_json json_of(const MethodSummary& summary) {
    ordered_json j;
    j["method"] = summary.method;
    j["mean_estimate"] = summary.mean_estimate;
    j["empirical_se"] = summary.empirical_se;
    j["se_of_mean"] = summary.se_of_mean;
    j["percent_bias"] = summary.percent_bias;
    j["avg_estimated_se"] = summary.avg_estimated_se;
    j["coverage"] = summary.coverage;
    return j;
}

ordered_json json_of(const ExperimentSummary& summary) {
    ordered_json j;
    j["truth"] = summary.truth;
    j["n_sims"] = summary.n_sims;
    j["methods"] = ordered_json::array();
    for (const auto& m : summary.methods) j["methods"].push_back(json_of(m));
    return j;
}

ordered_json json_of(const MediationStudyResult& result) {
    ordered_json j;
    j["truth_total_effect"] = result.truth;
    j["oracle_standard_rc_mean"] = result.oracle_standard;
    j["oracle_expanded_rc_mean"] = result.oracle_expanded;
    j["methods"] = ordered_json::array(
        {json_of(result.standard_rc), json_of(result.expanded_rc), json_of(result.five_step)});
    return j;
}

ordered_json json_of(const PowerTable& table) {
    ordered_json j;
    j["alpha"] = table.alpha;
    j["points"] = ordered_json::array();
    for (const auto& p : table.points) {
        ordered_json pt;
        pt["n_validation"] = p.n_validation;
        pt["power"] = p.power;
        pt["n_sims"] = p.n_sims;
        pt["n_failed"] = p.n_failed;
        j["points"].push_back(pt);
    }
    return j;
}

ordered_json json_of(const SurveyRcFit& fit) {
    ordered_json j;
    j["estimate"] = fit.estimate;
    j["se_replicate"] = fit.se_replicate;
    j["n_replicates"] = fit.replicate_estimates.size() + fit.n_failed_replicates;
    j["n_failed_replicates"] = fit.n_failed_replicates;
    j["base_fit"] = json_of(fit.base_fit);
    return j;
}

ordered_json json_of(const MiPooledEstimate& pooled) {
    ordered_json j;
    j["beta_pooled"] = pooled.beta_pooled;
    j["v_pooled"] = pooled.v_pooled;
    j["se_pooled"] = std::sqrt(pooled.v_pooled);
    j["n_imputations"] = pooled.n_imputations;
    j["n_replicates"] = pooled.n_replicates;
    j["robust"] = pooled.robust;
    j["rubin_factor"] = pooled.rubin_factor;
    j["mean_normalizer"] = pooled.mean_normalizer;
    j["variance_normalizer"] = pooled.variance_normalizer;
    j["beta_m"] = pooled.beta_m;
    j["v_m"] = pooled.v_m;
    j["seed"] = pooled.seed;
    return j;
}

} // namespace rckit
