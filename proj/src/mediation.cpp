#include "rckit/mediation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "rckit/errors.hpp"
#include "rckit/parallel.hpp"
#include "rckit/rc.hpp"
#include "rckit/rng.hpp"
#include "rckit/stats.hpp"

namespace rckit {

namespace {

struct StepEstimates {
    double gamma_x, beta_x, beta_m;
    double total() const { return beta_x + beta_m * gamma_x; }
};

// The five steps on given datasets. Fit objects are returned only for the
// primary (non-bootstrap) pass.
StepEstimates run_steps(const AnalysisDataset& cohort, const AnalysisDataset& validation,
                        const MediationSpec& spec,
                        const std::optional<KnownErrorVariance>& known_var,
                        MediationFit* out) {
    // Step 1: reference-replicate calibration rep2 ~ (rep1, Z).
    CalibrationSpec step1;
    step1.mode = CalibrationMode::Reference;
    step1.dependent = spec.replicate2;
    step1.exposure = spec.replicate1;
    step1.confounders = spec.confounders;

    // Step 2: mediator on the step-1 calibrated exposure, validation rows.
    double gamma_x;
    GlmFit step2_fit;
    CalibrationModel step1_model;
    if (known_var) {
        // Deattenuate the slope of M on the single replicate by the
        // reliability ratio. Experimental mode; confounders are ignored.
        std::vector<std::size_t> rows =
            validation.complete_rows({spec.mediator, spec.replicate1});
        if (rows.size() < 3)
            throw MissingReplicates("too few rows with mediator and replicate observed");
        DesignMatrix d = build_design(validation, {spec.replicate1}, {}, rows);
        Eigen::VectorXd m(static_cast<Eigen::Index>(rows.size()));
        const Column& mc = validation.col(spec.mediator);
        for (std::size_t i = 0; i < rows.size(); ++i)
            m(static_cast<Eigen::Index>(i)) = mc.values[rows[i]];
        step2_fit = glm::fit(ModelFamily::Linear, m, d);
        std::vector<double> rep(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            rep[i] = d.values(static_cast<Eigen::Index>(i), 1);
        const double v_rep = sd(rep) * sd(rep);
        const double lambda1 = (v_rep - known_var->var_replicate_error) / v_rep;
        if (!(lambda1 > 1e-8))
            throw InvalidInput("known error variance implies non-positive reliability");
        gamma_x = step2_fit.coefficients(1) / lambda1;
    } else {
        std::vector<std::string> needed = {spec.replicate1, spec.replicate2};
        needed.insert(needed.end(), spec.confounders.begin(), spec.confounders.end());
        const std::size_t n_pairs = validation.complete_rows(needed).size();
        if (n_pairs < needed.size() + 2)
            throw MissingReplicates(
                "five-step estimation needs both reference replicates on at least " +
                std::to_string(needed.size() + 2) + " validation rows, have " +
                std::to_string(n_pairs));
        step1_model = fit_calibration(validation, step1);

        std::vector<std::string> s2needed = {spec.mediator, spec.replicate1};
        s2needed.insert(s2needed.end(), spec.confounders.begin(), spec.confounders.end());
        std::vector<std::size_t> rows = validation.complete_rows(s2needed);
        auto hat1 = calibrate_values(step1_model, validation, rows)[0];

        DesignMatrix d;
        DesignMatrix zpart = build_design(validation, spec.confounders, {}, rows);
        d.values.resize(zpart.values.rows(), zpart.values.cols() + 1);
        d.values.col(0).setOnes();
        for (std::size_t i = 0; i < hat1.size(); ++i)
            d.values(static_cast<Eigen::Index>(i), 1) = hat1[i];
        for (Eigen::Index j = 1; j < zpart.values.cols(); ++j)
            d.values.col(1 + j) = zpart.values.col(j);
        d.column_labels = {"(Intercept)", "xhat1"};
        for (std::size_t j = 1; j < zpart.column_labels.size(); ++j)
            d.column_labels.push_back(zpart.column_labels[j]);

        Eigen::VectorXd m(static_cast<Eigen::Index>(rows.size()));
        const Column& mc = validation.col(spec.mediator);
        for (std::size_t i = 0; i < rows.size(); ++i)
            m(static_cast<Eigen::Index>(i)) = mc.values[rows[i]];
        step2_fit = glm::fit(ModelFamily::Linear, m, d);
        gamma_x = step2_fit.coefficients(1);
    }

    // Step 3: calibration rep1 ~ (X*, Z, M) on validation.
    CalibrationSpec step3;
    step3.mode = CalibrationMode::Reference;
    step3.dependent = spec.replicate1;
    step3.exposure = spec.exposure;
    step3.confounders = spec.confounders;
    step3.extras = {spec.mediator};
    CalibrationModel step3_model = fit_calibration(validation, step3);

    // Step 4: outcome on (Xhat2, Z, M) in the main cohort.
    OutcomeSpec outcome;
    outcome.outcome = spec.outcome;
    outcome.confounders = spec.confounders;
    outcome.confounders.push_back(spec.mediator);
    outcome.family = spec.family;
    RcResult step4 = rc_fit(cohort, step3_model, outcome);

    StepEstimates est;
    est.gamma_x = gamma_x;
    est.beta_x = step4.exposure_coefficient;
    est.beta_m = step4.fit.coefficient(spec.mediator);

    if (out) {
        out->gamma_x_hat = est.gamma_x;
        out->beta_x_hat = est.beta_x;
        out->beta_m_hat = est.beta_m;
        out->total_effect = est.total();
        out->approximate_decomposition = spec.family == ModelFamily::Logistic;
        out->step2_fit = std::move(step2_fit);
        out->step4_fit = std::move(step4.fit);
        if (!known_var) out->step1_model = std::move(step1_model);
        out->step3_model = std::move(step3_model);
    }
    return est;
}

// Resampled (cohort, validation) pair for one bootstrap replicate. With a
// ValidationFlag in the cohort the validation subset is re-derived from the
// resampled cohort; otherwise the two samples resample independently.
std::pair<AnalysisDataset, AnalysisDataset> resample_pair(const AnalysisDataset& cohort,
                                                          const AnalysisDataset& validation,
                                                          Rng& rng) {
    auto flag = cohort.column_with_role(ColumnRole::ValidationFlag);
    if (flag) {
        const Column& f = cohort.col(*flag);
        std::vector<std::vector<std::size_t>> strata(2);
        for (std::size_t i = 0; i < cohort.n_rows(); ++i)
            strata[f.values[i] == 1.0 ? 0 : 1].push_back(i);
        AnalysisDataset new_cohort = cohort.subset(stratified_resample(strata, rng));
        return {new_cohort, split_validation(new_cohort).validation};
    }
    std::vector<std::size_t> c_rows(cohort.n_rows()), v_rows(validation.n_rows());
    for (auto& r : c_rows) r = rng.uniform_int(cohort.n_rows());
    for (auto& r : v_rows) r = rng.uniform_int(validation.n_rows());
    return {cohort.subset(c_rows), validation.subset(v_rows)};
}

} // namespace

MediationFit midthune_total_effect(const AnalysisDataset& cohort,
                                   const AnalysisDataset& validation,
                                   const MediationSpec& spec,
                                   const std::optional<BootstrapSpec>& boot,
                                   const std::optional<KnownErrorVariance>& known_var) {
    MediationFit fit;
    run_steps(cohort, validation, spec, known_var, &fit);

    if (boot) {
        std::vector<double> estimates(boot->n_replicates,
                                      std::numeric_limits<double>::quiet_NaN());
        parallel_for(boot->n_replicates, [&](std::size_t r) {
            Rng rng(boot->seed, {stream::bootstrap, r});
            try {
                auto [c, v] = resample_pair(cohort, validation, rng);
                estimates[r] = run_steps(c, v, spec, known_var, nullptr).total();
            } catch (const Error&) {
            }
        });
        std::vector<double> ok;
        for (double e : estimates)
            if (!std::isnan(e)) ok.push_back(e);
        if (static_cast<double>(boot->n_replicates - ok.size()) >
            boot->max_failed_fraction * static_cast<double>(boot->n_replicates))
            throw TooManyFailedReplicates("too many failed mediation bootstrap replicates");
        fit.se_total = sd(ok);
        const double alpha = 1.0 - boot->ci_level;
        fit.ci_total = {percentile(ok, alpha / 2.0), percentile(ok, 1.0 - alpha / 2.0)};
    }
    return fit;
}

double bias_standard_rc(const BiasOracleInputs& in) {
    if (!(in.sigma_x2 > 0.0) || !(in.sigma_m2 > 0.0))
        throw InvalidInput("variances must be positive");
    if (in.sigma_xm * in.sigma_xm > in.sigma_x2 * in.sigma_m2)
        throw InvalidInput("|cov(X,M)| exceeds sd(X)*sd(M)");
    const double den = in.alpha_x * in.sigma_x2 + in.alpha_m * in.sigma_xm;
    if (std::abs(den) < 1e-12)
        throw ZeroDenominator("alpha_x*var(X) + alpha_m*cov(X,M) is zero");
    const double rho2 = in.sigma_xm * in.sigma_xm / (in.sigma_x2 * in.sigma_m2);
    return in.beta_m * in.alpha_m * in.sigma_m2 * (1.0 - rho2) / den;
}

double bias_expanded_rc(const BiasOracleInputs& in) {
    if (!(in.r2_expanded > 0.0 && in.r2_expanded <= 1.0))
        throw InvalidR2("R^2 of the expanded calibration must lie in (0,1]");
    return in.beta_m * in.gamma_x * (1.0 - in.r2_expanded) / in.r2_expanded;
}

ThreeMethodComparison compare_three_methods(const AnalysisDataset& cohort,
                                            const AnalysisDataset& validation,
                                            const MediationSpec& spec,
                                            const BootstrapSpec& boot) {
    // Shared calibration: reference replicate on (X*, Z, M).
    CalibrationSpec cal;
    cal.mode = CalibrationMode::Reference;
    cal.dependent = spec.replicate1;
    cal.exposure = spec.exposure;
    cal.confounders = spec.confounders;
    cal.extras = {spec.mediator};

    OutcomeSpec with_m;
    with_m.outcome = spec.outcome;
    with_m.confounders = spec.confounders;
    with_m.confounders.push_back(spec.mediator);
    with_m.family = spec.family;

    OutcomeSpec without_m = with_m;
    without_m.confounders = spec.confounders;

    auto point = [&](const AnalysisDataset& c, const AnalysisDataset& v,
                     int method) -> double {
        switch (method) {
            case 0: return rc_fit(c, fit_calibration(v, cal), with_m).exposure_coefficient;
            case 1: return rc_fit(c, fit_calibration(v, cal), without_m).exposure_coefficient;
            default: return run_steps(c, v, spec, std::nullopt, nullptr).total();
        }
    };

    ThreeMethodComparison out;
    out.include_mediator.method = "mediator in outcome model";
    out.omit_mediator.method = "mediator omitted from outcome model";
    out.total_effect.method = "five-step total effect";
    out.include_mediator.estimate = point(cohort, validation, 0);
    out.omit_mediator.estimate = point(cohort, validation, 1);
    out.total_effect.estimate = point(cohort, validation, 2);

    std::vector<std::array<double, 3>> reps(
        boot.n_replicates, {std::numeric_limits<double>::quiet_NaN(),
                            std::numeric_limits<double>::quiet_NaN(),
                            std::numeric_limits<double>::quiet_NaN()});
    parallel_for(boot.n_replicates, [&](std::size_t r) {
        Rng rng(boot.seed, {stream::bootstrap, r});
        try {
            auto [c, v] = resample_pair(cohort, validation, rng);
            for (int m = 0; m < 3; ++m) reps[r][static_cast<std::size_t>(m)] = point(c, v, m);
        } catch (const Error&) {
        }
    });

    MethodRow* rows[3] = {&out.include_mediator, &out.omit_mediator, &out.total_effect};
    const double alpha = 1.0 - boot.ci_level;
    for (int m = 0; m < 3; ++m) {
        std::vector<double> ok;
        for (const auto& rep : reps) {
            const double e = rep[static_cast<std::size_t>(m)];
            if (!std::isnan(e)) ok.push_back(e);
        }
        if (static_cast<double>(boot.n_replicates - ok.size()) >
            boot.max_failed_fraction * static_cast<double>(boot.n_replicates))
            throw TooManyFailedReplicates("too many failed comparison bootstrap replicates");
        rows[m]->se = sd(ok);
        rows[m]->ci_low = percentile(ok, alpha / 2.0);
        rows[m]->ci_high = percentile(ok, 1.0 - alpha / 2.0);
    }
    return out;
}

} // namespace rckit
