#include "rckit/simulate.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "rckit/calibration.hpp"
#include "rckit/errors.hpp"
#include "rckit/parallel.hpp"
#include "rckit/rc.hpp"
#include "rckit/rng.hpp"
#include "rckit/stats.hpp"

namespace rckit {

void ScenarioSpec::validate() const {
    if (n_cohort < 10 || n_validation < 2 || n_validation > n_cohort)
        throw InvalidInput("scenario sizes invalid");
    if (!(sigma_eps2 >= 0.0) || !(sigma_delta2 >= 0.0) || !(sigma_y2 > 0.0))
        throw InvalidInput("scenario variances invalid");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(covariance);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw InvalidInput("covariate covariance matrix is not positive definite");
}

ScenarioSpec default_scenario() {
    ScenarioSpec s;
    s.n_cohort = 2500;
    s.n_validation = 250;
    s.mu.setZero();
    s.covariance << 1.0, 0.5, 0.5,
                    0.5, 1.0, 0.5,
                    0.5, 0.5, 1.0;
    s.a0 = 0.4; s.a1 = 0.5; s.a2 = 0.5; s.a3 = 0.2;
    s.sigma_eps2 = 0.49;
    s.sigma_delta2 = 0.7;
    s.b0 = -1.0;
    s.b1 = std::log(1.5);
    s.b2 = -std::log(1.3);
    s.b3 = std::log(1.75);
    s.family = ModelFamily::Logistic;
    s.seed = 20240901;
    s.n_sims = 1000;
    return s;
}

AnalysisDataset gen_cohort(const ScenarioSpec& spec, std::size_t sim_index) {
    spec.validate();
    const std::size_t n = spec.n_cohort;
    Eigen::Matrix3d chol = spec.covariance.llt().matrixL();
    const double sd_eps = std::sqrt(spec.sigma_eps2);
    const double sd_delta = std::sqrt(spec.sigma_delta2);
    const double sd_y = std::sqrt(spec.sigma_y2);

    std::vector<double> x(n), z(n), v(n), xstar(n), xref(n), y(n), flag(n);
    Rng rng(spec.seed, {stream::simulation, sim_index});

    // Fixed draw order per row: 3 covariate normals, measurement noise,
    // biomarker noise, outcome draw.
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Vector3d u(rng.normal(), rng.normal(), rng.normal());
        Eigen::Vector3d w = spec.mu + chol * u;
        x[i] = w(0);
        z[i] = w(1);
        v[i] = w(2);
        xstar[i] = spec.a0 + spec.a1 * x[i] + spec.a2 * z[i] + spec.a3 * v[i] +
                   sd_eps * rng.normal();
        xref[i] = x[i] + sd_delta * rng.normal();
        const double eta = spec.b0 + spec.b1 * x[i] + spec.b2 * z[i] + spec.b3 * v[i];
        if (spec.family == ModelFamily::Logistic)
            y[i] = rng.bernoulli(glm::expit(eta)) ? 1.0 : 0.0;
        else
            y[i] = eta + sd_y * rng.normal();
        flag[i] = i < spec.n_validation ? 1.0 : 0.0;
        if (i >= spec.n_validation) xref[i] = std::nan("");
    }

    AnalysisDataset ds;
    auto add = [&](const char* name, ColumnRole role, std::vector<double>&& vals) {
        Column c;
        c.name = name;
        c.role = role;
        c.values = std::move(vals);
        ds.add_column(std::move(c));
    };
    add("y", ColumnRole::Outcome, std::move(y));
    add("x_true", ColumnRole::Plain, std::move(x));
    add("z", ColumnRole::Confounder, std::move(z));
    add("v", ColumnRole::Confounder, std::move(v));
    add("xstar", ColumnRole::ErrorProneExposure, std::move(xstar));
    add("xref", ColumnRole::ReferenceMeasure, std::move(xref));
    add("validation", ColumnRole::ValidationFlag, std::move(flag));
    return ds;
}

namespace {

MethodSummary summarize(std::string method, std::vector<double> estimates, double truth,
                        const std::vector<double>& ses,
                        const std::vector<char>& covered) {
    MethodSummary s;
    s.method = std::move(method);
    s.mean_estimate = mean(estimates);
    s.empirical_se = sd(estimates);
    s.se_of_mean = s.empirical_se / std::sqrt(static_cast<double>(estimates.size()));
    s.percent_bias = truth != 0.0
                         ? 100.0 * (s.mean_estimate - truth) / truth
                         : std::numeric_limits<double>::quiet_NaN();
    if (!ses.empty()) s.avg_estimated_se = mean(ses);
    if (!covered.empty()) {
        double c = 0.0;
        for (char k : covered) c += k;
        s.coverage = c / static_cast<double>(covered.size());
    }
    s.estimates = std::move(estimates);
    return s;
}

} // namespace

ExperimentSummary run_alignment_study(const ScenarioSpec& spec, std::size_t n_sims) {
    spec.validate();
    constexpr int n_methods = 4;
    std::vector<std::vector<double>> est(n_methods, std::vector<double>(n_sims));
    std::vector<std::vector<double>> ses(n_methods, std::vector<double>(n_sims));
    std::vector<std::vector<char>> cover(n_methods, std::vector<char>(n_sims));
    const double truth = spec.b1;
    const double zcrit = norm_quantile(0.975);

    parallel_for(n_sims, [&](std::size_t sim) {
        AnalysisDataset cohort = gen_cohort(spec, sim);
        AnalysisDataset val = split_validation(cohort).validation;

        CalibrationSpec correct;
        correct.dependent = "xref";
        correct.exposure = "xstar";
        correct.confounders = {"z", "v"};
        CalibrationSpec omits_v = correct;
        omits_v.confounders = {"z"};

        OutcomeSpec aligned;
        aligned.outcome = "y";
        aligned.exposure_columns = {"xstar"};
        aligned.confounders = {"z", "v"};
        aligned.family = spec.family;
        OutcomeSpec outcome_omits_v = aligned;
        outcome_omits_v.confounders = {"z"};

        CalibrationModel cal_correct = fit_calibration(val, correct);
        CalibrationModel cal_omits_v = fit_calibration(val, omits_v);

        const RcResult fits[n_methods] = {
            naive_fit(cohort, aligned),
            rc_fit(cohort, cal_correct, aligned),
            rc_fit(cohort, cal_omits_v, aligned),
            rc_fit(cohort, cal_correct, outcome_omits_v),
        };
        for (int m = 0; m < n_methods; ++m) {
            est[m][sim] = fits[m].exposure_coefficient;
            ses[m][sim] = fits[m].unadjusted_se;
            cover[m][sim] = std::abs(fits[m].exposure_coefficient - truth) <=
                            zcrit * fits[m].unadjusted_se;
        }
    });

    ExperimentSummary out;
    out.truth = truth;
    out.n_sims = n_sims;
    const char* names[n_methods] = {"uncorrected", "correct calibration",
                                    "calibration omits confounder",
                                    "outcome model omits confounder"};
    for (int m = 0; m < n_methods; ++m)
        out.methods.push_back(summarize(names[m], std::move(est[m]), truth, ses[m], cover[m]));
    return out;
}

ExperimentSummary run_se_study(const ScenarioSpec& spec, std::size_t n_sims,
                               const BootstrapSpec& boot) {
    spec.validate();
    std::vector<double> est(n_sims), model_se(n_sims), boot_se(n_sims);
    std::vector<char> wald_cover(n_sims), pct_cover(n_sims);
    const double truth = spec.b1;
    const double zcrit = norm_quantile(0.975);

    parallel_for(n_sims, [&](std::size_t sim) {
        AnalysisDataset cohort = gen_cohort(spec, sim);

        CalibrationSpec cal;
        cal.dependent = "xref";
        cal.exposure = "xstar";
        cal.confounders = {"z", "v"};
        OutcomeSpec outcome;
        outcome.outcome = "y";
        outcome.confounders = {"z", "v"};
        outcome.family = spec.family;

        BootstrapSpec bs = boot;
        bs.seed = Rng(boot.seed, {stream::bootstrap, sim}).next_u64();
        VarianceReport rep = bootstrap_rc(cohort, cal, outcome, bs);

        est[sim] = rep.point_estimate;
        model_se[sim] = rep.se_unadjusted;
        boot_se[sim] = rep.se_bootstrap;
        wald_cover[sim] = std::abs(rep.point_estimate - truth) <= zcrit * rep.se_unadjusted;
        pct_cover[sim] =
            rep.ci_bootstrap.first <= truth && truth <= rep.ci_bootstrap.second;
    });

    ExperimentSummary out;
    out.truth = truth;
    out.n_sims = n_sims;
    out.methods.push_back(summarize("model-based", est, truth, model_se, wald_cover));
    out.methods.push_back(summarize("bootstrap", std::move(est), truth, boot_se, pct_cover));
    return out;
}

AnalysisDataset gen_mediation_cohort(const MediationScenario& sc, std::size_t sim_index) {
    const std::size_t n = sc.n_main;
    if (sc.n_validation < 4 || sc.n_validation > n)
        throw InvalidInput("mediation scenario sizes invalid");
    const double sd_x = std::sqrt(sc.sigma_x2);
    const double sd_m = std::sqrt(sc.sigma_m_resid2);
    const double sd_y = std::sqrt(sc.sigma_y2);
    const double sd_estar = std::sqrt(sc.sigma_estar2);
    const double sd_ref = std::sqrt(sc.sigma_ref2);

    std::vector<double> x(n), m(n), y(n), xstar(n), r1(n), r2(n), flag(n);
    Rng rng(sc.seed, {stream::simulation, sim_index});
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = sd_x * rng.normal();
        m[i] = sc.gamma0 + sc.gamma_x * x[i] + sd_m * rng.normal();
        y[i] = sc.beta0 + sc.beta_x * x[i] + sc.beta_m * m[i] + sd_y * rng.normal();
        xstar[i] = sc.alpha0 + sc.alpha_x * x[i] + sc.alpha_m * m[i] +
                   sd_estar * rng.normal();
        r1[i] = x[i] + sd_ref * rng.normal();
        r2[i] = x[i] + sd_ref * rng.normal();
        flag[i] = i < sc.n_validation ? 1.0 : 0.0;
        if (i >= sc.n_validation) {
            r1[i] = std::nan("");
            r2[i] = std::nan("");
        }
    }

    AnalysisDataset ds;
    auto add = [&](const char* name, ColumnRole role, std::vector<double>&& vals) {
        Column c;
        c.name = name;
        c.role = role;
        c.values = std::move(vals);
        ds.add_column(std::move(c));
    };
    add("y", ColumnRole::Outcome, std::move(y));
    add("x_true", ColumnRole::Plain, std::move(x));
    add("m", ColumnRole::Mediator, std::move(m));
    add("xstar", ColumnRole::ErrorProneExposure, std::move(xstar));
    add("xref1", ColumnRole::ReferenceReplicate, std::move(r1));
    add("xref2", ColumnRole::ReferenceReplicate, std::move(r2));
    add("validation", ColumnRole::ValidationFlag, std::move(flag));
    return ds;
}

BiasOracleInputs mediation_oracle_inputs(const MediationScenario& sc) {
    BiasOracleInputs in;
    in.beta_m = sc.beta_m;
    in.alpha_x = sc.alpha_x;
    in.alpha_m = sc.alpha_m;
    in.gamma_x = sc.gamma_x;
    in.sigma_x2 = sc.sigma_x2;
    in.sigma_m2 = sc.gamma_x * sc.gamma_x * sc.sigma_x2 + sc.sigma_m_resid2;
    in.sigma_xm = sc.gamma_x * sc.sigma_x2;

    // R^2 of the population regression of X on (X*, M):
    // var(Xhat) / var(X) from the joint second moments.
    const double var_xstar = sc.alpha_x * sc.alpha_x * in.sigma_x2 +
                             sc.alpha_m * sc.alpha_m * in.sigma_m2 +
                             2.0 * sc.alpha_x * sc.alpha_m * in.sigma_xm + sc.sigma_estar2;
    const double cov_x_xstar = sc.alpha_x * in.sigma_x2 + sc.alpha_m * in.sigma_xm;
    const double cov_m_xstar = sc.alpha_x * in.sigma_xm + sc.alpha_m * in.sigma_m2;
    Eigen::Matrix2d vp;
    vp << var_xstar, cov_m_xstar,
          cov_m_xstar, in.sigma_m2;
    Eigen::Vector2d cv(cov_x_xstar, in.sigma_xm);
    const double var_xhat = cv.dot(vp.ldlt().solve(cv));
    in.r2_expanded = var_xhat / in.sigma_x2;
    return in;
}

double mediation_true_total_effect(const MediationScenario& sc) {
    return sc.beta_x + sc.beta_m * sc.gamma_x;
}

MediationStudyResult run_mediation_study(const MediationScenario& sc, std::size_t n_sims) {
    std::vector<double> est_s(n_sims), est_e(n_sims), est_t(n_sims);

    parallel_for(n_sims, [&](std::size_t sim) {
        MediationScenario s = sc;
        AnalysisDataset cohort = gen_mediation_cohort(s, sim);
        AnalysisDataset val = split_validation(cohort).validation;

        CalibrationSpec standard;
        standard.dependent = "xref1";
        standard.exposure = "xstar";
        CalibrationSpec expanded = standard;
        expanded.extras = {"m"};

        OutcomeSpec outcome;
        outcome.outcome = "y";
        outcome.family = ModelFamily::Linear;

        est_s[sim] = rc_fit(cohort, fit_calibration(val, standard), outcome)
                         .exposure_coefficient;
        est_e[sim] = rc_fit(cohort, fit_calibration(val, expanded), outcome)
                         .exposure_coefficient;

        MediationSpec med;
        med.outcome = "y";
        med.exposure = "xstar";
        med.mediator = "m";
        med.replicate1 = "xref1";
        med.replicate2 = "xref2";
        med.family = ModelFamily::Linear;
        est_t[sim] = midthune_total_effect(cohort, val, med).total_effect;
    });

    // The closed-form biases are relative to the total effect: the
    // asymptotic mean of each naive estimator is truth + bias.
    BiasOracleInputs oracle = mediation_oracle_inputs(sc);
    MediationStudyResult out;
    out.truth = mediation_true_total_effect(sc);
    out.oracle_standard = out.truth + bias_standard_rc(oracle);
    out.oracle_expanded = out.truth + bias_expanded_rc(oracle);
    out.standard_rc = summarize("standard calibration (no mediator)", std::move(est_s),
                                out.truth, {}, {});
    out.expanded_rc = summarize("expanded calibration (mediator in equation only)",
                                std::move(est_e), out.truth, {}, {});
    out.five_step = summarize("five-step total effect", std::move(est_t), out.truth, {}, {});
    return out;
}

} // namespace rckit
