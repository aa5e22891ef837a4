#include "rckit/variance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rckit/errors.hpp"
#include "rckit/parallel.hpp"
#include "rckit/rng.hpp"
#include "rckit/stats.hpp"

namespace rckit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Row-level workspaces shared by all replicates: per-row design fragments
// gathered once so a replicate only shuffles indices.
struct PipelinePrecomp {
    // calibration fit side
    Eigen::MatrixXd fit_w;   // n x p_cal (NaN rows where incomplete)
    Eigen::VectorXd dep;     // calibration dependent (first basis scale)
    std::vector<char> cal_ok;
    // calibration apply side
    Eigen::MatrixXd apply_p; // n x p_cal
    // outcome side, exposure column excluded
    Eigen::MatrixXd out_z;   // n x (p_out - 1): intercept + confounders
    Eigen::VectorXd y;
    std::vector<char> out_ok; // y and confounders present
    std::vector<std::string> cal_labels;
    std::vector<std::string> out_labels; // intercept, exposure, confounders
    ModelFamily family = ModelFamily::Logistic;

    std::vector<std::size_t> val_rows;
    std::vector<std::size_t> rest_rows;
};

PipelinePrecomp precompute(const AnalysisDataset& cohort, const CalibrationSpec& cal_spec,
                           const OutcomeSpec& outcome) {
    PipelinePrecomp pre;
    const std::size_t n = cohort.n_rows();

    const std::string dep_col = cal_spec.mode == CalibrationMode::Replicate
                                    ? cal_spec.replicates[0]
                                    : cal_spec.dependent;
    std::vector<std::string> fit_preds;
    fit_preds.push_back(cal_spec.mode == CalibrationMode::Replicate ? cal_spec.replicates[1]
                                                                    : cal_spec.exposure);
    fit_preds.insert(fit_preds.end(), cal_spec.confounders.begin(), cal_spec.confounders.end());
    fit_preds.insert(fit_preds.end(), cal_spec.extras.begin(), cal_spec.extras.end());

    std::vector<std::string> apply_preds;
    apply_preds.push_back(cal_spec.exposure);
    apply_preds.insert(apply_preds.end(), cal_spec.confounders.begin(),
                       cal_spec.confounders.end());
    apply_preds.insert(apply_preds.end(), cal_spec.extras.begin(), cal_spec.extras.end());

    DesignMatrix fit_design = build_design(cohort, fit_preds);
    DesignMatrix apply_design = build_design(cohort, apply_preds);
    pre.fit_w = std::move(fit_design.values);
    pre.apply_p = std::move(apply_design.values);
    pre.cal_labels = fit_design.column_labels;

    std::vector<char> in_val(n, 1);
    if (auto flag_name = cohort.column_with_role(ColumnRole::ValidationFlag)) {
        const Column& flag = cohort.col(*flag_name);
        for (std::size_t i = 0; i < n; ++i) in_val[i] = flag.values[i] == 1.0;
    }

    // Calibration scores/refits use validation-stratum rows only, even when a
    // non-validation row happens to carry a complete reference value.
    const Column& dep = cohort.col(dep_col);
    pre.dep.resize(static_cast<Eigen::Index>(n));
    pre.cal_ok.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double d = dep.values[i];
        if (cal_spec.transform.kind == DependentTransform::Kind::Log) {
            if (!std::isnan(d) && !(d > 0.0))
                throw NonPositiveLog("log calibration dependent requires positive values");
            d = std::isnan(d) ? kNaN : std::log(d);
        }
        pre.dep(static_cast<Eigen::Index>(i)) = d;
        pre.cal_ok[i] = in_val[i] && !std::isnan(d) &&
                        pre.fit_w.row(static_cast<Eigen::Index>(i)).allFinite();
    }

    DesignMatrix zdesign = build_design(cohort, outcome.confounders);
    pre.out_z = std::move(zdesign.values);
    pre.out_labels = {"(Intercept)", cal_spec.exposure + "_hat"};
    for (std::size_t j = 1; j < zdesign.column_labels.size(); ++j)
        pre.out_labels.push_back(zdesign.column_labels[j]);

    const Column& yc = cohort.col(outcome.outcome);
    pre.y.resize(static_cast<Eigen::Index>(n));
    pre.out_ok.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        pre.y(static_cast<Eigen::Index>(i)) = yc.values[i];
        pre.out_ok[i] = !std::isnan(yc.values[i]) &&
                        pre.out_z.row(static_cast<Eigen::Index>(i)).allFinite() &&
                        pre.apply_p.row(static_cast<Eigen::Index>(i)).allFinite();
    }
    pre.family = outcome.family;

    for (std::size_t i = 0; i < n; ++i)
        (in_val[i] ? pre.val_rows : pre.rest_rows).push_back(i);
    return pre;
}

// One full pipeline pass over a row multiset. Throws glm errors upward.
double replicate_estimate(const PipelinePrecomp& pre, const std::vector<std::size_t>& rows) {
    const Eigen::Index p_cal = pre.fit_w.cols();

    std::size_t n_cal = 0, n_out = 0;
    for (std::size_t r : rows) {
        n_cal += pre.cal_ok[r];
        n_out += pre.out_ok[r];
    }
    if (n_cal <= static_cast<std::size_t>(p_cal))
        throw InsufficientValidationRows("calibration resample too small");

    DesignMatrix cal_design;
    cal_design.values.resize(static_cast<Eigen::Index>(n_cal), p_cal);
    cal_design.column_labels = pre.cal_labels;
    Eigen::VectorXd cal_y(static_cast<Eigen::Index>(n_cal));
    Eigen::Index k = 0;
    for (std::size_t r : rows) {
        if (!pre.cal_ok[r]) continue;
        cal_design.values.row(k) = pre.fit_w.row(static_cast<Eigen::Index>(r));
        cal_y(k) = pre.dep(static_cast<Eigen::Index>(r));
        ++k;
    }
    GlmFit cal_fit = glm::fit(ModelFamily::Linear, cal_y, cal_design);

    DesignMatrix out_design;
    out_design.values.resize(static_cast<Eigen::Index>(n_out),
                             1 + 1 + (pre.out_z.cols() - 1));
    out_design.column_labels = pre.out_labels;
    Eigen::VectorXd out_y(static_cast<Eigen::Index>(n_out));
    k = 0;
    for (std::size_t r : rows) {
        if (!pre.out_ok[r]) continue;
        const auto ri = static_cast<Eigen::Index>(r);
        out_design.values(k, 0) = 1.0;
        out_design.values(k, 1) = pre.apply_p.row(ri).dot(cal_fit.coefficients);
        for (Eigen::Index j = 1; j < pre.out_z.cols(); ++j)
            out_design.values(k, 1 + j) = pre.out_z(ri, j);
        out_y(k) = pre.y(ri);
        ++k;
    }
    GlmFit out_fit = glm::fit(pre.family, out_y, out_design);
    return out_fit.coefficients(1);
}

} // namespace

std::vector<std::size_t> stratified_resample(
    const std::vector<std::vector<std::size_t>>& strata, Rng& rng) {
    std::size_t total = 0;
    for (const auto& s : strata) total += s.size();
    std::vector<std::size_t> rows;
    rows.reserve(total);
    for (const auto& stratum : strata) {
        const std::size_t m = stratum.size();
        for (std::size_t i = 0; i < m; ++i) rows.push_back(stratum[rng.uniform_int(m)]);
    }
    return rows;
}

VarianceReport bootstrap_rc(const AnalysisDataset& cohort, const CalibrationSpec& cal_spec,
                            const OutcomeSpec& outcome, const BootstrapSpec& boot) {
    if (boot.n_replicates < 2)
        throw InvalidInput("bootstrap needs at least 2 replicates");
    if (!(boot.ci_level > 0.0 && boot.ci_level < 1.0))
        throw InvalidInput("ci_level must lie in (0,1)");
    if (boot.stratify_on_validation &&
        !cohort.column_with_role(ColumnRole::ValidationFlag))
        throw MissingValidationFlag(
            "stratified bootstrap requires a ValidationFlag column");

    PipelinePrecomp pre = precompute(cohort, cal_spec, outcome);

    VarianceReport report;
    report.n_replicates = boot.n_replicates;
    report.ci_level = boot.ci_level;
    report.seed = boot.seed;

    // Point estimate and unadjusted SE through the ordinary path.
    {
        AnalysisDataset val = cohort.column_with_role(ColumnRole::ValidationFlag)
                                  ? split_validation(cohort).validation
                                  : cohort;
        CalibrationModel model = fit_calibration(val, cal_spec);
        RcResult rc = rc_fit(cohort, model, outcome);
        report.point_estimate = rc.exposure_coefficient;
        report.se_unadjusted = rc.unadjusted_se;
    }

    std::vector<std::vector<std::size_t>> strata;
    if (boot.stratify_on_validation && !pre.rest_rows.empty()) {
        strata = {pre.val_rows, pre.rest_rows};
    } else {
        std::vector<std::size_t> all = pre.val_rows;
        all.insert(all.end(), pre.rest_rows.begin(), pre.rest_rows.end());
        std::sort(all.begin(), all.end());
        strata = {std::move(all)};
    }

    std::vector<double> estimates(boot.n_replicates, kNaN);
    parallel_for(boot.n_replicates, [&](std::size_t r) {
        Rng rng(boot.seed, {stream::bootstrap, r});
        std::vector<std::size_t> rows = stratified_resample(strata, rng);
        try {
            estimates[r] = replicate_estimate(pre, rows);
        } catch (const Error&) {
            // failed replicate: slot stays NaN
        }
    });

    std::vector<double> ok;
    ok.reserve(boot.n_replicates);
    for (double e : estimates)
        if (!std::isnan(e)) ok.push_back(e);
    report.n_failed_replicates = boot.n_replicates - ok.size();
    if (static_cast<double>(report.n_failed_replicates) >
        boot.max_failed_fraction * static_cast<double>(boot.n_replicates))
        throw TooManyFailedReplicates(
            std::to_string(report.n_failed_replicates) + " of " +
            std::to_string(boot.n_replicates) + " bootstrap replicates failed");

    report.replicate_estimates = ok;
    report.se_bootstrap = sd(ok);
    const double alpha = 1.0 - boot.ci_level;
    report.ci_bootstrap = {percentile(ok, alpha / 2.0), percentile(ok, 1.0 - alpha / 2.0)};
    return report;
}

namespace {

struct StackedSystem {
    const PipelinePrecomp* pre;
    Eigen::Index p_cal, p_out;

    // Mean stacked score at theta = (theta_cal, beta).
    Eigen::VectorXd mean_score(const Eigen::VectorXd& theta) const {
        const auto& pp = *pre;
        const Eigen::Index n = pp.y.size();
        Eigen::VectorXd theta_c = theta.head(p_cal);
        Eigen::VectorXd beta = theta.tail(p_out);
        Eigen::VectorXd psi = Eigen::VectorXd::Zero(p_cal + p_out);
        Eigen::VectorXd xrow(p_out);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            if (pp.cal_ok[iu]) {
                const double resid = pp.dep(i) - pp.fit_w.row(i).dot(theta_c);
                psi.head(p_cal) += resid * pp.fit_w.row(i).transpose();
            }
            if (pp.out_ok[iu]) {
                xrow(0) = 1.0;
                xrow(1) = pp.apply_p.row(i).dot(theta_c);
                for (Eigen::Index j = 1; j < pp.out_z.cols(); ++j) xrow(1 + j) = pp.out_z(i, j);
                const double eta = xrow.dot(beta);
                const double mu =
                    pp.family == ModelFamily::Logistic ? glm::expit(eta) : eta;
                psi.tail(p_out) += (pp.y(i) - mu) * xrow;
            }
        }
        return psi / static_cast<double>(n);
    }
};

} // namespace

SandwichResult sandwich_stacked(const AnalysisDataset& cohort, const CalibrationModel& model,
                                const OutcomeSpec& outcome, const GlmFit& outcome_fit) {
    if (model.n_bases() != 1)
        throw InvalidInput(
            "stacked sandwich supports single-basis calibration equations only");

    PipelinePrecomp pre = precompute(cohort, model.spec, outcome);
    const Eigen::Index p_cal = pre.fit_w.cols();
    const Eigen::Index p_out = outcome_fit.coefficients.size();
    if (p_out != 2 + (pre.out_z.cols() - 1))
        throw DimensionMismatch("outcome fit does not match the outcome spec");
    const Eigen::Index p = p_cal + p_out;
    const auto n = static_cast<double>(pre.y.size());

    Eigen::VectorXd theta(p);
    theta.head(p_cal) = model.basis_fits[0].coefficients;
    theta.tail(p_out) = outcome_fit.coefficients;

    StackedSystem sys{&pre, p_cal, p_out};

    // Bread: central-difference Jacobian of the mean score.
    Eigen::MatrixXd a(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(theta(j)));
        Eigen::VectorXd tp = theta, tm = theta;
        tp(j) += h;
        tm(j) -= h;
        a.col(j) = -(sys.mean_score(tp) - sys.mean_score(tm)) / (2.0 * h);
    }

    // Meat: empirical outer product of the per-row stacked scores.
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
    {
        Eigen::VectorXd theta_c = theta.head(p_cal);
        Eigen::VectorXd beta = theta.tail(p_out);
        Eigen::VectorXd psi(p), xrow(p_out);
        for (Eigen::Index i = 0; i < pre.y.size(); ++i) {
            const auto iu = static_cast<std::size_t>(i);
            psi.setZero();
            if (pre.cal_ok[iu]) {
                const double resid = pre.dep(i) - pre.fit_w.row(i).dot(theta_c);
                psi.head(p_cal) = resid * pre.fit_w.row(i).transpose();
            }
            if (pre.out_ok[iu]) {
                xrow(0) = 1.0;
                xrow(1) = pre.apply_p.row(i).dot(theta_c);
                for (Eigen::Index j = 1; j < pre.out_z.cols(); ++j)
                    xrow(1 + j) = pre.out_z(i, j);
                const double eta = xrow.dot(beta);
                const double mu =
                    pre.family == ModelFamily::Logistic ? glm::expit(eta) : eta;
                psi.tail(p_out) = (pre.y(i) - mu) * xrow;
            }
            b.noalias() += psi * psi.transpose();
        }
        b /= n;
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible())
        throw SingularA("stacked bread matrix is singular");
    Eigen::MatrixXd a_inv = lu.inverse();

    SandwichResult res;
    res.vcov = a_inv * b * a_inv.transpose() / n;
    res.labels.reserve(static_cast<std::size_t>(p));
    for (const auto& l : pre.cal_labels) res.labels.push_back("cal:" + l);
    for (const auto& l : pre.out_labels) res.labels.push_back("out:" + l);
    res.se_exposure = std::sqrt(res.vcov(p_cal + 1, p_cal + 1));
    return res;
}

} // namespace rckit
