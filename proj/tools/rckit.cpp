// rckit: regression-calibration toolkit for covariate measurement error.
//
// Subcommands: calibrate, rc, mediate, samplesize, simulate, survey-rc.
// One JSON config document drives an invocation; command-line flags override
// top-level scalars. Every report is a pure function of (config, data, seed).

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rckit/calibration.hpp"
#include "rckit/errors.hpp"
#include "rckit/mediation.hpp"
#include "rckit/rc.hpp"
#include "rckit/report.hpp"
#include "rckit/rng.hpp"
#include "rckit/samplesize.hpp"
#include "rckit/simulate.hpp"
#include "rckit/stats.hpp"
#include "rckit/survey.hpp"
#include "rckit/variance.hpp"

namespace {

using namespace rckit;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------- config --

struct RunConfig {
    ordered_json raw = ordered_json::object(); // echoed into the report

    std::uint64_t seed = 1;
    std::string output;
    bool strict_alignment = false;

    std::string main_path;
    std::string external_validation_path; // empty: internal validation flag

    RoleMap roles;

    CalibrationSpec calibration;
    std::string calibration_model_in;  // load instead of fitting
    std::string calibration_model_out; // persist the fitted equation

    OutcomeSpec outcome;
    std::optional<double> or_factor;

    bool want_bootstrap = false;
    BootstrapSpec bootstrap;
    bool want_sandwich = false;
    bool want_attenuation = false;

    // mediate
    MediationSpec mediation;
    BootstrapSpec mediation_bootstrap;

    // survey-rc
    std::size_t survey_replicates = 200;
    std::string weights_in, weights_out;
    bool want_mi = false;
    MiOptions mi;

    // simulate
    std::string preset = "alignment";
    std::size_t n_sims = 1000;
    std::size_t boot_replicates = 1000;
    std::string dump_estimates;
    ordered_json scenario_overrides;

    // samplesize
    SampleSizeInputs samplesize;
    bool samplesize_simulate = false;
    std::vector<std::size_t> samplesize_grid;
    std::size_t samplesize_sims = 200;
};

ordered_json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError("config parse failure in " + path + ": " + e.what());
    }
}

RoleMap parse_roles(const ordered_json& j) {
    RoleMap roles;
    for (auto it = j.begin(); it != j.end(); ++it) {
        RoleSpec spec;
        if (it.value().is_string()) {
            spec.role = role_from_name(it.value().get<std::string>());
        } else if (it.value().is_object()) {
            spec.role = role_from_name(it.value().at("role").get<std::string>());
            if (it.value().contains("categorical"))
                spec.categorical = it.value()["categorical"].get<bool>();
            if (it.value().contains("levels"))
                spec.levels = it.value()["levels"].get<std::vector<std::string>>();
        } else {
            throw ConfigError("role entry for '" + it.key() +
                              "' must be a string or an object");
        }
        roles[it.key()] = spec;
    }
    return roles;
}

DependentTransform parse_transform(const ordered_json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "none") return DependentTransform::none();
        if (s == "log") return DependentTransform::log();
        throw ConfigError("unknown calibration transform: " + s);
    }
    if (j.is_object() && j.contains("spline_knots"))
        return DependentTransform::spline(j["spline_knots"].get<int>());
    throw ConfigError("calibration transform must be \"none\", \"log\" or "
                      "{\"spline_knots\": k}");
}

ModelFamily parse_family(const std::string& s) {
    if (s == "linear") return ModelFamily::Linear;
    if (s == "logistic") return ModelFamily::Logistic;
    throw ConfigError("unknown model family: " + s + " (linear|logistic)");
}

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

BootstrapSpec parse_bootstrap(const ordered_json& j, std::uint64_t default_seed) {
    BootstrapSpec b;
    b.n_replicates = get_or<std::size_t>(j, "replicates", 1000);
    b.ci_level = get_or<double>(j, "ci_level", 0.95);
    b.stratify_on_validation = get_or<bool>(j, "stratify_on_validation", true);
    b.seed = get_or<std::uint64_t>(j, "seed", default_seed);
    return b;
}

RunConfig parse_config(const ordered_json& j) {
    RunConfig cfg;
    cfg.raw = j;
    cfg.seed = get_or<std::uint64_t>(j, "seed", 1);
    cfg.output = get_or<std::string>(j, "output", "");
    cfg.strict_alignment = get_or<bool>(j, "strict_alignment", false);

    if (j.contains("data")) {
        cfg.main_path = get_or<std::string>(j["data"], "main", "");
        cfg.external_validation_path = get_or<std::string>(j["data"], "validation", "");
    }
    if (j.contains("roles")) cfg.roles = parse_roles(j["roles"]);

    if (j.contains("calibration")) {
        const auto& c = j["calibration"];
        cfg.calibration.mode = get_or<std::string>(c, "mode", "reference") == "replicate"
                                   ? CalibrationMode::Replicate
                                   : CalibrationMode::Reference;
        cfg.calibration.dependent = get_or<std::string>(c, "dependent", "");
        cfg.calibration.exposure = get_or<std::string>(c, "exposure", "");
        if (c.contains("replicates")) {
            auto reps = c["replicates"].get<std::vector<std::string>>();
            if (reps.size() != 2)
                throw ConfigError("calibration.replicates needs exactly two columns");
            cfg.calibration.replicates = {reps[0], reps[1]};
        }
        if (c.contains("confounders"))
            cfg.calibration.confounders =
                c["confounders"].get<std::vector<std::string>>();
        if (c.contains("extras"))
            cfg.calibration.extras = c["extras"].get<std::vector<std::string>>();
        if (c.contains("transform"))
            cfg.calibration.transform = parse_transform(c["transform"]);
        cfg.calibration_model_in = get_or<std::string>(c, "model_in", "");
        cfg.calibration_model_out = get_or<std::string>(c, "model_out", "");
    }

    if (j.contains("outcome")) {
        const auto& o = j["outcome"];
        cfg.outcome.outcome = get_or<std::string>(o, "outcome", "");
        cfg.outcome.family = parse_family(get_or<std::string>(o, "family", "logistic"));
        if (o.contains("confounders"))
            cfg.outcome.confounders = o["confounders"].get<std::vector<std::string>>();
        cfg.outcome.exposure_transform =
            get_or<std::string>(o, "exposure_transform", "none") == "log"
                ? Transform::Log
                : Transform::None;
        if (o.contains("or_factor")) cfg.or_factor = o["or_factor"].get<double>();
    }

    if (j.contains("variance")) {
        const auto& v = j["variance"];
        if (v.contains("bootstrap")) {
            cfg.want_bootstrap = true;
            cfg.bootstrap = parse_bootstrap(v["bootstrap"], cfg.seed);
        }
        cfg.want_sandwich = get_or<bool>(v, "sandwich", false);
    }
    cfg.want_attenuation = get_or<bool>(j, "attenuation", false);

    if (j.contains("mediation")) {
        const auto& m = j["mediation"];
        cfg.mediation.mediator = get_or<std::string>(m, "mediator", "");
        if (m.contains("replicates")) {
            auto reps = m["replicates"].get<std::vector<std::string>>();
            if (reps.size() != 2)
                throw ConfigError("mediation.replicates needs exactly two columns");
            cfg.mediation.replicate1 = reps[0];
            cfg.mediation.replicate2 = reps[1];
        }
        cfg.mediation_bootstrap =
            parse_bootstrap(m.contains("bootstrap") ? m["bootstrap"] : ordered_json{},
                            cfg.seed);
        if (!m.contains("bootstrap")) cfg.mediation_bootstrap.n_replicates = 500;
    }

    if (j.contains("survey")) {
        const auto& s = j["survey"];
        cfg.survey_replicates = get_or<std::size_t>(s, "replicates", 200);
        cfg.weights_in = get_or<std::string>(s, "weights_in", "");
        cfg.weights_out = get_or<std::string>(s, "weights_out", "");
        if (s.contains("mi")) {
            cfg.want_mi = true;
            cfg.mi.n_imputations = get_or<std::size_t>(s["mi"], "imputations", 25);
            cfg.mi.n_replicates = cfg.survey_replicates;
            cfg.mi.robust = get_or<bool>(s["mi"], "robust", false);
            cfg.mi.rubin_factor = get_or<bool>(s["mi"], "rubin_factor", false);
            cfg.mi.seed = get_or<std::uint64_t>(s["mi"], "seed", cfg.seed);
        }
    }

    if (j.contains("simulate")) {
        const auto& s = j["simulate"];
        cfg.preset = get_or<std::string>(s, "preset", "alignment");
        cfg.n_sims = get_or<std::size_t>(s, "sims", 1000);
        cfg.boot_replicates = get_or<std::size_t>(s, "bootstrap_replicates", 1000);
        cfg.dump_estimates = get_or<std::string>(s, "dump_estimates", "");
        if (s.contains("scenario")) cfg.scenario_overrides = s["scenario"];
    }

    if (j.contains("samplesize")) {
        const auto& s = j["samplesize"];
        cfg.samplesize.f = get_or<double>(s, "f", 0.1);
        cfg.samplesize.alpha = get_or<double>(s, "alpha", 0.05);
        cfg.samplesize.power = get_or<double>(s, "power", 0.90);
        cfg.samplesize.rho = get_or<double>(s, "rho", 0.0);
        if (s.contains("simulate")) {
            cfg.samplesize_simulate = true;
            cfg.samplesize_grid =
                s["simulate"].at("grid").get<std::vector<std::size_t>>();
            cfg.samplesize_sims = get_or<std::size_t>(s["simulate"], "sims", 200);
        }
    }
    return cfg;
}

// Fill spec fields that follow from column roles when the config leaves them
// out.
void resolve_from_roles(RunConfig& cfg, const AnalysisDataset& ds) {
    auto& cal = cfg.calibration;
    if (cal.exposure.empty())
        if (auto c = ds.column_with_role(ColumnRole::ErrorProneExposure))
            cal.exposure = *c;
    if (cal.mode == CalibrationMode::Reference && cal.dependent.empty())
        if (auto c = ds.column_with_role(ColumnRole::ReferenceMeasure))
            cal.dependent = *c;
    if (cal.mode == CalibrationMode::Replicate && cal.replicates[0].empty()) {
        auto reps = ds.columns_with_role(ColumnRole::ReferenceReplicate);
        if (reps.size() == 2) cal.replicates = {reps[0], reps[1]};
    }
    if (cal.confounders.empty())
        cal.confounders = ds.columns_with_role(ColumnRole::Confounder);
    for (const auto& extra : ds.columns_with_role(ColumnRole::ExtraCalibrationCovariate))
        if (std::find(cal.extras.begin(), cal.extras.end(), extra) == cal.extras.end())
            cal.extras.push_back(extra);

    auto& out = cfg.outcome;
    if (out.outcome.empty())
        if (auto c = ds.column_with_role(ColumnRole::Outcome)) out.outcome = *c;
    if (out.confounders.empty())
        out.confounders = ds.columns_with_role(ColumnRole::Confounder);
    out.exposure_columns = {cal.exposure};

    auto& med = cfg.mediation;
    med.outcome = out.outcome;
    med.exposure = cal.exposure;
    med.confounders = out.confounders;
    med.family = out.family;
    if (med.mediator.empty())
        if (auto c = ds.column_with_role(ColumnRole::Mediator)) med.mediator = *c;
    if (med.replicate1.empty()) {
        auto reps = ds.columns_with_role(ColumnRole::ReferenceReplicate);
        if (reps.size() == 2) {
            med.replicate1 = reps[0];
            med.replicate2 = reps[1];
        }
    }
}

// ------------------------------------------------------------- checklist --

ordered_json checklist_section(const RunConfig& cfg, const AlignmentReport& alignment,
                               std::size_t n_validation, bool se_adjusted,
                               const std::string& mode) {
    ordered_json items = ordered_json::array();
    auto add = [&](int item, const char* level, const std::string& text) {
        ordered_json e;
        e["item"] = item;
        e["level"] = level;
        e["message"] = text;
        items.push_back(e);
    };

    for (const auto& entry : alignment.entries) {
        if (entry.kind == 'a')
            add(1, "warning", entry.message);
        else
            add(5, "warning", entry.message);
    }

    if (!cfg.external_validation_path.empty())
        add(2, "note",
            "calibration uses an external validation file; the equation transports "
            "only if the joint exposure/covariate distribution matches the main "
            "study");

    if (n_validation > 0)
        add(3, "note",
            "validation rows used: " + std::to_string(n_validation) +
                "; the samplesize subcommand sizes a validation study for a chosen "
                "variance-inflation budget");

    const auto& tf = cfg.calibration.transform;
    const bool cal_log = tf.kind == DependentTransform::Kind::Log;
    const bool out_log = cfg.outcome.exposure_transform == Transform::Log;
    if (tf.kind != DependentTransform::Kind::Spline && cal_log != out_log)
        add(4, "warning",
            "the calibration dependent scale (" + tf.label() +
                ") differs from the outcome model's exposure scale (" +
                std::string(out_log ? "log" : "none") +
                "); calibrate the transformed exposure directly");

    if (!se_adjusted)
        add(6, "warning",
            "no calibration-uncertainty-adjusted SE was computed; model-based SEs "
            "ignore the estimated calibration coefficients and run too small");

    if (!cfg.mediation.mediator.empty() && mode != "mediate")
        add(7, "note",
            "a mediator column ('" + cfg.mediation.mediator +
                "') is declared; when a calibration covariate mediates the "
                "exposure-outcome relationship, use the mediate subcommand's "
                "five-step total-effect estimator");
    return items;
}

// --------------------------------------------------------------- reports --

ordered_json report_header(const RunConfig& cfg, const std::string& mode) {
    ordered_json r;
    r["report_version"] = 1;
    r["tool"] = {{"name", "rckit"}, {"version", kVersion}};
    r["mode"] = mode;
    r["seed"] = cfg.seed;
    r["config"] = cfg.raw;
    return r;
}

void emit_report(const ordered_json& report, const std::string& output) {
    const std::string text = report.dump(2) + "\n";
    if (output.empty() || output == "-") {
        std::cout << text;
    } else {
        std::ofstream out(output, std::ios::binary);
        if (!out) throw ConfigError("cannot write report to " + output);
        out << text;
        std::cerr << "report written to " << output << "\n";
    }
}

// ------------------------------------------------------------- pipelines --

struct LoadedData {
    AnalysisDataset cohort;
    AnalysisDataset validation;
    std::size_t n_validation = 0;
};

LoadedData load_data(RunConfig& cfg) {
    if (cfg.main_path.empty()) throw ConfigError("config needs data.main");
    LoadedData data;
    data.cohort = load_csv(cfg.main_path, cfg.roles);
    resolve_from_roles(cfg, data.cohort);
    if (!cfg.external_validation_path.empty()) {
        data.validation =
            load_csv(cfg.external_validation_path, cfg.roles, /*require_outcome=*/false);
        std::cerr << "note: external validation data; transportability of the "
                     "calibration equation is an assumption, not a property the "
                     "toolkit can check\n";
    } else {
        data.validation = split_validation(data.cohort).validation;
    }
    data.n_validation = data.validation.n_rows();
    return data;
}

CalibrationModel obtain_calibration(const RunConfig& cfg, const LoadedData& data) {
    if (!cfg.calibration_model_in.empty()) {
        std::ifstream in(cfg.calibration_model_in);
        if (!in)
            throw ConfigError("cannot open calibration model: " + cfg.calibration_model_in);
        std::ostringstream buf;
        buf << in.rdbuf();
        return calibration_from_json(buf.str());
    }
    return fit_calibration(data.validation, cfg.calibration);
}

int run_calibrate(RunConfig& cfg) {
    LoadedData data = load_data(cfg);
    CalibrationModel model = obtain_calibration(cfg, data);
    BerksonDiagnostics diag = berkson_check(model, data.validation);

    ordered_json report = report_header(cfg, "calibrate");
    report["calibration"] = json_of(model);
    report["berkson_diagnostics"] = json_of(diag);
    AlignmentReport alignment = check_alignment(model.spec, cfg.outcome);
    report["alignment"] = json_of(alignment);
    report["checklist"] =
        checklist_section(cfg, alignment, data.n_validation, false, "calibrate");

    if (!cfg.calibration_model_out.empty()) {
        std::ofstream out(cfg.calibration_model_out, std::ios::binary);
        if (!out)
            throw ConfigError("cannot write calibration model to " +
                              cfg.calibration_model_out);
        out << calibration_to_json(model) << "\n";
        std::cerr << "calibration model written to " << cfg.calibration_model_out << "\n";
    }
    emit_report(report, cfg.output);
    return 0;
}

int run_rc(RunConfig& cfg) {
    LoadedData data = load_data(cfg);
    CalibrationModel model = obtain_calibration(cfg, data);

    AlignmentReport alignment =
        check_alignment(model.spec, cfg.outcome, cfg.strict_alignment);
    if (cfg.strict_alignment && !alignment.empty())
        throw AlignmentError("covariate alignment violated: " + alignment.summary());

    RcResult naive = naive_fit(data.cohort, cfg.outcome);
    RcResult rc = rc_fit(data.cohort, model, cfg.outcome, cfg.strict_alignment);
    BerksonDiagnostics diag = berkson_check(model, data.validation);

    ordered_json report = report_header(cfg, "rc");
    report["calibration"] = json_of(model);
    report["berkson_diagnostics"] = json_of(diag);
    report["alignment"] = json_of(alignment);
    report["naive"] = json_of(naive, /*include_fit=*/false);
    report["rc"] = json_of(rc);

    bool se_adjusted = false;
    const bool internal_validation = cfg.external_validation_path.empty();
    if (cfg.want_bootstrap && internal_validation) {
        VarianceReport var =
            bootstrap_rc(data.cohort, model.spec, cfg.outcome, cfg.bootstrap);
        if (cfg.want_sandwich) {
            SandwichResult sw = sandwich_stacked(data.cohort, model, cfg.outcome, rc.fit);
            var.se_sandwich = sw.se_exposure;
        }
        report["variance"] = json_of(var);
        se_adjusted = true;

        if (cfg.or_factor) {
            OrPerIncrease orr =
                or_per_increase(var.point_estimate, var.ci_bootstrap.first,
                                var.ci_bootstrap.second, *cfg.or_factor,
                                cfg.outcome.exposure_transform);
            report["or_per_increase"] = json_of(orr);
        }
    } else {
        if (cfg.want_bootstrap && !internal_validation)
            std::cerr << "note: stratified bootstrap needs internal validation; "
                         "skipping the bootstrap variance\n";
        if (cfg.want_sandwich && internal_validation) {
            SandwichResult sw = sandwich_stacked(data.cohort, model, cfg.outcome, rc.fit);
            report["sandwich"] = json_of(sw);
            se_adjusted = true;
        }
        if (cfg.or_factor) {
            const double z = norm_quantile(0.975);
            OrPerIncrease orr = or_per_increase(
                rc.exposure_coefficient, rc.exposure_coefficient - z * rc.unadjusted_se,
                rc.exposure_coefficient + z * rc.unadjusted_se, *cfg.or_factor,
                cfg.outcome.exposure_transform);
            report["or_per_increase"] = json_of(orr);
        }
    }

    if (cfg.want_attenuation) {
        const std::string reference = model.spec.mode == CalibrationMode::Replicate
                                          ? model.spec.replicates[0]
                                          : model.spec.dependent;
        AttenuationResult att =
            attenuation_correct(naive.exposure_coefficient,
                                naive.unadjusted_se * naive.unadjusted_se,
                                data.validation, model.spec.exposure, reference);
        report["attenuation"] = json_of(att);
    }

    report["checklist"] =
        checklist_section(cfg, alignment, data.n_validation, se_adjusted, "rc");
    emit_report(report, cfg.output);
    return 0;
}

int run_mediate(RunConfig& cfg) {
    LoadedData data = load_data(cfg);
    if (cfg.mediation.mediator.empty())
        throw ConfigError("mediate needs a Mediator role column or mediation.mediator");
    if (cfg.mediation.replicate1.empty())
        throw ConfigError("mediate needs two ReferenceReplicate columns");

    MediationFit fit = midthune_total_effect(data.cohort, data.validation, cfg.mediation,
                                             cfg.mediation_bootstrap);
    ThreeMethodComparison cmp = compare_three_methods(data.cohort, data.validation,
                                                      cfg.mediation,
                                                      cfg.mediation_bootstrap);

    ordered_json report = report_header(cfg, "mediate");
    report["five_step"] = json_of(fit);
    report["three_methods"] = json_of(cmp);
    if (cfg.or_factor && cfg.mediation.family == ModelFamily::Logistic &&
        fit.ci_total) {
        report["or_per_increase"] =
            json_of(or_per_increase(fit.total_effect, fit.ci_total->first,
                                    fit.ci_total->second, *cfg.or_factor,
                                    cfg.outcome.exposure_transform));
    }
    AlignmentReport none;
    report["checklist"] =
        checklist_section(cfg, none, data.n_validation, true, "mediate");
    emit_report(report, cfg.output);
    return 0;
}

int run_samplesize(RunConfig& cfg) {
    ordered_json report = report_header(cfg, "samplesize");
    report["inputs"] = {{"f", cfg.samplesize.f},
                        {"alpha", cfg.samplesize.alpha},
                        {"power", cfg.samplesize.power},
                        {"rho", cfg.samplesize.rho}};
    report["n_validation"] = validation_sample_size(cfg.samplesize);

    if (cfg.samplesize_simulate) {
        ScenarioSpec sc = default_scenario();
        sc.seed = cfg.seed;
        BootstrapSpec boot;
        boot.n_replicates = cfg.boot_replicates;
        boot.seed = cfg.seed;
        PowerTable table = sample_size_by_simulation(sc, cfg.samplesize_grid,
                                                     cfg.samplesize_sims, boot);
        report["power_by_simulation"] = json_of(table);
    }
    emit_report(report, cfg.output);
    return 0;
}

ScenarioSpec scenario_from_overrides(const RunConfig& cfg) {
    ScenarioSpec sc = default_scenario();
    sc.seed = cfg.seed;
    const ordered_json& o = cfg.scenario_overrides;
    if (!o.is_object()) return sc;
    sc.n_cohort = get_or<std::size_t>(o, "n_cohort", sc.n_cohort);
    sc.n_validation = get_or<std::size_t>(o, "n_validation", sc.n_validation);
    sc.a0 = get_or<double>(o, "a0", sc.a0);
    sc.a1 = get_or<double>(o, "a1", sc.a1);
    sc.a2 = get_or<double>(o, "a2", sc.a2);
    sc.a3 = get_or<double>(o, "a3", sc.a3);
    sc.sigma_eps2 = get_or<double>(o, "sigma_eps2", sc.sigma_eps2);
    sc.sigma_delta2 = get_or<double>(o, "sigma_delta2", sc.sigma_delta2);
    sc.b0 = get_or<double>(o, "b0", sc.b0);
    sc.b1 = get_or<double>(o, "b1", sc.b1);
    sc.b2 = get_or<double>(o, "b2", sc.b2);
    sc.b3 = get_or<double>(o, "b3", sc.b3);
    if (o.contains("family")) sc.family = parse_family(o["family"].get<std::string>());
    return sc;
}

void dump_estimates_csv(const std::string& path, const ExperimentSummary& summary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write estimates to " + path);
    out << "sim";
    for (const auto& m : summary.methods) out << ',' << '"' << m.method << '"';
    out << '\n';
    for (std::size_t i = 0; i < summary.n_sims; ++i) {
        out << i;
        for (const auto& m : summary.methods) out << ',' << m.estimates[i];
        out << '\n';
    }
}

int run_simulate(RunConfig& cfg) {
    ordered_json report = report_header(cfg, "simulate");
    std::string preset = cfg.preset;
    // aliases accepted on the command line
    if (preset == "table1") preset = "alignment";
    if (preset == "table3") preset = "se-coverage";

    report["preset"] = preset;
    report["n_sims"] = cfg.n_sims;

    if (preset == "alignment") {
        ScenarioSpec sc = scenario_from_overrides(cfg);
        ExperimentSummary summary = run_alignment_study(sc, cfg.n_sims);
        report["summary"] = json_of(summary);
        if (!cfg.dump_estimates.empty()) dump_estimates_csv(cfg.dump_estimates, summary);
    } else if (preset == "se-coverage") {
        ScenarioSpec sc = scenario_from_overrides(cfg);
        BootstrapSpec boot;
        boot.n_replicates = cfg.boot_replicates;
        boot.seed = cfg.seed;
        report["bootstrap_replicates"] = cfg.boot_replicates;
        ExperimentSummary summary = run_se_study(sc, cfg.n_sims, boot);
        report["summary"] = json_of(summary);
        if (!cfg.dump_estimates.empty()) dump_estimates_csv(cfg.dump_estimates, summary);
    } else if (preset == "mediation") {
        MediationScenario sc;
        sc.seed = cfg.seed;
        const ordered_json& o = cfg.scenario_overrides;
        if (o.is_object()) {
            sc.n_main = get_or<std::size_t>(o, "n_main", sc.n_main);
            sc.n_validation = get_or<std::size_t>(o, "n_validation", sc.n_validation);
            sc.gamma_x = get_or<double>(o, "gamma_x", sc.gamma_x);
            sc.beta_x = get_or<double>(o, "beta_x", sc.beta_x);
            sc.beta_m = get_or<double>(o, "beta_m", sc.beta_m);
            sc.alpha_x = get_or<double>(o, "alpha_x", sc.alpha_x);
            sc.alpha_m = get_or<double>(o, "alpha_m", sc.alpha_m);
        }
        MediationStudyResult result = run_mediation_study(sc, cfg.n_sims);
        report["summary"] = json_of(result);
    } else {
        throw ConfigError("unknown preset: " + cfg.preset +
                          " (alignment|se-coverage|mediation)");
    }
    emit_report(report, cfg.output);
    return 0;
}

int run_survey_rc(RunConfig& cfg) {
    LoadedData data = load_data(cfg);
    SurveyDesign design = survey_design_from(data.cohort);

    ReplicateWeightSet weights;
    if (!cfg.weights_in.empty()) {
        weights = read_replicate_weights_csv(cfg.weights_in);
        if (!weights.weights.empty() &&
            weights.weights[0].size() != data.cohort.n_rows())
            throw ConfigError("imported replicate weights do not match the cohort");
    } else {
        weights = make_replicate_weights(design, cfg.survey_replicates, cfg.seed);
    }
    if (!cfg.weights_out.empty()) {
        write_replicate_weights_csv(weights, cfg.weights_out);
        std::cerr << "replicate weights written to " << cfg.weights_out << "\n";
    }

    CalibrationModel model = obtain_calibration(cfg, data);
    AlignmentReport alignment = check_alignment(model.spec, cfg.outcome);

    SurveyRcFit fit = survey_rc_fit(data.cohort, design, weights, model, cfg.outcome);

    ordered_json report = report_header(cfg, "survey-rc");
    report["calibration"] = json_of(model);
    report["alignment"] = json_of(alignment);
    report["survey_fit"] = json_of(fit);

    if (cfg.want_mi) {
        MiPooledEstimate pooled = mi_rc_pipeline(data.cohort, data.validation,
                                                 model.spec, cfg.outcome, design, cfg.mi);
        report["mi_pooled"] = json_of(pooled);
        if (cfg.or_factor) {
            const double z = norm_quantile(0.975);
            const double se = std::sqrt(pooled.v_pooled);
            report["or_per_increase"] = json_of(
                or_per_increase(pooled.beta_pooled, pooled.beta_pooled - z * se,
                                pooled.beta_pooled + z * se, *cfg.or_factor,
                                cfg.outcome.exposure_transform));
        }
    }
    report["checklist"] = checklist_section(cfg, alignment, data.n_validation,
                                            cfg.want_mi, "survey-rc");
    emit_report(report, cfg.output);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"regression calibration toolkit for covariate measurement error"};
    app.require_subcommand(1);

    std::string config_path, output_override;
    bool strict = false;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::size_t> sims_override, b_override;
    std::string preset_override, dump_estimates;

    auto add_common = [&](CLI::App* cmd, bool config_required) {
        cmd->add_option("--config", config_path, "JSON config file")
            ->required(config_required);
        cmd->add_option("--out", output_override, "report path (default: stdout)");
        cmd->add_option("--seed", seed_override, "override the config seed");
        return cmd;
    };

    CLI::App* calibrate = add_common(app.add_subcommand(
        "calibrate", "fit the calibration equation and check the Berkson residuals"),
        true);
    CLI::App* rc = add_common(app.add_subcommand(
        "rc", "regression-calibration outcome analysis with corrected SEs"), true);
    rc->add_flag("--strict", strict, "treat covariate-alignment warnings as errors");
    rc->add_option("--b", b_override, "bootstrap replicates override");
    CLI::App* mediate = add_common(app.add_subcommand(
        "mediate", "five-step total-effect estimation with a mediating covariate"),
        true);

    CLI::App* samplesize = app.add_subcommand(
        "samplesize", "validation-study size for a variance-inflation budget");
    double f = 0.1, alpha = 0.05, power = 0.90, rho = 0.0;
    bool simulate_grid = false;
    samplesize->add_option("--config", config_path, "JSON config file");
    samplesize->add_option("--out", output_override, "report path (default: stdout)");
    samplesize->add_option("--seed", seed_override, "simulation seed");
    samplesize->add_option("--f", f, "variance-inflation fraction");
    samplesize->add_option("--alpha", alpha, "two-sided significance level");
    samplesize->add_option("--power", power, "target power");
    samplesize->add_option("--rho", rho, "exposure-reference correlation");
    samplesize->add_flag("--simulate", simulate_grid,
                         "empirical power over the config's candidate grid");

    CLI::App* simulate = app.add_subcommand(
        "simulate", "Monte Carlo studies of the calibration estimators");
    simulate->add_option("--config", config_path, "JSON config file");
    simulate->add_option("--out", output_override, "report path (default: stdout)");
    simulate->add_option("--seed", seed_override, "scenario seed");
    simulate->add_option("--preset", preset_override,
                         "alignment | se-coverage | mediation (aliases: table1, table3)");
    simulate->add_option("--sims", sims_override, "number of simulated datasets");
    simulate->add_option("--b", b_override, "bootstrap replicates (se-coverage)");
    simulate->add_option("--dump-estimates", dump_estimates,
                         "write raw per-simulation estimates to this CSV");

    CLI::App* survey = add_common(app.add_subcommand(
        "survey-rc", "survey-weighted calibration analysis with replicate weights"),
        true);

    CLI11_PARSE(app, argc, argv);

    const auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : parse_config(load_json(config_path));
        if (seed_override) {
            cfg.seed = *seed_override;
            if (!cfg.raw.is_object()) cfg.raw = ordered_json::object();
            cfg.raw["seed"] = *seed_override;
        }
        if (!output_override.empty()) cfg.output = output_override;
        if (strict) cfg.strict_alignment = true;
        if (sims_override) cfg.n_sims = *sims_override;
        if (b_override) {
            cfg.boot_replicates = *b_override;
            cfg.bootstrap.n_replicates = *b_override;
        }
        if (!preset_override.empty()) cfg.preset = preset_override;
        if (!dump_estimates.empty()) cfg.dump_estimates = dump_estimates;

        if (calibrate->parsed()) code = run_calibrate(cfg);
        else if (rc->parsed()) code = run_rc(cfg);
        else if (mediate->parsed()) code = run_mediate(cfg);
        else if (samplesize->parsed()) {
            if (samplesize->count("--f")) cfg.samplesize.f = f;
            if (samplesize->count("--alpha")) cfg.samplesize.alpha = alpha;
            if (samplesize->count("--power")) cfg.samplesize.power = power;
            if (samplesize->count("--rho")) cfg.samplesize.rho = rho;
            if (simulate_grid) {
                cfg.samplesize_simulate = true;
                if (cfg.samplesize_grid.empty())
                    cfg.samplesize_grid = {100, 250, 500};
            }
            code = run_samplesize(cfg);
        } else if (simulate->parsed()) {
            code = run_simulate(cfg);
        } else if (survey->parsed()) {
            code = run_survey_rc(cfg);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = e.category() == ErrorCategory::Numerical ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = 1;
    }
    const auto t1 = std::chrono::steady_clock::now();
    std::cerr << "elapsed: "
              << std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()
              << " ms\n";
    return code;
}
