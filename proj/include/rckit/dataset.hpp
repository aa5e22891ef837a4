#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rckit {

// Semantic role of a column in the analysis.
enum class ColumnRole {
    Outcome,                  // Y
    ErrorProneExposure,       // X*
    ReferenceMeasure,         // X or X**
    ReferenceReplicate,       // X1**, X2** (at most two)
    Confounder,               // Z
    ExtraCalibrationCovariate, // Z~, calibration-only
    Mediator,                 // M
    ValidationFlag,
    SurveyStratum,
    SurveyPsu,
    SurveyWeight,
    Plain,
};

std::string role_name(ColumnRole role);
ColumnRole role_from_name(const std::string& name);

struct Column {
    std::string name;
    ColumnRole role = ColumnRole::Plain;
    bool categorical = false;
    // Numeric values, or level codes for categorical columns. Missing cells
    // are NaN in either case.
    std::vector<double> values;
    // Level labels in declared order; code k refers to levels[k]. The first
    // level is the dummy-coding reference.
    std::vector<std::string> levels;
    // Free-form origin note (e.g. which calibration model produced a
    // calibrated column).
    std::string provenance;

    bool is_missing(std::size_t row) const;
};

// Per-column declaration used when loading a CSV.
struct RoleSpec {
    ColumnRole role = ColumnRole::Plain;
    bool categorical = false;
    // Optional explicit level order; inferred from first appearance when
    // empty.
    std::vector<std::string> levels;
};

using RoleMap = std::map<std::string, RoleSpec>;

class AnalysisDataset {
public:
    AnalysisDataset() = default;

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return columns_.size(); }

    bool has(const std::string& name) const;
    const Column& col(const std::string& name) const; // throws UnknownColumn
    const Column& col(std::size_t i) const { return columns_[i]; }
    const std::vector<Column>& columns() const { return columns_; }

    // First column carrying the given role, if any.
    std::optional<std::string> column_with_role(ColumnRole role) const;
    std::vector<std::string> columns_with_role(ColumnRole role) const;

    void add_column(Column col); // throws on length mismatch or name clash

    // New dataset holding the given rows (in order, duplicates allowed).
    AnalysisDataset subset(const std::vector<std::size_t>& rows) const;

    // Row indices where every named column is non-missing.
    std::vector<std::size_t> complete_rows(const std::vector<std::string>& names) const;

    // Checks the ColumnRole invariants. An Outcome column is mandatory for
    // analysis datasets; auxiliary datasets (e.g. external validation data
    // without Y) pass require_outcome = false.
    void validate_roles(bool require_outcome = true) const;

private:
    std::vector<Column> columns_;
    std::map<std::string, std::size_t> index_;
    std::size_t n_rows_ = 0;
};

struct SplitResult {
    AnalysisDataset validation; // rows with flag == 1
    AnalysisDataset cohort;     // the full cohort, unchanged
};

// Transform applied cell-wise when building a design matrix.
enum class Transform { None, Log };

struct DesignMatrix {
    Eigen::MatrixXd values; // n x p, first column all-ones intercept
    std::vector<std::string> column_labels;

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index p() const { return values.cols(); }
};

// RFC-4180-style CSV with mandatory header; empty cells are missing.
AnalysisDataset load_csv(const std::string& path, const RoleMap& roles,
                         bool require_outcome = true);
AnalysisDataset parse_csv(const std::string& text, const RoleMap& roles,
                          bool require_outcome = true);
// Round-trips finite numerics bit-for-bit (shortest to_chars form).
void write_csv(const AnalysisDataset& ds, const std::string& path);
std::string to_csv(const AnalysisDataset& ds);

// Intercept column first, then each covariate: numeric columns as one column
// (transform applied cell-wise), categorical columns dummy-coded dropping the
// first declared level. Rows are taken as-is; callers filter missing rows
// beforehand via complete_rows().
DesignMatrix build_design(const AnalysisDataset& ds,
                          const std::vector<std::string>& covariates,
                          const std::vector<Transform>& transforms = {},
                          const std::vector<std::size_t>& rows = {});

SplitResult split_validation(const AnalysisDataset& ds);

} // namespace rckit
