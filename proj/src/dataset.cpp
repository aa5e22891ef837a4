#include "rckit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rckit/errors.hpp"

namespace rckit {

std::string role_name(ColumnRole role) {
    switch (role) {
        case ColumnRole::Outcome: return "Outcome";
        case ColumnRole::ErrorProneExposure: return "ErrorProneExposure";
        case ColumnRole::ReferenceMeasure: return "ReferenceMeasure";
        case ColumnRole::ReferenceReplicate: return "ReferenceReplicate";
        case ColumnRole::Confounder: return "Confounder";
        case ColumnRole::ExtraCalibrationCovariate: return "ExtraCalibrationCovariate";
        case ColumnRole::Mediator: return "Mediator";
        case ColumnRole::ValidationFlag: return "ValidationFlag";
        case ColumnRole::SurveyStratum: return "SurveyStratum";
        case ColumnRole::SurveyPsu: return "SurveyPsu";
        case ColumnRole::SurveyWeight: return "SurveyWeight";
        case ColumnRole::Plain: return "Plain";
    }
    return "Plain";
}

ColumnRole role_from_name(const std::string& name) {
    static const std::map<std::string, ColumnRole> table = {
        {"Outcome", ColumnRole::Outcome},
        {"ErrorProneExposure", ColumnRole::ErrorProneExposure},
        {"ReferenceMeasure", ColumnRole::ReferenceMeasure},
        {"ReferenceReplicate", ColumnRole::ReferenceReplicate},
        {"Confounder", ColumnRole::Confounder},
        {"ExtraCalibrationCovariate", ColumnRole::ExtraCalibrationCovariate},
        {"Mediator", ColumnRole::Mediator},
        {"ValidationFlag", ColumnRole::ValidationFlag},
        {"SurveyStratum", ColumnRole::SurveyStratum},
        {"SurveyPsu", ColumnRole::SurveyPsu},
        {"SurveyWeight", ColumnRole::SurveyWeight},
        {"Plain", ColumnRole::Plain},
    };
    auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown column role: " + name);
    return it->second;
}

bool Column::is_missing(std::size_t row) const { return std::isnan(values[row]); }

bool AnalysisDataset::has(const std::string& name) const {
    return index_.count(name) > 0;
}

const Column& AnalysisDataset::col(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UnknownColumn("no column named '" + name + "'");
    return columns_[it->second];
}

std::optional<std::string> AnalysisDataset::column_with_role(ColumnRole role) const {
    for (const auto& c : columns_)
        if (c.role == role) return c.name;
    return std::nullopt;
}

std::vector<std::string> AnalysisDataset::columns_with_role(ColumnRole role) const {
    std::vector<std::string> out;
    for (const auto& c : columns_)
        if (c.role == role) out.push_back(c.name);
    return out;
}

void AnalysisDataset::add_column(Column col) {
    if (!columns_.empty() && col.values.size() != n_rows_)
        throw DimensionMismatch("column '" + col.name + "' has " +
                                std::to_string(col.values.size()) + " rows, dataset has " +
                                std::to_string(n_rows_));
    if (index_.count(col.name))
        throw RoleConflict("duplicate column name '" + col.name + "'");
    if (columns_.empty()) n_rows_ = col.values.size();
    index_[col.name] = columns_.size();
    columns_.push_back(std::move(col));
}

AnalysisDataset AnalysisDataset::subset(const std::vector<std::size_t>& rows) const {
    AnalysisDataset out;
    for (const auto& c : columns_) {
        Column nc;
        nc.name = c.name;
        nc.role = c.role;
        nc.categorical = c.categorical;
        nc.levels = c.levels;
        nc.provenance = c.provenance;
        nc.values.reserve(rows.size());
        for (std::size_t r : rows) nc.values.push_back(c.values[r]);
        out.add_column(std::move(nc));
    }
    return out;
}

std::vector<std::size_t> AnalysisDataset::complete_rows(
    const std::vector<std::string>& names) const {
    std::vector<const Column*> cols;
    cols.reserve(names.size());
    for (const auto& n : names) cols.push_back(&col(n));
    std::vector<std::size_t> rows;
    rows.reserve(n_rows_);
    for (std::size_t r = 0; r < n_rows_; ++r) {
        bool ok = true;
        for (const Column* c : cols)
            if (c->is_missing(r)) { ok = false; break; }
        if (ok) rows.push_back(r);
    }
    return rows;
}

void AnalysisDataset::validate_roles(bool require_outcome) const {
    std::map<ColumnRole, int> counts;
    for (const auto& c : columns_) counts[c.role]++;

    if (counts[ColumnRole::Outcome] > 1)
        throw RoleConflict("more than one Outcome column");
    if (require_outcome && counts[ColumnRole::Outcome] == 0)
        throw RoleConflict("no Outcome column assigned");
    if (counts[ColumnRole::ErrorProneExposure] > 1)
        throw RoleConflict("more than one ErrorProneExposure column");
    if (counts[ColumnRole::ReferenceReplicate] > 2)
        throw RoleConflict("more than two ReferenceReplicate columns");
    for (ColumnRole r : {ColumnRole::ValidationFlag, ColumnRole::SurveyStratum,
                         ColumnRole::SurveyPsu, ColumnRole::SurveyWeight})
        if (counts[r] > 1)
            throw RoleConflict("more than one " + role_name(r) + " column");

    if (auto flag = column_with_role(ColumnRole::ValidationFlag)) {
        const Column& f = col(*flag);
        for (std::size_t r = 0; r < n_rows_; ++r) {
            if (f.is_missing(r) || (f.values[r] != 0.0 && f.values[r] != 1.0))
                throw RoleConflict("ValidationFlag column '" + *flag +
                                   "' must be binary 0/1 with no missing cells");
        }
        // flag == 1 rows must carry the reference measurement
        std::vector<std::string> refs = columns_with_role(ColumnRole::ReferenceMeasure);
        for (const auto& ref : refs) {
            const Column& rc = col(ref);
            for (std::size_t r = 0; r < n_rows_; ++r) {
                if (f.values[r] == 1.0 && rc.is_missing(r))
                    throw RoleConflict(
                        "row " + std::to_string(r) + " is flagged validation=1 but has a "
                        "missing reference measure '" + ref + "'");
            }
        }
    }
}

namespace {

// One CSV record, handling quoted fields and embedded separators/newlines.
// Returns false at end of input.
bool read_record(const std::string& text, std::size_t& pos,
                 std::vector<std::string>& fields) {
    fields.clear();
    if (pos >= text.size()) return false;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    while (pos < text.size()) {
        char c = text[pos];
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field += '"';
                    ++pos;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            ++pos;
            continue;
        }
        if (c == '"' && field.empty()) {
            in_quotes = true;
            ++pos;
            any = true;
            continue;
        }
        if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            ++pos;
            any = true;
            continue;
        }
        if (c == '\r') {
            ++pos;
            continue;
        }
        if (c == '\n') {
            ++pos;
            break;
        }
        field += c;
        ++pos;
        any = true;
    }
    if (in_quotes) throw MalformedCsv("unterminated quoted field");
    if (!any && fields.empty() && field.empty()) return false;
    fields.push_back(std::move(field));
    return true;
}

double parse_numeric(const std::string& s, const std::string& column, std::size_t row) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw MalformedCsv("non-numeric value '" + s + "' in numeric column '" + column +
                           "' at data row " + std::to_string(row + 1));
    return v;
}

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace

AnalysisDataset parse_csv(const std::string& text, const RoleMap& roles,
                          bool require_outcome) {
    std::size_t pos = 0;
    std::vector<std::string> header;
    if (!read_record(text, pos, header) || header.empty())
        throw MalformedCsv("missing header row");

    for (const auto& [name, spec] : roles) {
        (void)spec;
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw RoleConflict("role map names column '" + name +
                               "' which is not in the CSV header");
    }

    const std::size_t ncol = header.size();
    std::vector<Column> cols(ncol);
    for (std::size_t j = 0; j < ncol; ++j) {
        cols[j].name = header[j];
        auto it = roles.find(header[j]);
        if (it != roles.end()) {
            cols[j].role = it->second.role;
            cols[j].categorical = it->second.categorical;
            cols[j].levels = it->second.levels;
        }
    }

    std::vector<std::string> fields;
    std::size_t row = 0;
    while (read_record(text, pos, fields)) {
        if (fields.size() != ncol)
            throw MalformedCsv("row " + std::to_string(row + 1) + " has " +
                               std::to_string(fields.size()) + " fields, header has " +
                               std::to_string(ncol));
        for (std::size_t j = 0; j < ncol; ++j) {
            const std::string& cell = fields[j];
            Column& c = cols[j];
            if (cell.empty()) {
                c.values.push_back(std::nan(""));
            } else if (c.categorical) {
                auto lit = std::find(c.levels.begin(), c.levels.end(), cell);
                std::size_t code;
                if (lit == c.levels.end()) {
                    c.levels.push_back(cell);
                    code = c.levels.size() - 1;
                } else {
                    code = static_cast<std::size_t>(lit - c.levels.begin());
                }
                c.values.push_back(static_cast<double>(code));
            } else {
                c.values.push_back(parse_numeric(cell, c.name, row));
            }
        }
        ++row;
    }

    AnalysisDataset ds;
    for (auto& c : cols) ds.add_column(std::move(c));
    ds.validate_roles(require_outcome);
    return ds;
}

AnalysisDataset load_csv(const std::string& path, const RoleMap& roles,
                         bool require_outcome) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), roles, require_outcome);
}

std::string to_csv(const AnalysisDataset& ds) {
    std::string out;
    for (std::size_t j = 0; j < ds.n_cols(); ++j) {
        if (j) out += ',';
        const std::string& name = ds.col(j).name;
        out += needs_quoting(name) ? quote(name) : name;
    }
    out += '\n';
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        for (std::size_t j = 0; j < ds.n_cols(); ++j) {
            if (j) out += ',';
            const Column& c = ds.col(j);
            if (c.is_missing(r)) continue; // empty cell
            if (c.categorical) {
                const std::string& level = c.levels[static_cast<std::size_t>(c.values[r])];
                out += needs_quoting(level) ? quote(level) : level;
            } else {
                out += format_double(c.values[r]);
            }
        }
        out += '\n';
    }
    return out;
}

void write_csv(const AnalysisDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << to_csv(ds);
}

DesignMatrix build_design(const AnalysisDataset& ds,
                          const std::vector<std::string>& covariates,
                          const std::vector<Transform>& transforms,
                          const std::vector<std::size_t>& rows) {
    if (!transforms.empty() && transforms.size() != covariates.size())
        throw DimensionMismatch("transforms list length != covariate list length");

    std::vector<std::size_t> all_rows;
    const std::vector<std::size_t>* use_rows = &rows;
    if (rows.empty()) {
        all_rows.resize(ds.n_rows());
        for (std::size_t i = 0; i < ds.n_rows(); ++i) all_rows[i] = i;
        use_rows = &all_rows;
    }
    const std::size_t n = use_rows->size();

    // Count output columns.
    std::size_t p = 1;
    for (const auto& name : covariates) {
        const Column& c = ds.col(name);
        p += c.categorical ? std::max<std::size_t>(c.levels.size(), 1) - 1 : 1;
    }

    DesignMatrix dm;
    dm.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    dm.column_labels.reserve(p);
    dm.values.col(0).setOnes();
    dm.column_labels.push_back("(Intercept)");

    Eigen::Index jout = 1;
    for (std::size_t k = 0; k < covariates.size(); ++k) {
        const Column& c = ds.col(covariates[k]);
        const Transform tf = transforms.empty() ? Transform::None : transforms[k];
        if (c.categorical) {
            if (tf != Transform::None)
                throw ConfigError("transform requested for categorical column '" + c.name + "'");
            // dummy coding, reference = first declared level
            for (std::size_t lev = 1; lev < c.levels.size(); ++lev) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double v = c.values[(*use_rows)[i]];
                    dm.values(static_cast<Eigen::Index>(i), jout) =
                        (static_cast<std::size_t>(v) == lev) ? 1.0 : 0.0;
                }
                dm.column_labels.push_back(c.name + "=" + c.levels[lev]);
                ++jout;
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                double v = c.values[(*use_rows)[i]];
                if (tf == Transform::Log) {
                    if (!(v > 0.0))
                        throw NonPositiveLog("log transform of non-positive value in column '" +
                                             c.name + "'");
                    v = std::log(v);
                }
                dm.values(static_cast<Eigen::Index>(i), jout) = v;
            }
            dm.column_labels.push_back(tf == Transform::Log ? "log(" + c.name + ")" : c.name);
            ++jout;
        }
    }
    return dm;
}

SplitResult split_validation(const AnalysisDataset& ds) {
    auto flag_name = ds.column_with_role(ColumnRole::ValidationFlag);
    if (!flag_name)
        throw MissingValidationFlag("dataset has no ValidationFlag column");
    const Column& flag = ds.col(*flag_name);
    std::vector<std::size_t> val_rows;
    for (std::size_t r = 0; r < ds.n_rows(); ++r)
        if (flag.values[r] == 1.0) val_rows.push_back(r);
    if (val_rows.empty())
        throw MissingValidationData("no rows flagged validation=1");
    return SplitResult{ds.subset(val_rows), ds};
}

} // namespace rckit
