#pragma once

#include <stdexcept>
#include <string>

namespace rckit {

// Error categories map onto CLI exit codes: validation errors exit 1,
// numerical failures exit 2.
enum class ErrorCategory { Config, Validation, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), category_(cat) {}
    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorCategory::Config, m) {}
};

// dataset
struct MalformedCsv : Error {
    explicit MalformedCsv(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};
struct RoleConflict : Error {
    explicit RoleConflict(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};
struct UnknownColumn : Error {
    explicit UnknownColumn(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};
struct NonPositiveLog : Error {
    explicit NonPositiveLog(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};
struct MissingValidationFlag : Error {
    explicit MissingValidationFlag(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};
struct MissingValidationData : Error {
    explicit MissingValidationData(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};

// glm
struct RankDeficient : Error {
    explicit RankDeficient(const std::string& m) : Error(ErrorCategory::Numerical, m) {}
};
struct NonConvergence : Error {
    explicit NonConvergence(const std::string& m) : Error(ErrorCategory::Numerical, m) {}
};
struct Separation : Error {
    explicit Separation(const std::string& m) : Error(ErrorCategory::Numerical, m) {}
};
struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};

// calibration
struct InsufficientValidationRows : Error {
    explicit InsufficientValidationRows(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};
struct TooFewDistinctValues : Error {
    explicit TooFewDistinctValues(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};

// rc
struct AlignmentError : Error {
    explicit AlignmentError(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};
struct LambdaNearZero : Error {
    explicit LambdaNearZero(const std::string& m) : Error(ErrorCategory::Numerical, m) {}
};

// variance
struct TooManyFailedReplicates : Error {
    explicit TooManyFailedReplicates(const std::string& m) : Error(ErrorCategory::Numerical, m) {}
};
struct SingularA : Error {
    explicit SingularA(const std::string& m) : Error(ErrorCategory::Numerical, m) {}
};

// mediation
struct MissingReplicates : Error {
    explicit MissingReplicates(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};
struct ZeroDenominator : Error {
    explicit ZeroDenominator(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};
struct InvalidR2 : Error {
    explicit InvalidR2(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};

// samplesize / generic argument validation
struct InvalidInput : Error {
    explicit InvalidInput(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};

// survey
struct SingletonStratum : Error {
    explicit SingletonStratum(const std::string& m) : Error(ErrorCategory::Validation, m) {}
};

} // namespace rckit
