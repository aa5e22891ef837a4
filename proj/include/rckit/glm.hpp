#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rckit/dataset.hpp"

namespace rckit {

enum class ModelFamily { Linear, Logistic };

std::string family_name(ModelFamily f);

struct GlmFit {
    ModelFamily family = ModelFamily::Linear;
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd vcov_model; // sigma^2 (X'WX)^-1 or (X'WX)^-1 at convergence
    std::vector<std::string> column_labels;
    std::size_t n_used = 0;
    bool converged = false;
    int iterations = 0;
    bool weights_used = false;
    double sigma2 = 0.0;   // residual variance estimate (linear family)
    double deviance = 0.0; // -2 loglik up to constant (logistic)

    double coefficient(const std::string& label) const; // throws UnknownColumn
    double se(const std::string& label) const;
    Eigen::Index label_index(const std::string& label) const;
};

enum class PredictScale { LinearPredictor, Response };

namespace glm {

// Weighted GLM fit. Linear family solves weighted least squares by
// column-pivoted QR; logistic runs IRLS with the canonical logit link.
// Weights may be fractional (survey weights); zero-weight rows are kept but
// contribute nothing.
GlmFit fit(ModelFamily family, const Eigen::VectorXd& y, const DesignMatrix& design,
           const std::optional<Eigen::VectorXd>& weights = std::nullopt);

Eigen::VectorXd predict(const GlmFit& fit, const DesignMatrix& design,
                        PredictScale scale = PredictScale::LinearPredictor);

inline double expit(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

} // namespace glm

} // namespace rckit
