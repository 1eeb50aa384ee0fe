#pragma once

#include "dynqr/backtest.hpp"
#include "dynqr/dgp.hpp"
#include "dynqr/fitter.hpp"
#include "dynqr/scoring.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace dynqr::cli {

/// Column labels of the design: intercept, lagged-y term(s), exogenous names.
[[nodiscard]] std::vector<std::string> covariate_names(const ModelSpec& spec, const std::vector<std::string>& exog_names);

[[nodiscard]] nlohmann::json coefficients_json(const CoefficientSet& c, const QuantileGrid& grid,
                                               const std::vector<std::string>& covariates);
/// Inverse of coefficients_json.
[[nodiscard]] CoefficientSet coefficients_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::json fit_json(const fitter::FitResult& fit, const QuantileGrid& grid,
                                      const std::vector<std::string>& covariates);

/// Two variants x four schemes.
[[nodiscard]] nlohmann::json scores_json(const scoring::ScoreReport& unsorted, const scoring::ScoreReport& sorted);

[[nodiscard]] std::string dump(const nlohmann::json& j);

/// Machine-readable error document written to stderr on failure.
[[nodiscard]] std::string error_json(const std::string& kind, const std::string& message);

}  // namespace dynqr::cli
