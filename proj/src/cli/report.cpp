#include "dynqr/cli/report.hpp"

#include <stdexcept>

namespace dynqr::cli {

using nlohmann::json;

std::vector<std::string> covariate_names(const ModelSpec& spec, const std::vector<std::string>& exog_names) {
    std::vector<std::string> names{"intercept"};
    if (spec.lag_y >= 1) {
        if (spec.asymmetric_slope) {
            names.emplace_back("y_lag1_pos");
            names.emplace_back("y_lag1_neg");
        } else {
            names.emplace_back("y_lag1");
        }
    }
    for (std::size_t c : spec.exog_columns) {
        names.push_back(c < exog_names.size() ? exog_names[c] : "exog" + std::to_string(c));
    }
    return names;
}

json coefficients_json(const CoefficientSet& c, const QuantileGrid& grid, const std::vector<std::string>& covariates) {
    json beta = json::array();
    json theta = json::array();
    for (Eigen::Index q = 0; q < c.beta.rows(); ++q) {
        json b = json::array();
        for (Eigen::Index k = 0; k < c.beta.cols(); ++k) {
            b.push_back(c.beta(q, k));
        }
        beta.push_back(b);
        json t = json::array();
        for (Eigen::Index l = 0; l < c.theta.cols(); ++l) {
            t.push_back(c.theta(q, l));
        }
        theta.push_back(t);
    }
    return json{{"quantiles", grid.levels()}, {"covariates", covariates}, {"beta", beta}, {"theta", theta}};
}

CoefficientSet coefficients_from_json(const json& j) {
    const auto beta = j.at("beta").get<std::vector<std::vector<double>>>();
    const auto theta = j.at("theta").get<std::vector<std::vector<double>>>();
    if (beta.empty() || beta.size() != theta.size()) {
        throw std::invalid_argument("coefficient JSON: beta and theta must have one row per quantile");
    }
    CoefficientSet c(beta.size(), beta.front().size(), theta.front().size());
    for (std::size_t q = 0; q < beta.size(); ++q) {
        if (beta[q].size() != c.num_covariates() || theta[q].size() != c.quantile_lags()) {
            throw std::invalid_argument("coefficient JSON: ragged rows");
        }
        for (std::size_t k = 0; k < beta[q].size(); ++k) {
            c.beta(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(k)) = beta[q][k];
        }
        for (std::size_t l = 0; l < theta[q].size(); ++l) {
            c.theta(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(l)) = theta[q][l];
        }
    }
    return c;
}

json fit_json(const fitter::FitResult& fit, const QuantileGrid& grid, const std::vector<std::string>& covariates) {
    json j = coefficients_json(fit.coefficients, grid, covariates);
    j["lambda"] = fit.lambda;
    j["objective"] = fit.objective_value;
    j["pinball"] = fit.pinball_component;
    j["penalty"] = fit.penalty_component;
    j["crossing_incidence_pct"] = fit.crossing_incidence_pct;
    j["packed"] = fitter::pack(fit.coefficients);
    j["optimizer"] = json{{"termination", std::string(optim::to_string(fit.optim_diagnostics.termination))},
                          {"evaluations", fit.optim_diagnostics.evaluations},
                          {"generations", fit.optim_diagnostics.generations}};
    return j;
}

namespace {

json variant_json(const scoring::ScoreReport& r) {
    json j = json::object();
    for (auto s : scoring::kAllSchemes) {
        j[std::string(scoring::to_string(s))] = r.score(s);
    }
    return j;
}

}  // namespace

json scores_json(const scoring::ScoreReport& unsorted, const scoring::ScoreReport& sorted) {
    return json{{"unsorted", variant_json(unsorted)}, {"sorted", variant_json(sorted)}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string error_json(const std::string& kind, const std::string& message) {
    return json{{"error", {{"kind", kind}, {"message", message}}}}.dump() + "\n";
}

}  // namespace dynqr::cli
