#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/problem.hpp"

namespace portopt {

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty())
    throw DataError("expected a non-empty matrix");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols)
      throw DataError("ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]
                    .get<double>();
  }
  return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace detail

/// Schema: {N, N_t, N_q, K, gamma, lambda, rho, mu: [[...]] (N x N_t),
/// sigma: [[[...]]] (N_t matrices of N x N), extensions: {...}}.
inline nlohmann::json problem_to_json(const ProblemSpec& spec) {
  nlohmann::json j{{"N", spec.num_assets},
                   {"N_t", spec.num_steps},
                   {"N_q", spec.bits_per_holding},
                   {"K", spec.total_investment},
                   {"gamma", spec.gamma},
                   {"lambda", spec.lambda},
                   {"rho", spec.rho},
                   {"mu", detail::matrix_to_json(spec.mu)}};
  nlohmann::json sig = nlohmann::json::array();
  for (const auto& s : spec.sigma) sig.push_back(detail::matrix_to_json(s));
  j["sigma"] = sig;
  nlohmann::json ext = nlohmann::json::object();
  if (spec.initial_holdings.size() > 0)
    ext["initial_holdings"] = detail::vector_to_json(spec.initial_holdings);
  if (spec.lambda_per_asset)
    ext["lambda_per_asset"] = detail::vector_to_json(*spec.lambda_per_asset);
  if (spec.market_impact)
    ext["market_impact"] =
        detail::matrix_to_json(spec.market_impact->coefficients);
  if (spec.exact_cost)
    ext["exact_linear_cost"] = {
        {"nu", detail::matrix_to_json(spec.exact_cost->rates)},
        {"rho_prime", spec.exact_cost->rho_prime}};
  if (spec.rule_10_5_40)
    ext["rule_10_5_40"] = {
        {"slack_bits", spec.rule_10_5_40->slack_bits},
        {"rho_prime", spec.rule_10_5_40->rho_prime},
        {"rho_double_prime", spec.rule_10_5_40->rho_double_prime}};
  j["extensions"] = ext;
  return j;
}

inline ProblemSpec problem_from_json(const nlohmann::json& j) {
  ProblemSpec spec;
  try {
    spec.num_assets = j.at("N").get<int>();
    spec.num_steps = j.at("N_t").get<int>();
    spec.bits_per_holding = j.at("N_q").get<int>();
    spec.total_investment = j.at("K").get<long>();
    spec.gamma = j.at("gamma").get<double>();
    spec.lambda = j.at("lambda").get<double>();
    spec.rho = j.at("rho").get<double>();
    spec.mu = detail::matrix_from_json(j.at("mu"));
    for (const auto& s : j.at("sigma"))
      spec.sigma.push_back(detail::matrix_from_json(s));
    if (j.contains("extensions")) {
      const auto& ext = j["extensions"];
      if (ext.contains("initial_holdings"))
        spec.initial_holdings = detail::vector_from_json(ext["initial_holdings"]);
      if (ext.contains("lambda_per_asset"))
        spec.lambda_per_asset = detail::vector_from_json(ext["lambda_per_asset"]);
      if (ext.contains("market_impact"))
        spec.market_impact =
            MarketImpact{detail::matrix_from_json(ext["market_impact"])};
      if (ext.contains("exact_linear_cost"))
        spec.exact_cost = ExactLinearCost{
            detail::matrix_from_json(ext["exact_linear_cost"]["nu"]),
            ext["exact_linear_cost"].value("rho_prime", 0.0)};
      if (ext.contains("rule_10_5_40"))
        spec.rule_10_5_40 = Rule105040{
            ext["rule_10_5_40"].value("slack_bits", 4),
            ext["rule_10_5_40"].value("rho_prime", 0.0),
            ext["rule_10_5_40"].value("rho_double_prime", 0.0)};
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid problem JSON: ") + e.what());
  }
  spec.validate();
  return spec;
}

}  // namespace portopt
