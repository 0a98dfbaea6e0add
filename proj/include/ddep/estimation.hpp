#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ddep/errors.hpp"
#include "ddep/market.hpp"

namespace ddep {

/// Which firms' prices enter the fitted demand curves.
///
/// Full mode regresses every firm's demand on all N prices. Partial mode
/// models only the first `n_prime` (uninformed) firms and drops the
/// clairvoyant firms' prices from the regressors entirely.
struct FitMode {
  bool partial = false;
  std::size_t n_prime = 0;

  static FitMode full() noexcept { return {}; }
  static FitMode partial_over(std::size_t n_prime) noexcept { return {true, n_prime}; }

  std::size_t modeled_firms(std::size_t n_firms) const noexcept {
    return partial ? n_prime : n_firms;
  }
};

struct Observation {
  PriceVector prices;
  std::vector<double> demand;
};

/// Every (price, demand) pair of one stage, in play order.
struct StageObservations {
  std::vector<Observation> rows;
  std::size_t interval_len = 0;
  std::size_t n_intervals = 0;
  double delta = 0.0;

  void validate() const {
    if (!(delta > 0.0)) throw InvalidArgument("StageObservations: delta must be positive");
    if (rows.size() != n_intervals * interval_len)
      throw InvalidArgument("StageObservations: expected " +
                            std::to_string(n_intervals * interval_len) + " rows, got " +
                            std::to_string(rows.size()));
    if (rows.empty()) throw InvalidArgument("StageObservations: no rows");
  }
};

/// Fitted affine demand for the modeled firms:
///   lambda_hat^i(p) = alpha^i - beta(i,i) p^i + sum_{j != i} beta(i,j) p^j,
/// with j ranging over modeled firms only. beta(i,i) is stored as the positive
/// own-price sensitivity.
struct EstimatedDemand {
  std::size_t n_firms = 0;  ///< firms in the market
  FitMode mode;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd beta;  ///< modeled x modeled

  std::size_t modeled() const noexcept { return static_cast<std::size_t>(alpha.size()); }

  double own(std::size_t i) const { return beta(Eigen::Index(i), Eigen::Index(i)); }
  double cross(std::size_t i, std::size_t j) const {
    return beta(Eigen::Index(i), Eigen::Index(j));
  }

  /// alpha^i + sum_{j != i} beta(i,j) p^j: the demand intercept firm i faces.
  double effective_intercept(std::span<const double> p, std::size_t i) const {
    double a = alpha(Eigen::Index(i));
    for (std::size_t j = 0; j < modeled(); ++j)
      if (j != i) a += cross(i, j) * p[j];
    return a;
  }
};

/// Evaluates the affine fit. Prices of unmodeled firms are ignored.
inline double predict(const EstimatedDemand& est, std::span<const double> p,
                      std::size_t firm) {
  if (firm >= est.modeled())
    throw InvalidArgument("predict: firm " + std::to_string(firm) + " is not modeled");
  return est.effective_intercept(p, firm) - est.own(firm) * p[firm];
}

/// Ordinary least squares of each modeled firm's demand on an intercept and the
/// modeled firms' prices, using only this stage's rows.
///
/// The Gram matrix of the mean-centred regressors is factored with LLT; on
/// failure it is retried once with 1e-10 added to the diagonal. A regressor
/// that never varies within the stage is a schedule bug and raises
/// SingularDesign directly.
inline EstimatedDemand fit_stage(const StageObservations& obs, FitMode mode) {
  obs.validate();
  const std::size_t n = obs.rows.front().prices.size();
  const std::size_t k = mode.modeled_firms(n);
  if (k > n) throw InvalidArgument("fit_stage: n_prime exceeds firm count");

  EstimatedDemand est;
  est.n_firms = n;
  est.mode = mode;
  est.alpha = Eigen::VectorXd::Zero(Eigen::Index(k));
  est.beta = Eigen::MatrixXd::Zero(Eigen::Index(k), Eigen::Index(k));
  if (k == 0) return est;

  const auto rows = Eigen::Index(obs.rows.size());
  const auto kk = Eigen::Index(k);
  Eigen::MatrixXd x(rows, kk);
  Eigen::MatrixXd y(rows, kk);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = obs.rows[std::size_t(r)];
    if (row.prices.size() != n || row.demand.size() != n)
      throw InvalidArgument("fit_stage: ragged observation rows");
    for (Eigen::Index j = 0; j < kk; ++j) {
      x(r, j) = row.prices[std::size_t(j)];
      y(r, j) = row.demand[std::size_t(j)];
    }
  }

  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const Eigen::RowVectorXd y_mean = y.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::MatrixXd yc = y.rowwise() - y_mean;

  Eigen::MatrixXd gram = xc.transpose() * xc;
  for (Eigen::Index j = 0; j < kk; ++j)
    if (!(gram(j, j) > 0.0))
      throw SingularDesign("fit_stage: price of firm " + std::to_string(j) +
                           " never varies within the stage");

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    gram.diagonal().array() += 1e-10;
    llt.compute(gram);
    if (llt.info() != Eigen::Success)
      throw SingularDesign("fit_stage: normal equations not positive definite");
  }
  // slopes(j, i): coefficient on p^j in firm i's regression.
  const Eigen::MatrixXd slopes = llt.solve(xc.transpose() * yc);
  if (!slopes.allFinite()) throw SingularDesign("fit_stage: non-finite solution");

  for (Eigen::Index i = 0; i < kk; ++i) {
    est.alpha(i) = y_mean(i) - x_mean.dot(slopes.col(i));
    for (Eigen::Index j = 0; j < kk; ++j)
      est.beta(i, j) = (i == j) ? -slopes(j, i) : slopes(j, i);
  }
  return est;
}

/// Raises every own sensitivity below `floor` to `floor` so the estimated
/// revenue stays strictly concave. Returns the number of clamped firms.
inline std::size_t clamp_own_sensitivity(EstimatedDemand& est, double floor = 1e-6) {
  std::size_t clamped = 0;
  for (Eigen::Index i = 0; i < est.beta.rows(); ++i) {
    if (!(est.beta(i, i) > 0.0)) {
      est.beta(i, i) = floor;
      ++clamped;
    }
  }
  return clamped;
}

}  // namespace ddep
