#pragma once


#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ddep/errors.hpp"
#include "ddep/rng.hpp"

namespace ddep {

/// Per-firm feasible price intervals [low[i], high[i]].
class PriceBox {
 public:
  PriceBox() = default;
  PriceBox(std::vector<double> low, std::vector<double> high)
      : low_(std::move(low)), high_(std::move(high)) {
    if (low_.size() != high_.size() || low_.empty())
      throw InvalidArgument("PriceBox: bounds must be non-empty and equal length");
    for (std::size_t i = 0; i < low_.size(); ++i) {
      if (!std::isfinite(low_[i]) || !std::isfinite(high_[i]) ||
          !(low_[i] < high_[i]))
        throw InvalidArgument("PriceBox: need low < high for firm " +
                              std::to_string(i));
    }
  }

  static PriceBox uniform(std::size_t n_firms, double low, double high) {
    return {std::vector<double>(n_firms, low), std::vector<double>(n_firms, high)};
  }

  std::size_t size() const noexcept { return low_.size(); }
  double low(std::size_t i) const { return low_.at(i); }
  double high(std::size_t i) const { return high_.at(i); }
  double clip(std::size_t i, double p) const {
    return std::clamp(p, low_[i], high_[i]);
  }

  bool contains(std::span<const double> p) const noexcept {
    if (p.size() != size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!(p[i] >= low_[i] && p[i] <= high_[i])) return false;
    return true;
  }

 private:
  std::vector<double> low_;
  std::vector<double> high_;
};

/// Prices of all firms in one period. Always inside its box.
class PriceVector {
 public:
  PriceVector() = default;

  /// Throws InvalidArgument when any price falls outside `box`.
  PriceVector(std::vector<double> prices, const PriceBox& box)
      : prices_(std::move(prices)) {
    if (!box.contains(prices_))
      throw InvalidArgument("PriceVector: prices outside the feasible box");
  }

  static PriceVector projected(std::vector<double> prices, const PriceBox& box) {
    if (prices.size() != box.size())
      throw InvalidArgument("PriceVector: size does not match box");
    for (std::size_t i = 0; i < prices.size(); ++i) {
      if (std::isnan(prices[i]))
        throw InvalidArgument("PriceVector: NaN price");
      prices[i] = box.clip(i, prices[i]);
    }
    return PriceVector(std::move(prices), box);
  }

  std::size_t size() const noexcept { return prices_.size(); }
  double operator[](std::size_t i) const { return prices_[i]; }
  std::span<const double> values() const noexcept { return prices_; }
  operator std::span<const double>() const noexcept { return prices_; }
  const std::vector<double>& to_vector() const noexcept { return prices_; }

  friend bool operator==(const PriceVector&, const PriceVector&) = default;

 private:
  std::vector<double> prices_;
};

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

struct MarketConfig {
  std::size_t n_firms = 0;
  PriceBox box;
  double noise_ratio = 0.0;  ///< kappa; sigma = kappa * mean demand at p*
  std::size_t horizon = 0;

  MarketConfig() = default;
  MarketConfig(std::size_t n, PriceBox b, double kappa, std::size_t t)
      : n_firms(n), box(std::move(b)), noise_ratio(kappa), horizon(t) {
    validate();
  }

  void validate() const {
    if (n_firms < 1) throw InvalidArgument("MarketConfig: need at least one firm");
    if (horizon < 1) throw InvalidArgument("MarketConfig: horizon must be >= 1");
    if (box.size() != n_firms)
      throw InvalidArgument("MarketConfig: box size does not match firm count");
    if (!(noise_ratio >= 0.0) || !std::isfinite(noise_ratio))
      throw InvalidArgument("MarketConfig: noise ratio must be finite and >= 0");
  }
};

/// Mean demand of each firm as a smooth function of the full price vector.
///
/// Implementations provide the analytic first partials and the own-price
/// second partial; the clairvoyant solvers need both for a Newton step on the
/// revenue first-order condition.
class DemandModel {
 public:
  virtual ~DemandModel() = default;

  virtual std::size_t n_firms() const noexcept = 0;
  /// lambda^i(p)
  virtual double mean(std::span<const double> p, std::size_t firm) const = 0;
  /// d lambda^firm / d p^wrt
  virtual double gradient(std::span<const double> p, std::size_t firm,
                          std::size_t wrt) const = 0;
  /// d^2 lambda^firm / d (p^firm)^2
  virtual double own_curvature(std::span<const double> p, std::size_t firm) const = 0;

  std::vector<double> means(std::span<const double> p) const {
    std::vector<double> out(n_firms());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mean(p, i);
    return out;
  }

  /// Expected revenue p^i * lambda^i(p).
  double revenue(std::span<const double> p, std::size_t firm) const {
    return p[firm] * mean(p, firm);
  }
};

struct MnlDemandParams {
  std::vector<double> alpha;
  std::vector<double> beta;

  void validate() const {
    if (alpha.empty() || alpha.size() != beta.size())
      throw InvalidArgument("MnlDemandParams: alpha/beta must be non-empty, equal length");
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (!std::isfinite(alpha[i]) || !std::isfinite(beta[i]))
        throw InvalidArgument("MnlDemandParams: non-finite parameter");
      if (!(beta[i] > 0.0))
        throw InvalidArgument("MnlDemandParams: beta must be positive");
    }
  }
};

/// Multinomial logit with an outside option:
///   lambda^i = exp(a_i - b_i p_i) / (1 + sum_k exp(a_k - b_k p_k)).
class MnlDemand final : public DemandModel {
 public:
  explicit MnlDemand(MnlDemandParams params) : params_(std::move(params)) {
    params_.validate();
  }

  const MnlDemandParams& params() const noexcept { return params_; }
  std::size_t n_firms() const noexcept override { return params_.alpha.size(); }

  double mean(std::span<const double> p, std::size_t firm) const override {
    // Shift utilities by their maximum (including the outside option's 0).
    const std::size_t n = n_firms();
    double shift = 0.0;
    for (std::size_t k = 0; k < n; ++k) shift = std::max(shift, utility(p, k));
    double denom = std::exp(-shift);
    for (std::size_t k = 0; k < n; ++k) denom += std::exp(utility(p, k) - shift);
    return std::exp(utility(p, firm) - shift) / denom;
  }

  double gradient(std::span<const double> p, std::size_t firm,
                  std::size_t wrt) const override {
    const double li = mean(p, firm);
    if (wrt == firm) return -params_.beta[firm] * li * (1.0 - li);
    return params_.beta[wrt] * li * mean(p, wrt);
  }

  double own_curvature(std::span<const double> p, std::size_t firm) const override {
    const double li = mean(p, firm);
    const double b = params_.beta[firm];
    return b * b * li * (1.0 - li) * (1.0 - 2.0 * li);
  }

 private:
  double utility(std::span<const double> p, std::size_t k) const {
    return params_.alpha[k] - params_.beta[k] * p[k];
  }

  MnlDemandParams params_;
};

struct LinearDemandParams {
  std::vector<double> intercept;               ///< a^i
  std::vector<double> own_slope;               ///< b^i > 0
  std::vector<std::vector<double>> cross_slope;  ///< c^{ij} >= 0, zero diagonal

  /// a^i = a, b^i = b, c^{ij} = c for every pair.
  static LinearDemandParams symmetric(std::size_t n, double a, double b, double c) {
    LinearDemandParams out;
    out.intercept.assign(n, a);
    out.own_slope.assign(n, b);
    out.cross_slope.assign(n, std::vector<double>(n, c));
    for (std::size_t i = 0; i < n; ++i) out.cross_slope[i][i] = 0.0;
    return out;
  }

  void validate() const {
    const std::size_t n = intercept.size();
    if (n == 0 || own_slope.size() != n || cross_slope.size() != n)
      throw InvalidArgument("LinearDemandParams: inconsistent sizes");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(own_slope[i] > 0.0) || !std::isfinite(intercept[i]))
        throw InvalidArgument("LinearDemandParams: own slope must be positive");
      if (cross_slope[i].size() != n)
        throw InvalidArgument("LinearDemandParams: cross slope must be square");
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j ? cross_slope[i][j] != 0.0 : !(cross_slope[i][j] >= 0.0))
          throw InvalidArgument("LinearDemandParams: cross slopes must be >= 0 with zero diagonal");
      }
    }
  }
};

/// lambda^i = a^i - b^i p^i + sum_j c^{ij} p^j. Matches the estimator's
/// functional form exactly.
class LinearDemand final : public DemandModel {
 public:
  explicit LinearDemand(LinearDemandParams params) : params_(std::move(params)) {
    params_.validate();
  }

  const LinearDemandParams& params() const noexcept { return params_; }
  std::size_t n_firms() const noexcept override { return params_.intercept.size(); }

  double mean(std::span<const double> p, std::size_t firm) const override {
    double d = params_.intercept[firm] - params_.own_slope[firm] * p[firm];
    const auto& row = params_.cross_slope[firm];
    for (std::size_t j = 0; j < row.size(); ++j)
      if (j != firm) d += row[j] * p[j];
    return d;
  }

  double gradient(std::span<const double>, std::size_t firm,
                  std::size_t wrt) const override {
    return wrt == firm ? -params_.own_slope[firm] : params_.cross_slope[firm][wrt];
  }

  double own_curvature(std::span<const double>, std::size_t) const override {
    return 0.0;
  }

 private:
  LinearDemandParams params_;
};

/// Additive Gaussian demand shocks, identical sigma for every firm.
struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;

  NoiseSpec() = default;
  NoiseSpec(double s, std::uint64_t sd) : sigma(s), seed(sd) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
      throw InvalidArgument("NoiseSpec: sigma must be finite and >= 0");
  }

  /// The shock epsilon^firm_period; a pure function of (seed, period, firm).
  double shock(std::size_t period, std::size_t firm) const {
    if (sigma == 0.0) return 0.0;
    return sigma * rng::standard_normal(seed, period, firm);
  }
};

/// D^i_t = lambda^i(p) + epsilon^i_t; negative realizations are kept.
inline std::vector<double> realize_demand(const DemandModel& model,
                                          const NoiseSpec& noise,
                                          std::span<const double> p,
                                          std::size_t period) {
  std::vector<double> d = model.means(p);
  if (noise.sigma > 0.0)
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += noise.shock(period, i);
  return d;
}

struct ConcavityReport {
  std::size_t checked = 0;
  std::size_t violations = 0;        ///< (point, firm) pairs with positive own curvature
  double worst_curvature = -1e300;  ///< largest d^2 r^i / d(p^i)^2 seen
};

/// Samples points uniformly in the box and checks that each firm's revenue
/// p^i lambda^i(p) is concave in its own price, by central second differences.
/// Violations are counted, never thrown.
inline ConcavityReport check_revenue_concavity(const DemandModel& model,
                                               const PriceBox& box,
                                               std::size_t samples,
                                               std::uint64_t seed,
                                               double step = 1e-4,
                                               double tol = 1e-7) {
  const std::size_t n = model.n_firms();
  ConcavityReport report;
  std::vector<double> p(n);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < n; ++k) {
      const double lo = box.low(k) + 2 * step, hi = box.high(k) - 2 * step;
      p[k] = rng::uniform(lo, hi, seed, s, k, 0xC0C0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto q = p;
      const double mid = model.revenue(q, i);
      q[i] = p[i] + step;
      const double up = model.revenue(q, i);
      q[i] = p[i] - step;
      const double dn = model.revenue(q, i);
      const double curvature = (up - 2 * mid + dn) / (step * step);
      report.worst_curvature = std::max(report.worst_curvature, curvature);
      ++report.checked;
      if (curvature > tol) ++report.violations;
    }
  }
  return report;
}

}  // namespace ddep
