#include "loopforge/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace loopforge {

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::domain_error("least_squares: need >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::domain_error("least_squares: degenerate abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

ExponentFit fit_exponent(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw std::domain_error("fit_exponent: need >= 3 points");
  ExponentFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::domain_error("fit_exponent: non-positive value");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
    fit.points.push_back({lx.back(), ly.back(), 1.0});
  }
  const LineFit line = least_squares(lx, ly);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  return fit;
}

EstimatorReport binomial_report(std::uint64_t successes, std::uint64_t trials,
                                std::string fingerprint) {
  if (trials == 0) throw std::domain_error("binomial_report: zero trials");
  const double p = static_cast<double>(successes) / static_cast<double>(trials);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials)), trials, std::move(fingerprint)};
}

EstimatorReport mean_report(std::span<const double> values, std::string fingerprint) {
  if (values.empty()) throw std::domain_error("mean_report: no samples");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {mean, sd / std::sqrt(n), values.size(), std::move(fingerprint)};
}

double chi_square_p_value(std::span<const std::uint64_t> observed,
                          std::span<const double> probabilities) {
  if (observed.size() != probabilities.size() || observed.size() < 2)
    throw std::domain_error("chi_square: need >= 2 matching cells");
  const double total = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::uint64_t{0}));
  if (total == 0.0) throw std::domain_error("chi_square: no observations");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = total * probabilities[i];
    if (e <= 0.0) {
      if (observed[i] != 0) return 0.0;
      continue;
    }
    const double diff = static_cast<double>(observed[i]) - e;
    stat += diff * diff / e;
  }
  const double dof = static_cast<double>(observed.size() - 1);
  return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double ks_p_from_statistic(double d, double effective_n) {
  const double sn = std::sqrt(effective_n);
  return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

double ks_two_sample_p_value(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::domain_error("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return ks_p_from_statistic(d, na * nb / (na + nb));
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::domain_error("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace loopforge
