#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "loopforge/rng.hpp"

namespace loopforge {

// Result of any Monte Carlo quantity.
struct EstimatorReport {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  std::string fingerprint;  // canonical "key=value;..." description of the run
};

// Least-squares fit of log y against log x.
struct ExponentFit {
  struct Point {
    double log_x;
    double log_y;
    double weight;
  };
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
  std::vector<Point> points;
};

struct LineFit {
  double slope;
  double intercept;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y);

// Unweighted fit on (log x, log y); stderr left at zero.
ExponentFit fit_exponent(std::span<const double> x, std::span<const double> y);

// Binomial estimate with stderr sqrt(p(1-p)/n).
EstimatorReport binomial_report(std::uint64_t successes, std::uint64_t trials,
                                std::string fingerprint = {});

// Sample mean with stderr s/sqrt(n).
EstimatorReport mean_report(std::span<const double> values, std::string fingerprint = {});

// Pearson chi-square goodness of fit. Returns the upper-tail p-value with
// (cells - 1) degrees of freedom.
double chi_square_p_value(std::span<const std::uint64_t> observed,
                          std::span<const double> probabilities);

// Asymptotic Kolmogorov distribution upper tail Q(lambda).
double kolmogorov_q(double lambda);

// Two-sample Kolmogorov-Smirnov test; returns the asymptotic p-value.
double ks_two_sample_p_value(std::vector<double> a, std::vector<double> b);

// One-sample Kolmogorov-Smirnov test against a continuous CDF.
template <class Cdf>
double ks_one_sample_p_value(std::vector<double> xs, Cdf&& cdf);

double ks_p_from_statistic(double d, double effective_n);

// Quantile of a sample (linear interpolation between order statistics).
double quantile(std::vector<double> xs, double q);

// FNV-1a over a string, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

// Bootstrap standard error of a statistic of several independent groups:
// each group is resampled with replacement, `stat` is recomputed.
template <class Stat>
double bootstrap_stderr(const std::vector<std::vector<double>>& groups, int resamples, Rng& rng,
                        Stat&& stat);

}  // namespace loopforge

#include "loopforge/stats_inl.hpp"
