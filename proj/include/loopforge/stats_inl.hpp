#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace loopforge {

template <class Cdf>
double ks_one_sample_p_value(std::vector<double> xs, Cdf&& cdf) {
  if (xs.empty()) throw std::domain_error("ks: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return ks_p_from_statistic(d, n);
}

template <class Stat>
double bootstrap_stderr(const std::vector<std::vector<double>>& groups, int resamples, Rng& rng,
                        Stat&& stat) {
  if (resamples < 2) return 0.0;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(resamples));
  std::vector<std::vector<double>> draw(groups.size());
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto& src = groups[g];
      draw[g].resize(src.size());
      for (auto& v : draw[g]) v = src[uniform_below(rng, src.size())];
    }
    values.push_back(stat(draw));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace loopforge
