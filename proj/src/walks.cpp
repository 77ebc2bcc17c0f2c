#include "loopforge/walks.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace loopforge {

std::vector<Site> Domain::interior() const {
  std::vector<Site> out;
  for (const auto& off : ball_offsets(dim(), radius)) {
    Site x = center + off;
    if (contains(x)) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void WalkConfig::validate() const {
  if (dim < 1 || dim > kMaxDim) throw std::domain_error("WalkConfig: dimension out of range");
  if (!(radius >= 1.0)) throw std::domain_error("WalkConfig: radius must be >= 1");
}

LatticePath sample_srw_until_exit(const Site& start, const Domain& domain, Rng& rng) {
  const auto dirs = static_cast<std::uint64_t>(2 * start.dim);
  std::vector<Site> path{start};
  Site cur = start;
  std::uint64_t steps = 0;
  while (domain.contains(cur)) {
    if (++steps > kStepCap) throw std::runtime_error("random walk exceeded the step cap");
    cur = neighbor(cur, static_cast<int>(uniform_below(rng, dirs)));
    path.push_back(cur);
  }
  return LatticePath(std::move(path));
}

LatticePath sample_lerw_until_exit(const Site& start, const Domain& domain, Rng& rng) {
  const auto dirs = static_cast<std::uint64_t>(2 * start.dim);
  std::vector<Site> path{start};
  absl::flat_hash_map<Site, std::size_t> index;
  index.emplace(start, 0);
  Site cur = start;
  std::uint64_t steps = 0;
  while (domain.contains(cur)) {
    if (++steps > kStepCap) throw std::runtime_error("random walk exceeded the step cap");
    cur = neighbor(cur, static_cast<int>(uniform_below(rng, dirs)));
    auto it = index.find(cur);
    if (it != index.end()) {
      const std::size_t keep = it->second + 1;
      for (std::size_t j = keep; j < path.size(); ++j) index.erase(path[j]);
      path.resize(keep);
    } else {
      index.emplace(cur, path.size());
      path.push_back(cur);
    }
  }
  return LatticePath(std::move(path));
}

LatticePath sample_srw_stopped(const WalkConfig& cfg, Rng& rng) {
  cfg.validate();
  return sample_srw_until_exit(Site::origin(cfg.dim), cfg.domain(), rng);
}

LatticePath sample_lerw(const WalkConfig& cfg, Rng& rng) {
  cfg.validate();
  return sample_lerw_until_exit(Site::origin(cfg.dim), cfg.domain(), rng);
}

namespace {

void check_return_args(int d, std::int64_t n) {
  if (d < 1 || d > kMaxDim) throw std::domain_error("return_probability: dimension out of range");
  if (n < 0) throw std::domain_error("return_probability: negative step count");
  if (n > kMaxReturnSteps) throw std::domain_error("return_probability: n > 1e6 rejected");
}

// log p^{(1)}_{2k}(0,0) = log C(2k,k) - 2k log 2, from a log-factorial table.
double log_p1(const std::vector<double>& lf, std::int64_t k) {
  return lf[static_cast<std::size_t>(2 * k)] - 2.0 * lf[static_cast<std::size_t>(k)] -
         2.0 * static_cast<double>(k) * std::log(2.0);
}

std::vector<double> log_factorials(std::int64_t upto) {
  std::vector<double> lf(static_cast<std::size_t>(upto + 1));
  for (std::int64_t k = 0; k <= upto; ++k) lf[static_cast<std::size_t>(k)] = std::lgamma(static_cast<double>(k) + 1.0);
  return lf;
}

// One step of the dimension recursion: a d-dimensional walk of 2n steps moves
// coordinate 1 in 2k of them (binomial with q = 1/d), and the other d-1
// coordinates form a (d-1)-dimensional walk of 2n-2k steps.
double mix_dimension(int d, std::int64_t n, const std::vector<double>& lf,
                     const std::vector<double>& log_lower) {
  const double lq = std::log(1.0 / d);
  const double lr = std::log1p(-1.0 / d);
  double max_term = -INFINITY;
  std::vector<double> terms(static_cast<std::size_t>(n + 1));
  for (std::int64_t k = 0; k <= n; ++k) {
    const double t = lf[static_cast<std::size_t>(2 * n)] - lf[static_cast<std::size_t>(2 * k)] -
                     lf[static_cast<std::size_t>(2 * n - 2 * k)] + 2.0 * static_cast<double>(k) * lq +
                     2.0 * static_cast<double>(n - k) * lr + log_p1(lf, k) +
                     log_lower[static_cast<std::size_t>(n - k)];
    terms[static_cast<std::size_t>(k)] = t;
    max_term = std::max(max_term, t);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - max_term);
  return max_term + std::log(s);
}

std::vector<double> log_return_table(int d, std::int64_t n_max, const std::vector<double>& lf) {
  std::vector<double> out(static_cast<std::size_t>(n_max + 1));
  if (d == 1 || d == 2) {
    for (std::int64_t k = 0; k <= n_max; ++k) out[static_cast<std::size_t>(k)] = d * log_p1(lf, k);
    return out;
  }
  const auto lower = log_return_table(d - 1, n_max, lf);
  for (std::int64_t n = 0; n <= n_max; ++n) out[static_cast<std::size_t>(n)] = mix_dimension(d, n, lf, lower);
  return out;
}

}  // namespace

std::vector<double> return_probabilities(int d, std::int64_t n_max) {
  check_return_args(d, n_max);
  const auto lf = log_factorials(2 * n_max);
  auto logs = log_return_table(d, n_max, lf);
  for (auto& v : logs) v = std::exp(v);
  return logs;
}

double return_probability(int d, std::int64_t n) {
  check_return_args(d, n);
  if (n == 0) return 1.0;
  const auto lf = log_factorials(2 * n);
  if (d <= 2) return std::exp(d * log_p1(lf, n));
  const auto lower = log_return_table(d - 1, n, lf);
  return std::exp(mix_dimension(d, n, lf, lower));
}

namespace {

// log W_j(s) for j = 1..d-1 and s = 0..size-1, where
// W_j(s) = sum over k_1 + ... + k_j = s of prod 1 / (k_i!)^2.
// Grown on demand; values do not depend on the requested size.
const std::vector<std::vector<double>>& log_allocation_weights(int d, std::int64_t s_max) {
  thread_local std::array<std::vector<std::vector<double>>, kMaxDim + 1> cache;
  auto& tab = cache[static_cast<std::size_t>(d)];
  const auto need = static_cast<std::size_t>(s_max + 1);
  if (!tab.empty() && tab[0].size() >= need) return tab;
  const std::size_t size = std::max(need, tab.empty() ? std::size_t{64} : 2 * tab[0].size());
  const auto lf = log_factorials(static_cast<std::int64_t>(size));
  tab.assign(static_cast<std::size_t>(std::max(d - 1, 1)), std::vector<double>(size));
  for (std::size_t s = 0; s < size; ++s) tab[0][s] = -2.0 * lf[s];
  for (std::size_t j = 1; j + 1 < static_cast<std::size_t>(d); ++j) {
    for (std::size_t s = 0; s < size; ++s) {
      double hi = -INFINITY;
      for (std::size_t k = 0; k <= s; ++k) hi = std::max(hi, -2.0 * lf[k] + tab[j - 1][s - k]);
      double acc = 0.0;
      for (std::size_t k = 0; k <= s; ++k) acc += std::exp(-2.0 * lf[k] + tab[j - 1][s - k] - hi);
      tab[j][s] = hi + std::log(acc);
    }
  }
  return tab;
}

}  // namespace

// A closed walk with 2k_i steps in coordinate i has probability proportional
// to (2n)! / prod (2k_i)! (arrangements) times prod C(2k_i, k_i) (sign
// patterns), i.e. to prod 1 / (k_i!)^2. Draw k coordinate by coordinate from
// that law, then arrange the moves uniformly.
CoordinateAllocation sample_coordinate_allocation(int d, std::int64_t m, Rng& rng) {
  if (d < 1 || d > kMaxDim) throw std::domain_error("bridge: dimension out of range");
  if (m < 0 || m % 2 != 0) throw std::domain_error("bridge: length must be even and non-negative");
  CoordinateAllocation a;
  std::int64_t left = m / 2;
  if (d > 1) {
    const auto& w = log_allocation_weights(d, left);
    std::vector<double> weights;
    for (int i = 0; i + 1 < d && left > 0; ++i) {
      const auto& rest = w[static_cast<std::size_t>(d - 2 - i)];
      weights.assign(static_cast<std::size_t>(left + 1), 0.0);
      double hi = -INFINITY;
      for (std::int64_t k = 0; k <= left; ++k)
        hi = std::max(hi, w[0][static_cast<std::size_t>(k)] + rest[static_cast<std::size_t>(left - k)]);
      double total = 0.0;
      for (std::int64_t k = 0; k <= left; ++k) {
        total += std::exp(w[0][static_cast<std::size_t>(k)] + rest[static_cast<std::size_t>(left - k)] - hi);
        weights[static_cast<std::size_t>(k)] = total;
      }
      const double u = uniform01(rng) * total;
      const auto k = static_cast<std::int64_t>(std::upper_bound(weights.begin(), weights.end(), u) - weights.begin());
      const std::int64_t pick = std::min(k, left);
      a.counts[static_cast<std::size_t>(i)] = 2 * pick;
      left -= pick;
    }
  }
  a.counts[static_cast<std::size_t>(d - 1)] += 2 * left;
  a.coord.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < d; ++i)
    a.coord.insert(a.coord.end(), static_cast<std::size_t>(a.counts[static_cast<std::size_t>(i)]),
                   static_cast<std::uint8_t>(i));
  for (std::size_t i = a.coord.size(); i > 1; --i) std::swap(a.coord[i - 1], a.coord[uniform_below(rng, i)]);
  return a;
}

std::vector<std::int8_t> sample_bridge_steps_1d(std::int64_t m, Rng& rng) {
  if (m < 0 || m % 2 != 0) throw std::domain_error("bridge: length must be even");
  std::vector<std::int8_t> steps(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) steps[static_cast<std::size_t>(i)] = i < m / 2 ? 1 : -1;
  for (std::size_t i = steps.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(steps[i - 1], steps[j]);
  }
  return steps;
}

LatticePath sample_bridge_1d(std::int64_t m, Rng& rng) {
  if (m < 2 || m % 2 != 0) throw std::domain_error("sample_bridge_1d: m must be even and >= 2");
  const auto steps = sample_bridge_steps_1d(m, rng);
  std::vector<Site> sites{Site{0}};
  for (auto s : steps) sites.push_back(Site{sites.back()[0] + s});
  return LatticePath(std::move(sites));
}

std::vector<Site> compose_bridge(const Site& root, const CoordinateAllocation& alloc,
                                 const std::vector<std::vector<std::int8_t>>& steps) {
  std::vector<Site> sites;
  sites.reserve(alloc.coord.size() + 1);
  sites.push_back(root);
  std::array<std::size_t, kMaxDim> used{};
  for (auto c : alloc.coord) {
    Site next = sites.back();
    next[c] += steps[c][used[c]++];
    sites.push_back(next);
  }
  return sites;
}

LatticePath sample_bridge(int d, std::int64_t m, Rng& rng) {
  const auto alloc = sample_coordinate_allocation(d, m, rng);
  std::vector<std::vector<std::int8_t>> steps(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) steps[static_cast<std::size_t>(i)] = sample_bridge_steps_1d(alloc.counts[static_cast<std::size_t>(i)], rng);
  return LatticePath(compose_bridge(Site::origin(d), alloc, steps));
}

namespace {

struct KilledWalkSystem {
  std::vector<Site> sites;
  absl::flat_hash_map<Site, int> index;
  Eigen::SparseMatrix<double> matrix;  // I - P restricted to the interior
};

KilledWalkSystem build_killed_system(int d, double n, BoundaryConvention conv) {
  if (d < 1 || d > kMaxDim) throw std::domain_error("visit probability: dimension out of range");
  if (!(n >= 1.0)) throw std::domain_error("visit probability: radius must be >= 1");
  KilledWalkSystem sys;
  sys.sites = Domain::ball(d, n, conv).interior();
  for (std::size_t i = 0; i < sys.sites.size(); ++i) sys.index.emplace(sys.sites[i], static_cast<int>(i));
  const double w = 1.0 / (2.0 * d);
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t i = 0; i < sys.sites.size(); ++i) {
    trips.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
    for (int dir = 0; dir < 2 * d; ++dir) {
      auto it = sys.index.find(neighbor(sys.sites[i], dir));
      if (it != sys.index.end()) trips.emplace_back(static_cast<int>(i), it->second, -w);
    }
  }
  const auto size = static_cast<Eigen::Index>(sys.sites.size());
  sys.matrix.resize(size, size);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

}  // namespace

absl::flat_hash_map<Site, double> hitting_probabilities(int d, double n, const Site& x, BoundaryConvention conv) {
  const Domain dom = Domain::ball(d, n, conv);
  if (x.dim != d || !dom.contains(x)) throw std::domain_error("visit probability: x outside the domain");
  // Unknowns: h on interior \ {x}; h(x) = 1 and h = 0 outside.
  std::vector<Site> sites;
  for (const auto& s : dom.interior())
    if (s != x) sites.push_back(s);
  absl::flat_hash_map<Site, int> index;
  for (std::size_t i = 0; i < sites.size(); ++i) index.emplace(sites[i], static_cast<int>(i));
  const double w = 1.0 / (2.0 * d);
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sites.size()));
  for (std::size_t i = 0; i < sites.size(); ++i) {
    trips.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
    for (int dir = 0; dir < 2 * d; ++dir) {
      const Site y = neighbor(sites[i], dir);
      if (y == x) {
        rhs[static_cast<Eigen::Index>(i)] += w;
        continue;
      }
      auto it = index.find(y);
      if (it != index.end()) trips.emplace_back(static_cast<int>(i), it->second, -w);
    }
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(sites.size()), static_cast<Eigen::Index>(sites.size()));
  a.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
  if (solver.info() != Eigen::Success) throw std::runtime_error("visit probability: singular system");
  const Eigen::VectorXd h = solver.solve(rhs);
  absl::flat_hash_map<Site, double> out;
  out.emplace(x, 1.0);
  for (std::size_t i = 0; i < sites.size(); ++i) out.emplace(sites[i], h[static_cast<Eigen::Index>(i)]);
  return out;
}

double visit_probability_exact(int d, double n, const Site& x, BoundaryConvention conv) {
  if (x == Site::origin(d) && Domain::ball(d, n, conv).contains(x)) return 1.0;
  return hitting_probabilities(d, n, x, conv).at(Site::origin(d));
}

absl::flat_hash_map<Site, double> visit_probabilities_exact(int d, double n, BoundaryConvention conv) {
  auto sys = build_killed_system(d, n, conv);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(sys.matrix);
  if (solver.info() != Eigen::Success) throw std::runtime_error("visit probability: singular system");
  const auto size = static_cast<Eigen::Index>(sys.sites.size());
  const int origin = sys.index.at(Site::origin(d));
  Eigen::VectorXd e = Eigen::VectorXd::Zero(size);
  e[origin] = 1.0;
  const Eigen::VectorXd g0 = solver.solve(e);  // G(0, .) by symmetry of I - P
  absl::flat_hash_map<Site, double> out;
  for (Eigen::Index i = 0; i < size; ++i) {
    e.setZero();
    e[i] = 1.0;
    const double gxx = solver.solve(e)[i];
    out.emplace(sys.sites[static_cast<std::size_t>(i)], g0[i] / gxx);
  }
  return out;
}

}  // namespace loopforge
