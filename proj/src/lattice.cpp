#include "loopforge/lattice.hpp"

#include <cmath>
#include <stdexcept>

namespace loopforge {

Site::Site(int d) : dim(d) {
  if (d < 1 || d > kMaxDim) throw std::domain_error("Site: dimension out of range");
}

Site::Site(std::initializer_list<std::int32_t> coords) : dim(static_cast<std::int32_t>(coords.size())) {
  if (dim < 1 || dim > kMaxDim) throw std::domain_error("Site: dimension out of range");
  std::size_t i = 0;
  for (auto x : coords) c[i++] = x;
}

std::int64_t Site::norm2() const {
  std::int64_t s = 0;
  for (int i = 0; i < dim; ++i) s += static_cast<std::int64_t>(c[i]) * c[i];
  return s;
}

Site Site::operator+(const Site& o) const {
  Site r = *this;
  for (int i = 0; i < dim; ++i) r.c[i] += o.c[i];
  return r;
}

Site Site::operator-(const Site& o) const {
  Site r = *this;
  for (int i = 0; i < dim; ++i) r.c[i] -= o.c[i];
  return r;
}

std::int64_t distance2(const Site& a, const Site& b) {
  std::int64_t s = 0;
  for (int i = 0; i < a.dim; ++i) {
    const std::int64_t d = static_cast<std::int64_t>(a.c[i]) - b.c[i];
    s += d * d;
  }
  return s;
}

bool adjacent(const Site& a, const Site& b) { return a.dim == b.dim && distance2(a, b) == 1; }

Site neighbor(const Site& s, int direction) {
  Site r = s;
  r.c[static_cast<std::size_t>(direction >> 1)] += (direction & 1) ? -1 : 1;
  return r;
}

bool within_radius(std::int64_t norm2, double r, bool closed) {
  const long double r2 = static_cast<long double>(r) * r;
  const auto n2 = static_cast<long double>(norm2);
  return closed ? n2 <= r2 : n2 < r2;
}

LatticePath::LatticePath(std::vector<Site> sites, PathKind kind) : sites_(std::move(sites)), kind_(kind) {
  if (sites_.empty()) throw std::domain_error("LatticePath: empty path");
  const int d = sites_.front().dim;
  for (const auto& s : sites_)
    if (s.dim != d) throw std::domain_error("LatticePath: mixed dimensions");
  if (kind_ == PathKind::nearest_neighbor) {
    for (std::size_t i = 1; i < sites_.size(); ++i)
      if (!adjacent(sites_[i - 1], sites_[i]))
        throw std::domain_error("LatticePath: consecutive sites are not nearest neighbours");
  }
}

SiteSet LatticePath::site_set() const { return SiteSet(sites_.begin(), sites_.end()); }

bool LatticePath::is_simple() const { return site_set().size() == sites_.size(); }

DiscreteLoop::DiscreteLoop(LatticePath path, double label) : path_(std::move(path)), label_(label) {
  const std::size_t steps = path_.size() - 1;
  if (steps == 0 || steps % 2 != 0) throw std::domain_error("DiscreteLoop: length must be even and positive");
  if (path_.front() != path_.back()) throw std::domain_error("DiscreteLoop: loop does not close");
}

LatticePath loop_erase(const LatticePath& path) {
  if (path.kind() != PathKind::nearest_neighbor)
    throw std::domain_error("loop_erase: nearest-neighbour path required");
  absl::flat_hash_map<Site, std::size_t> last;
  last.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) last[path[i]] = i;
  std::vector<Site> out;
  std::size_t i = 0;
  out.push_back(path[0]);
  for (;;) {
    const std::size_t j = last.find(path[i])->second;
    if (j + 1 >= path.size()) break;
    i = j + 1;
    out.push_back(path[i]);
  }
  return LatticePath(std::move(out));
}

SiteSet cut_points(const LatticePath& path, std::size_t t) {
  if (t < 1 || t > path.size()) throw std::domain_error("cut_points: t out of range");
  absl::flat_hash_map<Site, std::size_t> last;
  last.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) last[path[i]] = i;
  // 0-based index k is a cut time iff every site among g[0..k] is last seen at
  // or before k.
  SiteSet cuts;
  std::size_t reach = 0;
  for (std::size_t k = 0; k + 1 < t; ++k) {
    reach = std::max(reach, last.find(path[k])->second);
    if (reach <= k) cuts.insert(path[k]);
  }
  return cuts;
}

SiteSet enlargement(const SiteSet& base, std::span<const DiscreteLoop> loops) {
  SiteSet out = base;
  for (const auto& loop : loops) {
    bool hits = false;
    for (const auto& s : loop.path().sites())
      if (base.contains(s)) {
        hits = true;
        break;
      }
    if (hits) out.insert(loop.path().sites().begin(), loop.path().sites().end());
  }
  return out;
}

std::vector<Site> ball_offsets(int dim, double r) {
  if (r < 0.0) throw std::domain_error("ball: negative radius");
  const auto reach = static_cast<std::int32_t>(std::floor(r));
  std::vector<Site> out;
  Site x(dim);
  for (int i = 0; i < dim; ++i) x[i] = -reach;
  for (;;) {
    if (within_radius(x.norm2(), r, true)) out.push_back(x);
    int i = 0;
    while (i < dim && x[i] == reach) x[i++] = -reach;
    if (i == dim) break;
    ++x[i];
  }
  return out;
}

SiteSet ball_sites(const Site& v, double r) {
  SiteSet out;
  for (const auto& off : ball_offsets(v.dim, r)) out.insert(v + off);
  return out;
}

SiteSet boundary(const SiteSet& a) {
  SiteSet out;
  for (const auto& y : a)
    for (int dir = 0; dir < 2 * y.dim; ++dir) {
      Site x = neighbor(y, dir);
      if (!a.contains(x)) out.insert(x);
    }
  return out;
}

}  // namespace loopforge
