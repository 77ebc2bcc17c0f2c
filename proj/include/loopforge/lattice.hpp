#pragma once

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace loopforge {

inline constexpr int kMaxDim = 8;

// A point of Z^d. Coordinates beyond `dim` are kept at zero so equality and
// hashing can work on the whole array.
struct Site {
  std::array<std::int32_t, kMaxDim> c{};
  std::int32_t dim = 0;

  Site() = default;
  explicit Site(int d);
  Site(std::initializer_list<std::int32_t> coords);
  static Site origin(int d) { return Site(d); }

  std::int32_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  std::int32_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

  std::int64_t norm2() const;
  Site operator+(const Site& o) const;
  Site operator-(const Site& o) const;

  friend bool operator==(const Site& a, const Site& b) { return a.dim == b.dim && a.c == b.c; }
  friend bool operator!=(const Site& a, const Site& b) { return !(a == b); }
  friend bool operator<(const Site& a, const Site& b) {
    return a.dim != b.dim ? a.dim < b.dim : a.c < b.c;
  }

  template <typename H>
  friend H AbslHashValue(H h, const Site& s) {
    return H::combine(H::combine_contiguous(std::move(h), s.c.data(), s.c.size()), s.dim);
  }
};

std::int64_t distance2(const Site& a, const Site& b);
bool adjacent(const Site& a, const Site& b);
// The 2d nearest neighbours, ordered +e_0, -e_0, +e_1, -e_1, ...
Site neighbor(const Site& s, int direction);

using SiteSet = absl::flat_hash_set<Site>;

enum class PathKind { nearest_neighbor, discontinuous };

// Nonempty ordered sequence of sites. Nearest-neighbour paths are validated on
// construction.
class LatticePath {
 public:
  LatticePath(std::vector<Site> sites, PathKind kind = PathKind::nearest_neighbor);

  int dim() const { return sites_.front().dim; }
  PathKind kind() const { return kind_; }
  std::size_t size() const { return sites_.size(); }
  const Site& operator[](std::size_t i) const { return sites_[i]; }
  const Site& front() const { return sites_.front(); }
  const Site& back() const { return sites_.back(); }
  std::span<const Site> sites() const { return sites_; }
  std::vector<Site> release() && { return std::move(sites_); }

  SiteSet site_set() const;
  bool is_simple() const;

  friend bool operator==(const LatticePath& a, const LatticePath& b) {
    return a.kind_ == b.kind_ && a.sites_ == b.sites_;
  }

 private:
  std::vector<Site> sites_;
  PathKind kind_;
};

// Rooted lattice loop of length 2n with its soup label.
class DiscreteLoop {
 public:
  DiscreteLoop(LatticePath path, double label);

  const LatticePath& path() const { return path_; }
  const Site& root() const { return path_.front(); }
  double label() const { return label_; }
  std::size_t half_length() const { return (path_.size() - 1) / 2; }

 private:
  LatticePath path_;
  double label_;
};

// Chronological loop erasure: loe(1) = g(1); loe(i+1) = g(j_i + 1) where j_i is
// the last visit of g to loe(i).
LatticePath loop_erase(const LatticePath& path);

// {g(i) : i < t, g[1,i] and g[i+1,len] share no site}, with 1-based t.
SiteSet cut_points(const LatticePath& path, std::size_t t);

// `base` together with the sites of every loop that intersects `base`.
SiteSet enlargement(const SiteSet& base, std::span<const DiscreteLoop> loops);

// {x in Z^d : |x - v| <= r}, compared on squared norms.
SiteSet ball_sites(const Site& v, double r);

// Exterior vertex boundary {x not in A : x ~ y for some y in A}.
SiteSet boundary(const SiteSet& a);

// Integer offsets with |x|^2 <= r^2 (closed ball around the origin).
std::vector<Site> ball_offsets(int dim, double r);

bool within_radius(std::int64_t norm2, double r, bool closed);

}  // namespace loopforge
