#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gibbslab/errors.hpp"

namespace gibbslab {

inline constexpr int kMaxDim = 3;

// Point of Z^d; unused trailing coordinates stay 0.
struct Site {
  std::array<int, kMaxDim> c{0, 0, 0};

  constexpr Site() = default;
  constexpr Site(int x, int y = 0, int z = 0) : c{x, y, z} {}

  constexpr int& operator[](int i) { return c[i]; }
  constexpr int operator[](int i) const { return c[i]; }

  constexpr auto operator<=>(const Site&) const = default;

  constexpr Site operator+(const Site& o) const { return Site(c[0] + o.c[0], c[1] + o.c[1], c[2] + o.c[2]); }
  constexpr Site operator-(const Site& o) const { return Site(c[0] - o.c[0], c[1] - o.c[1], c[2] - o.c[2]); }
  constexpr Site operator-() const { return Site(-c[0], -c[1], -c[2]); }

  int linf() const;
  int l1() const;
  std::string str(int dim) const;
};

// Finite subset of Z^d kept sorted lexicographically without duplicates.
class Shape {
 public:
  Shape() = default;
  explicit Shape(int dim) : dim_(dim) { check_dim(dim); }
  Shape(int dim, std::vector<Site> sites);

  static Shape box(int dim, Site lo, Site hi);  // inclusive corners
  static Shape ball(int dim, int r);            // l-infinity ball [-r,r]^d
  static Shape cross(int dim, int r);           // l1 ball
  static Shape interval(int lo, int hi);        // [lo,hi] in Z

  int dim() const { return dim_; }
  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  const std::vector<Site>& sites() const { return sites_; }
  auto begin() const { return sites_.begin(); }
  auto end() const { return sites_.end(); }
  const Site& operator[](std::size_t i) const { return sites_[i]; }

  bool contains(const Site& s) const;
  // position of s in the sorted order or -1
  long index_of(const Site& s) const;

  Shape translate(const Site& g) const;
  Shape unite(const Shape& o) const;
  Shape intersect(const Shape& o) const;
  Shape minus(const Shape& o) const;
  Shape minkowski(const Shape& F) const;  // {a+f}
  Shape dilate(int r) const { return r <= 0 ? *this : minkowski(ball(dim_, r)); }
  Shape negate() const;
  Shape difference_set() const { return minkowski(negate()); }  // F F^{-1}

  bool subset_of(const Shape& o) const;
  bool disjoint(const Shape& o) const;
  std::pair<Site, Site> bounds() const;

  bool operator==(const Shape& o) const { return dim_ == o.dim_ && sites_ == o.sites_; }

  std::string str() const;

 private:
  static void check_dim(int d);
  int dim_ = 1;
  std::vector<Site> sites_;
};

Shape translate(const Shape& A, const Site& g);

// Centered box [-n,n]^d.
struct FolnerBox {
  int n = 0;
  int dim = 1;
  Shape shape() const { return Shape::ball(dim, n); }
  std::size_t volume() const;
};

// sites g of F with g+B not inside F
Shape inner_boundary(const Shape& F, const Shape& B);

struct DeloneSet {
  Shape points;
  Shape packing;   // P
  Shape covering;  // C
  Shape region;

  // sites g of the region whose whole neighborhood g+C lies in the region
  Shape interior() const;
  bool covers(const Site& g) const;
};

// Lexicographic greedy packing of translates of P inside the region.
DeloneSet delone_greedy(const Shape& P, const Shape& C, const Shape& region);

struct DensityReport {
  std::vector<std::pair<int, double>> per_radius;  // n -> min over placements
  double min = 1.0;
};

DensityReport lower_density(const DeloneSet& D, int n_min, int n_max);

}  // namespace gibbslab
