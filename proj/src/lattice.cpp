#include "gibbslab/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

namespace gibbslab {

int Site::linf() const { return std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2])}); }
int Site::l1() const { return std::abs(c[0]) + std::abs(c[1]) + std::abs(c[2]); }

std::string Site::str(int dim) const {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < dim; ++i) os << (i ? "," : "") << c[i];
  os << ')';
  return os.str();
}

void Shape::check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw PreconditionError("dimension must be 1..3, got " + std::to_string(d));
}

Shape::Shape(int dim, std::vector<Site> sites) : dim_(dim), sites_(std::move(sites)) {
  check_dim(dim);
  for (const auto& s : sites_)
    for (int i = dim; i < kMaxDim; ++i)
      if (s[i] != 0) throw PreconditionError("site " + s.str(kMaxDim) + " has coordinates beyond dimension");
  std::sort(sites_.begin(), sites_.end());
  sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
}

Shape Shape::box(int dim, Site lo, Site hi) {
  check_dim(dim);
  for (int i = dim; i < kMaxDim; ++i) lo[i] = hi[i] = 0;
  std::vector<Site> v;
  for (int i = 0; i < dim; ++i)
    if (hi[i] < lo[i]) return Shape(dim);
  for (int x = lo[0]; x <= hi[0]; ++x)
    for (int y = lo[1]; y <= hi[1]; ++y)
      for (int z = lo[2]; z <= hi[2]; ++z) v.emplace_back(x, y, z);
  Shape s(dim);
  s.sites_ = std::move(v);  // loop order is already lexicographic
  return s;
}

Shape Shape::ball(int dim, int r) {
  Site lo, hi;
  for (int i = 0; i < dim; ++i) lo[i] = -r, hi[i] = r;
  return box(dim, lo, hi);
}

Shape Shape::cross(int dim, int r) {
  std::vector<Site> v;
  for (const auto& s : ball(dim, r))
    if (s.l1() <= r) v.push_back(s);
  return Shape(dim, std::move(v));
}

Shape Shape::interval(int lo, int hi) { return box(1, Site(lo), Site(hi)); }

bool Shape::contains(const Site& s) const { return std::binary_search(sites_.begin(), sites_.end(), s); }

long Shape::index_of(const Site& s) const {
  auto it = std::lower_bound(sites_.begin(), sites_.end(), s);
  if (it == sites_.end() || *it != s) return -1;
  return static_cast<long>(it - sites_.begin());
}

Shape Shape::translate(const Site& g) const {
  Shape s(dim_);
  s.sites_.reserve(sites_.size());
  for (const auto& x : sites_) s.sites_.push_back(x + g);  // order preserved
  return s;
}

Shape Shape::unite(const Shape& o) const {
  Shape s(dim_);
  std::set_union(sites_.begin(), sites_.end(), o.sites_.begin(), o.sites_.end(), std::back_inserter(s.sites_));
  return s;
}

Shape Shape::intersect(const Shape& o) const {
  Shape s(dim_);
  std::set_intersection(sites_.begin(), sites_.end(), o.sites_.begin(), o.sites_.end(),
                        std::back_inserter(s.sites_));
  return s;
}

Shape Shape::minus(const Shape& o) const {
  Shape s(dim_);
  std::set_difference(sites_.begin(), sites_.end(), o.sites_.begin(), o.sites_.end(),
                      std::back_inserter(s.sites_));
  return s;
}

Shape Shape::minkowski(const Shape& F) const {
  std::vector<Site> v;
  v.reserve(sites_.size() * F.size());
  for (const auto& a : sites_)
    for (const auto& f : F.sites_) v.push_back(a + f);
  return Shape(dim_, std::move(v));
}

Shape Shape::negate() const {
  std::vector<Site> v;
  for (const auto& a : sites_) v.push_back(-a);
  return Shape(dim_, std::move(v));
}

bool Shape::subset_of(const Shape& o) const {
  return std::includes(o.sites_.begin(), o.sites_.end(), sites_.begin(), sites_.end());
}

bool Shape::disjoint(const Shape& o) const {
  auto i = sites_.begin();
  auto j = o.sites_.begin();
  while (i != sites_.end() && j != o.sites_.end()) {
    if (*i == *j) return false;
    if (*i < *j)
      ++i;
    else
      ++j;
  }
  return true;
}

std::pair<Site, Site> Shape::bounds() const {
  if (sites_.empty()) throw PreconditionError("bounds of empty shape");
  Site lo = sites_.front(), hi = sites_.front();
  for (const auto& s : sites_)
    for (int i = 0; i < kMaxDim; ++i) lo[i] = std::min(lo[i], s[i]), hi[i] = std::max(hi[i], s[i]);
  return {lo, hi};
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < sites_.size(); ++i) os << (i ? " " : "") << sites_[i].str(dim_);
  os << '}';
  return os.str();
}

Shape translate(const Shape& A, const Site& g) { return A.translate(g); }

std::size_t FolnerBox::volume() const {
  std::size_t v = 1;
  for (int i = 0; i < dim; ++i) v *= static_cast<std::size_t>(2 * n + 1);
  return v;
}

Shape inner_boundary(const Shape& F, const Shape& B) {
  std::vector<Site> v;
  for (const auto& g : F) {
    for (const auto& b : B)
      if (!F.contains(g + b)) {
        v.push_back(g);
        break;
      }
  }
  return Shape(F.dim(), std::move(v));
}

Shape DeloneSet::interior() const {
  std::vector<Site> v;
  for (const auto& g : region)
    if (packing.translate(g).subset_of(region)) v.push_back(g);
  return Shape(region.dim(), std::move(v));
}

bool DeloneSet::covers(const Site& g) const {
  for (const auto& c : covering)
    if (points.contains(g + c)) return true;
  return false;
}

DeloneSet delone_greedy(const Shape& P, const Shape& C, const Shape& region) {
  if (P.empty()) throw PreconditionError("packing shape is empty");
  if (P.dim() != C.dim() || P.dim() != region.dim()) throw PreconditionError("dimension mismatch");
  if (!P.difference_set().subset_of(C)) throw PreconditionError("covering shape must contain P-P");
  std::vector<Site> chosen;
  // occupancy bitmap over the bounding box of the region
  auto [lo, hi] = region.bounds();
  Site ext;
  for (int i = 0; i < kMaxDim; ++i) ext[i] = hi[i] - lo[i] + 1;
  std::vector<char> occ(static_cast<std::size_t>(ext[0]) * ext[1] * ext[2], 0);
  auto idx = [&](const Site& s) {
    return (static_cast<std::size_t>(s[0] - lo[0]) * ext[1] + (s[1] - lo[1])) * ext[2] + (s[2] - lo[2]);
  };
  for (const auto& g : region) {
    bool ok = true;
    for (const auto& p : P) {
      Site s = g + p;
      if (!region.contains(s) || occ[idx(s)]) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    chosen.push_back(g);
    for (const auto& p : P) occ[idx(g + p)] = 1;
  }
  DeloneSet D{Shape(region.dim(), std::move(chosen)), P, C, region};
  for (const auto& g : D.interior())
    if (!D.covers(g)) throw Error("internal: greedy packing failed to cover " + g.str(region.dim()));
  return D;
}

DensityReport lower_density(const DeloneSet& D, int n_min, int n_max) {
  DensityReport rep;
  const int d = D.region.dim();
  for (int n = n_min; n <= n_max; ++n) {
    Shape box = Shape::ball(d, n);
    double best = 2.0;
    for (const auto& g : D.region) {
      Shape b = box.translate(g);
      if (!b.subset_of(D.region)) continue;
      double cnt = static_cast<double>(b.intersect(D.points).size());
      best = std::min(best, cnt / static_cast<double>(b.size()));
    }
    if (best > 1.5) throw PreconditionError("region too small for boxes of radius " + std::to_string(n));
    rep.per_radius.emplace_back(n, best);
    rep.min = std::min(rep.min, best);
  }
  return rep;
}

}  // namespace gibbslab
