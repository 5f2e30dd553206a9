#include <algorithm>
#include <sstream>

#include "gibbslab/symbolic.hpp"

namespace gibbslab {

Pattern::Pattern(int dim, Site lo, Site hi) : dim_(dim), lo_(lo) {
  for (int i = 0; i < kMaxDim; ++i) {
    if (i >= dim) lo_[i] = 0, hi[i] = 0;
    ext_[i] = std::max(0, hi[i] - lo_[i] + 1);
  }
  cells_.assign(static_cast<std::size_t>(ext_[0]) * ext_[1] * ext_[2], kUnset);
}

Pattern::Pattern(const Shape& support, const Word& values) : dim_(support.dim()) {
  if (support.size() != values.size()) throw PreconditionError("pattern values do not match support size");
  if (support.empty()) return;
  auto [lo, hi] = support.bounds();
  *this = Pattern(support.dim(), lo, hi);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0) throw PreconditionError("negative symbol in pattern");
    set(support[i], values[i]);
  }
}

Pattern Pattern::constant(const Shape& support, Symbol v) { return Pattern(support, Word(support.size(), v)); }

void Pattern::grow(const Site& s) {
  Site lo = lo_, hi;
  if (cells_.empty()) {
    *this = Pattern(dim_, s, s);
    return;
  }
  for (int i = 0; i < kMaxDim; ++i) {
    hi[i] = lo_[i] + ext_[i] - 1;
    lo[i] = std::min(lo[i], s[i]);
    hi[i] = std::max(hi[i], s[i]);
  }
  Pattern bigger(dim_, lo, hi);
  for (int x = 0; x < ext_[0]; ++x)
    for (int y = 0; y < ext_[1]; ++y)
      for (int z = 0; z < ext_[2]; ++z) {
        Site t(lo_[0] + x, lo_[1] + y, lo_[2] + z);
        Symbol v = cells_[idx(t)];
        if (v != kUnset) bigger.cells_[bigger.idx(t)] = v;
      }
  bigger.count_ = count_;
  *this = std::move(bigger);
}

void Pattern::set(const Site& s, Symbol v) {
  if (v < 0) throw PreconditionError("negative symbol");
  for (int i = dim_; i < kMaxDim; ++i)
    if (s[i] != 0) throw PreconditionError("site outside lattice dimension");
  if (!inbox(s)) grow(s);
  Symbol& c = cells_[idx(s)];
  if (c == kUnset) ++count_;
  c = v;
}

void Pattern::unset(const Site& s) {
  if (!inbox(s)) return;
  Symbol& c = cells_[idx(s)];
  if (c != kUnset) --count_;
  c = kUnset;
}

Shape Pattern::support() const {
  std::vector<Site> v;
  v.reserve(count_);
  for (int x = 0; x < ext_[0]; ++x)
    for (int y = 0; y < ext_[1]; ++y)
      for (int z = 0; z < ext_[2]; ++z) {
        Site t(lo_[0] + x, lo_[1] + y, lo_[2] + z);
        if (cells_[idx(t)] != kUnset) v.push_back(t);
      }
  return Shape(dim_, std::move(v));
}

Word Pattern::values_on(const Shape& A) const {
  Word w;
  w.reserve(A.size());
  for (const auto& s : A) {
    Symbol v = at(s);
    if (v == kUnset) throw PreconditionError("pattern has no value at " + s.str(dim_));
    w.push_back(v);
  }
  return w;
}

Pattern Pattern::restrict_to(const Shape& A) const {
  Pattern p(dim_);
  if (!A.empty()) {
    auto [lo, hi] = A.bounds();
    p = Pattern(dim_, lo, hi);
  }
  for (const auto& s : A) {
    Symbol v = at(s);
    if (v != kUnset) p.set(s, v);
  }
  return p;
}

Pattern Pattern::translate(const Site& g) const {
  Pattern p = *this;
  p.lo_ = lo_ + g;
  return p;
}

bool Pattern::covers(const Shape& A) const {
  for (const auto& s : A)
    if (!has(s)) return false;
  return true;
}

bool Pattern::operator==(const Pattern& o) const {
  if (dim_ != o.dim_ || count_ != o.count_) return false;
  for (const auto& s : support())
    if (o.at(s) != at(s)) return false;
  return true;
}

std::string Pattern::str() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& s : support()) {
    os << (first ? "" : " ") << s.str(dim_) << ':' << at(s);
    first = false;
  }
  os << '}';
  return os.str();
}

Pattern merge(const Pattern& u, const Pattern& v) {
  if (u.dim() != v.dim()) throw PreconditionError("merge of patterns of different dimension");
  Pattern out = u;
  for (const auto& s : v.support()) {
    Symbol a = u.at(s), b = v.at(s);
    if (a != kUnset && a != b) throw Conflict(s, u.dim());
    out.set(s, b);
  }
  return out;
}

}  // namespace gibbslab
