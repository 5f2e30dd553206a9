#include <algorithm>
#include <map>
#include <set>

#include "gibbslab/symbolic.hpp"

namespace gibbslab::catalog {

namespace {

Site axis(int i) {
  Site e;
  e[i] = 1;
  return e;
}

ForbiddenRule pair_rule(int dim, const Site& d, std::vector<Word> f, int q) {
  return ForbiddenRule(Shape(dim, {Site(), d}), std::move(f), q);
}

}  // namespace

SubshiftSpec full(int q, int dim) {
  auto s = SubshiftSpec::full(dim, Alphabet::range(q));
  s.name = s.catalog_name = "full";
  return s;
}

SubshiftSpec golden_mean(int dim) {
  std::vector<ForbiddenRule> rules;
  for (int i = 0; i < dim; ++i) rules.push_back(pair_rule(dim, axis(i), {{1, 1}}, 2));
  auto s = SubshiftSpec::sft(dim, Alphabet::range(2), std::move(rules), 0);
  s.name = s.catalog_name = "golden_mean";
  return s;
}

SubshiftSpec hard_core(const Shape& shape) {
  if (shape.empty()) throw PreconditionError("hard-core shape is empty");
  const int dim = shape.dim();
  std::vector<ForbiddenRule> rules;
  for (const auto& d : shape.difference_set())
    if (d > Site()) rules.push_back(pair_rule(dim, d, {{1, 1}}, 2));
  auto s = SubshiftSpec::sft(dim, Alphabet::range(2), std::move(rules), 0);
  s.name = s.catalog_name = "hard_core";
  return s;
}

SubshiftSpec proper_colorings(int q, int dim) {
  if (q < 1) throw PreconditionError("colorings need at least one color");
  std::vector<Word> same;
  for (int c = 0; c < q; ++c) same.push_back({static_cast<Symbol>(c), static_cast<Symbol>(c)});
  std::vector<ForbiddenRule> rules;
  for (int i = 0; i < dim; ++i) rules.push_back(pair_rule(dim, axis(i), same, q));
  // greedy extension works once every site has more colors than neighbors
  std::optional<int> exact;
  if (q >= 2 * dim + 1) exact = 0;
  auto s = SubshiftSpec::sft(dim, Alphabet::range(q), std::move(rules), exact);
  s.name = s.catalog_name = "proper_colorings";
  return s;
}

SubshiftSpec even() {
  auto pred = [](const Pattern& p) {
    Shape sup = p.support();
    // consecutive assigned sites form segments; inside a segment 1 0^k 1 needs k even
    int last_one = 0;
    bool have_one = false;
    int prev = 0;
    bool first = true;
    for (const auto& s : sup) {
      int x = s[0];
      if (!first && x != prev + 1) have_one = false;
      first = false;
      prev = x;
      if (p.at(s) == 1) {
        if (have_one && (x - last_one - 1) % 2 != 0) return false;
        have_one = true;
        last_one = x;
      }
    }
    return true;
  };
  auto s = SubshiftSpec::oracle(1, Alphabet::range(2), pred, 1, std::nullopt);
  s.name = s.catalog_name = "even";
  return s;
}

SubshiftSpec squares() {
  auto pred = [](const Pattern& p) {
    Shape sup = p.support();
    std::set<Site> seen;
    for (const auto& s0 : sup) {
      if (p.at(s0) != 1 || seen.count(s0)) continue;
      std::vector<Site> comp{s0}, stack{s0};
      seen.insert(s0);
      bool interior = true;
      while (!stack.empty()) {
        Site s = stack.back();
        stack.pop_back();
        for (int dx = -1; dx <= 1; ++dx)
          for (int dy = -1; dy <= 1; ++dy) {
            if (dx == 0 && dy == 0) continue;
            Site t = s + Site(dx, dy);
            Symbol v = p.at(t);
            if (v == kUnset) interior = false;
            if (v == 1 && !seen.count(t)) {
              seen.insert(t);
              comp.push_back(t);
              stack.push_back(t);
            }
          }
      }
      if (!interior) continue;  // may still grow outside the window
      int x0 = comp[0][0], x1 = x0, y0 = comp[0][1], y1 = y0;
      for (const auto& c : comp) {
        x0 = std::min(x0, c[0]), x1 = std::max(x1, c[0]);
        y0 = std::min(y0, c[1]), y1 = std::max(y1, c[1]);
      }
      long w = x1 - x0 + 1, h = y1 - y0 + 1;
      if (w != h || static_cast<long>(comp.size()) != w * h) return false;
    }
    return true;
  };
  auto s = SubshiftSpec::oracle(2, Alphabet::range(2), pred, 1, std::nullopt);
  s.name = s.catalog_name = "squares";
  return s;
}

SubshiftSpec sunny_side_up(int dim) {
  auto pred = [](const Pattern& p) {
    int ones = 0;
    for (const auto& s : p.support()) ones += p.at(s) == 1;
    return ones <= 1;
  };
  auto s = SubshiftSpec::oracle(dim, Alphabet::range(2), pred, 0, 0);
  s.name = s.catalog_name = "sunny_side_up";
  return s;
}

SubshiftSpec group_xor(const std::vector<int>& taps, int modulus) {
  Alphabet a = Alphabet::range(modulus);
  a.group = GroupTable::cyclic(modulus);
  std::vector<ForbiddenRule> rules;
  if (!taps.empty()) {
    std::vector<Site> w;
    for (int t : taps) w.emplace_back(t);
    Shape win(1, std::move(w));
    if (win.size() != taps.size()) throw PreconditionError("repeated tap");
    std::vector<Word> bad;
    const std::size_t n = win.size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= static_cast<std::size_t>(modulus);
    Word word(n);
    for (std::size_t c = 0; c < total; ++c) {
      std::size_t x = c;
      int sum = 0;
      for (std::size_t i = n; i-- > 0;) word[i] = static_cast<Symbol>(x % modulus), x /= modulus, sum += word[i];
      if (sum % modulus != 0) bad.push_back(word);
    }
    rules.emplace_back(std::move(win), std::move(bad), modulus);
  }
  auto s = SubshiftSpec::group(1, std::move(a), std::move(rules), 0);
  s.name = s.catalog_name = "group_xor";
  return s;
}

SubshiftSpec product(const SubshiftSpec& A, const SubshiftSpec& B) {
  if (A.dim() != B.dim()) throw PreconditionError("product of subshifts of different dimension");
  const int qa = A.q(), qb = B.q();
  std::vector<std::string> names;
  for (int a = 0; a < qa; ++a)
    for (int b = 0; b < qb; ++b) names.push_back(A.alphabet().names[a] + "|" + B.alphabet().names[b]);
  std::optional<int> exact;
  if (A.exactness_radius() && B.exactness_radius()) exact = std::max(*A.exactness_radius(), *B.exactness_radius());
  if (A.is_sft_like() && B.is_sft_like()) {
    std::vector<ForbiddenRule> rules;
    const int q = qa * qb;
    auto lift = [&](const ForbiddenRule& r, bool first) {
      if (r.allow_list()) throw PreconditionError("product of allowed-list rules is not supported");
      std::vector<Word> bad;
      const std::size_t n = r.window.size();
      const int other = first ? qb : qa;
      std::size_t combos = 1;
      for (std::size_t i = 0; i < n; ++i) combos *= static_cast<std::size_t>(other);
      for (const auto& f : r.forbidden)
        for (std::size_t c = 0; c < combos; ++c) {
          Word w(n);
          std::size_t x = c;
          for (std::size_t i = 0; i < n; ++i) {
            int o = static_cast<int>(x % other);
            x /= other;
            w[i] = static_cast<Symbol>(first ? f[i] * qb + o : o * qb + f[i]);
          }
          bad.push_back(w);
        }
      rules.emplace_back(r.window, std::move(bad), q);
    };
    for (const auto& r : A.rules()) lift(r, true);
    for (const auto& r : B.rules()) lift(r, false);
    auto s = SubshiftSpec::sft(A.dim(), Alphabet(names), std::move(rules), exact);
    s.name = s.catalog_name = "product";
    return s;
  }
  auto pred = [A, B, qb](const Pattern& p) {
    Pattern pa(p.dim()), pb(p.dim());
    for (const auto& s : p.support()) {
      pa.set(s, static_cast<Symbol>(p.at(s) / qb));
      pb.set(s, static_cast<Symbol>(p.at(s) % qb));
    }
    return A.locally_admissible(pa) && B.locally_admissible(pb);
  };
  auto s = SubshiftSpec::oracle(A.dim(), Alphabet(names), pred, std::max(A.radius(), B.radius()), exact);
  s.name = s.catalog_name = "product";
  return s;
}

}  // namespace gibbslab::catalog
