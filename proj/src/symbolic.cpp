#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "gibbslab/symbolic.hpp"

namespace gibbslab {

GroupTable GroupTable::cyclic(int m) {
  if (m < 1) throw PreconditionError("group order must be positive");
  GroupTable g;
  g.order = m;
  g.mul.resize(static_cast<std::size_t>(m) * m);
  g.inv.resize(m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) g.mul[static_cast<std::size_t>(a) * m + b] = (a + b) % m;
    g.inv[a] = (m - a) % m;
  }
  return g;
}

GroupTable GroupTable::from_table(const std::vector<std::vector<int>>& t) {
  const int n = static_cast<int>(t.size());
  if (n == 0) throw PreconditionError("empty group table");
  GroupTable g;
  g.order = n;
  g.mul.resize(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < n; ++a) {
    if (static_cast<int>(t[a].size()) != n) throw PreconditionError("group table is not square");
    for (int b = 0; b < n; ++b) {
      if (t[a][b] < 0 || t[a][b] >= n) throw PreconditionError("group table entry out of range");
      g.mul[static_cast<std::size_t>(a) * n + b] = t[a][b];
    }
  }
  int e = -1;
  for (int a = 0; a < n && e < 0; ++a) {
    bool ok = true;
    for (int b = 0; b < n; ++b) ok = ok && g.op(a, b) == b && g.op(b, a) == b;
    if (ok) e = a;
  }
  if (e < 0) throw PreconditionError("group table has no identity");
  g.identity = e;
  g.inv.assign(n, -1);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (g.op(a, b) != g.op(b, a)) throw PreconditionError("group table is not abelian");
      if (g.op(a, b) == e) g.inv[a] = b;
      for (int c = 0; c < n; ++c)
        if (g.op(g.op(a, b), c) != g.op(a, g.op(b, c))) throw PreconditionError("group table is not associative");
    }
  for (int a = 0; a < n; ++a)
    if (g.inv[a] < 0) throw PreconditionError("group table lacks inverses");
  return g;
}

Alphabet::Alphabet(std::vector<std::string> n) : names(std::move(n)) {
  if (names.empty()) throw PreconditionError("empty alphabet");
  if (names.size() > 4096) throw PreconditionError("alphabet larger than 4096 symbols");
  values.resize(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& s = names[i];
    for (std::size_t j = 0; j < i; ++j)
      if (names[j] == s) throw PreconditionError("duplicate alphabet symbol '" + s + "'");
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(s, &pos);
    } catch (...) {
      pos = 0;
    }
    values[i] = (pos == s.size() && !s.empty()) ? v : static_cast<double>(i);
  }
}

Alphabet Alphabet::range(int q) {
  std::vector<std::string> n;
  for (int i = 0; i < q; ++i) n.push_back(std::to_string(i));
  return Alphabet(std::move(n));
}

int Alphabet::index_of(const std::string& s) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == s) return static_cast<int>(i);
  return -1;
}

ForbiddenRule::ForbiddenRule(Shape w, std::vector<Word> f, int q) : window(std::move(w)), forbidden(std::move(f)), q_(q) {
  if (window.empty()) throw PreconditionError("rule window is empty");
  double bits = static_cast<double>(window.size()) * std::log2(static_cast<double>(std::max(q, 2)));
  if (bits > 63) throw PreconditionError("rule window too large to index");
  for (const auto& word : forbidden) {
    if (word.size() != window.size()) throw PreconditionError("forbidden word length differs from window");
    for (Symbol s : word)
      if (s < 0 || s >= q) throw PreconditionError("forbidden word uses a symbol outside the alphabet");
    set_.insert(code(word));
  }
}

std::uint64_t ForbiddenRule::code(const Word& w) const {
  std::uint64_t c = 0;
  for (Symbol s : w) c = c * static_cast<std::uint64_t>(q_) + static_cast<std::uint64_t>(s);
  return c;
}

ForbiddenRule ForbiddenRule::allowing(Shape w, std::vector<Word> allowed, int q) {
  ForbiddenRule r(std::move(w), std::move(allowed), q);
  r.allow_ = true;
  r.prefixes_.resize(r.window.size());
  for (const auto& word : r.forbidden) {
    std::uint64_t c = 0;
    for (std::size_t k = 0; k < word.size(); ++k) {
      r.prefixes_[k].insert(c);
      c = c * static_cast<std::uint64_t>(q) + static_cast<std::uint64_t>(word[k]);
    }
  }
  return r;
}

bool ForbiddenRule::prefix_allowed(const Word& w, std::size_t k) const {
  if (!allow_ || k >= window.size()) return !forbids(w);
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < k; ++i) c = c * static_cast<std::uint64_t>(q_) + static_cast<std::uint64_t>(w[i]);
  return prefixes_[k].count(c) > 0;
}

bool ForbiddenRule::forbids(const Word& w) const { return (set_.count(code(w)) > 0) != allow_; }

// ---------------------------------------------------------------------------

struct SubshiftSpec::Line {
  int k = 0;  // state length
  int q = 2;
  std::vector<char> essential;  // indexed by base-q code of a state
  bool any = true;

  std::uint64_t encode(const Pattern& p, int start) const {
    std::uint64_t c = 0;
    for (int i = 0; i < k; ++i) c = c * q + static_cast<std::uint64_t>(p.at(Site(start + i)));
    return c;
  }
};

namespace {

int window_extent(const Shape& w) {
  auto [lo, hi] = w.bounds();
  int e = 0;
  for (int i = 0; i < kMaxDim; ++i) e = std::max(e, hi[i] - lo[i]);
  return e;
}

}  // namespace

void SubshiftSpec::finish() {
  radius_ = 0;
  for (const auto& r : rules_) {
    if (r.window.dim() != dim_) throw PreconditionError("rule window dimension mismatch");
    radius_ = std::max(radius_, window_extent(r.window));
  }
  line_.reset();
  if (dim_ != 1 || kind_ == Kind::Oracle) return;
  auto L = std::make_shared<Line>();
  L->q = q();
  L->k = radius_;
  double states = std::pow(static_cast<double>(q()), L->k);
  if (states > 4e6) return;  // too large for exact mode
  const std::size_t n = static_cast<std::size_t>(states);
  if (L->k == 0) {
    bool any = false;
    for (int a = 0; a < q() && !any; ++a) any = locally_admissible(Pattern(Shape::interval(0, 0), Word{static_cast<Symbol>(a)}));
    L->any = any;
    line_ = L;
    return;
  }
  const int k = L->k;
  std::vector<char> alive(n, 0);
  Word w(k);
  Shape st = Shape::interval(0, k - 1);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t x = c;
    for (int i = k - 1; i >= 0; --i) w[i] = static_cast<Symbol>(x % q()), x /= q();
    alive[c] = locally_admissible(Pattern(st, w)) ? 1 : 0;
  }
  // edges s->t when s followed by the last symbol of t is admissible
  Shape ed = Shape::interval(0, k);
  std::vector<std::vector<std::uint32_t>> succ(n), pred(n);
  Word we(k + 1);
  for (std::size_t c = 0; c < n; ++c) {
    if (!alive[c]) continue;
    std::size_t x = c;
    for (int i = k - 1; i >= 0; --i) we[i] = static_cast<Symbol>(x % q()), x /= q();
    for (int a = 0; a < q(); ++a) {
      we[k] = static_cast<Symbol>(a);
      std::size_t t = (c * q() + a) % n;
      if (!alive[t]) continue;
      if (locally_admissible(Pattern(ed, we))) {
        succ[c].push_back(static_cast<std::uint32_t>(t));
        pred[t].push_back(static_cast<std::uint32_t>(c));
      }
    }
  }
  std::vector<int> outdeg(n), indeg(n);
  std::vector<std::uint32_t> queue;
  for (std::size_t c = 0; c < n; ++c) {
    if (!alive[c]) continue;
    outdeg[c] = static_cast<int>(succ[c].size());
    indeg[c] = static_cast<int>(pred[c].size());
  }
  for (std::size_t c = 0; c < n; ++c)
    if (alive[c] && (outdeg[c] == 0 || indeg[c] == 0)) alive[c] = 0, queue.push_back(static_cast<std::uint32_t>(c));
  while (!queue.empty()) {
    auto c = queue.back();
    queue.pop_back();
    for (auto t : succ[c])
      if (alive[t] && --indeg[t] == 0) alive[t] = 0, queue.push_back(t);
    for (auto s : pred[c])
      if (alive[s] && --outdeg[s] == 0) alive[s] = 0, queue.push_back(s);
  }
  L->essential = std::move(alive);
  L->any = std::any_of(L->essential.begin(), L->essential.end(), [](char c) { return c != 0; });
  line_ = L;
}

SubshiftSpec SubshiftSpec::full(int dim, Alphabet a) {
  SubshiftSpec s;
  s.kind_ = Kind::Full;
  s.dim_ = dim;
  s.alphabet_ = std::move(a);
  s.exactness_ = 0;
  s.name = "full";
  s.finish();
  return s;
}

SubshiftSpec SubshiftSpec::sft(int dim, Alphabet a, std::vector<ForbiddenRule> rules, std::optional<int> exactness) {
  SubshiftSpec s;
  s.kind_ = Kind::SFT;
  s.dim_ = dim;
  s.alphabet_ = std::move(a);
  s.rules_ = std::move(rules);
  s.exactness_ = exactness;
  s.name = "sft";
  s.finish();
  return s;
}

SubshiftSpec SubshiftSpec::oracle(int dim, Alphabet a, OraclePredicate pred, int radius, std::optional<int> exactness) {
  if (!pred) throw PreconditionError("oracle without predicate");
  SubshiftSpec s;
  s.kind_ = Kind::Oracle;
  s.dim_ = dim;
  s.alphabet_ = std::move(a);
  s.oracle_ = std::move(pred);
  s.exactness_ = exactness;
  s.name = "oracle";
  s.finish();
  s.radius_ = radius;
  return s;
}

SubshiftSpec SubshiftSpec::group(int dim, Alphabet a, std::vector<ForbiddenRule> rules, std::optional<int> exactness) {
  if (!a.group) throw PreconditionError("group shift needs a group alphabet");
  if (a.group->order != a.size()) throw PreconditionError("group order differs from alphabet size");
  SubshiftSpec s;
  s.kind_ = Kind::Group;
  s.dim_ = dim;
  s.alphabet_ = std::move(a);
  s.rules_ = std::move(rules);
  s.exactness_ = exactness;
  s.name = "group";
  s.finish();
  // closure check on a test window
  Shape test = Shape::ball(dim, std::max(1, s.radius_));
  LanguageTable L = language(s, test, std::max(1, s.radius_));
  const GroupTable& G = *s.alphabet_.group;
  for (const auto& u : L.words) {
    Word iv(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) iv[i] = static_cast<Symbol>(G.inv[u[i]]);
    if (!L.contains(iv)) throw PreconditionError("group shift language not closed under inverses");
    for (const auto& v : L.words) {
      Word p(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) p[i] = static_cast<Symbol>(G.op(u[i], v[i]));
      if (!L.contains(p)) throw PreconditionError("group shift language not closed under the product");
    }
  }
  return s;
}

bool SubshiftSpec::admissible_near(const Pattern& p, const Site& s) const {
  Symbol v = p.at(s);
  if (v != kUnset && v >= q()) return false;
  switch (kind_) {
    case Kind::Full:
      return true;
    case Kind::Oracle:
      return oracle_(p);
    default:
      break;
  }
  Word w;
  for (const auto& r : rules_) {
    w.resize(r.window.size());
    for (const auto& o : r.window) {
      Site g = s - o;
      bool full = true;
      std::size_t i = 0;
      for (; i < r.window.size(); ++i) {
        Symbol x = p.at(g + r.window[i]);
        if (x == kUnset) {
          full = false;
          break;
        }
        w[i] = x;
      }
      if (full && r.forbids(w)) return false;
      if (!full && i > 0 && r.allow_list()) {
        // prune on an assigned prefix when nothing after it is set
        bool rest_unset = true;
        for (std::size_t j = i + 1; j < r.window.size() && rest_unset; ++j) rest_unset = !p.has(g + r.window[j]);
        if (rest_unset && !r.prefix_allowed(w, i)) return false;
      }
    }
  }
  return true;
}

bool SubshiftSpec::locally_admissible(const Pattern& p) const {
  if (kind_ == Kind::Oracle) {
    for (const auto& s : p.support())
      if (p.at(s) >= q()) return false;
    return oracle_(p);
  }
  for (const auto& s : p.support())
    if (!admissible_near(p, s)) return false;
  return true;
}

bool Constraint::admissible(const Pattern& env, const Pattern& x) const {
  if (!shift.locally_admissible(x)) return false;
  if (fiber && !fiber(env, x, nullptr)) return false;
  return true;
}

bool Constraint::admissible_near(const Pattern& env, const Pattern& x, const Site& s) const {
  if (!shift.admissible_near(x, s)) return false;
  if (fiber && !fiber(env, x, &s)) return false;
  return true;
}

bool Constraint::exact_at(int margin) const {
  auto r = shift.exactness_radius();
  bool ok = (r && margin >= *r) || (!fiber && shift.line() != nullptr);
  if (fiber) ok = ok && fiber_exactness && margin >= *fiber_exactness;
  return ok;
}

Constraint Constraint::coupled(SubshiftSpec s, std::vector<JointRule> rules, std::optional<int> exact, std::string name) {
  int r = 0;
  for (const auto& j : rules) {
    if (j.x_window.empty() || !j.ok) throw PreconditionError("joint rule needs an x window and a predicate");
    for (const auto& o : j.x_window) r = std::max(r, o.linf());
    for (const auto& o : j.env_window) r = std::max(r, o.linf());
  }
  auto shared = std::make_shared<std::vector<JointRule>>(rules);
  FiberRule f = [shared](const Pattern& env, const Pattern& x, const Site* near) {
    std::vector<Symbol> ev, xv;
    auto check = [&](const JointRule& j, const Site& g) {
      xv.resize(j.x_window.size());
      for (std::size_t i = 0; i < j.x_window.size(); ++i) {
        Symbol v = x.at(g + j.x_window[i]);
        if (v == kUnset) return true;
        xv[i] = v;
      }
      ev.resize(j.env_window.size());
      for (std::size_t i = 0; i < j.env_window.size(); ++i) {
        Symbol v = env.at(g + j.env_window[i]);
        if (v == kUnset) return true;
        ev[i] = v;
      }
      return j.ok(ev.data(), xv.data());
    };
    for (const auto& j : *shared) {
      if (near) {
        for (const auto& o : j.x_window)
          if (!check(j, *near - o)) return false;
      } else {
        for (const auto& s0 : x.support())
          if (!check(j, s0 - j.x_window[0])) return false;
      }
    }
    return true;
  };
  Constraint c(std::move(s), std::move(f), r, exact, std::move(name));
  c.joint = std::move(rules);
  return c;
}

bool LanguageTable::contains(const Word& w) const { return std::binary_search(words.begin(), words.end(), w); }

// ---------------------------------------------------------------------------

namespace {

const Pattern& empty_env(int dim) {
  static thread_local Pattern e[kMaxDim + 1] = {Pattern(1), Pattern(1), Pattern(2), Pattern(3)};
  return e[dim];
}

bool use_line(const Constraint& c) { return !c.coupled() && c.shift.line() != nullptr; }

// exact extension of a 1-D pattern through the trimmed state graph
bool extend_line(const SubshiftSpec& s, Pattern p, Budget& b) {
  const auto* L = s.line();
  if (p.empty()) return L->any;
  if (L->k == 0) return L->any;
  Shape sup = p.support();
  int lo = sup[0][0], hi = sup[sup.size() - 1][0];
  if (hi - lo + 1 < L->k) hi = lo + L->k - 1;
  const int k = L->k;
  std::vector<int> free;
  for (int x = lo; x <= hi; ++x)
    if (!p.has(Site(x))) free.push_back(x);
  // check a position once its state window is complete
  auto state_ok = [&](int end) {
    int start = end - k + 1;
    if (start < lo) return true;
    for (int i = start; i <= end; ++i)
      if (!p.has(Site(i))) return true;
    return L->essential[L->encode(p, start)] != 0;
  };
  for (int x = lo; x <= hi; ++x)
    if (p.has(Site(x)) && (!s.admissible_near(p, Site(x)) || !state_ok(x))) return false;
  std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
    if (i == free.size()) return true;
    int x = free[i];
    for (int a = 0; a < s.q(); ++a) {
      b.tick();
      p.set(Site(x), static_cast<Symbol>(a));
      bool ok = s.admissible_near(p, Site(x));
      for (int e = x; ok && e < x + k && e <= hi; ++e) ok = state_ok(e);
      if (ok && rec(i + 1)) return true;
    }
    p.unset(Site(x));
    return false;
  };
  return rec(0);
}

bool extend_region(const Constraint& c, const Pattern& env, Pattern& p, const std::vector<Site>& free, Budget& b,
                   const std::function<void(std::vector<Symbol>&)>& shuffle) {
  std::vector<Symbol> order(c.q());
  std::iota(order.begin(), order.end(), Symbol(0));
  std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
    if (i == free.size()) return true;
    const Site& s = free[i];
    std::vector<Symbol> o = order;
    if (shuffle) shuffle(o);
    for (Symbol a : o) {
      b.tick();
      p.set(s, a);
      if (c.admissible_near(env, p, s) && rec(i + 1)) return true;
    }
    p.unset(s);
    return false;
  };
  return rec(0);
}

bool extendable(const Constraint& c, const Pattern& env, const Pattern& p, const Shape& A, int margin, Budget& b) {
  if (use_line(c)) return extend_line(c.shift, p, b);
  if (margin <= 0) return true;
  Shape region = A.dilate(margin);
  std::vector<Site> free;
  for (const auto& s : region)
    if (!p.has(s)) free.push_back(s);
  Pattern q = p;
  return extend_region(c, env, q, free, b, nullptr);
}

}  // namespace

LanguageTable language(const Constraint& c, const Pattern& env, const Shape& A, int margin, Budget* budget) {
  Budget local;
  Budget& b = budget ? *budget : local;
  if (A.dim() != c.dim()) throw PreconditionError("shape dimension differs from the subshift");
  LanguageTable L;
  L.shape = A;
  L.margin = margin;
  L.exact = c.exact_at(margin);
  if (A.empty()) {
    L.words.push_back({});
    return L;
  }
  Shape region = A.dilate(std::max(margin, 0));
  auto [lo, hi] = region.bounds();
  Pattern p(A.dim(), lo, hi);
  Word w(A.size());
  // about 1.5 GiB of stored words, counting the allocation header
  const std::size_t max_words = (std::size_t(3) << 29) / (sizeof(Word) + 16 + A.size() * sizeof(Symbol));
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == A.size()) {
      if (extendable(c, env, p, A, margin, b)) {
        if (L.words.size() >= max_words)
          throw BudgetExceeded("language of " + std::to_string(A.size()) + " sites exceeds " +
                               std::to_string(max_words) + " words");
        L.words.push_back(w);
      }
      return;
    }
    for (int a = 0; a < c.q(); ++a) {
      b.tick();
      p.set(A[i], static_cast<Symbol>(a));
      w[i] = static_cast<Symbol>(a);
      if (c.admissible_near(env, p, A[i])) rec(i + 1);
    }
    p.unset(A[i]);
  };
  rec(0);
  return L;  // DFS order is lexicographic
}

LanguageTable language(const Constraint& c, const Shape& A, int margin, Budget* budget) {
  return language(c, empty_env(c.dim()), A, margin, budget);
}

bool admissible_pattern(const Constraint& c, const Pattern& env, const Pattern& p, int margin, Budget* budget) {
  Budget local;
  Budget& b = budget ? *budget : local;
  if (!c.admissible(env, p)) return false;
  return extendable(c, env, p, p.support(), margin, b);
}

bool admissible_pattern(const Constraint& c, const Pattern& p, int margin, Budget* budget) {
  return admissible_pattern(c, empty_env(c.dim()), p, margin, budget);
}

bool fill_region(const Constraint& c, const Pattern& env, Pattern& p, const Shape& region, Budget& budget,
                 const std::function<void(std::vector<Symbol>&)>& shuffle) {
  std::vector<Site> free;
  for (const auto& s : region)
    if (!p.has(s)) free.push_back(s);
  return extend_region(c, env, p, free, budget, shuffle);
}

}  // namespace gibbslab
