#include "gibbslab/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

namespace gibbslab {

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Verified: return "Verified";
    case Outcome::Refuted: return "Refuted";
    default: return "Inconclusive";
  }
}

Outcome outcome_from_string(const std::string& s) {
  if (s == "Verified") return Outcome::Verified;
  if (s == "Refuted") return Outcome::Refuted;
  if (s == "Inconclusive") return Outcome::Inconclusive;
  throw Error("unknown verdict outcome '" + s + "'");
}

json Verdict::to_json() const {
  return {{"outcome", to_string(outcome)}, {"exact", exact}, {"property", property}, {"witness", witness}, {"note", note}};
}

Verdict Verdict::from_json(const json& j) {
  Verdict v;
  v.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  v.exact = j.value("exact", false);
  v.property = j.value("property", "");
  v.witness = j.value("witness", json::object());
  v.note = j.value("note", "");
  return v;
}

json shape_to_json(const Shape& s) {
  json a = json::array();
  for (const auto& x : s) {
    json p = json::array();
    for (int i = 0; i < s.dim(); ++i) p.push_back(x[i]);
    a.push_back(p);
  }
  return a;
}

Shape shape_from_json(const json& j, int dim) {
  std::vector<Site> v;
  for (const auto& p : j) {
    Site s;
    if (p.is_number_integer()) {
      s[0] = p.get<int>();
    } else {
      if (static_cast<int>(p.size()) != dim) throw Error("site has the wrong number of coordinates");
      for (int i = 0; i < dim; ++i) s[i] = p[i].get<int>();
    }
    v.push_back(s);
  }
  return Shape(dim, v);
}

json pattern_to_json(const Pattern& p) {
  Shape s = p.support();
  json vals = json::array();
  for (const auto& x : s) vals.push_back(p.at(x));
  return {{"sites", shape_to_json(s)}, {"values", vals}};
}

Pattern pattern_from_json(const json& j, int dim) {
  Shape s = shape_from_json(j.at("sites"), dim);
  Word w;
  for (const auto& v : j.at("values")) w.push_back(static_cast<Symbol>(v.get<int>()));
  if (w.size() != s.size()) throw Error("pattern values and sites differ in length");
  return Pattern(s, w);
}

namespace {

const Pattern& no_env(int dim) {
  static thread_local Pattern e[kMaxDim + 1] = {Pattern(1), Pattern(1), Pattern(2), Pattern(3)};
  return e[dim];
}

std::vector<long> positions(const Shape& W, const Shape& S) {
  std::vector<long> out;
  out.reserve(S.size());
  for (const auto& s : S) {
    long i = W.index_of(s);
    if (i < 0) throw PreconditionError("shape not inside the window");
    out.push_back(i);
  }
  return out;
}

Word pick(const Word& w, const std::vector<long>& pos) {
  Word out(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) out[i] = w[pos[i]];
  return out;
}

std::string key_of(const Word& w, const std::vector<long>& pos) {
  std::string k(pos.size(), '\0');
  for (std::size_t i = 0; i < pos.size(); ++i) k[i] = static_cast<char>(w[pos[i]]);
  return k;
}

int constraint_reach(const Constraint& c) { return std::max(1, c.radius()); }

// glue: values of x on A and of y elsewhere on y's support
Pattern exchange(const Pattern& x, const Pattern& y, const Shape& A) {
  Pattern z = y;
  for (const auto& s : A) z.set(s, x.at(s));
  return z;
}

Verdict make(Outcome o, bool exact, std::string property, json witness, std::string note = "") {
  Verdict v;
  v.outcome = o;
  v.exact = exact;
  v.property = std::move(property);
  v.witness = std::move(witness);
  v.note = std::move(note);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

Verdict interchangeable(const Constraint& c, const Pattern& env, const Pattern& u, const Pattern& v, int radius,
                        Budget* budget) {
  Shape A = u.support();
  if (!(v.support() == A)) throw PreconditionError("interchangeable patterns need a common support");
  if (A.empty()) throw PreconditionError("empty support");
  const Word uw = u.values_on(A), vw = v.values_on(A);
  Shape D = A.dilate(std::max(radius, 0));
  Shape R = D.minus(A);
  const int margin = c.exact_at(0) ? 0 : std::max(radius, 1);
  auto L = language(c, env, D, margin, budget);
  auto pA = positions(D, A), pR = positions(D, R);
  std::map<Word, std::pair<bool, bool>> ctx;
  for (const auto& w : L.words) {
    Word a = pick(w, pA);
    auto& e = ctx[pick(w, pR)];
    if (a == uw) e.first = true;
    if (a == vw) e.second = true;
  }
  json wit = {{"kind", "interchange"}, {"u", pattern_to_json(u)}, {"v", pattern_to_json(v)}, {"radius", radius},
              {"margin", margin}};
  if (!env.empty()) wit["env"] = pattern_to_json(env);
  for (const auto& [w, e] : ctx)
    if (e.first != e.second) {
      wit["context"] = pattern_to_json(Pattern(R, w));
      wit["admissible_with"] = e.first ? "u" : "v";
      return make(Outcome::Refuted, L.exact, "interchangeable", wit);
    }
  wit["contexts"] = ctx.size();
  if (L.exact && radius >= c.radius()) return make(Outcome::Verified, true, "interchangeable", wit);
  if (!L.exact)
    return make(Outcome::Verified, false, "interchangeable", wit,
                "no separating context at this radius; language has no exactness certificate");
  return make(Outcome::Inconclusive, true, "interchangeable", wit, "radius below the constraint radius");
}

Verdict interchangeable(const Constraint& c, const Pattern& u, const Pattern& v, int radius, Budget* budget) {
  return interchangeable(c, no_env(c.dim()), u, v, radius, budget);
}

// ---------------------------------------------------------------------------

Verdict check_memory_set(const Constraint& c, const Shape& A, const Shape& B, int margin, Budget* budget) {
  if (!A.subset_of(B)) throw PreconditionError("memory set must contain A");
  Shape D = B.dilate(constraint_reach(c));
  Shape ring = B.minus(A), outer = D.minus(B);
  auto L = language(c, D, margin, budget);
  auto pA = positions(D, A), pR = positions(D, ring), pO = positions(D, outer);
  struct Group {
    std::map<std::string, std::size_t> P, Q;  // part -> a word index carrying it
    std::set<std::pair<std::string, std::string>> pairs;
  };
  std::map<std::string, Group> groups;
  for (std::size_t i = 0; i < L.words.size(); ++i) {
    const auto& w = L.words[i];
    auto& g = groups[key_of(w, pR)];
    std::string p = key_of(w, pA), q = key_of(w, pO);
    g.P.emplace(p, i);
    g.Q.emplace(q, i);
    g.pairs.emplace(p, q);
  }
  const bool exact = L.exact && c.shift.is_sft_like();
  json wit = {{"kind", "memory"}, {"A", shape_to_json(A)}, {"B", shape_to_json(B)}, {"margin", margin}};
  for (const auto& [rk, g] : groups) {
    if (g.pairs.size() == g.P.size() * g.Q.size()) continue;
    for (const auto& [p, ip] : g.P)
      for (const auto& [q, iq] : g.Q)
        if (!g.pairs.count({p, q})) {
          wit["x"] = pattern_to_json(Pattern(D, L.words[ip]));
          wit["y"] = pattern_to_json(Pattern(D, L.words[iq]));
          return make(Outcome::Refuted, exact, "memory_set", wit);
        }
  }
  wit["window_words"] = L.words.size();
  return make(Outcome::Verified, exact, "memory_set", wit);
}

Verdict find_memory_set(const Constraint& c, const Shape& A, int max_radius, int margin) {
  Verdict last;
  for (int r = 0; r <= max_radius; ++r) {
    Shape B = A.dilate(r);
    last = check_memory_set(c, A, B, margin);
    if (last.verified()) {
      last.note = "smallest ball dilation verified: radius " + std::to_string(r);
      return last;
    }
  }
  last.outcome = Outcome::Inconclusive;
  last.note = "no dilation up to radius " + std::to_string(max_radius) + " is a memory set; last counterexample kept";
  return last;
}

Verdict check_strong_tmp(const Constraint& c, const Shape& F, const std::vector<Shape>& trial_sets, int margin) {
  if (!F.contains(Site())) throw PreconditionError("F must contain the origin");
  bool exact = true;
  json trials = json::array();
  for (const auto& A : trial_sets) {
    Verdict v = check_memory_set(c, A, A.minkowski(F), margin);
    exact = exact && v.exact;
    trials.push_back(shape_to_json(A));
    if (v.refuted()) {
      v.property = "strong_tmp";
      v.witness["F"] = shape_to_json(F);
      return v;
    }
  }
  return make(Outcome::Verified, exact, "strong_tmp",
              {{"kind", "strong_tmp"}, {"F", shape_to_json(F)}, {"trials", trials}, {"margin", margin}});
}

Verdict check_memory_set_sampled(const Constraint& c, const Shape& A, const Shape& B, const PairSource& pairs, int n,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Shape ring = B.minus(A);
  const Pattern& e = no_env(c.dim());
  json wit = {{"kind", "memory_sampled"}, {"A", shape_to_json(A)}, {"B", shape_to_json(B)}, {"pairs", n},
              {"seed", seed}};
  for (int i = 0; i < n; ++i) {
    auto [x, y] = pairs(rng);
    if (!c.admissible(e, x) || !c.admissible(e, y)) throw Error("pair source produced an inadmissible pattern");
    for (const auto& s : ring)
      if (x.at(s) != y.at(s)) throw Error("sampled pair disagrees on the ring");
    Pattern z = exchange(x, y, A);
    if (!c.admissible(e, z)) {
      wit["x"] = pattern_to_json(x);
      wit["y"] = pattern_to_json(y);
      return make(Outcome::Refuted, true, "memory_set", wit);
    }
  }
  return make(Outcome::Verified, false, "memory_set", wit, std::to_string(n) + " sampled pairs");
}

// ---------------------------------------------------------------------------

Verdict check_mixing_set(const Constraint& c, const Shape& A, const Shape& B, int margin, Budget* budget) {
  return check_mixing_set(c, no_env(c.dim()), A, B, margin, budget);
}

Verdict check_mixing_set(const Constraint& c, const Pattern& env, const Shape& A, const Shape& B, int margin,
                         Budget* budget) {
  if (!A.subset_of(B)) throw PreconditionError("mixing set must contain A");
  Shape D = B.dilate(constraint_reach(c));
  Shape O = D.minus(B);
  auto L = language(c, env, D, margin, budget);
  auto pA = positions(D, A), pO = positions(D, O);
  std::map<std::string, std::size_t> P, Q;
  std::set<std::pair<std::string, std::string>> joint;
  for (std::size_t i = 0; i < L.words.size(); ++i) {
    auto p = key_of(L.words[i], pA), q = key_of(L.words[i], pO);
    P.emplace(p, i);
    Q.emplace(q, i);
    joint.emplace(p, q);
  }
  json wit = {{"kind", "mixing"}, {"A", shape_to_json(A)}, {"B", shape_to_json(B)}, {"margin", margin}};
  if (!env.empty()) wit["env"] = pattern_to_json(env);
  if (joint.size() != P.size() * Q.size()) {
    for (const auto& [p, ip] : P)
      for (const auto& [q, iq] : Q)
        if (!joint.count({p, q})) {
          wit["u"] = pattern_to_json(Pattern(A, pick(L.words[ip], pA)));
          wit["v"] = pattern_to_json(Pattern(O, pick(L.words[iq], pO)));
          return make(Outcome::Refuted, L.exact, "mixing_set", wit);
        }
  }
  return make(Outcome::Verified, L.exact, "mixing_set", wit);
}

Verdict find_mixing_set(const Constraint& c, const Shape& A, int max_radius, int margin) {
  return find_mixing_set(c, no_env(c.dim()), A, max_radius, margin);
}

Verdict find_mixing_set(const Constraint& c, const Pattern& env, const Shape& A, int max_radius, int margin) {
  Verdict last;
  for (int r = 0; r <= max_radius; ++r) {
    try {
      last = check_mixing_set(c, env, A, A.dilate(r), margin);
    } catch (const BudgetExceeded& e) {
      last.outcome = Outcome::Inconclusive;
      last.property = "mixing_set";
      last.exact = false;
      last.note = std::string("radius ") + std::to_string(r) + ": " + e.what();
      return last;
    }
    if (last.verified()) {
      last.note = "smallest ball dilation verified: radius " + std::to_string(r);
      return last;
    }
  }
  last.outcome = Outcome::Inconclusive;
  last.note = "no dilation up to radius " + std::to_string(max_radius) + " is a mixing set; last counterexample kept";
  return last;
}

// ---------------------------------------------------------------------------

namespace {

using Mask = std::uint64_t;

struct WindowIndex {
  Shape W;
  std::vector<Mask> bit;
  explicit WindowIndex(const Shape& w) : W(w) {
    if (W.size() > 64) throw PreconditionError("window larger than 64 sites");
  }
  Mask mask(const Shape& S) const {
    Mask m = 0;
    for (const auto& s : S) m |= Mask(1) << W.index_of(s);
    return m;
  }
  Shape shape(Mask m) const {
    std::vector<Site> v;
    for (std::size_t i = 0; i < W.size(); ++i)
      if (m >> i & 1) v.push_back(W[i]);
    return Shape(W.dim(), v);
  }
  std::vector<long> pos(Mask m) const {
    std::vector<long> v;
    for (std::size_t i = 0; i < W.size(); ++i)
      if (m >> i & 1) v.push_back(static_cast<long>(i));
    return v;
  }
};

}  // namespace

Verdict check_si(const Constraint& c, const Shape& F, const Shape& window, int margin, Budget* budget) {
  Budget local;
  Budget& bud = budget ? *budget : local;
  WindowIndex ix(window);
  const Shape G = F.difference_set();
  const std::size_t n = window.size();
  const Mask all = n == 64 ? ~Mask(0) : (Mask(1) << n) - 1;
  std::vector<Mask> nb(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (G.contains(window[j] - window[i])) nb[i] |= Mask(1) << j;
  auto conflict = [&](Mask S) {
    Mask u = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (S >> i & 1) u |= nb[i];
    return u;
  };
  // every union of neighbourhoods; each yields a maximal pair
  std::set<Mask> unions{0};
  std::vector<Mask> stack{0};
  while (!stack.empty()) {
    Mask U = stack.back();
    stack.pop_back();
    for (std::size_t i = 0; i < n; ++i) {
      Mask V = U | nb[i];
      if (V != U && unions.insert(V).second) {
        bud.tick();
        stack.push_back(V);
      }
    }
  }
  std::set<std::pair<Mask, Mask>> pairs;
  for (Mask U : unions) {
    Mask A = all & ~U;
    if (!A) continue;
    Mask B = all & ~conflict(A);
    if (!B) continue;
    pairs.emplace(std::min(A, B), std::max(A, B));
  }
  auto L = language(c, window, margin, &bud);
  json wit = {{"kind", "si"}, {"F", shape_to_json(F)}, {"window", shape_to_json(window)}, {"margin", margin}};
  for (const auto& [A, B] : pairs) {
    auto pa = ix.pos(A), pb = ix.pos(B), pab = ix.pos(A | B);
    std::unordered_set<std::string> sa, sb, sab;
    for (const auto& w : L.words) {
      bud.tick();
      sa.insert(key_of(w, pa));
      sb.insert(key_of(w, pb));
      sab.insert(key_of(w, pab));
    }
    if (sab.size() == sa.size() * sb.size()) continue;
    // locate a pair that does not glue
    std::set<Word> ua, vb;
    for (const auto& w : L.words) ua.insert(pick(w, pa)), vb.insert(pick(w, pb));
    Shape SA = ix.shape(A), SB = ix.shape(B), SAB = ix.shape(A | B);
    for (const auto& u : ua)
      for (const auto& v : vb) {
        Pattern m = merge(Pattern(SA, u), Pattern(SB, v));
        Word mw = m.values_on(SAB);
        std::string k(mw.begin(), mw.end());
        if (!sab.count(k)) {
          wit["A"] = shape_to_json(SA);
          wit["B"] = shape_to_json(SB);
          wit["u"] = pattern_to_json(Pattern(SA, u));
          wit["v"] = pattern_to_json(Pattern(SB, v));
          return make(Outcome::Refuted, L.exact, "strong_irreducibility", wit);
        }
      }
  }
  wit["pairs"] = pairs.size();
  return make(Outcome::Verified, L.exact, "strong_irreducibility", wit);
}

namespace {

// Locally admissible patterns extend, so only rule windows holding both a and b can break a gluing
// and w matters only on those windows.
Verdict tssm_local(const Constraint& c, const Shape& F, const Shape& window, json wit, Budget& bud) {
  const SubshiftSpec& s = c.shift;
  const Shape G = F.difference_set();
  const int q = c.q();
  std::size_t pair_count = 0, glued = 0;
  for (std::size_t ia = 0; ia < window.size(); ++ia)
    for (std::size_t ib = ia + 1; ib < window.size(); ++ib) {
      const Site a = window[ia], b = window[ib];
      if (G.contains(b - a)) continue;
      ++pair_count;
      std::vector<Site> rs;
      bool any = false;
      for (const auto& r : s.rules())
        for (const auto& o : r.window) {
          Shape t = r.window.translate(a - o);
          if (!t.contains(b)) continue;
          any = true;
          for (const auto& x : t)
            if (x != a && x != b && window.contains(x)) rs.push_back(x);
        }
      if (!any) continue;
      ++glued;
      Shape R(window.dim(), rs);
      Pattern w(window.dim());
      std::function<bool(std::size_t)> rec = [&](std::size_t d) -> bool {
        bud.tick();
        if (d == R.size()) {
          for (int al = 0; al < q; ++al) {
            Pattern uw = w;
            uw.set(a, static_cast<Symbol>(al));
            if (!s.locally_admissible(uw)) continue;
            for (int be = 0; be < q; ++be) {
              Pattern wv = w;
              wv.set(b, static_cast<Symbol>(be));
              if (!s.locally_admissible(wv)) continue;
              Pattern all = uw;
              all.set(b, static_cast<Symbol>(be));
              if (s.locally_admissible(all)) continue;
              wit["a"] = shape_to_json(Shape(window.dim(), {a}));
              wit["b"] = shape_to_json(Shape(window.dim(), {b}));
              wit["u"] = al;
              wit["v"] = be;
              wit["w"] = pattern_to_json(w);
              return true;
            }
          }
          return false;
        }
        if (rec(d + 1)) return true;
        for (int v = 0; v < q; ++v) {
          w.set(R[d], static_cast<Symbol>(v));
          if (s.locally_admissible(w) && rec(d + 1)) return true;
        }
        w.unset(R[d]);
        return false;
      };
      if (rec(0)) return make(Outcome::Refuted, true, "tssm", wit);
    }
  wit["site_pairs"] = pair_count;
  wit["pairs_sharing_a_rule"] = glued;
  return make(Outcome::Verified, true, "tssm", wit);
}

}  // namespace

Verdict check_tssm(const Constraint& c, const Shape& F, const Shape& window, int margin, Budget* budget) {
  Budget local;
  Budget& bud = budget ? *budget : local;
  json wit = {{"kind", "tssm"}, {"F", shape_to_json(F)}, {"window", shape_to_json(window)}, {"margin", margin}};
  const auto ex = c.shift.exactness_radius();
  if (c.dim() >= 2 && !c.coupled() && c.shift.is_sft_like() && ex && *ex == 0) {
    try {
      return tssm_local(c, F, window, wit, bud);
    } catch (const BudgetExceeded& e) {
      return make(Outcome::Inconclusive, false, "tssm", wit, e.what());
    }
  }
  LanguageTable L;
  try {
    L = language(c, window, margin, &bud);
  } catch (const BudgetExceeded& e) {
    return make(Outcome::Inconclusive, false, "tssm", wit, e.what());
  }
  const std::size_t n = window.size(), N = L.words.size();
  const int q = c.q();
  const std::size_t nw = (N + 63) / 64;
  // bits[i*q + a]: words with symbol a at site i
  std::vector<std::vector<Mask>> bits(n * q, std::vector<Mask>(nw, 0));
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t i = 0; i < n; ++i) bits[i * q + L.words[k][i]][k / 64] |= Mask(1) << (k % 64);
  const Shape G = F.difference_set();
  auto any_and = [&](const std::vector<Mask>& a, const std::vector<Mask>& b) {
    for (std::size_t i = 0; i < nw; ++i)
      if (a[i] & b[i]) return true;
    return false;
  };
  auto any3 = [&](const std::vector<Mask>& a, const std::vector<Mask>& b, const std::vector<Mask>& d) {
    for (std::size_t i = 0; i < nw; ++i)
      if (a[i] & b[i] & d[i]) return true;
    return false;
  };
  std::size_t pair_count = 0;
  try {
    for (std::size_t ia = 0; ia < n; ++ia)
      for (std::size_t ib = ia + 1; ib < n; ++ib) {
        if (G.contains(window[ib] - window[ia])) continue;
        ++pair_count;
        std::vector<std::size_t> T;
        for (std::size_t t = 0; t < n; ++t)
          if (t != ia && t != ib) T.push_back(t);
        // single sites suffice: sites of B move into the context one at a time
        std::vector<std::vector<Mask>> cur(T.size() + 1, std::vector<Mask>(nw, ~Mask(0)));
        if (N % 64) cur[0][nw - 1] = (Mask(1) << (N % 64)) - 1;
        std::vector<int> choice(T.size(), -1);
        bool found = false;
        std::function<void(std::size_t)> rec = [&](std::size_t d) {
          if (found) return;
          bud.tick();
          if (d == T.size()) {
            const auto& w = cur[d];
            for (int a = 0; a < q && !found; ++a) {
              const auto& ba = bits[ia * q + a];
              if (!any_and(w, ba)) continue;
              for (int b = 0; b < q; ++b) {
                const auto& bb = bits[ib * q + b];
                if (!any_and(w, bb) || any3(w, ba, bb)) continue;
                std::vector<Site> sv;
                Word wv;
                for (std::size_t k = 0; k < T.size(); ++k)
                  if (choice[k] >= 0) sv.push_back(window[T[k]]), wv.push_back(static_cast<Symbol>(choice[k]));
                Shape S(window.dim(), sv);
                // sv is already in window order
                wit["a"] = shape_to_json(Shape(window.dim(), {window[ia]}));
                wit["b"] = shape_to_json(Shape(window.dim(), {window[ib]}));
                wit["u"] = a;
                wit["v"] = b;
                wit["w"] = pattern_to_json(Pattern(S, wv));
                found = true;
                return;
              }
            }
            return;
          }
          choice[d] = -1;
          cur[d + 1] = cur[d];
          rec(d + 1);
          for (int s = 0; s < q && !found; ++s) {
            const auto& bs = bits[T[d] * q + s];
            bool nz = false;
            for (std::size_t i = 0; i < nw; ++i) nz |= (cur[d + 1][i] = cur[d][i] & bs[i]) != 0;
            if (!nz) continue;
            choice[d] = s;
            rec(d + 1);
          }
          choice[d] = -1;
        };
        rec(0);
        if (found) return make(Outcome::Refuted, L.exact, "tssm", wit);
      }
  } catch (const BudgetExceeded& e) {
    return make(Outcome::Inconclusive, false, "tssm", wit, e.what());
  }
  wit["site_pairs"] = pair_count;
  return make(Outcome::Verified, L.exact, "tssm", wit);
}

Verdict tssm_implies_sft_reconstruction(const Constraint& c, const Shape& F, const Shape& window, int margin) {
  const Shape G = F.difference_set();
  const int q = c.q();
  auto LG = language(c, G, margin);
  std::optional<int> ex;
  if (c.dim() == 1) ex = 0;
  // small windows list the unseen patterns; otherwise the rule keeps the seen ones
  double combos = std::pow(static_cast<double>(q), static_cast<double>(G.size()));
  std::size_t forbidden = 0;
  std::vector<ForbiddenRule> rules;
  if (combos <= 1e7) {
    std::vector<Word> bad;
    Word w(G.size(), 0);
    for (std::size_t k = 0; k < static_cast<std::size_t>(combos); ++k) {
      std::size_t x = k;
      for (std::size_t i = G.size(); i-- > 0;) w[i] = static_cast<Symbol>(x % q), x /= q;
      if (!LG.contains(w)) bad.push_back(w);
    }
    forbidden = bad.size();
    rules.emplace_back(G, std::move(bad), q);
  } else {
    forbidden = static_cast<std::size_t>(combos - static_cast<double>(LG.size()));
    rules.push_back(ForbiddenRule::allowing(G, LG.words, q));
  }
  auto rebuilt = SubshiftSpec::sft(c.dim(), c.shift.alphabet(), std::move(rules), ex);
  auto L1 = language(c, window, margin), L2 = language(Constraint(rebuilt), window, margin);
  json wit = {{"kind", "sft_reconstruction"}, {"F", shape_to_json(F)}, {"window", shape_to_json(window)},
              {"margin", margin}, {"forbidden", forbidden}, {"words", L1.words.size()}};
  // X sits inside the rebuilt SFT, so L1 = L2 pins L_W(X') between them even without a certificate for X'
  if (L1.words == L2.words) return make(Outcome::Verified, L1.exact, "sft_reconstruction", wit);
  const bool exact = L1.exact && (c.dim() == 1 || L2.exact);
  for (const auto& x : L1.words)
    if (!L2.contains(x)) {
      wit["missing_from_rebuilt"] = pattern_to_json(Pattern(window, x));
      return make(Outcome::Refuted, exact, "sft_reconstruction", wit);
    }
  for (const auto& x : L2.words)
    if (!L1.contains(x)) {
      wit["extra_in_rebuilt"] = pattern_to_json(Pattern(window, x));
      break;
    }
  return make(Outcome::Refuted, exact, "sft_reconstruction", wit);
}

// ---------------------------------------------------------------------------

std::vector<Site> default_enumeration(int dim, int radius) {
  std::vector<Site> out{Site()};
  for (int r = 1; r <= radius; ++r) {
    // shells in decreasing order: 1 before -1
    Shape b = Shape::ball(dim, r);
    for (auto it = b.sites().rbegin(); it != b.sites().rend(); ++it)
      if (it->linf() == r) out.push_back(*it);
  }
  return out;
}

namespace {

const GroupTable& group_of(const SubshiftSpec& gs) {
  if (!gs.alphabet().group) throw PreconditionError("alphabet carries no group");
  return *gs.alphabet().group;
}

std::vector<Word> completing(const SubshiftSpec& gs, const std::vector<Word>& LA, const Shape& A, const Shape& B) {
  const Symbol e = static_cast<Symbol>(group_of(gs).identity);
  std::vector<Word> out;
  Constraint c(gs);
  for (const auto& u : LA) {
    Pattern p(A, u);
    for (const auto& s : B) p.set(s, e);
    if (admissible_pattern(c, p, 0)) out.push_back(u);
  }
  return out;
}

}  // namespace

GroupChain group_shift_chain(const SubshiftSpec& gs, const Shape& A, const std::vector<Site>& enumeration) {
  group_of(gs);
  if (!gs.is_sft_like() || !Constraint(gs).exact_at(0))
    throw PreconditionError("group shift languages need an exactness certificate");
  GroupChain ch;
  Constraint c(gs);
  auto LA = language(c, A, 0).words;
  const int rho = std::max(1, gs.radius());
  auto limit = completing(gs, LA, A, A.dilate(rho).minus(A));
  ch.levels.push_back(LA);
  std::vector<Site> B;
  if (LA == limit) {
    ch.memory = A;
    return ch;
  }
  for (const auto& g : enumeration) {
    if (A.contains(g)) continue;
    B.push_back(g);
    ch.order.push_back(g);
    auto lev = completing(gs, LA, A, Shape(A.dim(), B));
    ch.levels.push_back(lev);
    if (lev == limit) {
      ch.stable_at = static_cast<int>(ch.order.size()) - 1;
      ch.memory = A.unite(Shape(A.dim(), B));
      return ch;
    }
  }
  throw Error("enumeration exhausted before the coset chain stabilised");
}

Shape group_shift_memory(const SubshiftSpec& gs, const Shape& A, const std::vector<Site>& enumeration) {
  return group_shift_chain(gs, A, enumeration).memory;
}

bool is_subgroup(const SubshiftSpec& gs, const std::vector<Word>& level) {
  const auto& G = group_of(gs);
  if (level.empty()) return false;
  std::set<Word> S(level.begin(), level.end());
  Word id(level[0].size(), static_cast<Symbol>(G.identity));
  if (!S.count(id)) return false;
  for (const auto& a : level)
    for (const auto& b : level) {
      Word p(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) p[i] = static_cast<Symbol>(G.op(a[i], b[i]));
      if (!S.count(p)) return false;
    }
  return true;
}

std::vector<Pattern> homoclinic_points(const SubshiftSpec& gs, int support_radius) {
  const auto& G = group_of(gs);
  if (!gs.is_sft_like()) throw PreconditionError("homoclinic points are listed for group SFTs");
  Shape S = Shape::ball(gs.dim(), support_radius);
  Shape D = S.dilate(std::max(1, gs.radius()));
  const int q = gs.q();
  double combos = std::pow(static_cast<double>(q), static_cast<double>(S.size()));
  if (combos > 1e7) throw PreconditionError("support ball too large");
  std::vector<Pattern> out;
  Word w(S.size());
  for (std::size_t k = 0; k < static_cast<std::size_t>(combos); ++k) {
    std::size_t x = k;
    for (std::size_t i = S.size(); i-- > 0;) w[i] = static_cast<Symbol>(x % q), x /= q;
    Pattern p = Pattern::constant(D, static_cast<Symbol>(G.identity));
    for (std::size_t i = 0; i < S.size(); ++i) p.set(S[i], w[i]);
    // windows missing S see only the identity, which is admissible
    if (gs.locally_admissible(p)) out.emplace_back(S, w);
  }
  return out;
}

Verdict almost_haar_check(const WindowMeasure& mu, const SubshiftSpec& gs, const std::vector<Pattern>& homoclinics,
                          double tol) {
  const auto& G = group_of(gs);
  const Shape& W = mu.window;
  json wit = {{"kind", "almost_haar"}, {"homoclinics", homoclinics.size()}, {"tol", tol}};
  for (const auto& z : homoclinics) {
    Shape S = z.support();
    if (S.empty()) continue;
    // translates of z meeting the window
    std::set<Site> shifts;
    for (const auto& w : W)
      for (const auto& s : S) shifts.insert(w - s);
    for (const auto& g : shifts) {
      for (const auto& [key, p] : mu.table) {
        Word img = key.second;
        for (std::size_t i = 0; i < W.size(); ++i) {
          Symbol zv = z.at(W[i] - g);
          if (zv != kUnset) img[i] = static_cast<Symbol>(G.op(zv, img[i]));
        }
        auto it = mu.table.find({key.first, img});
        double pm = it == mu.table.end() ? 0.0 : it->second;
        if (std::abs(pm - p) > tol) {
          wit["z"] = pattern_to_json(z.translate(g));
          wit["word"] = pattern_to_json(Pattern(W, key.second));
          wit["mass"] = p;
          wit["image_mass"] = pm;
          return make(Outcome::Refuted, true, "almost_haar", wit);
        }
      }
    }
  }
  return make(Outcome::Verified, true, "almost_haar", wit);
}

// ---------------------------------------------------------------------------

namespace {

Pattern squares_pattern(int L, const std::vector<std::array<int, 3>>& sq) {
  Shape W = Shape::ball(2, L);
  Pattern p = Pattern::constant(W, 0);
  for (const auto& [x0, y0, k] : sq)
    for (int dx = 0; dx < k; ++dx)
      for (int dy = 0; dy < k; ++dy) {
        Site s(x0 + dx, y0 + dy);
        if (W.contains(s)) p.set(s, 1);
      }
  return p;
}

}  // namespace

Verdict squares_strong_tmp_refutation(const Shape& F) {
  if (F.dim() != 2) throw PreconditionError("squares shift lives on Z^2");
  int k = 0;
  for (const auto& f : F) k = std::max(k, f.linf());
  const int n = std::max(1, (k + 1) / 2);
  Shape A = Shape::ball(2, 2 * n), B = Shape::ball(2, 4 * n);
  const int L = 5 * n + 2;
  Pattern x = squares_pattern(L, {{2 * n, -n, 2 * n + 1}});
  Pattern y = squares_pattern(L, {{2 * n + 1, -n, 2 * n + 1}});
  Constraint c(catalog::squares());
  const Pattern& e = no_env(2);
  json wit = {{"kind", "squares_strong_tmp"}, {"F", shape_to_json(F)}, {"n", n}, {"A", shape_to_json(A)},
              {"B", shape_to_json(B)}, {"x", pattern_to_json(x)}, {"y", pattern_to_json(y)}};
  bool agree = true;
  for (const auto& s : B.minus(A)) agree = agree && x.at(s) == y.at(s);
  Pattern z = exchange(x, y, A);
  if (A.minkowski(F).subset_of(B) && agree && c.admissible(e, x) && c.admissible(e, y) && !c.admissible(e, z))
    return make(Outcome::Refuted, true, "strong_tmp", wit, "offset squares agree on B_n \\ A_n");
  return make(Outcome::Inconclusive, true, "strong_tmp", wit, "construction did not separate");
}

PairSource squares_pair_source(const Shape& A, const Shape& B, int window_radius) {
  const int L = window_radius;
  return [A, B, L](std::mt19937_64& rng) {
    Shape W = Shape::ball(2, L);
    const int side = 2 * L + 1;
    auto id = [&](int x, int y) { return static_cast<std::size_t>(x + L) * side + (y + L); };
    auto inside = [&](int x, int y) { return x >= -L && x <= L && y >= -L && y <= L; };
    std::uniform_int_distribution<int> size(1, 7), coin(0, 1);
    auto free_for = [&](const std::vector<char>& g, int x0, int y0, int k) {
      for (int x = x0 - 1; x <= x0 + k; ++x)
        for (int y = y0 - 1; y <= y0 + k; ++y)
          if (inside(x, y) && g[id(x, y)]) return false;
      return true;
    };
    auto put = [&](std::vector<char>& g, int x0, int y0, int k) {
      for (int x = x0; x < x0 + k; ++x)
        for (int y = y0; y < y0 + k; ++y)
          if (inside(x, y)) g[id(x, y)] = 1;
    };
    auto [alo, ahi] = A.bounds();
    std::vector<char> gx(static_cast<std::size_t>(side) * side, 0);
    for (int t = 0; t < 60; ++t) {
      int k = size(rng);
      int x0, y0;
      if (t < 20) {  // straddle the boundary of A
        x0 = std::uniform_int_distribution<int>(alo[0] - k, ahi[0] + 1)(rng);
        y0 = std::uniform_int_distribution<int>(alo[1] - k, ahi[1] + 1)(rng);
      } else {
        x0 = std::uniform_int_distribution<int>(-L - k + 1, L)(rng);
        y0 = std::uniform_int_distribution<int>(-L - k + 1, L)(rng);
      }
      if (free_for(gx, x0, y0, k)) put(gx, x0, y0, k);
    }
    // components of x lying inside A or outside B may be dropped in y
    std::vector<char> gy = gx, seen(gx.size(), 0);
    for (int x = -L; x <= L; ++x)
      for (int y = -L; y <= L; ++y) {
        if (!gx[id(x, y)] || seen[id(x, y)]) continue;
        std::vector<Site> comp, st{Site(x, y)};
        seen[id(x, y)] = 1;
        while (!st.empty()) {
          Site s = st.back();
          st.pop_back();
          comp.push_back(s);
          for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
              int u = s[0] + dx, v = s[1] + dy;
              if (inside(u, v) && gx[id(u, v)] && !seen[id(u, v)]) seen[id(u, v)] = 1, st.emplace_back(u, v);
            }
        }
        bool inA = true, outB = true;
        for (const auto& s : comp) inA = inA && A.contains(s), outB = outB && !B.contains(s);
        if ((inA || outB) && coin(rng))
          for (const auto& s : comp) gy[id(s[0], s[1])] = 0;
      }
    for (int t = 0; t < 40; ++t) {
      int k = size(rng);
      int x0 = std::uniform_int_distribution<int>(-L - k + 1, L)(rng);
      int y0 = std::uniform_int_distribution<int>(-L - k + 1, L)(rng);
      bool inA = true, outB = true;
      for (int x = x0; x < x0 + k; ++x)
        for (int y = y0; y < y0 + k; ++y)
          if (inside(x, y)) inA = inA && A.contains(Site(x, y)), outB = outB && !B.contains(Site(x, y));
      if ((inA || outB) && free_for(gy, x0, y0, k)) put(gy, x0, y0, k);
    }
    auto to_pattern = [&](const std::vector<char>& g) {
      Pattern p = Pattern::constant(W, 0);
      for (int x = -L; x <= L; ++x)
        for (int y = -L; y <= L; ++y)
          if (g[id(x, y)]) p.set(Site(x, y), 1);
      return p;
    };
    Pattern px = to_pattern(gx), py = to_pattern(gy);
    // single-cell edits inside A, kept when y stays admissible
    auto sq = catalog::squares();
    std::vector<Site> cells(A.begin(), A.end());
    for (int t = 0; t < 8; ++t) {
      Site s = cells[std::uniform_int_distribution<std::size_t>(0, cells.size() - 1)(rng)];
      Symbol old = py.at(s);
      py.set(s, static_cast<Symbol>(1 - old));
      if (!sq.locally_admissible(py)) py.set(s, old);
    }
    return std::make_pair(px, py);
  };
}

// ---------------------------------------------------------------------------

Verdict reverify(const Verdict& v, const Constraint& c) {
  const json& w = v.witness;
  const std::string kind = w.value("kind", "");
  const int d = c.dim();
  const int margin = w.value("margin", 0);
  const Pattern& e = no_env(d);
  auto same = [&](const Verdict& r) {
    Verdict out = r;
    if (r.outcome != v.outcome) out.note = "replay gave " + to_string(r.outcome) + ", recorded " + to_string(v.outcome);
    return out;
  };
  if (kind == "interchange") {
    Pattern u = pattern_from_json(w.at("u"), d), vv = pattern_from_json(w.at("v"), d);
    Pattern env = w.contains("env") ? pattern_from_json(w.at("env"), c.shift.dim()) : e;
    if (v.refuted()) {
      Pattern ctx = pattern_from_json(w.at("context"), d);
      bool a = admissible_pattern(c, env, merge(u, ctx), margin), b = admissible_pattern(c, env, merge(vv, ctx), margin);
      Verdict r = v;
      if (a == b) r.outcome = Outcome::Inconclusive, r.note = "context does not separate on replay";
      return r;
    }
    return same(interchangeable(c, env, u, vv, w.at("radius").get<int>()));
  }
  if (kind == "memory" || kind == "memory_sampled") {
    Shape A = shape_from_json(w.at("A"), d), B = shape_from_json(w.at("B"), d);
    if (v.refuted()) {
      Pattern x = pattern_from_json(w.at("x"), d), y = pattern_from_json(w.at("y"), d);
      bool ok = true;
      for (const auto& s : B.minus(A)) ok = ok && x.at(s) == y.at(s);
      Pattern z = exchange(x, y, A);
      bool sep = kind == "memory" ? admissible_pattern(c, x, margin) && admissible_pattern(c, y, margin) &&
                                        !admissible_pattern(c, z, margin)
                                  : c.admissible(e, x) && c.admissible(e, y) && !c.admissible(e, z);
      Verdict r = v;
      if (!(ok && sep)) r.outcome = Outcome::Inconclusive, r.note = "counterexample does not replay";
      return r;
    }
    if (kind == "memory_sampled") {
      Verdict r = v;
      r.outcome = Outcome::Inconclusive;
      r.note = "sampled verdicts are replayed by sampling again";
      return r;
    }
    return same(check_memory_set(c, A, B, margin));
  }
  if (kind == "strong_tmp") {
    std::vector<Shape> trials;
    for (const auto& t : w.at("trials")) trials.push_back(shape_from_json(t, d));
    return same(check_strong_tmp(c, shape_from_json(w.at("F"), d), trials, margin));
  }
  if (kind == "squares_strong_tmp") return same(squares_strong_tmp_refutation(shape_from_json(w.at("F"), 2)));
  if (kind == "mixing")
    return same(check_mixing_set(c, w.contains("env") ? pattern_from_json(w.at("env"), c.shift.dim()) : e,
                                 shape_from_json(w.at("A"), d), shape_from_json(w.at("B"), d), margin));
  if (kind == "si")
    return same(check_si(c, shape_from_json(w.at("F"), d), shape_from_json(w.at("window"), d), margin));
  if (kind == "tssm")
    return same(check_tssm(c, shape_from_json(w.at("F"), d), shape_from_json(w.at("window"), d), margin));
  if (kind == "sft_reconstruction")
    return same(
        tssm_implies_sft_reconstruction(c, shape_from_json(w.at("F"), d), shape_from_json(w.at("window"), d), margin));
  Verdict r = v;
  r.outcome = Outcome::Inconclusive;
  r.note = "no replay for witness kind '" + kind + "'";
  return r;
}

}  // namespace gibbslab
