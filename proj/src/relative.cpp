#include "gibbslab/relative.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gibbslab/sampler.hpp"

namespace gibbslab {

LanguageTable fiber_language(const RelativeSystem& rs, const Pattern& theta, const Shape& A, int margin,
                             Budget* budget) {
  if (!theta.empty() && !rs.env.locally_admissible(theta)) throw PreconditionError("environment pattern not admissible");
  return language(rs.omega, theta, A, margin, budget);
}

namespace relative_catalog {

RelativeSystem ising_percolation(double h, int dim, double J) {
  Alphabet ax({"-1", "0", "+1"});
  ax.values = {-1.0, 0.0, 1.0};
  Shape o(dim, {Site()});
  JointRule j{o, o, [](const Symbol* e, const Symbol* x) { return (e[0] == 0) == (x[0] == 1); }};
  RelativeSystem rs{"ising_percolation", catalog::full(2, dim),
                    Constraint::coupled(SubshiftSpec::full(dim, ax), {j}, 0, "closed sites carry 0"),
                    interactions::ising(h, J, dim, {-1.0, 0.0, 1.0})};
  return rs;
}

RelativeSystem colorings_on_subgraph(int q, int dim) {
  if (q < 2) throw PreconditionError("need at least two colours");
  std::vector<JointRule> rules;
  for (int i = 0; i < dim; ++i) {
    Site e;
    e[i] = 1;
    rules.push_back({Shape(dim, {Site()}), Shape(dim, {Site(), e}),
                     [i](const Symbol* env, const Symbol* x) { return !((env[0] >> i & 1) && x[0] == x[1]); }});
  }
  // a partial proper colouring extends when every site has more colours than neighbours
  std::optional<int> exact;
  if (q > 2 * dim) exact = 0;
  RelativeSystem rs{"colorings_on_subgraph", catalog::full(1 << dim, dim),
                    Constraint::coupled(catalog::full(q, dim), rules, exact, "proper on present edges"),
                    Interaction(dim)};
  return rs;
}

}  // namespace relative_catalog

namespace {

std::size_t torus_volume(const Site& size, int dim) {
  std::size_t v = 1;
  for (int i = 0; i < dim; ++i) {
    if (size[i] < 1) throw PreconditionError("torus extent must be positive");
    v *= static_cast<std::size_t>(size[i]);
  }
  return v;
}

}  // namespace

ThetaMixingReport per_theta_mixing_sets(const RelativeSystem& rs, const std::vector<Pattern>& thetas, const Shape& A,
                                        int max_radius, int margin) {
  ThetaMixingReport rep;
  std::size_t resolved = 0;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    Verdict v = find_mixing_set(rs.omega, thetas[i], A, max_radius, margin);
    int r = -1;
    if (v.verified()) {
      // the verified B is the last dilation tried
      Shape B = shape_from_json(v.witness.at("B"), A.dim());
      for (int k = 0; k <= max_radius && r < 0; ++k)
        if (A.dilate(k) == B) r = k;
      rep.annulus.push_back(B.size() - A.size());
      rep.mean_annulus += static_cast<double>(B.size() - A.size());
      ++resolved;
    } else {
      rep.annulus.push_back(0);
      ++rep.unresolved;
    }
    rep.radius.push_back(r);
    const bool worse = rep.worst < 0 || (r < 0 && rep.radius[rep.worst] >= 0) ||
                       (r >= 0 && rep.radius[rep.worst] >= 0 && r > rep.radius[rep.worst]);
    if (worse) rep.worst = static_cast<int>(i);
    rep.verdicts.push_back(std::move(v));
  }
  if (resolved) rep.mean_annulus /= static_cast<double>(resolved);
  return rep;
}

std::vector<Symbol> bernoulli_site_env(const Site& size, int dim, double p, std::uint64_t seed) {
  std::vector<Symbol> env(torus_volume(size, dim));
  SplitMix64 r(stream_seed(seed, 0, 0));
  for (auto& s : env) s = r.uniform() < p ? 1 : 0;
  return env;
}

std::vector<Symbol> bernoulli_bond_env(const Site& size, int dim, double p, std::uint64_t seed) {
  std::vector<Symbol> env(torus_volume(size, dim));
  SplitMix64 r(stream_seed(seed, 0, 1));
  for (auto& s : env) {
    int b = 0;
    for (int i = 0; i < dim; ++i)
      if (r.uniform() < p) b |= 1 << i;
    s = static_cast<Symbol>(b);
  }
  return env;
}

// ---------------------------------------------------------------------------

FactorSystem merge_code() {
  return {"merge", catalog::full(3, 1), Shape(1, {Site()}), [](const Symbol* x) { return Symbol(x[0] == 0 ? 1 : 0); },
          Alphabet({"a", "b"})};
}

FactorSystem identity_code(const SubshiftSpec& s) {
  return {"identity", s, Shape(s.dim(), {Site()}), [](const Symbol* x) { return x[0]; }, s.alphabet()};
}

FactorSystem constant_code(const SubshiftSpec& s) {
  return {"constant", s, Shape(s.dim(), {Site()}), [](const Symbol*) { return Symbol(0); }, Alphabet({"*"})};
}

Pattern factor_image(const FactorSystem& fs, const Pattern& x) {
  Shape S = x.support();
  std::set<Site> anchors;
  for (const auto& s : S) anchors.insert(s - fs.shape[0]);
  Pattern img(x.dim());
  Word w(fs.shape.size());
  for (const auto& g : anchors) {
    bool ok = true;
    for (std::size_t i = 0; i < fs.shape.size() && ok; ++i) {
      Symbol v = x.at(g + fs.shape[i]);
      ok = v != kUnset;
      w[i] = v;
    }
    if (ok) img.set(g, fs.map(w.data()));
  }
  return img;
}

namespace {

Constraint factor_constraint(const FactorSystem& fs) {
  auto map = fs.map;
  JointRule j{Shape(fs.domain.dim(), {Site()}), fs.shape,
              [map](const Symbol* e, const Symbol* x) { return map(x) == e[0]; }};
  std::optional<int> exact;
  if (fs.domain.kind() == SubshiftSpec::Kind::Full && fs.shape.size() == 1) exact = 0;
  return Constraint::coupled(fs.domain, {j}, exact, fs.name + " fiber");
}

}  // namespace

RelativeSystem factor_relative_system(const FactorSystem& fs, const Interaction& phi) {
  if (fs.shape.empty() || !fs.map) throw PreconditionError("sliding code needs a shape and a map");
  Constraint omega = factor_constraint(fs);
  auto cptr = std::make_shared<Constraint>(omega);
  auto F = fs.shape;
  // an image pattern is allowed when some domain pattern maps onto it
  OraclePredicate nonempty = [cptr, F](const Pattern& theta) {
    if (theta.empty()) return true;
    Shape region = theta.support().minkowski(F);
    Pattern x(theta.dim());
    Budget b{1000000};
    try {
      return fill_region(*cptr, theta, x, region, b);
    } catch (const BudgetExceeded&) {
      return true;
    }
  };
  int r = 0;
  for (const auto& f : F) r = std::max(r, f.linf());
  std::optional<int> ex;
  if (fs.domain.kind() == SubshiftSpec::Kind::Full && F.size() == 1) ex = 0;
  auto env = SubshiftSpec::oracle(fs.domain.dim(), fs.image, nonempty, std::max(r, 1), ex);
  env.name = fs.name + "_image";
  return {fs.name, env, omega, phi};
}

WindowMeasure factor_joint_measure(const WindowMeasure& mu, const FactorSystem& fs) {
  if (mu.env_count() != 1) throw PreconditionError("factor measures carry no environment of their own");
  std::map<Word, int> atom;
  std::vector<std::pair<Word, double>> rows;
  Shape R;
  std::vector<std::pair<Word, Word>> img;
  for (const auto& [k, p] : mu.table) {
    Pattern im = factor_image(fs, Pattern(mu.window, k.second));
    R = im.support();
    img.emplace_back(im.values_on(R), k.second);
    atom.emplace(img.back().first, 0);
  }
  WindowMeasure out(mu.window);
  int i = 0;
  for (auto& [w, idx] : atom) {
    idx = i++;
    out.env_atoms.push_back(R.empty() ? Pattern(mu.window.dim()) : Pattern(R, w));
  }
  std::size_t n = 0;
  for (const auto& [k, p] : mu.table) {
    out.add(atom[img[n].first], k.second, p);
    ++n;
  }
  return out;
}

GibbsReport fiber_gibbs_check(const WindowMeasure& mu, const FactorSystem& fs, const Interaction& phi, const Shape& A,
                              double tol, ContextMode mode) {
  WindowMeasure joint = factor_joint_measure(mu, fs);
  return gibbs_property_test(joint, phi, A, factor_constraint(fs), tol, mode);
}

// ---------------------------------------------------------------------------

namespace {

std::size_t word_count(std::size_t q, std::size_t n) {
  double c = std::pow(static_cast<double>(q), static_cast<double>(n));
  if (c > 1e7) throw PreconditionError("too many column words for a rule placement");
  return static_cast<std::size_t>(c);
}

}  // namespace

SliceSystem slice_system(const SubshiftSpec& Y, const Interaction& phi, int N) {
  if (Y.dim() != 2) throw PreconditionError("slices are taken of two-dimensional subshifts");
  if (N < 1) throw PreconditionError("strip height must be positive");
  if (Y.kind() == SubshiftSpec::Kind::Oracle) throw PreconditionError("slicing needs forbidden-pattern rules");
  SliceSystem S;
  S.base = Y;
  S.N = N;
  Shape col = Shape::box(2, Site(0, 0), Site(0, N - 1));
  S.columns = language(Constraint(Y), col, 0).words;
  if (S.columns.empty()) throw PreconditionError("no admissible column");
  std::vector<std::string> names;
  for (const auto& c : S.columns) {
    std::string n;
    for (Symbol v : c) n += Y.alphabet().names[v] + (Y.q() > 10 ? "." : "");
    names.push_back(n);
  }
  const int qc = static_cast<int>(S.columns.size());
  auto columns = std::make_shared<std::vector<Word>>(S.columns);

  std::vector<ForbiddenRule> inner;
  std::vector<JointRule> joint;
  for (const auto& r : Y.rules()) {
    auto [lo, hi] = r.window.bounds();
    for (int dy = -hi[1]; dy <= N - 1 - lo[1]; ++dy) {
      Shape B = r.window.translate(Site(0, dy));
      std::vector<int> cols;
      for (const auto& s : B)
        if (s[1] >= 0 && s[1] < N) cols.push_back(s[0]);
      if (cols.empty()) continue;
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      const int c0 = cols[0];
      std::vector<Site> xs, es;
      for (int c : cols) xs.emplace_back(c - c0);
      for (const auto& s : B)
        if (!(s[1] >= 0 && s[1] < N)) es.emplace_back(s[0] - c0, s[1]);
      Shape xw(1, xs), ew(2, es);
      // per window site: (column index, row) or env index
      struct Slot {
        int col, row, env;
      };
      auto slots = std::make_shared<std::vector<Slot>>();
      for (const auto& s : B) {
        if (s[1] >= 0 && s[1] < N)
          slots->push_back({static_cast<int>(xw.index_of(Site(s[0] - c0))), s[1], -1});
        else
          slots->push_back({-1, -1, static_cast<int>(ew.index_of(Site(s[0] - c0, s[1])))});
      }
      auto rule = std::make_shared<ForbiddenRule>(r);
      auto assemble = [slots, columns](const Symbol* e, const Symbol* x, Word& w) {
        w.resize(slots->size());
        for (std::size_t i = 0; i < slots->size(); ++i) {
          const Slot& sl = (*slots)[i];
          w[i] = sl.env >= 0 ? e[sl.env] : (*columns)[x[sl.col]][sl.row];
        }
      };
      if (es.empty()) {
        std::vector<Word> bad;
        const std::size_t n = xw.size(), total = word_count(qc, n);
        Word cw(n), w;
        for (std::size_t k = 0; k < total; ++k) {
          std::size_t x = k;
          for (std::size_t i = n; i-- > 0;) cw[i] = static_cast<Symbol>(x % qc), x /= qc;
          assemble(nullptr, cw.data(), w);
          if (rule->forbids(w)) bad.push_back(cw);
        }
        if (!bad.empty()) inner.emplace_back(xw, bad, qc);
      } else {
        joint.push_back({ew, xw, [assemble, rule](const Symbol* e, const Symbol* x) {
                           thread_local Word w;
                           assemble(e, x, w);
                           return !rule->forbids(w);
                         }});
      }
    }
  }
  std::optional<int> ex = Y.exactness_radius();
  SubshiftSpec colshift = inner.empty() ? SubshiftSpec::full(1, Alphabet(names))
                                        : SubshiftSpec::sft(1, Alphabet(names), inner, ex);
  colshift.name = "slice_columns";
  Constraint omega = joint.empty() ? Constraint(colshift)
                                   : Constraint::coupled(colshift, joint, ex, "strip boundary rules");
  S.rs = RelativeSystem{(Y.name.empty() ? std::string("slice") : Y.name) + "_slice" + std::to_string(N), Y, omega,
                        push_to_slice(phi, N, S.columns)};
  return S;
}

Pattern slice_columns(const SliceSystem& S, const Pattern& y) {
  std::set<int> cols;
  for (const auto& s : y.support())
    if (s[1] >= 0 && s[1] < S.N) cols.insert(s[0]);
  Pattern out(1);
  Word c(S.N);
  for (int x : cols) {
    bool full = true;
    for (int r = 0; r < S.N && full; ++r) {
      c[r] = y.at(Site(x, r));
      full = c[r] != kUnset;
    }
    if (!full) continue;
    auto it = std::lower_bound(S.columns.begin(), S.columns.end(), c);
    if (it == S.columns.end() || *it != c) throw PreconditionError("column is not admissible for the base");
    out.set(Site(x), static_cast<Symbol>(it - S.columns.begin()));
  }
  return out;
}

Pattern slice_env(const SliceSystem& S, const Pattern& y) {
  Pattern out(2);
  for (const auto& s : y.support())
    if (s[1] < 0 || s[1] >= S.N) out.set(s, y.at(s));
  return out;
}

namespace {

Shape strip_block(const Shape& A, int N) {
  std::vector<Site> v;
  for (const auto& a : A)
    for (int r = 0; r < N; ++r) v.emplace_back(a[0], r);
  return Shape(2, v);
}

}  // namespace

SliceKernelReport slice_kernel_equality_check(const SubshiftSpec& Y, const Interaction& phi, int N, const Shape& A,
                                              const Shape& box, Budget* budget) {
  if (A.dim() != 1 || A.empty()) throw PreconditionError("slice kernels act on a non-empty set of columns");
  SliceSystem S = slice_system(Y, phi, N);
  Constraint cy(Y);
  Shape AF = strip_block(A, N);
  if (!AF.subset_of(box)) throw PreconditionError("box does not contain the strip block");
  Shape dep = dependency_window(cy, phi, AF);
  if (!dep.subset_of(box)) throw PreconditionError("box does not cover the dependency window");
  std::vector<Site> full(dep.begin(), dep.end());
  for (const auto& s : dep)
    if (s[1] >= 0 && s[1] < N)
      for (int r = 0; r < N; ++r) full.emplace_back(s[0], r);
  Shape W2(2, full);
  if (!W2.subset_of(box)) throw PreconditionError("box cuts a strip column of the dependency window");
  Shape R = W2.minus(AF);
  std::set<int> wc;
  for (const auto& s : W2)
    if (s[1] >= 0 && s[1] < N) wc.insert(s[0]);
  std::vector<Site> w1;
  for (int c : wc) w1.emplace_back(c);
  Shape W1(1, w1);

  SliceKernelReport rep;
  rep.region = R;
  auto L = language(cy, R, 0, budget);
  const Pattern none(2);
  for (const auto& w : L.words) {
    Pattern ctx(R, w);
    Conditional k2 = gibbs_conditional(cy, phi, none, ctx, W2, AF, 0, budget);
    Pattern xctx = slice_columns(S, ctx), theta = slice_env(S, ctx);
    Conditional k1 = gibbs_conditional(S.rs.omega, S.rs.phi, theta, xctx, W1, A, 0, budget);
    ++rep.contexts;
    std::map<Word, double> p1;
    for (std::size_t i = 0; i < k1.fillings.size(); ++i) {
      Word flat;
      for (Symbol c : k1.fillings[i]) flat.insert(flat.end(), S.columns[c].begin(), S.columns[c].end());
      p1[flat] = k1.p[i];
    }
    for (std::size_t i = 0; i < k2.fillings.size(); ++i) {
      auto it = p1.find(k2.fillings[i]);
      double q = it == p1.end() ? 0.0 : it->second;
      rep.max_diff = std::max(rep.max_diff, std::abs(q - k2.p[i]));
      if (it != p1.end()) p1.erase(it);
      ++rep.fillings;
    }
    for (const auto& [f, q] : p1) rep.max_diff = std::max(rep.max_diff, q);
  }
  return rep;
}

Verdict slice_tmp_check(const SubshiftSpec& Y, int N, const Shape& A, int max_radius) {
  if (Y.dim() != 2 || A.dim() != 1) throw PreconditionError("slice memory sets need a 2-D base and 1-D columns");
  Constraint cy(Y);
  Shape AF = strip_block(A, N);
  Verdict base = find_memory_set(cy, AF, max_radius);
  if (!base.verified()) throw Error("no memory set found for the strip block of A");
  Shape B = shape_from_json(base.witness["B"], 2);
  std::vector<Site> cs;
  for (const auto& s : B)
    if (s[1] >= 0 && s[1] < N) cs.emplace_back(s[0]);
  Shape C(1, cs);
  const int rho = std::max(1, Y.radius());
  Shape Cd = C.dilate(rho);
  std::vector<Site> d2;
  for (const auto& c : Cd)
    for (int r = -rho; r < N + rho; ++r) d2.emplace_back(c[0], r);
  Shape D(2, d2);
  auto L = language(cy, D, 0);
  std::vector<long> key, pa, po;
  for (std::size_t i = 0; i < D.size(); ++i) {
    const Site& s = D[i];
    bool strip = s[1] >= 0 && s[1] < N;
    Site col(s[0]);
    if (!strip || (C.contains(col) && !A.contains(col)))
      key.push_back(static_cast<long>(i));
    else if (A.contains(col))
      pa.push_back(static_cast<long>(i));
    else
      po.push_back(static_cast<long>(i));
  }
  auto pick = [](const Word& w, const std::vector<long>& pos) {
    Word o(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) o[i] = w[pos[i]];
    return o;
  };
  struct Group {
    std::map<Word, std::size_t> P, Q;
    std::set<std::pair<Word, Word>> pairs;
  };
  std::map<Word, Group> groups;
  for (std::size_t i = 0; i < L.words.size(); ++i) {
    auto& g = groups[pick(L.words[i], key)];
    Word p = pick(L.words[i], pa), q = pick(L.words[i], po);
    g.P.emplace(p, i);
    g.Q.emplace(q, i);
    g.pairs.emplace(p, q);
  }
  json wit = {{"kind", "slice_memory"}, {"A", shape_to_json(A)}, {"C", shape_to_json(C)}, {"N", N},
              {"base_memory", shape_to_json(B)}};
  Verdict v;
  v.property = "slice_memory_set";
  v.exact = L.exact && base.exact;
  v.witness = wit;
  for (const auto& [k, g] : groups)
    if (g.pairs.size() != g.P.size() * g.Q.size()) {
      for (const auto& [p, ip] : g.P)
        for (const auto& [q, iq] : g.Q)
          if (!g.pairs.count({p, q})) {
            v.outcome = Outcome::Refuted;
            v.witness["x"] = pattern_to_json(Pattern(D, L.words[ip]));
            v.witness["y"] = pattern_to_json(Pattern(D, L.words[iq]));
            return v;
          }
    }
  v.outcome = Outcome::Verified;
  return v;
}

// ---------------------------------------------------------------------------

RatioReport meyerovitch_ratio_test(const WindowMeasure& mu, const RelativeSystem& rs, const Pattern& u,
                                   const Pattern& v, int interchange_radius) {
  return meyerovitch_ratio_test(mu, rs.omega, rs.phi, u, v, interchange_radius);
}

RatioReport meyerovitch_ratio_test(const WindowMeasure& mu, const Constraint& c, const Interaction& phi,
                                   const Pattern& u, const Pattern& v, int interchange_radius) {
  const Shape A = u.support();
  if (!(v.support() == A)) throw PreconditionError("patterns need a common support");
  const Shape& W = mu.window;
  if (!A.subset_of(W)) throw PreconditionError("support must lie in the window");
  const Shape R = W.minus(A);
  const Word uw = u.values_on(A), vw = v.values_on(A);
  std::vector<long> pA, pR;
  for (const auto& s : A) pA.push_back(W.index_of(s));
  for (const auto& s : R) pR.push_back(W.index_of(s));
  RatioReport rep;
  std::vector<char> ok_env(mu.env_count(), 0);
  for (int e = 0; e < mu.env_count(); ++e) {
    Verdict iv = interchangeable(c, mu.env(e), u, v, interchange_radius);
    ok_env[e] = iv.verified();
    if (ok_env[e])
      ++rep.envs_checked;
    else
      ++rep.envs_skipped;
  }
  // (env, context) -> masses of u w and v w
  std::map<std::pair<int, Word>, std::pair<double, double>> ctx;
  for (const auto& [k, p] : mu.table) {
    if (!ok_env[k.first]) continue;
    Word a(pA.size()), r(pR.size());
    for (std::size_t i = 0; i < pA.size(); ++i) a[i] = k.second[pA[i]];
    for (std::size_t i = 0; i < pR.size(); ++i) r[i] = k.second[pR[i]];
    if (a == uw) ctx[{k.first, r}].first += p;
    if (a == vw) ctx[{k.first, r}].second += p;
  }
  for (const auto& [key, m] : ctx) {
    if (m.first <= 0 && m.second <= 0) continue;
    const Pattern& env = mu.env(key.first);
    Pattern w(R, key.second);
    Pattern xu = merge(w, u), xv = merge(w, v);
    if (!c.admissible(env, xu) || !c.admissible(env, xv)) continue;
    double ru = m.first * std::exp(conditional_energy_inf(phi, env, xu, W, A).value);
    double rv = m.second * std::exp(conditional_energy_inf(phi, env, xv, W, A).value);
    double dev = std::abs(ru - rv) / std::max(ru, rv);
    ++rep.contexts;
    if (dev > rep.max_deviation || rep.worst.empty()) {
      rep.max_deviation = std::max(rep.max_deviation, dev);
      rep.worst = {{"env", key.first}, {"context", pattern_to_json(w)}, {"ratio_u", ru}, {"ratio_v", rv}};
    }
  }
  if (rep.contexts == 0) throw Error("no context qualifies for the ratio test");
  return rep;
}

Verdict nonoverlap_check(const Constraint& c, const Pattern& u, const Pattern& v, int radius) {
  const Shape A = u.support();
  if (!(v.support() == A)) throw PreconditionError("patterns need a common support");
  Shape G = A.difference_set();
  json wit = {{"kind", "nonoverlap"}, {"u", pattern_to_json(u)}, {"v", pattern_to_json(v)}, {"radius", radius}};
  Verdict out;
  out.property = "nonoverlap";
  out.exact = c.exact_at(radius);
  const Pattern* ps[2] = {&u, &v};
  for (const auto& g : G) {
    if (g == Site()) continue;
    for (const Pattern* p : ps)
      for (const Pattern* p2 : ps) {
        Pattern m;
        try {
          m = merge(*p, p2->translate(g));
        } catch (const Conflict&) {
          continue;
        }
        if (admissible_pattern(c, m, radius)) {
          wit["offset"] = shape_to_json(Shape(A.dim(), {g}));
          wit["configuration"] = pattern_to_json(m);
          out.outcome = Outcome::Refuted;
          out.witness = wit;
          return out;
        }
      }
  }
  out.outcome = Outcome::Verified;
  out.witness = wit;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Shape> site_blocks(const Shape& W) {
  std::vector<Shape> b;
  for (const auto& s : W) b.emplace_back(W.dim(), std::vector<Site>{s});
  return b;
}

EquilibriumResult relative_equilibrium_search(const Constraint& c, const Interaction& phi,
                                              const std::vector<EnvAtom>& nu, const Shape& W,
                                              const std::vector<Shape>& blocks, int max_rounds, double gain_tol) {
  EquilibriumResult res;
  res.mu = WindowMeasure(W);
  std::vector<double> weight;
  if (nu.empty()) {
    weight.push_back(1.0);
  } else {
    double tot = 0;
    for (const auto& a : nu) {
      if (!(a.weight >= 0)) throw PreconditionError("negative environment weight");
      tot += a.weight;
      res.mu.env_atoms.push_back(a.env);
    }
    if (!(tot > 0)) throw PreconditionError("environment weights sum to zero");
    for (const auto& a : nu) weight.push_back(a.weight / tot);
  }
  for (int e = 0; e < res.mu.env_count(); ++e) {
    if (weight[e] == 0) continue;
    auto L = language(c, res.mu.env(e), W, 0);
    if (L.words.empty()) throw PreconditionError("environment atom with an empty fiber");
    auto q = split_mass(weight[e], std::vector<double>(L.words.size(), 1.0));
    for (std::size_t i = 0; i < L.words.size(); ++i) res.mu.add(e, L.words[i], q[i]);
  }
  res.pressure = pressure(res.mu, phi, W);
  res.trace.push_back(res.pressure);
  res.stop = "round budget exhausted";
  for (int round = 0; round < max_rounds; ++round) {
    const double start = res.pressure;
    for (const auto& B : blocks) {
      WindowMeasure next = kernel_apply(c, phi, B, res.mu);
      double p = pressure(next, phi, W);
      ++res.steps;
      // a kernel step never lowers the pressure; rounding may show a tiny dip
      if (p < res.pressure - 1e-12) throw Error("kernel step decreased the window pressure");
      res.mu = std::move(next);
      res.pressure = p;
    }
    res.trace.push_back(res.pressure);
    if (res.pressure - start < gain_tol) {
      res.converged = true;
      res.stop = "round gain below tolerance";
      break;
    }
  }
  return res;
}

double pressure_increment_1d(const Constraint& c, const Interaction& phi,
                             const std::function<std::vector<EnvAtom>(const Shape&)>& nu, int n,
                             const std::function<std::vector<Shape>(const Shape&)>& blocks) {
  if (n < 1) throw PreconditionError("window length must be positive");
  Shape a = Shape::interval(0, n - 1), b = Shape::interval(0, n);
  auto ra = relative_equilibrium_search(c, phi, nu(a), a, blocks(a));
  auto rb = relative_equilibrium_search(c, phi, nu(b), b, blocks(b));
  return rb.pressure - ra.pressure;
}

}  // namespace gibbslab
