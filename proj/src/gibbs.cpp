#include "gibbslab/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace gibbslab {

double log_sum_exp(const std::vector<double>& a) {
  if (a.empty()) return -std::numeric_limits<double>::infinity();
  double m = *std::max_element(a.begin(), a.end());
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : a) s += std::exp(x - m);
  return m + std::log(s);
}

BoltzmannDist boltzmann(const std::vector<double>& U) {
  if (U.empty()) throw PreconditionError("Boltzmann distribution of an empty support");
  for (double u : U)
    if (!std::isfinite(u)) throw PreconditionError("energies must be finite");
  BoltzmannDist d;
  std::vector<double> neg(U.size());
  for (std::size_t i = 0; i < U.size(); ++i) neg[i] = -U[i];
  d.logZ = log_sum_exp(neg);
  d.p.resize(U.size());
  for (std::size_t i = 0; i < U.size(); ++i) d.p[i] = std::exp(neg[i] - d.logZ);
  return d;
}

double free_energy_functional(const std::vector<double>& p, const std::vector<double>& U) {
  double v = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > kNegligible) v -= p[i] * std::log(p[i]);
    v -= p[i] * U[i];
  }
  return v;
}

namespace {

const Pattern& no_env(int dim) {
  static thread_local Pattern e[kMaxDim + 1] = {Pattern(1), Pattern(1), Pattern(2), Pattern(3)};
  return e[dim];
}

Pattern context_on(const Pattern& context, const Shape& W, const Shape& A) {
  auto [lo, hi] = W.bounds();
  Pattern x(W.dim(), lo, hi);
  for (const auto& s : W) {
    if (A.contains(s)) continue;
    Symbol v = context.at(s);
    if (v == kUnset) throw PreconditionError("context does not cover " + s.str(W.dim()));
    x.set(s, v);
  }
  return x;
}

}  // namespace

Conditional gibbs_conditional(const Constraint& c, const Interaction& phi, const Pattern& env, const Pattern& context,
                              const Shape& W, const Shape& A, int margin, Budget* budget) {
  if (!A.subset_of(W)) throw PreconditionError("kernel set must lie in the window");
  Budget local;
  Budget& b = budget ? *budget : local;
  Pattern x = context_on(context, W, A);
  Conditional out;
  Word w(A.size());
  Truncated last;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == A.size()) {
      if (margin > 0 && !admissible_pattern(c, env, x, margin, &b)) return;
      last = conditional_energy_inf(phi, env, x, W, A);
      out.fillings.push_back(w);
      out.energy.push_back(last.value);
      out.err = std::max(out.err, last.err);
      return;
    }
    for (int a = 0; a < c.q(); ++a) {
      b.tick();
      x.set(A[i], static_cast<Symbol>(a));
      w[i] = static_cast<Symbol>(a);
      if (c.admissible_near(env, x, A[i])) rec(i + 1);
    }
    x.unset(A[i]);
  };
  rec(0);
  if (!out.fillings.empty()) {
    auto d = boltzmann(out.energy);
    out.p = std::move(d.p);
    out.logZ = d.logZ;
  }
  return out;
}

LogPartition partition_conditional(const Constraint& c, const Interaction& phi, const Pattern& env,
                                const Pattern& context, const Shape& W, const Shape& A, int margin) {
  auto k = gibbs_conditional(c, phi, env, context, W, A, margin);
  if (k.empty()) throw Error("context admits no filling of the set");
  return {k.logZ, k.err};
}

double partition_free(const Constraint& c, const Interaction& phi, const Pattern& env, const Shape& A, int margin,
                      Budget* budget) {
  auto L = language(c, env, A, margin, budget);
  if (L.words.empty()) throw Error("empty language");
  std::vector<double> a;
  a.reserve(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) a.push_back(-energy(phi, env, L.pattern(i), A));
  return log_sum_exp(a);
}

double partition_free_1d(const SubshiftSpec& s, const Interaction& phi, int n) {
  if (s.dim() != 1 || !s.is_sft_like()) throw PreconditionError("needs a one-dimensional SFT");
  if (phi.dim() != 1 || phi.tail != 0) throw PreconditionError("needs a finite-range one-dimensional interaction");
  for (const auto& t : phi.terms())
    if (!t.env_shape.empty()) throw PreconditionError("relative terms need an environment");
  if (n < 1) throw PreconditionError("interval must be nonempty");
  const int r = std::max({1, s.radius(), phi.range()});
  if (n <= r) return partition_free(s, phi, no_env(1), Shape::interval(0, n - 1));
  const int q = s.q();
  std::size_t S = 1;
  for (int i = 0; i < r; ++i) {
    S *= static_cast<std::size_t>(q);
    if (S > (std::size_t(1) << 22)) throw PreconditionError("state space too large");
  }
  Pattern none(1);
  Shape st = Shape::interval(0, r - 1), ext = Shape::interval(0, r);
  auto decode = [&](std::size_t code, Word& w) {
    for (int i = r - 1; i >= 0; --i) w[i] = static_cast<Symbol>(code % q), code /= q;
  };
  std::vector<char> alive(S, 0);
  std::vector<double> e0(S, 0.0);
  Word w(r), w1(r + 1);
  for (std::size_t c = 0; c < S; ++c) {
    decode(c, w);
    Pattern p(st, w);
    if (!s.locally_admissible(p)) continue;
    alive[c] = 1;
    e0[c] = energy(phi, none, p, st);
  }
  // edges c -> (c*q + a) mod S with the increment energy of the new site
  std::vector<double> inc(S * q, 0.0);
  std::vector<char> edge(S * q, 0);
  Shape last(1, {Site(r)});
  for (std::size_t c = 0; c < S; ++c) {
    if (!alive[c]) continue;
    decode(c, w);
    for (int a = 0; a < q; ++a) {
      std::copy(w.begin(), w.end(), w1.begin());
      w1[r] = static_cast<Symbol>(a);
      Pattern p(ext, w1);
      if (!s.admissible_near(p, Site(r))) continue;
      edge[c * q + a] = 1;
      inc[c * q + a] = conditional_energy(phi, none, p, last, st);
    }
  }
  auto next = [&](std::size_t c, int a) { return (c * q + a) % S; };
  // keep states on bi-infinite paths
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<char> has_in(S, 0), has_out(S, 0);
    for (std::size_t c = 0; c < S; ++c) {
      if (!alive[c]) continue;
      for (int a = 0; a < q; ++a)
        if (edge[c * q + a] && alive[next(c, a)]) has_out[c] = 1, has_in[next(c, a)] = 1;
    }
    for (std::size_t c = 0; c < S; ++c)
      if (alive[c] && (!has_in[c] || !has_out[c])) alive[c] = 0, changed = true;
  }
  std::vector<double> v(S, 0.0), nv(S);
  bool any = false;
  double m0 = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < S; ++c)
    if (alive[c]) m0 = std::max(m0, -e0[c]), any = true;
  if (!any) throw Error("empty language");
  for (std::size_t c = 0; c < S; ++c)
    if (alive[c]) v[c] = std::exp(-e0[c] - m0);
  // scale by powers of two so that exact counts stay exact
  long exponent = 0;
  for (int step = r; step < n; ++step) {
    std::fill(nv.begin(), nv.end(), 0.0);
    for (std::size_t c = 0; c < S; ++c) {
      if (v[c] == 0) continue;
      for (int a = 0; a < q; ++a) {
        std::size_t t = next(c, a);
        if (edge[c * q + a] && alive[t]) nv[t] += v[c] * std::exp(-inc[c * q + a]);
      }
    }
    double mx = *std::max_element(nv.begin(), nv.end());
    int e = 0;
    std::frexp(mx, &e);
    for (auto& x : nv) x = std::ldexp(x, -e);
    exponent += e;
    v.swap(nv);
  }
  double tot = std::accumulate(v.begin(), v.end(), 0.0);
  return static_cast<double>(exponent) * std::log(2.0) + std::log(tot) + m0;
}

WindowMeasure gibbs_window_measure(const Constraint& c, const Interaction& phi, const Pattern& env, const Shape& W,
                                   int margin) {
  auto L = language(c, env, W, margin);
  if (L.words.empty()) throw Error("empty language");
  std::vector<double> U;
  for (std::size_t i = 0; i < L.size(); ++i) U.push_back(energy(phi, env, L.pattern(i), W));
  auto d = boltzmann(U);
  WindowMeasure mu(W);
  if (!env.empty()) {
    mu.boundary = Boundary::Env;
    mu.env_atoms.push_back(env);
  }
  for (std::size_t i = 0; i < L.size(); ++i) mu.table[{0, L.words[i]}] = d.p[i];
  return mu;
}

std::vector<double> split_mass(double m, const std::vector<double>& weights) {
  if (weights.empty()) throw PreconditionError("no weights to split over");
  std::vector<double> q(weights.size(), 0.0);
  if (m == 0) return q;
  double tw = 0;
  for (double w : weights) tw += w;
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = m * (weights[i] / tw);
  auto sum = [&] {
    double s = 0;
    for (double x : q) s += x;
    return s;
  };
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return q[a] > q[b]; });
  // the rounded sum is monotone in each entry: bisect one entry over the ordered bit patterns
  auto bits = [](double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, sizeof u);
    return u;
  };
  auto from = [](std::uint64_t u) {
    double x;
    std::memcpy(&x, &u, sizeof x);
    return x;
  };
  for (std::size_t k : order) {
    if (sum() == m) return q;
    double keep = q[k];
    std::uint64_t lo = 0, hi = bits(2 * m);
    while (lo < hi) {
      std::uint64_t mid = lo + (hi - lo) / 2;
      q[k] = from(mid);
      if (sum() >= m)
        hi = mid;
      else
        lo = mid + 1;
    }
    q[k] = from(lo);
    if (sum() == m) return q;
    q[k] = keep;
  }
  throw Error("mass could not be split exactly");
}

WindowMeasure kernel_apply(const Constraint& c, const Interaction& phi, const Shape& A, const WindowMeasure& mu,
                           int margin) {
  const Shape& W = mu.window;
  if (!A.subset_of(W)) throw PreconditionError("kernel set must lie in the window");
  Shape R = W.minus(A);
  WindowMeasure ext = marginal(mu, R);
  std::vector<long> posA, posR;
  for (const auto& s : A) posA.push_back(W.index_of(s));
  for (const auto& s : R) posR.push_back(W.index_of(s));
  WindowMeasure out(W);
  out.boundary = mu.boundary;
  out.env_atoms = mu.env_atoms;
  Word full(W.size());
  for (const auto& [key, m] : ext.table) {
    const auto& [e, ctx] = key;
    Pattern cp(R, ctx);
    auto k = gibbs_conditional(c, phi, mu.env(e), cp, W, A, margin);
    if (k.empty()) throw PreconditionError("measure charges a context without admissible fillings");
    auto qs = split_mass(m, k.p);
    for (std::size_t i = 0; i < posR.size(); ++i) full[posR[i]] = ctx[i];
    for (std::size_t f = 0; f < k.fillings.size(); ++f) {
      for (std::size_t i = 0; i < posA.size(); ++i) full[posA[i]] = k.fillings[f][i];
      out.table[{e, full}] = qs[f];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Shape dependency_window(const Constraint& c, const Interaction& phi, const Shape& A) {
  std::vector<Site> v(A.begin(), A.end());
  auto add_translates = [&](const Shape& T) {
    for (const auto& a : A)
      for (const auto& o : T)
        for (const auto& t : T) v.push_back(a - o + t);
  };
  const auto& s = c.shift;
  if (s.kind() == SubshiftSpec::Kind::Oracle) {
    for (const auto& x : A.dilate(s.radius())) v.push_back(x);
  } else {
    for (const auto& r : s.rules()) add_translates(r.window);
  }
  if (c.coupled()) {
    if (!c.joint.empty()) {
      for (const auto& j : c.joint) add_translates(j.x_window);
    } else {
      for (const auto& x : A.dilate(c.fiber_radius)) v.push_back(x);
    }
  }
  for (const auto& t : phi.terms()) add_translates(t.shape);
  return Shape(A.dim(), v);
}

Shape env_dependency(const Constraint& c, const Interaction& phi, const Shape& A) {
  std::vector<Site> v;
  int dim = phi.env_dim();
  for (const auto& j : c.joint) {
    dim = j.env_window.empty() ? dim : j.env_window.dim();
    for (const auto& a : A)
      for (const auto& o : j.x_window)
        for (const auto& e : j.env_window) v.push_back(a - o + e);
  }
  if (c.coupled() && c.joint.empty())
    for (const auto& x : A.dilate(c.fiber_radius)) v.push_back(x);
  for (const auto& t : phi.terms())
    for (const auto& a : A)
      for (const auto& o : t.shape)
        for (const auto& e : t.env_shape) v.push_back(a - o + e);
  return Shape(dim, v);
}

namespace {

std::string pool_key(const Conditional& k) {
  std::ostringstream os;
  os.precision(12);
  for (std::size_t i = 0; i < k.fillings.size(); ++i) {
    for (Symbol s : k.fillings[i]) os << s << ',';
    os << ':' << k.p[i] << ';';
  }
  return os.str();
}

struct ContextData {
  Word env, ctx;
  int env_index = 0;
  double mass = 0;
  std::uint64_t count = 0;
  std::map<Word, double> cond;  // unnormalised masses of A-words
};

double tv_of(const std::map<Word, double>& emp, double mass, const Conditional& k) {
  double l1 = 0;
  std::map<Word, double> pred;
  for (std::size_t i = 0; i < k.fillings.size(); ++i) pred[k.fillings[i]] = k.p[i];
  for (const auto& [u, p] : pred) {
    auto it = emp.find(u);
    l1 += std::abs((it == emp.end() ? 0.0 : it->second / mass) - p);
  }
  for (const auto& [u, m] : emp)
    if (!pred.count(u)) l1 += m / mass;
  return 0.5 * l1;
}

GibbsReport finish_report(std::vector<ContextData>& ctxs, const std::function<Conditional(const ContextData&)>& predict,
                          const Shape& W, double tol, ContextMode mode, std::uint64_t min_count, bool counted) {
  GibbsReport rep;
  rep.tol = tol;
  rep.window_size = W.size();
  double total = 0;
  for (const auto& c : ctxs) total += c.mass;
  std::vector<ContextResult> results;
  double used = 0, agg = 0;
  auto keep = [&](std::uint64_t n) { return !counted || n >= min_count; };
  if (mode == ContextMode::Full) {
    for (const auto& c : ctxs) {
      if (c.mass <= 0) continue;
      if (!keep(c.count)) {
        ++rep.excluded;
        rep.excluded_mass += c.mass / total;
        continue;
      }
      auto k = predict(c);
      double tv = k.empty() ? 1.0 : tv_of(c.cond, c.mass, k);
      ++rep.contexts;
      used += c.mass;
      agg += c.mass * tv;
      rep.max_tv = std::max(rep.max_tv, tv);
      results.push_back({c.env, c.ctx, c.mass / total, c.count, tv});
    }
    rep.pools = rep.contexts;
  } else {
    struct Pool {
      Conditional k;
      double mass = 0;
      std::uint64_t count = 0;
      std::size_t members = 0;
      std::map<Word, double> cond;
      ContextData first;
    };
    std::map<std::string, Pool> pools;
    for (const auto& c : ctxs) {
      if (c.mass <= 0) continue;
      auto k = predict(c);
      auto& P = pools[k.empty() ? std::string("empty") : pool_key(k)];
      if (P.members == 0) P.k = k, P.first = c;
      ++P.members;
      P.mass += c.mass;
      P.count += c.count;
      for (const auto& [u, m] : c.cond) P.cond[u] += m;
    }
    for (auto& [key, P] : pools) {
      if (!keep(P.count)) {
        rep.excluded += P.members;
        rep.excluded_mass += P.mass / total;
        continue;
      }
      double tv = P.k.empty() ? 1.0 : tv_of(P.cond, P.mass, P.k);
      rep.contexts += P.members;
      ++rep.pools;
      used += P.mass;
      agg += P.mass * tv;
      rep.max_tv = std::max(rep.max_tv, tv);
      results.push_back({P.first.env, P.first.ctx, P.mass / total, P.count, tv});
    }
  }
  rep.aggregate_tv = used > 0 ? agg / used : 0.0;
  rep.aggregate_l1 = 2 * rep.aggregate_tv;
  rep.pass = rep.contexts > 0 && rep.aggregate_tv <= tol;
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.tv > b.tv; });
  if (results.size() > 5) results.resize(5);
  rep.worst = std::move(results);
  return rep;
}

}  // namespace

GibbsReport gibbs_property_test(const WindowMeasure& mu, const Interaction& phi, const Shape& A, const Constraint& c,
                                double tol, ContextMode mode) {
  const Shape& W = mu.window;
  if (!A.subset_of(W)) throw PreconditionError("test set must lie in the window");
  Shape R = W.minus(A);
  std::vector<long> posA, posR;
  for (const auto& s : A) posA.push_back(W.index_of(s));
  for (const auto& s : R) posR.push_back(W.index_of(s));
  std::map<std::pair<int, Word>, ContextData> by;
  Word ctx(R.size()), u(A.size());
  for (const auto& [key, p] : mu.table) {
    for (std::size_t i = 0; i < posR.size(); ++i) ctx[i] = key.second[posR[i]];
    for (std::size_t i = 0; i < posA.size(); ++i) u[i] = key.second[posA[i]];
    auto& d = by[{key.first, ctx}];
    d.env_index = key.first;
    d.ctx = ctx;
    d.mass += p;
    d.cond[u] += p;
  }
  std::vector<ContextData> v;
  for (auto& [k, d] : by) v.push_back(std::move(d));
  auto predict = [&](const ContextData& d) {
    return gibbs_conditional(c, phi, mu.env(d.env_index), Pattern(R, d.ctx), W, A);
  };
  return finish_report(v, predict, W, tol, mode, 0, false);
}

GibbsReport gibbs_property_test(const EmpiricalCounts& counts, const Interaction& phi, const Shape& A,
                                const Constraint& c, double tol, ContextMode mode, std::uint64_t min_count) {
  const Shape& W = counts.window;
  if (!A.subset_of(W)) throw PreconditionError("test set must lie in the window");
  if (counts.total == 0) throw PreconditionError("no samples");
  Shape R = W.minus(A);
  std::vector<long> posA, posR;
  for (const auto& s : A) posA.push_back(W.index_of(s));
  for (const auto& s : R) posR.push_back(W.index_of(s));
  std::map<std::pair<Word, Word>, ContextData> by;
  Word ctx(R.size()), u(A.size());
  const double tot = static_cast<double>(counts.total);
  for (const auto& [key, n] : counts.counts) {
    for (std::size_t i = 0; i < posR.size(); ++i) ctx[i] = key.second[posR[i]];
    for (std::size_t i = 0; i < posA.size(); ++i) u[i] = key.second[posA[i]];
    auto& d = by[{key.first, ctx}];
    d.env = key.first;
    d.ctx = ctx;
    d.mass += static_cast<double>(n) / tot;
    d.count += n;
    d.cond[u] += static_cast<double>(n) / tot;
  }
  std::vector<ContextData> v;
  for (auto& [k, d] : by) v.push_back(std::move(d));
  auto predict = [&](const ContextData& d) {
    Pattern env = counts.env_window.empty() ? Pattern(counts.env_dim) : Pattern(counts.env_window, d.env);
    return gibbs_conditional(c, phi, env, Pattern(R, d.ctx), W, A);
  };
  return finish_report(v, predict, W, tol, mode, min_count, true);
}

OptimalityReport local_optimality_check(const WindowMeasure& mu, const Interaction& phi, const Shape& A,
                                        const Constraint& c, int margin) {
  Shape B = mu.window.minus(A);
  OptimalityReport r;
  r.window_size = mu.window.size();
  r.lhs = conditional_pressure(mu, phi, A, B);
  r.rhs = conditional_pressure(kernel_apply(c, phi, A, mu, margin), phi, A, B);
  r.gap = r.rhs - r.lhs;
  return r;
}

FellerReport feller_locality_check(const Constraint& c, const Interaction& phi, const Pattern& env, const Shape& A,
                                   const Pattern& p, const Shape& B, const Shape& W, int trials, std::uint64_t seed) {
  if (!A.subset_of(B) || !B.subset_of(W)) throw PreconditionError("need A inside B inside W");
  Word target = p.values_on(A);
  std::mt19937_64 rng(seed);
  auto shuffle = [&](std::vector<Symbol>& o) { std::shuffle(o.begin(), o.end(), rng); };
  Shape ring = B.minus(A);
  FellerReport rep;
  auto prob = [&](const Conditional& k) {
    for (std::size_t i = 0; i < k.fillings.size(); ++i)
      if (k.fillings[i] == target) return k.p[i];
    return 0.0;
  };
  for (int t = 0; t < trials; ++t) {
    Budget b{1000000};
    Pattern x1(W.dim());
    try {
      if (!fill_region(c, env, x1, W, b, shuffle)) continue;
    } catch (const BudgetExceeded&) {
      continue;
    }
    Pattern x2 = x1.restrict_to(ring);
    try {
      if (!fill_region(c, env, x2, W, b, shuffle)) continue;
    } catch (const BudgetExceeded&) {
      continue;
    }
    auto k1 = gibbs_conditional(c, phi, env, x1, W, A);
    auto k2 = gibbs_conditional(c, phi, env, x2, W, A);
    if (k1.empty() || k2.empty()) continue;
    ++rep.pairs;
    rep.max_deviation = std::max(rep.max_deviation, std::abs(prob(k1) - prob(k2)));
    rep.truncation_err = std::max({rep.truncation_err, k1.err, k2.err});
  }
  return rep;
}

std::vector<std::pair<int, double>> variational_pressure_estimate(const Constraint& c, const Interaction& phi,
                                                                  const std::vector<EnvAtom>& nu, int n_min,
                                                                  int n_max) {
  std::vector<EnvAtom> atoms = nu;
  if (atoms.empty()) atoms.push_back({Pattern(c.dim()), 1.0});
  double tw = 0;
  for (const auto& a : atoms) tw += a.weight;
  if (std::abs(tw - 1) > 1e-12) throw PreconditionError("environment weights must sum to one");
  std::vector<std::pair<int, double>> out;
  for (int n = n_min; n <= n_max; ++n) {
    Shape F = Shape::ball(c.dim(), n);
    double v = 0;
    for (const auto& a : atoms) {
      double lz;
      if (!c.coupled() && a.env.empty() && c.dim() == 1 && c.shift.is_sft_like())
        lz = partition_free_1d(c.shift, phi, 2 * n + 1);
      else
        lz = partition_free(c, phi, a.env, F);
      v += a.weight * lz / static_cast<double>(F.size());
    }
    out.emplace_back(n, v);
  }
  return out;
}

}  // namespace gibbslab
