#include "gibbslab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gibbslab {

namespace {

const Pattern& trivial_env(int dim) {
  static thread_local Pattern e[kMaxDim + 1] = {Pattern(1), Pattern(1), Pattern(2), Pattern(3)};
  return e[dim];
}

std::vector<std::size_t> positions(const Shape& W, const Shape& A) {
  std::vector<std::size_t> pos;
  pos.reserve(A.size());
  for (const auto& s : A) {
    long i = W.index_of(s);
    if (i < 0) throw PreconditionError("site " + s.str(W.dim()) + " is outside the measure window");
    pos.push_back(static_cast<std::size_t>(i));
  }
  return pos;
}

double plogp_sum(const std::map<MeasureKey, double>& t, const std::vector<double>& envm) {
  double h = 0;
  for (const auto& [k, p] : t) {
    if (p < kNegligible) continue;
    h -= p * std::log(p / envm[k.first]);
  }
  return h;
}

}  // namespace

const Pattern& WindowMeasure::env(int i) const {
  if (env_atoms.empty()) return trivial_env(window.dim());
  return env_atoms.at(static_cast<std::size_t>(i));
}

double WindowMeasure::total() const {
  double s = 0;
  for (const auto& [k, p] : table) s += p;
  return s;
}

void WindowMeasure::add(int env, const Word& w, double p) {
  if (w.size() != window.size()) throw PreconditionError("word length differs from the window");
  if (env < 0 || env >= env_count()) throw PreconditionError("environment index out of range");
  table[{env, w}] += p;
}

void WindowMeasure::validate(double tol) const {
  if (table.size() > kDenseCap) throw PreconditionError("measure table exceeds the size cap");
  for (const auto& [k, p] : table) {
    if (!(p >= 0)) throw PreconditionError("negative or NaN probability");
    if (k.second.size() != window.size()) throw PreconditionError("word length differs from the window");
    if (k.first < 0 || k.first >= env_count()) throw PreconditionError("environment index out of range");
  }
  double t = total();
  if (std::abs(t - 1.0) > tol) throw PreconditionError("probabilities sum to " + std::to_string(t));
}

WindowMeasure marginal(const WindowMeasure& mu, const Shape& A) {
  auto pos = positions(mu.window, A);
  WindowMeasure out(A);
  out.boundary = mu.boundary;
  out.env_atoms = mu.env_atoms;
  Word w(A.size());
  for (const auto& [k, p] : mu.table) {
    for (std::size_t i = 0; i < pos.size(); ++i) w[i] = k.second[pos[i]];
    out.table[{k.first, w}] += p;
  }
  return out;
}

std::vector<double> env_marginal(const WindowMeasure& mu) {
  std::vector<double> m(static_cast<std::size_t>(mu.env_count()), 0.0);
  for (const auto& [k, p] : mu.table) m[k.first] += p;
  return m;
}

WindowMeasure condition(const WindowMeasure& mu, const Pattern& p, const Shape& B) {
  auto posB = positions(mu.window, B);
  Shape rest = mu.window.minus(B);
  auto posR = positions(mu.window, rest);
  Word want = p.values_on(B);
  WindowMeasure out(rest);
  out.boundary = mu.boundary;
  out.env_atoms = mu.env_atoms;
  double mass = 0;
  Word w(rest.size());
  for (const auto& [k, q] : mu.table) {
    bool ok = true;
    for (std::size_t i = 0; i < posB.size() && ok; ++i) ok = k.second[posB[i]] == want[i];
    if (!ok) continue;
    for (std::size_t i = 0; i < posR.size(); ++i) w[i] = k.second[posR[i]];
    out.table[{k.first, w}] += q;
    mass += q;
  }
  if (mass <= 0) throw PreconditionError("conditioning on a null event");
  for (auto& [k, q] : out.table) q /= mass;
  return out;
}

double entropy(const WindowMeasure& mu, const Shape& A) {
  auto envm = env_marginal(mu);
  return plogp_sum(marginal(mu, A).table, envm);
}

double conditional_entropy(const WindowMeasure& mu, const Shape& A, const Shape& B) {
  // everything from the joint marginal, so that equal marginals give identical values
  WindowMeasure m = marginal(mu, A.unite(B));
  return entropy(m, m.window) - entropy(m, B);
}

double expected_energy(const WindowMeasure& mu, const Interaction& phi, const Shape& A) {
  if (phi.zero()) return 0;
  WindowMeasure m = marginal(mu, A);
  double e = 0;
  for (const auto& [k, p] : m.table) {
    if (p == 0) continue;
    e += p * energy(phi, mu.env(k.first), Pattern(A, k.second), A);
  }
  return e;
}

double pressure(const WindowMeasure& mu, const Interaction& phi, const Shape& A) {
  return entropy(mu, A) - expected_energy(mu, phi, A);
}

double conditional_pressure(const WindowMeasure& mu, const Interaction& phi, const Shape& A, const Shape& B) {
  Shape AB = A.unite(B);
  WindowMeasure m = marginal(mu, AB);
  double h = entropy(m, AB) - entropy(m, B);
  if (phi.zero()) return h;
  double e = 0;
  for (const auto& [k, p] : m.table) {
    if (p == 0) continue;
    e += p * conditional_energy(phi, mu.env(k.first), Pattern(AB, k.second), A, B);
  }
  return h - e;
}

// ---------------------------------------------------------------------------

double MarkovChain::entropy_rate() const {
  double h = 0;
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) {
      double x = p(i, j);
      if (x > kNegligible) h -= pi[i] * x * std::log(x);
    }
  return h;
}

WindowMeasure MarkovChain::window(int n, int offset) const {
  if (n < 1) throw PreconditionError("window length must be positive");
  WindowMeasure mu(Shape::interval(offset, offset + n - 1));
  Word w(static_cast<std::size_t>(n));
  std::function<void(int, double)> rec = [&](int i, double mass) {
    if (i == n) {
      mu.table[{0, w}] += mass;
      return;
    }
    for (int a = 0; a < q; ++a) {
      double m = i == 0 ? pi[a] : mass * p(w[i - 1], a);
      if (m <= 0) continue;
      w[i] = static_cast<Symbol>(a);
      rec(i + 1, m);
    }
  };
  rec(0, 1.0);
  return mu;
}

MarkovChain MarkovChain::from_matrix(int q, std::vector<double> P) {
  if (static_cast<int>(P.size()) != q * q) throw PreconditionError("transition matrix has the wrong size");
  for (int i = 0; i < q; ++i) {
    double s = 0;
    for (int j = 0; j < q; ++j) {
      if (P[i * q + j] < 0) throw PreconditionError("negative transition probability");
      s += P[i * q + j];
    }
    if (std::abs(s - 1) > 1e-12) throw PreconditionError("transition row does not sum to one");
  }
  MarkovChain c;
  c.q = q;
  c.P = std::move(P);
  // lazy version converges also for periodic chains
  std::vector<double> pi(q, 1.0 / q), nxt(q);
  for (int it = 0; it < 1000000; ++it) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) nxt[j] += pi[i] * c.p(i, j);
    double diff = 0;
    for (int j = 0; j < q; ++j) {
      nxt[j] = 0.5 * (nxt[j] + pi[j]);
      diff = std::max(diff, std::abs(nxt[j] - pi[j]));
    }
    pi.swap(nxt);
    if (diff < 1e-16) break;
  }
  double s = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (auto& x : pi) x /= s;
  c.pi = std::move(pi);
  return c;
}

namespace {

void check_irreducible(int q, const std::vector<double>& T) {
  for (int start = 0; start < q; ++start) {
    std::vector<char> seen(q, 0);
    std::vector<int> st{start};
    seen[start] = 1;
    while (!st.empty()) {
      int i = st.back();
      st.pop_back();
      for (int j = 0; j < q; ++j)
        if (T[i * q + j] > 0 && !seen[j]) seen[j] = 1, st.push_back(j);
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      throw PreconditionError("transfer matrix is reducible");
  }
}

std::vector<double> power(int q, const std::vector<double>& T, bool left, double tol, double& lambda, int& iters) {
  std::vector<double> v(q, 1.0 / q), w(q);
  lambda = 0;
  for (iters = 1; iters <= 1000000; ++iters) {
    std::fill(w.begin(), w.end(), 0.0);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) {
        double t = left ? T[j * q + i] : T[i * q + j];
        w[i] += t * v[j];
      }
    for (int i = 0; i < q; ++i) w[i] += v[i];  // shift by the identity against periodicity
    double s = std::accumulate(w.begin(), w.end(), 0.0);
    double lam = s - 1.0;  // v sums to one
    double diff = 0;
    for (int i = 0; i < q; ++i) {
      w[i] /= s;
      diff = std::max(diff, std::abs(w[i] - v[i]));
    }
    v.swap(w);
    bool done = std::abs(lam - lambda) <= tol * std::max(1.0, lam) && diff <= tol;
    lambda = lam;
    if (done) break;
  }
  return v;
}

}  // namespace

TransferResult perron(int q, const std::vector<double>& T, double tol) {
  if (static_cast<int>(T.size()) != q * q) throw PreconditionError("matrix has the wrong size");
  for (double t : T)
    if (t < 0 || !std::isfinite(t)) throw PreconditionError("matrix entries must be finite and non-negative");
  check_irreducible(q, T);
  TransferResult r;
  double lr = 0, ll = 0;
  int ir = 0, il = 0;
  r.right = power(q, T, false, tol, lr, ir);
  r.left = power(q, T, true, tol, ll, il);
  r.iterations = std::max(ir, il);
  // Rayleigh quotient from the converged right vector
  double num = 0, den = 0;
  for (int i = 0; i < q; ++i) {
    double tv = 0;
    for (int j = 0; j < q; ++j) tv += T[i * q + j] * r.right[j];
    num += r.left[i] * tv;
    den += r.left[i] * r.right[i];
  }
  double lambda = num / den;
  r.log_lambda = std::log(lambda);
  for (auto& x : r.left) x /= den;
  std::vector<double> P(static_cast<std::size_t>(q) * q, 0.0);
  for (int i = 0; i < q; ++i) {
    double s = 0;
    for (int j = 0; j < q; ++j) s += P[i * q + j] = T[i * q + j] * r.right[j] / (lambda * r.right[i]);
    for (int j = 0; j < q; ++j) P[i * q + j] /= s;  // removes the residual of the eigen-solve
  }
  r.chain.q = q;
  r.chain.P = std::move(P);
  r.chain.pi.resize(q);
  double z = 0;
  for (int i = 0; i < q; ++i) z += r.chain.pi[i] = r.left[i] * r.right[i];
  for (auto& x : r.chain.pi) x /= z;
  return r;
}

TransferResult transfer_pressure_1d(const SubshiftSpec& s, const Interaction& phi, double tol) {
  if (s.dim() != 1 || !s.is_sft_like()) throw PreconditionError("transfer matrix needs a one-dimensional SFT");
  if (s.radius() > 1) throw PreconditionError("transfer matrix needs nearest-neighbour constraints");
  const int q = s.q();
  std::vector<double> V(q, 0.0), W(static_cast<std::size_t>(q) * q, 0.0);
  Pattern none(1);
  for (const auto& t : phi.terms()) {
    if (!t.env_shape.empty()) throw PreconditionError("transfer matrix does not take environments");
    if (t.shape == Shape(1, {Site(0)})) {
      for (int a = 0; a < q; ++a) {
        Symbol x[1] = {static_cast<Symbol>(a)};
        V[a] += t.eval(nullptr, x);
      }
    } else if (t.shape == Shape::interval(0, 1)) {
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) {
          Symbol x[2] = {static_cast<Symbol>(a), static_cast<Symbol>(b)};
          W[a * q + b] += t.eval(nullptr, x);
        }
    } else {
      throw PreconditionError("transfer matrix supports site and nearest-neighbour pair terms only");
    }
  }
  if (phi.tail != 0) throw PreconditionError("transfer matrix needs a finite-range interaction");
  std::vector<double> T(static_cast<std::size_t>(q) * q, 0.0);
  Shape pair = Shape::interval(0, 1);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      if (s.locally_admissible(Pattern(pair, Word{static_cast<Symbol>(a), static_cast<Symbol>(b)})))
        T[a * q + b] = std::exp(-V[a] - W[a * q + b]);
  return perron(q, T, tol);
}

MarkovChain parry(const SubshiftSpec& s) { return transfer_pressure_1d(s, Interaction(1)).chain; }

PressureSeries pressure_per_site_estimate(const Interaction& phi, const std::function<WindowMeasure(int)>& family,
                                          int n_min, int n_max) {
  PressureSeries out;
  for (int n = n_min; n <= n_max; ++n) {
    WindowMeasure mu = family(n);
    out.values.emplace_back(n, pressure(mu, phi, mu.window) / static_cast<double>(mu.window.size()));
  }
  return out;
}

void EmpiricalCounts::add(const Word& env, const Word& x, std::uint64_t n) {
  if (x.size() != window.size() || env.size() != env_window.size()) throw PreconditionError("sample shape mismatch");
  counts[{env, x}] += n;
  total += n;
}

WindowMeasure EmpiricalCounts::to_measure() const {
  if (total == 0) throw PreconditionError("no samples");
  WindowMeasure mu(window);
  std::map<Word, int> index;
  if (!env_window.empty()) {
    mu.boundary = Boundary::Env;
    for (const auto& [k, n] : counts)
      if (!index.count(k.first)) {
        index[k.first] = 0;
      }
    int i = 0;
    for (auto& [w, id] : index) {
      id = i++;
      mu.env_atoms.push_back(Pattern(env_window, w));
    }
  }
  const double t = static_cast<double>(total);
  for (const auto& [k, n] : counts) {
    int e = env_window.empty() ? 0 : index[k.first];
    mu.table[{e, k.second}] += static_cast<double>(n) / t;
  }
  return mu;
}

}  // namespace gibbslab
