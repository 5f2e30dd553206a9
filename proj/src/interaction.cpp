#include "gibbslab/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>

namespace gibbslab {

Shape anchor(const Shape& A) {
  if (A.empty()) throw PreconditionError("cannot anchor an empty shape");
  return A.translate(-A[0]);
}

void Interaction::add(LocalTerm t) {
  if (t.shape.empty()) throw PreconditionError("interaction term with empty shape");
  if (t.shape.dim() != dim_) throw PreconditionError("interaction term dimension mismatch");
  if (t.shape[0] != Site()) throw PreconditionError("interaction term shape is not anchored at the origin");
  if (!t.env_shape.empty() && t.env_shape.dim() != env_dim_) throw PreconditionError("environment shape dimension mismatch");
  if (!t.eval) throw PreconditionError("interaction term without evaluator");
  if (!(t.sup_norm >= 0) || !std::isfinite(t.sup_norm)) throw PreconditionError("interaction term norm must be finite");
  terms_.push_back(std::move(t));
}

void Interaction::append(const Interaction& o) {
  if (o.dim_ != dim_) throw PreconditionError("cannot add interactions of different dimension");
  for (const auto& t : o.terms_) add(t);
  tail += o.tail;
}

int Interaction::range() const {
  int r = 0;
  for (const auto& t : terms_) {
    auto [lo, hi] = t.shape.bounds();
    for (int i = 0; i < kMaxDim; ++i) r = std::max(r, hi[i] - lo[i]);
  }
  return r;
}

int Interaction::env_reach() const {
  int r = 0;
  for (const auto& t : terms_)
    for (const auto& s : t.env_shape) r = std::max(r, s.linf());
  return r;
}

double Interaction::norm() const {
  double n = 0;
  for (const auto& t : terms_) n += static_cast<double>(t.shape.size()) * t.sup_norm;
  return n + tail;
}

namespace {

struct Scratch {
  std::vector<Symbol> env, x;
};

double eval_at(const LocalTerm& t, const Site& g, const Pattern& env, const Pattern& x, Scratch& sc) {
  sc.x.resize(t.shape.size());
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    Symbol v = x.at(g + t.shape[i]);
    if (v == kUnset) throw PreconditionError("configuration lacks a value at " + (g + t.shape[i]).str(x.dim()));
    sc.x[i] = v;
  }
  sc.env.resize(t.env_shape.size());
  for (std::size_t i = 0; i < t.env_shape.size(); ++i) {
    Symbol v = env.at(g + t.env_shape[i]);
    if (v == kUnset) throw PreconditionError("environment does not cover " + (g + t.env_shape[i]).str(env.dim()));
    sc.env[i] = v;
  }
  return t.eval(sc.env.data(), sc.x.data());
}

bool inside(const Shape& T, const Site& g, const Shape& A) {
  for (const auto& s : T)
    if (!A.contains(g + s)) return false;
  return true;
}

// anchors g with g+T meeting A, deduplicated in lexicographic order
std::vector<Site> anchors_meeting(const Shape& T, const Shape& A) {
  std::vector<Site> v;
  v.reserve(A.size() * T.size());
  for (const auto& a : A)
    for (const auto& s : T) v.push_back(a - s);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

double energy(const Interaction& phi, const Pattern& env, const Pattern& x, const Shape& A) {
  Scratch sc;
  double e = 0;
  for (const auto& t : phi.terms())
    for (const auto& g : A)  // the origin belongs to every anchored shape
      if (inside(t.shape, g, A)) e += eval_at(t, g, env, x, sc);
  return e;
}

double conditional_energy(const Interaction& phi, const Pattern& env, const Pattern& x, const Shape& A, const Shape& B) {
  Shape AB = A.unite(B);
  Shape core = A.minus(B);
  Scratch sc;
  double e = 0;
  for (const auto& t : phi.terms())
    for (const auto& g : anchors_meeting(t.shape, core))
      if (inside(t.shape, g, AB)) e += eval_at(t, g, env, x, sc);
  return e;
}

Truncated conditional_energy_inf(const Interaction& phi, const Pattern& env, const Pattern& x, const Shape& W,
                                 const Shape& A) {
  if (!A.subset_of(W)) throw PreconditionError("set must lie inside the window");
  Scratch sc;
  Truncated r;
  for (const auto& t : phi.terms())
    for (const auto& g : anchors_meeting(t.shape, A)) {
      if (inside(t.shape, g, W))
        r.value += eval_at(t, g, env, x, sc);
      else
        r.err += t.sup_norm;
    }
  r.err += phi.tail * static_cast<double>(A.size());
  return r;
}

double energy_observable(const Interaction& phi, const Pattern& env, const Pattern& x) {
  Scratch sc;
  double e = 0;
  for (const auto& t : phi.terms())
    for (const auto& s : t.shape) e += eval_at(t, -s, env, x, sc) / static_cast<double>(t.shape.size());
  return e;
}

Interaction push_to_slice(const Interaction& phi, int N, const std::vector<Word>& columns) {
  if (phi.dim() != 2) throw PreconditionError("slices are taken of two-dimensional interactions");
  if (N < 1) throw PreconditionError("strip height must be positive");
  for (const auto& t : phi.terms())
    if (!t.env_shape.empty()) throw PreconditionError("slicing a relative interaction is not supported");
  for (const auto& c : columns)
    if (static_cast<int>(c.size()) != N) throw PreconditionError("column length differs from strip height");

  // one contribution per vertical placement of an original term
  struct Part {
    std::function<double(const Symbol*, const Symbol*)> eval;
    // per site of the original shape: column index within A and row, or env index
    std::vector<int> col, row, env;
    std::vector<Site> env_sites;
  };
  struct Group {
    Shape A;
    std::vector<Part> parts;
    double sup = 0;
  };
  std::map<std::vector<int>, Group> groups;
  for (const auto& t : phi.terms()) {
    auto [lo, hi] = t.shape.bounds();
    for (int dy = -hi[1]; dy <= N - 1 - lo[1]; ++dy) {
      Shape B = t.shape.translate(Site(0, dy));
      std::vector<int> cols;
      for (const auto& s : B)
        if (s[1] >= 0 && s[1] < N) cols.push_back(s[0]);
      if (cols.empty()) continue;
      int c0 = *std::min_element(cols.begin(), cols.end());
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      for (auto& c : cols) c -= c0;
      Part part{t.eval, {}, {}, {}, {}};
      for (const auto& s0 : t.shape) {
        Site s = s0 + Site(-c0, dy);
        if (s[1] >= 0 && s[1] < N) {
          part.col.push_back(static_cast<int>(std::lower_bound(cols.begin(), cols.end(), s[0]) - cols.begin()));
          part.row.push_back(s[1]);
          part.env.push_back(-1);
        } else {
          part.col.push_back(-1);
          part.row.push_back(-1);
          part.env.push_back(static_cast<int>(part.env_sites.size()));
          part.env_sites.push_back(s);
        }
      }
      auto& g = groups[cols];
      if (g.parts.empty()) {
        std::vector<Site> v;
        for (int c : cols) v.emplace_back(c);
        g.A = Shape(1, v);
      }
      g.sup += t.sup_norm;
      g.parts.push_back(std::move(part));
    }
  }
  Interaction out(1, 2);
  for (auto& [key, g] : groups) {
    std::vector<Site> all;
    for (const auto& p : g.parts) all.insert(all.end(), p.env_sites.begin(), p.env_sites.end());
    Shape env_shape(2, all);
    // remap env indices of each part into the merged env shape
    for (auto& p : g.parts)
      for (std::size_t i = 0; i < p.env.size(); ++i)
        if (p.env[i] >= 0) p.env[i] = static_cast<int>(env_shape.index_of(p.env_sites[p.env[i]]));
    auto parts = std::make_shared<std::vector<Part>>(std::move(g.parts));
    auto cols = std::make_shared<std::vector<Word>>(columns);
    LocalTerm T;
    T.shape = g.A;
    T.env_shape = env_shape;
    T.sup_norm = g.sup;
    T.label = "slice";
    T.eval = [parts, cols](const Symbol* env, const Symbol* x) {
      double e = 0;
      std::vector<Symbol> buf;
      for (const auto& p : *parts) {
        buf.resize(p.col.size());
        for (std::size_t i = 0; i < p.col.size(); ++i)
          buf[i] = p.env[i] >= 0 ? env[p.env[i]] : (*cols)[x[p.col[i]]][p.row[i]];
        e += p.eval(nullptr, buf.data());
      }
      return e;
    };
    out.add(std::move(T));
  }
  out.tail = phi.tail * N;
  return out;
}

namespace interactions {

Interaction zero(int dim) { return Interaction(dim); }

Interaction ising(double h, double J, int dim, const std::vector<double>& spin) {
  Interaction phi(dim);
  double smax = 0;
  for (double s : spin) smax = std::max(smax, std::abs(s));
  auto sp = std::make_shared<std::vector<double>>(spin);
  if (h != 0) {
    LocalTerm t;
    t.shape = Shape(dim, {Site()});
    t.sup_norm = std::abs(h) * smax;
    t.label = "field";
    t.eval = [sp, h](const Symbol*, const Symbol* x) { return -h * (*sp)[x[0]]; };
    phi.add(std::move(t));
  }
  for (int i = 0; i < dim; ++i) {
    Site e;
    e[i] = 1;
    LocalTerm t;
    t.shape = Shape(dim, {Site(), e});
    t.sup_norm = std::abs(J) * smax * smax;
    t.label = "edge";
    t.eval = [sp, J](const Symbol*, const Symbol* x) { return -J * (*sp)[x[0]] * (*sp)[x[1]]; };
    phi.add(std::move(t));
  }
  return phi;
}

Interaction single_site(int dim, const std::vector<double>& V) {
  Interaction phi(dim);
  LocalTerm t;
  t.shape = Shape(dim, {Site()});
  for (double v : V) t.sup_norm = std::max(t.sup_norm, std::abs(v));
  auto vv = std::make_shared<std::vector<double>>(V);
  t.eval = [vv](const Symbol*, const Symbol* x) { return (*vv)[x[0]]; };
  t.label = "site";
  phi.add(std::move(t));
  return phi;
}

Interaction table_term(int dim, const Shape& shape, int q, const std::vector<double>& table) {
  std::size_t want = 1;
  for (std::size_t i = 0; i < shape.size(); ++i) want *= static_cast<std::size_t>(q);
  if (table.size() != want) throw PreconditionError("interaction table has the wrong size");
  Interaction phi(dim);
  LocalTerm t;
  t.shape = anchor(shape);
  for (double v : table) t.sup_norm = std::max(t.sup_norm, std::abs(v));
  auto tb = std::make_shared<std::vector<double>>(table);
  const std::size_t n = shape.size();
  t.eval = [tb, n, q](const Symbol*, const Symbol* x) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c = c * q + x[i];
    return (*tb)[c];
  };
  t.label = "table";
  phi.add(std::move(t));
  return phi;
}

}  // namespace interactions

}  // namespace gibbslab
