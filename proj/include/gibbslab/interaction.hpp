#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gibbslab/symbolic.hpp"

namespace gibbslab {

// Canonical translate of a shape: its lexicographic minimum moved to the origin.
Shape anchor(const Shape& A);

struct LocalTerm {
  Shape shape;      // anchored
  Shape env_shape;  // environment sites relative to the anchor; may be empty
  // env symbols in env_shape order, x symbols in shape order
  std::function<double(const Symbol* env, const Symbol* x)> eval;
  double sup_norm = 0;
  std::string label;
};

class Interaction {
 public:
  explicit Interaction(int dim = 1, int env_dim = 0) : dim_(dim), env_dim_(env_dim ? env_dim : dim) {}

  void add(LocalTerm t);
  void append(const Interaction& o);
  int dim() const { return dim_; }
  int env_dim() const { return env_dim_; }
  const std::vector<LocalTerm>& terms() const { return terms_; }
  bool zero() const { return terms_.empty() && tail == 0; }
  int range() const;       // largest l-infinity extent of a term shape
  int env_reach() const;   // largest l-infinity distance from the anchor to an env site
  double norm() const;     // sum over shapes containing the origin of the sup norms

  double tail = 0;  // certified bound on the norms of omitted shapes through a site

 private:
  int dim_;
  int env_dim_;
  std::vector<LocalTerm> terms_;
};

// E_A: terms whose translate lies in A
double energy(const Interaction& phi, const Pattern& env, const Pattern& x, const Shape& A);
// E_{A|B}: terms inside A u B meeting A \ B
double conditional_energy(const Interaction& phi, const Pattern& env, const Pattern& x, const Shape& A, const Shape& B);

struct Truncated {
  double value = 0;
  double err = 0;
};
// E_{A|A^c} from x on W; err bounds the omitted terms meeting A but leaving W
Truncated conditional_energy_inf(const Interaction& phi, const Pattern& env, const Pattern& x, const Shape& W,
                                 const Shape& A);

// f(x) = sum over C containing the origin of phi_C(x)/|C|
double energy_observable(const Interaction& phi, const Pattern& env, const Pattern& x);

// Interaction on Z for the strip Z x [0,N); columns[c] lists the N symbols of column symbol c bottom to top.
Interaction push_to_slice(const Interaction& phi, int N, const std::vector<Word>& columns);

namespace interactions {
Interaction zero(int dim);
// -h s_i on sites and -J s_i s_j on axis edges, with s read from the symbol values
Interaction ising(double h, double J, int dim, const std::vector<double>& spin = {-1.0, 1.0});
Interaction single_site(int dim, const std::vector<double>& V);
// term on an anchored shape given by a full table indexed by the base-q code of the word
Interaction table_term(int dim, const Shape& shape, int q, const std::vector<double>& table);
}  // namespace interactions

}  // namespace gibbslab
