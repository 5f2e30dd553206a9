#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gibbslab/gibbs.hpp"
#include "gibbslab/mixing.hpp"

namespace gibbslab {

// Environment subshift, joint constraint on (theta, x) and a relative interaction.
struct RelativeSystem {
  std::string name;
  SubshiftSpec env;
  Constraint omega = Constraint(catalog::full(2));
  Interaction phi;
};

// L_A(X_theta) up to the margin; theta must be admissible for the environment shift
LanguageTable fiber_language(const RelativeSystem& rs, const Pattern& theta, const Shape& A, int margin,
                             Budget* budget = nullptr);

namespace relative_catalog {
// spins -1, 0, +1 (values), 0 exactly on closed sites; Ising with field h and coupling J
RelativeSystem ising_percolation(double h, int dim = 2, double J = 1.0);
// env symbol at g: bit i set when the edge {g, g+e_i} is present; x proper on present edges
RelativeSystem colorings_on_subgraph(int q, int dim = 2);
}  // namespace relative_catalog

// seeded environments on a torus, row-major like the sampler state
// Uniform mixing sets have no per-theta analogue on finite windows with the integrability condition;
// this searches, for each given theta, the smallest dilation of A that is a mixing set inside X_theta.
struct ThetaMixingReport {
  std::vector<Verdict> verdicts;     // one per theta
  std::vector<int> radius;           // -1 when nothing up to max_radius verified
  std::vector<std::size_t> annulus;  // |B_theta \ A|
  int worst = -1;                    // index of the largest radius, or of an unresolved theta
  std::size_t unresolved = 0;
  double mean_annulus = 0;           // over resolved thetas
};
ThetaMixingReport per_theta_mixing_sets(const RelativeSystem& rs, const std::vector<Pattern>& thetas, const Shape& A,
                                        int max_radius, int margin = 0);

std::vector<Symbol> bernoulli_site_env(const Site& size, int dim, double p, std::uint64_t seed);
std::vector<Symbol> bernoulli_bond_env(const Site& size, int dim, double p, std::uint64_t seed);

// ---------------------------------------------------------------------------

// eta(x)_g = map(x on g + shape)
struct FactorSystem {
  std::string name;
  SubshiftSpec domain;
  Shape shape;
  std::function<Symbol(const Symbol*)> map;
  Alphabet image;
};

FactorSystem merge_code();  // full 3-shift, {1,2} -> a = 0, {0} -> b = 1
FactorSystem identity_code(const SubshiftSpec& s);
FactorSystem constant_code(const SubshiftSpec& s);

// image of a domain pattern on the sites g with g + shape inside its support
Pattern factor_image(const FactorSystem& fs, const Pattern& x);
// environment shift: image patterns with a non-empty fiber; omega: eta(x) = theta where theta is given
RelativeSystem factor_relative_system(const FactorSystem& fs, const Interaction& phi);

// mu on a domain window; contexts carry the image on the determined region
GibbsReport fiber_gibbs_check(const WindowMeasure& mu, const FactorSystem& fs, const Interaction& phi, const Shape& A,
                              double tol, ContextMode mode = ContextMode::Full);
// joint table over (image on the determined region, x)
WindowMeasure factor_joint_measure(const WindowMeasure& mu, const FactorSystem& fs);

// ---------------------------------------------------------------------------

// Z x [0,N) slices of a 2-D subshift as a 1-D relative system over column symbols; env is the
// configuration off the strip in absolute rows.
struct SliceSystem {
  SubshiftSpec base;
  int N = 1;
  std::vector<Word> columns;  // symbols bottom to top
  RelativeSystem rs;
};

SliceSystem slice_system(const SubshiftSpec& Y, const Interaction& phi, int N);
// strip columns of a 2-D pattern as a 1-D column pattern, and the remainder as environment
Pattern slice_columns(const SliceSystem& S, const Pattern& y);
Pattern slice_env(const SliceSystem& S, const Pattern& y);

struct SliceKernelReport {
  double max_diff = 0;
  std::size_t contexts = 0;
  std::size_t fillings = 0;
  Shape region;  // 2-D sites the contexts range over
};
// 2-D conditional on A x [0,N) against the 1-D relative conditional on A, over every admissible
// context on the dependency region inside the box
SliceKernelReport slice_kernel_equality_check(const SubshiftSpec& Y, const Interaction& phi, int N, const Shape& A,
                                              const Shape& box, Budget* budget = nullptr);

// 1-D memory set C for A: strip columns of the base memory set of A x [0,N)
Verdict slice_tmp_check(const SubshiftSpec& Y, int N, const Shape& A, int max_radius);

// ---------------------------------------------------------------------------

struct RatioReport {
  double max_deviation = 0;
  std::size_t contexts = 0;
  std::size_t envs_checked = 0;
  std::size_t envs_skipped = 0;  // u, v not interchangeable under the env atom
  json worst = json::object();
};
// r_u = mu(u w) / exp(-E_{A|W\A}(u w)); relative deviation of r_u and r_v over contexts w with
// both completions admissible and some mass
RatioReport meyerovitch_ratio_test(const WindowMeasure& mu, const RelativeSystem& rs, const Pattern& u,
                                   const Pattern& v, int interchange_radius = 2);
RatioReport meyerovitch_ratio_test(const WindowMeasure& mu, const Constraint& c, const Interaction& phi,
                                   const Pattern& u, const Pattern& v, int interchange_radius = 2);

// no two distinct translates with overlapping supports carry u or v at once
Verdict nonoverlap_check(const Constraint& c, const Pattern& u, const Pattern& v, int radius);

struct EquilibriumResult {
  WindowMeasure mu;
  double pressure = 0;  // H(W | env) - E_mu E_W
  int steps = 0;
  bool converged = false;
  std::string stop;
  std::vector<double> trace;
};
// Coordinate ascent from the uniform fiber measure under nu by kernel applications on the blocks.
EquilibriumResult relative_equilibrium_search(const Constraint& c, const Interaction& phi,
                                              const std::vector<EnvAtom>& nu, const Shape& W,
                                              const std::vector<Shape>& blocks, int max_rounds = 10000,
                                              double gain_tol = 1e-10);
// every site of W as its own block
std::vector<Shape> site_blocks(const Shape& W);
// pressure(W_{n+1}) - pressure(W_n) for W_n = [0,n)
double pressure_increment_1d(const Constraint& c, const Interaction& phi,
                             const std::function<std::vector<EnvAtom>(const Shape&)>& nu, int n,
                             const std::function<std::vector<Shape>(const Shape&)>& blocks);

}  // namespace gibbslab
