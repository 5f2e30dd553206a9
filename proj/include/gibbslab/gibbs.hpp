#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gibbslab/interaction.hpp"
#include "gibbslab/measure.hpp"
#include "gibbslab/symbolic.hpp"

namespace gibbslab {

struct BoltzmannDist {
  std::vector<double> p;
  double logZ = 0;
};
double log_sum_exp(const std::vector<double>& a);
// p proportional to exp(-U)
BoltzmannDist boltzmann(const std::vector<double>& U);
// H(p) - p(U)
double free_energy_functional(const std::vector<double>& p, const std::vector<double>& U);

// Boltzmann law of the filling of A given the rest of W.
struct Conditional {
  std::vector<Word> fillings;  // lexicographic on A
  std::vector<double> energy;  // E_{A|W\A}
  std::vector<double> p;
  double logZ = 0;
  double err = 0;  // bound on the conditional energy truncation at W
  bool empty() const { return fillings.empty(); }
};

// Fillings u of A whose merge with the context is admissible near A inside W (and extendable by
// `margin` when positive). The context may carry values anywhere; only W \ A is read.
Conditional gibbs_conditional(const Constraint& c, const Interaction& phi, const Pattern& env, const Pattern& context,
                              const Shape& W, const Shape& A, int margin = 0, Budget* budget = nullptr);

struct LogPartition {
  double logZ = 0;
  double err = 0;
};
// throws Error when no filling is admissible
LogPartition partition_conditional(const Constraint& c, const Interaction& phi, const Pattern& env,
                                const Pattern& context, const Shape& W, const Shape& A, int margin = 0);
// log sum over L_A of exp(-E_A)
double partition_free(const Constraint& c, const Interaction& phi, const Pattern& env, const Shape& A, int margin = 0,
                      Budget* budget = nullptr);
// same for an interval of n sites of a 1-D SFT, by a transfer recursion on essential states
double partition_free_1d(const SubshiftSpec& s, const Interaction& phi, int n);

// free-boundary Gibbs table on W: proportional to exp(-E_W) over the language of W
WindowMeasure gibbs_window_measure(const Constraint& c, const Interaction& phi, const Pattern& env, const Shape& W,
                                   int margin = 0);

// Splits m over weights so that the left-to-right floating point sum reproduces m exactly.
std::vector<double> split_mass(double m, const std::vector<double>& weights);

// replaces every conditional on A given (env, W \ A) by the Boltzmann conditional
WindowMeasure kernel_apply(const Constraint& c, const Interaction& phi, const Shape& A, const WindowMeasure& mu,
                           int margin = 0);

enum class ContextMode { Full, Pooled };

struct ContextResult {
  Word env, context;
  double weight = 0;
  std::uint64_t count = 0;
  double tv = 0;
};

struct GibbsReport {
  double aggregate_tv = 0;  // weighted mean of per-context total variation (half L1)
  double aggregate_l1 = 0;
  double max_tv = 0;
  std::size_t contexts = 0;
  std::size_t excluded = 0;  // low-count contexts
  double excluded_mass = 0;
  std::size_t pools = 0;
  std::size_t window_size = 0;
  double tol = 0;
  bool pass = false;
  std::vector<ContextResult> worst;  // a few contexts with largest TV
};

GibbsReport gibbs_property_test(const WindowMeasure& mu, const Interaction& phi, const Shape& A, const Constraint& c,
                                double tol, ContextMode mode = ContextMode::Full);
GibbsReport gibbs_property_test(const EmpiricalCounts& counts, const Interaction& phi, const Shape& A,
                                const Constraint& c, double tol, ContextMode mode = ContextMode::Full,
                                std::uint64_t min_count = 30);

// A together with every site of constraint windows and interaction terms meeting A
Shape dependency_window(const Constraint& c, const Interaction& phi, const Shape& A);
// environment sites read by those windows and terms
Shape env_dependency(const Constraint& c, const Interaction& phi, const Shape& A);

struct OptimalityReport {
  double lhs = 0, rhs = 0, gap = 0;
  std::size_t window_size = 0;
};
// Psi(A | W\A) under mu and under mu K_A
OptimalityReport local_optimality_check(const WindowMeasure& mu, const Interaction& phi, const Shape& A,
                                        const Constraint& c, int margin = 0);

struct FellerReport {
  double max_deviation = 0;
  std::size_t pairs = 0;
  double truncation_err = 0;
};
// Pairs of admissible contexts on W agreeing on B \ A; compares K_A(., [p]).
FellerReport feller_locality_check(const Constraint& c, const Interaction& phi, const Pattern& env, const Shape& A,
                                   const Pattern& p, const Shape& B, const Shape& W, int trials, std::uint64_t seed);

struct EnvAtom {
  Pattern env;
  double weight = 1;
};
// sum over atoms of weight * log Z_{F_n}(env) / |F_n| for F_n = [-n,n]^d
std::vector<std::pair<int, double>> variational_pressure_estimate(const Constraint& c, const Interaction& phi,
                                                                  const std::vector<EnvAtom>& nu, int n_min,
                                                                  int n_max);

}  // namespace gibbslab
