#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "gibbslab/interaction.hpp"
#include "gibbslab/symbolic.hpp"

namespace gibbslab {

enum class Boundary { Free, Periodic, Fixed, Env };

using MeasureKey = std::pair<int, Word>;  // environment atom, word on the window

// Probability table over patterns on a window, jointly with a finite list of environment atoms.
struct WindowMeasure {
  Shape window;
  Boundary boundary = Boundary::Free;
  std::vector<Pattern> env_atoms;  // empty: no environment, index 0 stands for the trivial one
  std::map<MeasureKey, double> table;

  WindowMeasure() = default;
  explicit WindowMeasure(Shape w) : window(std::move(w)) {}

  int env_count() const { return env_atoms.empty() ? 1 : static_cast<int>(env_atoms.size()); }
  const Pattern& env(int i) const;
  double total() const;
  void add(int env, const Word& w, double p);
  void validate(double tol = 1e-12) const;  // non-negative, sums to one
};

inline constexpr double kNegligible = 1e-300;  // smaller masses count as zero in entropies
inline constexpr std::size_t kDenseCap = std::size_t(1) << 28;

WindowMeasure marginal(const WindowMeasure& mu, const Shape& A);
std::vector<double> env_marginal(const WindowMeasure& mu);
// restriction to entries agreeing with p on B, renormalised, as a measure on window \ B
WindowMeasure condition(const WindowMeasure& mu, const Pattern& p, const Shape& B);

// entropies are conditional on the environment atom
double entropy(const WindowMeasure& mu, const Shape& A);
double conditional_entropy(const WindowMeasure& mu, const Shape& A, const Shape& B);  // H(A u B) - H(B)

double expected_energy(const WindowMeasure& mu, const Interaction& phi, const Shape& A);
double pressure(const WindowMeasure& mu, const Interaction& phi, const Shape& A);
double conditional_pressure(const WindowMeasure& mu, const Interaction& phi, const Shape& A, const Shape& B);

// Stationary Markov chain on {0..q-1}.
struct MarkovChain {
  int q = 2;
  std::vector<double> P;   // row-major q x q
  std::vector<double> pi;  // stationary law

  double p(int i, int j) const { return P[static_cast<std::size_t>(i) * q + j]; }
  double entropy_rate() const;
  // law of the word on [0,n) shifted to start at `offset`
  WindowMeasure window(int n, int offset = 0) const;
  static MarkovChain from_matrix(int q, std::vector<double> P);  // computes pi
};

struct TransferResult {
  double log_lambda = 0;
  std::vector<double> right, left;  // Perron vectors, left normalised so that <left,right> = 1
  MarkovChain chain;                // equilibrium chain of the transfer matrix
  int iterations = 0;
};

// Largest eigenvalue of a non-negative irreducible matrix by power iteration.
TransferResult perron(int q, const std::vector<double>& T, double tol = 1e-12);
// nearest-neighbour 1-D subshift with site and pair terms
TransferResult transfer_pressure_1d(const SubshiftSpec& s, const Interaction& phi, double tol = 1e-12);
MarkovChain parry(const SubshiftSpec& s);

struct PressureSeries {
  std::vector<std::pair<int, double>> values;  // n -> Psi(F_n)/|F_n|
};
PressureSeries pressure_per_site_estimate(const Interaction& phi, const std::function<WindowMeasure(int)>& family,
                                          int n_min, int n_max);

// Pattern counts on a fixed window, optionally jointly with the environment on env_window.
struct EmpiricalCounts {
  Shape window;
  Shape env_window;
  int env_dim = 1;
  std::map<std::pair<Word, Word>, std::uint64_t> counts;  // (env word, x word)
  std::uint64_t total = 0;

  EmpiricalCounts(Shape w, Shape env_w = Shape()) : window(std::move(w)), env_window(std::move(env_w)) {
    env_dim = env_window.empty() ? window.dim() : env_window.dim();
  }
  void add(const Word& env, const Word& x, std::uint64_t n = 1);
  WindowMeasure to_measure() const;  // env atoms in lexicographic order of env words
};

}  // namespace gibbslab
