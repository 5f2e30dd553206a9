#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gibbslab/relative.hpp"
#include "gibbslab/sampler.hpp"

using namespace gibbslab;

namespace {

WindowMeasure iid_window(const Shape& W, const std::vector<double>& p) {
  WindowMeasure mu(W);
  const int q = static_cast<int>(p.size());
  std::size_t total = 1;
  for (std::size_t i = 0; i < W.size(); ++i) total *= q;
  Word w(W.size());
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t x = c;
    double m = 1;
    for (std::size_t i = W.size(); i-- > 0;) {
      w[i] = static_cast<Symbol>(x % q);
      x /= q;
      m *= p[w[i]];
    }
    mu.add(0, w, m);
  }
  return mu;
}

Pattern word1(int start, std::vector<Symbol> w) {
  return Pattern(Shape::interval(start, start + static_cast<int>(w.size()) - 1), Word(w.begin(), w.end()));
}

// image atoms on W with iid law nu(a) = pa
std::vector<EnvAtom> merge_env(const Shape& W, double pa) {
  std::vector<EnvAtom> nu;
  const std::size_t n = W.size();
  for (std::size_t c = 0; c < (std::size_t(1) << n); ++c) {
    Word w(n);
    double m = 1;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = static_cast<Symbol>(c >> i & 1);
      m *= w[i] == 0 ? pa : 1 - pa;
    }
    nu.push_back({Pattern(W, w), m});
  }
  return nu;
}

}  // namespace

TEST_CASE("fiber languages of the catalog models") {
  auto col = relative_catalog::colorings_on_subgraph(5, 2);
  Shape A = Shape::box(2, Site(0, 0), Site(1, 0));
  Shape E = A.dilate(1);
  CHECK(fiber_language(col, Pattern::constant(E, 0), A, 0).size() == 25u);
  CHECK(fiber_language(col, Pattern::constant(E, 3), A, 0).size() == 20u);
  CHECK(fiber_language(col, Pattern::constant(E, 2), A, 0).size() == 25u);  // only vertical edges

  auto ip = relative_catalog::ising_percolation(0.3);
  Shape B = Shape::box(2, Site(0, 0), Site(1, 1));
  auto L0 = fiber_language(ip, Pattern::constant(B, 0), B, 0);
  REQUIRE(L0.size() == 1u);
  CHECK(L0.words[0] == Word(4, 1));
  CHECK(fiber_language(ip, Pattern::constant(B, 1), B, 0).size() == 16u);
  CHECK_THROWS_AS(fiber_language(ip, Pattern::constant(B, 2), B, 0), PreconditionError);
}

TEST_CASE("seeded environments") {
  Site sz(32, 32);
  auto a = bernoulli_site_env(sz, 2, 0.6, 5), b = bernoulli_site_env(sz, 2, 0.6, 5);
  CHECK(a == b);
  CHECK(a != bernoulli_site_env(sz, 2, 0.6, 6));
  double open = 0;
  for (Symbol s : a) open += s;
  open /= a.size();
  CHECK(std::abs(open - 0.6) < 4 * std::sqrt(0.24 / a.size()));
  auto e = bernoulli_bond_env(sz, 2, 0.5, 1);
  int bits[2] = {0, 0};
  for (Symbol s : e) {
    CHECK((s >= 0 && s < 4));
    bits[0] += s & 1, bits[1] += s >> 1 & 1;
  }
  for (int k : bits) CHECK(std::abs(k / 1024.0 - 0.5) < 4 * std::sqrt(0.25 / 1024));
}

TEST_CASE("merge code fiber Gibbs check") {
  FactorSystem fs = merge_code();
  Shape W = Shape::interval(0, 2), A = Shape::interval(1, 1);
  GibbsReport ok = fiber_gibbs_check(iid_window(W, {1.0 / 3, 1.0 / 3, 1.0 / 3}), fs, Interaction(1), A, 1e-9);
  CHECK(ok.pass);
  CHECK(ok.max_tv < 1e-12);
  GibbsReport bad = fiber_gibbs_check(iid_window(W, {1.0 / 2, 1.0 / 3, 1.0 / 6}), fs, Interaction(1), A, 1e-9);
  CHECK(!bad.pass);
  // P(1 | a) = 2/3 against 1/2; b-contexts are frozen
  CHECK(bad.max_tv == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(bad.aggregate_tv == doctest::Approx(0.5 * 1.0 / 6).epsilon(1e-12));
}

TEST_CASE("identity and constant codes") {
  Shape W = Shape::interval(0, 3), A = Shape::interval(1, 2);
  auto mu = iid_window(W, {0.2, 0.8});
  auto phi = interactions::ising(0.4, 0.7, 1);
  // singleton fibers leave nothing to resample
  CHECK(fiber_gibbs_check(mu, identity_code(catalog::full(2)), phi, A, 1e-12).max_tv < 1e-15);
  GibbsReport c = fiber_gibbs_check(mu, constant_code(catalog::full(2)), phi, A, 0.01);
  GibbsReport g = gibbs_property_test(mu, phi, A, catalog::full(2), 0.01);
  CHECK(c.aggregate_tv == g.aggregate_tv);
  CHECK(c.max_tv == g.max_tv);
  CHECK(c.contexts == g.contexts);
  CHECK(c.pass == g.pass);
}

TEST_CASE("factor image shift") {
  auto gm = identity_code(catalog::golden_mean());
  auto rs = factor_relative_system(gm, Interaction(1));
  CHECK(rs.env.locally_admissible(word1(0, {1, 0, 1})));
  CHECK(!rs.env.locally_admissible(word1(0, {0, 1, 1})));
  Pattern img = factor_image(merge_code(), word1(3, {0, 1, 2}));
  CHECK(img == word1(3, {1, 0, 0}));
  // fibers: merge code over a-cells is {1,2} per site
  auto mr = factor_relative_system(merge_code(), Interaction(1));
  auto L = fiber_language(mr, word1(0, {0, 1, 0}), Shape::interval(0, 2), 0);
  CHECK(L.size() == 4u);
}

TEST_CASE("slice systems") {
  SliceSystem f = slice_system(catalog::full(2, 2), Interaction(2), 1);
  CHECK(f.columns.size() == 2u);
  CHECK(!f.rs.omega.coupled());
  CHECK(f.rs.omega.shift.kind() == SubshiftSpec::Kind::Full);

  SliceSystem g = slice_system(catalog::golden_mean(2), Interaction(2), 1);
  CHECK(g.columns.size() == 2u);
  CHECK(g.rs.omega.coupled());
  // horizontal 11 inside the strip, vertical 11 across its boundary
  CHECK(language(g.rs.omega, Shape::interval(0, 3), 0).size() == 8u);
  Pattern env(2);
  env.set(Site(1, 1), 1);
  CHECK(!g.rs.omega.admissible(env, word1(0, {0, 1, 0})));
  CHECK(g.rs.omega.admissible(env, word1(0, {1, 0, 1})));

  SliceSystem h = slice_system(catalog::golden_mean(2), Interaction(2), 2);
  CHECK(h.columns.size() == 3u);
}

TEST_CASE("slice kernels match the plane kernels") {
  Shape box = Shape::box(2, Site(-2, -2), Site(3, 3));
  for (int N : {1, 2})
    for (const Shape& A : {Shape::interval(0, 0), Shape::interval(0, 1)}) {
      auto ri = slice_kernel_equality_check(catalog::full(2, 2), interactions::ising(0.2, 0.6, 2), N, A, box);
      CHECK(ri.contexts > 0u);
      CHECK(ri.max_diff <= 1e-12);
      auto rh = slice_kernel_equality_check(catalog::golden_mean(2), interactions::single_site(2, {0, -0.5}), N, A, box);
      CHECK(rh.contexts > 0u);
      CHECK(rh.max_diff <= 1e-12);
    }
  auto z = slice_kernel_equality_check(catalog::full(2, 2), Interaction(2), 1, Shape::interval(0, 0), box);
  CHECK(z.max_diff == 0.0);
  CHECK_THROWS_AS(slice_kernel_equality_check(catalog::full(2, 2), interactions::ising(0, 1, 2), 1,
                                              Shape::interval(0, 0), Shape::box(2, Site(0, 0), Site(1, 1))),
                  PreconditionError);
}

TEST_CASE("slice memory sets") {
  Verdict v = slice_tmp_check(catalog::golden_mean(2), 1, Shape::interval(0, 0), 3);
  CHECK(v.verified());
  CHECK(shape_from_json(v.witness["C"], 1) == Shape::interval(-1, 1));
  Verdict f = slice_tmp_check(catalog::full(2, 2), 1, Shape::interval(0, 0), 2);
  CHECK(f.verified());
  CHECK(shape_from_json(f.witness["C"], 1) == Shape::interval(0, 0));
  Verdict h = slice_tmp_check(catalog::golden_mean(2), 2, Shape::interval(0, 1), 2);
  CHECK(h.verified());
  CHECK(shape_from_json(h.witness["C"], 1) == Shape::interval(-1, 2));
}

TEST_CASE("ratio test on the golden mean shift") {
  auto gm = catalog::golden_mean();
  WindowMeasure parry_w = parry(gm).window(8);
  Pattern u = word1(2, {0, 1, 0}), v = word1(2, {0, 0, 0});
  RatioReport r = meyerovitch_ratio_test(parry_w, gm, Interaction(1), u, v);
  CHECK(r.contexts > 0u);
  CHECK(r.max_deviation <= 1e-9);
  // Bernoulli(0.7) restricted to the language: ratio 0.7/0.3
  WindowMeasure bern(Shape::interval(0, 7));
  for (const auto& w : language(gm, bern.window, 0).words) {
    double m = 1;
    for (Symbol s : w) m *= s ? 0.7 : 0.3;
    bern.add(0, w, m);
  }
  RatioReport b = meyerovitch_ratio_test(bern, gm, Interaction(1), u, v);
  CHECK(b.max_deviation == doctest::Approx(4.0 / 7).epsilon(1e-12));
  // free-boundary Gibbs table of an interaction
  auto phi = interactions::ising(0.3, 0.4, 1);
  WindowMeasure g = gibbs_window_measure(gm, phi, Pattern(1), bern.window);
  CHECK(meyerovitch_ratio_test(g, gm, phi, u, v).max_deviation <= 1e-9);
  CHECK_THROWS_AS(meyerovitch_ratio_test(parry_w, gm, Interaction(1), word1(2, {1, 1}), word1(2, {1, 1})), Error);
}

TEST_CASE("ratio identity over a memory set gives the Gibbs conditional") {
  // B = [3,5] is a memory set for A = {4}: u w and v w are interchangeable for every ring w
  auto gm = catalog::golden_mean();
  WindowMeasure mu = parry(gm).window(9);
  Shape A = Shape::interval(4, 4);
  double worst = 0;
  for (Symbol a : {0, 1})
    for (Symbol b : {0, 1}) {
      RatioReport r = meyerovitch_ratio_test(mu, gm, Interaction(1), word1(2, {a, 0, 1, 0, b}),
                                             word1(2, {a, 0, 0, 0, b}), 2);
      CHECK(r.envs_skipped == 0u);
      worst = std::max(worst, r.max_deviation);
    }
  CHECK(worst <= 1e-9);
  // equal ratios with zero energy: the conditional at 4 given 0 neighbours is (1/2, 1/2)
  GibbsReport g = gibbs_property_test(mu, Interaction(1), A, gm, 1e-9);
  CHECK(g.pass);
}

TEST_CASE("non-overlapping patterns") {
  auto full = catalog::full(2);
  CHECK(nonoverlap_check(full, word1(0, {0, 0}), word1(0, {0, 1}), 1).refuted());
  CHECK(nonoverlap_check(full, word1(0, {0}), word1(0, {1}), 1).verified());
  // particle layer: hard-core translates of [0,2] at marked sites never overlap
  auto marked = catalog::product(catalog::hard_core(Shape::interval(0, 2)), catalog::full(2));
  auto sym = [](int mark, int data) { return static_cast<Symbol>(mark * 2 + data); };
  Pattern ut = word1(0, {sym(1, 0), sym(0, 1), sym(0, 0)});
  Pattern vt = word1(0, {sym(1, 0), sym(0, 0), sym(0, 0)});
  CHECK(nonoverlap_check(marked, ut, vt, 2).verified());
  Verdict r = nonoverlap_check(marked, word1(0, {sym(0, 0), sym(0, 0), sym(0, 0)}), vt, 2);
  CHECK(r.refuted());
}

TEST_CASE("relative equilibrium for the merge code") {
  FactorSystem fs = merge_code();
  auto rs = factor_relative_system(fs, Interaction(1));
  Shape W = Shape::interval(0, 2);
  auto res = relative_equilibrium_search(rs.omega, rs.phi, merge_env(W, 0.4), W, site_blocks(W));
  CHECK(res.converged);
  CHECK(res.pressure / 3 == doctest::Approx(0.4 * std::log(2.0)).epsilon(1e-9));
  for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] >= res.trace[i - 1] - 1e-12);
  // conditional on a fiber {1,2} is uniform
  double p1 = 0, pa = 0;
  for (const auto& [k, p] : res.mu.table) {
    if (res.mu.env(k.first).at(Site(1)) != 0) continue;
    pa += p;
    if (k.second[1] == 1) p1 += p;
  }
  CHECK(p1 / pa == doctest::Approx(0.5).epsilon(1e-12));
  double inc = pressure_increment_1d(
      rs.omega, rs.phi, [](const Shape& S) { return merge_env(S, 0.4); }, 3, site_blocks);
  CHECK(std::abs(inc - 0.4 * std::log(2.0)) < 1e-6);
}

TEST_CASE("relative equilibrium recovers transfer-matrix pressures") {
  auto gm = catalog::golden_mean();
  auto none = [](const Shape&) { return std::vector<EnvAtom>{}; };
  double inc = pressure_increment_1d(gm, Interaction(1), none, 16, site_blocks);
  CHECK(std::abs(inc - std::log((1 + std::sqrt(5.0)) / 2)) < 1e-6);

  auto ip = relative_catalog::ising_percolation(0.0, 1, 1.0);
  auto open = [](const Shape& S) { return std::vector<EnvAtom>{{Pattern::constant(S, 1), 1.0}}; };
  double ii = pressure_increment_1d(ip.omega, ip.phi, open, 6, site_blocks);
  CHECK(std::abs(ii - std::log(2 * std::cosh(1.0))) < 1e-6);
}

TEST_CASE("sampling with a frozen percolation environment") {
  auto ip = relative_catalog::ising_percolation(0.3);
  SamplerOptions o;
  o.size = Site(16, 16);
  o.seed = 8;
  o.env = bernoulli_site_env(o.size, 2, 0.6, 11);
  Sampler s(ip.omega, ip.phi, o);
  s.run(20);
  CHECK(s.admissible());
  for (std::size_t i = 0; i < s.volume(); ++i) CHECK((o.env[i] == 0) == (s.state()[i] == 1));
}

TEST_CASE("per-theta mixing sets follow the environment") {
  // 2-colourings of a path: a present edge forces the neighbour to differ
  auto rs = relative_catalog::colorings_on_subgraph(2, 1);
  Shape S = Shape::interval(-6, 6), A(1, {Site(0)});
  Pattern none = Pattern::constant(S, 0);
  Pattern pair = none;  // edges {-1,0} and {0,1}
  pair.set(Site(-1), 1);
  pair.set(Site(0), 1);
  Pattern all = Pattern::constant(S, 1);
  ThetaMixingReport rep = per_theta_mixing_sets(rs, {none, pair, all}, A, 3);
  REQUIRE(rep.radius.size() == 3u);
  CHECK(rep.radius[0] == 0);
  CHECK(rep.radius[1] == 1);
  CHECK(rep.annulus[1] == 2u);
  // one long component: no dilation up to 3 lets site 0 change colour
  CHECK(rep.radius[2] == -1);
  CHECK(rep.unresolved == 1u);
  CHECK(rep.worst == 2);
  CHECK(rep.mean_annulus == doctest::Approx(1.0));
  for (std::size_t i = 0; i < 2; ++i) CHECK(reverify(rep.verdicts[i], rs.omega).outcome == rep.verdicts[i].outcome);
}
