#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gibbslab/sampler.hpp"

using namespace gibbslab;

namespace {

double ones_fraction(Sampler& s, long burn, long sweeps, std::uint64_t* n = nullptr) {
  s.run(burn);
  std::uint64_t k = 0, t = 0;
  for (long i = 0; i < sweeps; ++i) {
    s.sweep();
    for (Symbol v : s.state()) k += v == 1, ++t;
  }
  if (n) *n = t;
  return static_cast<double>(k) / t;
}

}  // namespace

TEST_CASE("counter-based streams") {
  CHECK(stream_seed(1, 2, 3) == stream_seed(1, 2, 3));
  CHECK(stream_seed(1, 2, 3) != stream_seed(1, 3, 2));
  CHECK(stream_seed(1, 0, 0) != stream_seed(2, 0, 0));
  SplitMix64 a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  SplitMix64 u(11);
  double mean = 0;
  for (int i = 0; i < 100000; ++i) {
    double x = u.uniform();
    CHECK((x >= 0 && x < 1));
    mean += x;
  }
  mean /= 100000;
  CHECK(std::abs(mean - 0.5) < 4 * std::sqrt(1.0 / 12 / 100000));
}

TEST_CASE("independent sites follow the single-site law") {
  // weight 3 on symbol 1
  SamplerOptions o;
  o.size = Site(64);
  o.seed = 5;
  Sampler s(catalog::full(2), interactions::single_site(1, {0, -std::log(3.0)}), o);
  CHECK(s.fast_path());
  std::uint64_t n = 0;
  double f = ones_fraction(s, 1, 2000, &n);
  CHECK(std::abs(f - 0.75) < 4 * std::sqrt(0.75 * 0.25 / n));
  CHECK(s.site_updates() == 2001u * 64u);
}

TEST_CASE("golden mean chain stays admissible and matches Parry frequency") {
  SamplerOptions o;
  o.size = Site(512);
  o.seed = 9;
  Sampler s(catalog::golden_mean(), Interaction(1), o);
  CHECK(s.admissible());
  double f = ones_fraction(s, 50, 400);
  CHECK(s.admissible());
  double phi = (1 + std::sqrt(5.0)) / 2;
  CHECK(std::abs(f - 1 / (1 + phi * phi)) < 0.01);
}

TEST_CASE("same seed gives the same path for any thread count") {
  for (int dim : {1, 2}) {
    SamplerOptions o;
    o.size = dim == 1 ? Site(300) : Site(20, 20);
    o.seed = 77;
    auto phi = interactions::ising(0.2, 0.5, dim);
    Sampler a(catalog::golden_mean(dim), phi, o);
    o.threads = 3;
    Sampler b(catalog::golden_mean(dim), phi, o);
    a.run(20);
    b.run(20);
    CHECK(a.state() == b.state());
    o.seed = 78;
    Sampler c(catalog::golden_mean(dim), phi, o);
    c.run(20);
    CHECK(a.state() != c.state());
  }
}

TEST_CASE("Delone blocks sample the same hard-core law as single sites") {
  SamplerOptions o;
  o.size = Site(24, 24);
  o.seed = 3;
  Sampler site(catalog::golden_mean(2), Interaction(2), o);
  o.schedule = Schedule::Delone;
  o.packing = Shape::box(2, Site(0, 0), Site(1, 1));
  o.covering = Shape::box(2, Site(-1, -1), Site(1, 1));
  o.seed = 4;
  Sampler blk(catalog::golden_mean(2), Interaction(2), o);
  CHECK(blk.block_count() == 144u);
  CHECK(blk.colour_count() >= 2u);
  double a = ones_fraction(site, 50, 600);
  double b = ones_fraction(blk, 50, 600);
  CHECK(site.admissible());
  CHECK(blk.admissible());
  // both near the hard-square density 0.2266
  CHECK(std::abs(a - b) < 0.004);
  CHECK(std::abs(a - 0.2266) < 0.004);
}

TEST_CASE("oracle constraints use the generic path") {
  SamplerOptions o;
  o.size = Site(40);
  o.seed = 2;
  Sampler s(catalog::even(), Interaction(1), o);
  CHECK(!s.fast_path());
  s.run(30);
  CHECK(s.admissible());
}

TEST_CASE("windows are collected over all translates") {
  SamplerOptions o;
  o.size = Site(32);
  Sampler s(catalog::golden_mean(), Interaction(1), o);
  s.run(3);
  EmpiricalCounts ec(Shape::interval(0, 1));
  collect_windows(s, ec);
  CHECK(ec.total == 32u);
  CHECK(ec.counts.count({Word{}, Word{1, 1}}) == 0);
}

TEST_CASE("frame stream round trip") {
  SamplerOptions o;
  o.size = Site(6, 5);
  o.seed = 12;
  Sampler s(catalog::proper_colorings(3, 2), Interaction(2), o);
  std::stringstream ss;
  FrameHeader h;
  h.dim = 2;
  h.size = o.size;
  h.q = 3;
  h.seed = 12;
  write_frame_header(ss, h);
  std::vector<std::vector<Symbol>> frames;
  for (int i = 0; i < 4; ++i) {
    s.sweep();
    frames.push_back(s.state());
    write_frame(ss, s.state());
  }
  FrameHeader r = read_frame_header(ss);
  CHECK(r.version == 1u);
  CHECK(r.dim == 2);
  CHECK(r.size == h.size);
  CHECK(r.q == 3);
  CHECK(r.seed == 12u);
  std::vector<Symbol> f;
  for (const auto& want : frames) {
    REQUIRE(read_frame(ss, s.volume(), f));
    CHECK(f == want);
  }
  CHECK(!read_frame(ss, s.volume(), f));
  std::stringstream bad("NOTAFRAME");
  CHECK_THROWS_AS(read_frame_header(bad), Error);
}

TEST_CASE("preconditions") {
  SamplerOptions o;
  o.size = Site(2);
  CHECK_THROWS_AS(Sampler(catalog::golden_mean(), interactions::ising(0, 1, 1), o), PreconditionError);
  o.size = Site(16);
  o.initial = std::vector<Symbol>(16, 1);
  CHECK_THROWS_AS(Sampler(catalog::golden_mean(), Interaction(1), o), Error);
  o.initial.reset();
  CHECK_THROWS_AS(Sampler(catalog::golden_mean(2), Interaction(1), o), PreconditionError);
}
