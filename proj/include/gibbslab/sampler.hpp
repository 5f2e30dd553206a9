#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gibbslab/interaction.hpp"
#include "gibbslab/measure.hpp"
#include "gibbslab/symbolic.hpp"

namespace gibbslab {

// Counter-based stream: the state is a function of (seed, sweep, block) only.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : s_(seed) {}
  static std::uint64_t mix(std::uint64_t z);
  std::uint64_t next() { return mix(s_ += 0x9E3779B97F4A7C15ull); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }  // [0,1)

 private:
  std::uint64_t s_;
};
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t sweep, std::uint64_t block);

enum class Schedule { SiteSweep, Delone };

struct SamplerOptions {
  Site size{1, 1, 1};  // torus extents
  Schedule schedule = Schedule::SiteSweep;
  Shape packing, covering;  // Delone shapes P and C
  std::uint64_t seed = 1;
  int threads = 1;
  std::optional<std::vector<Symbol>> initial;  // row-major over the torus
  std::vector<Symbol> env;                     // environment on the torus, empty when absent
  long fill_budget = 1000000;
};

// Heat-bath sampler on a torus. Blocks are grouped into colour classes whose dependency
// regions are disjoint; updates inside a class commute, so threads never change the stream.
class Sampler {
 public:
  Sampler(Constraint c, Interaction phi, SamplerOptions o);
  ~Sampler();
  Sampler(const Sampler&) = delete;
  Sampler& operator=(const Sampler&) = delete;

  void sweep();
  void run(long sweeps) {
    for (long i = 0; i < sweeps; ++i) sweep();
  }

  int dim() const { return dim_; }
  const Site& size() const { return size_; }
  std::size_t volume() const { return state_.size(); }
  const std::vector<Symbol>& state() const { return state_; }
  Symbol at(const Site& s) const { return state_[index(s)]; }
  Symbol env_at(const Site& s) const { return env_.empty() ? kUnset : env_[index(s)]; }
  Word word(const Site& g, const Shape& W) const;
  Word env_word(const Site& g, const Shape& W) const;
  bool admissible() const;  // every constraint window on the torus

  std::uint64_t sweeps_done() const { return sweeps_; }
  std::uint64_t site_updates() const { return updates_; }
  std::size_t block_count() const { return blocks_.size(); }
  std::size_t colour_count() const { return colours_.size(); }
  bool fast_path() const { return fast_; }

  std::size_t index(const Site& s) const;

  struct Stencil;

 private:
  struct Block {
    Site anchor;
    int stencil = 0;
  };
  void build_schedule();
  void initial_fill();
  void update(const Block& b, SplitMix64& rng);
  void update_generic(const Block& b, SplitMix64& rng);
  int stencil_for(const Shape& rel);
  Pattern patch(const Site& anchor, const Shape& W) const;
  Pattern env_patch(const Site& anchor, const Shape& W) const;

  Constraint c_;
  Interaction phi_;
  SamplerOptions o_;
  int dim_;
  Site size_;
  int reach_ = 1;
  bool fast_ = true;
  std::vector<Symbol> state_, env_;
  std::vector<Stencil*> stencils_;
  std::vector<Shape> stencil_shapes_;
  std::vector<std::vector<Block>> base_;  // colour classes for shift 0
  std::vector<Block> blocks_;
  std::vector<std::vector<std::size_t>> colours_;
  std::vector<Site> shifts_;  // Delone translates cycled over sweeps
  std::uint64_t sweeps_ = 0, updates_ = 0;
};

// Counts words of every torus translate of W (and env on env_window) into `counts`.
void collect_windows(const Sampler& s, EmpiricalCounts& counts);

// Binary frame stream: header then one byte per site per frame.
struct FrameHeader {
  std::uint32_t version = 1;
  int dim = 1;
  Site size;
  int q = 2;
  std::uint64_t seed = 0;
};
void write_frame_header(std::ostream& os, const FrameHeader& h);
FrameHeader read_frame_header(std::istream& is);
void write_frame(std::ostream& os, const std::vector<Symbol>& state);
bool read_frame(std::istream& is, std::size_t volume, std::vector<Symbol>& state);

}  // namespace gibbslab
