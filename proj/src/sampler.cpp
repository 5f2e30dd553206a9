#include "gibbslab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <exception>
#include <mutex>
#include <thread>

#include "gibbslab/gibbs.hpp"

namespace gibbslab {

std::uint64_t SplitMix64::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t sweep, std::uint64_t block) {
  std::uint64_t h = SplitMix64::mix(seed + 0x9E3779B97F4A7C15ull);
  h = SplitMix64::mix(h ^ (sweep * 0xD1B54A32D192ED03ull + 1));
  return SplitMix64::mix(h ^ (block * 0x8CB92BA72F3D8DD7ull + 7));
}

struct Sampler::Stencil {
  struct Entry {
    int block;  // index into the block sites, or -1
    Site off;   // offset from the block anchor when block < 0
  };
  struct Placement {
    int kind;  // 0 rule, 1 term, 2 joint
    int idx;
    std::vector<Entry> x;
    std::vector<Site> env;
  };
  std::vector<Site> sites;
  std::vector<std::vector<Placement>> by_trigger;  // placements completed when this block site is set
};

namespace {

template <class Fn>
void anchors_for(const std::vector<Site>& block, const Shape& T, Fn fn) {
  std::vector<Site> g;
  for (const auto& b : block)
    for (const auto& o : T) g.push_back(b - o);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  for (const auto& a : g) fn(a);
}

}  // namespace

int Sampler::stencil_for(const Shape& rel) {
  for (std::size_t i = 0; i < stencil_shapes_.size(); ++i)
    if (stencil_shapes_[i] == rel) return static_cast<int>(i);
  auto* st = new Stencil;
  st->sites.assign(rel.begin(), rel.end());
  st->by_trigger.resize(st->sites.size());
  auto make = [&](int kind, int idx, const Shape& xs, const Shape& es, const Site& g) {
    Stencil::Placement p{kind, idx, {}, {}};
    int trig = -1;
    for (const auto& o : xs) {
      Site s = g + o;
      long k = rel.index_of(s);
      p.x.push_back({static_cast<int>(k), s});
      trig = std::max(trig, static_cast<int>(k));
    }
    for (const auto& e : es) p.env.push_back(g + e);
    if (trig >= 0) st->by_trigger[trig].push_back(std::move(p));
  };
  const auto& rules = c_.shift.rules();
  for (std::size_t r = 0; r < rules.size(); ++r)
    anchors_for(st->sites, rules[r].window, [&](const Site& g) { make(0, static_cast<int>(r), rules[r].window, Shape(), g); });
  const auto& terms = phi_.terms();
  for (std::size_t t = 0; t < terms.size(); ++t)
    anchors_for(st->sites, terms[t].shape,
                [&](const Site& g) { make(1, static_cast<int>(t), terms[t].shape, terms[t].env_shape, g); });
  for (std::size_t j = 0; j < c_.joint.size(); ++j)
    anchors_for(st->sites, c_.joint[j].x_window, [&](const Site& g) {
      make(2, static_cast<int>(j), c_.joint[j].x_window, c_.joint[j].env_window, g);
    });
  stencils_.push_back(st);
  stencil_shapes_.push_back(rel);
  return static_cast<int>(stencils_.size() - 1);
}

Sampler::Sampler(Constraint c, Interaction phi, SamplerOptions o)
    : c_(std::move(c)), phi_(std::move(phi)), o_(std::move(o)), dim_(c_.dim()), size_(o_.size) {
  if (phi_.dim() != dim_) throw PreconditionError("interaction dimension differs from the subshift");
  if (phi_.tail != 0) throw PreconditionError("sampler needs a finite-range interaction");
  for (int i = dim_; i < kMaxDim; ++i) size_[i] = 1;
  std::size_t vol = 1;
  for (int i = 0; i < dim_; ++i) {
    if (size_[i] < 1) throw PreconditionError("torus extents must be positive");
    vol *= static_cast<std::size_t>(size_[i]);
  }
  fast_ = c_.shift.is_sft_like() && (!c_.coupled() || !c_.joint.empty());
  int fr = c_.coupled() ? c_.fiber_radius : 0;
  reach_ = std::max({1, c_.shift.radius(), phi_.range(), 2 * fr, phi_.env_reach() + phi_.range()});
  if (!o_.env.empty() && o_.env.size() != vol) throw PreconditionError("environment size differs from the torus");
  if (c_.coupled() && o_.env.empty()) throw PreconditionError("coupled system needs an environment");
  env_ = o_.env;
  state_.assign(vol, kUnset);
  build_schedule();
  initial_fill();
}

Sampler::~Sampler() {
  for (auto* s : stencils_) delete s;
}

std::size_t Sampler::index(const Site& s) const {
  std::size_t k = 0;
  for (int i = 0; i < dim_; ++i) {
    int n = size_[i];
    int v = s[i] % n;
    if (v < 0) v += n;
    k = k * static_cast<std::size_t>(n) + static_cast<std::size_t>(v);
  }
  return k;
}

void Sampler::build_schedule() {
  Site lo, hi;
  for (int i = 0; i < dim_; ++i) hi[i] = size_[i] - 1;
  Shape torus = Shape::box(dim_, lo, hi);
  std::vector<std::pair<Site, Shape>> raw;
  if (o_.schedule == Schedule::SiteSweep) {
    for (const auto& s : torus) raw.emplace_back(s, Shape(dim_, {Site()}));
    shifts_ = {Site()};
  } else {
    if (o_.packing.empty() || o_.covering.empty()) throw PreconditionError("Delone schedule needs P and C");
    auto D = delone_greedy(o_.packing, o_.covering, torus);
    std::vector<char> covered(state_.size(), 0);
    Shape P = o_.packing;
    for (const auto& d : D.points) {
      raw.emplace_back(d, P);
      for (const auto& p : P) covered[index(d + p)] = 1;
    }
    for (const auto& s : torus)
      if (!covered[index(s)]) raw.emplace_back(s, Shape(dim_, {Site()}));
    for (const auto& cs : o_.covering) shifts_.push_back(-cs);
  }
  int ext = 0;
  for (const auto& [a, B] : raw) {
    auto [l, h] = B.bounds();
    for (int i = 0; i < dim_; ++i) ext = std::max(ext, h[i] - l[i]);
  }
  for (int i = 0; i < dim_; ++i)
    if (size_[i] < 2 * reach_ + ext + 1) throw PreconditionError("torus too small for the interaction range");
  for (const auto& [a, B] : raw) blocks_.push_back({a, stencil_for(B)});
  // greedy colouring: blocks of one class do not read each other's sites
  std::vector<std::vector<char>> occ;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& blk = blocks_[b];
    const Shape& B = stencil_shapes_[blk.stencil];
    Shape reach = B.dilate(reach_);
    std::size_t k = 0;
    for (;; ++k) {
      if (k == occ.size()) {
        occ.emplace_back(state_.size(), 0);
        colours_.emplace_back();
      }
      bool clash = false;
      for (const auto& s : reach)
        if (occ[k][index(blk.anchor + s)]) {
          clash = true;
          break;
        }
      if (!clash) break;
    }
    for (const auto& s : B) occ[k][index(blk.anchor + s)] = 1;
    colours_[k].push_back(b);
  }
}

Pattern Sampler::patch(const Site& anchor, const Shape& W) const {
  auto [lo, hi] = W.bounds();
  Pattern p(dim_, anchor + lo, anchor + hi);
  for (const auto& s : W) {
    Symbol v = state_[index(anchor + s)];
    if (v != kUnset) p.set(anchor + s, v);
  }
  return p;
}

Pattern Sampler::env_patch(const Site& anchor, const Shape& W) const {
  Pattern p(dim_);
  if (env_.empty()) return p;
  for (const auto& s : W) p.set(anchor + s, env_[index(anchor + s)]);
  return p;
}

void Sampler::initial_fill() {
  if (o_.initial) {
    if (o_.initial->size() != state_.size()) throw PreconditionError("initial configuration has the wrong size");
    state_ = *o_.initial;
    if (!admissible()) throw PreconditionError("initial configuration is not admissible");
    return;
  }
  const int single = stencil_for(Shape(dim_, {Site()}));
  const Stencil& st = *stencils_[single];
  std::vector<Site> order;
  {
    Site lo, hi;
    for (int i = 0; i < dim_; ++i) hi[i] = size_[i] - 1;
    for (const auto& s : Shape::box(dim_, lo, hi)) order.push_back(s);
  }
  Shape nb = Shape::ball(dim_, reach_);
  std::vector<Symbol> scratch_x, scratch_e;
  Word w;
  auto ok_at = [&](const Site& a) {
    if (!fast_) {
      Pattern p = patch(a, nb);
      Pattern e = env_patch(a, nb.dilate(reach_));
      return c_.admissible_near(e, p, a);
    }
    Symbol v0 = state_[index(a)];
    if (v0 >= c_.q()) return false;
    for (const auto& pl : st.by_trigger[0]) {
      if (pl.kind == 1) continue;
      scratch_x.clear();
      bool full = true;
      for (const auto& e : pl.x) {
        Symbol v = e.block >= 0 ? v0 : state_[index(a + e.off)];
        if (v == kUnset) {
          full = false;
          break;
        }
        scratch_x.push_back(v);
      }
      if (!full) continue;
      if (pl.kind == 0) {
        w.assign(scratch_x.begin(), scratch_x.end());
        if (c_.shift.rules()[pl.idx].forbids(w)) return false;
      } else {
        scratch_e.clear();
        for (const auto& e : pl.env) scratch_e.push_back(env_[index(a + e)]);
        if (!c_.joint[pl.idx].ok(scratch_e.data(), scratch_x.data())) return false;
      }
    }
    return true;
  };
  long budget = o_.fill_budget;
  std::size_t i = 0;
  std::vector<int> next(order.size(), 0);
  while (i < order.size()) {
    std::size_t k = index(order[i]);
    bool placed = false;
    while (next[i] < c_.q()) {
      if (--budget < 0) throw Error("no admissible initial configuration found within the fill budget");
      state_[k] = static_cast<Symbol>(next[i]++);
      if (ok_at(order[i])) {
        placed = true;
        break;
      }
    }
    if (placed) {
      ++i;
      if (i < order.size()) next[i] = 0;
      continue;
    }
    state_[k] = kUnset;
    if (i == 0) throw Error("no admissible initial configuration exists on this torus");
    --i;
  }
  if (!admissible()) throw Error("greedy fill produced an inadmissible configuration");
}

bool Sampler::admissible() const {
  Site lo, hi;
  for (int i = 0; i < dim_; ++i) hi[i] = size_[i] - 1;
  Shape nb = Shape::ball(dim_, reach_);
  for (const auto& a : Shape::box(dim_, lo, hi)) {
    if (state_[index(a)] == kUnset || state_[index(a)] >= c_.q()) return false;
    Pattern p = patch(a, nb);
    Pattern e = env_patch(a, nb.dilate(reach_));
    if (!c_.admissible_near(e, p, a)) return false;
  }
  return true;
}

void Sampler::update(const Block& blk, SplitMix64& rng) {
  if (!fast_) {
    update_generic(blk, rng);
    return;
  }
  const Stencil& st = *stencils_[blk.stencil];
  const std::size_t n = st.sites.size();
  const int q = c_.q();
  const Site& a = blk.anchor;
  std::vector<Symbol> u(n, 0), xs, es;
  std::vector<Word> fills;
  std::vector<double> energies;
  Word w;
  std::vector<double> partial(n + 1, 0.0);
  // depth-first over block values in lexicographic order
  std::size_t i = 0;
  std::vector<int> nxt(n, 0);
  auto eval_trigger = [&](std::size_t t, double& e) {
    for (const auto& pl : st.by_trigger[t]) {
      xs.resize(pl.x.size());
      for (std::size_t k = 0; k < pl.x.size(); ++k) {
        const auto& en = pl.x[k];
        xs[k] = en.block >= 0 ? u[en.block] : state_[index(a + en.off)];
      }
      if (pl.kind == 0) {
        w.assign(xs.begin(), xs.end());
        if (c_.shift.rules()[pl.idx].forbids(w)) return false;
        continue;
      }
      es.resize(pl.env.size());
      for (std::size_t k = 0; k < pl.env.size(); ++k) es[k] = env_[index(a + pl.env[k])];
      if (pl.kind == 2) {
        if (!c_.joint[pl.idx].ok(es.data(), xs.data())) return false;
      } else {
        e += phi_.terms()[pl.idx].eval(es.data(), xs.data());
      }
    }
    return true;
  };
  while (true) {
    if (nxt[i] >= q) {
      if (i == 0) break;
      --i;
      continue;
    }
    u[i] = static_cast<Symbol>(nxt[i]++);
    double e = partial[i];
    if (!eval_trigger(i, e)) continue;
    partial[i + 1] = e;
    if (i + 1 == n) {
      fills.emplace_back(u.begin(), u.end());
      energies.push_back(e);
      continue;
    }
    ++i;
    nxt[i] = 0;
  }
  if (fills.empty()) throw Error("block has no admissible filling; state is inconsistent");
  double emin = *std::min_element(energies.begin(), energies.end());
  double tot = 0;
  for (auto& e : energies) tot += (e = std::exp(-(e - emin)));
  double r = rng.uniform() * tot;
  std::size_t pick = 0;
  for (; pick + 1 < fills.size(); ++pick) {
    r -= energies[pick];
    if (r < 0) break;
  }
  for (std::size_t k = 0; k < n; ++k) state_[index(a + st.sites[k])] = fills[pick][k];
}

void Sampler::update_generic(const Block& blk, SplitMix64& rng) {
  const Shape& B = stencil_shapes_[blk.stencil];
  Shape W = B.dilate(reach_);
  Shape A = B.translate(blk.anchor);
  Shape Wa = W.translate(blk.anchor);
  Pattern x = patch(blk.anchor, W);
  Pattern e = env_patch(blk.anchor, W.dilate(reach_));
  auto k = gibbs_conditional(c_, phi_, e, x, Wa, A);
  if (k.empty()) throw Error("block has no admissible filling; state is inconsistent");
  double r = rng.uniform();
  std::size_t pick = 0;
  for (; pick + 1 < k.p.size(); ++pick) {
    r -= k.p[pick];
    if (r < 0) break;
  }
  for (std::size_t i = 0; i < A.size(); ++i) state_[index(A[i])] = k.fillings[pick][i];
}

void Sampler::sweep() {
  const Site shift = shifts_[sweeps_ % shifts_.size()];
  const int threads = std::max(1, o_.threads);
  auto run_block = [&](std::size_t b) {
    Block blk = blocks_[b];
    blk.anchor = blk.anchor + shift;
    SplitMix64 rng(stream_seed(o_.seed, sweeps_, b));
    update(blk, rng);
  };
  for (const auto& cls : colours_) {
    if (threads == 1 || cls.size() < 64) {
      for (std::size_t b : cls) run_block(b);
    } else {
      std::vector<std::thread> pool;
      std::exception_ptr err;
      std::mutex m;
      for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
          try {
            for (std::size_t i = t; i < cls.size(); i += threads) run_block(cls[i]);
          } catch (...) {
            std::lock_guard<std::mutex> g(m);
            err = std::current_exception();
          }
        });
      for (auto& th : pool) th.join();
      if (err) std::rethrow_exception(err);
    }
  }
  for (const auto& b : blocks_) updates_ += stencil_shapes_[b.stencil].size();
  ++sweeps_;
}

Word Sampler::word(const Site& g, const Shape& W) const {
  Word w(W.size());
  for (std::size_t i = 0; i < W.size(); ++i) w[i] = state_[index(g + W[i])];
  return w;
}

Word Sampler::env_word(const Site& g, const Shape& W) const {
  Word w(W.size());
  for (std::size_t i = 0; i < W.size(); ++i) w[i] = env_.empty() ? kUnset : env_[index(g + W[i])];
  return w;
}

void collect_windows(const Sampler& s, EmpiricalCounts& counts) {
  Site lo, hi;
  for (int i = 0; i < s.dim(); ++i) hi[i] = s.size()[i] - 1;
  Word ew, xw;
  for (const auto& g : Shape::box(s.dim(), lo, hi)) {
    xw = s.word(g, counts.window);
    if (!counts.env_window.empty()) ew = s.env_word(g, counts.env_window);
    counts.add(ew, xw);
  }
}

namespace {
const char kMagic[8] = {'G', 'L', 'F', 'R', 'A', 'M', 'E', '1'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("truncated frame header");
  return v;
}
}  // namespace

void write_frame_header(std::ostream& os, const FrameHeader& h) {
  os.write(kMagic, 8);
  put<std::uint32_t>(os, h.version);
  put<std::int32_t>(os, h.dim);
  for (int i = 0; i < kMaxDim; ++i) put<std::int32_t>(os, h.size[i]);
  put<std::int32_t>(os, h.q);
  put<std::uint64_t>(os, h.seed);
}

FrameHeader read_frame_header(std::istream& is) {
  char m[8];
  is.read(m, 8);
  if (!is || std::memcmp(m, kMagic, 8) != 0) throw Error("not a gibbslab frame file");
  FrameHeader h;
  h.version = get<std::uint32_t>(is);
  if (h.version != 1) throw Error("unsupported frame version");
  h.dim = get<std::int32_t>(is);
  for (int i = 0; i < kMaxDim; ++i) h.size[i] = get<std::int32_t>(is);
  h.q = get<std::int32_t>(is);
  h.seed = get<std::uint64_t>(is);
  return h;
}

void write_frame(std::ostream& os, const std::vector<Symbol>& state) {
  std::vector<unsigned char> b(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) b[i] = static_cast<unsigned char>(state[i]);
  os.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

bool read_frame(std::istream& is, std::size_t volume, std::vector<Symbol>& state) {
  std::vector<unsigned char> b(volume);
  is.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(volume));
  if (is.gcount() == 0) return false;
  if (static_cast<std::size_t>(is.gcount()) != volume) throw Error("truncated frame");
  state.assign(b.begin(), b.end());
  return true;
}

}  // namespace gibbslab
