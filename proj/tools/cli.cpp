#include "gibbslab/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gibbslab/gibbs.hpp"
#include "gibbslab/mixing.hpp"
#include "gibbslab/model_io.hpp"
#include "gibbslab/relative.hpp"
#include "gibbslab/sampler.hpp"

namespace gibbslab::cli {

namespace {

constexpr int kOk = 0, kFail = 1, kRefuted = 2;

struct Common {
  std::string model, interaction, out, log;
  int threads = 0;
  std::uint64_t budget = 200'000'000;
};

int threads_of(const Common& g) {
  if (g.threads > 0) return g.threads;
  if (const char* e = std::getenv("GIBBSLAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(e, &end, 10);
    if (end && *end == 0 && v > 0) return static_cast<int>(v);
    throw PreconditionError(std::string("GIBBSLAB_THREADS must be a positive integer, got \"") + e + "\"");
  }
  return 1;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
  if (!f) throw Error("cannot write " + path);
}

std::string num(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

json head(const std::string& command) { return {{"format", kReportFormat}, {"command", command}}; }

void emit(const Common& g, const json& j) { write_text(g.out, j.dump(2) + "\n"); }

const char* kind_name(SubshiftSpec::Kind k) {
  switch (k) {
    case SubshiftSpec::Kind::Full: return "full";
    case SubshiftSpec::Kind::SFT: return "sft";
    case SubshiftSpec::Kind::Oracle: return "oracle";
    case SubshiftSpec::Kind::Group: return "group";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// environments

Site extents(const Shape& S, Site* lo_out) {
  auto [lo, hi] = S.bounds();
  Site ext(1, 1, 1);
  for (int i = 0; i < S.dim(); ++i) ext[i] = hi[i] - lo[i] + 1;
  *lo_out = lo;
  return ext;
}

std::vector<Symbol> env_on_torus(const Model& m, const Site& size, std::uint64_t seed) {
  const EnvSampler& e = m.env_sampler;
  if (e.type == "bernoulli_site") return bernoulli_site_env(size, m.dim(), e.p, seed);
  if (e.type == "bernoulli_bond") return bernoulli_bond_env(size, m.dim(), e.p, seed);
  throw PreconditionError(m.file + ": /environment: no \"sample\" law to draw an environment from");
}

// the sampled environment on the bounding box of S, placed at its corner
Pattern sampled_env(const Model& m, const Shape& S, std::uint64_t seed) {
  Pattern env(m.dim());
  if (!m.relative || S.empty()) return env;
  Site lo;
  Site ext = extents(S, &lo);
  auto v = env_on_torus(m, ext, seed);
  for (const auto& s : S) {
    Site r = s - lo;
    std::size_t k = 0;
    for (int i = 0; i < m.dim(); ++i) k = k * ext[i] + r[i];
    env.set(s, v[k]);
  }
  return env;
}

double env_symbol_weight(const Model& m, Symbol s) {
  const double p = m.env_sampler.p;
  if (m.env_sampler.type == "bernoulli_site") return s == 1 ? p : 1 - p;
  double w = 1;
  for (int i = 0; i < m.dim(); ++i) w *= (s >> i & 1) ? p : 1 - p;
  return w;
}

// every environment word on S with its product probability
std::vector<EnvAtom> exact_env_atoms(const Model& m, const Shape& S) {
  if (!m.relative) return {};
  if (m.env_sampler.type.empty())
    throw PreconditionError(m.file + ": /environment: no \"sample\" law for exact environment atoms");
  const int q = m.relative->env.q();
  double count = std::pow(static_cast<double>(q), static_cast<double>(S.size()));
  if (count > 65536) throw PreconditionError("too many environment atoms on " + S.str());
  std::vector<EnvAtom> nu;
  Word w(S.size(), 0);
  while (true) {
    double p = 1;
    for (Symbol s : w) p *= env_symbol_weight(m, s);
    if (p > 0) nu.push_back({Pattern(S, w), p});
    std::size_t i = w.size();
    while (i > 0 && w[i - 1] == q - 1) w[--i] = 0;
    if (i == 0) break;
    ++w[i - 1];
  }
  double t = 0;
  for (const auto& a : nu) t += a.weight;
  for (auto& a : nu) a.weight /= t;
  return nu;
}

std::vector<double> parse_law(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, ',');) {
    auto slash = t.find('/');
    try {
      v.push_back(slash == std::string::npos ? std::stod(t) : std::stod(t.substr(0, slash)) / std::stod(t.substr(slash + 1)));
    } catch (const std::exception&) {
      throw PreconditionError("cannot read probability \"" + t + "\"");
    }
    if (!(v.back() >= 0)) throw PreconditionError("probabilities are non-negative");
  }
  double tot = 0;
  for (double x : v) tot += x;
  if (v.empty() || std::abs(tot - 1) > 1e-9) throw PreconditionError("law \"" + s + "\" does not sum to one");
  return v;
}

WindowMeasure iid_measure(const Shape& W, const std::vector<double>& law) {
  WindowMeasure mu(W);
  const int q = static_cast<int>(law.size());
  Word w(W.size(), 0);
  while (true) {
    double p = 1;
    for (Symbol s : w) p *= law[s];
    if (p > 0) mu.add(0, w, p);
    std::size_t i = w.size();
    while (i > 0 && w[i - 1] == q - 1) w[--i] = 0;
    if (i == 0) break;
    ++w[i - 1];
  }
  return mu;
}

// shapes separated by ';' (brackets would otherwise be read as a list by the parser)
std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, ';');)
    if (!t.empty()) out.push_back(t);
  return out;
}

Shape interval_window(int n) {
  if (n < 1) throw PreconditionError("window length must be positive");
  return Shape::interval(0, n - 1);
}

struct Loaded {
  Model m;
  Interaction phi;
};

Loaded load(const Common& g) {
  if (g.model.empty()) throw PreconditionError("--model is required");
  Loaded L{load_model(g.model), Interaction()};
  L.phi = load_interaction(g.interaction, L.m);
  if (L.phi.dim() != L.m.dim()) throw ModelError(g.interaction, "", "interaction dimension differs from the model");
  return L;
}

json interaction_summary(const Interaction& phi) {
  json terms = json::array();
  for (const auto& t : phi.terms())
    terms.push_back({{"label", t.label}, {"shape", shape_to_json(t.shape)}, {"env_shape", shape_to_json(t.env_shape)},
                     {"sup_norm", t.sup_norm}});
  return {{"terms", terms}, {"range", phi.range()}, {"norm", phi.norm()}, {"tail", phi.tail}};
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_validate(const Common& g) {
  Loaded L = load(g);
  const auto& s = L.m.shift;
  // every term must evaluate to a finite number on every word of its shape
  for (const auto& t : L.phi.terms())
    if (!std::isfinite(t.sup_norm)) throw ModelError(g.interaction, "/terms", "term " + t.label + " is not bounded");
  json j = head("validate");
  json exact = s.exactness_radius() ? json(*s.exactness_radius()) : json(nullptr);
  j["ok"] = true;
  j["model"] = {{"name", s.name}, {"dimension", s.dim()},  {"alphabet", s.alphabet().names},
                {"kind", kind_name(s.kind())}, {"radius", s.radius()}, {"exactness", exact}};
  if (L.m.relative) {
    const auto& rs = *L.m.relative;
    j["relative"] = {{"name", rs.name},
                     {"environment_alphabet", rs.env.alphabet().names},
                     {"fiber_rule", rs.omega.fiber_name},
                     {"fiber_exactness", rs.omega.fiber_exactness ? json(*rs.omega.fiber_exactness) : json(nullptr)},
                     {"environment_law", L.m.env_sampler.type.empty() ? json(nullptr)
                                                                      : json({{"type", L.m.env_sampler.type},
                                                                              {"p", L.m.env_sampler.p},
                                                                              {"seed", L.m.env_sampler.seed}})}};
  }
  j["interaction"] = interaction_summary(L.phi);
  emit(g, j);
  return kOk;
}

struct LanguageArgs {
  std::string shape = "ball1";
  int margin = 0;
  bool count_only = false;
  std::string csv;
  std::uint64_t env_seed = 0;
};

int cmd_language(const Common& g, const LanguageArgs& a) {
  Loaded L = load(g);
  Constraint c = L.m.constraint();
  Shape A = parse_shape(a.shape, L.m.dim());
  Budget b{g.budget, 0};
  Pattern env = sampled_env(L.m, A.dilate(a.margin + c.radius()), a.env_seed ? a.env_seed : L.m.env_sampler.seed);
  LanguageTable T = language(c, env, A, a.margin, &b);
  json j = head("language");
  j["shape"] = shape_to_json(A);
  j["margin"] = a.margin;
  j["exact"] = T.exact;
  j["count"] = T.size();
  if (!a.count_only) {
    json words = json::array();
    for (const auto& w : T.words) words.push_back(word_string(L.m.shift.alphabet(), w));
    j["words"] = words;
  }
  if (!a.csv.empty()) {
    std::ostringstream os;
    os << "# gibbslab-language/1 shape=" << A.str() << " margin=" << a.margin << " exact=" << (T.exact ? 1 : 0) << "\n";
    os << "word\n";
    for (const auto& w : T.words) os << word_string(L.m.shift.alphabet(), w) << "\n";
    write_text(a.csv, os.str());
  }
  emit(g, j);
  return kOk;
}

struct CheckArgs {
  std::string property;
  std::string F = "ball1", window = "5", A = "ball0", B;
  std::string trials;
  std::string u, v;
  int radius = 4, margin = 0, sampled = 0, pair_radius = -1;
  std::uint64_t seed = 1;
};

int cmd_check(const Common& g, const CheckArgs& a) {
  Loaded L = load(g);
  const int dim = L.m.dim();
  Constraint c = L.m.constraint();
  Budget b{g.budget, 0};
  json params = {{"margin", a.margin}};
  Verdict v;
  json extra;
  const bool squares = L.m.shift.catalog_name == "squares";
  if (a.property == "tmp") {
    Shape A = parse_shape(a.A, dim);
    params["A"] = shape_to_json(A);
    if (a.B.empty()) {
      params["max_radius"] = a.radius;
      v = find_memory_set(c, A, a.radius, a.margin);
    } else {
      Shape B = parse_shape(a.B, dim);
      params["B"] = shape_to_json(B);
      if (a.sampled > 0) {
        if (!squares) throw PreconditionError("sampled memory checks need a pair source; only the squares shift has one");
        int pr = a.pair_radius >= 0 ? a.pair_radius : B.bounds().second.linf() + 4;
        params["sampled"] = a.sampled;
        params["seed"] = a.seed;
        params["pair_radius"] = pr;
        v = check_memory_set_sampled(c, A, B, squares_pair_source(A, B, pr), a.sampled, a.seed);
      } else {
        v = check_memory_set(c, A, B, a.margin, &b);
      }
    }
  } else if (a.property == "strong-tmp") {
    Shape F = parse_shape(a.F, dim);
    params["F"] = shape_to_json(F);
    if (squares) {
      v = squares_strong_tmp_refutation(F);
    } else {
      std::vector<Shape> trials;
      for (const auto& t : split_list(a.trials)) trials.push_back(parse_shape(t, dim));
      if (trials.empty()) trials = {parse_shape("ball0", dim), parse_shape(a.A, dim)};
      json tj = json::array();
      for (const auto& t : trials) tj.push_back(shape_to_json(t));
      params["trials"] = tj;
      v = check_strong_tmp(c, F, trials, a.margin);
    }
  } else if (a.property == "si" || a.property == "tssm" || a.property == "reconstruction") {
    Shape F = parse_shape(a.F, dim), W = parse_shape(a.window, dim);
    params["F"] = shape_to_json(F);
    params["window"] = shape_to_json(W);
    if (a.property == "si")
      v = check_si(c, F, W, a.margin, &b);
    else if (a.property == "tssm")
      v = check_tssm(c, F, W, a.margin, &b);
    else
      v = tssm_implies_sft_reconstruction(c, F, W, a.margin);
  } else if (a.property == "mixing") {
    Shape A = parse_shape(a.A, dim);
    params["A"] = shape_to_json(A);
    if (L.m.relative) {
      // one uniform search per sampled theta; the verdict kept is the worst one
      const int n = std::max(1, a.sampled);
      Shape S = A.dilate(a.radius + c.radius() + 1);
      std::vector<Pattern> thetas;
      for (int k = 0; k < n; ++k) thetas.push_back(sampled_env(L.m, S, L.m.env_sampler.seed + static_cast<std::uint64_t>(k)));
      ThetaMixingReport rep = per_theta_mixing_sets(*L.m.relative, thetas, A, a.radius, a.margin);
      params["max_radius"] = a.radius;
      params["thetas"] = n;
      json rows = json::array();
      for (int k = 0; k < n; ++k)
        rows.push_back({{"env_seed", L.m.env_sampler.seed + static_cast<std::uint64_t>(k)},
                        {"radius", rep.radius[k]},
                        {"annulus", rep.annulus[k]}});
      params["per_theta"] = rows;
      params["mean_annulus"] = rep.mean_annulus;
      params["unresolved"] = rep.unresolved;
      v = rep.verdicts[rep.worst];
    } else if (a.B.empty()) {
      params["max_radius"] = a.radius;
      v = find_mixing_set(c, A, a.radius, a.margin);
    } else {
      Shape B = parse_shape(a.B, dim);
      params["B"] = shape_to_json(B);
      v = check_mixing_set(c, A, B, a.margin, &b);
    }
  } else if (a.property == "interchange") {
    if (a.u.empty() || a.v.empty()) throw PreconditionError("interchange needs --u and --v");
    Shape A = parse_shape(a.A, dim);
    params["A"] = shape_to_json(A);
    params["radius"] = a.radius;
    const auto& al = L.m.shift.alphabet();
    Pattern u = pattern_on(al, A, a.u), w = pattern_on(al, A, a.v);
    Pattern env = sampled_env(L.m, A.dilate(a.radius + c.radius()), L.m.env_sampler.seed);
    v = interchangeable(c, env, u, w, a.radius, &b);
  } else if (a.property == "group-memory") {
    if (L.m.shift.kind() != SubshiftSpec::Kind::Group) throw PreconditionError("group-memory needs a group shift");
    Shape A = parse_shape(a.A, dim);
    params["A"] = shape_to_json(A);
    params["radius"] = a.radius;
    GroupChain ch = group_shift_chain(L.m.shift, A, default_enumeration(dim, a.radius));
    v = check_memory_set(c, A, ch.memory, a.margin, &b);
    json sizes = json::array();
    for (const auto& l : ch.levels) sizes.push_back(l.size());
    json order = json::array();
    for (const auto& s : ch.order) {
      json p = json::array();
      for (int i = 0; i < dim; ++i) p.push_back(s[i]);
      order.push_back(p);
    }
    extra = {{"memory", shape_to_json(ch.memory)}, {"level_sizes", sizes}, {"stable_at", ch.stable_at}, {"order", order}};
  } else {
    throw PreconditionError("unknown property " + a.property);
  }
  json j = v.to_json();
  j["format"] = kReportFormat;
  j["command"] = "check " + a.property;
  j["params"] = params;
  j["model"] = L.m.source;
  if (!extra.is_null()) j["chain"] = extra;
  emit(g, j);
  return v.refuted() ? kRefuted : kOk;
}

int cmd_report(const Common& g, const std::string& file, bool verify) {
  std::ifstream in(file);
  if (!in) throw ModelError(file, "", "cannot open");
  json r;
  try {
    r = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError(file, "", std::string("invalid JSON: ") + e.what());
  }
  json out = head("report");
  out["file"] = file;
  if (!r.contains("outcome")) {
    if (verify) throw ModelError(file, "/outcome", "not a verdict; nothing to replay");
    out["pass"] = r.value("pass", true);
    out["summary"] = r;
    emit(g, out);
    return out["pass"].get<bool>() ? kOk : kRefuted;
  }
  Verdict rec;
  try {
    rec = Verdict::from_json(r);
  } catch (const std::exception& e) {
    throw ModelError(file, "", e.what());
  }
  out["recorded"] = rec.to_json();
  if (!verify) {
    emit(g, out);
    return rec.refuted() ? kRefuted : kOk;
  }
  Model m = !g.model.empty() ? load_model(g.model)
            : r.contains("model") ? model_from_json(r["model"], file + "#/model")
                                  : throw ModelError(file, "/model", "no embedded model; pass --model");
  Verdict rep = reverify(rec, m.constraint());
  bool agree = rep.outcome == rec.outcome;
  out["replayed"] = rep.to_json();
  out["agree"] = agree;
  emit(g, out);
  if (!agree) {
    std::cerr << "gibbslab: " << file << ": witness does not replay (recorded " << to_string(rec.outcome)
              << ", replayed " << to_string(rep.outcome) << ")\n";
    return kFail;
  }
  return rep.refuted() ? kRefuted : kOk;
}

struct SampleArgs {
  std::string torus = "16x16", schedule = "site", packing, covering;
  double sweeps = 100, burn = 0, every = 0;
  std::uint64_t seed = 1, env_seed = 0;
};

long count_of(double x, const char* what) {
  if (!(x >= 0) || x > 1e15 || std::floor(x) != x) throw PreconditionError(std::string(what) + " must be a whole number");
  return static_cast<long>(x);
}

int cmd_sample(const Common& g, const SampleArgs& a) {
  Loaded L = load(g);
  if (g.out.empty()) throw PreconditionError("sample needs --out for the frame file");
  const int dim = L.m.dim();
  Site size(1, 1, 1);
  {
    std::stringstream ss(a.torus);
    int i = 0;
    for (std::string t; std::getline(ss, t, 'x');) {
      if (i >= dim) throw PreconditionError("--torus has more extents than the dimension");
      try {
        size[i++] = std::stoi(t);
      } catch (const std::exception&) {
        throw PreconditionError("cannot read --torus " + a.torus);
      }
    }
    if (i == 1)
      for (int k = 1; k < dim; ++k) size[k] = size[0];
    else if (i != dim)
      throw PreconditionError("--torus needs " + std::to_string(dim) + " extents");
  }
  const long sweeps = count_of(a.sweeps, "--sweeps"), burn = count_of(a.burn, "--burn");
  long every = count_of(a.every, "--every");
  if (every == 0) every = std::max(1L, sweeps);

  SamplerOptions o;
  o.size = size;
  o.seed = a.seed;
  o.threads = threads_of(g);
  if (a.schedule == "delone") {
    o.schedule = Schedule::Delone;
    o.packing = parse_shape(a.packing.empty() ? "ball0" : a.packing, dim);
    o.covering = parse_shape(a.covering.empty() ? "ball1" : a.covering, dim);
  } else if (a.schedule != "site") {
    throw PreconditionError("--schedule is site or delone");
  }
  const std::uint64_t env_seed = a.env_seed ? a.env_seed : L.m.env_sampler.seed;
  if (L.m.relative) o.env = env_on_torus(L.m, size, env_seed);
  Sampler s(L.m.constraint(), L.phi, o);

  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw Error("cannot write " + g.out);
  FrameHeader h;
  h.dim = dim;
  h.size = size;
  h.q = L.m.shift.q();
  h.seed = a.seed;
  write_frame_header(f, h);
  s.run(burn);
  long frames = 0;
  for (long done = 0; done < sweeps;) {
    long k = std::min(every, sweeps - done);
    s.run(k);
    done += k;
    write_frame(f, s.state());
    ++frames;
  }
  if (sweeps == 0) {
    write_frame(f, s.state());
    ++frames;
  }
  f.close();
  if (!f) throw Error("cannot write " + g.out);
  if (!o.env.empty()) {
    std::ofstream fe(g.out + ".env", std::ios::binary);
    FrameHeader he = h;
    he.q = L.m.relative->env.q();
    write_frame_header(fe, he);
    write_frame(fe, o.env);
  }
  json ext = json::array();
  for (int i = 0; i < dim; ++i) ext.push_back(size[i]);
  json meta = {{"format", "gibbslab-frames/1"},
               {"frame_file", g.out},
               {"dimension", dim},
               {"size", ext},
               {"alphabet", L.m.shift.alphabet().names},
               {"seed", a.seed},
               {"burn", burn},
               {"sweeps", sweeps},
               {"every", every},
               {"frames", frames},
               {"site_updates", s.site_updates()},
               {"schedule", a.schedule},
               {"admissible", s.admissible()}};
  if (!o.env.empty()) {
    meta["environment_file"] = g.out + ".env";
    meta["environment_seed"] = env_seed;
    meta["environment_alphabet"] = L.m.relative->env.alphabet().names;
  }
  write_text(g.out + ".json", meta.dump(2) + "\n");
  meta["command"] = "sample";
  std::cout << meta.dump(2) << "\n";
  return s.admissible() ? kOk : kFail;
}

struct PressureArgs {
  bool free = false, variational = false;
  int nmin = 1, nmax = 8;
  std::string csv;
};

int cmd_pressure(const Common& g, const PressureArgs& a) {
  Loaded L = load(g);
  if (a.free == a.variational) throw PreconditionError("give exactly one of --free and --variational");
  if (a.nmin < 0 || a.nmax < a.nmin) throw PreconditionError("need 0 <= --nmin <= --nmax");
  Constraint c = L.m.constraint();
  const int dim = L.m.dim();
  std::vector<std::pair<int, double>> series;
  if (a.free) {
    if (!L.m.relative) {
      series = variational_pressure_estimate(c, L.phi, {}, a.nmin, a.nmax);
    } else {
      // one sampled environment per box
      for (int n = a.nmin; n <= a.nmax; ++n) {
        Shape F = Shape::ball(dim, n);
        std::vector<EnvAtom> nu{{sampled_env(L.m, F, L.m.env_sampler.seed), 1.0}};
        auto v = variational_pressure_estimate(c, L.phi, nu, n, n);
        series.push_back(v.front());
      }
    }
  } else {
    for (int n = std::max(1, a.nmin); n <= a.nmax; ++n) {
      if (dim == 1) {
        auto nu = [&](const Shape& S) { return exact_env_atoms(L.m, S); };
        series.emplace_back(n, pressure_increment_1d(c, L.phi, nu, n, site_blocks));
      } else {
        Shape W = Shape::box(dim, Site(), Site(n - 1, n - 1, dim == 3 ? n - 1 : 0));
        auto res = relative_equilibrium_search(c, L.phi, exact_env_atoms(L.m, W), W, site_blocks(W));
        series.emplace_back(n, res.pressure / static_cast<double>(W.size()));
      }
    }
  }
  std::ostringstream os;
  // entropies condition on environment words of the window only, an upper bound for the full one
  os << "# gibbslab-series/1 pressure " << (a.free ? "free" : "variational") << " model=" << L.m.shift.name
     << (L.m.relative ? " env-window-conditional" : "") << "\n";
  os << "n,value\n";
  for (const auto& [n, v] : series) os << n << "," << num(v) << "\n";
  write_text(a.csv, os.str());
  if (!g.out.empty()) {
    json j = head("pressure");
    json rows = json::array();
    for (const auto& [n, v] : series) rows.push_back({n, v});
    j["mode"] = a.free ? "free" : "variational";
    j["env_window_conditional"] = L.m.relative.has_value();
    j["series"] = rows;
    emit(g, j);
  }
  return kOk;
}

struct KernelArgs {
  std::string A = "ball0", window = "ball1", context;
  int margin = 0;
  std::uint64_t env_seed = 0;
};

int cmd_kernel(const Common& g, const KernelArgs& a) {
  Loaded L = load(g);
  const int dim = L.m.dim();
  Constraint c = L.m.constraint();
  Shape A = parse_shape(a.A, dim), W = parse_shape(a.window, dim);
  if (!A.subset_of(W)) throw PreconditionError("--A must lie inside --window");
  Shape ring = W.minus(A);
  const auto& al = L.m.shift.alphabet();
  Pattern env = sampled_env(L.m, W.dilate(c.radius() + L.phi.env_reach()), a.env_seed ? a.env_seed : L.m.env_sampler.seed);
  Pattern ctx(dim);
  if (!a.context.empty()) {
    ctx = pattern_on(al, ring, a.context);
  } else {
    // first admissible filling in lexicographic trial order
    Budget b{g.budget, 0};
    Pattern p(dim);
    if (!fill_region(c, env, p, W, b)) throw Error("no admissible pattern on the window");
    ctx = p.restrict_to(ring);
  }
  Budget b{g.budget, 0};
  Conditional k = gibbs_conditional(c, L.phi, env, ctx, W, A, a.margin, &b);
  json j = head("kernel");
  j["A"] = shape_to_json(A);
  j["window"] = shape_to_json(W);
  j["context"] = word_string(al, ctx.values_on(ring));
  json rows = json::array();
  for (std::size_t i = 0; i < k.fillings.size(); ++i)
    rows.push_back({{"filling", word_string(al, k.fillings[i])}, {"energy", k.energy[i]}, {"p", k.p[i]}});
  j["fillings"] = rows;
  j["logZ"] = k.logZ;
  j["truncation_err"] = k.err;
  emit(g, j);
  return k.empty() ? kFail : kOk;
}

// ---------------------------------------------------------------------------
// relative experiments

FactorSystem code_of(const std::string& code, const Common& g) {
  if (code == "merge") return merge_code();
  if (code == "identity" || code == "constant") {
    if (g.model.empty()) throw PreconditionError("--code " + code + " needs --model for the domain shift");
    Model m = load_model(g.model);
    return code == "identity" ? identity_code(m.shift) : constant_code(m.shift);
  }
  throw PreconditionError("--code is merge, identity or constant");
}

struct FiberArgs {
  std::string code = "merge", law, A;
  int window = 3;
  double tol = 1e-9;
  bool pooled = false;
};

int cmd_fiber_gibbs(const Common& g, const FiberArgs& a) {
  FactorSystem fs = code_of(a.code, g);
  Interaction phi = g.model.empty() ? Interaction(fs.domain.dim()) : load_interaction(g.interaction, load_model(g.model));
  if (fs.domain.dim() != 1) throw PreconditionError("fiber-gibbs runs on one-dimensional codes");
  Shape W = interval_window(a.window);
  Shape A = a.A.empty() ? Shape::interval(a.window / 2, a.window / 2) : parse_shape(a.A, 1);
  WindowMeasure mu(W);
  if (!a.law.empty()) {
    if (fs.domain.kind() != SubshiftSpec::Kind::Full) throw PreconditionError("--law needs a full-shift domain");
    auto law = parse_law(a.law);
    if (static_cast<int>(law.size()) != fs.domain.q()) throw PreconditionError("--law needs one entry per symbol");
    mu = iid_measure(W, law);
  } else {
    mu = gibbs_window_measure(fs.domain, phi, Pattern(1), W);
  }
  GibbsReport r = fiber_gibbs_check(mu, fs, phi, A, a.tol, a.pooled ? ContextMode::Pooled : ContextMode::Full);
  json j = head("relative fiber-gibbs");
  j["code"] = fs.name;
  j["window"] = shape_to_json(W);
  j["A"] = shape_to_json(A);
  j["measure"] = a.law.empty() ? json("free-boundary gibbs") : json("iid " + a.law);
  j["report"] = report_to_json(r);
  j["pass"] = r.pass;
  emit(g, j);
  return r.pass ? kOk : kRefuted;
}

struct SliceArgs {
  std::vector<int> N{1, 2};
  std::string A = "[0,0];[0,1]";
  std::string box = "6x6";
  double tol = 1e-12;
  int tmp_radius = -1;
};

int cmd_slice_kernels(const Common& g, const SliceArgs& a) {
  Loaded L = load(g);
  if (L.m.dim() != 2 || L.m.relative) throw PreconditionError("slice-kernels needs a two-dimensional base model");
  Shape box = parse_shape(a.box, 2);
  json rows = json::array();
  bool pass = true;
  for (int N : a.N) {
    for (const auto& as : split_list(a.A)) {
      Shape A = parse_shape(as, 1);
      Budget b{g.budget, 0};
      SliceKernelReport r = slice_kernel_equality_check(L.m.shift, L.phi, N, A, box, &b);
      json row = {{"N", N},
                  {"A", shape_to_json(A)},
                  {"max_diff", r.max_diff},
                  {"contexts", r.contexts},
                  {"fillings", r.fillings},
                  {"region_size", r.region.size()},
                  {"pass", r.max_diff <= a.tol}};
      if (a.tmp_radius >= 0) row["memory"] = slice_tmp_check(L.m.shift, N, A, a.tmp_radius).to_json();
      pass = pass && r.max_diff <= a.tol;
      rows.push_back(row);
    }
  }
  json j = head("relative slice-kernels");
  j["box"] = shape_to_json(box);
  j["tol"] = a.tol;
  j["results"] = rows;
  j["pass"] = pass;
  emit(g, j);
  return pass ? kOk : kRefuted;
}

struct RatioArgs {
  std::string measure = "parry", u, v;
  int window = 8, at = -1, radius = 2;
  double tol = 1e-9;
};

int cmd_meyerovitch(const Common& g, const RatioArgs& a) {
  Loaded L = load(g);
  if (L.m.dim() != 1 || L.m.relative) throw PreconditionError("meyerovitch runs on one-dimensional models");
  if (a.u.empty() || a.v.empty()) throw PreconditionError("meyerovitch needs --u and --v");
  const auto& al = L.m.shift.alphabet();
  Shape W = interval_window(a.window);
  Word uw = parse_word(al, a.u);
  if (uw.empty()) throw PreconditionError("--u is empty");
  const int k = static_cast<int>(uw.size());
  const int at = a.at >= 0 ? a.at : (a.window - k) / 2;
  Shape A = Shape::interval(at, at + k - 1);
  if (!A.subset_of(W)) throw PreconditionError("the pattern does not fit in the window");
  Pattern u = pattern_on(al, A, a.u), v = pattern_on(al, A, a.v);
  WindowMeasure mu(W);
  if (a.measure == "parry") {
    mu = parry(L.m.shift).window(a.window);
  } else if (a.measure == "gibbs") {
    mu = gibbs_window_measure(L.m.shift, L.phi, Pattern(1), W);
  } else if (a.measure.rfind("iid:", 0) == 0) {
    auto law = parse_law(a.measure.substr(4));
    if (static_cast<int>(law.size()) != L.m.shift.q()) throw PreconditionError("iid law needs one entry per symbol");
    std::vector<double> P;
    for (int i = 0; i < L.m.shift.q(); ++i) P.insert(P.end(), law.begin(), law.end());
    mu = MarkovChain::from_matrix(L.m.shift.q(), P).window(a.window);
  } else {
    throw PreconditionError("--measure is parry, gibbs or iid:p0,p1,...");
  }
  RatioReport r = meyerovitch_ratio_test(mu, L.m.shift, L.phi, u, v, a.radius);
  json j = head("relative meyerovitch");
  j["measure"] = a.measure;
  j["window"] = shape_to_json(W);
  j["A"] = shape_to_json(A);
  j["u"] = a.u;
  j["v"] = a.v;
  j["max_deviation"] = r.max_deviation;
  j["contexts"] = r.contexts;
  j["envs_checked"] = r.envs_checked;
  j["envs_skipped"] = r.envs_skipped;
  j["worst"] = r.worst;
  j["tol"] = a.tol;
  j["pass"] = r.max_deviation <= a.tol;
  emit(g, j);
  return r.max_deviation <= a.tol ? kOk : kRefuted;
}

struct EquilibriumArgs {
  std::string code;
  double nu_a = 0.5;
  int window = 3, max_rounds = 10000;
  double gain_tol = 1e-10, tol = 1e-9;
  bool increment = false;
};

int cmd_equilibrium(const Common& g, const EquilibriumArgs& a) {
  Shape W = interval_window(a.window);
  json j = head("relative equilibrium");
  j["window"] = shape_to_json(W);
  int code = kOk;
  if (a.code == "merge") {
    if (!(a.nu_a > 0 && a.nu_a < 1)) throw PreconditionError("--nu-a must lie in (0,1)");
    FactorSystem fs = merge_code();
    RelativeSystem rs = factor_relative_system(fs, Interaction(1));
    auto atoms = [&](const Shape& S) {
      std::vector<EnvAtom> nu;
      const std::size_t n = S.size();
      for (std::size_t m = 0; m < (std::size_t(1) << n); ++m) {
        Word w(n);
        double p = 1;
        for (std::size_t i = 0; i < n; ++i) {
          w[i] = static_cast<Symbol>(m >> i & 1);
          p *= w[i] == 0 ? a.nu_a : 1 - a.nu_a;
        }
        nu.push_back({Pattern(S, w), p});
      }
      return nu;
    };
    auto res = relative_equilibrium_search(rs.omega, rs.phi, atoms(W), W, site_blocks(W), a.max_rounds, a.gain_tol);
    // fiber conditional P(x_g = 1 | eta_g = a) per site
    json cond = json::array();
    for (std::size_t i = 0; i < W.size(); ++i) {
      double pa = 0, p1 = 0;
      for (const auto& [k, p] : res.mu.table) {
        if (res.mu.env(k.first).at(W[i]) != 0) continue;
        pa += p;
        if (k.second[i] == 1) p1 += p;
      }
      cond.push_back(pa > 0 ? p1 / pa : 0.0);
    }
    WindowMeasure mx(W);
    for (const auto& [k, p] : res.mu.table) mx.add(0, k.second, p);
    GibbsReport r = fiber_gibbs_check(mx, fs, Interaction(1), Shape::interval(a.window / 2, a.window / 2), a.tol);
    j["code"] = "merge";
    j["nu_a"] = a.nu_a;
    j["env_window_conditional"] = true;
    j["pressure"] = res.pressure;
    j["pressure_per_site"] = res.pressure / static_cast<double>(W.size());
    j["converged"] = res.converged;
    j["stop"] = res.stop;
    j["steps"] = res.steps;
    j["fiber_conditional"] = cond;
    j["fiber_gibbs"] = report_to_json(r);
    if (a.increment)
      j["pressure_increment"] = pressure_increment_1d(rs.omega, rs.phi, atoms, a.window, site_blocks);
    j["pass"] = res.converged && r.pass;
    code = res.converged && r.pass ? kOk : kRefuted;
  } else if (a.code.empty()) {
    Loaded L = load(g);
    if (L.m.dim() != 1) throw PreconditionError("equilibrium runs on one-dimensional models");
    Constraint c = L.m.constraint();
    auto nu = [&](const Shape& S) { return exact_env_atoms(L.m, S); };
    auto res = relative_equilibrium_search(c, L.phi, nu(W), W, site_blocks(W), a.max_rounds, a.gain_tol);
    j["env_window_conditional"] = L.m.relative.has_value();
    j["pressure"] = res.pressure;
    j["pressure_per_site"] = res.pressure / static_cast<double>(W.size());
    j["converged"] = res.converged;
    j["stop"] = res.stop;
    j["steps"] = res.steps;
    if (a.increment) j["pressure_increment"] = pressure_increment_1d(c, L.phi, nu, a.window, site_blocks);
    j["pass"] = res.converged;
    code = res.converged ? kOk : kRefuted;
  } else {
    throw PreconditionError("--code is merge (or omit it and pass --model)");
  }
  emit(g, j);
  return code;
}

std::string stamp() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char b[32];
  std::strftime(b, sizeof b, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return b;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"gibbslab: thermodynamic formalism workbench for lattice subshifts", "gibbslab"};
  app.require_subcommand(1);
  app.fallthrough();
  Common g;
  app.add_option("--threads", g.threads, "worker threads (falls back to GIBBSLAB_THREADS)");
  app.add_option("--budget", g.budget, "node budget for enumerations");

  auto model_opts = [&](CLI::App* s, bool need_model) {
    auto* o = s->add_option("--model", g.model, "model JSON");
    if (need_model) o->required();
    s->add_option("--interaction", g.interaction, "interaction JSON");
    s->add_option("--out", g.out, "output path");
    s->add_option("--log", g.log, "sidecar log path (default <out>.log)");
  };

  auto* validate = app.add_subcommand("validate", "parse and cross-check a model");
  model_opts(validate, true);

  LanguageArgs la;
  auto* lang = app.add_subcommand("language", "enumerate a window language");
  model_opts(lang, true);
  lang->add_option("--shape", la.shape, "window");
  lang->add_option("--margin", la.margin, "extension margin");
  lang->add_flag("--count-only", la.count_only, "print only the number of words");
  lang->add_option("--csv", la.csv, "word list");
  lang->add_option("--env-seed", la.env_seed, "seed of the sampled environment");

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "bounded mixing-property checks");
  model_opts(check, true);
  check->add_option("property", ca.property, "property to check")
      ->required()
      ->check(CLI::IsMember({"tmp", "strong-tmp", "si", "tssm", "interchange", "group-memory", "mixing",
                             "reconstruction"}));
  check->add_option("--F", ca.F, "gap shape");
  check->add_option("--window", ca.window, "window for si/tssm");
  check->add_option("--A", ca.A, "inner set");
  check->add_option("--B", ca.B, "candidate memory or mixing set");
  check->add_option("--trials", ca.trials, "trial sets for strong-tmp, separated by ';'");
  check->add_option("--u", ca.u, "first pattern for interchange, a word on --A");
  check->add_option("--v", ca.v, "second pattern for interchange");
  check->add_option("--radius", ca.radius, "search or annulus radius");
  check->add_option("--margin", ca.margin, "extension margin");
  check->add_option("--sampled", ca.sampled, "sampled pairs instead of enumeration; number of sampled environments for relative models");
  check->add_option("--pair-radius", ca.pair_radius, "window radius of sampled pairs");
  check->add_option("--seed", ca.seed, "seed for sampled pairs");

  std::string report_file;
  bool verify = false;
  auto* report = app.add_subcommand("report", "summarise or replay a report");
  report->add_option("file", report_file, "report JSON")->required();
  report->add_flag("--verify", verify, "replay the witness");
  model_opts(report, false);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "heat-bath sampling on a torus");
  model_opts(sample, true);
  sample->add_option("--torus", sa.torus, "torus extents, e.g. 64x64");
  sample->add_option("--sweeps", sa.sweeps, "sweeps after burn-in");
  sample->add_option("--burn", sa.burn, "burn-in sweeps");
  sample->add_option("--every", sa.every, "sweeps between frames (default: one final frame)");
  sample->add_option("--seed", sa.seed, "sampler seed");
  sample->add_option("--env-seed", sa.env_seed, "seed of the sampled environment");
  sample->add_option("--schedule", sa.schedule, "update schedule")->check(CLI::IsMember({"site", "delone"}));
  sample->add_option("--packing", sa.packing, "Delone packing shape");
  sample->add_option("--covering", sa.covering, "Delone covering shape");

  PressureArgs pa;
  auto* pres = app.add_subcommand("pressure", "per-site pressure series");
  model_opts(pres, true);
  pres->add_flag("--free", pa.free, "(1/|F_n|) log Z over the language of F_n = [-n,n]^d");
  pres->add_flag("--variational", pa.variational, "equilibrium search on [0,n)");
  pres->add_option("--nmin", pa.nmin, "first n");
  pres->add_option("--nmax", pa.nmax, "last n");
  pres->add_option("--csv", pa.csv, "series output (default stdout)");

  KernelArgs ka;
  auto* kern = app.add_subcommand("kernel", "Gibbs conditional on A given the rest of a window");
  model_opts(kern, true);
  kern->add_option("--A", ka.A);
  kern->add_option("--window", ka.window, "window W");
  kern->add_option("--context", ka.context, "word on window minus A");
  kern->add_option("--margin", ka.margin, "extension margin");
  kern->add_option("--env-seed", ka.env_seed, "seed of the sampled environment");

  auto* rel = app.add_subcommand("relative", "relative-system experiments");
  rel->require_subcommand(1);
  FiberArgs fa;
  auto* fib = rel->add_subcommand("fiber-gibbs", "fiber Gibbs check for a sliding-block code");
  model_opts(fib, false);
  fib->add_option("--code", fa.code, "factor code")->check(CLI::IsMember({"merge", "identity", "constant"}));
  fib->add_option("--law", fa.law, "iid site law, e.g. 1/3,1/3,1/3");
  fib->add_option("--window", fa.window, "domain window length");
  fib->add_option("--A", fa.A);
  fib->add_option("--tol", fa.tol, "tolerance on the aggregate TV");
  fib->add_flag("--pooled", fa.pooled, "pool contexts by predicted conditional");
  SliceArgs sl;
  auto* slc = rel->add_subcommand("slice-kernels", "2-D kernels against slice kernels");
  model_opts(slc, true);
  slc->add_option("--N", sl.N);
  slc->add_option("--A", sl.A, "column sets separated by ';'");
  slc->add_option("--box", sl.box, "box holding the contexts");
  slc->add_option("--tol", sl.tol, "tolerance on the kernel difference");
  slc->add_option("--tmp-radius", sl.tmp_radius, "radius for the slice memory-set check");
  RatioArgs ra;
  auto* mey = rel->add_subcommand("meyerovitch", "conditional ratio identity");
  model_opts(mey, true);
  mey->add_option("--measure", ra.measure, "parry, gibbs or iid:p0,p1,...");
  mey->add_option("--window", ra.window, "window length");
  mey->add_option("--u", ra.u, "word on the placed set")->required();
  mey->add_option("--v", ra.v, "word on the placed set")->required();
  mey->add_option("--at", ra.at, "left end of the placed set");
  mey->add_option("--radius", ra.radius, "interchange radius");
  mey->add_option("--tol", ra.tol, "tolerance on the deviation");
  EquilibriumArgs ea;
  auto* eq = rel->add_subcommand("equilibrium", "relative equilibrium search");
  model_opts(eq, false);
  eq->add_option("--code", ea.code, "factor code")->check(CLI::IsMember({"merge"}));
  eq->add_option("--nu-a", ea.nu_a, "probability of the symbol a");
  eq->add_option("--window", ea.window, "window length");
  eq->add_option("--max-rounds", ea.max_rounds, "round cap");
  eq->add_option("--gain-tol", ea.gain_tol, "stop when a round gains less");
  eq->add_option("--tol", ea.tol, "tolerance on the checks");
  eq->add_flag("--increment", ea.increment, "also report the pressure increment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kOk : kFail;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e) == 0 ? kOk : kFail;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kFail;
  }

  const std::string started = stamp();
  int code = kFail;
  std::string error;
  try {
    if (*validate)
      code = cmd_validate(g);
    else if (*lang)
      code = cmd_language(g, la);
    else if (*check)
      code = cmd_check(g, ca);
    else if (*report)
      code = cmd_report(g, report_file, verify);
    else if (*sample)
      code = cmd_sample(g, sa);
    else if (*pres)
      code = cmd_pressure(g, pa);
    else if (*kern)
      code = cmd_kernel(g, ka);
    else if (*fib)
      code = cmd_fiber_gibbs(g, fa);
    else if (*slc)
      code = cmd_slice_kernels(g, sl);
    else if (*mey)
      code = cmd_meyerovitch(g, ra);
    else if (*eq)
      code = cmd_equilibrium(g, ea);
  } catch (const std::exception& e) {
    error = e.what();
    std::cerr << "gibbslab: error: " << error << "\n";
    code = kFail;
  }

  std::string log = !g.log.empty() ? g.log : (!g.out.empty() && g.out != "-" ? g.out + ".log" : "");
  if (!log.empty()) {
    std::ofstream f(log);
    f << "started " << started << "\nfinished " << stamp() << "\nargv";
    for (int i = 0; i < argc; ++i) f << " " << argv[i];
    f << "\nexit " << code << "\n";
    if (!error.empty()) f << "error " << error << "\n";
  }
  return code;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> v;
  for (const auto& a : args) v.push_back(a.c_str());
  return run(static_cast<int>(v.size()), v.data());
}

}  // namespace gibbslab::cli
