#include "gibbslab/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "gibbslab/mixing.hpp"

namespace gibbslab {

namespace {

struct Ctx {
  std::string file;
  [[noreturn]] void fail(const std::string& path, const std::string& what) const { throw ModelError(file, path, what); }

  const json& need(const json& j, const std::string& path, const char* key) const {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(path, std::string("missing \"") + key + "\"");
    return *it;
  }
  int integer(const json& j, const std::string& path) const {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
  }
  double number(const json& j, const std::string& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }
  std::string str(const json& j, const std::string& path) const {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }
  Shape shape(const json& j, int dim, const std::string& path) const {
    if (!j.is_array()) fail(path, "expected an array of sites");
    try {
      for (const auto& p : j)
        if (!(p.is_number_integer() || (p.is_array() && std::all_of(p.begin(), p.end(), [](const json& v) {
                                          return v.is_number_integer();
                                        }))))
          fail(path, "sites are integer vectors");
      return shape_from_json(j, dim);
    } catch (const ModelError&) {
      throw;
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
  }
};

std::string at(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string at(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

json params_of(const json& j) {
  auto it = j.find("params");
  return it == j.end() ? json::object() : *it;
}

int param_int(const Ctx& cx, const json& p, const std::string& path, const char* key, int dflt) {
  auto it = p.find(key);
  return it == p.end() ? dflt : cx.integer(*it, at(path, key));
}

double param_num(const Ctx& cx, const json& p, const std::string& path, const char* key, double dflt) {
  auto it = p.find(key);
  return it == p.end() ? dflt : cx.number(*it, at(path, key));
}

Alphabet alphabet_from_json(const Ctx& cx, const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) cx.fail(path, "alphabet must be a non-empty array");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_string())
      names.push_back(j[i].get<std::string>());
    else if (j[i].is_number_integer())
      names.push_back(std::to_string(j[i].get<int>()));
    else
      cx.fail(at(path, i), "symbols are strings or integers");
  }
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t k = 0; k < i; ++k)
      if (names[i] == names[k]) cx.fail(at(path, i), "duplicate symbol \"" + names[i] + "\"");
  return Alphabet(names);
}

// word as a string of names, an array of names or an array of indices
Word word_from_json(const Ctx& cx, const Alphabet& a, const json& j, std::size_t len, const std::string& path) {
  Word w;
  if (j.is_string()) {
    try {
      w = parse_word(a, j.get<std::string>(), len);
    } catch (const std::exception& e) {
      cx.fail(path, e.what());
    }
    return w;
  }
  if (!j.is_array()) cx.fail(path, "word must be a string or an array");
  for (std::size_t i = 0; i < j.size(); ++i) {
    int s = -1;
    if (j[i].is_number_integer())
      s = j[i].get<int>();
    else if (j[i].is_string())
      s = a.index_of(j[i].get<std::string>());
    if (s < 0 || s >= a.size()) cx.fail(at(path, i), "unknown symbol");
    w.push_back(static_cast<Symbol>(s));
  }
  if (w.size() != len) cx.fail(path, "word length " + std::to_string(w.size()) + " differs from the window size " +
                                         std::to_string(len));
  return w;
}

std::optional<int> exactness_of(const Ctx& cx, const json& j, const std::string& path) {
  auto it = j.find("exactness");
  if (it == j.end() || it->is_null()) return std::nullopt;
  int e = cx.integer(*it, at(path, "exactness"));
  if (e < 0) cx.fail(at(path, "exactness"), "must be non-negative");
  return e;
}

std::vector<ForbiddenRule> rules_from_json(const Ctx& cx, const json& j, int dim, const Alphabet& a,
                                           const std::string& path) {
  std::vector<ForbiddenRule> rules;
  auto one = [&](const json& r, const std::string& p) {
    Shape w = cx.shape(cx.need(r, p, "window"), dim, at(p, "window"));
    if (w.empty()) cx.fail(at(p, "window"), "window is empty");
    const json& f = cx.need(r, p, "forbidden");
    if (!f.is_array()) cx.fail(at(p, "forbidden"), "expected an array of words");
    std::vector<Word> words;
    for (std::size_t i = 0; i < f.size(); ++i)
      words.push_back(word_from_json(cx, a, f[i], w.size(), at(at(p, "forbidden"), i)));
    rules.emplace_back(w, words, a.size());
  };
  if (j.contains("rules")) {
    const json& rs = j["rules"];
    if (!rs.is_array()) cx.fail(at(path, "rules"), "expected an array");
    for (std::size_t i = 0; i < rs.size(); ++i) one(rs[i], at(at(path, "rules"), i));
  }
  if (j.contains("window") || j.contains("forbidden")) one(j, path);
  return rules;
}

SubshiftSpec catalog_shift(const Ctx& cx, const json& j, int dim, const std::string& path) {
  const std::string name = cx.str(cx.need(j, path, "name"), at(path, "name"));
  const json p = params_of(j);
  const std::string pp = at(path, "params");
  try {
    if (name == "full") return catalog::full(param_int(cx, p, pp, "q", 2), dim);
    if (name == "golden_mean") return catalog::golden_mean(dim);
    if (name == "hard_core") {
      if (!p.contains("shape")) {
        // nearest-neighbour exclusion
        SubshiftSpec s = catalog::golden_mean(dim);
        s.name = "hard_core";
        return s;
      }
      return catalog::hard_core(cx.shape(p["shape"], dim, at(pp, "shape")));
    }
    if (name == "proper_colorings") return catalog::proper_colorings(param_int(cx, p, pp, "q", 3), dim);
    if (name == "sunny_side_up") return catalog::sunny_side_up(dim);
    if (name == "even" || name == "squares" || name == "group_xor") {
      int need = name == "squares" ? 2 : 1;
      if (dim != need) cx.fail(at(path, "name"), name + " lives in dimension " + std::to_string(need));
      if (name == "even") return catalog::even();
      if (name == "squares") return catalog::squares();
      std::vector<int> taps;
      if (p.contains("taps")) {
        if (!p["taps"].is_array()) cx.fail(at(pp, "taps"), "expected an array of integers");
        for (std::size_t i = 0; i < p["taps"].size(); ++i) taps.push_back(cx.integer(p["taps"][i], at(at(pp, "taps"), i)));
      }
      return catalog::group_xor(taps, param_int(cx, p, pp, "modulus", 2));
    }
    if (name == "product") {
      SubshiftSpec a = shift_from_json(cx.need(p, pp, "a"), dim, cx.file, at(pp, "a"));
      SubshiftSpec b = shift_from_json(cx.need(p, pp, "b"), dim, cx.file, at(pp, "b"));
      return catalog::product(a, b);
    }
  } catch (const ModelError&) {
    throw;
  } catch (const std::exception& e) {
    cx.fail(path, e.what());
  }
  cx.fail(at(path, "name"), "unknown catalog shift \"" + name + "\"");
}

JointRule joint_rule_from_json(const Ctx& cx, const json& r, int dim, const Alphabet& ea, const Alphabet& xa,
                               const std::string& path) {
  Shape ew = cx.shape(cx.need(r, path, "env_window"), dim, at(path, "env_window"));
  Shape xw = cx.shape(cx.need(r, path, "x_window"), dim, at(path, "x_window"));
  const json& f = cx.need(r, path, "forbidden");
  if (!f.is_array()) cx.fail(at(path, "forbidden"), "expected an array of [env word, x word] pairs");
  auto bad = std::make_shared<std::set<std::pair<Word, Word>>>();
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::string p = at(at(path, "forbidden"), i);
    if (!f[i].is_array() || f[i].size() != 2) cx.fail(p, "expected [env word, x word]");
    bad->insert({word_from_json(cx, ea, f[i][0], ew.size(), at(p, 0)), word_from_json(cx, xa, f[i][1], xw.size(), at(p, 1))});
  }
  const std::size_t ne = ew.size(), nx = xw.size();
  return {ew, xw, [bad, ne, nx](const Symbol* e, const Symbol* x) {
            return !bad->count({Word(e, e + ne), Word(x, x + nx)});
          }};
}

}  // namespace

SubshiftSpec shift_from_json(const json& j, int dim, const std::string& file, const std::string& path) {
  Ctx cx{file};
  if (!j.is_object()) cx.fail(path, "expected an object");
  const std::string type = cx.str(cx.need(j, path, "type"), at(path, "type"));
  if (type == "catalog") return catalog_shift(cx, j, dim, path);
  if (!j.contains("alphabet")) cx.fail(path, "missing \"alphabet\"");
  Alphabet a = alphabet_from_json(cx, j["alphabet"], at(path, "alphabet"));
  try {
    if (type == "full") return SubshiftSpec::full(dim, a);
    if (type == "sft") return SubshiftSpec::sft(dim, a, rules_from_json(cx, j, dim, a, path), exactness_of(cx, j, path));
    if (type == "group") {
      const json& g = cx.need(j, path, "group");
      if (g.is_string() && g.get<std::string>() == "cyclic")
        a.group = GroupTable::cyclic(a.size());
      else if (g.is_array())
        a.group = GroupTable::from_table(g.get<std::vector<std::vector<int>>>());
      else
        cx.fail(at(path, "group"), "expected \"cyclic\" or a multiplication table");
      return SubshiftSpec::group(dim, a, rules_from_json(cx, j, dim, a, path), exactness_of(cx, j, path));
    }
  } catch (const ModelError&) {
    throw;
  } catch (const std::exception& e) {
    cx.fail(path, e.what());
  }
  cx.fail(at(path, "type"), "unknown shift type \"" + type + "\"");
}

Model model_from_json(const json& j, const std::string& file) {
  Ctx cx{file};
  Model m;
  m.file = file;
  m.source = j;
  if (!j.is_object()) cx.fail("", "model must be a JSON object");
  if (j.contains("format") && j["format"] != kModelFormat)
    cx.fail("/format", "unsupported format " + j["format"].dump());
  const int dim = cx.integer(cx.need(j, "", "dimension"), "/dimension");
  if (dim < 1 || dim > kMaxDim) cx.fail("/dimension", "dimension must be 1, 2 or 3");

  json shift = cx.need(j, "", "shift");
  // a top-level alphabet applies to a non-catalog shift that has none
  if (shift.is_object() && !shift.contains("alphabet") && j.contains("alphabet")) shift["alphabet"] = j["alphabet"];
  m.shift = shift_from_json(shift, dim, file, "/shift");
  if (j.contains("alphabet")) {
    Alphabet top = alphabet_from_json(cx, j["alphabet"], "/alphabet");
    if (top.names != m.shift.alphabet().names) cx.fail("/alphabet", "alphabet disagrees with the shift");
  }
  if (j.contains("name")) m.shift.name = cx.str(j["name"], "/name");

  const bool has_env = j.contains("environment"), has_rule = j.contains("fiber_rule");
  if (has_env != has_rule) cx.fail(has_env ? "/environment" : "/fiber_rule", "environment and fiber_rule come together");
  if (has_env) {
    const json& env = j["environment"];
    const json& fr = j["fiber_rule"];
    const std::string type = cx.str(cx.need(fr, "/fiber_rule", "type"), "/fiber_rule/type");
    RelativeSystem rs;
    if (type == "catalog") {
      const std::string name = cx.str(cx.need(fr, "/fiber_rule", "name"), "/fiber_rule/name");
      json p = params_of(fr);
      if (name == "ising_percolation") {
        rs = relative_catalog::ising_percolation(param_num(cx, p, "/fiber_rule/params", "h", 0.0), dim,
                                                 param_num(cx, p, "/fiber_rule/params", "J", 1.0));
      } else if (name == "colorings_on_subgraph") {
        try {
          rs = relative_catalog::colorings_on_subgraph(param_int(cx, p, "/fiber_rule/params", "q", 5), dim);
        } catch (const PreconditionError& e) {
          cx.fail("/fiber_rule/params", e.what());
        }
      } else {
        cx.fail("/fiber_rule/name", "unknown fiber rule \"" + name + "\"");
      }
      if (rs.omega.shift.alphabet().names != m.shift.alphabet().names)
        cx.fail("/shift", "fiber rule " + name + " needs the alphabet of its catalog system");
      rs.omega = Constraint::coupled(m.shift, rs.omega.joint, rs.omega.fiber_exactness, rs.omega.fiber_name);
    } else if (type == "joint") {
      if (!env.contains("shift")) cx.fail("/environment", "missing \"shift\"");
      SubshiftSpec es = shift_from_json(env["shift"], dim, file, "/environment/shift");
      const json& rl = cx.need(fr, "/fiber_rule", "rules");
      if (!rl.is_array()) cx.fail("/fiber_rule/rules", "expected an array");
      std::vector<JointRule> rules;
      for (std::size_t i = 0; i < rl.size(); ++i)
        rules.push_back(joint_rule_from_json(cx, rl[i], dim, es.alphabet(), m.shift.alphabet(), at("/fiber_rule/rules", i)));
      rs.name = j.value("name", std::string("joint"));
      rs.env = es;
      rs.omega = Constraint::coupled(m.shift, rules, exactness_of(cx, fr, "/fiber_rule"), "joint rules");
      rs.phi = Interaction(dim);
    } else {
      cx.fail("/fiber_rule/type", "unknown fiber rule type \"" + type + "\"");
    }
    if (type == "catalog" && env.contains("shift")) {
      SubshiftSpec es = shift_from_json(env["shift"], dim, file, "/environment/shift");
      if (es.alphabet().names != rs.env.alphabet().names) cx.fail("/environment/shift", "environment alphabet mismatch");
      rs.env = es;
    }
    if (env.contains("sample")) {
      const json& s = env["sample"];
      m.env_sampler.type = cx.str(cx.need(s, "/environment/sample", "type"), "/environment/sample/type");
      if (m.env_sampler.type != "bernoulli_site" && m.env_sampler.type != "bernoulli_bond")
        cx.fail("/environment/sample/type", "unknown sampler \"" + m.env_sampler.type + "\"");
      m.env_sampler.p = param_num(cx, s, "/environment/sample", "p", 0.5);
      if (!(m.env_sampler.p >= 0 && m.env_sampler.p <= 1)) cx.fail("/environment/sample/p", "must lie in [0,1]");
      if (s.contains("seed")) {
        if (!s["seed"].is_number_unsigned()) cx.fail("/environment/sample/seed", "expected a non-negative integer");
        m.env_sampler.seed = s["seed"].get<std::uint64_t>();
      }
      int need = m.env_sampler.type == "bernoulli_site" ? 2 : (1 << dim);
      if (rs.env.q() != need)
        cx.fail("/environment/sample/type", m.env_sampler.type + " needs an environment alphabet of size " +
                                                std::to_string(need));
    }
    m.relative = std::move(rs);
  }
  if (j.contains("interaction")) m.interaction = interaction_from_json(j["interaction"], m, file, "/interaction");
  return m;
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError(path, "", "cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError(path, "", std::string("invalid JSON: ") + e.what());
  }
  return model_from_json(j, path);
}

Interaction interaction_from_json(const json& j, const Model& m, const std::string& file, const std::string& path) {
  Ctx cx{file};
  const int dim = m.dim();
  const Alphabet& xa = m.shift.alphabet();
  const Alphabet* ea = m.relative ? &m.relative->env.alphabet() : nullptr;
  if (!j.is_object()) cx.fail(path, "expected an object");
  if (j.contains("format") && j["format"] != "gibbslab-interaction/1")
    cx.fail(at(path, "format"), "unsupported format " + j["format"].dump());
  Interaction phi(dim);
  if (j.contains("catalog")) {
    const std::string name = cx.str(j["catalog"], at(path, "catalog"));
    json p = params_of(j);
    std::string pp = at(path, "params");
    if (name == "zero") {
    } else if (name == "ising") {
      std::vector<double> spin = xa.values;
      if (xa.size() == 2 && xa.names == std::vector<std::string>{"0", "1"}) spin = {-1.0, 1.0};
      phi = interactions::ising(param_num(cx, p, pp, "h", 0), param_num(cx, p, pp, "J", 1), dim, spin);
    } else if (name == "single_site") {
      const json& v = cx.need(p, pp, "V");
      if (!v.is_array() || static_cast<int>(v.size()) != xa.size())
        cx.fail(at(pp, "V"), "expected one value per symbol");
      std::vector<double> V;
      for (std::size_t i = 0; i < v.size(); ++i) V.push_back(cx.number(v[i], at(at(pp, "V"), i)));
      phi = interactions::single_site(dim, V);
    } else if (name == "relative") {
      if (!m.relative) cx.fail(at(path, "catalog"), "model has no relative system");
      phi = m.relative->phi;
    } else {
      cx.fail(at(path, "catalog"), "unknown interaction \"" + name + "\"");
    }
  }
  if (j.contains("terms")) {
    const json& ts = j["terms"];
    if (!ts.is_array()) cx.fail(at(path, "terms"), "expected an array");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string tp = at(at(path, "terms"), i);
      const json& t = ts[i];
      Shape raw = cx.shape(cx.need(t, tp, "shape"), dim, at(tp, "shape"));
      if (raw.empty()) cx.fail(at(tp, "shape"), "empty shape");
      Shape env_raw(dim);
      if (t.contains("env_shape")) {
        env_raw = cx.shape(t["env_shape"], dim, at(tp, "env_shape"));
        if (!env_raw.empty() && !ea) cx.fail(at(tp, "env_shape"), "model has no environment");
      }
      const Site a0 = raw[0];
      LocalTerm lt;
      lt.shape = raw.translate(-a0);
      lt.env_shape = env_raw.translate(-a0);
      const std::size_t n = raw.size(), ne = env_raw.size();
      if (t.contains("table") == t.contains("expr")) cx.fail(tp, "give exactly one of \"table\" and \"expr\"");
      if (t.contains("expr")) {
        if (ne) cx.fail(at(tp, "expr"), "expressions take no environment");
        const std::string e = cx.str(t["expr"], at(tp, "expr"));
        const double J = param_num(cx, t, tp, "J", 1.0);
        auto vals = std::make_shared<std::vector<double>>(xa.values);
        double vmax = 0;
        for (double v : xa.values) vmax = std::max(vmax, std::abs(v));
        if (e == "coupling") {
          // -J times the product of the symbol values
          lt.eval = [vals, J, n](const Symbol*, const Symbol* x) {
            double p = 1;
            for (std::size_t k = 0; k < n; ++k) p *= (*vals)[x[k]];
            return -J * p;
          };
          lt.sup_norm = std::abs(J) * std::pow(vmax, static_cast<double>(n));
        } else if (e == "equal") {
          // J when all symbols coincide
          lt.eval = [J, n](const Symbol*, const Symbol* x) {
            for (std::size_t k = 1; k < n; ++k)
              if (x[k] != x[0]) return 0.0;
            return J;
          };
          lt.sup_norm = std::abs(J);
        } else {
          cx.fail(at(tp, "expr"), "unknown expression \"" + e + "\"");
        }
        lt.label = e;
      } else {
        // object keyed by words ("env|x" with an environment); absent words cost 0
        const json& tb = t["table"];
        if (!tb.is_object()) cx.fail(at(tp, "table"), "expected an object keyed by words");
        auto tbl = std::make_shared<std::map<std::pair<Word, Word>, double>>();
        for (auto it = tb.begin(); it != tb.end(); ++it) {
          std::string key = it.key(), ek, xk = key;
          const std::string kp = at(at(tp, "table"), key);
          if (ne) {
            auto bar = key.find('|');
            if (bar == std::string::npos) cx.fail(kp, "keys read \"env|x\" for a term with env_shape");
            ek = key.substr(0, bar);
            xk = key.substr(bar + 1);
          }
          Word ew, xw;
          try {
            if (ne) ew = parse_word(*ea, ek, ne);
            xw = parse_word(xa, xk, n);
          } catch (const std::exception& ex) {
            cx.fail(kp, ex.what());
          }
          double v = cx.number(it.value(), kp);
          if (!std::isfinite(v)) cx.fail(kp, "energies are finite");
          (*tbl)[{ew, xw}] = v;
          lt.sup_norm = std::max(lt.sup_norm, std::abs(v));
        }
        lt.eval = [tbl, n, ne](const Symbol* e, const Symbol* x) {
          auto it = tbl->find({ne ? Word(e, e + ne) : Word(), Word(x, x + n)});
          return it == tbl->end() ? 0.0 : it->second;
        };
        lt.label = "table";
      }
      phi.add(std::move(lt));
    }
  }
  if (j.contains("range")) {
    int r = cx.integer(j["range"], at(path, "range"));
    if (phi.range() > r) cx.fail(at(path, "range"), "declared range " + std::to_string(r) + " below the term extent " +
                                                        std::to_string(phi.range()));
  }
  if (j.contains("tail")) phi.tail = cx.number(j["tail"], at(path, "tail"));
  return phi;
}

Interaction load_interaction(const std::string& path, const Model& m) {
  if (path.empty()) {
    if (m.interaction) return *m.interaction;
    if (m.relative) return m.relative->phi;
    return Interaction(m.dim());
  }
  std::ifstream in(path);
  if (!in) throw ModelError(path, "", "cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError(path, "", std::string("invalid JSON: ") + e.what());
  }
  if (j.contains("dimension") && j["dimension"] != m.dim())
    throw ModelError(path, "/dimension", "dimension disagrees with the model");
  if (j.contains("alphabet")) {
    std::vector<std::string> names;
    for (const auto& s : j["alphabet"]) names.push_back(s.is_string() ? s.get<std::string>() : s.dump());
    if (names != m.shift.alphabet().names) throw ModelError(path, "/alphabet", "alphabet disagrees with the model");
  }
  return interaction_from_json(j, m, path, "");
}

Shape parse_shape(const std::string& s, int dim) {
  auto bad = [&](const std::string& why) -> PreconditionError {
    return PreconditionError("cannot read shape \"" + s + "\": " + why);
  };
  if (s.empty()) throw bad("empty");
  if (s[0] == '[' && s.find("[[") == 0) {
    json j;
    try {
      j = json::parse(s);
    } catch (const std::exception& e) {
      throw bad(e.what());
    }
    return shape_from_json(j, dim);
  }
  auto to_int = [&](const std::string& t) {
    std::size_t k = 0;
    int v = 0;
    try {
      v = std::stoi(t, &k);
    } catch (const std::exception&) {
      throw bad("expected an integer, got \"" + t + "\"");
    }
    if (k != t.size()) throw bad("expected an integer, got \"" + t + "\"");
    return v;
  };
  for (const char* pre : {"ball", "cross"}) {
    std::string p(pre);
    if (s.rfind(p, 0) == 0) {
      int r = to_int(s.substr(p.size()));
      if (r < 0) throw bad("negative radius");
      return p == "ball" ? Shape::ball(dim, r) : Shape::cross(dim, r);
    }
  }
  if (s.front() == '[' && s.back() == ']') {
    if (dim != 1) throw bad("intervals are one-dimensional");
    auto comma = s.find(',');
    if (comma == std::string::npos) throw bad("expected [lo,hi]");
    int lo = to_int(s.substr(1, comma - 1)), hi = to_int(s.substr(comma + 1, s.size() - comma - 2));
    if (hi < lo) throw bad("empty interval");
    return Shape::interval(lo, hi);
  }
  if (s.rfind("box:", 0) == 0) {
    std::vector<std::string> parts;
    std::stringstream ss(s.substr(4));
    for (std::string t; std::getline(ss, t, ':');) parts.push_back(t);
    if (parts.size() != 2) throw bad("expected box:lo:hi");
    Site c[2];
    for (int k = 0; k < 2; ++k) {
      std::stringstream cs(parts[k]);
      int i = 0;
      for (std::string t; std::getline(cs, t, ',');) {
        if (i >= dim) throw bad("too many coordinates");
        c[k][i++] = to_int(t);
      }
      if (i != dim) throw bad("corners need " + std::to_string(dim) + " coordinates");
    }
    return Shape::box(dim, c[0], c[1]);
  }
  // n or n1xn2: a box of those extents around the origin
  std::vector<int> ext;
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, 'x');) ext.push_back(to_int(t));
  if (ext.size() == 1) ext.assign(dim, ext[0]);
  if (static_cast<int>(ext.size()) != dim) throw bad("extent count differs from the dimension");
  Site lo, hi;
  for (int i = 0; i < dim; ++i) {
    if (ext[i] < 1) throw bad("extents are positive");
    lo[i] = -(ext[i] - 1) / 2;
    hi[i] = lo[i] + ext[i] - 1;
  }
  return Shape::box(dim, lo, hi);
}

namespace {
bool short_names(const Alphabet& a) {
  for (const auto& n : a.names)
    if (n.size() != 1) return false;
  return true;
}
}  // namespace

std::string word_string(const Alphabet& a, const Word& w) {
  std::string out;
  const bool sh = short_names(a);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!sh && i) out += ' ';
    out += w[i] == kUnset ? std::string("*") : a.names.at(w[i]);
  }
  return out;
}

Word parse_word(const Alphabet& a, const std::string& s, std::size_t len) {
  Word w = parse_word(a, s);
  if (w.size() != len)
    throw PreconditionError("word \"" + s + "\" has " + std::to_string(w.size()) + " symbols, expected " +
                            std::to_string(len));
  return w;
}

Word parse_word(const Alphabet& a, const std::string& s) {
  Word w;
  if (short_names(a) && s.find(' ') == std::string::npos) {
    for (char ch : s) {
      int k = a.index_of(std::string(1, ch));
      if (k < 0) throw PreconditionError(std::string("unknown symbol '") + ch + "'");
      w.push_back(static_cast<Symbol>(k));
    }
  } else {
    std::stringstream ss(s);
    for (std::string t; ss >> t;) {
      int k = a.index_of(t);
      if (k < 0) throw PreconditionError("unknown symbol \"" + t + "\"");
      w.push_back(static_cast<Symbol>(k));
    }
  }
  return w;
}

Pattern pattern_on(const Alphabet& a, const Shape& A, const std::string& s) {
  return Pattern(A, parse_word(a, s, A.size()));
}

void write_measure_csv(std::ostream& os, const WindowMeasure& mu, const Alphabet& a) {
  os << "# gibbslab-measure/1 window=" << mu.window.str() << "\n";
  const bool env = !mu.env_atoms.empty();
  os << (env ? "env,pattern,probability\n" : "pattern,probability\n");
  char buf[64];
  for (const auto& [k, p] : mu.table) {
    std::snprintf(buf, sizeof buf, "%.17g", p);
    if (env) os << k.first << ",";
    os << word_string(a, k.second) << "," << buf << "\n";
  }
}

json measure_to_json(const WindowMeasure& mu, const Alphabet& a) {
  json rows = json::array();
  for (const auto& [k, p] : mu.table) rows.push_back({{"env", k.first}, {"pattern", word_string(a, k.second)}, {"p", p}});
  json envs = json::array();
  for (const auto& e : mu.env_atoms) envs.push_back(pattern_to_json(e));
  return {{"format", "gibbslab-measure/1"}, {"window", shape_to_json(mu.window)}, {"env_atoms", envs}, {"table", rows}};
}

json report_to_json(const GibbsReport& r) {
  json worst = json::array();
  for (const auto& c : r.worst)
    worst.push_back({{"env", c.env}, {"context", c.context}, {"weight", c.weight}, {"count", c.count}, {"tv", c.tv}});
  return {{"aggregate_tv", r.aggregate_tv}, {"aggregate_l1", r.aggregate_l1}, {"max_tv", r.max_tv},
          {"contexts", r.contexts},         {"excluded", r.excluded},         {"excluded_mass", r.excluded_mass},
          {"pools", r.pools},               {"window_size", r.window_size},   {"tol", r.tol},
          {"pass", r.pass},                 {"worst", worst}};
}

}  // namespace gibbslab
