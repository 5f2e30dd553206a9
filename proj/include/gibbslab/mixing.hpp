#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gibbslab/measure.hpp"
#include "gibbslab/symbolic.hpp"

namespace gibbslab {

using json = nlohmann::json;

enum class Outcome { Verified, Refuted, Inconclusive };
std::string to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);

// Result of a bounded check. The witness holds enough data for reverify() to replay it.
struct Verdict {
  Outcome outcome = Outcome::Inconclusive;
  bool exact = false;  // false when a language came without certificate or pairs were sampled
  std::string property;
  json witness = json::object();
  std::string note;

  bool verified() const { return outcome == Outcome::Verified; }
  bool refuted() const { return outcome == Outcome::Refuted; }
  json to_json() const;
  static Verdict from_json(const json& j);
};

json shape_to_json(const Shape& s);
Shape shape_from_json(const json& j, int dim);
json pattern_to_json(const Pattern& p);
Pattern pattern_from_json(const json& j, int dim);

// u v w admissible iff v v w admissible, for contexts w on the radius annulus
Verdict interchangeable(const Constraint& c, const Pattern& env, const Pattern& u, const Pattern& v, int radius,
                        Budget* budget = nullptr);
Verdict interchangeable(const Constraint& c, const Pattern& u, const Pattern& v, int radius, Budget* budget = nullptr);

// exhaustive check that B is a memory set for A, on the language of B dilated by the constraint radius
Verdict check_memory_set(const Constraint& c, const Shape& A, const Shape& B, int margin = 0, Budget* budget = nullptr);
// first B = A dilated by r, r = 0..max_radius, passing check_memory_set
Verdict find_memory_set(const Constraint& c, const Shape& A, int max_radius, int margin = 0);
Verdict check_strong_tmp(const Constraint& c, const Shape& F, const std::vector<Shape>& trial_sets, int margin = 0);

// sampled pairs (x, y) on a window around B; each must be admissible and agree on B \ A
using PairSource = std::function<std::pair<Pattern, Pattern>(std::mt19937_64&)>;
Verdict check_memory_set_sampled(const Constraint& c, const Shape& A, const Shape& B, const PairSource& pairs, int n,
                                 std::uint64_t seed);

Verdict check_mixing_set(const Constraint& c, const Shape& A, const Shape& B, int margin = 0, Budget* budget = nullptr);
Verdict find_mixing_set(const Constraint& c, const Shape& A, int max_radius, int margin = 0);
// same inside the fiber of a fixed environment pattern
Verdict check_mixing_set(const Constraint& c, const Pattern& env, const Shape& A, const Shape& B, int margin = 0,
                         Budget* budget = nullptr);
Verdict find_mixing_set(const Constraint& c, const Pattern& env, const Shape& A, int max_radius, int margin = 0);

// pairs A, B of the window with AF and BF disjoint
Verdict check_si(const Constraint& c, const Shape& F, const Shape& window, int margin = 0, Budget* budget = nullptr);
Verdict check_tssm(const Constraint& c, const Shape& F, const Shape& window, int margin = 0, Budget* budget = nullptr);

// SFT forbidding the unseen patterns on F - F; languages compared on the window
Verdict tssm_implies_sft_reconstruction(const Constraint& c, const Shape& F, const Shape& window, int margin = 0);

struct GroupChain {
  std::vector<std::vector<Word>> levels;  // L_{A|B_n}, n = -1, 0, 1, ...; level 0 is L_A
  std::vector<Site> order;                // enumeration used, sites of A skipped
  Shape memory;                           // A together with B_N
  int stable_at = -1;
};
// enumeration defaults to l-infinity shells around the origin
std::vector<Site> default_enumeration(int dim, int radius);
GroupChain group_shift_chain(const SubshiftSpec& gs, const Shape& A, const std::vector<Site>& enumeration);
Shape group_shift_memory(const SubshiftSpec& gs, const Shape& A, const std::vector<Site>& enumeration);
bool is_subgroup(const SubshiftSpec& gs, const std::vector<Word>& level);

// finitely supported points with support in the radius ball, identity included
std::vector<Pattern> homoclinic_points(const SubshiftSpec& gs, int support_radius);
// invariance of the table under multiplication by every translate of every homoclinic point meeting the window
Verdict almost_haar_check(const WindowMeasure& mu, const SubshiftSpec& gs, const std::vector<Pattern>& homoclinics,
                          double tol = 1e-12);

// squares shift: n x n construction refuting strong TMP for F, and a pair source for weak TMP tests
Verdict squares_strong_tmp_refutation(const Shape& F);
PairSource squares_pair_source(const Shape& A, const Shape& B, int window_radius);

// replays the witness of a Verdict against the constraint
Verdict reverify(const Verdict& v, const Constraint& c);

}  // namespace gibbslab
