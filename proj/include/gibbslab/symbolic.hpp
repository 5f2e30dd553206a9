#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "gibbslab/lattice.hpp"

namespace gibbslab {

using Symbol = std::int16_t;
inline constexpr Symbol kUnset = -1;
using Word = std::vector<Symbol>;  // values aligned with the sorted sites of a Shape

struct Conflict : Error {
  Site site;
  Conflict(const Site& s, int dim) : Error("patterns disagree at " + s.str(dim)), site(s) {}
};

// Partial configuration stored densely over its bounding box; kUnset marks sites outside the support.
class Pattern {
 public:
  Pattern() = default;
  explicit Pattern(int dim) : dim_(dim) {}
  Pattern(int dim, Site lo, Site hi);  // empty, with room for the box
  Pattern(const Shape& support, const Word& values);
  static Pattern constant(const Shape& support, Symbol v);

  int dim() const { return dim_; }
  Symbol at(const Site& s) const {
    if (!inbox(s)) return kUnset;
    return cells_[idx(s)];
  }
  bool has(const Site& s) const { return at(s) != kUnset; }
  void set(const Site& s, Symbol v);
  void unset(const Site& s);
  std::size_t count() const { return count_; }
  bool empty() const { return count_ == 0; }

  Shape support() const;
  Word values_on(const Shape& A) const;  // throws when a site is unassigned
  Pattern restrict_to(const Shape& A) const;
  Pattern translate(const Site& g) const;
  bool covers(const Shape& A) const;

  bool operator==(const Pattern& o) const;
  std::string str() const;

 private:
  bool inbox(const Site& s) const {
    for (int i = 0; i < kMaxDim; ++i)
      if (s[i] < lo_[i] || s[i] >= lo_[i] + ext_[i]) return false;
    return true;
  }
  std::size_t idx(const Site& s) const {
    return (static_cast<std::size_t>(s[0] - lo_[0]) * ext_[1] + (s[1] - lo_[1])) * ext_[2] + (s[2] - lo_[2]);
  }
  void grow(const Site& s);

  int dim_ = 1;
  Site lo_;
  std::array<int, kMaxDim> ext_{0, 0, 0};
  std::vector<Symbol> cells_;
  std::size_t count_ = 0;
};

// u v glued; throws Conflict on the first disagreement
Pattern merge(const Pattern& u, const Pattern& v);

// Finite abelian group on {0..n-1}.
struct GroupTable {
  int order = 1;
  int identity = 0;
  std::vector<int> mul;  // order*order
  std::vector<int> inv;

  int op(int a, int b) const { return mul[static_cast<std::size_t>(a) * order + b]; }
  static GroupTable cyclic(int m);
  static GroupTable from_table(const std::vector<std::vector<int>>& t);  // validates
};

struct Alphabet {
  std::vector<std::string> names;
  std::vector<double> values;  // numeric reading of each symbol, index if not numeric
  std::optional<GroupTable> group;

  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> n);
  static Alphabet range(int q);  // "0".."q-1"
  int size() const { return static_cast<int>(names.size()); }
  int index_of(const std::string& s) const;  // -1 when absent
};

struct ForbiddenRule {
  Shape window;
  std::vector<Word> forbidden;

  ForbiddenRule() = default;
  ForbiddenRule(Shape w, std::vector<Word> f, int q);
  // complement form: every word outside `allowed` is forbidden; `forbidden` then holds the allowed list.
  // A translate whose assigned sites form a prefix of the window is also pruned when no allowed word
  // extends it, so languages come out between the global and the locally admissible one.
  static ForbiddenRule allowing(Shape w, std::vector<Word> allowed, int q);
  bool allow_list() const { return allow_; }
  bool forbids(const Word& w) const;
  // allowed-list rules: whether the first k symbols of w extend to an allowed word
  bool prefix_allowed(const Word& w, std::size_t k) const;
  std::uint64_t code(const Word& w) const;

 private:
  int q_ = 2;
  bool allow_ = false;
  std::unordered_set<std::uint64_t> set_;
  std::vector<std::unordered_set<std::uint64_t>> prefixes_;  // by length, allowed-list rules only
};

// Hereditary predicate: true iff the partial pattern shows no forbidden configuration.
using OraclePredicate = std::function<bool(const Pattern&)>;

class SubshiftSpec {
 public:
  enum class Kind { Full, SFT, Oracle, Group };

  static SubshiftSpec full(int dim, Alphabet a);
  static SubshiftSpec sft(int dim, Alphabet a, std::vector<ForbiddenRule> rules, std::optional<int> exactness);
  static SubshiftSpec oracle(int dim, Alphabet a, OraclePredicate pred, int radius, std::optional<int> exactness);
  // alphabet must carry a group; closure under the product is checked on a test window
  static SubshiftSpec group(int dim, Alphabet a, std::vector<ForbiddenRule> rules, std::optional<int> exactness);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Alphabet& alphabet() const { return alphabet_; }
  int q() const { return alphabet_.size(); }
  const std::vector<ForbiddenRule>& rules() const { return rules_; }
  std::optional<int> exactness_radius() const { return exactness_; }
  int radius() const { return radius_; }  // l-infinity extent of the constraint windows
  bool is_sft_like() const { return kind_ == Kind::SFT || kind_ == Kind::Group || kind_ == Kind::Full; }
  bool one_dimensional_sft() const { return dim_ == 1 && is_sft_like(); }

  bool locally_admissible(const Pattern& p) const;
  // constraints whose translate contains s and is fully assigned
  bool admissible_near(const Pattern& p, const Site& s) const;

  std::string name;
  std::string catalog_name;  // set by catalog constructors

  struct Line;  // trimmed state graph of a 1-D SFT
  const Line* line() const { return line_.get(); }

 private:
  void finish();
  std::shared_ptr<const Line> line_;
  Kind kind_ = Kind::Full;
  int dim_ = 1;
  Alphabet alphabet_;
  std::vector<ForbiddenRule> rules_;
  OraclePredicate oracle_;
  std::optional<int> exactness_;
  int radius_ = 0;
};

// Coupling of x with an environment pattern theta; near==nullptr asks for a full check.
using FiberRule = std::function<bool(const Pattern& env, const Pattern& x, const Site* near)>;

// Translate-invariant coupling rule; both windows are relative to the same anchor.
struct JointRule {
  Shape env_window;
  Shape x_window;
  std::function<bool(const Symbol* env, const Symbol* x)> ok;
};

struct Constraint {
  SubshiftSpec shift;
  FiberRule fiber;
  std::vector<JointRule> joint;  // when set, fiber is generated from these
  int fiber_radius = 0;
  std::optional<int> fiber_exactness;  // margin at which fiber languages are exact
  std::string fiber_name;

  Constraint(SubshiftSpec s) : shift(std::move(s)) {}  // NOLINT implicit on purpose
  Constraint(SubshiftSpec s, FiberRule f, int r, std::optional<int> exact, std::string name)
      : shift(std::move(s)), fiber(std::move(f)), fiber_radius(r), fiber_exactness(exact), fiber_name(std::move(name)) {}

  int dim() const { return shift.dim(); }
  int q() const { return shift.q(); }
  int radius() const { return std::max(shift.radius(), fiber ? fiber_radius : 0); }
  bool coupled() const { return static_cast<bool>(fiber); }

  bool admissible(const Pattern& env, const Pattern& x) const;
  bool admissible_near(const Pattern& env, const Pattern& x, const Site& s) const;
  bool exact_at(int margin) const;

  // fiber rule from translates of joint rules; env sites missing from the env pattern are not checked
  static Constraint coupled(SubshiftSpec s, std::vector<JointRule> rules, std::optional<int> exact, std::string name);
};

struct LanguageTable {
  Shape shape;
  int margin = 0;
  bool exact = false;
  std::vector<Word> words;  // lexicographic

  std::size_t size() const { return words.size(); }
  bool contains(const Word& w) const;
  Pattern pattern(std::size_t i) const { return Pattern(shape, words[i]); }
};

// Patterns on A extendable to A dilated by the margin; 1-D SFTs use exact extension instead.
LanguageTable language(const Constraint& c, const Pattern& env, const Shape& A, int margin, Budget* budget = nullptr);
LanguageTable language(const Constraint& c, const Shape& A, int margin, Budget* budget = nullptr);

// p locally admissible and extendable (same semantics as language membership)
bool admissible_pattern(const Constraint& c, const Pattern& env, const Pattern& p, int margin,
                        Budget* budget = nullptr);
bool admissible_pattern(const Constraint& c, const Pattern& p, int margin, Budget* budget = nullptr);

// Fill every unassigned site of the region keeping local admissibility; order of trial symbols given.
bool fill_region(const Constraint& c, const Pattern& env, Pattern& p, const Shape& region, Budget& budget,
                 const std::function<void(std::vector<Symbol>&)>& shuffle = nullptr);

namespace catalog {
SubshiftSpec full(int q, int dim = 1);
SubshiftSpec golden_mean(int dim = 1);  // forbids 11 along every axis
SubshiftSpec even();                    // even runs of 0 between consecutive 1s
SubshiftSpec hard_core(const Shape& shape);  // translates of the shape at occupied sites never overlap
SubshiftSpec squares();
SubshiftSpec sunny_side_up(int dim = 1);
SubshiftSpec proper_colorings(int q, int dim);
// sum of x over g+taps vanishes in Z/m for every g; no taps gives the full group shift
SubshiftSpec group_xor(const std::vector<int>& taps, int modulus = 2);
SubshiftSpec product(const SubshiftSpec& a, const SubshiftSpec& b);  // symbol a*|B|+b
}  // namespace catalog

}  // namespace gibbslab
