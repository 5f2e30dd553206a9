#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbslab/interaction.hpp"
#include "gibbslab/measure.hpp"
#include "gibbslab/relative.hpp"
#include "gibbslab/symbolic.hpp"

namespace gibbslab {

using json = nlohmann::json;

inline constexpr const char* kModelFormat = "gibbslab-model/1";
inline constexpr const char* kReportFormat = "gibbslab-report/1";

// Parse failure tagged with the file and a JSON pointer into it.
struct ModelError : Error {
  ModelError(const std::string& file, const std::string& path, const std::string& what)
      : Error(file + ": " + (path.empty() ? "/" : path) + ": " + what) {}
};

struct EnvSampler {
  std::string type;  // bernoulli_site, bernoulli_bond or empty
  double p = 0.5;
  std::uint64_t seed = 1;
};

struct Model {
  std::string file;
  SubshiftSpec shift = catalog::full(2);
  std::optional<RelativeSystem> relative;  // when the model carries an environment
  EnvSampler env_sampler;
  std::optional<Interaction> interaction;  // embedded "interaction" block
  json source;

  Constraint constraint() const { return relative ? relative->omega : Constraint(shift); }
  int dim() const { return shift.dim(); }
};

Model load_model(const std::string& path);
Model model_from_json(const json& j, const std::string& file = "<model>");
SubshiftSpec shift_from_json(const json& j, int dim, const std::string& file, const std::string& path);

// zero interaction when the path is empty and the model has none embedded
Interaction load_interaction(const std::string& path, const Model& m);
Interaction interaction_from_json(const json& j, const Model& m, const std::string& file, const std::string& path);

// "ball1", "cross2", "9", "5x5", "[-2,3]", "box:0,0:3,3", or an explicit JSON site list
Shape parse_shape(const std::string& s, int dim);
// symbol names joined; single-character alphabets with no separator, otherwise with spaces
std::string word_string(const Alphabet& a, const Word& w);
Word parse_word(const Alphabet& a, const std::string& s, std::size_t len);
Word parse_word(const Alphabet& a, const std::string& s);
// pattern on A given as a word string
Pattern pattern_on(const Alphabet& a, const Shape& A, const std::string& s);

// "pattern,probability" rows, one block per environment atom
void write_measure_csv(std::ostream& os, const WindowMeasure& mu, const Alphabet& a);
json measure_to_json(const WindowMeasure& mu, const Alphabet& a);

json report_to_json(const GibbsReport& r);

}  // namespace gibbslab
