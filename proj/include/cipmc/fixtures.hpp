#pragma once

// Built-in scenarios, scenario assembly from texts, and the seeded random
// generators driving the property suites.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cipmc/logic.hpp"
#include "cipmc/statespace.hpp"

namespace cipmc {

struct LoadedScenario {
  Scenario scenario;
  Formula property;
  SymbolTable symbols;
};

// Assembles a runtime scenario from the three file texts.
LoadedScenario load_scenario(const ScenarioFile& file, const std::string& protocol_text,
                             const std::string& property_text);

struct BuiltinFixture {
  std::string name;
  std::string protocol_text;
  std::string property_text;
  std::string scenario_text;  // references <name>.cip / <name>.pl

  LoadedScenario load(std::optional<uint32_t> max_instances = std::nullopt) const;
};

// "ns": the public-key protocol of the worked example, two principals, the
//       initiator parameterized by an identity-sorted open variable.
// "ksl": the repeated-authentication phase, both principals parameterized by
//        a partner identity and the pair of session/ticket keys; the builtin
//        scenario pairs intended partners via bind rules and gives the
//        intruder only its own credentials.
// Throws std::out_of_range for unknown names.
const BuiltinFixture& builtin(const std::string& name);
std::vector<std::string> builtin_names();

// ---------------------------------------------------------------------------
// Seeded generators (deterministic in the seed)
// ---------------------------------------------------------------------------

// Random ground term over a small vocabulary, depth-bounded.
Term random_ground_term(std::mt19937& rng, int max_depth);

struct KnowledgeCase {
  std::vector<Term> base;  // at most 6 terms, depth <= 3
  Term query;
};
KnowledgeCase random_knowledge_case(uint32_t seed);

// Random closed formula over principals {A, B}, depth-bounded, at most
// `max_quants` quantifiers.
Formula random_closed_formula(std::mt19937& rng, int max_depth, int max_quants);
Formula random_closed_formula(uint32_t seed, int max_depth = 5, int max_quants = 3);

struct GeneratedCase {
  Scenario scenario;
  Formula property;  // forall-prefixed, references only bindable variables
  std::string describe() const;
};
// Small two-principal protocol with random linear bodies and a random
// forall-prefixed property; bounds: <= 3 actions per principal.
GeneratedCase random_scenario(uint32_t seed);

}  // namespace cipmc
