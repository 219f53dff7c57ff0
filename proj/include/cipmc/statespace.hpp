#pragma once

// Explicit-state operational semantics: states <C, chi, kappa>, join/out/in
// transition generation, and scenario configuration.
//
// Joins are performed by the intruder: a fresh principal instance enters the
// context, its identity and public key are added to kappa, and its open
// variables are bound. Identity-sorted open variables range by default over
// the identity atoms currently in kappa (the intruder first, then joined
// instances by index). A scenario may instead declare binding templates for
// a principal; a template can fix a variable to a ground term or point it at
// a partner instance of a named principal (`@P`), which may be an already
// joined instance or a future slot. Binding a future slot commits that slot
// to principal P: later joins honor the commitment, so anticipations are
// consistent at every join-tree leaf.
//
// States are immutable values; successor generation and application are pure.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cipmc/knowledge.hpp"
#include "cipmc/protocol.hpp"
#include "cipmc/term.hpp"

namespace cipmc {

struct BindValue {
  enum class Kind : uint8_t { Ground, Partner } kind = Kind::Ground;
  Term term;                      // Ground
  std::string partner_principal;  // Partner (@P)
};

struct BindTemplate {
  std::string principal;
  std::vector<std::pair<std::string, BindValue>> values;  // open var -> value
};

struct Scenario {
  std::vector<PrincipalDef> protocol;
  uint32_t max_instances = 1;
  std::vector<Term> initial_knowledge;  // default {I, I^+, I^-}
  std::vector<BindTemplate> bind_templates;
  bool allow_self_binding = false;

  const PrincipalDef* find_principal(const std::string& name) const;
  std::vector<const BindTemplate*> templates_for(const std::string& principal) const;
  void validate() const;  // throws std::invalid_argument on bad configuration
};

std::vector<Term> default_initial_knowledge();

struct JoinData {
  std::string principal;
  uint32_t index = 0;
  Substitution binding;
};
struct OutData {
  uint32_t instance_index = 0;
  Term message;
};
struct InData {
  uint32_t instance_index = 0;
  Term pattern;  // chi-substituted pattern, binder leaves remain
  Substitution sigma;
};
using Transition = std::variant<JoinData, OutData, InData>;

bool is_join(const Transition& t);
std::string render_transition(const Transition& t);

struct State {
  std::vector<Instance> context;  // ordered by join time
  Substitution chi;
  std::shared_ptr<const Knowledge> kappa;
  uint32_t next_index = 1;
  uint32_t joins_left = 0;
  std::map<uint32_t, std::string> commitments;  // future slot -> principal

  const Instance* find_instance(uint32_t index) const;
  // "{A_1, B_2}" with instances sorted by index.
  std::string context_summary() const;
  // Canonical encoding for visited sets.
  std::string dedup_key() const;
};

State initial_state(const Scenario& sc);

// Join transitions from s: one per (principal, admissible open-variable
// binding); empty when the instance budget is exhausted.
std::vector<Transition> join_transitions(const State& s, const Scenario& sc);

// One OutStep per instance whose head action is out; one InStep per instance
// whose head is in and per substitution the intruder can realize.
std::vector<Transition> comm_transitions(const State& s);

State apply_transition(const State& s, const Transition& t, const Scenario& sc);

// No joins remain (budget exhausted or no admissible join) and every
// instance has finished or its head in-action has no enabled InStep.
bool is_terminal(const State& s, const Scenario& sc);

// Every joined instance has consumed all of its actions.
bool is_completed(const State& s);

std::string render_state(const State& s);

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

// Line-based text format ('#' comments):
//   protocol <path>
//   property <path>
//   max_instances <n>
//   knowledge <term>, <term>, ...
//   bind <principal>: <var> = <term | @Principal | I>, ...
//   allow_self_binding <true|false>
struct ScenarioFile {
  std::string protocol_path;
  std::string property_path;
  uint32_t max_instances = 1;
  std::optional<std::vector<Term>> knowledge;
  std::vector<BindTemplate> bind_templates;
  bool allow_self_binding = false;
};

ScenarioFile parse_scenario_file(std::string_view source);
std::string render_scenario_file(const ScenarioFile& f);

}  // namespace cipmc
