#pragma once

// cIP principal definitions, the protocol-spec parser and instantiation.
//
// A principal is its name, a list of sorted open variables and a finite
// linear sequence of out/in actions. Instantiation with index n suffixes
// every name in the body with n and substitutes the open-variable binding;
// variables bound by in-action binders are resolved against chi when the
// action executes.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cipmc/term.hpp"

namespace cipmc {

enum class Sort : uint8_t { Identity, Key };

struct OpenVar {
  std::string name;
  Sort sort = Sort::Identity;
};

struct Action {
  enum class Kind : uint8_t { Out, In } kind;
  Term message;  // out: no binders; in: pattern with binders
};

struct PrincipalDef {
  std::string name;
  std::vector<OpenVar> open_vars;
  std::vector<Action> actions;

  const OpenVar* find_open_var(const std::string& n) const;
};

struct Instance {
  std::string principal;
  uint32_t index = 0;
  Substitution open_binding;     // indexed open vars -> ground terms
  std::vector<Action> actions;   // indexed body, open vars substituted
  size_t pc = 0;                 // number of executed actions

  bool done() const { return pc >= actions.size(); }
  const Action& head() const { return actions[pc]; }
  std::string label() const { return principal + "_" + std::to_string(index); }
};

// Parses the protocol DSL:
//   protocol  ::= principal+
//   principal ::= NAME ":" "(" openvars? ")" "[" action (";" action)* "]"
//   openvar   ::= NAME (":" ("id" | "key"))?
//   action    ::= ("out" | "in") "(" termlist ")"
// Errors carry line/column. Rejects duplicate principal names, use of
// undeclared variables, binders in out-actions, and duplicate binders
// within one pattern.
std::vector<PrincipalDef> parse_protocol(std::string_view source);

// Pretty-printer; parse_protocol(render_protocol(defs)) == defs.
std::string render_protocol(const std::vector<PrincipalDef>& defs);
std::string render_principal(const PrincipalDef& def);
std::string render_action(const Action& a);

class InvalidBindingError : public std::runtime_error {
 public:
  explicit InvalidBindingError(const std::string& msg) : std::runtime_error(msg) {}
};

// The body of `def` with every name suffixed by `index` and open variables
// left as free Var leaves (the eq.-(2) view used by tests and displays).
std::vector<Action> indexed_actions(const PrincipalDef& def, uint32_t index);

// Full instantiation: `binding` must cover exactly the open variables of
// `def` (keyed by indexed name) with sort-correct ground terms.
Instance instantiate(const PrincipalDef& def, uint32_t index, const Substitution& binding);

std::string render_instance(const Instance& inst);

}  // namespace cipmc
