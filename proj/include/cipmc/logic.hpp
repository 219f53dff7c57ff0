#pragma once

// PL: equality and derivability atoms over indexed variables, quantifiers
// ranging over principal instances, boolean connectives. Includes the
// prenex-normal-form transformation and the satisfaction relation
// kappa |=_chi phi.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cipmc/knowledge.hpp"
#include "cipmc/protocol.hpp"
#include "cipmc/term.hpp"

namespace cipmc {

// An atom index inside a formula: a literal instance number or a quantified
// index variable.
using IndexExpr = std::variant<uint32_t, std::string>;

std::string render_index(const IndexExpr& e);

// Formula-level terms: the Term constructors with IndexExpr indices and no
// variables or binders.
class FTermNode;
using FTerm = std::shared_ptr<const FTermNode>;

class FTermNode {
 public:
  TermKind kind;  // Identity | Nonce | SymKey | PubKey | PrivKey | Tuple | Enc
  std::string name;
  std::optional<IndexExpr> index;
  std::vector<FTerm> children;

  FTermNode(TermKind k, std::string n, std::optional<IndexExpr> i, std::vector<FTerm> c)
      : kind(k), name(std::move(n)), index(std::move(i)), children(std::move(c)) {}
};

FTerm fterm_atom(TermKind kind, std::string name, std::optional<IndexExpr> index = std::nullopt);
FTerm fterm_pub(FTerm owner);
FTerm fterm_priv(FTerm owner);
FTerm fterm_tuple(std::vector<FTerm> parts);
FTerm fterm_enc(FTerm payload, FTerm key);
FTerm fterm_of(const Term& t);  // ground term -> formula term with literal indices

// Resolves index variables via `env`; the result is ground.
Term resolve(const FTerm& t, const std::map<std::string, uint32_t>& env);

std::string render(const FTerm& t);
bool equal(const FTerm& a, const FTerm& b);

enum class Quantifier : uint8_t { Forall, Exists };
enum class FormulaKind : uint8_t { Eq, Derives, Quant, Not, And, Or };

class FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

class FormulaNode {
 public:
  FormulaKind kind;
  // Eq: var_name/var_index = term; Derives: term
  std::string var_name;
  IndexExpr var_index;
  FTerm term;
  // Quant
  Quantifier q = Quantifier::Forall;
  std::string ivar;
  std::string principal;
  // Quant: {body}; Not: {child}; And/Or: {left, right}
  std::vector<Formula> children;
};

Formula f_eq(std::string var, IndexExpr index, FTerm rhs);
Formula f_derives(FTerm term);
Formula f_quant(Quantifier q, std::string ivar, std::string principal, Formula body);
Formula f_not(Formula f);
Formula f_and(Formula a, Formula b);
Formula f_or(Formula a, Formula b);

bool equal(const Formula& a, const Formula& b);
std::string render_formula(const Formula& f);

bool is_quantifier_free(const Formula& f);
// Q1 i1:A1 ... Qn in:An . psi with psi quantifier-free, n >= 0.
bool is_pnf(const Formula& f);
// Every index variable occurrence is bound by an enclosing quantifier.
bool is_closed(const Formula& f);

// All index-variable names occurring in f (bound or free).
std::set<std::string> index_vars(const Formula& f);

// Renames free occurrences of index variable `from` to `to`.
Formula rename_ivar(const Formula& f, const std::string& from, const std::string& to);

// Prenex normal form. The result passes is_pnf and is logically equivalent
// over nonempty quantifier domains; fresh index variables introduced in the
// and/or cases never collide with existing ones.
Formula pnf(const Formula& f);

// Classifies bare names when parsing properties without a protocol at hand.
struct SymbolTable {
  std::set<std::string> identities;
  std::set<std::string> nonces;
  std::set<std::string> keys;

  static SymbolTable from_protocol(const std::vector<PrincipalDef>& defs,
                                   const std::vector<std::string>& extra_keys = {});
  TermKind classify(const std::string& name) const;
};

// Property DSL:
//   forall i:A. exists j:B. (x[j] = na[i] and z[i] = nb[j])
// with `not`, `and`, `or`, `->` (sugar for not/or), `true` (sugar for a
// derivability atom on the intruder identity), `K |> m` derivability atoms,
// and `#` comments. Quantified index variables are alpha-renamed apart.
Formula parse_property(std::string_view source, const SymbolTable& symbols = {});

// The model relation of PL. chi entries map indexed variables to ground
// terms; an Eq atom over a variable chi does not assign evaluates to false.
struct EvalContext {
  Knowledge kappa;
  Substitution chi;
};

bool evaluate(const EvalContext& ctx, const Formula& f);

}  // namespace cipmc
