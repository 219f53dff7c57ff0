#include <doctest.h>

#include <random>

#include "cipmc/fixtures.hpp"
#include "cipmc/logic.hpp"
#include "oracles.hpp"

using namespace cipmc;

namespace {

Formula psi_ns() { return parse_property(builtin("ns").property_text); }

EvalContext ns_attack_final_context() {
  // Final state of the two-initiator run: both initiators talked to the
  // intruder and received each other's nonce.
  Term i = identity("I");
  Term a1 = identity("A", 1), a2 = identity("A", 2);
  std::vector<Term> base = {
      i,  pub_key(i), priv_key(i), a1, pub_key(a1), a2, pub_key(a2),
      enc(tuple({nonce("na", 1), a1}), pub_key(i)),
      enc(tuple({nonce("na", 2), a2}), pub_key(i)),
      enc(nonce("na", 2), pub_key(i)),
      enc(nonce("na", 1), pub_key(i))};
  Substitution chi{{VarKey{"r", 1}, i},
                   {VarKey{"r", 2}, i},
                   {VarKey{"z", 1}, nonce("na", 2)},
                   {VarKey{"z", 2}, nonce("na", 1)}};
  return EvalContext{Knowledge::analyze(base), chi};
}

}  // namespace

TEST_CASE("parsing the nonce-agreement property") {
  Formula f = psi_ns();
  REQUIRE(f->kind == FormulaKind::Quant);
  CHECK(f->q == Quantifier::Forall);
  CHECK(f->ivar == "i");
  CHECK(f->principal == "A");
  const Formula& inner = f->children[0];
  REQUIRE(inner->kind == FormulaKind::Quant);
  CHECK(inner->q == Quantifier::Exists);
  CHECK(inner->principal == "B");
  const Formula& matrix = inner->children[0];
  REQUIRE(matrix->kind == FormulaKind::And);
  const Formula& left = matrix->children[0];
  CHECK(left->kind == FormulaKind::Eq);
  CHECK(left->var_name == "x");
  CHECK(left->var_index == IndexExpr{"j"});
  CHECK(left->term->name == "na");
  CHECK(left->term->kind == TermKind::Nonce);
}

TEST_CASE("parsing the implication property desugars to not/or") {
  Formula f = parse_property(builtin("ksl").property_text);
  REQUIRE(f->kind == FormulaKind::Quant);
  CHECK(f->principal == "B");
  const Formula& inner = f->children[0];
  REQUIRE(inner->kind == FormulaKind::Quant);
  const Formula& matrix = inner->children[0];
  REQUIRE(matrix->kind == FormulaKind::Or);
  CHECK(matrix->children[0]->kind == FormulaKind::Not);
  CHECK(is_pnf(f));
  CHECK(is_closed(f));
}

TEST_CASE("'true' sugar parses to a derivability atom") {
  Formula f = parse_property("exists i:A. true");
  REQUIRE(f->kind == FormulaKind::Quant);
  CHECK(f->children[0]->kind == FormulaKind::Derives);
  CHECK(f->children[0]->term->name == "I");
}

TEST_CASE("joining-style formula evaluates by instance presence") {
  Formula f = parse_property("(exists i:A. true) and (exists j:B. true)");
  Term i = identity("I");
  EvalContext both{Knowledge::analyze({i, identity("A", 1), identity("B", 2)}), {}};
  EvalContext only_a{Knowledge::analyze({i, identity("A", 1)}), {}};
  CHECK(evaluate(both, f));
  CHECK_FALSE(evaluate(only_a, f));
}

TEST_CASE("parser errors") {
  CHECK_THROWS_AS(parse_property("exists i:A. x[k] = na[i]"), ParseError);  // unbound k
  CHECK_THROWS_AS(parse_property("forall i:A. x[i] = na[i] and"), ParseError);
  CHECK_THROWS_AS(parse_property("x[j] = na[1]"), ParseError);  // open formula
}

TEST_CASE("quantifier index variables are renamed apart") {
  Formula f = parse_property("(exists i:A. x[i] = n1[i]) and (exists i:B. y[i] = n1[i])");
  std::vector<std::string> quant_vars;
  std::function<void(const Formula&)> walk = [&](const Formula& g) {
    if (g->kind == FormulaKind::Quant) quant_vars.push_back(g->ivar);
    for (const auto& c : g->children) walk(c);
  };
  walk(f);
  REQUIRE(quant_vars.size() == 2);
  CHECK(quant_vars[0] != quant_vars[1]);
}

TEST_CASE("is_pnf") {
  CHECK(is_pnf(psi_ns()));
  CHECK(is_pnf(parse_property("x[1] = na[1]")));  // n = 0 quantifiers
  CHECK_FALSE(is_pnf(parse_property("(exists i:A. x[i] = na[i]) and K |> na[1]")));
}

TEST_CASE("pnf leaves quantifier-free formulas unchanged") {
  Formula f = parse_property("x[1] = na[1] or K |> nb[2]");
  CHECK(equal(pnf(f), f));
}

TEST_CASE("pnf pushes negation through a universal quantifier") {
  Formula f = parse_property("not (forall i:A. z[i] = nb[1])");
  Formula expected = parse_property("exists i:A. not (z[i] = nb[1])");
  CHECK(equal(pnf(f), expected));
}

TEST_CASE("pnf pulls the left conjunct quantifier with a fresh index") {
  Formula f = parse_property("(exists i:A. x[i] = na[1]) and K |> m[1]");
  Formula result = pnf(f);
  REQUIRE(result->kind == FormulaKind::Quant);
  CHECK(result->q == Quantifier::Exists);
  CHECK(result->principal == "A");
  CHECK(result->ivar == "i1");  // renamed fresh
  const Formula& matrix = result->children[0];
  REQUIRE(matrix->kind == FormulaKind::And);
  CHECK(matrix->children[0]->var_index == IndexExpr{"i1"});
  CHECK(is_pnf(result));
}

TEST_CASE("pnf handles a quantifier only in the right operand") {
  Formula f = parse_property("K |> m[1] and (exists i:A. x[i] = na[1])");
  Formula result = pnf(f);
  REQUIRE(result->kind == FormulaKind::Quant);
  CHECK(result->q == Quantifier::Exists);
  CHECK(is_pnf(result));
}

TEST_CASE("pnf produces PNF on random closed formulas") {
  for (uint32_t seed = 0; seed < 300; ++seed) {
    Formula f = random_closed_formula(seed);
    CAPTURE(seed);
    REQUIRE(is_closed(f));
    Formula normal = pnf(f);
    CHECK(is_pnf(normal));
    CHECK(is_closed(normal));
  }
}

TEST_CASE("pnf is idempotent") {
  for (uint32_t seed = 0; seed < 300; ++seed) {
    Formula normal = pnf(random_closed_formula(seed));
    CHECK(equal(pnf(normal), normal));
  }
}

TEST_CASE("pnf preserves evaluation on sampled contexts") {
  std::vector<Term> universe = {nonce("n1", 1), nonce("n1", 2), nonce("n2", 1)};
  for (uint32_t seed = 0; seed < 60; ++seed) {
    Formula f = random_closed_formula(seed);
    Formula normal = pnf(f);
    CAPTURE(seed);
    oracle::for_each_context(oracle::observed_vars(f), universe,
                             [&](const EvalContext& ctx) {
                               CHECK(evaluate(ctx, f) == evaluate(ctx, normal));
                             });
  }
}

TEST_CASE("De Morgan at the evaluator") {
  std::vector<Term> universe = {nonce("n1", 1), nonce("n1", 2), nonce("n2", 1)};
  for (uint32_t seed = 100; seed < 140; ++seed) {
    Formula body = random_closed_formula(seed, 3, 1);
    Formula lhs = f_not(f_quant(Quantifier::Forall, "q", "A", body));
    Formula rhs = f_quant(Quantifier::Exists, "q", "A", f_not(body));
    oracle::for_each_context(oracle::observed_vars(body), universe,
                             [&](const EvalContext& ctx) {
                               CHECK(evaluate(ctx, lhs) == evaluate(ctx, rhs));
                             });
  }
}

TEST_CASE("vacuous universal quantification over an absent principal") {
  Term i = identity("I");
  EvalContext ctx{Knowledge::analyze({i, pub_key(i), priv_key(i)}), {}};
  CHECK(evaluate(ctx, psi_ns()));
}

TEST_CASE("the completed two-initiator run falsifies the property") {
  CHECK_FALSE(evaluate(ns_attack_final_context(), psi_ns()));
}

TEST_CASE("derivability atoms consult the analysis closure") {
  Term i = identity("I");
  std::vector<Term> base = {priv_key(i),
                            enc(tuple({nonce("na", 1), identity("A", 1)}), pub_key(i))};
  EvalContext ctx{Knowledge::analyze(base), {}};
  Formula f = f_derives(fterm_atom(TermKind::Nonce, "na", IndexExpr{1u}));
  CHECK(evaluate(ctx, f));
}

TEST_CASE("an unassigned variable falsifies its equality atom") {
  Term i = identity("I");
  EvalContext ctx{Knowledge::analyze({i, identity("A", 1)}), {}};
  Formula f = f_eq("z", IndexExpr{1u}, fterm_atom(TermKind::Nonce, "nb", IndexExpr{1u}));
  CHECK_FALSE(evaluate(ctx, f));
  Formula neg = f_not(f);
  CHECK(evaluate(ctx, neg));
}

TEST_CASE("quantifier domains follow the bare identity atoms in kappa") {
  Term i = identity("I");
  // A_1 occurs inside a message but has not joined: it is not in the domain.
  std::vector<Term> base = {i, tuple({identity("A", 1), nonce("na", 1)})};
  EvalContext ctx{Knowledge::analyze(base), {}};
  Formula f = f_quant(Quantifier::Exists, "i", "A",
                      f_derives(fterm_atom(TermKind::Identity, "I")));
  CHECK_FALSE(evaluate(ctx, f));
  // Once the bare atom is in the base, the domain is nonempty.
  base.push_back(identity("A", 1));
  EvalContext ctx2{Knowledge::analyze(base), {}};
  CHECK(evaluate(ctx2, f));
}

TEST_CASE("renderings of formulas parse back") {
  for (const auto& name : builtin_names()) {
    Formula f = parse_property(builtin(name).property_text);
    CHECK(equal(parse_property(render_formula(f)), f));
  }
  for (uint32_t seed = 0; seed < 100; ++seed) {
    Formula f = random_closed_formula(seed);
    CAPTURE(render_formula(f));
    CHECK(equal(parse_property(render_formula(f)), f));
  }
}
