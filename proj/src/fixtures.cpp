#include "cipmc/fixtures.hpp"

#include <array>
#include <functional>
#include <stdexcept>

namespace cipmc {

LoadedScenario load_scenario(const ScenarioFile& file, const std::string& protocol_text,
                             const std::string& property_text) {
  LoadedScenario out;
  out.scenario.protocol = parse_protocol(protocol_text);
  out.scenario.max_instances = file.max_instances;
  out.scenario.initial_knowledge =
      file.knowledge ? *file.knowledge : default_initial_knowledge();
  out.scenario.bind_templates = file.bind_templates;
  out.scenario.allow_self_binding = file.allow_self_binding;
  out.scenario.validate();

  std::vector<std::string> keys;
  for (const auto& t : out.scenario.initial_knowledge)
    if (t->kind == TermKind::SymKey) keys.push_back(t->name);
  for (const auto& bt : out.scenario.bind_templates)
    for (const auto& [var, value] : bt.values)
      if (value.kind == BindValue::Kind::Ground && value.term->kind == TermKind::SymKey)
        keys.push_back(value.term->name);
  out.symbols = SymbolTable::from_protocol(out.scenario.protocol, keys);
  out.property = parse_property(property_text, out.symbols);
  return out;
}

namespace {

const BuiltinFixture kNS{
    "ns",
    "A: (r) [\n"
    "  out({na, A}_{r^+});\n"
    "  in({na, ?z}_{A^-});\n"
    "  out({z}_{r^+})\n"
    "]\n"
    "B: () [\n"
    "  in({?x, ?y}_{B^-});\n"
    "  out({x, nb}_{y^+});\n"
    "  in({nb}_{B^-})\n"
    "]\n",
    "forall i:A. exists j:B. (x[j] = na[i] and z[i] = nb[j])\n",
    "protocol ns.cip\n"
    "property ns.pl\n"
    "max_instances 2\n"
    "knowledge I, I^+, I^-\n"};

const BuiltinFixture kKSL{
    "ksl",
    "A: (b, sk:key, tk:key) [\n"
    "  out(na, {b, A, sk}_{tk});\n"
    "  in(?y, {na}_{sk});\n"
    "  out({y}_{sk})\n"
    "]\n"
    "B: (a, sk:key, tk:key) [\n"
    "  in(?x, {B, a, sk}_{tk});\n"
    "  out(nb, {x}_{sk});\n"
    "  in({nb}_{sk})\n"
    "]\n",
    "forall l:B. forall j:A. (b[j] = B[l] and a[l] = A[j] -> x[l] = na[j] and y[j] = nb[l])\n",
    "protocol ksl.cip\n"
    "property ksl.pl\n"
    "max_instances 2\n"
    "knowledge I, I^+, I^-, kai, kii, kib\n"
    "bind A: b = @B, sk = kab, tk = kbb\n"
    "bind A: b = I, sk = kai, tk = kii\n"
    "bind B: a = @A, sk = kab, tk = kbb\n"
    "bind B: a = I, sk = kib, tk = kbb\n"};

}  // namespace

LoadedScenario BuiltinFixture::load(std::optional<uint32_t> max_instances) const {
  ScenarioFile file = parse_scenario_file(scenario_text);
  if (max_instances) file.max_instances = *max_instances;
  return load_scenario(file, protocol_text, property_text);
}

const BuiltinFixture& builtin(const std::string& name) {
  if (name == "ns") return kNS;
  if (name == "ksl") return kKSL;
  throw std::out_of_range("unknown builtin scenario '" + name + "'");
}

std::vector<std::string> builtin_names() { return {"ns", "ksl"}; }

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace {

uint32_t pick(std::mt19937& rng, uint32_t n) {
  return std::uniform_int_distribution<uint32_t>(0, n - 1)(rng);
}

}  // namespace

Term random_ground_term(std::mt19937& rng, int max_depth) {
  Term a = identity("A", 1), b = identity("B", 2), i = identity("I");
  std::array<Term, 8> atoms = {a,          b,          i,          nonce("n1", 1),
                               nonce("n2", 2), sym_key("k1"), pub_key(b), priv_key(i)};
  if (max_depth <= 0 || pick(rng, 3) == 0) return atoms[pick(rng, atoms.size())];
  if (pick(rng, 2) == 0) {
    size_t n = 2 + pick(rng, 2);
    std::vector<Term> parts;
    for (size_t k = 0; k < n; ++k) parts.push_back(random_ground_term(rng, max_depth - 1));
    return tuple(std::move(parts));
  }
  std::array<Term, 5> keys = {pub_key(a), priv_key(a), pub_key(i), sym_key("k1"),
                              sym_key("k2")};
  return enc(random_ground_term(rng, max_depth - 1), keys[pick(rng, keys.size())]);
}

KnowledgeCase random_knowledge_case(uint32_t seed) {
  std::mt19937 rng(seed);
  KnowledgeCase c;
  size_t n = 1 + pick(rng, 6);
  for (size_t k = 0; k < n; ++k) c.base.push_back(random_ground_term(rng, 3));
  // Half of the queries are subterms of the base, half arbitrary.
  if (pick(rng, 2) == 0 && !c.base.empty()) {
    Term t = c.base[pick(rng, c.base.size())];
    while (!t->children.empty() && pick(rng, 2) == 0)
      t = t->children[pick(rng, t->children.size())];
    c.query = t;
  } else {
    c.query = random_ground_term(rng, 3);
  }
  return c;
}

namespace {

struct FormulaGen {
  std::mt19937& rng;
  int quants_left;
  std::vector<std::pair<std::string, std::string>> scope;  // (ivar, principal)
  int next_ivar = 0;

  IndexExpr random_index() {
    if (!scope.empty() && pick(rng, 4) != 0)
      return IndexExpr{scope[pick(rng, scope.size())].first};
    return IndexExpr{1 + pick(rng, 2)};
  }

  FTerm random_atom() {
    static const std::array<const char*, 3> names = {"n1", "n2", "n3"};
    return fterm_atom(TermKind::Nonce, names[pick(rng, names.size())], random_index());
  }

  Formula leaf() {
    if (pick(rng, 3) == 0) return f_derives(random_atom());
    static const std::array<const char*, 2> vars = {"x", "y"};
    return f_eq(vars[pick(rng, vars.size())], random_index(), random_atom());
  }

  Formula gen(int depth) {
    if (depth <= 0) return leaf();
    uint32_t roll = pick(rng, 10);
    if (roll < 3 && quants_left > 0) {
      --quants_left;
      std::string ivar = "i" + std::to_string(next_ivar++);
      std::string principal = pick(rng, 2) ? "A" : "B";
      scope.emplace_back(ivar, principal);
      Formula body = gen(depth - 1);
      scope.pop_back();
      return f_quant(pick(rng, 2) ? Quantifier::Forall : Quantifier::Exists, ivar,
                     principal, body);
    }
    if (roll < 5) return f_not(gen(depth - 1));
    if (roll < 7) return f_and(gen(depth - 1), gen(depth - 1));
    if (roll < 9) return f_or(gen(depth - 1), gen(depth - 1));
    return leaf();
  }
};

}  // namespace

Formula random_closed_formula(std::mt19937& rng, int max_depth, int max_quants) {
  FormulaGen gen{rng, max_quants, {}, 0};
  return gen.gen(max_depth);
}

Formula random_closed_formula(uint32_t seed, int max_depth, int max_quants) {
  std::mt19937 rng(seed);
  return random_closed_formula(rng, max_depth, max_quants);
}

// ---------------------------------------------------------------------------
// Random protocols
// ---------------------------------------------------------------------------

namespace {

// Builds a random linear body for `self`, tracking binders so later actions
// may reuse them. Messages stay small: atoms, pairs, one encryption layer.
std::vector<Action> random_body(std::mt19937& rng, const std::string& self,
                                const std::string& other, bool has_open_var,
                                std::vector<std::string>& binders) {
  std::vector<Action> actions;
  size_t n_actions = 1 + pick(rng, 3);
  int next_nonce = 0, next_binder = 0;

  auto random_payload = [&](bool allow_var) -> Term {
    uint32_t roll = pick(rng, 5);
    if (roll == 0) return identity(self);
    if (roll == 1 && allow_var && has_open_var) return var_ref("r");
    if (roll == 2 && allow_var && !binders.empty())
      return var_ref(binders[pick(rng, binders.size())]);
    return nonce("n" + std::to_string(next_nonce++ % 3 + 1));
  };
  auto random_key = [&]() -> Term {
    uint32_t roll = pick(rng, has_open_var ? 3 : 2);
    if (roll == 0) return pub_key(identity(self));
    if (roll == 1) return pub_key(identity(other));
    return pub_key(var_ref("r"));
  };

  for (size_t k = 0; k < n_actions; ++k) {
    if (pick(rng, 2) == 0) {
      Term payload = random_payload(true);
      if (pick(rng, 2) == 0) payload = tuple({payload, random_payload(true)});
      Term msg = pick(rng, 2) == 0 ? enc(payload, random_key()) : payload;
      actions.push_back({Action::Kind::Out, msg});
    } else {
      std::string bname = "v" + std::to_string(next_binder++);
      binders.push_back(bname);
      Term pat = binder(bname);
      if (pick(rng, 2) == 0) pat = tuple({pat, random_payload(false)});
      if (pick(rng, 2) == 0) pat = enc(pat, priv_key(identity(self)));
      actions.push_back({Action::Kind::In, pat});
    }
  }
  return actions;
}

}  // namespace

GeneratedCase random_scenario(uint32_t seed) {
  std::mt19937 rng(seed);
  GeneratedCase out;

  bool a_has_open = pick(rng, 2) == 0;
  PrincipalDef a;
  a.name = "A";
  if (a_has_open) a.open_vars.push_back(OpenVar{"r", Sort::Identity});
  std::vector<std::string> a_binders;
  a.actions = random_body(rng, "A", "B", a_has_open, a_binders);

  PrincipalDef b;
  b.name = "B";
  std::vector<std::string> b_binders;
  b.actions = random_body(rng, "B", "A", false, b_binders);

  out.scenario.protocol = {a, b};
  out.scenario.max_instances = 2;
  out.scenario.initial_knowledge = default_initial_knowledge();

  // A forall-prefixed property over variables the protocol can bind.
  auto atom_for = [&](const std::string& ivar,
                      const std::vector<std::string>& binders) -> Formula {
    if (!binders.empty() && pick(rng, 2) == 0) {
      std::string var = binders[pick(rng, binders.size())];
      return f_eq(var, IndexExpr{ivar},
                  fterm_atom(TermKind::Nonce, "n" + std::to_string(1 + pick(rng, 3)),
                             IndexExpr{ivar}));
    }
    return f_derives(fterm_atom(TermKind::Nonce, "n" + std::to_string(1 + pick(rng, 3)),
                                IndexExpr{ivar}));
  };

  Formula matrix = atom_for("i", a_binders);
  if (pick(rng, 2) == 0) {
    Formula second = atom_for("j", b_binders);
    matrix = pick(rng, 2) == 0 ? f_and(matrix, second) : f_or(matrix, second);
    Formula inner = pick(rng, 2) == 0
                        ? f_quant(Quantifier::Exists, "j", "B", matrix)
                        : f_quant(Quantifier::Forall, "j", "B", matrix);
    out.property = f_quant(Quantifier::Forall, "i", "A", inner);
  } else {
    if (pick(rng, 3) == 0) matrix = f_not(matrix);
    out.property = f_quant(Quantifier::Forall, "i", "A", matrix);
  }
  return out;
}

std::string GeneratedCase::describe() const {
  return render_protocol(scenario.protocol) + "property: " + render_formula(property) + "\n";
}

}  // namespace cipmc
