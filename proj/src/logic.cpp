#include "cipmc/logic.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace cipmc {

// ---------------------------------------------------------------------------
// Formula terms
// ---------------------------------------------------------------------------

std::string render_index(const IndexExpr& e) {
  if (std::holds_alternative<uint32_t>(e)) return std::to_string(std::get<uint32_t>(e));
  return std::get<std::string>(e);
}

FTerm fterm_atom(TermKind kind, std::string name, std::optional<IndexExpr> index) {
  return std::make_shared<const FTermNode>(kind, std::move(name), std::move(index),
                                           std::vector<FTerm>{});
}
FTerm fterm_pub(FTerm owner) {
  return std::make_shared<const FTermNode>(TermKind::PubKey, "", std::nullopt,
                                           std::vector<FTerm>{std::move(owner)});
}
FTerm fterm_priv(FTerm owner) {
  return std::make_shared<const FTermNode>(TermKind::PrivKey, "", std::nullopt,
                                           std::vector<FTerm>{std::move(owner)});
}
FTerm fterm_tuple(std::vector<FTerm> parts) {
  return std::make_shared<const FTermNode>(TermKind::Tuple, "", std::nullopt, std::move(parts));
}
FTerm fterm_enc(FTerm payload, FTerm key) {
  return std::make_shared<const FTermNode>(
      TermKind::Enc, "", std::nullopt, std::vector<FTerm>{std::move(payload), std::move(key)});
}

FTerm fterm_of(const Term& t) {
  std::optional<IndexExpr> idx;
  if (t->index) idx = IndexExpr{*t->index};
  std::vector<FTerm> children;
  for (const auto& c : t->children) children.push_back(fterm_of(c));
  return std::make_shared<const FTermNode>(t->kind, t->name, std::move(idx), std::move(children));
}

Term resolve(const FTerm& t, const std::map<std::string, uint32_t>& env) {
  std::optional<uint32_t> idx;
  if (t->index) {
    if (std::holds_alternative<uint32_t>(*t->index)) {
      idx = std::get<uint32_t>(*t->index);
    } else {
      auto it = env.find(std::get<std::string>(*t->index));
      if (it == env.end())
        throw std::logic_error("unbound index variable " + std::get<std::string>(*t->index));
      idx = it->second;
    }
  }
  switch (t->kind) {
    case TermKind::Identity: return identity(t->name, idx);
    case TermKind::Nonce: return nonce(t->name, idx);
    case TermKind::SymKey: return sym_key(t->name, idx);
    case TermKind::PubKey: return pub_key(resolve(t->children[0], env));
    case TermKind::PrivKey: return priv_key(resolve(t->children[0], env));
    case TermKind::Tuple: {
      std::vector<Term> parts;
      for (const auto& c : t->children) parts.push_back(resolve(c, env));
      return tuple(std::move(parts));
    }
    case TermKind::Enc:
      return enc(resolve(t->children[0], env), resolve(t->children[1], env));
    default:
      throw std::logic_error("variables cannot occur in formula terms");
  }
}

std::string render(const FTerm& t) {
  switch (t->kind) {
    case TermKind::Identity:
    case TermKind::Nonce:
    case TermKind::SymKey: {
      std::string out = t->name;
      if (t->index) out += "[" + render_index(*t->index) + "]";
      return out;
    }
    case TermKind::PubKey: return render(t->children[0]) + "^+";
    case TermKind::PrivKey: return render(t->children[0]) + "^-";
    case TermKind::Tuple: {
      std::string out = "(";
      for (size_t i = 0; i < t->children.size(); ++i) {
        if (i) out += ", ";
        out += render(t->children[i]);
      }
      return out + ")";
    }
    case TermKind::Enc:
      return "{" + render(t->children[0]) + "}_{" + render(t->children[1]) + "}";
    default:
      return "?";
  }
}

bool equal(const FTerm& a, const FTerm& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind || a->name != b->name || a->index != b->index ||
      a->children.size() != b->children.size())
    return false;
  for (size_t i = 0; i < a->children.size(); ++i)
    if (!equal(a->children[i], b->children[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Formulas
// ---------------------------------------------------------------------------

static Formula make_formula(FormulaNode n) {
  return std::make_shared<const FormulaNode>(std::move(n));
}

Formula f_eq(std::string var, IndexExpr index, FTerm rhs) {
  FormulaNode n;
  n.kind = FormulaKind::Eq;
  n.var_name = std::move(var);
  n.var_index = std::move(index);
  n.term = std::move(rhs);
  return make_formula(std::move(n));
}
Formula f_derives(FTerm term) {
  FormulaNode n;
  n.kind = FormulaKind::Derives;
  n.term = std::move(term);
  return make_formula(std::move(n));
}
Formula f_quant(Quantifier q, std::string ivar, std::string principal, Formula body) {
  FormulaNode n;
  n.kind = FormulaKind::Quant;
  n.q = q;
  n.ivar = std::move(ivar);
  n.principal = std::move(principal);
  n.children = {std::move(body)};
  return make_formula(std::move(n));
}
Formula f_not(Formula f) {
  FormulaNode n;
  n.kind = FormulaKind::Not;
  n.children = {std::move(f)};
  return make_formula(std::move(n));
}
Formula f_and(Formula a, Formula b) {
  FormulaNode n;
  n.kind = FormulaKind::And;
  n.children = {std::move(a), std::move(b)};
  return make_formula(std::move(n));
}
Formula f_or(Formula a, Formula b) {
  FormulaNode n;
  n.kind = FormulaKind::Or;
  n.children = {std::move(a), std::move(b)};
  return make_formula(std::move(n));
}

bool equal(const Formula& a, const Formula& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case FormulaKind::Eq:
      return a->var_name == b->var_name && a->var_index == b->var_index &&
             equal(a->term, b->term);
    case FormulaKind::Derives:
      return equal(a->term, b->term);
    case FormulaKind::Quant:
      if (a->q != b->q || a->ivar != b->ivar || a->principal != b->principal) return false;
      break;
    default:
      break;
  }
  if (a->children.size() != b->children.size()) return false;
  for (size_t i = 0; i < a->children.size(); ++i)
    if (!equal(a->children[i], b->children[i])) return false;
  return true;
}

namespace {

// Operands of a connective are parenthesized unless they are atoms; a
// quantifier body extends as far right as possible and needs no parens.
std::string render_operand(const Formula& f) {
  if (f->kind == FormulaKind::Eq || f->kind == FormulaKind::Derives)
    return render_formula(f);
  return "(" + render_formula(f) + ")";
}

}  // namespace

std::string render_formula(const Formula& f) {
  switch (f->kind) {
    case FormulaKind::Eq:
      return f->var_name + "[" + render_index(f->var_index) + "] = " + render(f->term);
    case FormulaKind::Derives:
      return "K |> " + render(f->term);
    case FormulaKind::Quant:
      return std::string(f->q == Quantifier::Forall ? "forall " : "exists ") + f->ivar +
             ":" + f->principal + ". " + render_formula(f->children[0]);
    case FormulaKind::Not:
      return "not " + render_operand(f->children[0]);
    case FormulaKind::And:
      return render_operand(f->children[0]) + " and " + render_operand(f->children[1]);
    case FormulaKind::Or:
      return render_operand(f->children[0]) + " or " + render_operand(f->children[1]);
  }
  return "?";
}

bool is_quantifier_free(const Formula& f) {
  if (f->kind == FormulaKind::Quant) return false;
  for (const auto& c : f->children)
    if (!is_quantifier_free(c)) return false;
  return true;
}

bool is_pnf(const Formula& f) {
  Formula g = f;
  while (g->kind == FormulaKind::Quant) g = g->children[0];
  return is_quantifier_free(g);
}

namespace {

void collect_ivars_fterm(const FTerm& t, std::set<std::string>& out) {
  if (t->index && std::holds_alternative<std::string>(*t->index))
    out.insert(std::get<std::string>(*t->index));
  for (const auto& c : t->children) collect_ivars_fterm(c, out);
}

void collect_ivars(const Formula& f, std::set<std::string>& out) {
  switch (f->kind) {
    case FormulaKind::Eq:
      if (std::holds_alternative<std::string>(f->var_index))
        out.insert(std::get<std::string>(f->var_index));
      collect_ivars_fterm(f->term, out);
      break;
    case FormulaKind::Derives:
      collect_ivars_fterm(f->term, out);
      break;
    case FormulaKind::Quant:
      out.insert(f->ivar);
      break;
    default:
      break;
  }
  for (const auto& c : f->children) collect_ivars(c, out);
}

bool closed_rec(const Formula& f, std::set<std::string>& bound) {
  switch (f->kind) {
    case FormulaKind::Eq: {
      if (std::holds_alternative<std::string>(f->var_index) &&
          !bound.count(std::get<std::string>(f->var_index)))
        return false;
      std::set<std::string> used;
      collect_ivars_fterm(f->term, used);
      for (const auto& v : used)
        if (!bound.count(v)) return false;
      return true;
    }
    case FormulaKind::Derives: {
      std::set<std::string> used;
      collect_ivars_fterm(f->term, used);
      for (const auto& v : used)
        if (!bound.count(v)) return false;
      return true;
    }
    case FormulaKind::Quant: {
      bool inserted = bound.insert(f->ivar).second;
      bool ok = closed_rec(f->children[0], bound);
      if (inserted) bound.erase(f->ivar);
      return ok;
    }
    default:
      for (const auto& c : f->children)
        if (!closed_rec(c, bound)) return false;
      return true;
  }
}

FTerm rename_fterm(const FTerm& t, const std::string& from, const std::string& to) {
  std::optional<IndexExpr> idx = t->index;
  if (idx && std::holds_alternative<std::string>(*idx) && std::get<std::string>(*idx) == from)
    idx = IndexExpr{to};
  std::vector<FTerm> children;
  for (const auto& c : t->children) children.push_back(rename_fterm(c, from, to));
  return std::make_shared<const FTermNode>(t->kind, t->name, std::move(idx), std::move(children));
}

}  // namespace

std::set<std::string> index_vars(const Formula& f) {
  std::set<std::string> out;
  collect_ivars(f, out);
  return out;
}

bool is_closed(const Formula& f) {
  std::set<std::string> bound;
  return closed_rec(f, bound);
}

Formula rename_ivar(const Formula& f, const std::string& from, const std::string& to) {
  switch (f->kind) {
    case FormulaKind::Eq: {
      IndexExpr idx = f->var_index;
      if (std::holds_alternative<std::string>(idx) && std::get<std::string>(idx) == from)
        idx = IndexExpr{to};
      return f_eq(f->var_name, idx, rename_fterm(f->term, from, to));
    }
    case FormulaKind::Derives:
      return f_derives(rename_fterm(f->term, from, to));
    case FormulaKind::Quant:
      if (f->ivar == from) return f;  // inner binding shadows
      return f_quant(f->q, f->ivar, f->principal, rename_ivar(f->children[0], from, to));
    case FormulaKind::Not:
      return f_not(rename_ivar(f->children[0], from, to));
    case FormulaKind::And:
      return f_and(rename_ivar(f->children[0], from, to), rename_ivar(f->children[1], from, to));
    case FormulaKind::Or:
      return f_or(rename_ivar(f->children[0], from, to), rename_ivar(f->children[1], from, to));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Prenex normal form
// ---------------------------------------------------------------------------

namespace {

std::string fresh_ivar(const std::string& base, const std::set<std::string>& avoid) {
  for (uint32_t n = 1;; ++n) {
    std::string cand = base + std::to_string(n);
    if (!avoid.count(cand)) return cand;
  }
}

Quantifier dual(Quantifier q) {
  return q == Quantifier::Forall ? Quantifier::Exists : Quantifier::Forall;
}

Formula pnf_rec(const Formula& f) {
  if (is_quantifier_free(f)) return f;

  switch (f->kind) {
    case FormulaKind::Quant:
      return f_quant(f->q, f->ivar, f->principal, pnf_rec(f->children[0]));

    case FormulaKind::Not: {
      Formula inner = pnf_rec(f->children[0]);
      // f is not quantifier-free here, so inner carries a quantifier prefix.
      return f_quant(dual(inner->q), inner->ivar, inner->principal,
                     pnf_rec(f_not(inner->children[0])));
    }

    case FormulaKind::And:
    case FormulaKind::Or: {
      Formula left = pnf_rec(f->children[0]);
      Formula right = f->children[1];
      if (left->kind == FormulaKind::Quant) {
        std::set<std::string> avoid = index_vars(left);
        collect_ivars(right, avoid);
        std::string fresh = fresh_ivar(left->ivar, avoid);
        Formula body = rename_ivar(left->children[0], left->ivar, fresh);
        Formula joined = f->kind == FormulaKind::And ? f_and(body, right) : f_or(body, right);
        return f_quant(left->q, fresh, left->principal, pnf_rec(joined));
      }
      // Left operand is quantifier-free: symmetric completion on the right.
      Formula nright = pnf_rec(right);
      std::set<std::string> avoid = index_vars(nright);
      collect_ivars(left, avoid);
      std::string fresh = fresh_ivar(nright->ivar, avoid);
      Formula body = rename_ivar(nright->children[0], nright->ivar, fresh);
      Formula joined = f->kind == FormulaKind::And ? f_and(left, body) : f_or(left, body);
      return f_quant(nright->q, fresh, nright->principal, pnf_rec(joined));
    }

    default:
      return f;  // atoms are quantifier-free, unreachable
  }
}

}  // namespace

Formula pnf(const Formula& f) { return pnf_rec(f); }

// ---------------------------------------------------------------------------
// Symbol table and parser
// ---------------------------------------------------------------------------

SymbolTable SymbolTable::from_protocol(const std::vector<PrincipalDef>& defs,
                                       const std::vector<std::string>& extra_keys) {
  SymbolTable st;
  st.identities.insert("I");
  std::function<void(const Term&)> scan = [&](const Term& t) {
    if (t->kind == TermKind::Nonce) st.nonces.insert(t->name);
    if (t->kind == TermKind::SymKey) st.keys.insert(t->name);
    for (const auto& c : t->children) scan(c);
  };
  for (const auto& d : defs) {
    st.identities.insert(d.name);
    for (const auto& a : d.actions) scan(a.message);
  }
  for (const auto& k : extra_keys) st.keys.insert(k);
  return st;
}

TermKind SymbolTable::classify(const std::string& name) const {
  if (identities.count(name)) return TermKind::Identity;
  if (keys.count(name)) return TermKind::SymKey;
  if (nonces.count(name)) return TermKind::Nonce;
  // Fallback convention, used when no protocol is at hand.
  if (std::isupper(static_cast<unsigned char>(name[0]))) return TermKind::Identity;
  if (name[0] == 'k') return TermKind::SymKey;
  return TermKind::Nonce;
}

namespace {

struct LCursor {
  std::string_view text;
  size_t pos = 0;
  int line = 1, col = 1;

  char peek(size_t ahead = 0) const {
    return pos + ahead < text.size() ? text[pos + ahead] : '\0';
  }
  void advance() {
    if (pos >= text.size()) return;
    if (text[pos] == '\n') { ++line; col = 1; } else { ++col; }
    ++pos;
  }
  void skip_ws() {
    for (;;) {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) advance();
      if (peek() == '#') {
        while (pos < text.size() && text[pos] != '\n') advance();
        continue;
      }
      break;
    }
  }
  bool eat(char c) {
    skip_ws();
    if (peek() == c) { advance(); return true; }
    return false;
  }
  bool eat_word(std::string_view w) {
    skip_ws();
    if (text.substr(pos, w.size()) != w) return false;
    char next = pos + w.size() < text.size() ? text[pos + w.size()] : '\0';
    if (std::isalnum(static_cast<unsigned char>(next))) return false;
    for (size_t i = 0; i < w.size(); ++i) advance();
    return true;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line, col); }
};

std::string parse_lname(LCursor& cur) {
  cur.skip_ws();
  if (!std::isalpha(static_cast<unsigned char>(cur.peek()))) cur.fail("expected a name");
  std::string n;
  while (std::isalnum(static_cast<unsigned char>(cur.peek()))) { n += cur.peek(); cur.advance(); }
  return n;
}

struct PropParser {
  LCursor cur;
  const SymbolTable* symbols;
  std::set<std::string> bound;  // index variables in scope

  IndexExpr parse_index() {
    cur.skip_ws();
    if (std::isdigit(static_cast<unsigned char>(cur.peek()))) {
      uint32_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(cur.peek()))) {
        v = v * 10 + static_cast<uint32_t>(cur.peek() - '0');
        cur.advance();
      }
      return IndexExpr{v};
    }
    std::string name = parse_lname(cur);
    if (!bound.count(name)) cur.fail("unbound index variable '" + name + "'");
    return IndexExpr{name};
  }

  FTerm parse_fterm() {
    cur.skip_ws();
    char c = cur.peek();
    if (c == '{') {
      cur.advance();
      std::vector<FTerm> parts;
      parts.push_back(parse_fterm());
      while (cur.eat(',')) parts.push_back(parse_fterm());
      cur.expect('}');
      FTerm payload = parts.size() == 1 ? parts[0] : fterm_tuple(std::move(parts));
      cur.expect('_');
      bool braced = cur.eat('{');
      FTerm key = parse_fterm();
      if (braced) cur.expect('}');
      return fterm_enc(std::move(payload), std::move(key));
    }
    if (c == '(') {
      cur.advance();
      std::vector<FTerm> parts;
      parts.push_back(parse_fterm());
      while (cur.eat(',')) parts.push_back(parse_fterm());
      cur.expect(')');
      return parts.size() == 1 ? parts[0] : fterm_tuple(std::move(parts));
    }
    std::string name = parse_lname(cur);
    std::optional<IndexExpr> idx;
    if (cur.peek() == '[') {
      cur.advance();
      idx = parse_index();
      cur.expect(']');
    }
    FTerm atom = fterm_atom(symbols->classify(name), name, std::move(idx));
    cur.skip_ws();
    // Key marks need the explicit ^+ / ^- form here; a bare '-' would be
    // ambiguous with the implication arrow.
    if (cur.peek() == '^' && (cur.peek(1) == '+' || cur.peek(1) == '-')) {
      cur.advance();
      char mark = cur.peek();
      cur.advance();
      return mark == '+' ? fterm_pub(atom) : fterm_priv(atom);
    }
    return atom;
  }

  // atom := NAME '[' index ']' '=' fterm  |  'K' '|>' fterm  |  'true'
  Formula parse_atom() {
    cur.skip_ws();
    if (cur.eat('(')) {
      Formula f = parse_formula();
      cur.expect(')');
      return f;
    }
    if (cur.eat_word("true")) {
      // Sugar: a derivability atom on the intruder identity, which is in
      // every reachable knowledge.
      return f_derives(fterm_atom(TermKind::Identity, "I"));
    }
    if (cur.eat_word("not")) return f_not(parse_atom());
    if (cur.eat_word("forall")) return parse_quant(Quantifier::Forall);
    if (cur.eat_word("exists")) return parse_quant(Quantifier::Exists);

    std::string name = parse_lname(cur);
    cur.skip_ws();
    if (name == "K" && cur.peek() == '|') {
      cur.advance();
      cur.expect('>');
      return f_derives(parse_fterm());
    }
    cur.expect('[');
    IndexExpr idx = parse_index();
    cur.expect(']');
    cur.expect('=');
    return f_eq(name, idx, parse_fterm());
  }

  Formula parse_quant(Quantifier q) {
    std::string ivar = parse_lname(cur);
    cur.expect(':');
    std::string principal = parse_lname(cur);
    cur.expect('.');
    bool inserted = bound.insert(ivar).second;
    if (!inserted) cur.fail("index variable '" + ivar + "' already in scope");
    Formula body = parse_formula();
    bound.erase(ivar);
    return f_quant(q, ivar, principal, body);
  }

  // Precedence: not > and > or > ->
  Formula parse_conj() {
    Formula f = parse_atom();
    while (cur.eat_word("and")) f = f_and(f, parse_atom());
    return f;
  }
  Formula parse_disj() {
    Formula f = parse_conj();
    while (cur.eat_word("or")) f = f_or(f, parse_conj());
    return f;
  }
  Formula parse_formula() {
    Formula f = parse_disj();
    cur.skip_ws();
    if (cur.peek() == '-' && cur.peek(1) == '>') {
      cur.advance();
      cur.advance();
      Formula rhs = parse_formula();
      return f_or(f_not(f), rhs);  // p -> q is sugar for not p or q
    }
    return f;
  }
};

// Makes quantifier index variables pairwise distinct.
Formula alpha_rename(const Formula& f, std::set<std::string>& used) {
  switch (f->kind) {
    case FormulaKind::Quant: {
      std::string name = f->ivar;
      Formula body = f->children[0];
      if (used.count(name)) {
        std::string fresh;
        for (uint32_t n = 1;; ++n) {
          fresh = name + std::to_string(n);
          if (!used.count(fresh)) break;
        }
        body = rename_ivar(body, name, fresh);
        name = fresh;
      }
      used.insert(name);
      return f_quant(f->q, name, f->principal, alpha_rename(body, used));
    }
    case FormulaKind::Not:
      return f_not(alpha_rename(f->children[0], used));
    case FormulaKind::And:
      return f_and(alpha_rename(f->children[0], used), alpha_rename(f->children[1], used));
    case FormulaKind::Or:
      return f_or(alpha_rename(f->children[0], used), alpha_rename(f->children[1], used));
    default:
      return f;
  }
}

}  // namespace

Formula parse_property(std::string_view source, const SymbolTable& symbols) {
  PropParser p{LCursor{source}, &symbols, {}};
  Formula f = p.parse_formula();
  p.cur.skip_ws();
  if (p.cur.pos != source.size()) p.cur.fail("trailing input after formula");
  if (!is_closed(f)) p.cur.fail("formula is not closed");
  std::set<std::string> used;
  return alpha_rename(f, used);
}

// ---------------------------------------------------------------------------
// Evaluation (the model relation)
// ---------------------------------------------------------------------------

namespace {

bool eval_rec(const EvalContext& ctx, const Formula& f, std::map<std::string, uint32_t>& env) {
  switch (f->kind) {
    case FormulaKind::Eq: {
      uint32_t idx;
      if (std::holds_alternative<uint32_t>(f->var_index)) {
        idx = std::get<uint32_t>(f->var_index);
      } else {
        auto it = env.find(std::get<std::string>(f->var_index));
        if (it == env.end())
          throw std::logic_error("unbound index variable in Eq atom");
        idx = it->second;
      }
      auto it = ctx.chi.find(VarKey{f->var_name, idx});
      if (it == ctx.chi.end()) return false;  // unassigned variables falsify Eq
      return equal(it->second, resolve(f->term, env));
    }
    case FormulaKind::Derives:
      return ctx.kappa.derives(resolve(f->term, env));
    case FormulaKind::Quant: {
      std::vector<uint32_t> domain = ctx.kappa.instance_indices(f->principal);
      auto outer = env.find(f->ivar);
      std::optional<uint32_t> saved;
      if (outer != env.end()) saved = outer->second;
      bool result = f->q == Quantifier::Forall;
      for (uint32_t n : domain) {
        env[f->ivar] = n;
        bool ok = eval_rec(ctx, f->children[0], env);
        if (f->q == Quantifier::Forall ? !ok : ok) {
          result = !result;
          break;
        }
      }
      if (saved) env[f->ivar] = *saved; else env.erase(f->ivar);
      return result;
    }
    case FormulaKind::Not:
      return !eval_rec(ctx, f->children[0], env);
    case FormulaKind::And:
      return eval_rec(ctx, f->children[0], env) && eval_rec(ctx, f->children[1], env);
    case FormulaKind::Or:
      return eval_rec(ctx, f->children[0], env) || eval_rec(ctx, f->children[1], env);
  }
  return false;
}

}  // namespace

bool evaluate(const EvalContext& ctx, const Formula& f) {
  std::map<std::string, uint32_t> env;
  return eval_rec(ctx, f, env);
}

}  // namespace cipmc
