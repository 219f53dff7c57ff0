#include "cipmc/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace cipmc {

const OpenVar* PrincipalDef::find_open_var(const std::string& n) const {
  for (const auto& ov : open_vars)
    if (ov.name == n) return &ov;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct PCursor {
  std::string_view text;
  size_t pos = 0;
  int line = 1, col = 1;

  char peek() const { return pos < text.size() ? text[pos] : '\0'; }
  void advance() {
    if (pos >= text.size()) return;
    if (text[pos] == '\n') { ++line; col = 1; } else { ++col; }
    ++pos;
  }
  void skip_ws() {
    for (;;) {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) advance();
      if (peek() == '#') {  // comment to end of line
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
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }
  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line, col); }
};

bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)); }
bool name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)); }

std::string parse_name(PCursor& cur) {
  cur.skip_ws();
  if (!name_start(cur.peek())) cur.fail("expected a name");
  std::string n;
  while (name_char(cur.peek())) { n += cur.peek(); cur.advance(); }
  return n;
}

// Name resolution inside one principal body.
struct BodyEnv {
  const std::set<std::string>* principal_names;
  const PrincipalDef* def;
  std::set<std::string> bound;  // binders seen in earlier actions
  std::set<std::string> current_pattern_binders;
  bool in_pattern = false;

  Term resolve(const std::string& name) {
    if (principal_names->count(name)) return identity(name);
    if (def->find_open_var(name) || bound.count(name) ||
        current_pattern_binders.count(name))
      return var_ref(name);
    if (name[0] == 'k') return sym_key(name);
    return nonce(name);
  }
};

Term parse_body_term(PCursor& cur, BodyEnv& env);

std::vector<Term> parse_body_termlist(PCursor& cur, BodyEnv& env, char close) {
  std::vector<Term> parts;
  parts.push_back(parse_body_term(cur, env));
  while (cur.eat(',')) parts.push_back(parse_body_term(cur, env));
  cur.expect(close);
  return parts;
}

Term parse_body_key(PCursor& cur, BodyEnv& env) {
  cur.skip_ws();
  bool braced = cur.eat('{');
  Term k = parse_body_term(cur, env);
  if (braced) cur.expect('}');
  if (!(is_key(k) || k->kind == TermKind::Var)) cur.fail("encryption key must be a key");
  return k;
}

Term parse_body_atom(PCursor& cur, BodyEnv& env) {
  std::string name = parse_name(cur);
  cur.skip_ws();
  char c = cur.peek();
  bool caret = c == '^';
  if (caret) {
    cur.advance();
    c = cur.peek();
    if (c != '+' && c != '-') cur.fail("expected '+' or '-' after '^'");
  }
  if (c == '+' || c == '-') {
    cur.advance();
    Term owner;
    if (env.principal_names->count(name)) {
      owner = identity(name);
    } else if (env.def->find_open_var(name) || env.bound.count(name) ||
               env.current_pattern_binders.count(name)) {
      owner = var_ref(name);
    } else {
      cur.fail("key owner '" + name + "' is neither a principal nor a variable");
    }
    return c == '+' ? pub_key(owner) : priv_key(owner);
  }
  return env.resolve(name);
}

Term parse_body_term(PCursor& cur, BodyEnv& env) {
  cur.skip_ws();
  char c = cur.peek();
  if (c == '?') {
    if (!env.in_pattern) cur.fail("binder '?' only allowed in in-action patterns");
    cur.advance();
    std::string name = parse_name(cur);
    if (env.def->find_open_var(name)) cur.fail("binder '" + name + "' shadows an open variable");
    if (env.current_pattern_binders.count(name) || env.bound.count(name))
      cur.fail("duplicate binder '" + name + "'");
    env.current_pattern_binders.insert(name);
    return binder(name);
  }
  if (c == '{') {
    cur.advance();
    std::vector<Term> parts = parse_body_termlist(cur, env, '}');
    Term payload = parts.size() == 1 ? parts[0] : tuple(std::move(parts));
    cur.expect('_');
    return enc(std::move(payload), parse_body_key(cur, env));
  }
  if (c == '(') {
    cur.advance();
    std::vector<Term> parts = parse_body_termlist(cur, env, ')');
    return parts.size() == 1 ? parts[0] : tuple(std::move(parts));
  }
  if (name_start(c)) return parse_body_atom(cur, env);
  cur.fail("expected a term");
}

Action parse_action(PCursor& cur, BodyEnv& env) {
  std::string kw = parse_name(cur);
  Action::Kind kind;
  if (kw == "out") kind = Action::Kind::Out;
  else if (kw == "in") kind = Action::Kind::In;
  else cur.fail("expected 'out' or 'in'");

  env.in_pattern = kind == Action::Kind::In;
  env.current_pattern_binders.clear();

  cur.expect('(');
  std::vector<Term> parts = parse_body_termlist(cur, env, ')');
  Term msg = parts.size() == 1 ? parts[0] : tuple(std::move(parts));

  env.bound.insert(env.current_pattern_binders.begin(), env.current_pattern_binders.end());
  env.current_pattern_binders.clear();
  env.in_pattern = false;
  return Action{kind, std::move(msg)};
}

}  // namespace

std::vector<PrincipalDef> parse_protocol(std::string_view source) {
  // First pass: collect principal names so bodies can reference them.
  std::set<std::string> names;
  {
    PCursor scan{source};
    while (!scan.at_end()) {
      std::string name = parse_name(scan);
      if (!names.insert(name).second) scan.fail("duplicate principal '" + name + "'");
      scan.expect(':');
      scan.expect('(');
      int depth = 1;
      while (depth > 0) {
        if (scan.pos >= scan.text.size()) scan.fail("unterminated open-variable list");
        char c = scan.peek();
        if (c == '(') ++depth;
        if (c == ')') --depth;
        scan.advance();
      }
      scan.expect('[');
      depth = 1;
      while (depth > 0) {
        if (scan.pos >= scan.text.size()) scan.fail("unterminated principal body");
        char c = scan.peek();
        if (c == '[') ++depth;
        if (c == ']') --depth;
        scan.advance();
      }
    }
  }

  std::vector<PrincipalDef> defs;
  PCursor cur{source};
  while (!cur.at_end()) {
    PrincipalDef def;
    def.name = parse_name(cur);
    cur.expect(':');
    cur.expect('(');
    cur.skip_ws();
    if (cur.peek() != ')') {
      for (;;) {
        OpenVar ov;
        ov.name = parse_name(cur);
        if (names.count(ov.name)) cur.fail("open variable '" + ov.name + "' clashes with a principal name");
        if (def.find_open_var(ov.name)) cur.fail("duplicate open variable '" + ov.name + "'");
        if (cur.eat(':')) {
          std::string sort = parse_name(cur);
          if (sort == "id") ov.sort = Sort::Identity;
          else if (sort == "key") ov.sort = Sort::Key;
          else cur.fail("unknown sort '" + sort + "' (expected 'id' or 'key')");
        }
        def.open_vars.push_back(std::move(ov));
        if (!cur.eat(',')) break;
      }
    }
    cur.expect(')');
    cur.expect('[');

    BodyEnv env{&names, &def, {}, {}, false};
    cur.skip_ws();
    if (cur.peek() != ']') {
      for (;;) {
        def.actions.push_back(parse_action(cur, env));
        if (!cur.eat(';')) break;
      }
    }
    cur.expect(']');
    defs.push_back(std::move(def));
  }
  return defs;
}

// ---------------------------------------------------------------------------
// Pretty-printer
// ---------------------------------------------------------------------------

std::string render_action(const Action& a) {
  std::string out = a.kind == Action::Kind::Out ? "out(" : "in(";
  if (a.message->kind == TermKind::Tuple) {
    for (size_t i = 0; i < a.message->children.size(); ++i) {
      if (i) out += ", ";
      out += render(a.message->children[i]);
    }
  } else {
    out += render(a.message);
  }
  return out + ")";
}

std::string render_principal(const PrincipalDef& def) {
  std::string out = def.name + ": (";
  for (size_t i = 0; i < def.open_vars.size(); ++i) {
    if (i) out += ", ";
    out += def.open_vars[i].name;
    if (def.open_vars[i].sort == Sort::Key) out += ":key";
  }
  out += ") [\n";
  for (size_t i = 0; i < def.actions.size(); ++i) {
    out += "  " + render_action(def.actions[i]);
    out += i + 1 < def.actions.size() ? ";\n" : "\n";
  }
  return out + "]\n";
}

std::string render_protocol(const std::vector<PrincipalDef>& defs) {
  std::string out;
  for (const auto& d : defs) out += render_principal(d);
  return out;
}

// ---------------------------------------------------------------------------
// Instantiation
// ---------------------------------------------------------------------------

std::vector<Action> indexed_actions(const PrincipalDef& def, uint32_t index) {
  std::vector<Action> out;
  out.reserve(def.actions.size());
  for (const auto& a : def.actions) out.push_back({a.kind, index_names(a.message, index)});
  return out;
}

Instance instantiate(const PrincipalDef& def, uint32_t index, const Substitution& binding) {
  if (binding.size() != def.open_vars.size())
    throw InvalidBindingError("binding must cover exactly the open variables of " + def.name);
  Substitution open_subst;
  for (const auto& ov : def.open_vars) {
    VarKey key{ov.name, index};
    auto it = binding.find(key);
    if (it == binding.end())
      throw InvalidBindingError("missing binding for open variable " + key.str());
    const Term& value = it->second;
    if (!is_ground(value))
      throw InvalidBindingError("open variable " + key.str() + " bound to a non-ground term");
    if (ov.sort == Sort::Identity && value->kind != TermKind::Identity)
      throw InvalidBindingError("identity-sorted open variable " + key.str() +
                                " bound to non-identity " + render(value));
    if (ov.sort == Sort::Key && !is_key(value))
      throw InvalidBindingError("key-sorted open variable " + key.str() +
                                " bound to non-key " + render(value));
    open_subst.emplace(key, value);
  }

  Instance inst;
  inst.principal = def.name;
  inst.index = index;
  inst.open_binding = open_subst;
  for (auto& a : indexed_actions(def, index))
    inst.actions.push_back({a.kind, substitute_vars(a.message, open_subst)});
  return inst;
}

std::string render_instance(const Instance& inst) {
  std::string out = inst.label() + ": [";
  for (size_t i = inst.pc; i < inst.actions.size(); ++i) {
    if (i > inst.pc) out += "; ";
    out += render_action(inst.actions[i]);
  }
  return out + "]";
}

}  // namespace cipmc
