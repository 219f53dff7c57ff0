#include "cipmc/term.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace cipmc {

namespace {

std::size_t combine(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t node_hash(TermKind kind, const std::string& name,
                      const std::optional<uint32_t>& index,
                      const std::vector<Term>& children) {
  std::size_t h = static_cast<std::size_t>(kind) * 0x9e3779b1u;
  h = combine(h, std::hash<std::string>{}(name));
  h = combine(h, index ? static_cast<std::size_t>(*index) + 1 : 0);
  for (const auto& c : children) h = combine(h, c->hash);
  return h;
}

bool identity_like(const Term& t) {
  return t->kind == TermKind::Identity || t->kind == TermKind::Var ||
         t->kind == TermKind::Binder;
}

}  // namespace

TermNode::TermNode(TermKind k, std::string n, std::optional<uint32_t> i,
                   std::vector<Term> c)
    : kind(k), name(std::move(n)), index(i), children(std::move(c)),
      hash(node_hash(kind, name, index, children)) {}

static Term make(TermKind k, std::string n, std::optional<uint32_t> i,
                 std::vector<Term> c = {}) {
  return std::make_shared<const TermNode>(k, std::move(n), i, std::move(c));
}

Term identity(std::string name, std::optional<uint32_t> index) {
  return make(TermKind::Identity, std::move(name), index);
}
Term nonce(std::string name, std::optional<uint32_t> index) {
  return make(TermKind::Nonce, std::move(name), index);
}
Term sym_key(std::string name, std::optional<uint32_t> index) {
  return make(TermKind::SymKey, std::move(name), index);
}
Term pub_key(Term owner) {
  if (!identity_like(owner))
    throw std::invalid_argument("key owner must be an identity or variable: " + render(owner));
  return make(TermKind::PubKey, "", std::nullopt, {std::move(owner)});
}
Term priv_key(Term owner) {
  if (!identity_like(owner))
    throw std::invalid_argument("key owner must be an identity or variable: " + render(owner));
  return make(TermKind::PrivKey, "", std::nullopt, {std::move(owner)});
}
Term var_ref(std::string name, std::optional<uint32_t> index) {
  return make(TermKind::Var, std::move(name), index);
}
Term binder(std::string name, std::optional<uint32_t> index) {
  return make(TermKind::Binder, std::move(name), index);
}
Term tuple(std::vector<Term> parts) {
  if (parts.size() < 2) throw std::invalid_argument("tuple needs at least 2 parts");
  return make(TermKind::Tuple, "", std::nullopt, std::move(parts));
}
Term enc(Term payload, Term key) {
  if (!(is_key(key) || key->kind == TermKind::Var || key->kind == TermKind::Binder))
    throw std::invalid_argument("encryption key must be a key term: " + render(key));
  return make(TermKind::Enc, "", std::nullopt, {std::move(payload), std::move(key)});
}

int compare(const Term& a, const Term& b) {
  if (a.get() == b.get()) return 0;
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  if (int c = a->name.compare(b->name); c != 0) return c < 0 ? -1 : 1;
  uint64_t ia = a->index ? *a->index + 1ull : 0, ib = b->index ? *b->index + 1ull : 0;
  if (ia != ib) return ia < ib ? -1 : 1;
  if (a->children.size() != b->children.size())
    return a->children.size() < b->children.size() ? -1 : 1;
  for (size_t i = 0; i < a->children.size(); ++i)
    if (int c = compare(a->children[i], b->children[i]); c != 0) return c;
  return 0;
}

bool equal(const Term& a, const Term& b) {
  if (a.get() == b.get()) return true;
  if (a->hash != b->hash) return false;
  return compare(a, b) == 0;
}

bool is_key(const Term& t) {
  return t->kind == TermKind::PubKey || t->kind == TermKind::PrivKey ||
         t->kind == TermKind::SymKey;
}

bool is_ground(const Term& t) {
  switch (t->kind) {
    case TermKind::Var:
    case TermKind::Binder:
      return false;
    case TermKind::PubKey:
    case TermKind::PrivKey:
      return t->owner()->kind == TermKind::Identity;
    default:
      for (const auto& c : t->children)
        if (!is_ground(c)) return false;
      return true;
  }
}

Term complement(const Term& key) {
  switch (key->kind) {
    case TermKind::PubKey:
      return priv_key(key->owner());
    case TermKind::PrivKey:
      return pub_key(key->owner());
    case TermKind::SymKey:
      return key;
    default:
      throw std::invalid_argument("complement of a non-key term: " + render(key));
  }
}

std::string VarKey::str() const {
  return index ? name + "_" + std::to_string(*index) : name;
}

MissingBindingError::MissingBindingError(const VarKey& k)
    : std::runtime_error("unbound binder: " + k.str()), key(k) {}

namespace {

bool match_rec(const Term& p, const Term& t, Substitution& sigma) {
  if (p->kind == TermKind::Binder) {
    // Left-linear patterns: the binder cannot already be bound.
    sigma.emplace(VarKey{p->name, p->index}, t);
    return true;
  }
  if (p->kind == TermKind::Enc) {
    return t->kind == TermKind::Enc &&
           equal(complement(p->key()), t->key()) &&
           match_rec(p->payload(), t->payload(), sigma);
  }
  if (p->kind == TermKind::Tuple) {
    if (t->kind != TermKind::Tuple || p->children.size() != t->children.size())
      return false;
    for (size_t i = 0; i < p->children.size(); ++i)
      if (!match_rec(p->children[i], t->children[i], sigma)) return false;
    return true;
  }
  return equal(p, t);
}

}  // namespace

std::optional<Substitution> match(const Term& pattern, const Term& t) {
  Substitution sigma;
  if (!match_rec(pattern, t, sigma)) return std::nullopt;
  return sigma;
}

Term apply_binders(const Term& pattern, const Substitution& sigma) {
  switch (pattern->kind) {
    case TermKind::Binder: {
      auto it = sigma.find(VarKey{pattern->name, pattern->index});
      if (it == sigma.end()) throw MissingBindingError(VarKey{pattern->name, pattern->index});
      return it->second;
    }
    case TermKind::Tuple: {
      std::vector<Term> parts;
      parts.reserve(pattern->children.size());
      for (const auto& c : pattern->children) parts.push_back(apply_binders(c, sigma));
      return tuple(std::move(parts));
    }
    case TermKind::Enc:
      return enc(apply_binders(pattern->payload(), sigma),
                 apply_binders(pattern->key(), sigma));
    case TermKind::PubKey:
      return pub_key(apply_binders(pattern->owner(), sigma));
    case TermKind::PrivKey:
      return priv_key(apply_binders(pattern->owner(), sigma));
    default:
      return pattern;
  }
}

Term substitute_vars(const Term& t, const Substitution& sigma) {
  switch (t->kind) {
    case TermKind::Var: {
      auto it = sigma.find(VarKey{t->name, t->index});
      return it == sigma.end() ? t : it->second;
    }
    case TermKind::Tuple: {
      std::vector<Term> parts;
      parts.reserve(t->children.size());
      for (const auto& c : t->children) parts.push_back(substitute_vars(c, sigma));
      return tuple(std::move(parts));
    }
    case TermKind::Enc:
      return enc(substitute_vars(t->payload(), sigma), substitute_vars(t->key(), sigma));
    case TermKind::PubKey:
      return pub_key(substitute_vars(t->owner(), sigma));
    case TermKind::PrivKey:
      return priv_key(substitute_vars(t->owner(), sigma));
    default:
      return t;
  }
}

Term wire_form(const Term& pattern) {
  switch (pattern->kind) {
    case TermKind::Enc:
      return enc(wire_form(pattern->payload()), complement(pattern->key()));
    case TermKind::Tuple: {
      std::vector<Term> parts;
      parts.reserve(pattern->children.size());
      for (const auto& c : pattern->children) parts.push_back(wire_form(c));
      return tuple(std::move(parts));
    }
    default:
      return pattern;
  }
}

Term index_names(const Term& t, uint32_t idx) {
  std::optional<uint32_t> index = t->index ? t->index : std::optional<uint32_t>(idx);
  switch (t->kind) {
    case TermKind::Identity:
      return identity(t->name, index);
    case TermKind::Nonce:
      return nonce(t->name, index);
    case TermKind::SymKey:
      return sym_key(t->name, index);
    case TermKind::Var:
      return var_ref(t->name, index);
    case TermKind::Binder:
      return binder(t->name, index);
    case TermKind::Tuple: {
      std::vector<Term> parts;
      for (const auto& c : t->children) parts.push_back(index_names(c, idx));
      return tuple(std::move(parts));
    }
    case TermKind::Enc:
      return enc(index_names(t->payload(), idx), index_names(t->key(), idx));
    case TermKind::PubKey:
      return pub_key(index_names(t->owner(), idx));
    case TermKind::PrivKey:
      return priv_key(index_names(t->owner(), idx));
  }
  return t;
}

namespace {

void walk_leaves(const Term& t, TermKind kind, std::vector<VarKey>& out) {
  if (t->kind == kind) {
    out.push_back(VarKey{t->name, t->index});
    return;
  }
  for (const auto& c : t->children) walk_leaves(c, kind, out);
}

}  // namespace

std::vector<VarKey> collect_binders(const Term& pattern) {
  std::vector<VarKey> out;
  walk_leaves(pattern, TermKind::Binder, out);
  return out;
}

std::vector<VarKey> collect_vars(const Term& t) {
  std::vector<VarKey> out;
  walk_leaves(t, TermKind::Var, out);
  std::vector<VarKey> dedup;
  for (auto& k : out)
    if (std::find(dedup.begin(), dedup.end(), k) == dedup.end()) dedup.push_back(k);
  return dedup;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

void render_rec(const Term& t, std::string& out);

void render_list(const std::vector<Term>& parts, std::string& out) {
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    render_rec(parts[i], out);
  }
}

void render_rec(const Term& t, std::string& out) {
  switch (t->kind) {
    case TermKind::Identity:
    case TermKind::Nonce:
    case TermKind::SymKey:
    case TermKind::Var:
      out += t->name;
      if (t->index) out += "_" + std::to_string(*t->index);
      break;
    case TermKind::Binder:
      out += "?";
      out += t->name;
      if (t->index) out += "_" + std::to_string(*t->index);
      break;
    case TermKind::PubKey:
      render_rec(t->owner(), out);
      out += "^+";
      break;
    case TermKind::PrivKey:
      render_rec(t->owner(), out);
      out += "^-";
      break;
    case TermKind::Tuple:
      out += "(";
      render_list(t->children, out);
      out += ")";
      break;
    case TermKind::Enc:
      out += "{";
      if (t->payload()->kind == TermKind::Tuple)
        render_list(t->payload()->children, out);
      else
        render_rec(t->payload(), out);
      out += "}_{";
      render_rec(t->key(), out);
      out += "}";
      break;
  }
}

}  // namespace

std::string render(const Term& t) {
  std::string out;
  render_rec(t, out);
  return out;
}

std::string render(const Substitution& sigma) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : sigma) {
    if (!first) out += ", ";
    first = false;
    out += k.str() + " -> " + render(v);
  }
  return out + "}";
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

ParseError::ParseError(std::string msg, int line, int col)
    : std::runtime_error(msg + " at " + std::to_string(line) + ":" + std::to_string(col)),
      line(line), col(col) {}

namespace {

struct Cursor {
  std::string_view text;
  size_t pos = 0;
  int line = 1, col = 1;

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' ||
                                 text[pos] == '\n' || text[pos] == '\r')) {
      advance();
    }
  }
  char peek() const { return pos < text.size() ? text[pos] : '\0'; }
  void advance() {
    if (pos >= text.size()) return;
    if (text[pos] == '\n') { ++line; col = 1; } else { ++col; }
    ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (peek() == c) { advance(); return true; }
    return false;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c)
      throw ParseError(std::string("expected '") + c + "'", line, col);
    advance();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line, col);
  }
};

bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)); }
bool name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)); }

std::string parse_name(Cursor& cur) {
  cur.skip_ws();
  if (!name_start(cur.peek())) cur.fail("expected a name");
  std::string n;
  while (name_char(cur.peek())) { n += cur.peek(); cur.advance(); }
  return n;
}

std::optional<uint32_t> parse_index_suffix(Cursor& cur) {
  // name_index: underscore immediately followed by digits
  if (cur.peek() != '_') return std::nullopt;
  size_t save_pos = cur.pos;
  int save_line = cur.line, save_col = cur.col;
  cur.advance();
  if (!std::isdigit(static_cast<unsigned char>(cur.peek()))) {
    cur.pos = save_pos; cur.line = save_line; cur.col = save_col;
    return std::nullopt;
  }
  uint32_t v = 0;
  while (std::isdigit(static_cast<unsigned char>(cur.peek()))) {
    v = v * 10 + static_cast<uint32_t>(cur.peek() - '0');
    cur.advance();
  }
  return v;
}

// Default leaf classification for standalone term text (scenario files,
// knowledge files, traces): uppercase initial -> identity, leading 'k' ->
// symmetric key, otherwise nonce.
Term default_leaf(const std::string& name, std::optional<uint32_t> index) {
  if (std::isupper(static_cast<unsigned char>(name[0]))) return identity(name, index);
  if (name[0] == 'k') return sym_key(name, index);
  return nonce(name, index);
}

Term parse_term_rec(Cursor& cur);

Term parse_atomref(Cursor& cur) {
  std::string name = parse_name(cur);
  std::optional<uint32_t> index = parse_index_suffix(cur);
  // key marks: ^+ / ^- or bare +/-
  bool caret = cur.peek() == '^';
  size_t save_pos = cur.pos;
  int save_line = cur.line, save_col = cur.col;
  if (caret) cur.advance();
  if (cur.peek() == '+' || cur.peek() == '-') {
    bool pub = cur.peek() == '+';
    cur.advance();
    Term owner = identity(name, index);
    return pub ? pub_key(owner) : priv_key(owner);
  }
  if (caret) { cur.pos = save_pos; cur.line = save_line; cur.col = save_col; }
  return default_leaf(name, index);
}

Term parse_key(Cursor& cur) {
  cur.skip_ws();
  if (cur.eat('{')) {
    Term k = parse_term_rec(cur);
    cur.expect('}');
    return k;
  }
  return parse_atomref(cur);
}

std::vector<Term> parse_termlist(Cursor& cur, char close) {
  std::vector<Term> parts;
  parts.push_back(parse_term_rec(cur));
  while (cur.eat(',')) parts.push_back(parse_term_rec(cur));
  cur.expect(close);
  return parts;
}

Term parse_term_rec(Cursor& cur) {
  cur.skip_ws();
  char c = cur.peek();
  if (c == '?') {
    cur.advance();
    std::string name = parse_name(cur);
    return binder(name, parse_index_suffix(cur));
  }
  if (c == '{') {
    cur.advance();
    std::vector<Term> parts = parse_termlist(cur, '}');
    Term payload = parts.size() == 1 ? parts[0] : tuple(std::move(parts));
    cur.expect('_');
    Term key = parse_key(cur);
    if (!(is_key(key) || key->kind == TermKind::Var || key->kind == TermKind::Binder))
      cur.fail("encryption key must be a key term");
    return enc(std::move(payload), std::move(key));
  }
  if (c == '(') {
    cur.advance();
    std::vector<Term> parts = parse_termlist(cur, ')');
    return parts.size() == 1 ? parts[0] : tuple(std::move(parts));
  }
  if (name_start(c)) return parse_atomref(cur);
  cur.fail("expected a term");
}

}  // namespace

Term parse_term(std::string_view text) {
  Cursor cur{text};
  Term t = parse_term_rec(cur);
  cur.skip_ws();
  if (cur.pos != text.size()) cur.fail("trailing input after term");
  return t;
}

}  // namespace cipmc
