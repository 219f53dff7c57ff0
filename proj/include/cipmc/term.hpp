#pragma once

// Ground message algebra and patterns.
//
// A Term is an immutable tree shared via shared_ptr. Ground terms are the
// messages exchanged on the wire; patterns additionally contain binder
// leaves (?x) and, before instantiation, references to protocol variables.
// Encryption nodes store a payload and a key; in an input pattern the key
// position holds the *decryption* key the receiver applies, so matching a
// wire message {m}_{K} against a pattern {p}_{K'} requires K = complement(K').

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cipmc {

enum class TermKind : uint8_t {
  Identity,  // principal identity, optionally indexed: A, A_1, I
  Nonce,     // indexed fresh value: na_1
  SymKey,    // symmetric key: kab, optionally indexed
  PubKey,    // K^+ of an identity-like owner
  PrivKey,   // K^- of an identity-like owner
  Var,       // reference to a variable bound via chi (open var or earlier binder)
  Binder,    // ?x in an input pattern
  Tuple,     // ordered parts, length >= 2
  Enc,       // children = {payload, key}
};

class TermNode;
using Term = std::shared_ptr<const TermNode>;

class TermNode {
 public:
  TermKind kind;
  std::string name;                 // atoms, Var, Binder
  std::optional<uint32_t> index;    // instance index on indexed atoms/vars
  std::vector<Term> children;       // PubKey/PrivKey: {owner}; Enc: {payload, key}; Tuple: parts
  std::size_t hash;

  TermNode(TermKind k, std::string n, std::optional<uint32_t> i, std::vector<Term> c);

  const Term& owner() const { return children[0]; }    // PubKey/PrivKey
  const Term& payload() const { return children[0]; }  // Enc
  const Term& key() const { return children[1]; }      // Enc
};

// Construction (validating factories).
Term identity(std::string name, std::optional<uint32_t> index = std::nullopt);
Term nonce(std::string name, std::optional<uint32_t> index = std::nullopt);
Term sym_key(std::string name, std::optional<uint32_t> index = std::nullopt);
Term pub_key(Term owner);
Term priv_key(Term owner);
Term var_ref(std::string name, std::optional<uint32_t> index = std::nullopt);
Term binder(std::string name, std::optional<uint32_t> index = std::nullopt);
Term tuple(std::vector<Term> parts);
Term enc(Term payload, Term key);

bool equal(const Term& a, const Term& b);
int compare(const Term& a, const Term& b);  // total structural order

struct TermLess {
  bool operator()(const Term& a, const Term& b) const { return compare(a, b) < 0; }
};

bool is_key(const Term& t);     // PubKey | PrivKey | SymKey
bool is_ground(const Term& t);  // no Var/Binder leaves, key owners are identities

// PrivKey(A) <-> PubKey(A); symmetric keys are their own complement.
// Throws std::invalid_argument on non-key input.
Term complement(const Term& key);

// An indexed variable name; the key type of substitutions and chi.
struct VarKey {
  std::string name;
  std::optional<uint32_t> index;
  auto operator<=>(const VarKey&) const = default;
  std::string str() const;
};

using Substitution = std::map<VarKey, Term>;

// Pattern matching with the key-complement convention. `pattern` may contain
// binders but its non-binder leaves must be ground; `t` must be ground.
// Returns the unique substitution sigma with apply_binders(pattern, sigma)
// key-complement-equal to t, or nullopt if none exists.
std::optional<Substitution> match(const Term& pattern, const Term& t);

// Replaces binder leaves; throws MissingBindingError when a binder is unbound.
Term apply_binders(const Term& pattern, const Substitution& sigma);

// Replaces Var leaves found in sigma; unmapped Vars are left in place.
Term substitute_vars(const Term& t, const Substitution& sigma);

// The message shape the intruder must place on the wire to satisfy an input
// pattern: every encryption key position is replaced by its complement.
Term wire_form(const Term& pattern);

// Suffixes every unindexed name occurrence with the instance index (eq-style
// instantiation of a principal body).
Term index_names(const Term& t, uint32_t idx);

// Binder leaves in left-to-right order.
std::vector<VarKey> collect_binders(const Term& pattern);
// Var leaves in left-to-right order (with duplicates removed).
std::vector<VarKey> collect_vars(const Term& t);

class MissingBindingError : public std::runtime_error {
 public:
  explicit MissingBindingError(const VarKey& k);
  VarKey key;
};

// Canonical text rendering: {m1,m2}_{K} for encryptions, (m1,...,mn) for
// tuples, A^+ / A^- for keys, name_index for indexed atoms, ?x for binders.
// render/parse_term round-trip to structurally equal terms.
std::string render(const Term& t);
std::string render(const Substitution& sigma);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string msg, int line, int col);
  int line, col;
};

// Parses the canonical rendering of a ground-ish term (no Var leaves are
// produced; names are classified by convention: leading uppercase ->
// identity, leading 'k' -> symmetric key, otherwise nonce).
Term parse_term(std::string_view text);

}  // namespace cipmc
