#pragma once

// Dolev-Yao intruder knowledge.
//
// A Knowledge value is a base set of ground messages together with its
// analysis closure: the fixpoint under tuple projection and decryption with
// known complement keys. Derivability (kappa |> m) composes closure elements
// by tupling and encryption, driven by the structure of m, so the decision
// procedure is a structural recursion with no search.
//
// Knowledge values are immutable after construction; extend() returns a new
// value that reuses the already-computed closure as its starting point.

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cipmc/term.hpp"

namespace cipmc {

class Knowledge {
 public:
  Knowledge() = default;

  // Closes `base` under analysis. Terminates: the closure only ever adds
  // subterms of existing elements.
  static Knowledge analyze(const std::vector<Term>& base);

  const std::vector<Term>& base() const { return base_; }
  const std::vector<Term>& analyzed() const { return analyzed_; }

  bool in_base(const Term& t) const;
  bool in_analyzed(const Term& t) const;

  // kappa |> m: m is in the closure, or can be built from derivable parts.
  bool derives(const Term& m) const;

  // base u {m}, closure updated incrementally.
  Knowledge extend(const Term& m) const;
  Knowledge extend_all(const std::vector<Term>& ms) const;

  // Indices n with the bare identity atom P_n in the base (the [P] test of
  // the heuristic and the quantifier domains of the logic).
  std::vector<uint32_t> instance_indices(const std::string& principal) const;
  bool has_instance_of(const std::string& principal) const;

  std::size_t content_hash() const { return hash_; }
  bool same_base(const Knowledge& other) const;

  // One line per closure element, sorted by rendering (debug interface).
  std::string render_closure() const;

 private:
  void recompute(std::set<Term, TermLess> base, std::set<Term, TermLess> seed);

  std::vector<Term> base_;      // sorted, unique
  std::vector<Term> analyzed_;  // sorted, unique; superset of base_
  std::set<Term, TermLess> analyzed_set_;
  std::size_t hash_ = 0;
};

// All substitutions sigma over the binders of `pattern` such that the wire
// form of `pattern` instantiated by sigma is derivable. Binder candidates are
// drawn from the analysis closure, which keeps the enumeration finite.
// Non-binder leaves of `pattern` must be ground.
std::vector<Substitution> synthesize_matching(const Knowledge& k, const Term& pattern);

}  // namespace cipmc
