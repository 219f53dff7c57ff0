#pragma once

// The security-formula-dependent heuristic: two mutually recursive weighting
// functions over the join tree.
//
// weigh_state (states):
//   - if the state has outgoing join transitions: the maximum of
//     weigh_transition over them;
//   - else if the residue formula is "forall i:A. phi'" and kappa holds no
//     instance of A: NegInfinity (no path below can falsify the formula);
//   - else 0.
//
// weigh_transition (join transitions into s' with knowledge kappa'):
//   1. forall i:A. phi'  and kappa' has an A-instance:  1 + weigh_state(s', phi')
//   2. exists i:A. phi'  and kappa' has none:           1 + weigh_state(s', phi)
//   3. exists i:A. phi'  and kappa' has an A-instance:  weigh_state(s', phi')
//   4. forall i:A. phi'  and kappa' has none:           weigh_state(s', phi)
//   5. phi quantifier-free:                             0
// Cases 1 and 3 consume the leading quantifier; the five guards are mutually
// exclusive and total for PNF formulas. A NegInfinity operand absorbs the
// "1 +" (a doomed subtree cannot become promising).
//
// Weights order the search toward contexts that can falsify the property;
// NegInfinity marks subtrees that provably cannot and may be pruned.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cipmc/logic.hpp"
#include "cipmc/statespace.hpp"

namespace cipmc {

// An element of N u {-inf} with max and saturating +1.
class HeuristicValue {
 public:
  static HeuristicValue neg_infinity() { return HeuristicValue{}; }
  static HeuristicValue finite(uint32_t v) { return HeuristicValue{v}; }

  bool is_neg_infinity() const { return !value_.has_value(); }
  uint32_t value() const { return *value_; }

  HeuristicValue plus_one() const {
    return value_ ? finite(*value_ + 1) : neg_infinity();
  }
  static HeuristicValue max(HeuristicValue a, HeuristicValue b) {
    if (a.is_neg_infinity()) return b;
    if (b.is_neg_infinity()) return a;
    return finite(std::max(*a.value_, *b.value_));
  }

  bool operator==(const HeuristicValue&) const = default;
  bool operator<(const HeuristicValue& o) const {
    if (is_neg_infinity()) return !o.is_neg_infinity();
    if (o.is_neg_infinity()) return false;
    return *value_ < *o.value_;
  }

  std::string str() const { return value_ ? std::to_string(*value_) : "-inf"; }

 private:
  HeuristicValue() = default;
  explicit HeuristicValue(uint32_t v) : value_(v) {}
  std::optional<uint32_t> value_;
};

// `phi` must be in PNF; throws std::invalid_argument otherwise.
HeuristicValue weigh_state(const State& s, const Formula& phi, const Scenario& sc);

// `t` must be a join transition departing from `s`; `phi` in PNF.
HeuristicValue weigh_transition(const State& s, const Transition& t, const Formula& phi,
                                const Scenario& sc);
// Also reports which of the five cases fired.
HeuristicValue weigh_transition(const State& s, const Transition& t, const Formula& phi,
                                const Scenario& sc, int& fired_case);

struct WeightedNode {
  State state;
  int parent = -1;
  std::optional<Transition> incoming;
  Formula residue;          // subformula this node is weighted against
  HeuristicValue h_state = HeuristicValue::finite(0);
  HeuristicValue h_edge = HeuristicValue::finite(0);  // weight of incoming edge
  int edge_case = 0;        // Definition case (1..5) of the incoming edge
  std::vector<int> children;
  bool pruned = false;      // h_state is -inf
};

// The join tree with every state and edge annotated; each node is weighted
// exactly once.
struct WeightedJoinTree {
  std::vector<WeightedNode> nodes;  // nodes[0] is the root

  std::vector<int> leaves() const;         // nodes without children
  std::vector<int> pruned_nodes() const;   // h_state == -inf
  // Edge weights root-to-node (empty for the root).
  std::vector<HeuristicValue> path_weights(int node) const;
  std::vector<Transition> path_transitions(int node) const;
};

// `phi` is normalized with pnf() internally.
WeightedJoinTree build_weighted_tree(const Scenario& sc, const Formula& phi);

// Graphviz export: node label = context summary + weight, edge label = edge
// weight, pruned subtrees dashed.
std::string to_dot(const WeightedJoinTree& tree);

}  // namespace cipmc
