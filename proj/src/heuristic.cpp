#include "cipmc/heuristic.hpp"

#include <algorithm>
#include <cassert>

namespace cipmc {

namespace {

void require_pnf(const Formula& phi) {
  if (!is_pnf(phi)) throw std::invalid_argument("heuristic requires a PNF formula");
}

struct EdgeWeight {
  HeuristicValue value;
  int fired_case;
  Formula child_residue;
};

HeuristicValue weigh_state_rec(const State& s, const Formula& phi, const Scenario& sc);

EdgeWeight weigh_edge(const State& target, const Formula& phi, const Scenario& sc) {
  bool quantified = phi->kind == FormulaKind::Quant;
  bool forall = quantified && phi->q == Quantifier::Forall;
  bool present = quantified && target.kappa->has_instance_of(phi->principal);

  // The five guards are mutually exclusive; exactly one fires.
  int guards = 0;
  if (quantified && forall && present) ++guards;
  if (quantified && !forall && !present) ++guards;
  if (quantified && !forall && present) ++guards;
  if (quantified && forall && !present) ++guards;
  if (!quantified) ++guards;
  assert(guards == 1);
  (void)guards;

  if (!quantified) return {HeuristicValue::finite(0), 5, phi};

  const Formula& body = phi->children[0];
  if (forall && present)
    return {weigh_state_rec(target, body, sc).plus_one(), 1, body};
  if (!forall && !present)
    return {weigh_state_rec(target, phi, sc).plus_one(), 2, phi};
  if (!forall && present)
    return {weigh_state_rec(target, body, sc), 3, body};
  return {weigh_state_rec(target, phi, sc), 4, phi};
}

HeuristicValue weigh_state_rec(const State& s, const Formula& phi, const Scenario& sc) {
  std::vector<Transition> joins = join_transitions(s, sc);
  if (!joins.empty()) {
    HeuristicValue best = HeuristicValue::neg_infinity();
    bool first = true;
    for (const auto& t : joins) {
      State target = apply_transition(s, t, sc);
      HeuristicValue w = weigh_edge(target, phi, sc).value;
      best = first ? w : HeuristicValue::max(best, w);
      first = false;
    }
    return best;
  }
  if (phi->kind == FormulaKind::Quant && phi->q == Quantifier::Forall &&
      !s.kappa->has_instance_of(phi->principal))
    return HeuristicValue::neg_infinity();
  return HeuristicValue::finite(0);
}

}  // namespace

HeuristicValue weigh_state(const State& s, const Formula& phi, const Scenario& sc) {
  require_pnf(phi);
  return weigh_state_rec(s, phi, sc);
}

HeuristicValue weigh_transition(const State& s, const Transition& t, const Formula& phi,
                                const Scenario& sc, int& fired_case) {
  require_pnf(phi);
  if (!is_join(t)) throw std::invalid_argument("weigh_transition requires a join transition");
  EdgeWeight w = weigh_edge(apply_transition(s, t, sc), phi, sc);
  fired_case = w.fired_case;
  return w.value;
}

HeuristicValue weigh_transition(const State& s, const Transition& t, const Formula& phi,
                                const Scenario& sc) {
  int ignored;
  return weigh_transition(s, t, phi, sc, ignored);
}

std::vector<int> WeightedJoinTree::leaves() const {
  std::vector<int> out;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].children.empty()) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> WeightedJoinTree::pruned_nodes() const {
  std::vector<int> out;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].pruned) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<HeuristicValue> WeightedJoinTree::path_weights(int node) const {
  std::vector<HeuristicValue> out;
  for (int cur = node; cur > 0; cur = nodes[cur].parent) out.push_back(nodes[cur].h_edge);
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<Transition> WeightedJoinTree::path_transitions(int node) const {
  std::vector<Transition> out;
  for (int cur = node; cur > 0; cur = nodes[cur].parent) out.push_back(*nodes[cur].incoming);
  std::reverse(out.begin(), out.end());
  return out;
}

namespace {

// Post-order construction: children are annotated before the parent's max.
int build_node(WeightedJoinTree& tree, State state, int parent, Formula residue,
               const Scenario& sc) {
  int id = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(WeightedNode{});
  State s = state;  // local copy: recursive calls below reallocate the node vector
  tree.nodes[id].state = std::move(state);
  tree.nodes[id].parent = parent;
  tree.nodes[id].residue = residue;

  std::vector<Transition> joins = join_transitions(s, sc);
  if (joins.empty()) {
    bool doomed = residue->kind == FormulaKind::Quant &&
                  residue->q == Quantifier::Forall &&
                  !s.kappa->has_instance_of(residue->principal);
    tree.nodes[id].h_state =
        doomed ? HeuristicValue::neg_infinity() : HeuristicValue::finite(0);
    tree.nodes[id].pruned = doomed;
    return id;
  }

  HeuristicValue best = HeuristicValue::neg_infinity();
  bool first = true;
  for (const auto& t : joins) {
    State target = apply_transition(s, t, sc);
    EdgeWeight w = weigh_edge(target, residue, sc);
    int child = build_node(tree, std::move(target), id, w.child_residue, sc);
    tree.nodes[child].incoming = t;
    tree.nodes[child].h_edge = w.value;
    tree.nodes[child].edge_case = w.fired_case;
    tree.nodes[id].children.push_back(child);
    best = first ? w.value : HeuristicValue::max(best, w.value);
    first = false;
  }
  tree.nodes[id].h_state = best;
  tree.nodes[id].pruned = best.is_neg_infinity();
  return id;
}

}  // namespace

WeightedJoinTree build_weighted_tree(const Scenario& sc, const Formula& phi) {
  WeightedJoinTree tree;
  Formula normalized = pnf(phi);
  build_node(tree, initial_state(sc), -1, normalized, sc);
  return tree;
}

std::string to_dot(const WeightedJoinTree& tree) {
  std::string out = "digraph join_tree {\n  node [shape=box, fontname=\"monospace\"];\n";
  // A node is drawn dashed when it lies in a pruned subtree.
  std::vector<bool> in_pruned(tree.nodes.size(), false);
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    in_pruned[i] = n.pruned || (n.parent >= 0 && in_pruned[n.parent]);
    std::string label = n.state.context_summary() + " | " +
                        (n.h_state.is_neg_infinity() ? "−∞" : n.h_state.str());
    out += "  n" + std::to_string(i) + " [label=\"" + label + "\"";
    if (in_pruned[i]) out += ", style=dashed";
    out += "];\n";
  }
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.parent < 0) continue;
    out += "  n" + std::to_string(n.parent) + " -> n" + std::to_string(i) + " [label=\"" +
           (n.h_edge.is_neg_infinity() ? "−∞" : n.h_edge.str()) + "\"";
    if (in_pruned[i]) out += ", style=dashed";
    out += "];\n";
  }
  return out + "}\n";
}

}  // namespace cipmc
