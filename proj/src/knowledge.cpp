#include "cipmc/knowledge.hpp"

#include <algorithm>
#include <deque>

namespace cipmc {

void Knowledge::recompute(std::set<Term, TermLess> base, std::set<Term, TermLess> seed) {
  // Worklist closure: split tuples, decrypt with known complement keys.
  // Decryptions can unlock earlier opaque terms, so blocked encryptions are
  // revisited whenever a new key appears.
  std::set<Term, TermLess> closed;
  std::deque<Term> work(seed.begin(), seed.end());
  std::vector<Term> blocked;  // encryptions whose decryption key is unknown

  auto push = [&](const Term& t) {
    if (closed.insert(t).second) work.push_back(t);
  };
  for (const auto& t : seed) closed.insert(t);

  while (!work.empty()) {
    Term t = work.front();
    work.pop_front();
    switch (t->kind) {
      case TermKind::Tuple:
        for (const auto& part : t->children) push(part);
        break;
      case TermKind::Enc: {
        Term dec = complement(t->key());
        if (closed.count(dec)) {
          push(t->payload());
        } else {
          blocked.push_back(t);
        }
        break;
      }
      case TermKind::PrivKey:
      case TermKind::PubKey:
      case TermKind::SymKey: {
        // A newly known key may unlock blocked encryptions.
        std::vector<Term> still;
        for (const auto& e : blocked) {
          if (equal(complement(e->key()), t))
            push(e->payload());
          else
            still.push_back(e);
        }
        blocked.swap(still);
        break;
      }
      default:
        break;
    }
  }

  base_.assign(base.begin(), base.end());
  analyzed_.assign(closed.begin(), closed.end());
  analyzed_set_ = std::move(closed);

  hash_ = 0;
  for (const auto& t : base_) hash_ = hash_ * 1099511628211ULL + t->hash;
}

Knowledge Knowledge::analyze(const std::vector<Term>& base) {
  Knowledge k;
  std::set<Term, TermLess> b(base.begin(), base.end());
  k.recompute(b, b);
  return k;
}

bool Knowledge::in_base(const Term& t) const {
  return std::binary_search(base_.begin(), base_.end(), t, TermLess{});
}

bool Knowledge::in_analyzed(const Term& t) const { return analyzed_set_.count(t) > 0; }

bool Knowledge::derives(const Term& m) const {
  if (in_analyzed(m)) return true;
  switch (m->kind) {
    case TermKind::Tuple:
      return std::all_of(m->children.begin(), m->children.end(),
                         [&](const Term& p) { return derives(p); });
    case TermKind::Enc:
      return derives(m->key()) && derives(m->payload());
    default:
      return false;
  }
}

Knowledge Knowledge::extend(const Term& m) const { return extend_all({m}); }

Knowledge Knowledge::extend_all(const std::vector<Term>& ms) const {
  std::set<Term, TermLess> base(base_.begin(), base_.end());
  std::set<Term, TermLess> seed = analyzed_set_;
  bool grew = false;
  for (const auto& m : ms) {
    if (base.insert(m).second) {
      seed.insert(m);
      grew = true;
    }
  }
  if (!grew) return *this;
  Knowledge k;
  k.recompute(std::move(base), std::move(seed));
  return k;
}

std::vector<uint32_t> Knowledge::instance_indices(const std::string& principal) const {
  std::vector<uint32_t> out;
  for (const auto& t : base_)
    if (t->kind == TermKind::Identity && t->name == principal && t->index)
      out.push_back(*t->index);
  std::sort(out.begin(), out.end());
  return out;
}

bool Knowledge::has_instance_of(const std::string& principal) const {
  for (const auto& t : base_)
    if (t->kind == TermKind::Identity && t->name == principal && t->index) return true;
  return false;
}

bool Knowledge::same_base(const Knowledge& other) const {
  if (hash_ != other.hash_ || base_.size() != other.base_.size()) return false;
  for (size_t i = 0; i < base_.size(); ++i)
    if (!equal(base_[i], other.base_[i])) return false;
  return true;
}

std::string Knowledge::render_closure() const {
  std::vector<std::string> lines;
  lines.reserve(analyzed_.size());
  for (const auto& t : analyzed_) lines.push_back(render(t));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += "\n";
  }
  return out;
}

namespace {

// Pattern-directed synthesis. Two routes per subpattern:
//  - replay: any closure element matching the subpattern outright, which
//    also binds binders to components of otherwise opaque messages;
//  - composition: the intruder assembles the wire message itself, driven by
//    the pattern structure (tuple parts; encryption when the wire key is
//    derivable). Bare binders range over the closure.
void solve(const Knowledge& k, const Term& p, std::vector<Substitution>& out) {
  for (const auto& t : k.analyzed())
    if (auto sigma = match(p, t)) out.push_back(std::move(*sigma));

  switch (p->kind) {
    case TermKind::Tuple: {
      std::vector<Substitution> acc{Substitution{}};
      for (const auto& part : p->children) {
        std::vector<Substitution> part_solutions;
        solve(k, part, part_solutions);
        std::vector<Substitution> next;
        for (const auto& base : acc)
          for (const auto& extra : part_solutions) {
            Substitution merged = base;
            merged.insert(extra.begin(), extra.end());
            next.push_back(std::move(merged));
          }
        acc = std::move(next);
        if (acc.empty()) return;
      }
      out.insert(out.end(), acc.begin(), acc.end());
      break;
    }
    case TermKind::Enc:
      // The key position holds the decryption key; the intruder needs its
      // complement to build the wire message.
      if (k.derives(complement(p->key()))) solve(k, p->payload(), out);
      break;
    default:
      break;
  }
}

}  // namespace

std::vector<Substitution> synthesize_matching(const Knowledge& k, const Term& pattern) {
  std::vector<Substitution> all;
  solve(k, pattern, all);

  std::vector<Substitution> out;
  std::set<std::string> seen;
  for (auto& sigma : all) {
    std::string key;
    for (const auto& [var, value] : sigma) key += var.str() + "=" + render(value) + ";";
    if (seen.insert(key).second) out.push_back(std::move(sigma));
  }
  return out;
}

}  // namespace cipmc
