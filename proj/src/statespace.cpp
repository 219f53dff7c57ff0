#include "cipmc/statespace.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace cipmc {

const PrincipalDef* Scenario::find_principal(const std::string& name) const {
  for (const auto& d : protocol)
    if (d.name == name) return &d;
  return nullptr;
}

std::vector<const BindTemplate*> Scenario::templates_for(const std::string& principal) const {
  std::vector<const BindTemplate*> out;
  for (const auto& t : bind_templates)
    if (t.principal == principal) out.push_back(&t);
  return out;
}

void Scenario::validate() const {
  if (max_instances < 1) throw std::invalid_argument("max_instances must be at least 1");
  for (const auto& t : initial_knowledge)
    if (!is_ground(t))
      throw std::invalid_argument("initial knowledge term is not ground: " + render(t));
  for (const auto& bt : bind_templates) {
    const PrincipalDef* def = find_principal(bt.principal);
    if (!def) throw std::invalid_argument("bind rule for unknown principal " + bt.principal);
    for (const auto& [var, value] : bt.values) {
      if (!def->find_open_var(var))
        throw std::invalid_argument("bind rule for unknown open variable " + var + " of " +
                                    bt.principal);
      if (value.kind == BindValue::Kind::Partner && !find_principal(value.partner_principal))
        throw std::invalid_argument("bind rule references unknown principal @" +
                                    value.partner_principal);
    }
  }
}

std::vector<Term> default_initial_knowledge() {
  Term i = identity("I");
  return {i, pub_key(i), priv_key(i)};
}

bool is_join(const Transition& t) { return std::holds_alternative<JoinData>(t); }

std::string render_transition(const Transition& t) {
  if (const auto* j = std::get_if<JoinData>(&t)) {
    std::string out = "join " + j->principal + "_" + std::to_string(j->index);
    if (!j->binding.empty()) out += " " + render(j->binding);
    return out;
  }
  if (const auto* o = std::get_if<OutData>(&t))
    return "out[" + std::to_string(o->instance_index) + "] " + render(o->message);
  const auto& i = std::get<InData>(t);
  return "in[" + std::to_string(i.instance_index) + "] " + render(i.pattern) + " " +
         render(i.sigma);
}

const Instance* State::find_instance(uint32_t index) const {
  for (const auto& inst : context)
    if (inst.index == index) return &inst;
  return nullptr;
}

std::string State::context_summary() const {
  std::vector<const Instance*> sorted;
  for (const auto& inst : context) sorted.push_back(&inst);
  std::sort(sorted.begin(), sorted.end(),
            [](const Instance* a, const Instance* b) { return a->index < b->index; });
  std::string out = "{";
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (i) out += ", ";
    out += sorted[i]->label();
  }
  return out + "}";
}

std::string State::dedup_key() const {
  std::ostringstream out;
  for (const auto& inst : context) out << inst.label() << '@' << inst.pc << ';';
  out << '|';
  for (const auto& [k, v] : chi) out << k.str() << '=' << render(v) << ';';
  out << '|';
  for (const auto& t : kappa->base()) out << render(t) << ';';
  out << '|' << next_index << '|' << joins_left << '|';
  for (const auto& [slot, p] : commitments) out << slot << ':' << p << ';';
  return out.str();
}

State initial_state(const Scenario& sc) {
  sc.validate();
  State s;
  s.kappa = std::make_shared<const Knowledge>(Knowledge::analyze(
      sc.initial_knowledge.empty() ? default_initial_knowledge() : sc.initial_knowledge));
  s.next_index = 1;
  s.joins_left = sc.max_instances;
  return s;
}

namespace {

// Identity atoms eligible for a default identity-sorted binding: the
// intruder and already-joined instances, excluding the joining instance's
// own identity unless self-binding is enabled.
std::vector<Term> default_identity_candidates(const State& s, const Scenario& sc,
                                              const std::string& principal, uint32_t index) {
  std::vector<Term> out;
  for (const auto& t : s.kappa->base()) {
    if (t->kind != TermKind::Identity) continue;
    if (!sc.allow_self_binding && t->name == principal && t->index && *t->index == index)
      continue;
    out.push_back(t);
  }
  // The intruder identity first, then joined identities by index.
  std::sort(out.begin(), out.end(), [](const Term& a, const Term& b) {
    bool ai = !a->index, bi = !b->index;
    if (ai != bi) return ai;
    if (ai && bi) return a->name < b->name;
    if (*a->index != *b->index) return *a->index < *b->index;
    return a->name < b->name;
  });
  if (sc.allow_self_binding) {
    // The joining instance's own identity is admissible as well.
    Term self = identity(principal, index);
    if (std::none_of(out.begin(), out.end(), [&](const Term& t) { return equal(t, self); }))
      out.push_back(self);
  }
  return out;
}

// Candidates for a @P partner reference: joined instances of P, then slots
// still open for P (unassigned or already committed to P).
std::vector<std::pair<Term, std::optional<uint32_t>>> partner_candidates(
    const State& s, const Scenario& sc, const std::string& partner, uint32_t own_index) {
  std::vector<std::pair<Term, std::optional<uint32_t>>> out;
  for (const auto& inst : s.context)
    if (inst.principal == partner) out.push_back({identity(partner, inst.index), std::nullopt});
  uint32_t last_slot = s.next_index + s.joins_left - 1;
  for (uint32_t slot = s.next_index; slot <= last_slot && slot <= sc.max_instances; ++slot) {
    if (slot == own_index) continue;
    auto it = s.commitments.find(slot);
    if (it != s.commitments.end() && it->second != partner) continue;
    bool commits = it == s.commitments.end();
    out.push_back({identity(partner, slot), commits ? std::optional<uint32_t>(slot) : std::nullopt});
  }
  return out;
}

void enumerate_bindings(const State& s, const Scenario& sc, const PrincipalDef& def,
                        uint32_t index, std::vector<Transition>& out) {
  std::vector<const BindTemplate*> templates = sc.templates_for(def.name);

  if (templates.empty()) {
    // Default rule: identity-sorted vars range over identity atoms in kappa;
    // key-sorted vars have no default candidates.
    for (const auto& ov : def.open_vars)
      if (ov.sort == Sort::Key) return;
    std::vector<Substitution> partial{Substitution{}};
    for (const auto& ov : def.open_vars) {
      std::vector<Substitution> next;
      for (const auto& cand : default_identity_candidates(s, sc, def.name, index))
        for (const auto& base : partial) {
          Substitution sigma = base;
          sigma[VarKey{ov.name, index}] = cand;
          next.push_back(std::move(sigma));
        }
      partial = std::move(next);
    }
    for (auto& sigma : partial) out.push_back(JoinData{def.name, index, std::move(sigma)});
    return;
  }

  for (const BindTemplate* bt : templates) {
    // A template must cover every open variable.
    if (bt->values.size() != def.open_vars.size()) continue;
    std::vector<Substitution> partial{Substitution{}};
    for (const auto& ov : def.open_vars) {
      const BindValue* value = nullptr;
      for (const auto& [var, v] : bt->values)
        if (var == ov.name) value = &v;
      if (!value) { partial.clear(); break; }

      std::vector<Substitution> next;
      if (value->kind == BindValue::Kind::Ground) {
        for (auto& base : partial) {
          base[VarKey{ov.name, index}] = value->term;
          next.push_back(std::move(base));
        }
      } else {
        for (const auto& [cand, commit_slot] : partner_candidates(s, sc, value->partner_principal, index))
          for (const auto& base : partial) {
            Substitution sigma = base;
            sigma[VarKey{ov.name, index}] = cand;
            if (commit_slot) sigma[VarKey{"@commit", *commit_slot}] = cand;
            next.push_back(std::move(sigma));
          }
      }
      partial = std::move(next);
    }
    for (auto& sigma : partial) out.push_back(JoinData{def.name, index, std::move(sigma)});
  }
}

}  // namespace

std::vector<Transition> join_transitions(const State& s, const Scenario& sc) {
  std::vector<Transition> out;
  if (s.joins_left == 0) return out;
  uint32_t index = s.next_index;
  auto committed = s.commitments.find(index);
  for (const auto& def : sc.protocol) {
    if (committed != s.commitments.end() && committed->second != def.name) continue;
    enumerate_bindings(s, sc, def, index, out);
  }
  return out;
}

namespace {

// A variable that later serves as a key owner (the receiver applies v^+ or
// v^- as a key) must stand for an identity; assignments binding it to
// anything else cannot continue the script and are not generated.
bool keys_stay_wellformed(const Term& t, const Substitution& env) {
  if (t->kind == TermKind::PubKey || t->kind == TermKind::PrivKey) {
    const Term& owner = t->owner();
    if (owner->kind == TermKind::Var) {
      auto it = env.find(VarKey{owner->name, owner->index});
      if (it != env.end() && it->second->kind != TermKind::Identity) return false;
    }
    return true;
  }
  for (const auto& c : t->children)
    if (!keys_stay_wellformed(c, env)) return false;
  return true;
}

bool sigma_fits_script(const Instance& inst, const Substitution& sigma) {
  for (size_t i = inst.pc + 1; i < inst.actions.size(); ++i)
    if (!keys_stay_wellformed(inst.actions[i].message, sigma)) return false;
  return true;
}

}  // namespace

std::vector<Transition> comm_transitions(const State& s) {
  std::vector<Transition> out;
  for (const auto& inst : s.context) {
    if (inst.done()) continue;
    const Action& a = inst.head();
    Term msg = substitute_vars(a.message, s.chi);
    if (a.kind == Action::Kind::Out) {
      if (!is_ground(msg)) {
        std::vector<VarKey> vars = collect_vars(msg);
        throw std::logic_error("out message of " + inst.label() + " is not ground: unbound " +
                               (vars.empty() ? "term" : vars.front().str()));
      }
      out.push_back(OutData{inst.index, msg});
    } else {
      for (auto& sigma : synthesize_matching(*s.kappa, msg))
        if (sigma_fits_script(inst, sigma))
          out.push_back(InData{inst.index, msg, std::move(sigma)});
    }
  }
  return out;
}

State apply_transition(const State& s, const Transition& t, const Scenario& sc) {
  State next = s;
  if (const auto* j = std::get_if<JoinData>(&t)) {
    const PrincipalDef* def = sc.find_principal(j->principal);
    if (!def) throw std::logic_error("join of unknown principal " + j->principal);
    if (s.find_instance(j->index) || s.joins_left == 0)
      throw std::logic_error("inapplicable join transition");

    // Commitment markers ride along in the binding under the reserved
    // "@commit" name; peel them off before instantiating.
    Substitution binding;
    for (const auto& [k, v] : j->binding) {
      if (k.name == "@commit") {
        next.commitments[*k.index] = v->name;
      } else {
        binding.emplace(k, v);
      }
    }
    next.commitments.erase(j->index);

    Instance inst = instantiate(*def, j->index, binding);
    Term id = identity(j->principal, j->index);
    next.kappa = std::make_shared<const Knowledge>(s.kappa->extend_all({id, pub_key(id)}));
    for (const auto& [k, v] : binding) {
      if (next.chi.count(k)) throw std::logic_error("join rebinds " + k.str());
      next.chi.emplace(k, v);
    }
    next.context.push_back(std::move(inst));
    next.joins_left = s.joins_left - 1;
    next.next_index = std::max(s.next_index, j->index + 1);
    return next;
  }

  if (const auto* o = std::get_if<OutData>(&t)) {
    const Instance* inst = s.find_instance(o->instance_index);
    if (!inst || inst->done() || inst->head().kind != Action::Kind::Out)
      throw std::logic_error("inapplicable out transition");
    for (auto& copy : next.context)
      if (copy.index == o->instance_index) ++copy.pc;
    next.kappa = std::make_shared<const Knowledge>(s.kappa->extend(o->message));
    return next;
  }

  const auto& in = std::get<InData>(t);
  const Instance* inst = s.find_instance(in.instance_index);
  if (!inst || inst->done() || inst->head().kind != Action::Kind::In)
    throw std::logic_error("inapplicable in transition");
  for (auto& copy : next.context)
    if (copy.index == in.instance_index) ++copy.pc;
  for (const auto& [k, v] : in.sigma) {
    if (next.chi.count(k)) throw std::logic_error("in-step rebinds " + k.str());
    next.chi.emplace(k, v);
  }
  return next;
}

bool is_terminal(const State& s, const Scenario& sc) {
  return join_transitions(s, sc).empty() && comm_transitions(s).empty();
}

bool is_completed(const State& s) {
  return std::all_of(s.context.begin(), s.context.end(),
                     [](const Instance& i) { return i.done(); });
}

std::string render_state(const State& s) {
  std::string out = "< " + s.context_summary() + "\n";
  for (const auto& inst : s.context) out += "  " + render_instance(inst) + "\n";
  out += "  chi = " + render(s.chi) + "\n";
  out += "  kappa = {";
  const auto& base = s.kappa->base();
  for (size_t i = 0; i < base.size(); ++i) {
    if (i) out += ", ";
    out += render(base[i]);
  }
  return out + "} >";
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(' || c == '{') ++depth;
    if (c == ')' || c == '}') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

}  // namespace

ScenarioFile parse_scenario_file(std::string_view source) {
  ScenarioFile f;
  std::istringstream in{std::string(source)};
  std::string raw;
  int lineno = 0;
  bool have_max = false;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto space = line.find_first_of(" \t");
    std::string keyword = space == std::string::npos ? line : line.substr(0, space);
    std::string rest = space == std::string::npos ? "" : trim(line.substr(space));

    if (keyword == "protocol") {
      f.protocol_path = rest;
    } else if (keyword == "property") {
      f.property_path = rest;
    } else if (keyword == "max_instances") {
      f.max_instances = static_cast<uint32_t>(std::stoul(rest));
      have_max = true;
    } else if (keyword == "knowledge") {
      std::vector<Term> terms;
      for (const auto& part : split(rest, ','))
        if (!part.empty()) terms.push_back(parse_term(part));
      f.knowledge = std::move(terms);
    } else if (keyword == "allow_self_binding") {
      f.allow_self_binding = rest == "true" || rest == "1";
    } else if (keyword == "bind") {
      auto colon = rest.find(':');
      if (colon == std::string::npos)
        throw ParseError("bind rule needs 'bind P: var = value, ...'", lineno, 1);
      BindTemplate bt;
      bt.principal = trim(rest.substr(0, colon));
      for (const auto& item : split(rest.substr(colon + 1), ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos)
          throw ParseError("bind item needs 'var = value'", lineno, 1);
        std::string var = trim(item.substr(0, eq));
        std::string value = trim(item.substr(eq + 1));
        BindValue bv;
        if (!value.empty() && value[0] == '@') {
          bv.kind = BindValue::Kind::Partner;
          bv.partner_principal = trim(value.substr(1));
        } else {
          bv.kind = BindValue::Kind::Ground;
          bv.term = parse_term(value);
        }
        bt.values.emplace_back(std::move(var), std::move(bv));
      }
      f.bind_templates.push_back(std::move(bt));
    } else {
      throw ParseError("unknown scenario keyword '" + keyword + "'", lineno, 1);
    }
  }
  if (f.protocol_path.empty()) throw ParseError("scenario misses 'protocol'", lineno, 1);
  if (f.property_path.empty()) throw ParseError("scenario misses 'property'", lineno, 1);
  if (!have_max) throw ParseError("scenario misses 'max_instances'", lineno, 1);
  return f;
}

std::string render_scenario_file(const ScenarioFile& f) {
  std::string out;
  out += "protocol " + f.protocol_path + "\n";
  out += "property " + f.property_path + "\n";
  out += "max_instances " + std::to_string(f.max_instances) + "\n";
  if (f.knowledge) {
    out += "knowledge ";
    for (size_t i = 0; i < f.knowledge->size(); ++i) {
      if (i) out += ", ";
      out += render((*f.knowledge)[i]);
    }
    out += "\n";
  }
  for (const auto& bt : f.bind_templates) {
    out += "bind " + bt.principal + ": ";
    for (size_t i = 0; i < bt.values.size(); ++i) {
      if (i) out += ", ";
      out += bt.values[i].first + " = ";
      out += bt.values[i].second.kind == BindValue::Kind::Partner
                 ? "@" + bt.values[i].second.partner_principal
                 : render(bt.values[i].second.term);
    }
    out += "\n";
  }
  if (f.allow_self_binding) out += "allow_self_binding true\n";
  return out;
}

}  // namespace cipmc
