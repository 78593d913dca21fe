#include "dbtab/instance.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "dbtab/errors.hpp"
#include "lexer.hpp"

namespace dbtab {

Formula GroundAtom::to_formula() const {
  std::vector<Term> terms;
  terms.reserve(args.size());
  for (const std::string& a : args) terms.push_back(Term::Constant(a));
  return Formula::Atom(predicate, std::move(terms));
}

GroundAtom GroundAtom::from_formula(const Formula& atom) {
  if (!atom.is_atom()) throw PreconditionError("not an atom: " + atom.str());
  GroundAtom out{atom.predicate(), {}};
  for (const Term& t : atom.terms()) {
    if (!t.is_constant()) throw PreconditionError("atom is not over constants: " + atom.str());
    out.args.push_back(t.name());
  }
  return out;
}

std::string GroundAtom::str() const {
  std::string out = predicate + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ",";
    out += constant_text(args[i]);
  }
  return out + ")";
}

std::string str(const AtomSet& atoms) {
  std::string out = "{";
  bool first = true;
  for (const GroundAtom& a : atoms) {
    if (!first) out += ", ";
    first = false;
    out += a.str();
  }
  return out + "}";
}

Instance::Instance(Schema schema, AtomSet atoms) : schema_(std::move(schema)) {
  for (const GroundAtom& a : atoms) insert(a);
}

void Instance::insert(const GroundAtom& a) {
  if (schema_.arity(a.predicate) != static_cast<int>(a.args.size())) {
    throw SchemaError("arity mismatch for " + a.str());
  }
  atoms_.insert(a);
}

std::vector<std::string> DomainPolicy::fresh_names(const std::set<std::string>& taken, int count) {
  std::vector<std::string> out;
  for (int k = 1; static_cast<int>(out.size()) < count; ++k) {
    std::string name = "_n" + std::to_string(k);
    if (!taken.count(name)) out.push_back(name);
  }
  return out;
}

std::set<std::string> active_domain(const Instance& r) {
  std::set<std::string> out;
  for (const GroundAtom& a : r.atoms()) out.insert(a.args.begin(), a.args.end());
  return out;
}

bool cwa_truth(const Instance& r, const Formula& lit) {
  if (!lit.is_literal()) throw PreconditionError("not a literal: " + lit.str());
  const Formula& a = lit.atom_of();
  for (const Term& t : a.terms()) {
    if (!t.is_constant()) throw PreconditionError("literal must be over constants: " + lit.str());
  }
  bool value = a.is_equal() ? a.terms()[0] == a.terms()[1] : r.contains(GroundAtom::from_formula(a));
  return lit.is_not() ? !value : value;
}

namespace {

std::pair<std::vector<std::string>, std::vector<std::string>> evaluation_domain(
    const Instance& r, const std::vector<Formula>& fs, const DomainPolicy& policy) {
  std::set<std::string> universe = active_domain(r);
  universe.insert(policy.extra_constants.begin(), policy.extra_constants.end());
  int existentials = 0;
  for (const Formula& f : fs) {
    auto c = constants_of(f);
    universe.insert(c.begin(), c.end());
    existentials += existential_count(f);
  }
  int fresh = policy.fresh_pool ? *policy.fresh_pool : existentials;
  auto witnesses = DomainPolicy::fresh_names(universe, fresh);
  return {std::vector<std::string>(universe.begin(), universe.end()), witnesses};
}

}  // namespace

bool satisfies(const Instance& r, const std::vector<Formula>& fs, const DomainPolicy& policy) {
  for (const Formula& f : fs) {
    if (!free_variables(f).empty()) throw PreconditionError("formula is not closed: " + f.str());
  }
  auto [universe, witnesses] = evaluation_domain(r, fs, policy);
  Evaluator ev(r.schema(), universe, witnesses, fs);
  ev.load(r);
  return ev.holds_all();
}

bool satisfies(const Instance& r, const Formula& f, const DomainPolicy& policy) {
  return satisfies(r, std::vector<Formula>{f}, policy);
}

AtomSet symmetric_difference(const Instance& r1, const Instance& r2) {
  if (r1.schema() != r2.schema()) throw SchemaError("symmetric difference across different schemas");
  AtomSet out;
  std::set_symmetric_difference(r1.atoms().begin(), r1.atoms().end(), r2.atoms().begin(),
                                r2.atoms().end(), std::inserter(out, out.end()));
  return out;
}

bool closer_or_equal(const Instance& base, const Instance& r1, const Instance& r2) {
  AtomSet d1 = symmetric_difference(base, r1);
  AtomSet d2 = symmetric_difference(base, r2);
  return std::includes(d2.begin(), d2.end(), d1.begin(), d1.end());
}

Instance load_instance(const std::string& text, Schema& schema) {
  using detail::Tok;
  auto toks = detail::tokenize(text, 1);
  std::vector<GroundAtom> atoms;
  std::size_t i = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ParseError(msg, toks[i].line, toks[i].column);
  };
  while (toks[i].kind != Tok::kEnd) {
    if (toks[i].kind != Tok::kIdent) fail("expected predicate name");
    const detail::Token& name = toks[i++];
    if (toks[i].kind != Tok::kLParen) fail("expected '('");
    ++i;
    GroundAtom atom{name.text, {}};
    for (;;) {
      if (toks[i].kind != Tok::kIdent && toks[i].kind != Tok::kQuoted) fail("expected constant");
      atom.args.push_back(toks[i++].text);
      if (toks[i].kind == Tok::kComma) {
        ++i;
        continue;
      }
      if (toks[i].kind != Tok::kRParen) fail("expected ',' or ')'");
      ++i;
      break;
    }
    if (toks[i].kind != Tok::kDot) fail("expected '.' after fact");
    ++i;
    int arity = static_cast<int>(atom.args.size());
    if (schema.contains(atom.predicate) && schema.arity(atom.predicate) != arity) {
      throw ParseError("arity mismatch: " + atom.predicate + " has arity " +
                           std::to_string(schema.arity(atom.predicate)),
                       name.line, name.column);
    }
    schema.add(atom.predicate, arity);
    atoms.push_back(std::move(atom));
  }
  Instance r(schema);
  for (const GroundAtom& a : atoms) r.insert(a);
  return r;
}

std::string serialize(const Instance& r) {
  std::string out;
  for (const GroundAtom& a : r.atoms()) out += a.str() + ".\n";
  return out;
}

// ---------------------------------------------------------------- Evaluator

Evaluator::Evaluator(const Schema& schema, std::vector<std::string> universe,
                     std::vector<std::string> witnesses, const std::vector<Formula>& formulas) {
  std::sort(universe.begin(), universe.end());
  universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
  std::set<std::string> seen(universe.begin(), universe.end());
  constants_ = universe;
  std::map<std::string, int> arity;
  for (const auto& [p, k] : schema.predicates()) arity[p] = k;
  std::function<void(const Formula&)> scan = [&](const Formula& f) {
    if (f.is_atom()) arity.emplace(f.predicate(), static_cast<int>(f.terms().size()));
    for (const Term& t : f.terms()) {
      if (t.is_parameter() || t.is_skolem()) {
        throw PreconditionError("cannot evaluate formula with parameters: " + f.str());
      }
      if (t.is_constant() && seen.insert(t.name()).second) constants_.push_back(t.name());
    }
    if (f.is_not() || f.kind() == Formula::Kind::kForall || f.kind() == Formula::Kind::kExists) {
      scan(f.body());
    } else if (!f.is_atom() && !f.is_equal()) {
      scan(f.lhs());
      scan(f.rhs());
    }
  };
  for (const Formula& f : formulas) scan(f);
  universe_size_ = constants_.size();
  for (const std::string& w : witnesses) {
    if (seen.count(w)) throw PreconditionError("witness constant clashes with universe: " + w);
    constants_.push_back(w);
  }
  domain_size_ = constants_.size();
  for (const auto& [p, k] : arity) {
    predicate_names_.push_back(p);
    predicate_arity_.push_back(k);
    predicate_offset_.push_back(atom_count_);
    std::size_t n = 1;
    for (int i = 0; i < k; ++i) {
      n *= std::max<std::size_t>(domain_size_, 1);
      if (n > (std::size_t{1} << 26)) throw ResourceLimitError("evaluation table too large for " + p);
    }
    atom_count_ += n;
  }
  truth_.assign(atom_count_, 0);
  for (const Formula& f : formulas) {
    std::vector<std::pair<std::string, int>> scope;
    roots_.push_back(compile(f, scope));
  }
}

int Evaluator::constant_id(const std::string& name) {
  for (std::size_t i = 0; i < constants_.size(); ++i) {
    if (constants_[i] == name) return static_cast<int>(i);
  }
  throw PreconditionError("constant outside evaluation domain: " + name);
}

int Evaluator::compile(const Formula& f, std::vector<std::pair<std::string, int>>& scope) {
  using K = Formula::Kind;
  Node node;
  node.kind = f.kind();
  auto term_spec = [&](const Term& t) -> int {
    if (t.is_constant()) return constant_id(t.name());
    for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
      if (it->first == t.name()) return -(it->second + 1);
    }
    throw PreconditionError("free variable " + t.name() + " in evaluated formula");
  };
  switch (f.kind()) {
    case K::kAtom: {
      auto pos = std::find(predicate_names_.begin(), predicate_names_.end(), f.predicate());
      node.offset = predicate_offset_[pos - predicate_names_.begin()];
      for (const Term& t : f.terms()) node.args.push_back(term_spec(t));
      break;
    }
    case K::kEqual:
      node.args = {term_spec(f.terms()[0]), term_spec(f.terms()[1])};
      break;
    case K::kNot:
      node.a = compile(f.lhs(), scope);
      break;
    case K::kAnd:
    case K::kOr:
    case K::kImplies:
      node.a = compile(f.lhs(), scope);
      node.b = compile(f.rhs(), scope);
      break;
    case K::kForall:
    case K::kExists:
      node.slot = slots_++;
      scope.emplace_back(f.variable(), node.slot);
      node.a = compile(f.body(), scope);
      scope.pop_back();
      break;
  }
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

std::optional<std::size_t> Evaluator::atom_id(const GroundAtom& a) const {
  auto pos = std::find(predicate_names_.begin(), predicate_names_.end(), a.predicate);
  if (pos == predicate_names_.end()) return std::nullopt;
  std::size_t p = pos - predicate_names_.begin();
  if (static_cast<int>(a.args.size()) != predicate_arity_[p]) return std::nullopt;
  std::size_t id = 0;
  for (const std::string& c : a.args) {
    auto it = std::find(constants_.begin(), constants_.end(), c);
    if (it == constants_.end()) return std::nullopt;
    id = id * domain_size_ + (it - constants_.begin());
  }
  return predicate_offset_[p] + id;
}

GroundAtom Evaluator::atom(std::size_t id) const {
  std::size_t p = predicate_offset_.size() - 1;
  while (predicate_offset_[p] > id) --p;
  std::size_t local = id - predicate_offset_[p];
  GroundAtom out{predicate_names_[p], std::vector<std::string>(predicate_arity_[p])};
  for (int i = predicate_arity_[p] - 1; i >= 0; --i) {
    out.args[i] = constants_[local % domain_size_];
    local /= domain_size_;
  }
  return out;
}

void Evaluator::clear() { std::fill(truth_.begin(), truth_.end(), 0); }

void Evaluator::load(const Instance& r) {
  clear();
  for (const GroundAtom& a : r.atoms()) {
    auto id = atom_id(a);
    if (!id) throw PreconditionError("atom outside evaluation domain: " + a.str());
    truth_[*id] = 1;
  }
}

bool Evaluator::eval(int index, std::vector<int>& env) const {
  const Node& n = nodes_[index];
  using K = Formula::Kind;
  switch (n.kind) {
    case K::kAtom: {
      std::size_t id = 0;
      for (int spec : n.args) id = id * domain_size_ + (spec >= 0 ? spec : env[-spec - 1]);
      return truth_[n.offset + id] != 0;
    }
    case K::kEqual: {
      int x = n.args[0] >= 0 ? n.args[0] : env[-n.args[0] - 1];
      int y = n.args[1] >= 0 ? n.args[1] : env[-n.args[1] - 1];
      return x == y;
    }
    case K::kNot:
      return !eval(n.a, env);
    case K::kAnd:
      return eval(n.a, env) && eval(n.b, env);
    case K::kOr:
      return eval(n.a, env) || eval(n.b, env);
    case K::kImplies:
      return !eval(n.a, env) || eval(n.b, env);
    case K::kForall:
      for (std::size_t c = 0; c < universe_size_; ++c) {
        env[n.slot] = static_cast<int>(c);
        if (!eval(n.a, env)) return false;
      }
      return true;
    case K::kExists:
      for (std::size_t c = 0; c < domain_size_; ++c) {
        env[n.slot] = static_cast<int>(c);
        if (eval(n.a, env)) return true;
      }
      return false;
  }
  return false;
}

bool Evaluator::holds(std::size_t formula_index) const {
  std::vector<int> env(slots_ + 1, 0);
  return eval(roots_[formula_index], env);
}

bool Evaluator::holds_all() const {
  for (std::size_t i = 0; i < roots_.size(); ++i) {
    if (!holds(i)) return false;
  }
  return true;
}

}  // namespace dbtab
