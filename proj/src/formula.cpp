#include "dbtab/formula.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

#include "dbtab/errors.hpp"

namespace dbtab {

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

template <typename T>
int compare_vectors(const std::vector<T>& a, const std::vector<T>& b) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    int c = compare(a[i], b[i]);
    if (c != 0) return c;
  }
  if (a.size() == b.size()) return 0;
  return a.size() < b.size() ? -1 : 1;
}

int compare_strings(const std::string& a, const std::string& b) {
  int c = a.compare(b);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

}  // namespace

// ---------------------------------------------------------------- Schema

void Schema::add(const std::string& predicate, int arity) {
  if (arity < 1) throw SchemaError("predicate " + predicate + " needs arity >= 1");
  auto it = arity_.find(predicate);
  if (it != arity_.end() && it->second != arity) {
    throw SchemaError("predicate " + predicate + " used with arity " + std::to_string(arity) +
                      " but declared with arity " + std::to_string(it->second));
  }
  arity_[predicate] = arity;
}

bool Schema::contains(const std::string& predicate) const { return arity_.count(predicate) > 0; }

int Schema::arity(const std::string& predicate) const {
  auto it = arity_.find(predicate);
  if (it == arity_.end()) throw SchemaError("unknown predicate " + predicate);
  return it->second;
}

// ---------------------------------------------------------------- Term

Term::Term() : Term(make(Kind::kConstant, "", {})) {}

Term Term::make(Kind kind, std::string name, std::vector<Term> args) {
  auto rep = std::make_shared<Rep>();
  rep->kind = kind;
  rep->name = std::move(name);
  rep->args = std::move(args);
  rep->ground = kind != Kind::kVariable;
  rep->depth = 0;
  std::size_t h = mix(std::hash<std::string>{}(rep->name), static_cast<std::size_t>(kind));
  for (const Term& a : rep->args) {
    rep->ground = rep->ground && a.ground();
    rep->depth = std::max(rep->depth, a.depth() + 1);
    h = mix(h, a.hash());
  }
  if (kind == Kind::kSkolem && rep->args.empty()) rep->depth = 1;
  rep->hash = h;
  return Term(std::move(rep));
}

Term Term::Variable(std::string name) { return make(Kind::kVariable, std::move(name), {}); }
Term Term::Constant(std::string name) { return make(Kind::kConstant, std::move(name), {}); }
Term Term::Parameter(std::string name) { return make(Kind::kParameter, std::move(name), {}); }
Term Term::Skolem(std::string function, std::vector<Term> args) {
  return make(Kind::kSkolem, std::move(function), std::move(args));
}

int compare(const Term& a, const Term& b) {
  if (a.rep_ == b.rep_) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  int c = compare_strings(a.name(), b.name());
  if (c != 0) return c;
  return compare_vectors(a.args(), b.args());
}

std::string constant_text(const std::string& name) {
  bool bare = !name.empty() && !std::isupper(static_cast<unsigned char>(name[0]));
  for (char ch : name) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') bare = false;
  }
  if (bare && (name == "forall" || name == "exists")) bare = false;
  if (bare) return name;
  std::string out = "'";
  for (char ch : name) {
    if (ch == '\'' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "'";
}

std::string Term::str() const {
  switch (kind()) {
    case Kind::kConstant:
      return constant_text(name());
    case Kind::kVariable:
    case Kind::kParameter:
      return name();
    case Kind::kSkolem: {
      std::string out = name() + "(";
      for (std::size_t i = 0; i < args().size(); ++i) {
        if (i) out += ",";
        out += args()[i].str();
      }
      return out + ")";
    }
  }
  return name();
}

// ---------------------------------------------------------------- Formula

Formula::Formula() : Formula(make(Kind::kAtom, "", {}, {})) {}

Formula Formula::make(Kind kind, std::string name, std::vector<Term> terms,
                      std::vector<Formula> children) {
  auto rep = std::make_shared<Rep>();
  rep->kind = kind;
  rep->name = std::move(name);
  rep->terms = std::move(terms);
  rep->children = std::move(children);
  rep->ground = kind != Kind::kForall && kind != Kind::kExists;
  std::size_t h = mix(std::hash<std::string>{}(rep->name), static_cast<std::size_t>(kind) + 17);
  for (const Term& t : rep->terms) {
    rep->ground = rep->ground && t.ground();
    h = mix(h, t.hash());
  }
  for (const Formula& c : rep->children) {
    rep->ground = rep->ground && c.ground();
    h = mix(h, c.hash());
  }
  rep->hash = h;
  return Formula(std::move(rep));
}

Formula Formula::Atom(std::string predicate, std::vector<Term> args) {
  return make(Kind::kAtom, std::move(predicate), std::move(args), {});
}
Formula Formula::Equal(Term lhs, Term rhs) {
  return make(Kind::kEqual, "", {std::move(lhs), std::move(rhs)}, {});
}
Formula Formula::Not(Formula f) { return make(Kind::kNot, "", {}, {std::move(f)}); }
Formula Formula::And(Formula a, Formula b) {
  return make(Kind::kAnd, "", {}, {std::move(a), std::move(b)});
}
Formula Formula::Or(Formula a, Formula b) {
  return make(Kind::kOr, "", {}, {std::move(a), std::move(b)});
}
Formula Formula::Implies(Formula a, Formula b) {
  return make(Kind::kImplies, "", {}, {std::move(a), std::move(b)});
}
Formula Formula::Forall(std::string var, Formula body) {
  return make(Kind::kForall, std::move(var), {}, {std::move(body)});
}
Formula Formula::Exists(std::string var, Formula body) {
  return make(Kind::kExists, std::move(var), {}, {std::move(body)});
}

bool Formula::is_literal() const {
  if (is_atom() || is_equal()) return true;
  return is_not() && (lhs().is_atom() || lhs().is_equal());
}

bool Formula::is_database_literal() const {
  return is_atom() || (is_not() && lhs().is_atom());
}

const Formula& Formula::atom_of() const { return is_not() ? lhs() : *this; }

int compare(const Formula& a, const Formula& b) {
  if (a.rep_ == b.rep_) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  int c = compare_strings(a.rep_->name, b.rep_->name);
  if (c != 0) return c;
  c = compare_vectors(a.rep_->terms, b.rep_->terms);
  if (c != 0) return c;
  return compare_vectors(a.rep_->children, b.rep_->children);
}

namespace {

// Precedence levels: 0 implication, 1 disjunction, 2 conjunction, 3 unary.
void print(const Formula& f, int context, std::string& out) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::kAtom: {
      out += f.predicate();
      out += "(";
      for (std::size_t i = 0; i < f.terms().size(); ++i) {
        if (i) out += ",";
        out += f.terms()[i].str();
      }
      out += ")";
      return;
    }
    case K::kEqual:
      out += f.terms()[0].str() + " = " + f.terms()[1].str();
      return;
    case K::kNot:
      out += "~";
      if (f.lhs().is_equal()) {
        out += "(";
        print(f.lhs(), 0, out);
        out += ")";
      } else {
        print(f.lhs(), 3, out);
      }
      return;
    case K::kAnd:
    case K::kOr:
    case K::kImplies: {
      int level = f.kind() == K::kImplies ? 0 : (f.kind() == K::kOr ? 1 : 2);
      const char* op = f.kind() == K::kImplies ? " -> " : (f.kind() == K::kOr ? " | " : " & ");
      bool paren = context > level;
      if (paren) out += "(";
      if (f.kind() == K::kImplies) {
        print(f.lhs(), 1, out);
        out += op;
        print(f.rhs(), 0, out);
      } else {
        print(f.lhs(), level, out);
        out += op;
        print(f.rhs(), level + 1, out);
      }
      if (paren) out += ")";
      return;
    }
    case K::kForall:
    case K::kExists: {
      bool paren = context > 0;
      if (paren) out += "(";
      out += f.kind() == K::kForall ? "forall " : "exists ";
      const Formula* cur = &f;
      bool first = true;
      while (cur->kind() == f.kind()) {
        if (!first) out += ",";
        out += cur->variable();
        first = false;
        cur = &cur->body();
      }
      out += ". ";
      print(*cur, 0, out);
      if (paren) out += ")";
      return;
    }
  }
}

}  // namespace

std::string Formula::str() const {
  std::string out;
  print(*this, 0, out);
  return out;
}

// ---------------------------------------------------------------- Substitution

void Substitution::bind(const Term& from, const Term& to) {
  if (from.is_constant()) throw PreconditionError("cannot substitute for constant " + from.str());
  map_[from] = to;
}

std::optional<Term> Substitution::lookup(const Term& from) const {
  auto it = map_.find(from);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

std::string Substitution::str() const {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : map_) {
    if (!first) out += ", ";
    first = false;
    out += k.str() + "->" + v.str();
  }
  return out + "}";
}

namespace {

void collect_variables(const Term& t, std::set<std::string>& out) {
  if (t.is_variable()) out.insert(t.name());
  for (const Term& a : t.args()) collect_variables(a, out);
}

Term substitute_term(const Term& t, const Substitution& s, const std::set<std::string>& bound) {
  if (!t.is_constant() && !(t.is_variable() && bound.count(t.name()))) {
    if (auto hit = s.lookup(t)) {
      std::set<std::string> vars;
      collect_variables(*hit, vars);
      for (const std::string& v : vars) {
        if (bound.count(v)) throw CaptureError("variable " + v + " would be captured");
      }
      return *hit;
    }
  }
  if (!t.is_skolem()) return t;
  std::vector<Term> args;
  args.reserve(t.args().size());
  bool changed = false;
  for (const Term& a : t.args()) {
    args.push_back(substitute_term(a, s, bound));
    changed = changed || args.back() != a;
  }
  return changed ? Term::Skolem(t.name(), std::move(args)) : t;
}

Formula substitute_formula(const Formula& f, const Substitution& s, std::set<std::string>& bound) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::kAtom:
    case K::kEqual: {
      std::vector<Term> terms;
      terms.reserve(f.terms().size());
      bool changed = false;
      for (const Term& t : f.terms()) {
        terms.push_back(substitute_term(t, s, bound));
        changed = changed || terms.back() != t;
      }
      if (!changed) return f;
      if (f.is_atom()) return Formula::Atom(f.predicate(), std::move(terms));
      return Formula::Equal(terms[0], terms[1]);
    }
    case K::kNot:
      return Formula::Not(substitute_formula(f.lhs(), s, bound));
    case K::kAnd:
      return Formula::And(substitute_formula(f.lhs(), s, bound), substitute_formula(f.rhs(), s, bound));
    case K::kOr:
      return Formula::Or(substitute_formula(f.lhs(), s, bound), substitute_formula(f.rhs(), s, bound));
    case K::kImplies:
      return Formula::Implies(substitute_formula(f.lhs(), s, bound),
                              substitute_formula(f.rhs(), s, bound));
    case K::kForall:
    case K::kExists: {
      bool fresh = bound.insert(f.variable()).second;
      Formula body = substitute_formula(f.body(), s, bound);
      if (fresh) bound.erase(f.variable());
      return f.kind() == K::kForall ? Formula::Forall(f.variable(), body)
                                    : Formula::Exists(f.variable(), body);
    }
  }
  return f;
}

}  // namespace

Term substitute(const Term& t, const Substitution& s) { return substitute_term(t, s, {}); }

Formula substitute(const Formula& f, const Substitution& s) {
  if (s.empty()) return f;
  std::set<std::string> bound;
  return substitute_formula(f, s, bound);
}

Formula negate(const Formula& f) { return Formula::Not(f); }

// ---------------------------------------------------------------- classify

RuleClass classify(const Formula& f) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::kAtom:
    case K::kEqual:
      return LiteralOrEquality{};
    case K::kAnd:
      return Alpha{f.lhs(), f.rhs()};
    case K::kOr:
      return Beta{f.lhs(), f.rhs()};
    case K::kImplies:
      return Beta{negate(f.lhs()), f.rhs()};
    case K::kForall:
      return Gamma{f.variable(), f.body()};
    case K::kExists:
      return Delta{f.variable(), f.body()};
    case K::kNot:
      break;
  }
  const Formula& g = f.lhs();
  switch (g.kind()) {
    case K::kAtom:
    case K::kEqual:
      return LiteralOrEquality{};
    case K::kNot:
      return Alpha{g.lhs(), g.lhs()};
    case K::kAnd:
      return Beta{negate(g.lhs()), negate(g.rhs())};
    case K::kOr:
      return Alpha{negate(g.lhs()), negate(g.rhs())};
    case K::kImplies:
      return Alpha{g.lhs(), negate(g.rhs())};
    case K::kForall:
      return Delta{g.variable(), negate(g.body())};
    case K::kExists:
      return Gamma{g.variable(), negate(g.body())};
  }
  return LiteralOrEquality{};
}

// ---------------------------------------------------------------- FreshSymbols

std::string FreshSymbols::next(const std::string& prefix, int& counter) {
  for (;;) {
    std::string name = prefix + std::to_string(counter++);
    if (reserved_.insert(name).second) return name;
  }
}

Term FreshSymbols::parameter() { return Term::Parameter(next("p", next_parameter_)); }
std::string FreshSymbols::function() { return next("f", next_function_); }

// ---------------------------------------------------------------- traversals

namespace {

void walk_terms(const Formula& f, const std::function<void(const Term&)>& fn) {
  for (const Term& t : f.terms()) fn(t);
  if (f.is_not()) walk_terms(f.lhs(), fn);
  if (f.kind() == Formula::Kind::kAnd || f.kind() == Formula::Kind::kOr ||
      f.kind() == Formula::Kind::kImplies) {
    walk_terms(f.lhs(), fn);
    walk_terms(f.rhs(), fn);
  }
  if (f.kind() == Formula::Kind::kForall || f.kind() == Formula::Kind::kExists) walk_terms(f.body(), fn);
}

void free_vars(const Formula& f, std::vector<std::string>& bound, std::vector<std::string>& out) {
  using K = Formula::Kind;
  std::function<void(const Term&)> term_fn = [&](const Term& t) {
    if (t.is_variable() && std::find(bound.begin(), bound.end(), t.name()) == bound.end() &&
        std::find(out.begin(), out.end(), t.name()) == out.end()) {
      out.push_back(t.name());
    }
    for (const Term& a : t.args()) term_fn(a);
  };
  switch (f.kind()) {
    case K::kAtom:
    case K::kEqual:
      for (const Term& t : f.terms()) term_fn(t);
      return;
    case K::kNot:
      free_vars(f.lhs(), bound, out);
      return;
    case K::kAnd:
    case K::kOr:
    case K::kImplies:
      free_vars(f.lhs(), bound, out);
      free_vars(f.rhs(), bound, out);
      return;
    case K::kForall:
    case K::kExists:
      bound.push_back(f.variable());
      free_vars(f.body(), bound, out);
      bound.pop_back();
      return;
  }
}

void polarity(const Formula& f, bool pos, std::set<std::string>& positive,
              std::set<std::string>& negative) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::kAtom:
      (pos ? positive : negative).insert(f.predicate());
      return;
    case K::kEqual:
      return;
    case K::kNot:
      polarity(f.lhs(), !pos, positive, negative);
      return;
    case K::kAnd:
    case K::kOr:
      polarity(f.lhs(), pos, positive, negative);
      polarity(f.rhs(), pos, positive, negative);
      return;
    case K::kImplies:
      polarity(f.lhs(), !pos, positive, negative);
      polarity(f.rhs(), pos, positive, negative);
      return;
    case K::kForall:
    case K::kExists:
      polarity(f.body(), pos, positive, negative);
      return;
  }
}

int existentials(const Formula& f, bool pos) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::kAtom:
    case K::kEqual:
      return 0;
    case K::kNot:
      return existentials(f.lhs(), !pos);
    case K::kAnd:
    case K::kOr:
      return existentials(f.lhs(), pos) + existentials(f.rhs(), pos);
    case K::kImplies:
      return existentials(f.lhs(), !pos) + existentials(f.rhs(), pos);
    case K::kForall:
      return (pos ? 0 : 1) + existentials(f.body(), pos);
    case K::kExists:
      return (pos ? 1 : 0) + existentials(f.body(), pos);
  }
  return 0;
}

}  // namespace

std::vector<std::string> free_variables(const Formula& f) {
  std::vector<std::string> bound, out;
  free_vars(f, bound, out);
  return out;
}

std::set<std::string> constants_of(const Formula& f) {
  std::set<std::string> out;
  std::function<void(const Term&)> fn = [&](const Term& t) {
    if (t.is_constant()) out.insert(t.name());
    for (const Term& a : t.args()) fn(a);
  };
  walk_terms(f, fn);
  return out;
}

std::set<std::string> predicates_of(const Formula& f) {
  std::set<std::string> pos, neg;
  polarity(f, true, pos, neg);
  pos.insert(neg.begin(), neg.end());
  return pos;
}

void predicate_polarity(const Formula& f, std::set<std::string>& positive,
                        std::set<std::string>& negative) {
  polarity(f, true, positive, negative);
}

int existential_count(const Formula& f) { return existentials(f, true); }

// ---------------------------------------------------------------- normalize

namespace {

Formula rename(const Formula& f, std::map<std::string, std::string>& scope,
               std::set<std::string>& used) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::kAtom:
    case K::kEqual: {
      Substitution s;
      for (const auto& [from, to] : scope) {
        if (from != to) s.bind(Term::Variable(from), Term::Variable(to));
      }
      return substitute(f, s);
    }
    case K::kNot:
      return Formula::Not(rename(f.lhs(), scope, used));
    case K::kAnd:
    {
      Formula l = rename(f.lhs(), scope, used);
      return Formula::And(l, rename(f.rhs(), scope, used));
    }
    case K::kOr:
    {
      Formula l = rename(f.lhs(), scope, used);
      return Formula::Or(l, rename(f.rhs(), scope, used));
    }
    case K::kImplies:
    {
      Formula l = rename(f.lhs(), scope, used);
      return Formula::Implies(l, rename(f.rhs(), scope, used));
    }
    case K::kForall:
    case K::kExists: {
      std::string name = f.variable();
      if (used.count(name)) {
        for (int k = 1;; ++k) {
          std::string candidate = f.variable() + "_" + std::to_string(k);
          if (!used.count(candidate)) {
            name = candidate;
            break;
          }
        }
      }
      used.insert(name);
      auto saved = scope.find(f.variable());
      std::optional<std::string> previous;
      if (saved != scope.end()) previous = saved->second;
      scope[f.variable()] = name;
      Formula body = rename(f.body(), scope, used);
      if (previous) {
        scope[f.variable()] = *previous;
      } else {
        scope.erase(f.variable());
      }
      return f.kind() == K::kForall ? Formula::Forall(name, body) : Formula::Exists(name, body);
    }
  }
  return f;
}

Formula skolem(const Formula& f, bool pos, std::vector<std::string>& universals,
               FreshSymbols& fresh) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::kAtom:
    case K::kEqual:
      return f;
    case K::kNot:
      return Formula::Not(skolem(f.lhs(), !pos, universals, fresh));
    case K::kAnd:
    {
      Formula l = skolem(f.lhs(), pos, universals, fresh);
      return Formula::And(l, skolem(f.rhs(), pos, universals, fresh));
    }
    case K::kOr:
    {
      Formula l = skolem(f.lhs(), pos, universals, fresh);
      return Formula::Or(l, skolem(f.rhs(), pos, universals, fresh));
    }
    case K::kImplies:
    {
      Formula l = skolem(f.lhs(), !pos, universals, fresh);
      return Formula::Implies(l, skolem(f.rhs(), pos, universals, fresh));
    }
    case K::kForall:
    case K::kExists: {
      bool universal = (f.kind() == K::kForall) == pos;
      if (universal) {
        universals.push_back(f.variable());
        Formula body = skolem(f.body(), pos, universals, fresh);
        universals.pop_back();
        return f.kind() == K::kForall ? Formula::Forall(f.variable(), body)
                                      : Formula::Exists(f.variable(), body);
      }
      Term witness;
      if (universals.empty()) {
        witness = fresh.parameter();
      } else {
        std::vector<Term> args;
        for (const std::string& u : universals) args.push_back(Term::Variable(u));
        witness = Term::Skolem(fresh.function(), std::move(args));
      }
      Substitution s;
      s.bind(Term::Variable(f.variable()), witness);
      return skolem(substitute(f.body(), s), pos, universals, fresh);
    }
  }
  return f;
}

}  // namespace

Formula normalize_variables(const Formula& f) {
  std::vector<std::string> free = free_variables(f);
  std::set<std::string> used(free.begin(), free.end());
  std::map<std::string, std::string> scope;
  return rename(f, scope, used);
}

Formula skolemize(const Formula& f, FreshSymbols& fresh) {
  if (!free_variables(f).empty()) throw PreconditionError("skolemize needs a sentence: " + f.str());
  std::vector<std::string> universals;
  return skolem(normalize_variables(f), true, universals, fresh);
}

}  // namespace dbtab
