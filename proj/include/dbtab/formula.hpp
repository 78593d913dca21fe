#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "dbtab/schema.hpp"

namespace dbtab {

class Term {
 public:
  enum class Kind { kVariable, kConstant, kParameter, kSkolem };

  Term();  // the constant with empty name; only useful as a placeholder
  static Term Variable(std::string name);
  static Term Constant(std::string name);
  static Term Parameter(std::string name);
  static Term Skolem(std::string function, std::vector<Term> args);

  Kind kind() const { return rep_->kind; }
  const std::string& name() const { return rep_->name; }
  const std::vector<Term>& args() const { return rep_->args; }
  bool is_variable() const { return kind() == Kind::kVariable; }
  bool is_constant() const { return kind() == Kind::kConstant; }
  bool is_parameter() const { return kind() == Kind::kParameter; }
  bool is_skolem() const { return kind() == Kind::kSkolem; }
  // No variables anywhere inside.
  bool ground() const { return rep_->ground; }
  // Skolem nesting depth: 0 for atomic terms.
  int depth() const { return rep_->depth; }
  std::size_t hash() const { return rep_->hash; }
  std::string str() const;

  friend int compare(const Term& a, const Term& b);
  friend bool operator==(const Term& a, const Term& b) { return compare(a, b) == 0; }
  friend bool operator!=(const Term& a, const Term& b) { return compare(a, b) != 0; }
  friend bool operator<(const Term& a, const Term& b) { return compare(a, b) < 0; }

 private:
  struct Rep {
    Kind kind;
    std::string name;
    std::vector<Term> args;
    bool ground;
    int depth;
    std::size_t hash;
  };
  explicit Term(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  static Term make(Kind kind, std::string name, std::vector<Term> args);
  std::shared_ptr<const Rep> rep_;
};

// Quotes a constant name unless it lexes as a bare constant.
std::string constant_text(const std::string& name);

class Formula {
 public:
  enum class Kind { kAtom, kEqual, kNot, kAnd, kOr, kImplies, kForall, kExists };

  Formula();  // placeholder; kind() is kAtom with empty predicate
  static Formula Atom(std::string predicate, std::vector<Term> args);
  static Formula Equal(Term lhs, Term rhs);
  static Formula Not(Formula f);
  static Formula And(Formula a, Formula b);
  static Formula Or(Formula a, Formula b);
  static Formula Implies(Formula a, Formula b);
  static Formula Forall(std::string var, Formula body);
  static Formula Exists(std::string var, Formula body);

  Kind kind() const { return rep_->kind; }
  // Atom predicate.
  const std::string& predicate() const { return rep_->name; }
  // Atom arguments, or the two sides of an equality.
  const std::vector<Term>& terms() const { return rep_->terms; }
  // Operand of Not, left operand of binary connectives, body of quantifiers.
  const Formula& lhs() const { return rep_->children[0]; }
  const Formula& rhs() const { return rep_->children[1]; }
  const Formula& body() const { return rep_->children[0]; }
  // Quantified variable.
  const std::string& variable() const { return rep_->name; }

  bool is_atom() const { return kind() == Kind::kAtom; }
  bool is_equal() const { return kind() == Kind::kEqual; }
  bool is_not() const { return kind() == Kind::kNot; }
  // Atom, equality, or the negation of either.
  bool is_literal() const;
  // Atom or negated atom (no equality).
  bool is_database_literal() const;
  // The atom (or equality) under an optional negation.
  const Formula& atom_of() const;
  bool positive() const { return !is_not(); }
  // No variable occurs anywhere (bound or free).
  bool ground() const { return rep_->ground; }
  std::size_t hash() const { return rep_->hash; }
  std::string str() const;

  friend int compare(const Formula& a, const Formula& b);
  friend bool operator==(const Formula& a, const Formula& b) { return compare(a, b) == 0; }
  friend bool operator!=(const Formula& a, const Formula& b) { return compare(a, b) != 0; }
  friend bool operator<(const Formula& a, const Formula& b) { return compare(a, b) < 0; }

 private:
  struct Rep {
    Kind kind;
    std::string name;
    std::vector<Term> terms;
    std::vector<Formula> children;
    bool ground;
    std::size_t hash;
  };
  explicit Formula(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  static Formula make(Kind kind, std::string name, std::vector<Term> terms,
                      std::vector<Formula> children);
  std::shared_ptr<const Rep> rep_;
};

// Replaces variables, parameters, or whole ground Skolem terms.
class Substitution {
 public:
  Substitution() = default;
  void bind(const Term& from, const Term& to);
  bool contains(const Term& from) const { return map_.count(from) > 0; }
  std::optional<Term> lookup(const Term& from) const;
  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }
  const std::map<Term, Term>& entries() const { return map_; }
  std::string str() const;

 private:
  std::map<Term, Term> map_;
};

Term substitute(const Term& t, const Substitution& s);
// Replaces free occurrences only; throws CaptureError if a mapped term would
// have one of its variables captured by a binder.
Formula substitute(const Formula& f, const Substitution& s);
Formula negate(const Formula& f);

// Smullyan rule classes.
struct Alpha {
  Formula first, second;
};
struct Beta {
  Formula first, second;
};
struct Gamma {
  std::string var;
  Formula body;
};
struct Delta {
  std::string var;
  Formula body;
};
struct LiteralOrEquality {};
using RuleClass = std::variant<Alpha, Beta, Gamma, Delta, LiteralOrEquality>;

RuleClass classify(const Formula& f);

// Deterministic source of p1, p2, ... and f1, f2, ...; skips reserved names.
class FreshSymbols {
 public:
  FreshSymbols() = default;
  explicit FreshSymbols(std::set<std::string> reserved) : reserved_(std::move(reserved)) {}
  void reserve(const std::string& name) { reserved_.insert(name); }
  Term parameter();
  std::string function();

 private:
  std::string next(const std::string& prefix, int& counter);
  std::set<std::string> reserved_;
  int next_parameter_ = 1;
  int next_function_ = 1;
};

// Free variables in order of first occurrence.
std::vector<std::string> free_variables(const Formula& f);
std::set<std::string> constants_of(const Formula& f);
std::set<std::string> predicates_of(const Formula& f);
// Predicates occurring under positive / negative polarity.
void predicate_polarity(const Formula& f, std::set<std::string>& positive,
                        std::set<std::string>& negative);
// Number of quantifiers that act existentially (positive exists, negative forall).
int existential_count(const Formula& f);
// Renames bound variables so that none is bound twice or shadows a free one.
Formula normalize_variables(const Formula& f);
Formula skolemize(const Formula& f, FreshSymbols& fresh);

struct ParseOptions {
  // Unknown predicates are added to the schema instead of rejected.
  bool extend_schema = false;
  int first_line = 1;
};

Formula parse_formula(const std::string& text, Schema& schema, ParseOptions options = {});
Formula parse_formula(const std::string& text, const Schema& schema);
// One formula per non-blank line; '#' starts a comment.
std::vector<Formula> parse_formula_lines(const std::string& text, Schema& schema,
                                         ParseOptions options = {});

}  // namespace dbtab
