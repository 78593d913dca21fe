#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dbtab/formula.hpp"
#include "dbtab/schema.hpp"

namespace dbtab {

struct GroundAtom {
  std::string predicate;
  std::vector<std::string> args;

  Formula to_formula() const;
  // Throws PreconditionError unless every argument is a constant.
  static GroundAtom from_formula(const Formula& atom);
  std::string str() const;

  friend bool operator==(const GroundAtom& a, const GroundAtom& b) {
    return a.predicate == b.predicate && a.args == b.args;
  }
  friend bool operator!=(const GroundAtom& a, const GroundAtom& b) { return !(a == b); }
  friend bool operator<(const GroundAtom& a, const GroundAtom& b) {
    if (a.predicate != b.predicate) return a.predicate < b.predicate;
    return a.args < b.args;
  }
};

using AtomSet = std::set<GroundAtom>;

std::string str(const AtomSet& atoms);

class Instance {
 public:
  Instance() = default;
  explicit Instance(Schema schema) : schema_(std::move(schema)) {}
  Instance(Schema schema, AtomSet atoms);

  const Schema& schema() const { return schema_; }
  const AtomSet& atoms() const { return atoms_; }
  bool contains(const GroundAtom& a) const { return atoms_.count(a) > 0; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  // Throws SchemaError on unknown predicate or arity mismatch.
  void insert(const GroundAtom& a);
  void erase(const GroundAtom& a) { atoms_.erase(a); }
  std::string str() const { return dbtab::str(atoms_); }

  friend bool operator==(const Instance& a, const Instance& b) { return a.atoms_ == b.atoms_; }
  friend bool operator!=(const Instance& a, const Instance& b) { return !(a == b); }
  friend bool operator<(const Instance& a, const Instance& b) { return a.atoms_ < b.atoms_; }

 private:
  Schema schema_;
  AtomSet atoms_;
};

struct DomainPolicy {
  // Constants mentioned by constraints or queries.
  std::set<std::string> extra_constants;
  // Fresh witnesses; defaults to the number of existentially acting quantifiers.
  std::optional<int> fresh_pool;
  int term_depth = 1;
  std::size_t max_branches = 20000;
  std::size_t max_formulas = 10000;

  // Names _n1, _n2, ... that avoid every name in `taken`.
  static std::vector<std::string> fresh_names(const std::set<std::string>& taken, int count);
};

std::set<std::string> active_domain(const Instance& r);
// Ground literal or equality over constants; throws PreconditionError otherwise.
bool cwa_truth(const Instance& r, const Formula& lit);
bool satisfies(const Instance& r, const Formula& f, const DomainPolicy& policy);
bool satisfies(const Instance& r, const std::vector<Formula>& fs, const DomainPolicy& policy);
// Throws SchemaError when schemas differ.
AtomSet symmetric_difference(const Instance& r1, const Instance& r2);
bool closer_or_equal(const Instance& base, const Instance& r1, const Instance& r2);

// Fact files: one `pred(c1,...,cn).` per line. Unknown predicates are added to
// `schema`; arity conflicts are errors.
Instance load_instance(const std::string& text, Schema& schema);
std::string serialize(const Instance& r);

// Compiles formulas over a fixed finite domain and evaluates them against a
// truth table indexed by atom ids. Universal quantifiers range over the
// universe; existential ones also over the witnesses, which occur in no atom.
class Evaluator {
 public:
  Evaluator(const Schema& schema, std::vector<std::string> universe,
            std::vector<std::string> witnesses, const std::vector<Formula>& formulas);

  std::size_t atom_count() const { return atom_count_; }
  std::optional<std::size_t> atom_id(const GroundAtom& a) const;
  GroundAtom atom(std::size_t id) const;
  const std::vector<std::string>& universe() const { return constants_; }

  void clear();
  void load(const Instance& r);
  void set(std::size_t id, bool value) { truth_[id] = value ? 1 : 0; }
  bool get(std::size_t id) const { return truth_[id] != 0; }

  bool holds(std::size_t formula_index) const;
  bool holds_all() const;

 private:
  struct Node {
    Formula::Kind kind;
    int a = -1, b = -1;   // children
    int slot = -1;        // quantifier variable slot
    std::size_t offset = 0;
    std::vector<int> args;  // >= 0 constant id, < 0 variable slot -(s+1)
  };
  int compile(const Formula& f, std::vector<std::pair<std::string, int>>& scope);
  int constant_id(const std::string& name);
  bool eval(int node, std::vector<int>& env) const;

  std::vector<std::string> constants_;
  std::size_t universe_size_ = 0;
  std::size_t domain_size_ = 0;
  std::vector<std::string> predicate_names_;
  std::vector<int> predicate_arity_;
  std::vector<std::size_t> predicate_offset_;
  std::size_t atom_count_ = 0;
  std::vector<Node> nodes_;
  std::vector<int> roots_;
  int slots_ = 0;
  std::vector<char> truth_;
};

}  // namespace dbtab
