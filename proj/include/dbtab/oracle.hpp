#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dbtab/formula.hpp"
#include "dbtab/instance.hpp"

// Brute-force ground truth. Uses only the formula and instance modules.
namespace dbtab::oracle {

// Act(r), constraint and policy constants, then the fresh witnesses.
std::vector<std::string> constant_pool(const std::vector<Formula>& ics, const Instance& r,
                                       const DomainPolicy& policy = {});

struct ChangeUniverse {
  std::vector<std::string> constants;
  std::vector<GroundAtom> deletions;   // atoms of r
  std::vector<GroundAtom> insertions;  // atoms over constants, not in r
  std::size_t insertion_cap = 0;
};

// Only atoms of predicates occurring negatively in the constraints may be
// deleted, and only those occurring positively may be inserted.
ChangeUniverse change_universe(const std::vector<Formula>& ics, const Instance& r,
                               const DomainPolicy& policy = {});

// Limit on the number of candidate change sets tried.
inline constexpr std::size_t kMaxCandidates = std::size_t{1} << 22;

// Consistent candidates (r \ D) u I whose difference with r is minimal,
// enumerated level by level. Sorted.
std::vector<Instance> enumerate_repairs_bruteforce(const std::vector<Formula>& ics, const Instance& r,
                                                   const ChangeUniverse& universe);
std::vector<Instance> enumerate_repairs_bruteforce(const std::vector<Formula>& ics, const Instance& r,
                                                   const DomainPolicy& policy = {});

// The constraints instantiated over a finite pool as propositional formulas.
class PropTheory {
 public:
  PropTheory(const std::vector<Formula>& ics, const Schema& schema, std::vector<std::string> pool);

  std::size_t atom_count() const { return atoms_.size(); }
  const GroundAtom& atom(std::size_t v) const { return atoms_[v]; }
  std::size_t instance_count() const { return roots_.size(); }
  // Assignment indexed by atom variable.
  bool holds(std::size_t instance, const std::vector<char>& m) const;
  // Atom variables occurring in the instance.
  const std::vector<std::size_t>& atoms_of(std::size_t instance) const { return occurs_[instance]; }
  std::vector<char> assignment(const Instance& r) const;

 private:
  enum class Op { kTrue, kFalse, kVar, kNot, kAnd, kOr };
  struct Node {
    Op op;
    std::size_t var = 0;
    std::vector<int> kids;
  };
  int ground(const Formula& f, std::map<std::string, std::string>& env);
  void top(const Formula& f, std::map<std::string, std::string>& env);
  int add(Node n);
  bool eval(int node, const std::vector<char>& m) const;
  void collect(int node, std::set<std::size_t>& out) const;

  Schema schema_;
  std::vector<std::string> pool_;
  std::vector<GroundAtom> atoms_;
  std::map<GroundAtom, std::size_t> ids_;
  std::vector<Node> nodes_;
  std::vector<int> roots_;
  std::vector<std::vector<std::size_t>> occurs_;
};

// Mod(r o ic): models m' of the ground theory with r delta m' minimal.
std::vector<Instance> winslett_update_models(const Instance& r, const std::vector<Formula>& ics,
                                             const std::vector<std::string>& pool);
std::vector<Instance> winslett_update_models(const Instance& r, const std::vector<Formula>& ics,
                                             const DomainPolicy& policy = {});

struct Answers {
  bool boolean = false;
  bool verdict = false;
  std::set<std::vector<std::string>> tuples;
};

// Intersection of ordinary answers over the brute-force repairs; tuples range
// over Act(r) and the constants of q.
Answers consistent_answers_bruteforce(const std::vector<Formula>& ics, const Instance& r, const Formula& q,
                                      const std::vector<std::string>& free, const DomainPolicy& policy = {});

struct Case {
  std::string name;
  Instance r;
  std::vector<Formula> ics;
};

// Constraint families over the sweep schemas {P/1, R/2} and {R/2, S/2}.
std::vector<std::string> constraint_family(const std::string& schema_name);

// Every instance over one of the sweep schemas with constants {a, b, c} and
// at most max_facts facts, paired with each constraint of the schema's family.
std::vector<Case> sweep_cases(std::size_t max_facts = 4);

// count cases drawn from the same space.
std::vector<Case> random_cases(unsigned seed, std::size_t count, std::size_t max_facts = 4);

}  // namespace dbtab::oracle
