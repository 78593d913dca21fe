#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dbtab/formula.hpp"
#include "dbtab/instance.hpp"
#include "dbtab/tableau.hpp"

namespace dbtab {

struct Opening {
  std::vector<int> sources;      // branch ids producing this result
  AtomSet deleted;               // L
  std::vector<Formula> pattern;  // positive atoms of I that are not ground facts of r
  Substitution tau;              // parameters and Skolem terms to constants
  AtomSet inserted;              // tau(K)
  Instance result;

  ChangeSet changes() const { return {deleted, inserted}; }
  // tau applied to the database literals of the source branch.
  std::vector<Formula> literals;
};

// Closed by database literals only. Throws PreconditionError on an unclosed branch.
bool data_closed(const Branch& b);

// One opening per admissible valuation of the branch's parameters and Skolem
// terms over valuation_domain(b). The branch must be finished and either open
// or data closed.
std::vector<Opening> open_branch(const Branch& b, const Instance& r);

// Merges openings with equal results, then keeps those whose (L, K) pair is
// minimal under inclusion.
std::vector<Opening> minimal_openings(std::vector<Opening> openings);

// Drops every branch whose database literals strictly contain those of a
// branch that is open or data closed.
std::vector<Branch> subsumption_prune(const std::vector<Branch>& branches);

// The propositional theory: constraints over repaired predicates, the
// difference definitions and r, grounded over a finite universe.
class GroundednessChecker {
 public:
  GroundednessChecker(const std::vector<Formula>& ics, const Instance& r, std::vector<std::string> universe);
  ~GroundednessChecker();
  GroundednessChecker(const GroundednessChecker&) = delete;
  GroundednessChecker& operator=(const GroundednessChecker&) = delete;

  // M(B) is a model of the theory and every change atom is entailed.
  bool grounded(const ChangeSet& changes);
  // First change atom not entailed by the theory and N(changes), as "L_P(a)" or "K_P(a)".
  std::optional<std::string> unsupported(const ChangeSet& changes);
  // The structure with these changes satisfies the theory.
  bool model(const ChangeSet& changes);

  // Lambda and N in readable form: original atoms "P(a)", repaired "P_P(a)",
  // changes "L_P(a)" / "K_P(a)"; N lists negated atoms as "~L_P(b)".
  std::set<std::string> lambda(const ChangeSet& changes) const;
  std::set<std::string> completion(const ChangeSet& changes) const;

  const std::vector<std::string>& universe() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

bool grounded(const Opening& o, const std::vector<Formula>& ics, const Instance& r,
              const std::vector<std::string>& universe);

// Constants openings and groundedness range over: Act(r), the constants of
// the constraints and policy, and the fresh pool.
std::vector<std::string> repair_universe(const TableauContext& ctx);

struct RepairOptions {
  DomainPolicy policy;
  bool subsumption = true;   // subsumption pruning and dominance suspension
  bool groundedness = true;  // groundedness suspension and final check
};

struct RepairReport {
  bool consistent = false;
  std::vector<Formula> skolemized;
  Tableau tableau;
  std::vector<int> subsumed;      // branch ids dropped by subsumption
  std::vector<int> not_openable;  // closed branches that are not data closed
  std::vector<Opening> openings;  // every opening of the remaining branches
  std::vector<Opening> repairs;   // sorted by result
};

// ics are sentences; they are skolemized here.
RepairReport compute_repairs(const std::vector<Formula>& ics, const Instance& r, const RepairOptions& options = {});
std::vector<Instance> repairs(const std::vector<Formula>& ics, const Instance& r, const RepairOptions& options = {});

}  // namespace dbtab
