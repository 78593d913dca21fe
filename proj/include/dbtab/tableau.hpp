#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dbtab/formula.hpp"
#include "dbtab/instance.hpp"

namespace dbtab {

struct ClosureReason {
  enum class Kind {
    kUnaEquality,      // cond 1: a = b for distinct constants
    kMissingFact,      // cond 2a: ground atom not in r
    kNoSubstitution,   // cond 2b: no valuation of the terms lands in r
    kNegatedFact,      // cond 3: negated atom that is in r
    kComplementary,    // cond 4: phi and ~phi
    kSelfInequality,   // cond 5: ~(t = t)
  };
  Kind kind;
  std::vector<Formula> witnesses;

  // Closed only because of database literals (conditions 2 and 3).
  bool data() const {
    return kind == Kind::kMissingFact || kind == Kind::kNoSubstitution || kind == Kind::kNegatedFact;
  }
  std::string label() const;  // "1", "2a", ...
  std::string str() const;
  friend bool operator==(const ClosureReason& a, const ClosureReason& b) {
    return a.kind == b.kind && a.witnesses == b.witnesses;
  }
};

enum class BranchStatus { kOpen, kClosed, kSuspended };

// When a closed branch stops being developed.
enum class ClosurePolicy {
  kStopOnIClosure,  // database tableaux: keep developing branches closed by r only
  kStopOnAny,       // classical refutation
  kNever,           // develop everything (structural tests)
};

// An instance with its tuples grouped by predicate, for joins.
struct IndexedInstance {
  Instance instance;
  std::map<std::string, std::vector<std::vector<Term>>> tuples;
  static std::shared_ptr<const IndexedInstance> make(const Instance& r);
};

// Shared by all branches of one tableau.
struct TableauContext {
  std::shared_ptr<const IndexedInstance> base;  // r; null in pure mode
  std::vector<Term> constants;                  // Act(r) and mentioned constants, sorted
  std::vector<std::string> fresh;               // fresh constants for parameter valuation
  DomainPolicy policy;
  std::shared_ptr<FreshSymbols> symbols;
};

struct ChangeSet {
  AtomSet deleted;
  AtomSet inserted;
  std::size_t size() const { return deleted.size() + inserted.size(); }
  bool includes(const ChangeSet& other) const;
  friend bool operator==(const ChangeSet& a, const ChangeSet& b) {
    return a.deleted == b.deleted && a.inserted == b.inserted;
  }
  friend bool operator<(const ChangeSet& a, const ChangeSet& b) {
    if (a.deleted != b.deleted) return a.deleted < b.deleted;
    return a.inserted < b.inserted;
  }
};

struct BuildOptions;

class Branch {
 public:
  // An unexpanded branch holding `formulas`, read against ctx->base.
  static Branch root(std::shared_ptr<TableauContext> ctx, const std::vector<Formula>& formulas);

  int id() const { return id_; }
  const std::vector<int>& path() const { return path_; }
  // The I-part in the order formulas were placed.
  const std::vector<Formula>& formulas() const { return formulas_; }
  bool contains(const Formula& f) const { return members_.count(f) > 0; }
  std::vector<Formula> literals() const;
  // Atoms and negated atoms of I (I').
  std::set<Formula> database_literals() const;
  // Parameters and ground Skolem terms occurring on the branch.
  const std::vector<Term>& terms() const { return terms_; }
  // Instances kept aside because a component is true in r and stable.
  std::vector<Formula> deferred() const;
  // For each deferred instance, the component that was true in r.
  std::vector<Formula> deferred_watches() const;
  const ChangeSet& ground_changes() const { return changes_; }
  // The instance this branch is read against; null in pure mode.
  const Instance* instance() const { return data_ ? &data_->instance : nullptr; }
  const TableauContext& context() const { return *ctx_; }

  BranchStatus status() const { return status_; }
  bool closed() const { return status_ == BranchStatus::kClosed; }
  bool open() const { return status_ == BranchStatus::kOpen; }
  const std::optional<ClosureReason>& reason() const { return reason_; }
  const std::string& suspension() const { return suspension_; }
  // No pending work remains (status is final).
  bool finished() const { return finished_; }
  // Binding recorded when a formula came from a quantifier instance.
  std::optional<std::string> origin(const Formula& f) const;

  struct TraceItem {
    Formula formula;
    std::size_t depth;
  };
  const std::vector<TraceItem>& trace() const { return trace_; }
  // Formulas waiting for a rule, front first.
  std::vector<Formula> pending() const { return {pending_.begin(), pending_.end()}; }

 private:
  friend class Engine;
  friend class Tableau;
  friend std::vector<Branch> expand_step(const Branch&, const BuildOptions&);

  struct GammaEntry {
    Formula source;
    std::vector<std::string> vars;
    Formula matrix;
    std::vector<Formula> premises;  // atoms of negative components usable for joins
    bool join = false;
    std::set<std::vector<Term>> done;
    std::size_t seen_positive = 0;
    std::size_t seen_terms = 0;
    bool fresh = true;
  };
  struct Deferred {
    Formula instance;
    Formula watch;
  };

  std::shared_ptr<TableauContext> ctx_;
  std::shared_ptr<const IndexedInstance> data_;
  int id_ = 0;
  std::vector<int> path_;
  std::vector<Formula> formulas_;
  std::set<Formula> members_;
  std::deque<Formula> pending_;
  std::vector<GammaEntry> gammas_;
  std::vector<Deferred> deferred_;
  std::vector<Term> terms_;
  std::vector<Formula> positives_;  // positive atoms of I, in order
  std::vector<std::pair<Term, Term>> rewrites_;
  std::map<Formula, std::string> origins_;
  ChangeSet changes_;
  std::vector<TraceItem> trace_;
  BranchStatus status_ = BranchStatus::kOpen;
  std::optional<ClosureReason> reason_;
  std::string suspension_;
  bool i_closed_ = false;
  bool data_closed_hint_ = false;  // a ground database literal false in r
  bool finished_ = false;
};

// Hooks for repair-driven pruning during construction.
class BranchPruner {
 public:
  virtual ~BranchPruner() = default;
  // Called before a literal would grow the branch's ground change set to
  // `next`; a returned reason suspends the branch without placing it.
  virtual std::optional<std::string> suspend(const Branch& b, const ChangeSet& next) = 0;
  // Called for each branch finishing open or closed by database literals only.
  virtual void finished(const Branch& b) = 0;
};

struct BuildOptions {
  ClosurePolicy closure = ClosurePolicy::kStopOnIClosure;
  // A beta formula with a component already on the branch, or with a ground
  // component true in r and not contradicted on the branch, is not split.
  bool skip_fulfilled = true;
  bool require_safe = true;
  BranchPruner* pruner = nullptr;
};

class Tableau {
 public:
  const std::vector<Branch>& branches() const { return branches_; }
  // Every branch closed.
  bool closed() const;
  std::size_t nodes_developed() const { return nodes_; }
  const TableauContext& context() const { return *ctx_; }
  std::shared_ptr<TableauContext> shared_context() const { return ctx_; }

  // A tableau whose branches are the given literal sets over their own
  // instances; each branch is saturated and statused against its instance.
  static Tableau from_literal_sets(std::shared_ptr<TableauContext> ctx,
                                   const std::vector<std::pair<std::vector<Formula>, Instance>>& sets);

 private:
  friend class Engine;
  friend class TableauBuilder;
  friend Tableau combine(const Tableau&, const Tableau&);
  std::shared_ptr<TableauContext> ctx_;
  std::vector<Branch> branches_;
  std::size_t nodes_ = 0;
};

// Pool: Act(r), policy extras and constants of `formulas`.
std::shared_ptr<TableauContext> make_context(const std::vector<Formula>& formulas, const Instance* r,
                                             const DomainPolicy& policy);

// formulas must be skolemized; unsafe constraints are rejected when required.
Tableau build(const std::vector<Formula>& formulas, const Instance& r, const DomainPolicy& policy,
              const BuildOptions& options = {});
// Classical tableau with no instance.
Tableau build_pure(const std::vector<Formula>& formulas, const DomainPolicy& policy,
                   const BuildOptions& options);

// First applicable condition in the order 1, 4, 5, 3, 2a, 2b; nullopt if open.
std::optional<ClosureReason> closure_status(const Branch& b, const Instance* r);

// Branches X u Y for X in t1 and Y in t2, re-saturated against X's instance
// and closed classically. Throws PreconditionError if the base instances differ.
Tableau combine(const Tableau& t1, const Tableau& t2);

// Applies one rule to an unfinished branch.
std::vector<Branch> expand_step(const Branch& b, const BuildOptions& options = {});

// Safe: every universally instantiated variable occurs in a negative
// database literal of the matrix.
bool is_safe(const Formula& f);

// Non-constant terms occurring in literals of b, in order of occurrence.
std::vector<Term> valuation_terms(const Branch& b);
// Constants a valuation may use: Act of b's instance, the pool, and fresh
// constants outside both.
std::vector<std::string> valuation_domain(const Branch& b);

// Indented tree, one formula per line, with closure annotations.
std::string explain(const Tableau& t);

}  // namespace dbtab
