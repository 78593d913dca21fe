#pragma once

#include <set>
#include <string>
#include <vector>

#include "dbtab/formula.hpp"
#include "dbtab/instance.hpp"
#include "dbtab/repair.hpp"

namespace dbtab {

struct Query {
  Formula formula;
  std::vector<std::string> free;  // answer positions, in order

  // Free variables in order of first occurrence.
  static Query of(const Formula& f);
  static Query parse(const std::string& text, const Schema& schema);
  // Throws PreconditionError unless `free` lists exactly the free variables.
  Query(Formula f, std::vector<std::string> vars);
  Query() = default;

  bool boolean() const { return free.empty(); }
  // The sentence Q(t).
  Formula instantiate(const std::vector<std::string>& tuple) const;
  std::string str() const;
};

using Tuple = std::vector<std::string>;

// How one combined branch closed.
struct AnswerProof {
  Tuple tuple;
  int repair = 0;  // 1-based index into the repairs
  std::string reason;
  std::vector<std::string> bindings;  // quantifier instances behind the closing literals
};

struct AnswerSet {
  bool boolean = false;
  bool verdict = false;        // sentences
  std::set<Tuple> tuples;      // open queries
  std::vector<AnswerProof> provenance;

  friend bool operator==(const AnswerSet& a, const AnswerSet& b) {
    return a.boolean == b.boolean && a.verdict == b.verdict && a.tuples == b.tuples;
  }
};

// Computes the repairs once and answers any number of queries against them.
class ConsistentAnswerer {
 public:
  ConsistentAnswerer(const std::vector<Formula>& ics, const Instance& r, const RepairOptions& options = {});

  const RepairReport& report() const { return report_; }
  const Instance& instance() const { return r_; }

  // Closes the combined tableau of the opened repairs with TP(~sentence).
  AnswerSet consistent_true(const Formula& sentence) const;
  // Candidate tuples closing the combined tableau.
  AnswerSet consistent_answers(const Query& q) const;
  // Tuples tried for q: Act(r) and query constants, narrowed by the
  // positions q's variables must take in a repair.
  std::vector<Tuple> candidates(const Query& q) const;
  AnswerSet answer(const Query& q) const;

 private:
  bool closes(const Formula& sentence, const Tuple& tuple, std::vector<AnswerProof>* proofs) const;

  std::vector<Formula> ics_;
  Instance r_;
  RepairOptions options_;
  RepairReport report_;
};

AnswerSet consistent_true(const std::vector<Formula>& ics, const Instance& r, const Formula& sentence,
                          const RepairOptions& options = {});
AnswerSet consistent_answers(const std::vector<Formula>& ics, const Instance& r, const Query& q,
                             const RepairOptions& options = {});
// Evaluates q in every repair and intersects, over the same candidate space.
AnswerSet answers_via_repair_intersection(const std::vector<Formula>& ics, const Instance& r, const Query& q,
                                          const RepairOptions& options = {});

// Act(r) together with the constants of q, sorted.
std::vector<std::string> answer_domain(const Instance& r, const Query& q);

}  // namespace dbtab
