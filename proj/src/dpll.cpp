#include "dpll.hpp"

#include <algorithm>

namespace dbtab::detail {

void Dpll::add_clause(std::vector<int> clause) {
  std::sort(clause.begin(), clause.end());
  clause.erase(std::unique(clause.begin(), clause.end()), clause.end());
  for (std::size_t i = 0; i + 1 < clause.size(); ++i) {
    if (std::binary_search(clause.begin(), clause.end(), -clause[i])) return;  // tautology
  }
  if (clause.empty()) {
    empty_clause_ = true;
  } else if (clause.size() == 1) {
    units_.push_back(clause[0]);
  } else {
    clauses_.push_back(std::move(clause));
  }
}

bool Dpll::assign(int lit, std::size_t) {
  signed char v = lit_value(lit);
  if (v > 0) return true;
  if (v < 0) return false;
  assign_[static_cast<std::size_t>(lit > 0 ? lit : -lit)] = lit > 0 ? 1 : -1;
  trail_.push_back(lit);
  return true;
}

void Dpll::undo(std::size_t trail_size) {
  while (trail_.size() > trail_size) {
    int lit = trail_.back();
    trail_.pop_back();
    assign_[static_cast<std::size_t>(lit > 0 ? lit : -lit)] = 0;
  }
  head_ = std::min(head_, trail_size);
}

bool Dpll::propagate() {
  while (head_ < trail_.size()) {
    int falsified = -trail_[head_++];
    auto& list = watches_[index(falsified)];
    for (std::size_t i = 0; i < list.size();) {
      auto& c = clauses_[list[i]];
      if (c[0] == falsified) std::swap(c[0], c[1]);
      if (lit_value(c[0]) > 0) {
        ++i;
        continue;
      }
      bool moved = false;
      for (std::size_t k = 2; k < c.size(); ++k) {
        if (lit_value(c[k]) >= 0) {
          std::swap(c[1], c[k]);
          watches_[index(c[1])].push_back(list[i]);
          list[i] = list.back();
          list.pop_back();
          moved = true;
          break;
        }
      }
      if (moved) continue;
      if (!assign(c[0], 0)) return false;
      ++i;
    }
  }
  return true;
}

int Dpll::pick() const {
  for (int v = 1; v <= vars_; ++v) {
    if (assign_[static_cast<std::size_t>(v)] == 0) return v;
  }
  return 0;
}

bool Dpll::solve(const std::vector<int>& assumptions) {
  if (empty_clause_) return false;
  assign_.assign(static_cast<std::size_t>(vars_) + 1, 0);
  trail_.clear();
  head_ = 0;
  watches_.assign(2 * (static_cast<std::size_t>(vars_) + 1), {});
  for (std::size_t i = 0; i < clauses_.size(); ++i) {
    watches_[index(clauses_[i][0])].push_back(i);
    watches_[index(clauses_[i][1])].push_back(i);
  }
  for (int u : units_) {
    if (!assign(u, 0)) return false;
  }
  for (int a : assumptions) {
    if (!assign(a, 0)) return false;
  }
  if (!propagate()) return false;

  // Chronological backtracking over decisions (variable, tried-both flag).
  struct Decision {
    int lit;
    std::size_t trail;
    bool flipped;
  };
  std::vector<Decision> stack;
  for (;;) {
    int v = pick();
    if (v == 0) return true;
    stack.push_back({-v, trail_.size(), false});
    assign(-v, 0);
    while (!propagate()) {
      while (!stack.empty() && stack.back().flipped) stack.pop_back();
      if (stack.empty()) return false;
      Decision& d = stack.back();
      undo(d.trail);
      d.lit = -d.lit;
      d.flipped = true;
      assign(d.lit, 0);
    }
  }
}

}  // namespace dbtab::detail
