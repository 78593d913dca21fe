#pragma once

#include <cstddef>
#include <vector>

namespace dbtab::detail {

// Literals are +v / -v for variables v >= 1.
class Dpll {
 public:
  int new_var() { return ++vars_; }
  int vars() const { return vars_; }
  void add_clause(std::vector<int> clause);
  // Satisfiable under the assumed literals.
  bool solve(const std::vector<int>& assumptions);
  // Value of v in the last satisfying assignment.
  bool value(int v) const { return assign_[static_cast<std::size_t>(v)] > 0; }

 private:
  bool assign(int lit, std::size_t reason_level);
  bool propagate();
  void undo(std::size_t trail_size);
  int pick() const;
  signed char lit_value(int lit) const {
    signed char a = assign_[static_cast<std::size_t>(lit > 0 ? lit : -lit)];
    return lit > 0 ? a : static_cast<signed char>(-a);
  }
  std::size_t index(int lit) const {
    return 2 * static_cast<std::size_t>(lit > 0 ? lit : -lit) + (lit < 0 ? 1 : 0);
  }

  int vars_ = 0;
  bool empty_clause_ = false;
  std::vector<std::vector<int>> clauses_;
  std::vector<int> units_;
  std::vector<std::vector<std::size_t>> watches_;  // by literal index
  std::vector<signed char> assign_;
  std::vector<int> trail_;
  std::size_t head_ = 0;
};

}  // namespace dbtab::detail
