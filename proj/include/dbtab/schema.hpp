#pragma once

#include <map>
#include <string>

namespace dbtab {

// Predicate name -> arity.
class Schema {
 public:
  Schema() = default;

  // Registers a predicate; throws SchemaError on arity conflict or arity < 1.
  void add(const std::string& predicate, int arity);
  bool contains(const std::string& predicate) const;
  // Throws SchemaError for unknown predicates.
  int arity(const std::string& predicate) const;
  const std::map<std::string, int>& predicates() const { return arity_; }
  bool empty() const { return arity_.empty(); }

  friend bool operator==(const Schema& a, const Schema& b) { return a.arity_ == b.arity_; }
  friend bool operator!=(const Schema& a, const Schema& b) { return !(a == b); }

 private:
  std::map<std::string, int> arity_;
};

}  // namespace dbtab
