#include "dbtab/oracle.hpp"

#include <algorithm>
#include <cstdint>
#include <random>

#include "dbtab/errors.hpp"

namespace dbtab::oracle {

namespace {

void all_atoms(const Schema& schema, const std::set<std::string>& preds, const std::vector<std::string>& pool,
               std::vector<GroundAtom>& out) {
  for (const auto& [p, k] : schema.predicates()) {
    if (!preds.count(p)) continue;
    std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
    if (pool.empty()) continue;
    for (;;) {
      GroundAtom a{p, {}};
      for (std::size_t i : idx) a.args.push_back(pool[i]);
      out.push_back(std::move(a));
      std::size_t j = idx.size();
      while (j > 0 && ++idx[j - 1] == pool.size()) idx[--j] = 0;
      if (j == 0) break;
    }
  }
}

Instance apply(const Instance& r, const std::vector<GroundAtom>& del, const std::vector<GroundAtom>& ins) {
  Instance out = r;
  for (const GroundAtom& a : del) out.erase(a);
  for (const GroundAtom& a : ins) out.insert(a);
  return out;
}

std::size_t choose(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t c = 1;
  for (std::size_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

void add_predicates(const Formula& f, Schema& schema) {
  if (f.is_atom()) {
    schema.add(f.predicate(), static_cast<int>(f.terms().size()));
    return;
  }
  if (f.is_equal()) return;
  add_predicates(f.lhs(), schema);
  if (f.kind() == Formula::Kind::kAnd || f.kind() == Formula::Kind::kOr || f.kind() == Formula::Kind::kImplies) {
    add_predicates(f.rhs(), schema);
  }
}

// r over its schema extended by the constraint predicates.
Instance widen(const Instance& r, const std::vector<Formula>& ics) {
  Schema schema = r.schema();
  for (const Formula& f : ics) add_predicates(f, schema);
  return Instance(schema, r.atoms());
}

template <typename F>
void for_each_combination(std::size_t n, std::size_t k, F&& fn) {
  if (k > n) return;
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  for (;;) {
    fn(pick);
    std::size_t j = k;
    while (j > 0 && pick[j - 1] == n - k + j - 1) --j;
    if (j == 0) return;
    ++pick[j - 1];
    for (std::size_t i = j; i < k; ++i) pick[i] = pick[i - 1] + 1;
  }
}

}  // namespace

std::vector<std::string> constant_pool(const std::vector<Formula>& ics, const Instance& r,
                                       const DomainPolicy& policy) {
  std::set<std::string> names = active_domain(r);
  names.insert(policy.extra_constants.begin(), policy.extra_constants.end());
  int existentials = 0;
  for (const Formula& f : ics) {
    auto c = constants_of(f);
    names.insert(c.begin(), c.end());
    existentials += existential_count(f);
  }
  int fresh = policy.fresh_pool ? *policy.fresh_pool : existentials;
  std::vector<std::string> out(names.begin(), names.end());
  auto extra = DomainPolicy::fresh_names(names, fresh);
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

ChangeUniverse change_universe(const std::vector<Formula>& ics, const Instance& base, const DomainPolicy& policy) {
  Instance r = widen(base, ics);
  ChangeUniverse u;
  u.constants = constant_pool(ics, r, policy);
  std::set<std::string> pos, neg;
  for (const Formula& f : ics) predicate_polarity(f, pos, neg);
  for (const GroundAtom& a : r.atoms()) {
    if (neg.count(a.predicate)) u.deletions.push_back(a);
  }
  std::vector<GroundAtom> all;
  all_atoms(r.schema(), pos, u.constants, all);
  for (GroundAtom& a : all) {
    if (!r.contains(a)) u.insertions.push_back(std::move(a));
  }
  u.insertion_cap = r.size() + ics.size();
  return u;
}

std::vector<Instance> enumerate_repairs_bruteforce(const std::vector<Formula>& ics, const Instance& base,
                                                   const ChangeUniverse& universe) {
  Instance r = widen(base, ics);
  std::vector<GroundAtom> cands = universe.deletions;
  std::size_t nd = cands.size();
  cands.insert(cands.end(), universe.insertions.begin(), universe.insertions.end());
  std::size_t n = cands.size();
  std::size_t ni = n - nd;
  if (n > 64) throw ResourceLimitError("oracle: " + std::to_string(n) + " candidate changes");
  std::size_t cap = std::min(universe.insertion_cap, ni);
  std::size_t total = 0;
  for (std::size_t i = 0; i <= cap; ++i) total += choose(ni, i);
  if (nd >= 22 || (total << nd) > kMaxCandidates) {
    throw ResourceLimitError("oracle: more than " + std::to_string(kMaxCandidates) + " candidate change sets");
  }

  // Evaluate over the pool plus witnesses outside it.
  std::set<std::string> taken(universe.constants.begin(), universe.constants.end());
  int existentials = 0;
  for (const Formula& f : ics) existentials += existential_count(f);
  Evaluator ev(r.schema(), universe.constants, DomainPolicy::fresh_names(taken, existentials), ics);
  ev.load(r);
  std::vector<std::size_t> ids;
  for (const GroundAtom& a : cands) {
    auto id = ev.atom_id(a);
    if (!id) throw PreconditionError("oracle: atom outside the pool: " + a.str());
    ids.push_back(*id);
  }

  // Level k holds the change sets of size k, so a consistent set that
  // contains no earlier one is minimal.
  std::vector<std::uint64_t> found;
  for (std::size_t k = 0; k <= nd + cap; ++k) {
    for (std::size_t d = 0; d <= std::min(k, nd); ++d) {
      std::size_t i = k - d;
      if (i > cap) continue;
      for_each_combination(nd, d, [&](const std::vector<std::size_t>& dels) {
        std::uint64_t dmask = 0;
        for (std::size_t x : dels) dmask |= std::uint64_t{1} << x;
        for_each_combination(ni, i, [&](const std::vector<std::size_t>& inss) {
          std::uint64_t mask = dmask;
          for (std::size_t x : inss) mask |= std::uint64_t{1} << (nd + x);
          if (std::any_of(found.begin(), found.end(), [&](std::uint64_t f) { return (mask & f) == f; })) return;
          for (std::size_t x : dels) ev.set(ids[x], false);
          for (std::size_t x : inss) ev.set(ids[nd + x], true);
          if (ev.holds_all()) found.push_back(mask);
          for (std::size_t x : dels) ev.set(ids[x], true);
          for (std::size_t x : inss) ev.set(ids[nd + x], false);
        });
      });
    }
  }

  std::vector<Instance> out;
  for (std::uint64_t mask : found) {
    std::vector<GroundAtom> del, ins;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1)) continue;
      (i < nd ? del : ins).push_back(cands[i]);
    }
    out.push_back(apply(r, del, ins));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Instance> enumerate_repairs_bruteforce(const std::vector<Formula>& ics, const Instance& r,
                                                   const DomainPolicy& policy) {
  return enumerate_repairs_bruteforce(ics, r, change_universe(ics, r, policy));
}

// ---------------------------------------------------------------- grounding

PropTheory::PropTheory(const std::vector<Formula>& ics, const Schema& schema, std::vector<std::string> pool)
    : schema_(schema), pool_(std::move(pool)) {
  for (const Formula& f : ics) {
    std::map<std::string, std::string> env;
    top(f, env);
  }
  for (int root : roots_) {
    std::set<std::size_t> vars;
    collect(root, vars);
    occurs_.emplace_back(vars.begin(), vars.end());
  }
}

int PropTheory::add(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

// Leading universal quantifiers and conjunctions split into separate instances.
void PropTheory::top(const Formula& f, std::map<std::string, std::string>& env) {
  if (f.kind() == Formula::Kind::kForall) {
    auto saved = env.find(f.variable()) != env.end() ? std::optional(env[f.variable()]) : std::nullopt;
    for (const std::string& c : pool_) {
      env[f.variable()] = c;
      top(f.body(), env);
    }
    if (saved) env[f.variable()] = *saved; else env.erase(f.variable());
    return;
  }
  if (f.kind() == Formula::Kind::kAnd) {
    top(f.lhs(), env);
    top(f.rhs(), env);
    return;
  }
  roots_.push_back(ground(f, env));
}

int PropTheory::ground(const Formula& f, std::map<std::string, std::string>& env) {
  auto name = [&](const Term& t) -> std::string {
    if (t.is_variable()) {
      auto it = env.find(t.name());
      if (it == env.end()) throw PreconditionError("oracle: free variable " + t.name());
      return it->second;
    }
    if (!t.is_constant()) throw PreconditionError("oracle: constraints must be function free");
    return t.name();
  };
  switch (f.kind()) {
    case Formula::Kind::kAtom: {
      GroundAtom a{f.predicate(), {}};
      for (const Term& t : f.terms()) a.args.push_back(name(t));
      auto it = ids_.find(a);
      if (it == ids_.end()) {
        it = ids_.emplace(a, atoms_.size()).first;
        atoms_.push_back(a);
      }
      return add({Op::kVar, it->second, {}});
    }
    case Formula::Kind::kEqual:
      return add({name(f.terms()[0]) == name(f.terms()[1]) ? Op::kTrue : Op::kFalse, 0, {}});
    case Formula::Kind::kNot:
      return add({Op::kNot, 0, {ground(f.lhs(), env)}});
    case Formula::Kind::kAnd:
      return add({Op::kAnd, 0, {ground(f.lhs(), env), ground(f.rhs(), env)}});
    case Formula::Kind::kOr:
      return add({Op::kOr, 0, {ground(f.lhs(), env), ground(f.rhs(), env)}});
    case Formula::Kind::kImplies: {
      int a = add({Op::kNot, 0, {ground(f.lhs(), env)}});
      return add({Op::kOr, 0, {a, ground(f.rhs(), env)}});
    }
    case Formula::Kind::kForall:
    case Formula::Kind::kExists: {
      auto had = env.find(f.variable());
      std::optional<std::string> saved = had != env.end() ? std::optional(had->second) : std::nullopt;
      Node n{f.kind() == Formula::Kind::kForall ? Op::kAnd : Op::kOr, 0, {}};
      for (const std::string& c : pool_) {
        env[f.variable()] = c;
        n.kids.push_back(ground(f.body(), env));
      }
      if (saved) env[f.variable()] = *saved; else env.erase(f.variable());
      return add(std::move(n));
    }
  }
  return add({Op::kFalse, 0, {}});
}

bool PropTheory::eval(int node, const std::vector<char>& m) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  switch (n.op) {
    case Op::kTrue:
      return true;
    case Op::kFalse:
      return false;
    case Op::kVar:
      return m[n.var] != 0;
    case Op::kNot:
      return !eval(n.kids[0], m);
    case Op::kAnd:
      return std::all_of(n.kids.begin(), n.kids.end(), [&](int k) { return eval(k, m); });
    case Op::kOr:
      return std::any_of(n.kids.begin(), n.kids.end(), [&](int k) { return eval(k, m); });
  }
  return false;
}

void PropTheory::collect(int node, std::set<std::size_t>& out) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.op == Op::kVar) out.insert(n.var);
  for (int k : n.kids) collect(k, out);
}

bool PropTheory::holds(std::size_t instance, const std::vector<char>& m) const { return eval(roots_[instance], m); }

std::vector<char> PropTheory::assignment(const Instance& r) const {
  std::vector<char> m(atoms_.size(), 0);
  for (std::size_t v = 0; v < atoms_.size(); ++v) m[v] = r.contains(atoms_[v]) ? 1 : 0;
  return m;
}

std::vector<Instance> winslett_update_models(const Instance& base, const std::vector<Formula>& ics,
                                             const std::vector<std::string>& pool) {
  Instance r = widen(base, ics);
  PropTheory theory(ics, r.schema(), pool);
  std::vector<char> start = theory.assignment(r);
  // Atoms of r outside the theory are never changed; the search flips atoms
  // of a violated instance, so every minimal difference is reached.
  std::set<std::set<std::size_t>> seen, models;
  std::vector<std::set<std::size_t>> stack{{}};
  while (!stack.empty()) {
    std::set<std::size_t> delta = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(delta).second) continue;
    if (std::any_of(models.begin(), models.end(), [&](const std::set<std::size_t>& m) {
          return std::includes(delta.begin(), delta.end(), m.begin(), m.end());
        })) {
      continue;
    }
    std::vector<char> m = start;
    for (std::size_t v : delta) m[v] = !m[v];
    std::optional<std::size_t> violated;
    for (std::size_t i = 0; i < theory.instance_count(); ++i) {
      if (!theory.holds(i, m)) {
        violated = i;
        break;
      }
    }
    if (!violated) {
      models.insert(delta);
      continue;
    }
    for (std::size_t v : theory.atoms_of(*violated)) {
      if (delta.count(v)) continue;
      auto next = delta;
      next.insert(v);
      stack.push_back(std::move(next));
    }
  }
  std::vector<Instance> out;
  for (const auto& delta : models) {
    bool minimal = std::none_of(models.begin(), models.end(), [&](const std::set<std::size_t>& other) {
      return other != delta && std::includes(delta.begin(), delta.end(), other.begin(), other.end());
    });
    if (!minimal) continue;
    Instance x = r;
    for (std::size_t v : delta) {
      if (x.contains(theory.atom(v))) {
        x.erase(theory.atom(v));
      } else {
        x.insert(theory.atom(v));
      }
    }
    out.push_back(std::move(x));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Instance> winslett_update_models(const Instance& r, const std::vector<Formula>& ics,
                                             const DomainPolicy& policy) {
  return winslett_update_models(r, ics, constant_pool(ics, r, policy));
}

Answers consistent_answers_bruteforce(const std::vector<Formula>& ics, const Instance& r, const Formula& q,
                                      const std::vector<std::string>& free, const DomainPolicy& policy) {
  std::vector<Instance> rs = enumerate_repairs_bruteforce(ics, r, policy);
  DomainPolicy p = policy;
  auto qc = constants_of(q);
  p.extra_constants.insert(qc.begin(), qc.end());
  std::set<std::string> dom = active_domain(r);
  dom.insert(qc.begin(), qc.end());

  Answers out;
  auto holds = [&](const Formula& s) {
    return std::all_of(rs.begin(), rs.end(), [&](const Instance& x) { return satisfies(x, s, p); });
  };
  if (free.empty()) {
    out.boolean = true;
    out.verdict = holds(q);
    return out;
  }
  std::vector<std::vector<std::string>> tuples{{}};
  for (std::size_t i = 0; i < free.size(); ++i) {
    std::vector<std::vector<std::string>> next;
    for (const auto& t : tuples) {
      for (const std::string& c : dom) {
        next.push_back(t);
        next.back().push_back(c);
      }
    }
    tuples = std::move(next);
  }
  for (const auto& t : tuples) {
    Substitution s;
    for (std::size_t i = 0; i < free.size(); ++i) s.bind(Term::Variable(free[i]), Term::Constant(t[i]));
    if (holds(substitute(q, s))) out.tuples.insert(t);
  }
  return out;
}

// ---------------------------------------------------------------- sweep

namespace {

const std::vector<std::string> kSweepConstants{"a", "b", "c"};

Schema sweep_schema(const std::string& name) {
  Schema s;
  if (name == "PR") {
    s.add("P", 1);
    s.add("R", 2);
  } else {
    s.add("R", 2);
    s.add("S", 2);
  }
  return s;
}

std::vector<GroundAtom> sweep_atoms(const Schema& s) {
  std::vector<GroundAtom> out;
  std::set<std::string> preds;
  for (const auto& [p, k] : s.predicates()) preds.insert(p);
  all_atoms(s, preds, kSweepConstants, out);
  return out;
}

Case make_case(const std::string& schema_name, const std::vector<GroundAtom>& atoms, const std::string& ic) {
  Schema s = sweep_schema(schema_name);
  Case c;
  c.r = Instance(s, AtomSet(atoms.begin(), atoms.end()));
  c.ics = {parse_formula(ic, s)};
  c.name = c.r.str() + " | " + ic;
  return c;
}

}  // namespace

std::vector<std::string> constraint_family(const std::string& schema_name) {
  if (schema_name == "PR") {
    return {
        "forall X,Y,Z. (R(X,Y) & R(X,Z) -> Y = Z)",
        "forall X. (P(X) -> exists Y. R(X,Y))",
        "forall X,Y. (R(X,Y) -> P(Y))",
        "forall X. ~(P(X) & R(X,X))",
        "exists X. P(X)",
        "exists X,Y. R(X,Y)",
    };
  }
  return {
      "forall X,Y,Z. (R(X,Y) & R(X,Z) -> Y = Z)",
      "forall X,Y. (R(X,Y) -> exists Z. S(Y,Z))",
      "forall X,Y. ~(R(X,Y) & S(X,Y))",
      "exists X,Y. S(X,Y)",
  };
}

std::vector<Case> sweep_cases(std::size_t max_facts) {
  std::vector<Case> out;
  for (const std::string name : {"PR", "RS"}) {
    std::vector<GroundAtom> atoms = sweep_atoms(sweep_schema(name));
    auto family = constraint_family(name);
    for (std::size_t k = 0; k <= std::min(max_facts, atoms.size()); ++k) {
      for_each_combination(atoms.size(), k, [&](const std::vector<std::size_t>& pick) {
        std::vector<GroundAtom> chosen;
        for (std::size_t i : pick) chosen.push_back(atoms[i]);
        for (const std::string& ic : family) out.push_back(make_case(name, chosen, ic));
      });
    }
  }
  return out;
}

std::vector<Case> random_cases(unsigned seed, std::size_t count, std::size_t max_facts) {
  std::mt19937 rng(seed);
  std::vector<Case> out;
  for (std::size_t n = 0; n < count; ++n) {
    std::string name = rng() % 2 ? "PR" : "RS";
    std::vector<GroundAtom> atoms = sweep_atoms(sweep_schema(name));
    std::shuffle(atoms.begin(), atoms.end(), rng);
    atoms.resize(rng() % (max_facts + 1));
    auto family = constraint_family(name);
    out.push_back(make_case(name, atoms, family[rng() % family.size()]));
  }
  return out;
}

}  // namespace dbtab::oracle
