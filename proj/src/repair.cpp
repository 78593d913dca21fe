#include "dbtab/repair.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "dbtab/errors.hpp"
#include "dpll.hpp"

namespace dbtab {

namespace {

bool constants_only(const Formula& lit) {
  const auto& ts = lit.atom_of().terms();
  return std::all_of(ts.begin(), ts.end(), [](const Term& t) { return t.is_constant(); });
}

bool truth_in(const Instance& r, const Formula& lit) {
  if (lit.atom_of().is_equal()) return cwa_truth(r, lit);
  bool member = r.contains(GroundAtom::from_formula(lit.atom_of()));
  return lit.is_not() ? !member : member;
}

std::string describe(const ChangeSet& c) {
  std::string out;
  for (const GroundAtom& a : c.deleted) out += (out.empty() ? "-" : ", -") + a.str();
  for (const GroundAtom& a : c.inserted) out += (out.empty() ? "+" : ", +") + a.str();
  return out.empty() ? "no changes" : out;
}

}  // namespace

bool data_closed(const Branch& b) {
  if (!b.closed()) throw PreconditionError("data_closed: branch B" + std::to_string(b.id()) + " is not closed");
  return b.reason()->data();
}

std::vector<Opening> open_branch(const Branch& b, const Instance& r) {
  if (!b.finished() || b.status() == BranchStatus::kSuspended || (b.closed() && !b.reason()->data())) {
    throw PreconditionError("open_branch: branch B" + std::to_string(b.id()) + " cannot be opened");
  }
  std::vector<Term> terms = valuation_terms(b);
  std::vector<std::string> domain = valuation_domain(b);
  double combos = 1;
  for (std::size_t i = 0; i < terms.size(); ++i) combos *= static_cast<double>(domain.size());
  if (combos > 200000) {
    throw ResourceLimitError("too many valuations for branch B" + std::to_string(b.id()));
  }
  if (!terms.empty() && domain.empty()) return {};

  std::vector<Formula> lits = b.literals();
  std::vector<Formula> watches = b.deferred_watches();
  std::vector<Formula> pattern;
  for (const Formula& l : lits) {
    if (l.is_atom() && (!constants_only(l) || !r.contains(GroundAtom::from_formula(l)))) pattern.push_back(l);
  }

  Schema schema = r.schema();
  for (const Formula& l : lits) {
    const Formula& a = l.atom_of();
    if (a.is_atom() && !schema.contains(a.predicate())) schema.add(a.predicate(), static_cast<int>(a.terms().size()));
  }
  const Instance base(schema, r.atoms());

  std::vector<Opening> out;
  std::set<Instance> seen;
  std::vector<std::size_t> idx(terms.size(), 0);
  for (;;) {
    Substitution tau;
    for (std::size_t i = 0; i < terms.size(); ++i) tau.bind(terms[i], Term::Constant(domain[idx[i]]));
    bool ok = true;
    AtomSet pos, neg;
    std::vector<Formula> applied;
    for (const Formula& l : lits) {
      Formula g = substitute(l, tau);
      if (!constants_only(g)) {
        ok = false;
        break;
      }
      if (g.atom_of().is_equal()) {
        if (!cwa_truth(r, g)) {
          ok = false;
          break;
        }
        continue;
      }
      GroundAtom a = GroundAtom::from_formula(g.atom_of());
      (g.is_not() ? neg : pos).insert(a);
      applied.push_back(g);
    }
    for (auto it = pos.begin(); ok && it != pos.end(); ++it) ok = neg.count(*it) == 0;
    if (ok) {
      Opening o;
      o.sources = {b.id()};
      for (const GroundAtom& a : neg) {
        if (r.contains(a)) o.deleted.insert(a);
      }
      for (const GroundAtom& a : pos) {
        if (!r.contains(a)) o.inserted.insert(a);
      }
      o.result = base;
      for (const GroundAtom& a : o.deleted) o.result.erase(a);
      for (const GroundAtom& a : o.inserted) o.result.insert(a);
      for (const Formula& w : watches) ok = ok && truth_in(o.result, w);
      if (ok && seen.insert(o.result).second) {
        o.pattern = pattern;
        o.tau = tau;
        std::sort(applied.begin(), applied.end());
        applied.erase(std::unique(applied.begin(), applied.end()), applied.end());
        o.literals = std::move(applied);
        out.push_back(std::move(o));
      }
    }
    std::size_t k = idx.size();
    while (k > 0) {
      --k;
      if (++idx[k] < domain.size()) break;
      idx[k] = 0;
      if (k == 0) return out;
    }
    if (idx.empty()) return out;
  }
}

std::vector<Opening> minimal_openings(std::vector<Opening> openings) {
  std::vector<Opening> merged;
  std::map<Instance, std::size_t> where;
  for (Opening& o : openings) {
    auto it = where.find(o.result);
    if (it == where.end()) {
      where.emplace(o.result, merged.size());
      merged.push_back(std::move(o));
      continue;
    }
    auto& ids = merged[it->second].sources;
    for (int id : o.sources) {
      if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
  }
  std::vector<ChangeSet> changes;
  for (const Opening& o : merged) changes.push_back(o.changes());
  std::vector<Opening> out;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    bool beaten = false;
    for (std::size_t j = 0; j < merged.size() && !beaten; ++j) {
      beaten = j != i && changes[i].includes(changes[j]) && !(changes[i] == changes[j]);
    }
    if (!beaten) out.push_back(std::move(merged[i]));
  }
  return out;
}

std::vector<Branch> subsumption_prune(const std::vector<Branch>& branches) {
  auto openable = [](const Branch& b) { return b.open() || (b.closed() && b.reason()->data()); };
  std::vector<std::set<Formula>> parts;
  for (const Branch& b : branches) parts.push_back(b.database_literals());
  std::vector<Branch> out;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    bool drop = false;
    for (std::size_t j = 0; j < branches.size() && !drop; ++j) {
      if (j == i || parts[j].size() >= parts[i].size()) continue;
      if (!openable(branches[i]) || openable(branches[j])) {
        drop = std::includes(parts[i].begin(), parts[i].end(), parts[j].begin(), parts[j].end());
      }
    }
    if (!drop) out.push_back(branches[i]);
  }
  return out;
}

// ---------------------------------------------------------------- groundedness

struct GroundednessChecker::Impl {
  struct Pred {
    int arity = 0;
    std::size_t count = 0;  // tuples over the universe
    int orig = 0, repaired = 0, del = 0, ins = 0;  // first variable of each block
  };

  std::vector<std::string> universe;
  std::map<std::string, std::size_t> position;
  std::map<std::string, Pred> preds;
  Instance r;
  detail::Dpll solver;
  int top = 0;

  std::size_t tuple_index(const std::vector<std::string>& args) const {
    std::size_t idx = 0;
    for (const std::string& c : args) {
      auto it = position.find(c);
      if (it == position.end()) throw PreconditionError("constant " + c + " outside the grounding universe");
      idx = idx * universe.size() + it->second;
    }
    return idx;
  }

  std::vector<std::string> tuple_at(std::size_t idx, int arity) const {
    std::vector<std::string> out(static_cast<std::size_t>(arity));
    for (int k = arity; k-- > 0;) {
      out[static_cast<std::size_t>(k)] = universe[idx % universe.size()];
      idx /= universe.size();
    }
    return out;
  }

  int var_of(int block, const GroundAtom& a) const {
    return block + static_cast<int>(tuple_index(a.args));
  }

  int conj(std::vector<int> lits) {
    std::vector<int> keep;
    for (int l : lits) {
      if (l == -top) return -top;
      if (l != top) keep.push_back(l);
    }
    if (keep.empty()) return top;
    if (keep.size() == 1) return keep[0];
    int g = solver.new_var();
    std::vector<int> back{g};
    for (int l : keep) {
      solver.add_clause({-g, l});
      back.push_back(-l);
    }
    solver.add_clause(back);
    return g;
  }

  int disj(std::vector<int> lits) {
    for (int& l : lits) l = -l;
    return -conj(std::move(lits));
  }

  int encode(const Formula& f, std::map<std::string, std::string>& env) {
    using K = Formula::Kind;
    auto value = [&](const Term& t) -> std::string {
      if (t.is_variable()) return env.at(t.name());
      if (!t.is_constant()) throw PreconditionError("groundedness needs constraints without parameters");
      return t.name();
    };
    switch (f.kind()) {
      case K::kAtom: {
        GroundAtom a{f.predicate(), {}};
        for (const Term& t : f.terms()) a.args.push_back(value(t));
        return var_of(preds.at(a.predicate).repaired, a);
      }
      case K::kEqual:
        return value(f.terms()[0]) == value(f.terms()[1]) ? top : -top;
      case K::kNot:
        return -encode(f.lhs(), env);
      case K::kAnd: {
        int a = encode(f.lhs(), env);
        return conj({a, encode(f.rhs(), env)});
      }
      case K::kOr: {
        int a = encode(f.lhs(), env);
        return disj({a, encode(f.rhs(), env)});
      }
      case K::kImplies: {
        int a = encode(f.lhs(), env);
        return disj({-a, encode(f.rhs(), env)});
      }
      case K::kForall:
      case K::kExists: {
        auto saved = env.find(f.variable()) == env.end() ? std::optional<std::string>()
                                                          : std::optional<std::string>(env[f.variable()]);
        std::vector<int> parts;
        for (const std::string& c : universe) {
          env[f.variable()] = c;
          parts.push_back(encode(f.body(), env));
        }
        if (saved) {
          env[f.variable()] = *saved;
        } else {
          env.erase(f.variable());
        }
        return f.kind() == K::kForall ? conj(std::move(parts)) : disj(std::move(parts));
      }
    }
    return top;
  }

  // All L and K literals fixed by N for these changes, positive ones for the changes.
  std::vector<int> assumptions(const ChangeSet& changes, bool include_changes) const {
    std::vector<int> out;
    for (const auto& [name, p] : preds) {
      for (std::size_t i = 0; i < p.count; ++i) {
        GroundAtom a{name, tuple_at(i, p.arity)};
        bool d = changes.deleted.count(a) > 0, k = changes.inserted.count(a) > 0;
        if (!d) out.push_back(-(p.del + static_cast<int>(i)));
        if (!k) out.push_back(-(p.ins + static_cast<int>(i)));
        if (include_changes && d) out.push_back(p.del + static_cast<int>(i));
        if (include_changes && k) out.push_back(p.ins + static_cast<int>(i));
      }
    }
    return out;
  }
};

GroundednessChecker::GroundednessChecker(const std::vector<Formula>& ics, const Instance& r,
                                         std::vector<std::string> universe)
    : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  std::set<std::string> names(universe.begin(), universe.end());
  for (const std::string& c : active_domain(r)) {
    if (names.insert(c).second) universe.push_back(c);
  }
  for (const Formula& f : ics) {
    for (const std::string& c : constants_of(f)) {
      if (names.insert(c).second) universe.push_back(c);
    }
  }
  m.universe = std::move(universe);
  for (std::size_t i = 0; i < m.universe.size(); ++i) m.position[m.universe[i]] = i;
  m.r = r;
  std::map<std::string, int> arities;
  for (const auto& [p, k] : r.schema().predicates()) arities[p] = k;
  for (const Formula& f : ics) {
    std::function<void(const Formula&)> walk = [&](const Formula& g) {
      if (g.is_atom()) {
        arities[g.predicate()] = static_cast<int>(g.terms().size());
      } else if (!g.is_equal()) {
        walk(g.lhs());
        if (g.kind() == Formula::Kind::kAnd || g.kind() == Formula::Kind::kOr ||
            g.kind() == Formula::Kind::kImplies) {
          walk(g.rhs());
        }
      }
    };
    walk(f);
  }
  m.top = m.solver.new_var();
  m.solver.add_clause({m.top});
  for (const auto& [name, arity] : arities) {
    Impl::Pred p;
    p.arity = arity;
    p.count = 1;
    for (int k = 0; k < arity; ++k) p.count *= m.universe.size();
    for (int* block : {&p.orig, &p.repaired, &p.del, &p.ins}) {
      *block = m.solver.vars() + 1;
      for (std::size_t i = 0; i < p.count; ++i) m.solver.new_var();
    }
    for (std::size_t i = 0; i < p.count; ++i) {
      int o = p.orig + static_cast<int>(i), q = p.repaired + static_cast<int>(i);
      int l = p.del + static_cast<int>(i), k = p.ins + static_cast<int>(i);
      // L = R \ P and K = P \ R
      m.solver.add_clause({-l, o});
      m.solver.add_clause({-l, -q});
      m.solver.add_clause({l, -o, q});
      m.solver.add_clause({-k, q});
      m.solver.add_clause({-k, -o});
      m.solver.add_clause({k, -q, o});
      GroundAtom a{name, m.tuple_at(i, arity)};
      m.solver.add_clause({r.contains(a) ? o : -o});
    }
    m.preds.emplace(name, p);
  }
  for (const Formula& f : ics) {
    std::map<std::string, std::string> env;
    m.solver.add_clause({m.encode(f, env)});
  }
}

GroundednessChecker::~GroundednessChecker() = default;

const std::vector<std::string>& GroundednessChecker::universe() const { return impl_->universe; }

bool GroundednessChecker::model(const ChangeSet& changes) {
  return impl_->solver.solve(impl_->assumptions(changes, true));
}

std::optional<std::string> GroundednessChecker::unsupported(const ChangeSet& changes) {
  Impl& m = *impl_;
  std::vector<int> base = m.assumptions(changes, false);
  auto test = [&](const GroundAtom& a, bool deletion) -> std::optional<std::string> {
    const auto& p = m.preds.at(a.predicate);
    int v = (deletion ? p.del : p.ins) + static_cast<int>(m.tuple_index(a.args));
    std::vector<int> as = base;
    as.push_back(-v);
    if (m.solver.solve(as)) return std::string(deletion ? "L_" : "K_") + a.str();
    return std::nullopt;
  };
  for (const GroundAtom& a : changes.deleted) {
    if (auto bad = test(a, true)) return bad;
  }
  for (const GroundAtom& a : changes.inserted) {
    if (auto bad = test(a, false)) return bad;
  }
  return std::nullopt;
}

bool GroundednessChecker::grounded(const ChangeSet& changes) { return model(changes) && !unsupported(changes); }

std::set<std::string> GroundednessChecker::lambda(const ChangeSet& changes) const {
  std::set<std::string> out;
  Instance result = impl_->r;
  for (const GroundAtom& a : impl_->r.atoms()) out.insert(a.str());
  for (const GroundAtom& a : changes.deleted) {
    out.insert("L_" + a.str());
    result.erase(a);
  }
  for (const GroundAtom& a : changes.inserted) {
    out.insert("K_" + a.str());
    result.insert(a);
  }
  for (const GroundAtom& a : result.atoms()) out.insert("P_" + a.str());
  return out;
}

std::set<std::string> GroundednessChecker::completion(const ChangeSet& changes) const {
  std::set<std::string> out;
  for (const auto& [name, p] : impl_->preds) {
    for (std::size_t i = 0; i < p.count; ++i) {
      GroundAtom a{name, impl_->tuple_at(i, p.arity)};
      if (!changes.deleted.count(a)) out.insert("~L_" + a.str());
      if (!changes.inserted.count(a)) out.insert("~K_" + a.str());
      out.insert(impl_->r.contains(a) ? a.str() : "~" + a.str());
    }
  }
  return out;
}

bool grounded(const Opening& o, const std::vector<Formula>& ics, const Instance& r,
              const std::vector<std::string>& universe) {
  GroundednessChecker checker(ics, r, universe);
  return checker.grounded(o.changes());
}

std::vector<std::string> repair_universe(const TableauContext& ctx) {
  std::set<std::string> names;
  if (ctx.base) names = active_domain(ctx.base->instance);
  for (const Term& c : ctx.constants) names.insert(c.name());
  std::vector<std::string> out(names.begin(), names.end());
  out.insert(out.end(), ctx.fresh.begin(), ctx.fresh.end());
  return out;
}

// ---------------------------------------------------------------- pipeline

namespace {

class RepairPruner : public BranchPruner {
 public:
  RepairPruner(const Instance& r, GroundednessChecker* checker, bool dominance)
      : r_(r), checker_(checker), dominance_(dominance) {}

  std::optional<std::string> suspend(const Branch&, const ChangeSet& next) override {
    if (dominance_) {
      for (const ChangeSet& found : found_) {
        if (next.includes(found)) return "dominated by the opening with " + describe(found);
      }
    }
    if (checker_) {
      if (auto bad = checker_->unsupported(next)) return "not grounded: " + *bad + " is not entailed";
    }
    return std::nullopt;
  }

  void finished(const Branch& b) override {
    if (!dominance_) return;
    for (const Opening& o : open_branch(b, r_)) {
      ChangeSet c = o.changes();
      if (std::find(found_.begin(), found_.end(), c) == found_.end()) found_.push_back(c);
    }
  }

 private:
  const Instance& r_;
  GroundednessChecker* checker_;
  bool dominance_;
  std::vector<ChangeSet> found_;
};

}  // namespace

RepairReport compute_repairs(const std::vector<Formula>& ics, const Instance& r, const RepairOptions& options) {
  RepairReport report;
  FreshSymbols fresh;
  for (const Formula& f : ics) report.skolemized.push_back(skolemize(f, fresh));

  auto ctx = make_context(report.skolemized, &r, options.policy);
  std::vector<std::string> universe = repair_universe(*ctx);
  std::unique_ptr<GroundednessChecker> checker;
  if (options.groundedness) checker = std::make_unique<GroundednessChecker>(ics, r, universe);

  std::unique_ptr<RepairPruner> pruner;
  BuildOptions build_options;
  if (options.subsumption || options.groundedness) {
    pruner = std::make_unique<RepairPruner>(r, checker.get(), options.subsumption);
    build_options.pruner = pruner.get();
  }
  report.tableau = build(report.skolemized, r, options.policy, build_options);

  const auto& all = report.tableau.branches();
  std::vector<int> open_ids;
  for (const Branch& b : all) {
    if (b.open()) open_ids.push_back(b.id());
    if (b.closed() && !b.reason()->data()) report.not_openable.push_back(b.id());
  }
  report.consistent = !open_ids.empty();

  std::vector<Branch> kept = options.subsumption ? subsumption_prune(all) : all;
  std::set<int> kept_ids;
  for (const Branch& b : kept) kept_ids.insert(b.id());
  for (const Branch& b : all) {
    if (!kept_ids.count(b.id())) report.subsumed.push_back(b.id());
  }
  for (const Branch& b : kept) {
    if (b.open() || (b.closed() && b.reason()->data())) {
      for (Opening& o : open_branch(b, r)) report.openings.push_back(std::move(o));
    }
  }

  if (report.consistent) {
    Opening same;
    same.sources = open_ids;
    same.result = r;
    report.repairs.push_back(same);
    return report;
  }
  std::vector<Opening> candidates;
  for (const Opening& o : report.openings) {
    if (!checker || checker->grounded(o.changes())) candidates.push_back(o);
  }
  report.repairs = minimal_openings(std::move(candidates));
  std::sort(report.repairs.begin(), report.repairs.end(),
            [](const Opening& a, const Opening& b) { return a.result < b.result; });
  return report;
}

std::vector<Instance> repairs(const std::vector<Formula>& ics, const Instance& r, const RepairOptions& options) {
  std::vector<Instance> out;
  for (const Opening& o : compute_repairs(ics, r, options).repairs) out.push_back(o.result);
  return out;
}

}  // namespace dbtab
