#include "dbtab/tableau.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <tuple>

#include "dbtab/errors.hpp"

namespace dbtab {

// ---------------------------------------------------------------- helpers

namespace {

bool is_ground_over_constants(const Formula& lit) {
  for (const Term& t : lit.atom_of().terms()) {
    if (!t.is_constant()) return false;
  }
  return true;
}

Formula complement(const Formula& lit) { return lit.is_not() ? lit.lhs() : Formula::Not(lit); }

int max_depth(const Formula& f) {
  int d = 0;
  for (const Term& t : f.terms()) d = std::max(d, t.depth());
  if (f.is_atom() || f.is_equal()) return d;
  d = std::max(d, max_depth(f.lhs()));
  if (f.kind() == Formula::Kind::kAnd || f.kind() == Formula::Kind::kOr ||
      f.kind() == Formula::Kind::kImplies) {
    d = std::max(d, max_depth(f.rhs()));
  }
  return d;
}

// Beta components, flattened and deduplicated in order.
std::vector<Formula> beta_components(const Formula& f) {
  std::vector<Formula> out;
  std::function<void(const Formula&)> walk = [&](const Formula& g) {
    RuleClass c = classify(g);
    if (auto* b = std::get_if<Beta>(&c)) {
      walk(b->first);
      walk(b->second);
    } else if (std::find(out.begin(), out.end(), g) == out.end()) {
      out.push_back(g);
    }
  };
  walk(f);
  return out;
}

void strip_gamma(const Formula& f, std::vector<std::string>& vars, Formula& matrix) {
  matrix = f;
  for (;;) {
    RuleClass c = classify(matrix);
    auto* g = std::get_if<Gamma>(&c);
    if (!g) return;
    vars.push_back(g->var);
    matrix = g->body;
  }
}

bool term_is_join_arg(const Term& t) { return t.is_variable() || t.ground(); }

// Atoms of negative database-literal components usable as join premises.
std::vector<Formula> join_premises(const Formula& matrix) {
  std::vector<Formula> out;
  for (const Formula& c : beta_components(matrix)) {
    if (!c.is_not() || !c.lhs().is_atom()) continue;
    const Formula& a = c.lhs();
    if (std::all_of(a.terms().begin(), a.terms().end(), term_is_join_arg)) out.push_back(a);
  }
  return out;
}

bool covers(const std::vector<Formula>& premises, const std::vector<std::string>& vars) {
  std::set<std::string> seen;
  for (const Formula& a : premises) {
    for (const Term& t : a.terms()) {
      if (t.is_variable()) seen.insert(t.name());
    }
  }
  return std::all_of(vars.begin(), vars.end(), [&](const std::string& v) { return seen.count(v) > 0; });
}

void collect_terms(const Term& t, std::vector<Term>& out) {
  if (t.is_constant() || t.is_variable()) return;
  if (!t.ground()) return;
  if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
}

bool contains_term(const Term& t, const Term& needle) {
  if (t == needle) return true;
  for (const Term& a : t.args()) {
    if (contains_term(a, needle)) return true;
  }
  return false;
}

bool literal_contains(const Formula& lit, const Term& needle) {
  for (const Term& t : lit.atom_of().terms()) {
    if (contains_term(t, needle)) return true;
  }
  return false;
}

Term replace_term(const Term& t, const Term& from, const Term& to) {
  if (t == from) return to;
  if (!t.is_skolem()) return t;
  std::vector<Term> args;
  for (const Term& a : t.args()) args.push_back(replace_term(a, from, to));
  return Term::Skolem(t.name(), std::move(args));
}

Formula replace_in_literal(const Formula& lit, const Term& from, const Term& to) {
  const Formula& a = lit.atom_of();
  std::vector<Term> terms;
  for (const Term& t : a.terms()) terms.push_back(replace_term(t, from, to));
  Formula out = a.is_atom() ? Formula::Atom(a.predicate(), terms) : Formula::Equal(terms[0], terms[1]);
  return lit.is_not() ? Formula::Not(out) : out;
}

// Adds the change a ground database literal makes to r; false if none.
bool grow(ChangeSet& changes, const Instance& r, const Formula& lit) {
  if (!lit.is_database_literal() || !is_ground_over_constants(lit)) return false;
  GroundAtom g = GroundAtom::from_formula(lit.atom_of());
  bool in_r = r.contains(g);
  if (lit.is_not() && in_r) return changes.deleted.insert(g).second;
  if (!lit.is_not() && !in_r) return changes.inserted.insert(g).second;
  return false;
}

// Some valuation of the terms of `pattern` turns it into `ground`.
bool may_match(const Formula& pattern, const Formula& ground) {
  if (pattern.is_equal() || ground.is_equal() || pattern.predicate() != ground.predicate()) return false;
  for (std::size_t i = 0; i < pattern.terms().size(); ++i) {
    const Term& t = pattern.terms()[i];
    if (t.is_constant() && t != ground.terms()[i]) return false;
  }
  return true;
}

// Literal is true in r, over constants.
bool true_in(const Instance& r, const Formula& lit) {
  if (!lit.is_database_literal() || !is_ground_over_constants(lit)) return false;
  bool member = r.contains(GroundAtom::from_formula(lit.atom_of()));
  return lit.is_not() ? !member : member;
}

std::string binding_text(const std::vector<std::string>& vars, const std::vector<Term>& tuple) {
  std::string out;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) out += ", ";
    out += vars[i] + "=" + tuple[i].str();
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- small types

std::shared_ptr<const IndexedInstance> IndexedInstance::make(const Instance& r) {
  auto out = std::make_shared<IndexedInstance>();
  out->instance = r;
  for (const GroundAtom& a : r.atoms()) {
    std::vector<Term> tuple;
    for (const std::string& c : a.args) tuple.push_back(Term::Constant(c));
    out->tuples[a.predicate].push_back(std::move(tuple));
  }
  return out;
}

bool ChangeSet::includes(const ChangeSet& other) const {
  return std::includes(deleted.begin(), deleted.end(), other.deleted.begin(), other.deleted.end()) &&
         std::includes(inserted.begin(), inserted.end(), other.inserted.begin(), other.inserted.end());
}

std::string ClosureReason::label() const {
  switch (kind) {
    case Kind::kUnaEquality: return "1";
    case Kind::kMissingFact: return "2a";
    case Kind::kNoSubstitution: return "2b";
    case Kind::kNegatedFact: return "3";
    case Kind::kComplementary: return "4";
    case Kind::kSelfInequality: return "5";
  }
  return "?";
}

std::string ClosureReason::str() const {
  std::string items;
  for (std::size_t i = 0; i < witnesses.size(); ++i) {
    if (i) items += ", ";
    items += witnesses[i].str();
  }
  std::string head = "cond " + label() + ": ";
  switch (kind) {
    case Kind::kUnaEquality: return head + items + " is false under UNA";
    case Kind::kMissingFact: return head + items + " not in r";
    case Kind::kNoSubstitution: return head + "no \xCF\x83 for " + items;
    case Kind::kNegatedFact: return head + items + " in r";
    case Kind::kComplementary: return head + items + " and its negation";
    case Kind::kSelfInequality: return head + items;
  }
  return head + items;
}

std::vector<Formula> Branch::literals() const {
  std::vector<Formula> out;
  for (const Formula& f : formulas_) {
    if (f.is_literal()) out.push_back(f);
  }
  return out;
}

std::set<Formula> Branch::database_literals() const {
  std::set<Formula> out;
  for (const Formula& f : formulas_) {
    if (f.is_database_literal()) out.insert(f);
  }
  return out;
}

std::vector<Formula> Branch::deferred() const {
  std::vector<Formula> out;
  for (const Deferred& d : deferred_) out.push_back(d.instance);
  return out;
}

std::vector<Formula> Branch::deferred_watches() const {
  std::vector<Formula> out;
  for (const Deferred& d : deferred_) out.push_back(d.watch);
  return out;
}

std::optional<std::string> Branch::origin(const Formula& f) const {
  auto it = origins_.find(f);
  if (it == origins_.end()) return std::nullopt;
  return it->second;
}

Branch Branch::root(std::shared_ptr<TableauContext> ctx, const std::vector<Formula>& formulas) {
  Branch b;
  b.data_ = ctx->base;
  b.ctx_ = std::move(ctx);
  for (const Formula& f : formulas) b.pending_.push_back(f);
  return b;
}

bool Tableau::closed() const {
  return std::all_of(branches_.begin(), branches_.end(), [](const Branch& b) { return b.closed(); });
}

// ---------------------------------------------------------------- valuation

std::vector<Term> valuation_terms(const Branch& b) {
  std::vector<Term> out;
  for (const Formula& lit : b.formulas()) {
    if (!lit.is_literal()) continue;
    for (const Term& t : lit.atom_of().terms()) collect_terms(t, out);
  }
  return out;
}

std::vector<std::string> valuation_domain(const Branch& b) {
  std::set<std::string> names;
  if (b.instance()) names = active_domain(*b.instance());
  for (const Term& c : b.context().constants) names.insert(c.name());
  std::vector<std::string> out(names.begin(), names.end());
  auto fresh = DomainPolicy::fresh_names(names, static_cast<int>(b.context().fresh.size()));
  out.insert(out.end(), fresh.begin(), fresh.end());
  return out;
}

namespace {

// Backtracking search for a valuation of `terms` making every literal true in r.
bool find_valuation(const std::vector<Formula>& lits, const std::vector<Term>& terms,
                    const std::vector<std::string>& domain, const Instance& r) {
  std::vector<std::vector<std::size_t>> ready(terms.size() + 1);
  for (std::size_t i = 0; i < lits.size(); ++i) {
    std::size_t last = 0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      if (literal_contains(lits[i], terms[k])) last = k + 1;
    }
    ready[last].push_back(i);
  }
  Substitution s;
  std::function<bool(std::size_t)> search = [&](std::size_t k) -> bool {
    for (std::size_t i : ready[k]) {
      Formula g = lits[i];
      for (std::size_t j = k; j-- > 0;) g = replace_in_literal(g, terms[j], *s.lookup(terms[j]));
      if (!cwa_truth(r, g)) return false;
    }
    if (k == terms.size()) return true;
    for (const std::string& c : domain) {
      s.bind(terms[k], Term::Constant(c));
      if (search(k + 1)) return true;
    }
    return false;
  };
  return search(0);
}

bool has_fact_match(const Instance& r, const Formula& atom) {
  for (const GroundAtom& g : r.atoms()) {
    if (g.predicate != atom.predicate()) continue;
    std::map<Term, std::string> sigma;
    bool ok = true;
    for (std::size_t i = 0; ok && i < g.args.size(); ++i) {
      const Term& t = atom.terms()[i];
      if (t.is_constant()) {
        ok = t.name() == g.args[i];
      } else {
        auto it = sigma.find(t);
        if (it == sigma.end()) {
          sigma.emplace(t, g.args[i]);
        } else {
          ok = it->second == g.args[i];
        }
      }
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace

std::optional<ClosureReason> closure_status(const Branch& b, const Instance* r) {
  using K = ClosureReason::Kind;
  const auto& fs = b.formulas();
  for (const Formula& f : fs) {
    if (f.is_equal() && f.terms()[0].is_constant() && f.terms()[1].is_constant() &&
        f.terms()[0] != f.terms()[1]) {
      return ClosureReason{K::kUnaEquality, {f}};
    }
  }
  for (const Formula& f : fs) {
    if (f.is_not() && b.contains(f.lhs())) return ClosureReason{K::kComplementary, {f.lhs()}};
  }
  for (const Formula& f : fs) {
    if (f.is_not() && f.lhs().is_equal() && f.lhs().terms()[0] == f.lhs().terms()[1]) {
      return ClosureReason{K::kSelfInequality, {f}};
    }
  }
  if (!r) return std::nullopt;
  for (const Formula& f : fs) {
    if (f.is_not() && f.lhs().is_atom() && is_ground_over_constants(f) &&
        r->contains(GroundAtom::from_formula(f.lhs()))) {
      return ClosureReason{K::kNegatedFact, {f.lhs()}};
    }
  }
  for (const Formula& f : fs) {
    if (f.is_atom() && is_ground_over_constants(f) && !r->contains(GroundAtom::from_formula(f))) {
      return ClosureReason{K::kMissingFact, {f}};
    }
  }
  std::vector<Formula> with_terms;
  std::vector<Formula> term_atoms;
  for (const Formula& f : fs) {
    if (!f.is_literal() || is_ground_over_constants(f)) continue;
    with_terms.push_back(f);
    if (f.is_atom()) {
      term_atoms.push_back(f);
      if (!has_fact_match(*r, f)) return ClosureReason{K::kNoSubstitution, {f}};
    }
  }
  if (with_terms.empty()) return std::nullopt;
  std::vector<Term> terms;
  for (const Formula& f : with_terms) {
    for (const Term& t : f.atom_of().terms()) collect_terms(t, terms);
  }
  if (!find_valuation(with_terms, terms, valuation_domain(b), *r)) {
    return ClosureReason{K::kNoSubstitution, term_atoms.empty() ? with_terms : term_atoms};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- safety

bool is_safe(const Formula& f) {
  RuleClass c = classify(f);
  if (auto* a = std::get_if<Alpha>(&c)) return is_safe(a->first) && is_safe(a->second);
  if (std::holds_alternative<Beta>(c)) {
    for (const Formula& comp : beta_components(f)) {
      if (!is_safe(comp)) return false;
    }
    return true;
  }
  if (auto* d = std::get_if<Delta>(&c)) return is_safe(d->body);
  if (std::holds_alternative<Gamma>(c)) {
    std::vector<std::string> vars;
    Formula matrix;
    strip_gamma(f, vars, matrix);
    if (!covers(join_premises(matrix), vars)) return false;
    for (const Formula& comp : beta_components(matrix)) {
      if (!is_safe(comp)) return false;
    }
    return true;
  }
  return true;
}

// ---------------------------------------------------------------- engine

class Engine {
 public:
  Engine(std::shared_ptr<TableauContext> ctx, BuildOptions options)
      : ctx_(std::move(ctx)), options_(options) {}

  Branch root(const std::vector<Formula>& formulas, std::shared_ptr<const IndexedInstance> data) {
    Branch b = Branch::root(ctx_, formulas);
    b.data_ = std::move(data);
    return b;
  }

  std::vector<Branch> step(Branch b) {
    if (b.finished_) return {std::move(b)};
    if (b.pending_.empty()) {
      if (!instantiate_gammas(b)) finish(b);
      return {std::move(b)};
    }
    Formula f = b.pending_.front();
    b.pending_.pop_front();
    RuleClass c = classify(f);
    // Without the fulfilment shortcut repeated alpha and beta formulas are
    // expanded again, so that branch sets compose exactly.
    bool resplit = !options_.skip_fulfilled &&
                   (std::holds_alternative<Beta>(c) || std::holds_alternative<Alpha>(c));
    if (b.contains(f) && !resplit) return {std::move(b)};
    if (std::holds_alternative<LiteralOrEquality>(c)) {
      if (options_.pruner && b.data_) {
        ChangeSet next = b.changes_;
        if (grow(next, b.data_->instance, f)) {
          if (auto why = options_.pruner->suspend(b, next)) {
            b.status_ = BranchStatus::kSuspended;
            b.suspension_ = *why;
            b.finished_ = true;
            return {std::move(b)};
          }
        }
      }
      place(b, f);
      on_literal(b, f);
    } else if (auto* a = std::get_if<Alpha>(&c)) {
      if (!b.contains(f)) place(b, f);
      inherit(b, f, a->second);
      inherit(b, f, a->first);
      if (a->second != a->first) b.pending_.push_front(a->second);
      b.pending_.push_front(a->first);
    } else if (std::holds_alternative<Gamma>(c)) {
      place(b, f);
      register_gamma(b, f);
    } else if (auto* d = std::get_if<Delta>(&c)) {
      place(b, f);
      Term p = ctx_->symbols->parameter();
      Substitution s;
      s.bind(Term::Variable(d->var), p);
      Formula inst = substitute(d->body, s);
      inherit(b, f, inst);
      b.pending_.push_front(inst);
    } else {
      std::vector<Formula> comps = beta_components(f);
      if (options_.skip_fulfilled) {
        for (const Formula& comp : comps) {
          if (b.contains(comp)) {
            place(b, f);
            return {std::move(b)};
          }
        }
        if (b.data_) {
          for (const Formula& comp : comps) {
            if (true_in(b.data_->instance, comp) && !b.contains(complement(comp))) {
              b.deferred_.push_back({f, comp});
              return {std::move(b)};
            }
          }
        }
      }
      if (!b.contains(f)) place(b, f);
      if (comps.size() == 1) {
        inherit(b, f, comps[0]);
        b.pending_.push_front(comps[0]);
        return {std::move(b)};
      }
      std::vector<Branch> children;
      for (std::size_t i = 0; i < comps.size(); ++i) {
        Branch child = b;
        child.path_.push_back(static_cast<int>(i));
        inherit(child, f, comps[i]);
        child.pending_.push_front(comps[i]);
        children.push_back(std::move(child));
      }
      return children;
    }
    if (should_stop(b)) finish(b);
    return {std::move(b)};
  }

  // Develops roots to completion; final branches in left-to-right order.
  std::vector<Branch> run(std::vector<Branch> roots) {
    using Key = std::tuple<std::size_t, long, std::vector<int>, long>;
    std::map<Key, Branch> work;
    long serial = 0;
    auto key_of = [&](const Branch& b) {
      if (!options_.pruner) return Key{0, 0, b.path_, serial++};
      return Key{b.changes_.size(), -static_cast<long>(b.path_.size()), b.path_, serial++};
    };
    for (Branch& b : roots) work.emplace(key_of(b), std::move(b));
    std::size_t total = work.size();
    std::vector<Branch> done;
    auto retire = [&](Branch b) {
      if (options_.pruner && b.status_ != BranchStatus::kSuspended &&
          (b.open() || (b.reason_ && b.reason_->data()))) {
        options_.pruner->finished(b);
      }
      done.push_back(std::move(b));
    };
    while (!work.empty()) {
      auto first = work.begin();
      Branch b = std::move(first->second);
      work.erase(first);
      for (;;) {
        if (b.finished_) {
          retire(std::move(b));
          break;
        }
        std::size_t before = b.changes_.size();
        std::vector<Branch> kids = step(std::move(b));
        if (kids.size() == 1) {
          b = std::move(kids[0]);
          if (options_.pruner && b.changes_.size() > before && !b.finished_) {
            work.emplace(key_of(b), std::move(b));
            break;
          }
          continue;
        }
        total += kids.size() - 1;
        if (total > ctx_->policy.max_branches) {
          throw ResourceLimitError("branch cap of " + std::to_string(ctx_->policy.max_branches) +
                                   " exceeded");
        }
        for (Branch& kid : kids) {
          // place the chosen component right away so priorities see it
          std::vector<Branch> next = step(std::move(kid));
          total += next.size() - 1;
          for (Branch& n : next) {
            if (n.finished_) {
              retire(std::move(n));
            } else {
              work.emplace(key_of(n), std::move(n));
            }
          }
        }
        break;
      }
    }
    std::sort(done.begin(), done.end(), [](const Branch& x, const Branch& y) { return x.path_ < y.path_; });
    for (std::size_t i = 0; i < done.size(); ++i) done[i].id_ = static_cast<int>(i) + 1;
    return done;
  }

  // Adds Y's formulas to a copy of X for the combined tableau.
  Branch merge(const Branch& x, const Branch& y, int xi, int yi) {
    Branch b = x;
    b.ctx_ = ctx_;
    b.path_ = {xi, yi};
    b.finished_ = false;
    b.status_ = BranchStatus::kOpen;
    b.reason_.reset();
    b.i_closed_ = false;
    for (const Formula& f : y.formulas_) {
      if (f.is_literal()) b.pending_.push_back(f);
    }
    for (const Formula& f : y.formulas_) {
      if (!f.is_literal()) b.pending_.push_back(f);
    }
    for (const auto& [f, text] : y.origins_) b.origins_.emplace(f, text);
    return b;
  }

  // Places the given literals and statuses the branch against its instance.
  Branch literal_branch(const std::vector<Formula>& lits, std::shared_ptr<const IndexedInstance> data,
                        int index) {
    Branch b = root(lits, std::move(data));
    b.path_ = {index};
    while (!b.finished_) b = std::move(step(std::move(b))[0]);
    return b;
  }

  std::size_t nodes() const { return nodes_; }

 private:
  void inherit(Branch& b, const Formula& parent, const Formula& child) {
    auto it = b.origins_.find(parent);
    if (it != b.origins_.end()) b.origins_.emplace(child, it->second);
  }

  void place(Branch& b, const Formula& f) {
    b.formulas_.push_back(f);
    b.members_.insert(f);
    b.trace_.push_back({f, b.path_.size()});
    ++nodes_;
    if (b.formulas_.size() > ctx_->policy.max_formulas) {
      throw ResourceLimitError("formula cap of " + std::to_string(ctx_->policy.max_formulas) +
                               " per branch exceeded");
    }
    if (b.contains(complement(f))) b.i_closed_ = true;
  }

  void on_literal(Branch& b, const Formula& lit) {
    const Formula& atom = lit.atom_of();
    if (atom.is_equal()) {
      const Term& x = atom.terms()[0];
      const Term& y = atom.terms()[1];
      if (lit.is_not() && x == y) b.i_closed_ = true;
      if (!lit.is_not() && x.is_constant() && y.is_constant() && x != y) b.i_closed_ = true;
    }
    for (const Term& t : atom.terms()) {
      std::size_t before = b.terms_.size();
      collect_terms(t, b.terms_);
      (void)before;
    }
    if (lit.is_atom()) b.positives_.push_back(lit);
    if (b.data_) grow(b.changes_, b.data_->instance, lit);
    // ground paramodulation
    if (atom.is_equal() && !lit.is_not()) {
      Term x = atom.terms()[0], y = atom.terms()[1];
      if (x != y && !(x.is_constant() && y.is_constant())) {
        if (x.is_constant() || (!y.is_constant() && y < x)) std::swap(x, y);
        // rewrite x into y
        b.rewrites_.emplace_back(x, y);
        for (const Formula& m : b.formulas_) {
          if (m.is_literal() && m != lit && literal_contains(m, x)) {
            b.pending_.push_back(replace_in_literal(m, x, y));
          }
        }
      }
    }
    for (const auto& [from, to] : b.rewrites_) {
      if (literal_contains(lit, from) && !(atom.is_equal() && !lit.is_not() &&
                                           ((atom.terms()[0] == from && atom.terms()[1] == to) ||
                                            (atom.terms()[1] == from && atom.terms()[0] == to)))) {
        b.pending_.push_back(replace_in_literal(lit, from, to));
      }
    }
    // wake deferred instances whose watched literal may be contradicted
    for (std::size_t i = 0; i < b.deferred_.size();) {
      if (b.deferred_[i].watch.is_not() != lit.is_not() &&
          may_match(lit.atom_of(), b.deferred_[i].watch.atom_of())) {
        b.pending_.push_back(b.deferred_[i].instance);
        b.deferred_.erase(b.deferred_.begin() + i);
      } else {
        ++i;
      }
    }
    if (options_.closure == ClosurePolicy::kStopOnAny && b.data_ && lit.is_database_literal() &&
        is_ground_over_constants(lit) && !true_in(b.data_->instance, lit)) {
      b.data_closed_hint_ = true;
    }
  }

  bool should_stop(const Branch& b) const {
    switch (options_.closure) {
      case ClosurePolicy::kNever:
        return false;
      case ClosurePolicy::kStopOnIClosure:
        return b.i_closed_;
      case ClosurePolicy::kStopOnAny:
        return b.i_closed_ || b.data_closed_hint_;
    }
    return false;
  }

  void register_gamma(Branch& b, const Formula& f) {
    Branch::GammaEntry g;
    g.source = f;
    strip_gamma(f, g.vars, g.matrix);
    g.premises = join_premises(g.matrix);
    g.join = b.data_ && covers(g.premises, g.vars);
    if (!g.join && options_.require_safe && b.data_) {
      throw UnsafeConstraintError("unsafe constraint: " + f.str());
    }
    b.gammas_.push_back(std::move(g));
  }

  std::vector<std::vector<Term>> join_tuples(const Branch& b, const Branch::GammaEntry& g) {
    std::vector<std::vector<Term>> out;
    std::map<std::string, Term> binding;
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
      if (k == g.premises.size()) {
        std::vector<Term> tuple;
        for (const std::string& v : g.vars) tuple.push_back(binding.at(v));
        out.push_back(std::move(tuple));
        return;
      }
      const Formula& a = g.premises[k];
      auto try_tuple = [&](const std::vector<Term>& values) {
        std::vector<std::string> bound_here;
        bool ok = true;
        for (std::size_t i = 0; ok && i < values.size(); ++i) {
          const Term& t = a.terms()[i];
          if (t.is_variable()) {
            auto it = binding.find(t.name());
            if (it == binding.end()) {
              binding.emplace(t.name(), values[i]);
              bound_here.push_back(t.name());
            } else {
              ok = it->second == values[i] || !it->second.is_constant() || !values[i].is_constant();
            }
          } else {
            ok = t == values[i] || !values[i].is_constant();
          }
        }
        if (ok) rec(k + 1);
        for (const std::string& v : bound_here) binding.erase(v);
      };
      auto it = b.data_->tuples.find(a.predicate());
      if (it != b.data_->tuples.end()) {
        for (const auto& values : it->second) try_tuple(values);
      }
      for (const Formula& p : b.positives_) {
        if (p.predicate() == a.predicate()) try_tuple(p.terms());
      }
    };
    rec(0);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::vector<std::vector<Term>> pool_tuples(const Branch& b, const Branch::GammaEntry& g) {
    std::vector<Term> pool = ctx_->constants;
    for (const Term& t : b.terms_) {
      if (t.depth() <= ctx_->policy.term_depth) pool.push_back(t);
    }
    std::vector<std::vector<Term>> out;
    if (pool.empty()) return out;
    std::vector<std::size_t> idx(g.vars.size(), 0);
    for (;;) {
      std::vector<Term> tuple;
      for (std::size_t i : idx) tuple.push_back(pool[i]);
      out.push_back(std::move(tuple));
      std::size_t k = idx.size();
      while (k > 0) {
        --k;
        if (++idx[k] < pool.size()) break;
        idx[k] = 0;
        if (k == 0) return out;
      }
      if (idx.empty()) return out;
    }
  }

  bool instantiate_gammas(Branch& b) {
    bool pushed = false;
    for (std::size_t gi = 0; gi < b.gammas_.size(); ++gi) {
      auto& g = b.gammas_[gi];
      if (g.join) {
        if (!g.fresh && g.seen_positive == b.positives_.size()) continue;
      } else if (!g.fresh && g.seen_terms == b.terms_.size()) {
        continue;
      }
      g.fresh = false;
      g.seen_positive = b.positives_.size();
      g.seen_terms = b.terms_.size();
      std::vector<std::vector<Term>> tuples = g.join ? join_tuples(b, g) : pool_tuples(b, g);
      for (auto& tuple : tuples) {
        auto& entry = b.gammas_[gi];
        if (!entry.done.insert(tuple).second) continue;
        Substitution s;
        for (std::size_t i = 0; i < entry.vars.size(); ++i) s.bind(Term::Variable(entry.vars[i]), tuple[i]);
        Formula inst = substitute(entry.matrix, s);
        if (max_depth(inst) > ctx_->policy.term_depth) continue;
        std::string text = binding_text(entry.vars, tuple);
        auto parent = b.origins_.find(entry.source);
        if (parent != b.origins_.end()) text = parent->second + ", " + text;
        b.origins_.emplace(inst, text);
        b.pending_.push_back(inst);
        pushed = true;
      }
    }
    return pushed;
  }

  void finish(Branch& b) {
    b.finished_ = true;
    b.reason_ = closure_status(b, b.instance());
    b.status_ = b.reason_ ? BranchStatus::kClosed : BranchStatus::kOpen;
  }

  std::shared_ptr<TableauContext> ctx_;
  BuildOptions options_;
  std::size_t nodes_ = 0;
};

// ---------------------------------------------------------------- entry points

std::shared_ptr<TableauContext> make_context(const std::vector<Formula>& formulas, const Instance* r,
                                             const DomainPolicy& policy) {
  auto ctx = std::make_shared<TableauContext>();
  std::set<std::string> names;
  std::set<std::string> reserved;
  int existentials = 0;
  if (r) {
    ctx->base = IndexedInstance::make(*r);
    names = active_domain(*r);
  }
  names.insert(policy.extra_constants.begin(), policy.extra_constants.end());
  std::function<void(const Term&)> note = [&](const Term& t) {
    if (t.is_parameter()) reserved.insert(t.name());
    if (t.is_skolem()) reserved.insert(t.name());
    for (const Term& a : t.args()) note(a);
  };
  std::function<void(const Formula&)> scan = [&](const Formula& f) {
    for (const Term& t : f.terms()) note(t);
    if (f.is_atom() || f.is_equal()) return;
    scan(f.lhs());
    if (f.kind() == Formula::Kind::kAnd || f.kind() == Formula::Kind::kOr ||
        f.kind() == Formula::Kind::kImplies) {
      scan(f.rhs());
    }
  };
  for (const Formula& f : formulas) {
    auto c = constants_of(f);
    names.insert(c.begin(), c.end());
    existentials += existential_count(f);
    scan(f);
  }
  // Parameters and Skolem functions already in the input count as witnesses.
  int witnesses = existentials + static_cast<int>(reserved.size());
  for (const std::string& n : names) ctx->constants.push_back(Term::Constant(n));
  ctx->policy = policy;
  ctx->fresh = DomainPolicy::fresh_names(names, policy.fresh_pool ? *policy.fresh_pool : witnesses);
  reserved.insert(names.begin(), names.end());
  ctx->symbols = std::make_shared<FreshSymbols>(reserved);
  return ctx;
}

namespace {

Tableau assemble(std::shared_ptr<TableauContext> ctx, std::vector<Branch> branches, std::size_t nodes);

}  // namespace

class TableauBuilder {
 public:
  static Tableau make(std::shared_ptr<TableauContext> ctx, std::vector<Branch> branches, std::size_t nodes) {
    Tableau t;
    t.ctx_ = std::move(ctx);
    t.branches_ = std::move(branches);
    t.nodes_ = nodes;
    return t;
  }
};

namespace {

Tableau assemble(std::shared_ptr<TableauContext> ctx, std::vector<Branch> branches, std::size_t nodes) {
  return TableauBuilder::make(std::move(ctx), std::move(branches), nodes);
}

}  // namespace

Tableau build(const std::vector<Formula>& formulas, const Instance& r, const DomainPolicy& policy,
              const BuildOptions& options) {
  if (options.require_safe) {
    for (const Formula& f : formulas) {
      if (!is_safe(f)) throw UnsafeConstraintError("unsafe constraint: " + f.str());
    }
  }
  auto ctx = make_context(formulas, &r, policy);
  Engine engine(ctx, options);
  std::vector<Branch> roots{engine.root(formulas, ctx->base)};
  auto branches = engine.run(std::move(roots));
  return assemble(ctx, std::move(branches), engine.nodes());
}

Tableau build_pure(const std::vector<Formula>& formulas, const DomainPolicy& policy,
                   const BuildOptions& options) {
  auto ctx = make_context(formulas, nullptr, policy);
  BuildOptions o = options;
  o.require_safe = false;
  o.pruner = nullptr;
  Engine engine(ctx, o);
  std::vector<Branch> roots{engine.root(formulas, nullptr)};
  auto branches = engine.run(std::move(roots));
  return assemble(ctx, std::move(branches), engine.nodes());
}

std::vector<Branch> expand_step(const Branch& b, const BuildOptions& options) {
  Engine engine(b.ctx_, options);
  return engine.step(b);
}

Tableau combine(const Tableau& t1, const Tableau& t2) {
  const auto& b1 = t1.ctx_->base;
  const auto& b2 = t2.ctx_->base;
  if (static_cast<bool>(b1) != static_cast<bool>(b2) || (b1 && b1->instance != b2->instance)) {
    throw PreconditionError("combine: tableaux are built over different instances");
  }
  auto ctx = std::make_shared<TableauContext>(*t1.ctx_);
  std::set<Term> pool(ctx->constants.begin(), ctx->constants.end());
  pool.insert(t2.ctx_->constants.begin(), t2.ctx_->constants.end());
  ctx->constants.assign(pool.begin(), pool.end());
  if (t2.ctx_->fresh.size() > ctx->fresh.size()) ctx->fresh = t2.ctx_->fresh;
  BuildOptions options;
  options.closure = ClosurePolicy::kStopOnAny;
  options.require_safe = false;
  Engine engine(ctx, options);
  std::vector<Branch> roots;
  for (std::size_t i = 0; i < t1.branches_.size(); ++i) {
    for (std::size_t j = 0; j < t2.branches_.size(); ++j) {
      roots.push_back(engine.merge(t1.branches_[i], t2.branches_[j], static_cast<int>(i), static_cast<int>(j)));
    }
  }
  auto branches = engine.run(std::move(roots));
  return assemble(ctx, std::move(branches), engine.nodes());
}

Tableau Tableau::from_literal_sets(std::shared_ptr<TableauContext> ctx,
                                   const std::vector<std::pair<std::vector<Formula>, Instance>>& sets) {
  BuildOptions options;
  options.closure = ClosurePolicy::kStopOnAny;
  options.require_safe = false;
  Engine engine(ctx, options);
  std::vector<Branch> branches;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    branches.push_back(engine.literal_branch(sets[i].first, IndexedInstance::make(sets[i].second),
                                             static_cast<int>(i)));
    branches.back().id_ = static_cast<int>(i) + 1;
  }
  return assemble(ctx, std::move(branches), engine.nodes());
}

// ---------------------------------------------------------------- explain

std::string explain(const Tableau& t) {
  std::ostringstream out;
  const auto& branches = t.branches();
  if (t.context().base) out << "r = " << t.context().base->instance.str() << "\n";
  std::function<void(const std::vector<int>&, int)> print = [&](const std::vector<int>& prefix, int indent) {
    const Branch* any = nullptr;
    std::set<int> next;
    for (const Branch& b : branches) {
      if (b.path().size() < prefix.size() || !std::equal(prefix.begin(), prefix.end(), b.path().begin())) {
        continue;
      }
      if (!any) any = &b;
      if (b.path().size() > prefix.size()) next.insert(b.path()[prefix.size()]);
    }
    if (!any) return;
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    for (const auto& item : any->trace()) {
      if (item.depth == prefix.size()) out << pad << item.formula.str() << "\n";
    }
    for (const Branch& b : branches) {
      if (b.path() != prefix) continue;
      out << pad << "B" << b.id() << " ";
      switch (b.status()) {
        case BranchStatus::kOpen:
          out << "open\n";
          break;
        case BranchStatus::kClosed:
          out << "\xC3\x97 [" << b.reason()->str() << "]\n";
          break;
        case BranchStatus::kSuspended:
          out << "suspended [" << b.suspension() << "]\n";
          break;
      }
    }
    for (int k : next) {
      std::vector<int> child = prefix;
      child.push_back(k);
      out << pad << "- branch " << k + 1 << "\n";
      print(child, indent + 1);
    }
  };
  print({}, 0);
  return out.str();
}

}  // namespace dbtab
