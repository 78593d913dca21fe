#include "dbtab/cqa.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "dbtab/errors.hpp"
#include "dbtab/tableau.hpp"

namespace dbtab {

Query::Query(Formula f, std::vector<std::string> vars) : formula(std::move(f)), free(std::move(vars)) {
  auto actual = free_variables(formula);
  std::set<std::string> a(actual.begin(), actual.end());
  std::set<std::string> d(free.begin(), free.end());
  if (a != d || d.size() != free.size()) {
    throw PreconditionError("query variables do not match the free variables of " + formula.str());
  }
}

Query Query::of(const Formula& f) { return Query(f, free_variables(f)); }

Query Query::parse(const std::string& text, const Schema& schema) { return of(parse_formula(text, schema)); }

Formula Query::instantiate(const Tuple& tuple) const {
  if (tuple.size() != free.size()) throw PreconditionError("tuple arity differs from the query's");
  Substitution s;
  for (std::size_t i = 0; i < free.size(); ++i) s.bind(Term::Variable(free[i]), Term::Constant(tuple[i]));
  return substitute(formula, s);
}

std::string Query::str() const {
  std::string out = formula.str();
  if (free.empty()) return out;
  out += " with (";
  for (std::size_t i = 0; i < free.size(); ++i) out += (i ? "," : "") + free[i];
  return out + ")";
}

std::vector<std::string> answer_domain(const Instance& r, const Query& q) {
  std::set<std::string> names = active_domain(r);
  auto c = constants_of(q.formula);
  names.insert(c.begin(), c.end());
  return {names.begin(), names.end()};
}

namespace {

// (predicate, position) pairs each free variable must occupy whenever q holds.
void required_positions(const Formula& f, std::set<std::string> bound,
                        std::map<std::string, std::set<std::pair<std::string, std::size_t>>>& out) {
  switch (f.kind()) {
    case Formula::Kind::kAtom:
      for (std::size_t j = 0; j < f.terms().size(); ++j) {
        const Term& t = f.terms()[j];
        if (t.is_variable() && !bound.count(t.name())) out[t.name()].insert({f.predicate(), j});
      }
      return;
    case Formula::Kind::kAnd:
      required_positions(f.lhs(), bound, out);
      required_positions(f.rhs(), bound, out);
      return;
    case Formula::Kind::kExists:
      bound.insert(f.variable());
      required_positions(f.body(), bound, out);
      return;
    default:
      return;
  }
}

std::vector<Tuple> product(const std::vector<std::vector<std::string>>& columns) {
  std::vector<Tuple> out{{}};
  for (const auto& col : columns) {
    std::vector<Tuple> next;
    for (const Tuple& t : out) {
      for (const std::string& c : col) {
        next.push_back(t);
        next.back().push_back(c);
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

ConsistentAnswerer::ConsistentAnswerer(const std::vector<Formula>& ics, const Instance& r,
                                       const RepairOptions& options)
    : ics_(ics), r_(r), options_(options), report_(compute_repairs(ics, r, options)) {}

bool ConsistentAnswerer::closes(const Formula& sentence, const Tuple& tuple,
                                std::vector<AnswerProof>* proofs) const {
  FreshSymbols fresh;
  Formula negated = skolemize(negate(sentence), fresh);
  DomainPolicy policy = options_.policy;
  auto c = constants_of(sentence);
  policy.extra_constants.insert(c.begin(), c.end());

  std::vector<Formula> all = report_.skolemized;
  all.push_back(negated);
  auto ctx = make_context(all, &r_, policy);
  std::vector<std::pair<std::vector<Formula>, Instance>> sets;
  for (const Opening& o : report_.repairs) sets.emplace_back(o.literals, o.result);
  Tableau opened = Tableau::from_literal_sets(ctx, sets);

  BuildOptions options;
  options.closure = ClosurePolicy::kStopOnAny;
  options.require_safe = false;
  Tableau query = build({negated}, r_, policy, options);
  Tableau combined = combine(opened, query);
  bool closed = combined.closed();
  if (closed && proofs) {
    for (const Branch& b : combined.branches()) {
      AnswerProof p;
      p.tuple = tuple;
      p.repair = b.path().front() + 1;
      p.reason = b.reason()->str();
      for (const Formula& w : b.reason()->witnesses) {
        auto o = b.origin(w);
        if (!o) o = b.origin(negate(w));
        if (o) p.bindings.push_back(*o);
      }
      proofs->push_back(std::move(p));
    }
  }
  return closed;
}

AnswerSet ConsistentAnswerer::consistent_true(const Formula& sentence) const {
  if (!free_variables(sentence).empty()) throw PreconditionError("not a sentence: " + sentence.str());
  AnswerSet out;
  out.boolean = true;
  out.verdict = closes(sentence, {}, &out.provenance);
  return out;
}

std::vector<Tuple> ConsistentAnswerer::candidates(const Query& q) const {
  std::vector<std::string> domain = answer_domain(r_, q);
  std::map<std::string, std::set<std::pair<std::string, std::size_t>>> required;
  required_positions(q.formula, {}, required);
  // Q(t) holds in every repair, so in particular in the first one.
  const Instance& first = report_.repairs.front().result;
  std::vector<std::vector<std::string>> columns;
  for (const std::string& v : q.free) {
    std::set<std::string> allowed(domain.begin(), domain.end());
    for (const auto& [pred, pos] : required[v]) {
      std::set<std::string> seen;
      for (const GroundAtom& a : first.atoms()) {
        if (a.predicate == pred && pos < a.args.size() && allowed.count(a.args[pos])) seen.insert(a.args[pos]);
      }
      allowed = std::move(seen);
    }
    columns.emplace_back(allowed.begin(), allowed.end());
  }
  return product(columns);
}

AnswerSet ConsistentAnswerer::consistent_answers(const Query& q) const {
  if (q.boolean()) throw PreconditionError("query has no free variables: " + q.formula.str());
  AnswerSet out;
  for (const Tuple& t : candidates(q)) {
    if (closes(q.instantiate(t), t, &out.provenance)) out.tuples.insert(t);
  }
  return out;
}

AnswerSet ConsistentAnswerer::answer(const Query& q) const {
  return q.boolean() ? consistent_true(q.formula) : consistent_answers(q);
}

AnswerSet consistent_true(const std::vector<Formula>& ics, const Instance& r, const Formula& sentence,
                          const RepairOptions& options) {
  return ConsistentAnswerer(ics, r, options).consistent_true(sentence);
}

AnswerSet consistent_answers(const std::vector<Formula>& ics, const Instance& r, const Query& q,
                             const RepairOptions& options) {
  return ConsistentAnswerer(ics, r, options).consistent_answers(q);
}

AnswerSet answers_via_repair_intersection(const std::vector<Formula>& ics, const Instance& r, const Query& q,
                                          const RepairOptions& options) {
  std::vector<Instance> rs = repairs(ics, r, options);
  DomainPolicy policy = options.policy;
  auto c = constants_of(q.formula);
  policy.extra_constants.insert(c.begin(), c.end());
  auto holds = [&](const Formula& sentence) {
    return std::all_of(rs.begin(), rs.end(), [&](const Instance& x) { return satisfies(x, sentence, policy); });
  };
  AnswerSet out;
  if (q.boolean()) {
    out.boolean = true;
    out.verdict = holds(q.formula);
    return out;
  }
  std::vector<std::string> domain = answer_domain(r, q);
  std::vector<std::vector<std::string>> columns(q.free.size(), domain);
  for (const Tuple& t : product(columns)) {
    if (holds(q.instantiate(t))) out.tuples.insert(t);
  }
  return out;
}

}  // namespace dbtab
