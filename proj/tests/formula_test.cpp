#include <functional>
#include <map>

#include "dbtab/errors.hpp"
#include "dbtab/formula.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace dbtab;
using namespace dbtab::testing;

namespace {

Schema supply_schema() { return schema_of({{"Supply", 3}, {"Class", 2}}); }
Schema pqr() { return schema_of({{"P", 1}, {"Q", 1}, {"R", 2}}); }

}  // namespace

TEST_CASE("parse Supply/Class constraint into forall chain over implication") {
  Formula ic = f("forall X,Y,Z. (Supply(X,Y,Z) & Class(Z,t4) -> X = c)", supply_schema());
  REQUIRE(ic.kind() == Formula::Kind::kForall);
  CHECK(ic.variable() == "X");
  CHECK(ic.body().variable() == "Y");
  const Formula& body = ic.body().body().body();
  REQUIRE(body.kind() == Formula::Kind::kImplies);
  CHECK(body.lhs().kind() == Formula::Kind::kAnd);
  CHECK(body.rhs().is_equal());
  CHECK(body.rhs().terms()[1] == Term::Constant("c"));
  CHECK(body.lhs().rhs().terms()[1] == Term::Constant("t4"));
}

TEST_CASE("parse existential") {
  Formula e = f("exists X. P(X)", pqr());
  REQUIRE(e.kind() == Formula::Kind::kExists);
  CHECK(e.body() == Formula::Atom("P", {Term::Variable("X")}));
}

TEST_CASE("parse errors carry position") {
  CHECK_THROWS_AS(f("P(a,b)", pqr()), ParseError);
  CHECK_THROWS_AS(f("S(a)", pqr()), ParseError);
  try {
    f("P(a) &\n  & Q(b)", pqr());
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 3);
  }
  CHECK_THROWS_AS(f("P(a", pqr()), ParseError);
  CHECK_THROWS_AS(f("forall x. P(x)", pqr()), ParseError);
}

TEST_CASE("precedence and associativity") {
  Schema s = pqr();
  CHECK(f("~P(a) & Q(a) | P(b) -> Q(b) -> P(a)", s) ==
        Formula::Implies(
            Formula::Or(Formula::And(Formula::Not(f("P(a)", s)), f("Q(a)", s)), f("P(b)", s)),
            Formula::Implies(f("Q(b)", s), f("P(a)", s))));
  // quantifier scope runs to the right end
  Formula q = f("P(a) & forall X. P(X) | Q(X)", s);
  REQUIRE(q.kind() == Formula::Kind::kAnd);
  CHECK(q.rhs().kind() == Formula::Kind::kForall);
  CHECK(q.rhs().body().kind() == Formula::Kind::kOr);
}

TEST_CASE("quoted and numeric constants") {
  Schema s = schema_of({{"Employee", 2}});
  Formula a = f("Employee('J.Page', 5000)", s);
  CHECK(a.terms()[0] == Term::Constant("J.Page"));
  CHECK(a.terms()[1] == Term::Constant("5000"));
  CHECK(a.str() == "Employee('J.Page',5000)");
}

TEST_CASE("schema extension mode") {
  Schema s;
  ParseOptions o;
  o.extend_schema = true;
  parse_formula("forall X. (A(X) -> B(X,X))", s, o);
  CHECK(s.arity("A") == 1);
  CHECK(s.arity("B") == 2);
  CHECK_THROWS_AS(parse_formula("A(a,b)", s, o), ParseError);
}

TEST_CASE("round trip on random formulas") {
  FormulaGen gen(7);
  Schema s = pqr();
  for (int i = 0; i < 2000; ++i) {
    Formula g = gen.sentence(4);
    Formula back = parse_formula(g.str(), s);
    REQUIRE_MESSAGE(back == g, g.str());
  }
}

TEST_CASE("classify matches the rule table") {
  Schema s = pqr();
  Formula a = f("P(a)", s), b = f("Q(b)", s);
  auto is_alpha = [](const RuleClass& c, const Formula& x, const Formula& y) {
    auto* p = std::get_if<Alpha>(&c);
    return p && p->first == x && p->second == y;
  };
  auto is_beta = [](const RuleClass& c, const Formula& x, const Formula& y) {
    auto* p = std::get_if<Beta>(&c);
    return p && p->first == x && p->second == y;
  };
  CHECK(is_alpha(classify(Formula::And(a, b)), a, b));
  CHECK(is_alpha(classify(negate(Formula::Or(a, b))), negate(a), negate(b)));
  CHECK(is_alpha(classify(negate(Formula::Implies(a, b))), a, negate(b)));
  CHECK(is_alpha(classify(negate(negate(a))), a, a));
  CHECK(is_beta(classify(Formula::Or(a, b)), a, b));
  CHECK(is_beta(classify(negate(Formula::And(a, b))), negate(a), negate(b)));
  CHECK(is_beta(classify(Formula::Implies(a, b)), negate(a), b));

  Formula px = f("P(X)", s);
  RuleClass c1 = classify(Formula::Forall("X", px));
  REQUIRE(std::holds_alternative<Gamma>(c1));
  CHECK(std::get<Gamma>(c1).body == px);
  RuleClass c2 = classify(negate(Formula::Exists("X", px)));
  REQUIRE(std::holds_alternative<Gamma>(c2));
  CHECK(std::get<Gamma>(c2).body == negate(px));
  RuleClass c3 = classify(Formula::Exists("X", px));
  REQUIRE(std::holds_alternative<Delta>(c3));
  CHECK(std::get<Delta>(c3).var == "X");
  RuleClass c4 = classify(negate(Formula::Forall("X", px)));
  REQUIRE(std::holds_alternative<Delta>(c4));
  CHECK(std::get<Delta>(c4).body == negate(px));
  CHECK(std::holds_alternative<LiteralOrEquality>(classify(a)));
  CHECK(std::holds_alternative<LiteralOrEquality>(classify(negate(a))));
  CHECK(std::holds_alternative<LiteralOrEquality>(classify(f("a = b", s))));
  CHECK(std::holds_alternative<LiteralOrEquality>(classify(negate(f("a = b", s)))));
}

TEST_CASE("substitute") {
  Schema s = pqr();
  Substitution sx;
  sx.bind(Term::Variable("X"), Term::Constant("a"));
  CHECK(substitute(f("P(X)", s), sx) == f("P(a)", s));
  CHECK(substitute(f("forall X. P(X)", s), sx) == f("forall X. P(X)", s));

  Term p = Term::Parameter("p");
  Formula q = Formula::Atom("R", {Term::Constant("a"), Term::Skolem("f", {p})});
  Substitution sp;
  sp.bind(p, Term::Constant("d"));
  CHECK(substitute(q, sp) ==
        Formula::Atom("R", {Term::Constant("a"), Term::Skolem("f", {Term::Constant("d")})}));

  Substitution capture;
  capture.bind(Term::Variable("X"), Term::Variable("Y"));
  CHECK_THROWS_AS(substitute(f("exists Y. R(X,Y)", s), capture), CaptureError);
}

TEST_CASE("negate never normalizes") {
  Formula a = Formula::Atom("P", {Term::Constant("a")});
  CHECK(negate(a) == Formula::Not(a));
  CHECK(negate(negate(a)) == Formula::Not(Formula::Not(a)));
}

TEST_CASE("skolemize examples") {
  Schema s = schema_of({{"P", 1}, {"Q", 2}});
  FreshSymbols fresh;
  Formula sk = skolemize(f("forall X. (P(X) -> exists Y. Q(X,Y))", s), fresh);
  Term fx = Term::Skolem("f1", {Term::Variable("X")});
  CHECK(sk == Formula::Forall("X", Formula::Implies(f("P(X)", s),
                                                    Formula::Atom("Q", {Term::Variable("X"), fx}))));
  CHECK(sk.str() == "forall X. P(X) -> Q(X,f1(X))");

  FreshSymbols fresh2;
  CHECK(skolemize(f("exists X. P(X)", s), fresh2) == Formula::Atom("P", {Term::Parameter("p1")}));
  FreshSymbols fresh3;
  CHECK(skolemize(f("forall X. P(X)", s), fresh3) == f("forall X. P(X)", s));
  // negative universals are eliminated, negative existentials stay
  FreshSymbols fresh4;
  Formula neg = skolemize(f("~forall X. P(X)", s), fresh4);
  CHECK(neg == Formula::Not(Formula::Atom("P", {Term::Parameter("p1")})));
  FreshSymbols fresh5;
  Formula keep = skolemize(f("forall X. ((exists Y. Q(X,Y)) -> P(X))", s), fresh5);
  CHECK(keep == f("forall X. ((exists Y. Q(X,Y)) -> P(X))", s));
}

TEST_CASE("fresh symbols skip reserved names") {
  FreshSymbols fresh({"p1", "f1"});
  CHECK(fresh.parameter().name() == "p2");
  CHECK(fresh.function() == "f2");
}

TEST_CASE("normalize renames rebound variables") {
  Schema s = pqr();
  Formula g = normalize_variables(f("(forall X. P(X)) & forall X. Q(X)", s));
  CHECK(g.lhs().variable() == "X");
  CHECK(g.rhs().variable() == "X_1");
  CHECK(g.rhs().body() == f("Q(X_1)", s));
}

TEST_CASE("skolemize is stable on its output") {
  FormulaGen gen(11);
  for (int i = 0; i < 1000; ++i) {
    Formula g = gen.sentence(4);
    FreshSymbols fresh;
    Formula once = skolemize(g, fresh);
    FreshSymbols again;
    CHECK(skolemize(once, again) == once);
    CHECK(existential_count(once) == 0);
  }
}

namespace {

// Independent evaluator: domain {0,1}, Skolem functions read from tables.
struct Interp {
  int pred_bits = 0;  // P(0),P(1),Q(0),Q(1),R(00),R(01),R(10),R(11)
  std::map<std::string, int> params;
  std::map<std::string, std::vector<int>> functions;
};

int value(const Term& t, const Interp& m, const std::map<std::string, int>& env) {
  switch (t.kind()) {
    case Term::Kind::kVariable:
      return env.at(t.name());
    case Term::Kind::kConstant:
      return t.name() == "a" ? 0 : 1;
    case Term::Kind::kParameter:
      return m.params.at(t.name());
    case Term::Kind::kSkolem: {
      int idx = 0;
      for (const Term& a : t.args()) idx = idx * 2 + value(a, m, env);
      return m.functions.at(t.name())[idx];
    }
  }
  return 0;
}

bool eval(const Formula& g, const Interp& m, std::map<std::string, int>& env) {
  using K = Formula::Kind;
  switch (g.kind()) {
    case K::kAtom: {
      int bit = 0;
      if (g.predicate() == "P") bit = value(g.terms()[0], m, env);
      if (g.predicate() == "Q") bit = 2 + value(g.terms()[0], m, env);
      if (g.predicate() == "R") bit = 4 + 2 * value(g.terms()[0], m, env) + value(g.terms()[1], m, env);
      return (m.pred_bits >> bit) & 1;
    }
    case K::kEqual:
      return value(g.terms()[0], m, env) == value(g.terms()[1], m, env);
    case K::kNot:
      return !eval(g.lhs(), m, env);
    case K::kAnd:
      return eval(g.lhs(), m, env) && eval(g.rhs(), m, env);
    case K::kOr:
      return eval(g.lhs(), m, env) || eval(g.rhs(), m, env);
    case K::kImplies:
      return !eval(g.lhs(), m, env) || eval(g.rhs(), m, env);
    case K::kForall:
    case K::kExists: {
      bool all = g.kind() == K::kForall;
      auto saved = env.find(g.variable()) != env.end() ? std::optional<int>(env[g.variable()]) : std::nullopt;
      bool result = all;
      for (int v = 0; v < 2; ++v) {
        env[g.variable()] = v;
        bool r = eval(g.body(), m, env);
        if (all && !r) result = false;
        if (!all && r) result = true;
      }
      if (saved) env[g.variable()] = *saved; else env.erase(g.variable());
      return result;
    }
  }
  return false;
}

void symbols(const Term& t, std::set<std::string>& params, std::map<std::string, int>& fns) {
  if (t.is_parameter()) params.insert(t.name());
  if (t.is_skolem()) fns[t.name()] = static_cast<int>(t.args().size());
  for (const Term& a : t.args()) symbols(a, params, fns);
}

void symbols(const Formula& g, std::set<std::string>& params, std::map<std::string, int>& fns) {
  for (const Term& t : g.terms()) symbols(t, params, fns);
  if (g.is_atom() || g.is_equal()) return;
  symbols(g.lhs(), params, fns);
  if (g.kind() == Formula::Kind::kAnd || g.kind() == Formula::Kind::kOr ||
      g.kind() == Formula::Kind::kImplies) {
    symbols(g.rhs(), params, fns);
  }
}

bool has_model(const Formula& g) {
  std::set<std::string> params;
  std::map<std::string, int> fns;
  symbols(g, params, fns);
  int table_bits = static_cast<int>(params.size());
  for (const auto& [name, arity] : fns) table_bits += 1 << arity;
  for (int bits = 0; bits < 256; ++bits) {
    for (long choice = 0; choice < (1L << table_bits); ++choice) {
      Interp m;
      m.pred_bits = bits;
      int k = 0;
      for (const std::string& p : params) m.params[p] = (choice >> k++) & 1;
      for (const auto& [name, arity] : fns) {
        std::vector<int> table;
        for (int i = 0; i < (1 << arity); ++i) table.push_back((choice >> k++) & 1);
        m.functions[name] = table;
      }
      std::map<std::string, int> env;
      if (eval(g, m, env)) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("skolemization preserves satisfiability over a two-element pool") {
  FormulaGen gen(3);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    Formula g = gen.sentence(3);
    FreshSymbols fresh;
    Formula sk = skolemize(g, fresh);
    std::set<std::string> params;
    std::map<std::string, int> fns;
    symbols(sk, params, fns);
    int bits = static_cast<int>(params.size());
    for (const auto& [name, arity] : fns) bits += 1 << arity;
    if (bits > 8) continue;
    ++checked;
    CHECK_MESSAGE(has_model(g) == has_model(sk), g.str());
  }
  CHECK(checked > 200);
}

TEST_CASE("free variables and polarity") {
  Schema s = pqr();
  Formula g = f("exists Z. R(Y,Z) & P(X) & ~Q(Y)", s);
  CHECK(free_variables(g) == std::vector<std::string>{"Y", "X"});
  std::set<std::string> pos, neg;
  predicate_polarity(f("forall X. (P(X) -> exists Y. R(X,Y))", s), pos, neg);
  CHECK(pos == set_of({"R"}));
  CHECK(neg == set_of({"P"}));
  CHECK(existential_count(f("forall X. (P(X) -> exists Y. R(X,Y))", s)) == 1);
  CHECK(constants_of(f("P(a) | R(b,X)", s)) == set_of({"a", "b"}));
}
