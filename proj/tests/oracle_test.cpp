#include <random>

#include "dbtab/errors.hpp"
#include "dbtab/oracle.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace dbtab;
using namespace dbtab::testing;

namespace {

std::vector<Formula> sentences(const std::string& text, Schema& s) {
  ParseOptions o;
  o.extend_schema = true;
  return parse_formula_lines(text, s, o);
}

std::set<std::string> results(const std::vector<Instance>& rs) {
  std::set<std::string> out;
  for (const Instance& r : rs) out.insert(r.str());
  return out;
}

}  // namespace

TEST_CASE("supply/class by both oracles") {
  Schema s;
  Instance r = facts("Supply(c,d1,it1). Supply(d,d2,it2). Class(it1,t4). Class(it2,t4).", s);
  auto ic = sentences("forall X,Y,Z. (Supply(X,Y,Z) & Class(Z,t4) -> X = c)", s);
  auto want = results({facts("Supply(c,d1,it1). Class(it1,t4). Class(it2,t4).", s),
                       facts("Supply(c,d1,it1). Supply(d,d2,it2). Class(it1,t4).", s)});
  CHECK(results(oracle::enumerate_repairs_bruteforce(ic, r)) == want);
  CHECK(results(oracle::winslett_update_models(r, ic)) == want);

  auto ans = oracle::consistent_answers_bruteforce(ic, r, f("Supply(X,Y,Z)", s), {"X", "Y", "Z"});
  CHECK(ans.tuples == std::set<std::vector<std::string>>{{"c", "d1", "it1"}});
}

TEST_CASE("consistent instance is its own repair") {
  Schema s;
  Instance r = facts("P(a). Q(a). R(b).", s);
  auto ic = sentences("forall X. (P(X) -> Q(X))", s);
  CHECK(oracle::enumerate_repairs_bruteforce(ic, r) == std::vector<Instance>{r});
  CHECK(oracle::winslett_update_models(r, ic) == std::vector<Instance>{r});
}

TEST_CASE("P/Q/R repairs") {
  Schema s;
  Instance r = facts("P(a). R(b).", s);
  auto ic = sentences("forall X. (P(X) -> Q(X))", s);
  auto want = results({facts("R(b).", s), facts("P(a). Q(a). R(b).", s)});
  CHECK(results(oracle::enumerate_repairs_bruteforce(ic, r)) == want);
  CHECK(results(oracle::winslett_update_models(r, ic)) == want);
}

TEST_CASE("referential repairs use the fresh witness") {
  Schema s;
  Instance r = facts("P(a). Q(b,d).", s);
  auto ic = sentences("forall X. (P(X) -> exists Y. Q(X,Y))", s);
  auto want = results({facts("Q(b,d).", s), facts("P(a). Q(b,d). Q(a,a).", s), facts("P(a). Q(b,d). Q(a,b).", s),
                       facts("P(a). Q(b,d). Q(a,d).", s), facts("P(a). Q(b,d). Q(a,_n1).", s)});
  CHECK(results(oracle::enumerate_repairs_bruteforce(ic, r)) == want);
  CHECK(results(oracle::winslett_update_models(r, ic)) == want);
}

TEST_CASE("empty repair intersection") {
  Schema s;
  Instance r = facts("P(a).", s);
  auto ic = sentences("forall X. ~P(X)", s);
  CHECK(oracle::enumerate_repairs_bruteforce(ic, r) == std::vector<Instance>{Instance(s)});
  CHECK(oracle::consistent_answers_bruteforce(ic, r, f("P(X)", s), {"X"}).tuples.empty());
}

TEST_CASE("existential query over the student repairs") {
  Schema s;
  Instance r = facts("Student('S1','N1','D1'). Student('S1','N2','D1'). Course('S1','C1','G1'). Course('S1','C2','G2').", s);
  auto ic = sentences("forall X,Y,Z,U,V. (Student(X,Y,Z) & Student(X,U,V) -> Y = U & Z = V)", s);
  CHECK(oracle::enumerate_repairs_bruteforce(ic, r).size() == 2);
  auto a = oracle::consistent_answers_bruteforce(ic, r, f("exists X. Course(X,'C2','G2')", s), {});
  CHECK(a.boolean);
  CHECK(a.verdict);
  CHECK_FALSE(oracle::consistent_answers_bruteforce(ic, r, f("Student('S1','N2','D1')", s), {}).verdict);
}

TEST_CASE("change universe respects polarity") {
  Schema s;
  Instance r = facts("P(a). Q(a). R(a,b).", s);
  auto ic = sentences("forall X. (P(X) -> Q(X))", s);
  auto u = oracle::change_universe(ic, r);
  CHECK(u.deletions == std::vector<GroundAtom>{{"P", {"a"}}});
  CHECK(u.insertions == std::vector<GroundAtom>{{"Q", {"b"}}});
  CHECK(u.insertion_cap == 4);
  for (const GroundAtom& a : u.insertions) CHECK_FALSE(r.contains(a));
}

TEST_CASE("candidate guard") {
  Schema s;
  Instance r(s);
  auto ic = sentences("exists X,Y,Z,U. W(X,Y,Z,U)", s);
  oracle::ChangeUniverse u;
  u.constants = {"a", "b", "c", "d", "e", "f"};
  for (const auto& x : u.constants) {
    for (const auto& y : u.constants) {
      u.insertions.push_back({"W", {x, y, "a", "a"}});
    }
  }
  u.insertion_cap = 10;
  CHECK_THROWS_AS(oracle::enumerate_repairs_bruteforce(ic, r, u), ResourceLimitError);
}

TEST_CASE("grounding") {
  Schema s;
  auto ic = sentences("forall X. (P(X) -> exists Y. R(X,Y))", s);
  oracle::PropTheory t(ic, s, {"a", "b"});
  CHECK(t.instance_count() == 2);
  CHECK(t.atom_count() == 6);
  Instance r = facts("P(a). R(a,b).", s);
  auto m = t.assignment(r);
  CHECK(t.holds(0, m));
  CHECK(t.holds(1, m));
  Instance bad = facts("P(b).", s);
  CHECK_FALSE(t.holds(1, t.assignment(bad)));
  CHECK(t.atoms_of(1).size() == 3);
}

TEST_CASE("oracle self-consistency on random instances") {
  std::mt19937 rng(5);
  auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  const char* constraints[] = {
      "forall X,Y,Z. (R(X,Y) & R(X,Z) -> Y = Z)",
      "forall X. (P(X) -> exists Y. R(X,Y))",
      "forall X,Y. (R(X,Y) -> P(Y))",
      "forall X. ~(P(X) & R(X,X))",
      "exists X. P(X)",
  };
  std::vector<std::string> dom{"a", "b", "c"};
  for (int round = 0; round < 150; ++round) {
    Schema s;
    s.add("P", 1);
    s.add("R", 2);
    Instance r(s);
    int n = pick(5);
    for (int i = 0; i < n; ++i) {
      if (pick(2)) {
        r.insert({"P", {dom[pick(3)]}});
      } else {
        r.insert({"R", {dom[pick(3)], dom[pick(3)]}});
      }
    }
    auto ic = sentences(constraints[pick(5)], s);
    auto rs = oracle::enumerate_repairs_bruteforce(ic, r);
    INFO(r.str(), " ", ic[0].str());
    CHECK(results(rs) == results(oracle::winslett_update_models(r, ic)));
    for (const Instance& x : rs) {
      CHECK(satisfies(x, ic, DomainPolicy{}));
      for (const Instance& y : rs) {
        if (x != y) CHECK_FALSE(closer_or_equal(r, y, x));
      }
    }
  }
}
