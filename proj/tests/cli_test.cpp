#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"

using dbtab::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "dbtab");
  std::ostringstream out, err;
  int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string corpus(const std::string& name, const std::string& file) {
  return std::string(CORPUS_DIR) + "/" + name + "/" + file;
}

std::vector<std::string> inputs(const std::string& name) {
  return {"--facts", corpus(name, "facts"), "--ic", corpus(name, "ic")};
}

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("check verdicts and exit codes") {
  Result r = call(std::vector<std::string>{"check"} + inputs("supply_class"));
  CHECK(r.code == 1);
  CHECK(r.out == "inconsistent\n");
}

TEST_CASE("repairs sections") {
  Result r = call(std::vector<std::string>{"repairs"} + inputs("pqr_two_repairs"));
  CHECK(r.code == 0);
  CHECK(r.out == "2 repairs\n--- repair 1 ---\nP(a).\nQ(a).\nR(b).\n--- repair 2 ---\nR(b).\n");
}

TEST_CASE("cqa text and json") {
  Result r = call(std::vector<std::string>{"cqa", "--query", "Course(X,Y,Z)"} + inputs("student"));
  CHECK(r.code == 0);
  CHECK(r.out == "Course(X,Y,Z) with (X,Y,Z): 2 answers\n  ('S1','C1','G1')\n  ('S1','C2','G2')\n");

  Result j = call(std::vector<std::string>{"cqa", "--format", "json", "--query", "Course('S1','C2','G2')"} +
                  inputs("student"));
  auto doc = nlohmann::json::parse(j.out);
  CHECK(doc["schema"] == 1);
  CHECK(doc["answers"][0]["verdict"] == true);
  CHECK(doc["answers"][0]["provenance"].size() == 2);
}

TEST_CASE("json documents carry the schema version") {
  for (const char* cmd : {"check", "repairs", "explain", "oracle-repairs", "diff"}) {
    Result r = call(std::vector<std::string>{cmd, "--format", "json"} + inputs("supply_class"));
    auto doc = nlohmann::ordered_json::parse(r.out);
    CHECK(doc.begin().key() == "schema");
    CHECK(doc["schema"] == 1);
  }
}

TEST_CASE("engine and oracle commands agree") {
  auto args = inputs("student_exists") + std::vector<std::string>{"--queries", corpus("student_exists", "query")};
  Result a = call(std::vector<std::string>{"cqa"} + args);
  Result b = call(std::vector<std::string>{"oracle-cqa"} + args);
  CHECK(a.out == b.out);
  Result c = call(std::vector<std::string>{"repairs"} + inputs("referential"));
  Result d = call(std::vector<std::string>{"oracle-repairs"} + inputs("referential"));
  CHECK(c.out == d.out);
  Result v = call(std::vector<std::string>{"repairs", "--verify"} + inputs("referential"));
  CHECK(v.code == 0);
  CHECK(v.out.find("verified against the oracle") != std::string::npos);
}

TEST_CASE("diff on the corpus and on generated cases") {
  for (const char* name : {"supply_class", "referential", "pqr_two_repairs", "student", "student_exists", "employee"}) {
    Result r = call(std::vector<std::string>{"diff"} + inputs(name));
    CHECK(r.code == 0);
    CHECK(r.out.find("discrepancies: 0") != std::string::npos);
  }
  Result g = call({"diff", "--seed", "3"});
  CHECK(g.code == 0);
  CHECK(g.out == "cases: 100\ndiscrepancies: 0\n");
}

TEST_CASE("pruning flags do not change results") {
  Result base = call(std::vector<std::string>{"repairs"} + inputs("supply_class"));
  for (auto flags : {std::vector<std::string>{"--no-groundedness"}, std::vector<std::string>{"--no-subsumption"},
                     std::vector<std::string>{"--no-groundedness", "--no-subsumption"}}) {
    CHECK(call(std::vector<std::string>{"repairs"} + inputs("supply_class") + flags).out == base.out);
  }
}

TEST_CASE("explain shows closure reasons and openings") {
  Result r = call(std::vector<std::string>{"explain", "--no-groundedness", "--no-subsumption"} + inputs("supply_class"));
  CHECK(r.code == 0);
  CHECK(r.out.find("B9 \xC3\x97 [cond 1: d = c is false under UNA]") != std::string::npos);
  CHECK(r.out.find("not openable: B3, B6, B9") != std::string::npos);
  CHECK(r.out.find("(repair)") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(call({}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({"repairs"}).code == 2);
  CHECK(call({"repairs", "--facts", "/nonexistent", "--ic", "/nonexistent"}).code == 2);
  CHECK(call(std::vector<std::string>{"repairs", "--format", "xml"} + inputs("supply_class")).code == 2);
  CHECK(call(std::vector<std::string>{"repairs", "--term-depth", "9"} + inputs("supply_class")).code == 2);
  CHECK(call(std::vector<std::string>{"cqa"} + inputs("supply_class")).code == 2);
  Result bad = call(std::vector<std::string>{"cqa", "--query", "Nope(X)"} + inputs("supply_class"));
  CHECK(bad.code == 2);
  CHECK(bad.err.find("--query") != std::string::npos);
  Result help = call({"--help"});
  CHECK(help.code == 0);
}

TEST_CASE("parse errors carry file and line") {
  Result r = call({"repairs", "--facts", corpus("supply_class", "ic"), "--ic", corpus("supply_class", "ic")});
  CHECK(r.code == 2);
  CHECK(r.err.find(corpus("supply_class", "ic") + ":2:") != std::string::npos);
}

TEST_CASE("resource caps exit with 3") {
  Result r = call(std::vector<std::string>{"repairs", "--max-branches", "2", "--no-subsumption", "--no-groundedness"} +
                  inputs("supply_class"));
  CHECK(r.code == 3);
}

TEST_CASE("output is deterministic") {
  auto args = std::vector<std::string>{"explain", "--format", "json"} + inputs("referential");
  CHECK(call(args).out == call(args).out);
}
