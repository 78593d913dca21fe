#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dbtab/cqa.hpp"
#include "dbtab/errors.hpp"
#include "dbtab/oracle.hpp"
#include "dbtab/repair.hpp"
#include "json.hpp"

namespace dbtab::cli {

namespace {

using json = nlohmann::ordered_json;

struct UsageError : Error {
  using Error::Error;
};

struct RunConfig {
  std::string command;
  std::string facts;
  std::string ic;
  std::string query;
  std::string queries;
  std::string format = "text";
  int fresh_pool = -1;
  int term_depth = 1;
  std::size_t max_branches = 20000;
  bool no_groundedness = false;
  bool no_subsumption = false;
  bool verify = false;
  long seed = -1;
};

struct Inputs {
  Schema schema;
  Instance r;
  std::vector<Formula> ics;
  std::vector<Query> queries;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

template <typename F>
auto with_context(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw UsageError(where + ":" + e.what());
  } catch (const SchemaError& e) {
    throw UsageError(where + ": " + e.what());
  }
}

Inputs load(const RunConfig& c) {
  if (c.facts.empty()) throw UsageError("--facts is required for " + c.command);
  if (c.ic.empty()) throw UsageError("--ic is required for " + c.command);
  Inputs in;
  std::string facts = read_file(c.facts);
  std::string ic = read_file(c.ic);
  std::string queries = c.queries.empty() ? "" : read_file(c.queries);
  in.r = with_context(c.facts, [&] { return load_instance(facts, in.schema); });
  in.ics = with_context(c.ic, [&] {
    ParseOptions o;
    o.extend_schema = true;
    return parse_formula_lines(ic, in.schema, o);
  });
  for (const Formula& f : in.ics) {
    if (!free_variables(f).empty()) throw UsageError(c.ic + ": constraint has free variables: " + f.str());
  }
  if (!c.query.empty()) {
    in.queries.push_back(with_context("--query", [&] { return Query::parse(c.query, in.schema); }));
  }
  if (!c.queries.empty()) {
    for (const Formula& f : with_context(c.queries, [&] { return parse_formula_lines(queries, in.schema); })) {
      in.queries.push_back(Query::of(f));
    }
  }
  return in;
}

RepairOptions repair_options(const RunConfig& c) {
  RepairOptions o;
  if (c.fresh_pool >= 0) o.policy.fresh_pool = c.fresh_pool;
  o.policy.term_depth = c.term_depth;
  o.policy.max_branches = c.max_branches;
  o.groundedness = !c.no_groundedness;
  o.subsumption = !c.no_subsumption;
  return o;
}

json atoms_json(const AtomSet& atoms) {
  json out = json::array();
  for (const GroundAtom& a : atoms) out.push_back(a.str());
  return out;
}

std::string tuple_text(const Tuple& t) {
  std::string out = "(";
  for (std::size_t i = 0; i < t.size(); ++i) out += (i ? "," : "") + constant_text(t[i]);
  return out + ")";
}

std::set<std::string> instance_set(const std::vector<Instance>& rs) {
  std::set<std::string> out;
  for (const Instance& r : rs) out.insert(r.str());
  return out;
}

void print_repairs(const std::vector<Instance>& rs, bool consistent, const RunConfig& c, std::ostream& out) {
  if (c.format == "json") {
    json j;
    j["schema"] = 1;
    j["command"] = c.command;
    j["consistent"] = consistent;
    j["repairs"] = json::array();
    for (const Instance& r : rs) j["repairs"].push_back(atoms_json(r.atoms()));
    out << j.dump(2) << "\n";
    return;
  }
  out << rs.size() << (rs.size() == 1 ? " repair\n" : " repairs\n");
  for (std::size_t k = 0; k < rs.size(); ++k) {
    out << "--- repair " << k + 1 << " ---\n" << serialize(rs[k]);
  }
}

json answer_json(const Query& q, const AnswerSet& a) {
  json j;
  j["query"] = q.formula.str();
  if (a.boolean) {
    j["verdict"] = a.verdict;
  } else {
    j["free"] = q.free;
    j["tuples"] = json::array();
    for (const Tuple& t : a.tuples) j["tuples"].push_back(t);
  }
  if (!a.provenance.empty()) {
    j["provenance"] = json::array();
    for (const AnswerProof& p : a.provenance) {
      json pj;
      if (!a.boolean) pj["tuple"] = p.tuple;
      pj["repair"] = p.repair;
      pj["reason"] = p.reason;
      pj["bindings"] = p.bindings;
      j["provenance"].push_back(pj);
    }
  }
  return j;
}

void print_answers(const std::vector<Query>& qs, const std::vector<AnswerSet>& as, const RunConfig& c,
                   std::ostream& out) {
  if (c.format == "json") {
    json j;
    j["schema"] = 1;
    j["command"] = c.command;
    j["answers"] = json::array();
    for (std::size_t i = 0; i < qs.size(); ++i) j["answers"].push_back(answer_json(qs[i], as[i]));
    out << j.dump(2) << "\n";
    return;
  }
  for (std::size_t i = 0; i < qs.size(); ++i) {
    if (as[i].boolean) {
      out << qs[i].formula.str() << ": " << (as[i].verdict ? "yes" : "no") << "\n";
      continue;
    }
    out << qs[i].str() << ": " << as[i].tuples.size() << (as[i].tuples.size() == 1 ? " answer\n" : " answers\n");
    for (const Tuple& t : as[i].tuples) out << "  " << tuple_text(t) << "\n";
  }
}

AnswerSet from_oracle(const oracle::Answers& a) {
  AnswerSet out;
  out.boolean = a.boolean;
  out.verdict = a.verdict;
  out.tuples = a.tuples;
  return out;
}

AnswerSet oracle_answer(const Inputs& in, const Query& q, const RepairOptions& o) {
  return from_oracle(oracle::consistent_answers_bruteforce(in.ics, in.r, q.formula, q.free, o.policy));
}

// ---------------------------------------------------------------- commands

int cmd_check(const RunConfig& c, std::ostream& out) {
  Inputs in = load(c);
  RepairOptions o = repair_options(c);
  FreshSymbols fresh;
  std::vector<Formula> sk;
  for (const Formula& f : in.ics) sk.push_back(skolemize(f, fresh));
  Tableau t = build(sk, in.r, o.policy);
  bool consistent = !t.closed();
  if (c.format == "json") {
    json j;
    j["schema"] = 1;
    j["command"] = "check";
    j["consistent"] = consistent;
    j["branches"] = t.branches().size();
    out << j.dump(2) << "\n";
  } else {
    out << (consistent ? "consistent" : "inconsistent") << "\n";
  }
  return consistent ? kOk : kInconsistent;
}

int cmd_repairs(const RunConfig& c, std::ostream& out, std::ostream& err) {
  Inputs in = load(c);
  RepairOptions o = repair_options(c);
  RepairReport report = compute_repairs(in.ics, in.r, o);
  std::vector<Instance> rs;
  for (const Opening& op : report.repairs) rs.push_back(op.result);
  print_repairs(rs, report.consistent, c, out);
  if (c.verify) {
    auto expected = oracle::enumerate_repairs_bruteforce(in.ics, in.r, o.policy);
    if (instance_set(expected) != instance_set(rs)) {
      err << "verification failed: the oracle finds " << expected.size() << " repairs\n";
      return kInconsistent;
    }
    if (c.format == "text") out << "verified against the oracle\n";
  }
  return kOk;
}

int cmd_oracle_repairs(const RunConfig& c, std::ostream& out) {
  Inputs in = load(c);
  RepairOptions o = repair_options(c);
  auto rs = oracle::enumerate_repairs_bruteforce(in.ics, in.r, o.policy);
  bool consistent = rs.size() == 1 && rs[0] == in.r;
  print_repairs(rs, consistent, c, out);
  return kOk;
}

int cmd_cqa(const RunConfig& c, std::ostream& out, std::ostream& err, bool use_oracle) {
  Inputs in = load(c);
  if (in.queries.empty()) throw UsageError(c.command + " needs --query or --queries");
  RepairOptions o = repair_options(c);
  std::vector<AnswerSet> as;
  if (use_oracle) {
    for (const Query& q : in.queries) as.push_back(oracle_answer(in, q, o));
  } else {
    ConsistentAnswerer cqa(in.ics, in.r, o);
    for (const Query& q : in.queries) as.push_back(cqa.answer(q));
  }
  print_answers(in.queries, as, c, out);
  if (c.verify && !use_oracle) {
    for (std::size_t i = 0; i < in.queries.size(); ++i) {
      if (!(oracle_answer(in, in.queries[i], o) == as[i])) {
        err << "verification failed for " << in.queries[i].formula.str() << "\n";
        return kInconsistent;
      }
    }
    if (c.format == "text") out << "verified against the oracle\n";
  }
  return kOk;
}

std::string status_text(const Branch& b) {
  switch (b.status()) {
    case BranchStatus::kOpen:
      return "open";
    case BranchStatus::kClosed:
      return "closed";
    case BranchStatus::kSuspended:
      return "suspended";
  }
  return "";
}

int cmd_explain(const RunConfig& c, std::ostream& out) {
  Inputs in = load(c);
  RepairOptions o = repair_options(c);
  RepairReport report = compute_repairs(in.ics, in.r, o);
  std::set<Instance> repaired;
  for (const Opening& op : report.repairs) repaired.insert(op.result);
  if (c.format == "json") {
    json j;
    j["schema"] = 1;
    j["command"] = "explain";
    j["consistent"] = report.consistent;
    j["constraints"] = json::array();
    for (const Formula& f : report.skolemized) j["constraints"].push_back(f.str());
    j["branches"] = json::array();
    for (const Branch& b : report.tableau.branches()) {
      json bj;
      bj["id"] = b.id();
      bj["status"] = status_text(b);
      if (b.reason()) bj["reason"] = b.reason()->str();
      if (!b.suspension().empty()) bj["suspension"] = b.suspension();
      bj["literals"] = json::array();
      for (const Formula& l : b.database_literals()) bj["literals"].push_back(l.str());
      j["branches"].push_back(bj);
    }
    j["subsumed"] = report.subsumed;
    j["not_openable"] = report.not_openable;
    j["openings"] = json::array();
    for (const Opening& op : report.openings) {
      json oj;
      oj["sources"] = op.sources;
      oj["tau"] = op.tau.str();
      oj["deleted"] = atoms_json(op.deleted);
      oj["inserted"] = atoms_json(op.inserted);
      oj["result"] = atoms_json(op.result.atoms());
      oj["repair"] = repaired.count(op.result) > 0;
      j["openings"].push_back(oj);
    }
    j["tableau"] = explain(report.tableau);
    out << j.dump(2) << "\n";
    return kOk;
  }
  out << explain(report.tableau);
  auto ids = [](const std::vector<int>& v) {
    std::string s;
    for (int x : v) s += (s.empty() ? "B" : ", B") + std::to_string(x);
    return s.empty() ? std::string("none") : s;
  };
  out << "subsumed: " << ids(report.subsumed) << "\n";
  out << "not openable: " << ids(report.not_openable) << "\n";
  out << "openings:\n";
  for (const Opening& op : report.openings) {
    out << "  from " << ids(op.sources);
    if (!op.tau.empty()) out << " with " << op.tau.str();
    out << ": L = " << str(op.deleted) << ", K = " << str(op.inserted) << " -> " << op.result.str()
        << (repaired.count(op.result) ? " (repair)" : "") << "\n";
  }
  if (report.consistent) out << "r is consistent; it is its own repair\n";
  return kOk;
}

// Engine and oracle disagreements on one case, one line each.
std::vector<std::string> compare(const std::vector<Formula>& ics, const Instance& r, const RepairOptions& o) {
  std::vector<std::string> issues;
  ConsistentAnswerer cqa(ics, r, o);
  std::vector<Instance> engine;
  for (const Opening& op : cqa.report().repairs) engine.push_back(op.result);
  auto brute = oracle::enumerate_repairs_bruteforce(ics, r, o.policy);
  auto models = oracle::winslett_update_models(r, ics, o.policy);
  auto describe = [](const std::vector<Instance>& rs) {
    std::string s;
    for (const Instance& x : rs) s += (s.empty() ? "" : " ") + x.str();
    return s;
  };
  if (instance_set(engine) != instance_set(brute)) {
    issues.push_back("repairs: engine " + describe(engine) + " vs oracle " + describe(brute));
  }
  if (instance_set(models) != instance_set(brute)) {
    issues.push_back("repairs: winslett " + describe(models) + " vs oracle " + describe(brute));
  }
  for (const auto& [p, k] : r.schema().predicates()) {
    std::string text = p + "(";
    std::vector<std::string> vars;
    for (int i = 0; i < k; ++i) {
      vars.push_back("X" + std::to_string(i + 1));
      text += (i ? "," : "") + vars.back();
    }
    Query q = Query::parse(text + ")", r.schema());
    AnswerSet mine = cqa.answer(q);
    AnswerSet theirs = from_oracle(oracle::consistent_answers_bruteforce(ics, r, q.formula, q.free, o.policy));
    if (!(mine == theirs)) issues.push_back("answers to " + q.formula.str() + " differ");
  }
  return issues;
}

int cmd_diff(const RunConfig& c, std::ostream& out) {
  RepairOptions o = repair_options(c);
  std::vector<oracle::Case> cases;
  if (c.facts.empty() && c.ic.empty()) {
    if (c.seed < 0) throw UsageError("diff needs --facts and --ic, or --seed");
    cases = oracle::random_cases(static_cast<unsigned>(c.seed), 100);
  } else {
    Inputs in = load(c);
    cases.push_back({c.facts, in.r, in.ics});
  }
  json report = json::array();
  std::size_t total = 0;
  for (const oracle::Case& k : cases) {
    auto issues = compare(k.ics, k.r, o);
    total += issues.size();
    if (c.format == "text") {
      for (const std::string& s : issues) out << k.name << ": " << s << "\n";
    } else if (!issues.empty()) {
      report.push_back({{"case", k.name}, {"issues", issues}});
    }
  }
  if (c.format == "json") {
    json j;
    j["schema"] = 1;
    j["command"] = "diff";
    j["cases"] = cases.size();
    j["discrepancies"] = report;
    out << j.dump(2) << "\n";
  } else {
    out << "cases: " << cases.size() << "\n" << "discrepancies: " << total << "\n";
  }
  return total == 0 ? kOk : kInconsistent;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Database repairs and consistent answers by analytic tableaux"};
  app.add_option("command", c.command, "check | repairs | cqa | explain | oracle-repairs | oracle-cqa | diff")
      ->required()
      ->check(CLI::IsMember({"check", "repairs", "cqa", "explain", "oracle-repairs", "oracle-cqa", "diff"}));
  app.add_option("--facts", c.facts, "Fact file, one atom per line");
  app.add_option("--ic", c.ic, "Constraint file, one sentence per line");
  auto* q = app.add_option("--query", c.query, "A single query");
  app.add_option("--queries", c.queries, "Query file, one query per line")->excludes(q);
  app.add_option("--format", c.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--fresh-pool", c.fresh_pool, "Fresh constants for witnesses")->check(CLI::Range(0, 8));
  app.add_option("--term-depth", c.term_depth, "Skolem nesting bound")->check(CLI::Range(0, 4));
  app.add_option("--max-branches", c.max_branches, "Branch cap")->check(CLI::Range(1, 10000000));
  app.add_flag("--no-groundedness", c.no_groundedness, "Disable groundedness pruning and checks");
  app.add_flag("--no-subsumption", c.no_subsumption, "Disable subsumption pruning");
  app.add_flag("--verify", c.verify, "Cross-check the result with the oracle");
  app.add_option("--seed", c.seed, "Seed for generated diff cases")->check(CLI::Range(0L, 4294967295L));

  std::vector<std::string> rest(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c.command == "check") return cmd_check(c, out);
    if (c.command == "repairs") return cmd_repairs(c, out, err);
    if (c.command == "oracle-repairs") return cmd_oracle_repairs(c, out);
    if (c.command == "cqa") return cmd_cqa(c, out, err, false);
    if (c.command == "oracle-cqa") return cmd_cqa(c, out, err, true);
    if (c.command == "explain") return cmd_explain(c, out);
    return cmd_diff(c, out);
  } catch (const ResourceLimitError& e) {
    err << "resource limit: " << e.what() << "\n";
    return kResource;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace dbtab::cli
