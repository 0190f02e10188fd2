// Acceptance suite: runs every criterion at its stated tolerance (exact
// rational arithmetic, so tolerance is zero unless a runtime budget is
// stated) and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "scimcheck/corpus.hpp"
#include "scimcheck/properties.hpp"
#include "scimcheck/serialize.hpp"
#include "scimcheck/solvers.hpp"
#include "scimcheck/suites.hpp"
#include "oracle_fig1.hpp"

using namespace scim;

namespace {

int failures = 0;

struct Criterion {
  std::string name;
  bool ok = true;
  std::vector<std::string> details;
  double seconds = 0;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      details.push_back("FAILED: " + what);
    }
  }
  void note(const std::string& what) { details.push_back(what); }
};

template <typename Fn>
void criterion(const std::string& name, double budget_seconds, Fn fn) {
  Criterion c;
  c.name = name;
  auto start = std::chrono::steady_clock::now();
  try {
    fn(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.details.push_back(std::string("exception: ") + e.what());
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_seconds > 0 && c.seconds > budget_seconds) {
    c.ok = false;
    c.details.push_back("runtime " + std::to_string(c.seconds) + "s exceeded budget " +
                        std::to_string(budget_seconds) + "s");
  }
  std::printf("criterion %-38s %s  (%.2fs)\n", c.name.c_str(), c.ok ? "PASS" : "FAIL", c.seconds);
  for (const auto& d : c.details) std::printf("    %s\n", d.c_str());
  if (!c.ok) ++failures;
}

std::string run_cli_capture(const std::string& args, const std::string& tag) {
  std::string out_file = std::string(SCIMCHECK_TEST_TMP) + "/acc_" + tag + ".out";
  std::string cmd = std::string(SCIMCHECK_BIN) + " " + args + " > " + out_file + " 2>&1";
  int status = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return std::to_string(WEXITSTATUS(status)) + "\n" + buffer.str();
}

}  // namespace

int main() {
  const int workers = default_workers();
  std::printf("# acceptance run, %d workers\n", workers);

  // ---- 1: running-example exact values ----
  criterion("1 running-example exact values", 1.0, [](Criterion& c) {
    NamedModel nm = running_example();
    NamedPolicies pols = named_policies(nm.problem);
    c.expect(expectation(nm.problem.model(), pols.respect_obey, "U") == rat(1, 2),
             "E[U] under respect-obey must be 1/2");
    ShutdownProblem mg = apply_pair(nm.problem, obedience_preference_pair(nm.problem));
    c.expect(expectation(mg.model(), pols.manipulate_invert, "U") == Rational(-1),
             "E[U] under manipulate-invert in the intervened model must be -1");
    c.expect(expectation(mg.model(), pols.manipulate_invert, "U", std::nullopt,
                         Intervention::atomic("S", 0)) == Rational(0),
             "E[U_{S=0}] under manipulate-invert in the intervened model must be 0");
  });

  // ---- 2: running-example verdicts ----
  criterion("2 running-example verdicts", 1.0, [](Criterion& c) {
    NamedModel nm = running_example();
    NamedPolicies pols = named_policies(nm.problem);
    c.expect(check_property(nm.problem, pols.respect_obey, PropertyKind::ShutdownInstructable).holds,
             "respect-obey is shutdown instructable");
    c.expect(check_property(nm.problem, pols.manipulate_invert, PropertyKind::ShutdownAligned).holds,
             "manipulate-invert is shutdown aligned");
    c.expect(check_property(nm.problem, pols.manipulate_invert, PropertyKind::Cautious).holds,
             "manipulate-invert is cautious");
    c.expect(check_property(nm.problem, pols.manipulate_invert, PropertyKind::EnsuresVigilance).holds,
             "manipulate-invert ensures vigilance");
    c.expect(!check_property(nm.problem, pols.manipulate_invert, PropertyKind::Obedient).holds,
             "manipulate-invert is not obedient");
    c.expect(
        !check_property(nm.problem, pols.manipulate_invert, PropertyKind::ShutdownInstructable).holds,
        "manipulate-invert is not instructable");
    InterventionPair pair = obedience_preference_pair(nm.problem);
    c.expect(preserves_vigilance(nm.problem, pols.manipulate_invert, pair).holds,
             "the obedience-preference pair preserves vigilance");
    c.expect(!check_non_obstruction(nm.problem, pols.manipulate_invert, {pair}).holds,
             "manipulate-invert is obstructive w.r.t. the pair");
  });

  // ---- 3: constrained optimisation vs brute force ----
  criterion("3 constrained optimisation, exact argmax", 1.0, [](Criterion& c) {
    NamedModel nm = running_example();
    SolveResult res = solve_constrained(nm.problem, Objective::utility("U"));
    c.expect(res.argmax.size() == 1, "argmax must be unique");
    c.expect(res.score == rat(1, 2), "score must be 1/2");
    c.expect(policy_str(nm.problem.model(), res.argmax.at(0)) == "M{}=0 O{H=0}=0 O{H=1}=1",
             "the optimum must be (m=0, o=h)");

    // independent filter over the eight hand-evaluated policies
    int best2 = -100;
    int count = 0;
    for (const auto& o : oracle_fig1::kAll) {
      if (!oracle_fig1::instructable(o)) continue;
      int v = oracle_fig1::eu_times2(o);
      if (v > best2) {
        best2 = v;
        count = 1;
      } else if (v == best2) {
        ++count;
      }
    }
    c.expect(count == 1 && Rational(best2) == res.score * Rational(2),
             "the brute-force filter must agree");
  });

  // ---- 4: section-5 theorem suites over 1000 random models ----
  criterion("4 theorem suites, 1000 models", 60.0, [&](Criterion& c) {
    long long cov_instr = 0, cov_aligned = 0, cov_disobey = 0;
    for (SuiteKind kind : {SuiteKind::Prop53, SuiteKind::Prop55, SuiteKind::Prop56, SuiteKind::Thm57}) {
      SuiteResult res = run_suite(kind, 1000, 7, workers);
      c.expect(res.ok(), std::string(suite_name(kind)) + ": " +
                             std::to_string(res.counterexamples.size()) + " counterexamples");
      if (!res.ok())
        c.note(suite_name(kind) + (": first: " + res.counterexamples.front().detail));
      c.note(std::string(suite_name(kind)) + ": " + res.policies_checked.str() +
             " policies checked");
      cov_instr += res.instructable_policies;
      cov_aligned += res.aligned_not_instructable;
      cov_disobey += res.disobedient_policies;
    }
    c.expect(cov_instr > 0, "batch must contain an instructable policy");
    c.expect(cov_aligned > 0, "batch must contain an aligned-but-not-instructable policy");
    c.expect(cov_disobey > 0, "batch must contain a disobedient policy");
  });

  // ---- 5: witness suite over 200 models ----
  criterion("5 witness suite, 200 models", 120.0, [&](Criterion& c) {
    SuiteResult res = run_suite(SuiteKind::Thm58, 200, 7, workers);
    c.expect(res.ok(),
             std::to_string(res.counterexamples.size()) + " witness/outperformance failures");
    if (!res.ok()) c.note("first: " + res.counterexamples.front().detail);
    c.note(res.policies_checked.str() + " policies, " + std::to_string(res.witnesses_built) +
           " witnesses, " + std::to_string(res.pair_checks) + " sampled-pair checks");
    c.expect(res.witnesses_built > 0, "the batch must exercise the witness constructions");
    c.expect(res.pair_checks > 0, "the batch must exercise sampled vigilance-preserving pairs");
  });

  // ---- 6: indifference propositions at desk scale ----
  criterion("6 indifference propositions", 0, [&](Criterion& c) {
    NamedModel nm = running_example();
    Objective rn = Objective::utility("U");
    IndifferencePremises prem = check_utility_indifference_premises(nm.problem, rn);
    c.expect(prem.all(), "running example: premises of the utility-indifference proposition");
    KBound kb = k_bound_utility_indifference(nm.problem, rn);
    SolveResult ui = solve_utility_indifference(nm.problem, rn, penalty_utility(kb.k));
    for (const Policy& pol : ui.argmax)
      c.expect(check_property(nm.problem, pol, PropertyKind::WeaklyShutdownInstructable).holds,
               "running example: utility indifference output weakly instructable");

    KBound kc = k_bound_causal_indifference(nm.problem, rn);
    CausalPremises cprem = check_causal_indifference_premises(nm.problem, rn, kc.k);
    c.note(std::string("running example: causal premises ") +
           (cprem.all() ? "verify" : "do not verify (condition 1 fails; assertion gated off)"));
    if (cprem.all()) {
      SolveResult ci = solve_causal_indifference(nm.problem, rn, penalty_utility(kc.k));
      for (const Policy& pol : ci.argmax)
        c.expect(check_property(nm.problem, pol, PropertyKind::ShutdownInstructable).holds,
                 "running example: causal indifference output instructable");
    }

    SuiteResult p61 = run_suite(SuiteKind::Prop61, 600, 7, workers);
    c.expect(p61.ok(), "prop61 over 600 random models");
    if (!p61.ok()) c.note("first: " + p61.counterexamples.front().detail);
    c.note("prop61: " + std::to_string(600 - p61.premise_skips) + "/600 models premise-verified");
    c.expect(600 - p61.premise_skips > 0, "prop61 batch must contain premise-verified models");

    SuiteResult p62 = run_suite(SuiteKind::Prop62, 600, 7, workers);
    c.expect(p62.ok(), "prop62 over 600 random models");
    if (!p62.ok()) c.note("first: " + p62.counterexamples.front().detail);
    c.note("prop62: " + std::to_string(600 - p62.premise_skips) + "/600 models premise-verified");
    c.expect(600 - p62.premise_skips > 0, "prop62 batch must contain premise-verified models");

    SuiteResult p64 = run_suite(SuiteKind::Prop64, 600, 7, workers);
    c.expect(p64.ok(), "prop64 over 600 random models");
  });

  // ---- 7: indifference counterexample reproduction ----
  criterion("7 indifference counterexample", 0, [](Criterion& c) {
    NamedModel text =
        indifference_counterexample(Rational(1), Rational(1), Fig5Reading::TextConsistent);
    SolveResult ui = solve_utility_indifference(text.problem, fig5_rn(Rational(1)),
                                                fig5_rs(Rational(1)));
    c.expect(!ui.argmax.empty(), "utility indifference returns a policy");
    for (const Policy& pol : ui.argmax) {
      c.expect(pol.rules[0] == std::vector<int>{1}, "output selects d1 = 1");
      c.expect(!check_property(text.problem, pol, PropertyKind::EnsuresVigilance).holds,
               "output fails EnsuresVigilance");
      c.expect(!check_property(text.problem, pol, PropertyKind::WeaklyOutperformsShutdown).holds,
               "output fails weak outperformance");
    }
    // regression pins for the recorded brute-force values (the paper's -1/4
    // is a documented inconsistency and is not asserted)
    c.expect(ui.argmax.size() == 1 &&
                 policy_str(text.problem.model(), ui.argmax.at(0)) ==
                     "D1{}=1 D2{H=0}=0 D2{H=1}=1",
             "text-consistent output is (d1=1, d2=h)");
    c.expect(expectation(text.problem.model(), ui.argmax.at(0), "U") == rat(-3, 2),
             "text-consistent output has E[U] = -3/2 (regression pin)");

    for (Fig5Reading reading : {Fig5Reading::FigureLiteral, Fig5Reading::TextConsistent}) {
      NamedModel nm = indifference_counterexample(Rational(1), Rational(1), reading);
      SolveResult ci = solve_causal_indifference(nm.problem, fig5_rn(Rational(1)),
                                                 fig5_rs(Rational(1)));
      c.expect(ci.score == Rational(3), "causal-indifference optimal score is gamma+1+beta = 3");
    }
  });

  // ---- 8: CIRL pair reproduction ----
  criterion("8 CIRL pair", 5.0, [](Criterion& c) {
    NamedModel half = cirl_pair(rat(1, 2));
    Policy baseline = make_policy(half.problem.model(), {{"D1", {0}}, {"D2", {0, 1, 2}}});
    c.expect(expectation(half.problem.model(), baseline, "U", Event::var_eq("W", 1)) == rat(2, 3),
             "baseline earns 2/3 under selector a");
    c.expect(expectation(half.problem.model(), baseline, "U", Event::var_eq("W", 0)) == rat(2, 3),
             "baseline earns 2/3 under selector b");

    SolveResult hi = solve_expected_utility(cirl_pair(rat(3, 4)).problem, Objective::utility("U"));
    SolveResult lo = solve_expected_utility(cirl_pair(rat(1, 4)).problem, Objective::utility("U"));
    c.expect(hi.argmax.size() == 1 && lo.argmax.size() == 1 &&
                 !(hi.argmax.at(0) == lo.argmax.at(0)),
             "the CIRL argmax flips across prior 1/2");

    NamedModel mismatch = cirl_pair(Rational(0), Fig6Utility::MinusManipulation);
    Policy decode_a = make_policy(mismatch.problem.model(), {{"D1", {1}}, {"D2", {2, 0, 1}}});
    Rational eu = expectation(mismatch.problem.model(), decode_a, "U");
    c.expect(eu == rat(-2, 3), "mismatched-model value is exactly -2/3 under the sign variant");
    c.expect(expectation(mismatch.problem.model(), decode_a, "U", std::nullopt,
                         Intervention::atomic("S", 0)) == Rational(0) &&
                 eu < Rational(0),
             "-2/3 is below E[U_{S=0}] = 0");
  });

  // ---- 9: report determinism across runs and worker counts ----
  criterion("9 report determinism", 0, [](Criterion& c) {
    auto body = [](const std::string& s) {
      size_t pos = s.find('\n', s.find("# scimcheck"));
      return pos == std::string::npos ? s : s.substr(pos + 1);
    };
    std::string f1 = run_cli_capture("falsify --suite prop56 --models 60 --seed 11 --workers 1",
                                     "det_f1");
    std::string f2 = run_cli_capture("falsify --suite prop56 --models 60 --seed 11 --workers 1",
                                     "det_f2");
    std::string f4 = run_cli_capture("falsify --suite prop56 --models 60 --seed 11 --workers 4",
                                     "det_f4");
    c.expect(f1 == f2, "falsify output identical across repeated runs");
    c.expect(body(f1) == body(f4), "falsify output identical across 1 vs 4 workers");

    std::string s1 = run_cli_capture("solve running-example --algorithm constrained --rn U",
                                     "det_s1");
    std::string s2 = run_cli_capture("solve running-example --algorithm constrained --rn U",
                                     "det_s2");
    c.expect(s1 == s2 && !s1.empty() && s1[0] == '0', "solve output identical across runs");
  });

  std::printf("%s\n", failures == 0 ? "ALL CRITERIA PASSED" : "CRITERIA FAILED");
  return failures == 0 ? 0 : 1;
}
