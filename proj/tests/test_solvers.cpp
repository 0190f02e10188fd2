#include <doctest.h>

#include <algorithm>
#include <set>

#include "scimcheck/corpus.hpp"
#include "scimcheck/properties.hpp"
#include "scimcheck/solvers.hpp"
#include "oracle_fig1.hpp"

using namespace scim;

namespace {

struct Fig1 {
  NamedModel nm = running_example();
  NamedPolicies pols = named_policies(nm.problem);
  const ShutdownProblem& p() const { return nm.problem; }
  Policy at(const oracle_fig1::Pol& o) const {
    return make_policy(nm.problem.model(), {{"M", {o.m}}, {"O", {o.o0, o.o1}}});
  }
};

std::set<std::string> policy_set(const ScimModel& m, const std::vector<Policy>& ps) {
  std::set<std::string> out;
  for (const auto& p : ps) out.insert(policy_str(m, p));
  return out;
}

}  // namespace

TEST_CASE("policy space counts") {
  Fig1 f;
  CHECK(PolicySpace(f.p().model()).count() == BigInt(8));
  CHECK(PolicySpace(cirl_pair(rat(1, 2)).problem.model()).count() == BigInt(54));

  // D2 observing three ternary parents at domain size 3 explodes past the cap
  RawModelSpec spec = f.p().model().to_raw();
  for (auto& v : spec.variables)
    if (v.name == "O" || v.name == "H") v.domain = {0, 1, 2};
  for (int i = 0; i < 2; ++i) {
    RawVariable v;
    v.name = "X" + std::to_string(i);
    v.kind = VarKind::Structure;
    v.domain = {0, 1, 2};
    spec.variables.push_back(v);
    RawFunction fx;
    fx.target = v.name;
    fx.expr = Expr::parse("0");
    spec.functions.push_back(fx);
  }
  for (auto& d : spec.decisions)
    if (d.variable == "O") d.context = {"H", "X0", "X1"};
  for (auto& fn : spec.functions)
    if (fn.target == "S") fn.expr = Expr::parse("mod(O,2)");
  ScimModel big = build_model(spec);
  BigInt expect = 2;
  for (int i = 0; i < 27; ++i) expect *= 3;
  CHECK(PolicySpace(big).count() == expect);
  try {
    enumerate_policies(big);
    FAIL("expected PolicySpaceExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PolicySpaceExceeded);
  }
}

TEST_CASE("expected-utility solver: argmax sets against the oracle") {
  Fig1 f;
  SolveResult res = solve_expected_utility(f.p(), Objective::utility("U"));
  CHECK(res.score == rat(1, 2));
  CHECK(policy_set(f.p().model(), res.argmax) ==
        policy_set(f.p().model(), {f.pols.respect_obey, f.pols.manipulate_invert}));

  // oracle: best 2*E[U] across the eight policies
  int best = -100;
  for (const auto& o : oracle_fig1::kAll) best = std::max(best, oracle_fig1::eu_times2(o));
  CHECK(Rational(best) == res.score * Rational(2));

  SolveResult all = solve_expected_utility(f.p(), Objective::expression(Expr::parse("7")));
  CHECK(all.argmax.size() == 8);
  CHECK(all.score == Rational(7));
}

TEST_CASE("utility indifference on the running example returns the weakly instructable optimum") {
  Fig1 f;
  KBound kb = k_bound_utility_indifference(f.p(), Objective::utility("U"));
  CHECK(kb.zeta_or_eta == Rational(1));
  CHECK(kb.min_violation == rat(1, 2));
  CHECK(kb.bound == Rational(4));
  CHECK(kb.k == Rational(5));

  SolveResult res = solve_utility_indifference(f.p(), Objective::utility("U"),
                                               penalty_utility(kb.k));
  REQUIRE(res.argmax.size() == 1);
  CHECK(policy_str(f.p().model(), res.argmax[0]) == policy_str(f.p().model(), f.pols.respect_obey));
  CHECK(check_property(f.p(), res.argmax[0], PropertyKind::WeaklyShutdownInstructable).holds);

  IndifferencePremises prem = check_utility_indifference_premises(f.p(), Objective::utility("U"));
  CHECK(prem.all());
}

TEST_CASE("utility indifference needs full support over instructions") {
  Fig1 f;
  RawModelSpec spec = f.p().model().to_raw();
  for (auto& fn : spec.functions)
    if (fn.target == "H") fn.expr = Expr::parse("1");
  ShutdownProblem constant_h =
      validate_shutdown_problem(build_model(spec), RoleMap{"M", "H", "O", "S", "U"});
  try {
    solve_utility_indifference(constant_h, Objective::utility("U"), penalty_utility(Rational(5)));
    FAIL("expected DegenerateInstruction");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateInstruction);
  }
}

TEST_CASE("Soares day-one property: returned pi1 maximises E[rn | H=1] given the returned pi2") {
  Fig1 f;
  SolveResult res = solve_utility_indifference(f.p(), Objective::utility("U"),
                                               penalty_utility(Rational(5)));
  for (const Policy& ret : res.argmax) {
    Rational incumbent = expectation(f.p().model(), ret, "U", Event::var_eq("H", 1));
    for (int m1 = 0; m1 <= 1; ++m1) {
      Policy alt = ret;
      alt.rules[0] = {m1};  // M is the first declared decision
      CHECK(expectation(f.p().model(), alt, "U", Event::var_eq("H", 1)) <= incumbent);
    }
  }
}

TEST_CASE("causal indifference on the running example keeps only obedient policies") {
  Fig1 f;
  KBound kb = k_bound_causal_indifference(f.p(), Objective::utility("U"));
  CHECK(kb.zeta_or_eta == Rational(0));  // every policy has E[U | do(H=1)] = 0
  CHECK(kb.min_violation == Rational(1));
  CHECK(kb.bound == Rational(1));
  CHECK(kb.k == Rational(2));

  SolveResult res = solve_causal_indifference(f.p(), Objective::utility("U"), penalty_utility(kb.k));
  CHECK(res.argmax.size() == 4);  // o(0) = 0, o(1) and m free
  for (const Policy& pol : res.argmax)
    CHECK(check_property(f.p(), pol, PropertyKind::Obedient).holds);

  // the premises of the instructability proposition do not verify here: one
  // optimum (m=1, o=h) is not vigilance-ensuring
  CausalPremises prem = check_causal_indifference_premises(f.p(), Objective::utility("U"), kb.k);
  CHECK(prem.exists_obedient);
  CHECK(!prem.optima_vigilant_cautious);
}

TEST_CASE("constant objectives tie every policy at zero") {
  Fig1 f;
  SolveResult res = solve_causal_indifference(f.p(), Objective::expression(Expr::parse("0")),
                                              Objective::expression(Expr::parse("0")));
  CHECK(res.argmax.size() == 8);
  CHECK(res.score == Rational(0));
}

TEST_CASE("constrained optimisation matches the independent brute-force filter") {
  Fig1 f;
  SolveResult res = solve_constrained(f.p(), Objective::utility("U"));
  REQUIRE(res.argmax.size() == 1);
  CHECK(policy_str(f.p().model(), res.argmax[0]) == policy_str(f.p().model(), f.pols.respect_obey));
  CHECK(res.score == rat(1, 2));

  // oracle: filter the eight hand policies by the three constraints
  int best2 = -100;
  std::vector<oracle_fig1::Pol> winners;
  for (const auto& o : oracle_fig1::kAll) {
    if (!oracle_fig1::instructable(o)) continue;
    int v = oracle_fig1::eu_times2(o);
    if (v > best2) {
      best2 = v;
      winners = {o};
    } else if (v == best2) {
      winners.push_back(o);
    }
  }
  REQUIRE(winners.size() == 1);
  CHECK(Rational(best2) == res.score * Rational(2));
  CHECK(policy_str(f.p().model(), f.at(winners[0])) ==
        policy_str(f.p().model(), res.argmax[0]));
}

TEST_CASE("constrained optimisation on the CIRL game includes the instructable baseline") {
  NamedModel game_a = cirl_pair(Rational(1));
  SolveResult res = solve_constrained(game_a.problem, Objective::utility("U"));
  CHECK(res.score == rat(2, 3));
  Policy baseline = make_policy(game_a.problem.model(), {{"D1", {0}}, {"D2", {0, 1, 2}}});
  CHECK(policy_set(game_a.problem.model(), res.argmax).count(
      policy_str(game_a.problem.model(), baseline)) == 1);
  for (const Policy& pol : res.argmax)
    CHECK(check_property(game_a.problem, pol, PropertyKind::ShutdownInstructable).holds);
}

TEST_CASE("infeasible constraint sets are reported") {
  Fig1 f;
  RawModelSpec spec = f.p().model().to_raw();
  for (auto& v : spec.variables)
    if (v.name == "U") {
      v.domain = {-1};
      v.utility = {{-1, Rational(-1)}};
    }
  for (auto& fn : spec.functions)
    if (fn.target == "U") fn.expr = Expr::parse("0-1");
  ShutdownProblem p2 =
      validate_shutdown_problem(build_model(spec), RoleMap{"M", "H", "O", "S", "U"});
  try {
    solve_constrained(p2, Objective::utility("U"));
    FAIL("expected Infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Infeasible);
  }
}

TEST_CASE("k bounds: floors, vacuous cases and scaling") {
  Fig1 f;
  SUBCASE("an all-obedient model has no bound to take") {
    RawModelSpec spec = f.p().model().to_raw();
    for (auto& fn : spec.functions)
      if (fn.target == "S") fn.expr = Expr::parse("0*O");
    ShutdownProblem p2 =
        validate_shutdown_problem(build_model(spec), RoleMap{"M", "H", "O", "S", "U"});
    try {
      k_bound_utility_indifference(p2, Objective::utility("U"));
      FAIL("expected NoDisobedientPolicy");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NoDisobedientPolicy);
    }
    try {
      k_bound_causal_indifference(p2, Objective::utility("U"));
      FAIL("expected NoDisobedientPolicy");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NoDisobedientPolicy);
    }
  }
  SUBCASE("a zero objective floors the returned k at one") {
    KBound kb = k_bound_utility_indifference(f.p(), Objective::expression(Expr::parse("0")));
    CHECK(kb.zeta_or_eta == Rational(0));
    CHECK(kb.bound == Rational(0));
    CHECK(kb.k == Rational(1));
  }
  SUBCASE("scaling the objective by 10 scales the bound accordingly") {
    KBound one = k_bound_utility_indifference(f.p(), Objective::utility("U"));
    KBound ten = k_bound_utility_indifference(f.p(), Objective::expression(Expr::parse("10*U")));
    CHECK(ten.zeta_or_eta == one.zeta_or_eta * Rational(10));
    CHECK(ten.bound == one.bound * Rational(10));

    KBound c_one = k_bound_causal_indifference(f.p(), Objective::expression(Expr::parse("U+1")));
    KBound c_ten =
        k_bound_causal_indifference(f.p(), Objective::expression(Expr::parse("10*U+10")));
    CHECK(c_one.zeta_or_eta == Rational(1));
    CHECK(c_ten.zeta_or_eta == Rational(10));
    CHECK(c_ten.bound == c_one.bound * Rational(10));
  }
  SUBCASE("the causal k' floor is honored") {
    KBound kb = k_bound_causal_indifference(f.p(), Objective::utility("U"), Rational(100));
    CHECK(kb.k == Rational(101));
  }
}

TEST_CASE("the shutdown penalty objective") {
  Fig1 f;
  Objective pen = penalty_utility(Rational(4));
  Objective::Compiled c = pen.compile(f.p().model(), f.p().roles());
  WorldTable t = enumerate_worlds(f.p().model(), f.pols.respect_obey);
  for (const auto& row : t.rows) {
    std::vector<int> vals;
    for (int v = 0; v < f.p().model().var_count(); ++v)
      vals.push_back(f.p().model().domain(v).index_of(row.values.at(f.p().model().var_name(v))));
    Rational got = c.eval(f.p().model(), vals);
    CHECK(got == (row.values.at("S") != 0 ? Rational(-4) : Rational(0)));
  }
  CHECK_THROWS_AS(penalty_utility(Rational(0)), Error);
}

TEST_CASE("affine reparametrisation leaves argmax sets unchanged") {
  for (unsigned long long seed : {61ULL, 62ULL, 63ULL}) {
    NamedModel nm = random_shutdown_problem(GeneratorConfig{.seed = seed});
    const std::string u = nm.problem.roles().u;
    SolveResult base = solve_expected_utility(nm.problem, Objective::utility(u));
    Expr scaled = Expr::parse("3/2*" + u + "-2");
    SolveResult shifted = solve_expected_utility(nm.problem, Objective::expression(scaled));
    CHECK(policy_set(nm.problem.model(), base.argmax) ==
          policy_set(nm.problem.model(), shifted.argmax));
    CHECK(shifted.score == rat(3, 2) * base.score - Rational(2));
  }
}

TEST_CASE("solvers are deterministic across repeated runs") {
  Fig1 f;
  SolveResult a = solve_constrained(f.p(), Objective::utility("U"));
  SolveResult b = solve_constrained(f.p(), Objective::utility("U"));
  CHECK(a.score == b.score);
  CHECK(policy_set(f.p().model(), a.argmax) == policy_set(f.p().model(), b.argmax));
  CHECK(a.notes == b.notes);
}
