#include <doctest.h>

#include <algorithm>

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

}  // namespace

TEST_CASE("vigilance traces on the running example") {
  Fig1 f;
  SUBCASE("respect-obey never triggers C") {
    VigilanceTrace t = vigilance_trace(f.p(), f.pols.respect_obey);
    for (const auto& row : t.rows) CHECK(row.c == 0);
    CHECK(t.p_c0 == Rational(1));
  }
  SUBCASE("manipulate-invert also keeps C = 0") {
    VigilanceTrace t = vigilance_trace(f.p(), f.pols.manipulate_invert);
    for (const auto& row : t.rows) CHECK(row.c == 0);
  }
  SUBCASE("m=1 with obedient o=h fails vigilance in the l=0 world") {
    VigilanceTrace t = vigilance_trace(f.p(), f.at({1, 0, 1}));
    int c1 = 0;
    for (const auto& row : t.rows) {
      if (row.eps.at("eL") == 0) {
        CHECK(row.c == 1);
        CHECK(row.eu_given_pa == Rational(-1));
        CHECK(row.eu_s0_given_pa == Rational(0));
        ++c1;
      } else {
        CHECK(row.c == 0);
      }
    }
    CHECK(c1 == 1);
    CHECK(t.p_c0 == rat(1, 2));
  }
}

TEST_CASE("check_property agrees with the hand oracle on all eight policies") {
  Fig1 f;
  for (const auto& o : oracle_fig1::kAll) {
    Policy pol = f.at(o);
    CHECK(check_property(f.p(), pol, PropertyKind::Beneficial).holds ==
          (oracle_fig1::eu_times2(o) >= 0));
    CHECK(check_property(f.p(), pol, PropertyKind::Obedient).holds == oracle_fig1::obedient(o));
    CHECK(check_property(f.p(), pol, PropertyKind::ObedientOnDistribution).holds ==
          oracle_fig1::obedient_on_distribution(o));
    CHECK(check_property(f.p(), pol, PropertyKind::EnsuresVigilance).holds ==
          oracle_fig1::ensures_vigilance(o));
    CHECK(check_property(f.p(), pol, PropertyKind::Cautious).holds);
    CHECK(check_property(f.p(), pol, PropertyKind::ShutdownAligned).holds ==
          oracle_fig1::aligned(o));
    CHECK(check_property(f.p(), pol, PropertyKind::ShutdownInstructable).holds ==
          oracle_fig1::instructable(o));
  }
}

TEST_CASE("running-example verdicts from the paper") {
  Fig1 f;
  CHECK(check_property(f.p(), f.pols.respect_obey, PropertyKind::ShutdownInstructable).holds);

  CHECK(check_property(f.p(), f.pols.manipulate_invert, PropertyKind::ShutdownAligned).holds);
  CHECK(check_property(f.p(), f.pols.manipulate_invert, PropertyKind::Cautious).holds);
  CHECK(check_property(f.p(), f.pols.manipulate_invert, PropertyKind::EnsuresVigilance).holds);

  PropertyVerdict obd = check_property(f.p(), f.pols.manipulate_invert, PropertyKind::Obedient);
  CHECK(!obd.holds);
  CHECK(!obd.counterexample_worlds.empty());  // do(H=0) gives s = 1
  CHECK(!check_property(f.p(), f.pols.manipulate_invert, PropertyKind::ShutdownInstructable).holds);
  CHECK(!check_property(f.p(), f.pols.manipulate_invert, PropertyKind::WeaklyShutdownInstructable)
             .holds);
}

TEST_CASE("preserves_vigilance") {
  Fig1 f;
  SUBCASE("the identity pair always preserves vigilance") {
    for (const auto& o : oracle_fig1::kAll)
      CHECK(preserves_vigilance(f.p(), f.at(o), InterventionPair{.name = "identity"}).holds);
  }
  SUBCASE("the obedience-preference pair preserves vigilance under manipulate-invert") {
    CHECK(preserves_vigilance(f.p(), f.pols.manipulate_invert,
                              obedience_preference_pair(f.p())).holds);
  }
  SUBCASE("flipping the utility sign breaks vigilance for respect-obey at l=1") {
    // g^U = -u = s(1-2l): under o=h the l=1 world becomes shutdown-preferred
    // while h = 1, so C flips there.
    InterventionPair pair;
    pair.name = "negated-utility";
    pair.g_u = Intervention::functional(Intervention::Kind::UtilityReplacement, "U", {"S", "L"},
                                        Expr::parse("S*(1-2*L)"));
    PropertyVerdict v = preserves_vigilance(f.p(), f.pols.respect_obey, pair);
    CHECK(!v.holds);
    REQUIRE(v.counterexample_worlds.size() == 1);
    CHECK(v.counterexample_worlds[0].at("eL") == 1);
  }
}

TEST_CASE("non-obstruction over pair families") {
  Fig1 f;
  std::vector<InterventionPair> pairs = {obedience_preference_pair(f.p())};

  PropertyVerdict mi = check_non_obstruction(f.p(), f.pols.manipulate_invert, pairs);
  CHECK(!mi.holds);
  CHECK(mi.quantities[0].second == Rational(-1));  // E[U]
  CHECK(mi.quantities[1].second == Rational(0));   // E[U_{S=0}]

  PropertyVerdict ro = check_non_obstruction(f.p(), f.pols.respect_obey, pairs);
  CHECK(ro.holds);
  CHECK(ro.quantities[0].second == Rational(1));

  // the identity family reduces non-obstruction to weak outperformance
  std::vector<InterventionPair> identity = {InterventionPair{.name = "identity"}};
  for (const auto& o : oracle_fig1::kAll) {
    Policy pol = f.at(o);
    CHECK(check_non_obstruction(f.p(), pol, identity).holds ==
          check_property(f.p(), pol, PropertyKind::WeaklyOutperformsShutdown).holds);
  }
  CHECK_THROWS_AS(check_non_obstruction(f.p(), f.pols.respect_obey, {}), Error);
}

TEST_CASE("vigilance witness construction") {
  Fig1 f;
  SUBCASE("a non-vigilant policy gets a verified witness") {
    Policy pol = f.at({1, 0, 1});  // C = 1 at l = 0
    WitnessResult w = construct_vigilance_witness(f.p(), pol, Rational(0));
    CHECK(w.eu < w.eu_s0);
    CHECK(w.eu < Rational(0));
    CHECK(preserves_vigilance(f.p(), pol, w.pair).holds);
    // strong preservation: C identical both ways, so the reverse holds too
    ShutdownProblem applied = apply_pair(f.p(), w.pair);
    CHECK(vigilance_trace(applied, pol).p_c0 == vigilance_trace(f.p(), pol).p_c0);
  }
  SUBCASE("vigilance-ensuring policies are rejected") {
    try {
      construct_vigilance_witness(f.p(), f.pols.respect_obey, Rational(0));
      FAIL("expected PolicyEnsuresVigilance");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::PolicyEnsuresVigilance);
    }
  }
  SUBCASE("the indifference counterexample's selected policy is witnessable") {
    NamedModel fig5 =
        indifference_counterexample(Rational(1), Rational(1), Fig5Reading::TextConsistent);
    SolveResult ui = solve_utility_indifference(fig5.problem, fig5_rn(Rational(1)),
                                                fig5_rs(Rational(1)));
    REQUIRE(!ui.argmax.empty());
    for (const Policy& pol : ui.argmax) {
      CHECK(!check_property(fig5.problem, pol, PropertyKind::EnsuresVigilance).holds);
      WitnessResult w = construct_vigilance_witness(fig5.problem, pol, Rational(0));
      CHECK(w.eu < Rational(0));
      CHECK(w.eu < w.eu_s0);
    }
  }
}

TEST_CASE("obedience witness construction") {
  Fig1 f;
  SUBCASE("manipulate-invert gets a verified witness") {
    WitnessResult w = construct_obedience_witness(f.p(), f.pols.manipulate_invert, Rational(0));
    CHECK(w.eu < w.eu_s0);
    CHECK(w.eu < Rational(0));
    CHECK(preserves_vigilance(f.p(), f.pols.manipulate_invert, w.pair).holds);
  }
  SUBCASE("obedient policies are rejected") {
    try {
      construct_obedience_witness(f.p(), f.pols.respect_obey, Rational(0));
      FAIL("expected PolicyObedient");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::PolicyObedient);
    }
  }
  SUBCASE("a never-shutdown policy is witnessable") {
    Policy never = f.at({0, 1, 1});
    CHECK(check_property(f.p(), never, PropertyKind::Obedient).quantities[0].second == Rational(0));
    WitnessResult w = construct_obedience_witness(f.p(), never, Rational(0));
    CHECK(w.eu < Rational(0));
    CHECK(preserves_vigilance(f.p(), never, w.pair).holds);
  }
}

TEST_CASE("obedience witness survives cross-class punishment leakage") {
  // Two pa^H classes, each mixing an on-distribution H=0,S!=0 world with an
  // H=1 world. The printed single-class forcing breaks vigilance
  // preservation here; the extended forced set must kick in.
  RawModelSpec spec;
  auto add_var = [&](const char* name, VarKind kind, std::vector<Code> dom) {
    RawVariable v;
    v.name = name;
    v.kind = kind;
    v.domain = std::move(dom);
    spec.variables.push_back(v);
  };
  add_var("D1", VarKind::Decision, {0, 1});
  add_var("B", VarKind::Structure, {0, 1});
  add_var("H", VarKind::Structure, {0, 1});
  add_var("O", VarKind::Decision, {0, 1});
  add_var("S", VarKind::Structure, {0, 1});
  add_var("U", VarKind::Utility, {0, 1});

  RawExogenous eb;
  eb.name = "eB";
  eb.owner = "B";
  eb.pmf = {{0, rat(1, 2)}, {1, rat(1, 2)}};
  spec.exogenous.push_back(eb);
  RawExogenous eh;
  eh.name = "eH";
  eh.owner = "H";
  eh.pmf = {{0, rat(1, 2)}, {1, rat(1, 2)}};
  spec.exogenous.push_back(eh);

  RawFunction fb;
  fb.target = "B";
  fb.expr = Expr::parse("eB");
  spec.functions.push_back(fb);
  RawFunction fh;
  fh.target = "H";
  fh.parents = {"B", "D1"};
  fh.expr = Expr::parse("eH");  // request ignores its parents, classes still split
  spec.functions.push_back(fh);
  RawFunction fs;
  fs.target = "S";
  fs.parents = {"O"};
  fs.expr = Expr::parse("O");
  spec.functions.push_back(fs);
  RawFunction fu;
  fu.target = "U";
  fu.parents = {"S"};
  fu.expr = Expr::parse("S");
  spec.functions.push_back(fu);

  RawDecision d1;
  d1.variable = "D1";
  spec.decisions.push_back(d1);
  RawDecision d2;
  d2.variable = "O";
  d2.context = {"H"};
  spec.decisions.push_back(d2);

  ShutdownProblem prob =
      validate_shutdown_problem(build_model(spec), RoleMap{"D1", "H", "O", "S", "U"});
  Policy never = make_policy(prob.model(), {{"D1", {0}}, {"O", {1, 1}}});

  CHECK(check_property(prob, never, PropertyKind::EnsuresVigilance).holds);
  CHECK(!check_property(prob, never, PropertyKind::Obedient).holds);

  WitnessResult w = construct_obedience_witness(prob, never, Rational(0));
  CHECK(preserves_vigilance(prob, never, w.pair).holds);
  CHECK(w.eu < w.eu_s0);
  CHECK(w.eu < Rational(0));
  bool extended = false;
  for (const auto& note : w.notes)
    if (note.find("extended") != std::string::npos) extended = true;
  CHECK(extended);
}

TEST_CASE("alignment-to-weak-instructability conditions") {
  Fig1 f;
  SUBCASE("respect-obey: (a), (b), (d) hold; (c) fails on this model") {
    AlignmentConditionsReport rep =
        check_alignment_to_weak_conditions(f.p(), f.pols.respect_obey);
    CHECK(rep.no_indiscriminate_shutdown);
    CHECK(rep.p_s0 == rat(1, 2));
    CHECK(rep.d2_determines_shutdown);
    CHECK(rep.cautious);
    // a never-shutdown policy leaves the h=1 context with no
    // shutdown-preferred world, so the uncertainty condition fails
    CHECK(!rep.uncertainty);
    CHECK(rep.conclusion_consistent);
    CHECK(rep.policies_checked == BigInt(8));
  }
  SUBCASE("manipulate-invert: aligned but not weakly instructable, so some condition fails") {
    AlignmentConditionsReport rep =
        check_alignment_to_weak_conditions(f.p(), f.pols.manipulate_invert);
    CHECK(rep.aligned);
    CHECK(!rep.weakly_instructable);
    bool premises = rep.no_indiscriminate_shutdown && rep.d2_determines_shutdown &&
                    rep.uncertainty && rep.cautious;
    CHECK(!premises);
    CHECK(rep.conclusion_consistent);
  }
  SUBCASE("indiscriminate shutdown fails (a)") {
    RawModelSpec spec = f.nm.problem.model().to_raw();
    for (auto& fn : spec.functions)
      if (fn.target == "S") fn.expr = Expr::parse("0");
    ShutdownProblem p2 =
        validate_shutdown_problem(build_model(spec), RoleMap{"M", "H", "O", "S", "U"});
    AlignmentConditionsReport rep =
        check_alignment_to_weak_conditions(p2, named_policies(p2).respect_obey);
    CHECK(!rep.no_indiscriminate_shutdown);
  }
  SUBCASE("both uncertainty readings run") {
    AlignmentConditionsReport rep = check_alignment_to_weak_conditions(
        f.p(), f.pols.respect_obey, UncertaintyReading::OuterPolicy);
    CHECK(rep.conclusion_consistent);
  }
}

TEST_CASE("CIRL alignment conditions") {
  Fig1 f;
  SUBCASE("the running example fails the observation-coverage condition") {
    CirlConditionsReport rep = check_cirl_conditions(f.p(), f.pols.respect_obey, "L");
    CHECK(!rep.observations_covered);  // Pa^H = {M, L}, Pa^{D2} u {L} = {H, L}
    CHECK(rep.controls_shutdown);      // s = o
    CHECK(rep.conclusion_consistent);
  }
  SUBCASE("the CIRL game knows the latent value from its observation") {
    NamedModel game_a = cirl_pair(Rational(1));
    Policy decode = make_policy(game_a.problem.model(), {{"D1", {1}}, {"D2", {2, 0, 1}}});
    CirlConditionsReport rep = check_cirl_conditions(game_a.problem, decode, "L");
    CHECK(rep.knows_latent);
    CHECK(rep.conclusion_consistent);
  }
  SUBCASE("S != D2 structurally fails the control condition") {
    RawModelSpec spec = f.nm.problem.model().to_raw();
    for (auto& fn : spec.functions)
      if (fn.target == "S") fn.expr = Expr::parse("1-O");
    ShutdownProblem p2 =
        validate_shutdown_problem(build_model(spec), RoleMap{"M", "H", "O", "S", "U"});
    CirlConditionsReport rep = check_cirl_conditions(p2, named_policies(p2).respect_obey, "L");
    CHECK(!rep.controls_shutdown);
  }
}
