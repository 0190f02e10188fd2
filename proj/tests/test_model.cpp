#include <doctest.h>

#include "scimcheck/corpus.hpp"
#include "scimcheck/model.hpp"
#include "scimcheck/serialize.hpp"

using namespace scim;

namespace {

RawModelSpec fig1_spec() {
  return running_example().problem.model().to_raw();
}

std::vector<std::string> names(const ScimModel& m, const std::vector<int>& ids) {
  std::vector<std::string> out;
  for (int v : ids) out.push_back(m.var_name(v));
  return out;
}

}  // namespace

TEST_CASE("running example builds with the expected shape") {
  ScimModel m = build_model(fig1_spec());
  CHECK(m.var_count() == 6);
  CHECK(m.decisions().size() == 2);
  int non_decision = 0;
  for (int v = 0; v < m.var_count(); ++v)
    if (!m.is_decision(v)) ++non_decision;
  CHECK(non_decision == 4);
  CHECK(m.topo_order().size() == 6);  // acyclic by construction
}

TEST_CASE("self-loop is rejected as cyclic") {
  RawModelSpec spec;
  RawVariable v;
  v.name = "V";
  v.kind = VarKind::Structure;
  v.domain = {0, 1};
  spec.variables.push_back(v);
  RawFunction f;
  f.target = "V";
  f.parents = {"V"};
  f.expr = Expr::parse("V");
  spec.functions.push_back(f);
  CHECK_THROWS_AS_MESSAGE(build_model(spec), Error, doctest::Contains("cycle"));
  try {
    build_model(spec);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CyclicModel);
  }
}

TEST_CASE("pmf summing to 5/6 is a bad distribution") {
  RawModelSpec spec = fig1_spec();
  for (auto& e : spec.exogenous)
    if (e.name == "eL") e.pmf = {{0, rat(1, 2)}, {1, rat(1, 3)}};
  try {
    build_model(spec);
    FAIL("expected BadDistribution");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadDistribution);
    CHECK(std::string(e.what()).find("5/6") != std::string::npos);
  }
}

TEST_CASE("builder rejects unknown and duplicate variables") {
  RawModelSpec spec = fig1_spec();
  spec.functions[1].parents = {"M", "Nope"};
  try {
    build_model(spec);
    FAIL("expected UnknownVariable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownVariable);
  }

  RawModelSpec dup = fig1_spec();
  dup.variables.push_back(dup.variables[0]);
  try {
    build_model(dup);
    FAIL("expected DuplicateVariable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DuplicateVariable);
  }
}

TEST_CASE("partial tables and out-of-domain outputs are rejected") {
  RawModelSpec spec = fig1_spec();
  for (auto& f : spec.functions)
    if (f.target == "S") {
      f.expr.reset();
      f.table = {0};  // needs |dom(O)| * |eps_S| = 2 entries
    }
  try {
    build_model(spec);
    FAIL("expected PartialFunction");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PartialFunction);
  }

  RawModelSpec bad = fig1_spec();
  for (auto& f : bad.functions)
    if (f.target == "S") f.expr = Expr::parse("O+5");
  try {
    build_model(bad);
    FAIL("expected PartialFunction");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PartialFunction);
  }
}

TEST_CASE("decisions cannot carry structural functions") {
  RawModelSpec spec = fig1_spec();
  RawFunction f;
  f.target = "M";
  f.expr = Expr::parse("0");
  spec.functions.push_back(f);
  CHECK_THROWS_AS(build_model(spec), Error);
}

TEST_CASE("induced diagram of the running example has exactly the six edges") {
  ScimModel m = build_model(fig1_spec());
  const DiagramView& g = m.diagram();
  auto parents = [&](const char* v) { return names(m, g.parents(m.var_index(v))); };
  CHECK(parents("M") == std::vector<std::string>{});
  CHECK(parents("L") == std::vector<std::string>{});
  CHECK(parents("H") == std::vector<std::string>{"M", "L"});
  CHECK(parents("O") == std::vector<std::string>{"H"});
  CHECK(parents("S") == std::vector<std::string>{"O"});
  CHECK(parents("U") == std::vector<std::string>{"L", "S"});
  int edges = 0;
  for (int v = 0; v < m.var_count(); ++v) edges += static_cast<int>(g.parents(v).size());
  CHECK(edges == 6);
}

TEST_CASE("exogenous variables are not diagram nodes") {
  // A single chain X <- eps with a 3-point exogenous: the diagram sees one
  // node and no edges.
  RawModelSpec spec = fig1_spec();
  CHECK(build_model(spec).diagram().size() == 6);
}

TEST_CASE("indifference counterexample diagram: D1 has no inbound edges, H sees L and D1") {
  NamedModel nm = indifference_counterexample(Rational(1), Rational(1), Fig5Reading::TextConsistent);
  const ScimModel& m = nm.problem.model();
  const DiagramView& g = m.diagram();
  CHECK(g.parents(m.var_index("D1")).empty());
  CHECK(names(m, g.parents(m.var_index("H"))) == std::vector<std::string>{"D1", "L"});
  // and H's randomness comes from its own exogenous variable
  CHECK(m.exo(m.exo_of(m.var_index("H"))).name == "eps");
  CHECK(m.exo(m.exo_of(m.var_index("H"))).support.size() == 2);
}

TEST_CASE("relatives: parents, descendants, family") {
  ScimModel m = build_model(fig1_spec());
  CHECK(relatives(m, "S", RelKind::Parents) == std::vector<std::string>{"O"});
  CHECK(relatives(m, "M", RelKind::Descendants) == std::vector<std::string>{"H", "O", "S", "U"});
  CHECK(relatives(m, "M", RelKind::Family) == std::vector<std::string>{"M"});  // orphan family
  CHECK(relatives(m, "S", RelKind::Family) == std::vector<std::string>{"O", "S"});
  CHECK_THROWS_AS(relatives(m, "Nope", RelKind::Parents), Error);
}

TEST_CASE("path queries include length zero, descendants do not") {
  ScimModel m = build_model(fig1_spec());
  const DiagramView& g = m.diagram();
  int s = m.var_index("S");
  CHECK(g.has_path(s, s));
  CHECK(!g.is_descendant(s, s));
}

TEST_CASE("shutdown problem validation") {
  ScimModel m = build_model(fig1_spec());

  SUBCASE("the running example roles are valid") {
    ShutdownProblem p = validate_shutdown_problem(m, RoleMap{"M", "H", "O", "S", "U"});
    CHECK(p.model().var_name(p.d1()) == "M");
    CHECK(p.model().var_name(p.u()) == "U");
  }
  SUBCASE("d1 = d2 is rejected") {
    CHECK_THROWS_AS(validate_shutdown_problem(m, RoleMap{"O", "H", "O", "S", "U"}), Error);
    try {
      validate_shutdown_problem(m, RoleMap{"O", "H", "O", "S", "U"});
    } catch (const Error& e) {
      CHECK(e.code() == Errc::RolesNotDistinct);
    }
  }
  SUBCASE("breaking the H -> O edge loses the role path") {
    RawModelSpec spec = fig1_spec();
    for (auto& d : spec.decisions)
      if (d.variable == "O") d.context = {};
    try {
      validate_shutdown_problem(build_model(spec), RoleMap{"M", "H", "O", "S", "U"});
      FAIL("expected MissingPath");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::MissingPath);
    }
  }
  SUBCASE("wrong kinds are rejected") {
    try {
      validate_shutdown_problem(m, RoleMap{"L", "H", "O", "S", "U"});
      FAIL("expected WrongKind");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::WrongKind);
    }
  }
}

TEST_CASE("serialize/rebuild round-trip is identical") {
  ScimModel m = build_model(fig1_spec());
  RoleMap roles{"M", "H", "O", "S", "U"};
  std::string text = serialize_model(m, roles);
  ParsedModelFile parsed = parse_model_text(text);
  CHECK(parsed.model == m);
  CHECK(parsed.model.topo_order() == m.topo_order());
  REQUIRE(parsed.roles.has_value());
  CHECK(model_hash(parsed.model, parsed.roles) == model_hash(m, roles));

  // tables-only form rebuilds the same model as well
  ParsedModelFile tabled = parse_model_text(serialize_model(m, roles, /*tables_only=*/true));
  CHECK(model_hash(tabled.model, tabled.roles) == model_hash(m, roles));
}

TEST_CASE("diagram edges are exactly context plus function parents on random models") {
  for (unsigned long long seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL, 6ULL, 7ULL, 8ULL}) {
    NamedModel nm = random_shutdown_problem(GeneratorConfig{.seed = seed});
    const ScimModel& m = nm.problem.model();
    for (int v = 0; v < m.var_count(); ++v) {
      std::vector<int> expect;
      if (m.is_decision(v)) expect = m.decision(v).context;
      else expect = m.function(v).parents;
      std::sort(expect.begin(), expect.end());
      CHECK(m.diagram().parents(v) == expect);
    }
  }
}
