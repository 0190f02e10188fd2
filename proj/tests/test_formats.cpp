#include <doctest.h>

#include <json.hpp>

#include "scimcheck/corpus.hpp"
#include "scimcheck/properties.hpp"
#include "scimcheck/report.hpp"
#include "scimcheck/serialize.hpp"

using namespace scim;

TEST_CASE("the exported running example parses back to the corpus model") {
  NamedModel nm = running_example();
  std::string text = serialize_model(nm.problem.model(), nm.problem.roles());
  ParsedModelFile parsed = parse_model_text(text);
  CHECK(parsed.model == nm.problem.model());
  REQUIRE(parsed.roles.has_value());
  CHECK(parsed.roles->d1 == "M");
  CHECK(model_hash(parsed.model, parsed.roles) ==
        model_hash(nm.problem.model(), nm.problem.roles()));
}

TEST_CASE("decimal probabilities are rejected with provenance") {
  std::string text =
      "scim-model v1\n"
      "variable L kind=structure domain=0,1\n"
      "exogenous eL for=L pmf=0:0.5,1:1/2\n"
      "function L parents=- expr=\"eL\"\n";
  try {
    parse_model_text(text);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("unknown directives and keys are rejected") {
  try {
    parse_model_text("scim-model v1\nwhatever X kind=structure\n");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  try {
    parse_model_text("scim-model v1\nvariable X kind=structure domain=0,1 color=red\n");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
  }
}

TEST_CASE("model files without roles stay usable but carry no problem") {
  NamedModel nm = running_example();
  std::string text = serialize_model(nm.problem.model(), std::nullopt);
  ParsedModelFile parsed = parse_model_text(text);
  CHECK(!parsed.roles.has_value());
}

TEST_CASE("builder errors surface with the offending line") {
  // sums to 5/6
  std::string text =
      "scim-model v1\n"
      "variable L kind=structure domain=0,1\n"
      "exogenous eL for=L pmf=0:1/2,1:1/3\n"
      "function L parents=- expr=\"eL\"\n";
  try {
    parse_model_text(text);
    FAIL("expected BadDistribution");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadDistribution);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("policy files round-trip") {
  NamedModel nm = running_example();
  NamedPolicies pols = named_policies(nm.problem);
  std::string text = serialize_policy(nm.problem.model(), pols.manipulate_invert);
  Policy parsed = parse_policy_text(nm.problem.model(), text);
  CHECK(parsed == pols.manipulate_invert);

  Policy constant = parse_policy_text(nm.problem.model(),
                                      "scim-policy v1\nrule M value=1\nrule O value=0\n");
  CHECK(constant == make_policy(nm.problem.model(), {{"M", {1}}, {"O", {0, 0}}}));

  CHECK_THROWS_AS(parse_policy_text(nm.problem.model(), "scim-policy v1\nrule M table=0\n"), Error);
}

TEST_CASE("pairs files parse and feed the non-obstruction checker") {
  NamedModel nm = running_example();
  std::string text =
      "scim-pairs v1\n"
      "pair name=obedience-preference\n"
      "gh identity\n"
      "gu parents=S,H expr=\"2*ind(S=H)-1\"\n"
      "end\n";
  std::vector<InterventionPair> pairs = parse_pairs_text(nm.problem, text);
  REQUIRE(pairs.size() == 1);
  NamedPolicies pols = named_policies(nm.problem);
  PropertyVerdict v = check_non_obstruction(nm.problem, pols.manipulate_invert, pairs);
  CHECK(!v.holds);
  CHECK(v.quantities[0].second == Rational(-1));

  CHECK_THROWS_AS(parse_pairs_text(nm.problem, "scim-pairs v1\ngh identity\n"), Error);
}

TEST_CASE("reports render deterministically in both formats") {
  Report rep;
  rep.command = "scimcheck check running-example respect-obey --property beneficial";
  rep.field("holds", "yes");
  rep.field("E[U]", "1/2");
  Report::Table t;
  t.title = "demo";
  t.header = {"a", "b"};
  t.rows = {{"1", "2"}, {"333", "4"}};
  rep.tables.push_back(t);

  CHECK(rep.render_table() == rep.render_table());
  CHECK(rep.render_json() == rep.render_json());
  CHECK(rep.render_table().find("E[U]") != std::string::npos);

  nlohmann::json parsed = nlohmann::json::parse(rep.render_json());
  CHECK(parsed["fields"]["E[U]"] == "1/2");
  CHECK(parsed["tables"][0]["rows"][1][0] == "333");
}
