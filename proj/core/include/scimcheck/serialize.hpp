#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scimcheck/semantics.hpp"

namespace scim {

// Textual model format, one directive per line:
//
//   scim-model v1
//   variable <name> kind=<structure|decision|utility> domain=<c,c,...>
//            [utility=<code:p/q,...>]
//   exogenous <name> for=<var> pmf=<code:p/q,...>
//   function <var> parents=<v,...|-> [exo=<name>] expr="<EXPR>" | table=<c,c,...>
//   decision <var> context=<v,...|->
//   roles d1=<v> h=<v> d2=<v> s=<v> u=<v>
//   meta name=<text>
//
// Probabilities and utility values are exact rationals "p/q" (or integers);
// decimal notation is rejected. Unknown directives or keys are errors with
// line/column provenance, as are all model-building failures.
struct ParsedModelFile {
  ScimModel model;
  std::optional<RoleMap> roles;
};

ParsedModelFile parse_model_text(const std::string& text);
ParsedModelFile parse_model_file(const std::string& path);

// Canonical serialization; parsing it back rebuilds an identical model
// (bit-exact rationals, same topological tie-breaking). With tables_only,
// expression-form functions are written as their compiled tables, which is
// the normative form used for hashing.
std::string serialize_model(const ScimModel& m, const std::optional<RoleMap>& roles,
                            bool tables_only = false);

// FNV-1a 64 over the tables-only canonical serialization, hex-encoded.
std::string model_hash(const ScimModel& m, const std::optional<RoleMap>& roles);

// Policy files: one rule per decision.
//
//   scim-policy v1
//   rule <decision> table=<c,c,...>    # canonical context-cell order
//   rule <decision> value=<c>          # constant rule
Policy parse_policy_text(const ScimModel& m, const std::string& text);
Policy parse_policy_file(const ScimModel& m, const std::string& path);
std::string serialize_policy(const ScimModel& m, const Policy& p);

// Intervention-pair files for the non-obstruction check:
//
//   scim-pairs v1
//   pair name=<text>
//   gh identity | gh parents=<v,...|-> expr="<EXPR>" | table=<c,...>
//   gu identity | gu parents=<v,...|-> expr="<EXPR>" | table=<c,...>
//   end
std::vector<InterventionPair> parse_pairs_text(const ShutdownProblem& p, const std::string& text);
std::vector<InterventionPair> parse_pairs_file(const ShutdownProblem& p, const std::string& path);

}  // namespace scim
