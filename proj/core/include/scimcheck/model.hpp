#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scimcheck/errors.hpp"
#include "scimcheck/expr.hpp"
#include "scimcheck/rational.hpp"

namespace scim {

using Code = int;  // integer-coded domain value; booleans are {0,1}

enum class VarKind { Structure, Decision, Utility };

const char* kind_name(VarKind k);

// Finite ordered domain. Utility variables carry an exact rational
// interpretation per code; for other variables interp is empty.
struct Domain {
  std::vector<Code> values;
  std::vector<Rational> interp;  // aligned with values; empty for non-utility

  int size() const { return static_cast<int>(values.size()); }
  int index_of(Code c) const;  // -1 when absent
  const Rational& value_of(int idx) const { return interp[idx]; }
};

// ----- raw (pre-validation) description, as parsed from a model file -----

struct RawVariable {
  std::string name;
  VarKind kind = VarKind::Structure;
  std::vector<Code> domain;
  std::vector<std::pair<Code, Rational>> utility;  // code -> exact value
  SourcePos pos;
};

struct RawExogenous {
  std::string name;
  std::string owner;                            // non-decision endogenous variable
  std::vector<std::pair<Code, Rational>> pmf;   // code -> exact probability
  SourcePos pos;
};

struct RawFunction {
  std::string target;
  std::vector<std::string> parents;   // ordered endogenous parents (Z^V)
  std::string exo;                    // empty = bind to the target's exogenous
  std::optional<Expr> expr;
  std::vector<Code> table;            // flat, row-major over (parents..., exo)
  SourcePos pos;
};

struct RawDecision {
  std::string variable;
  std::vector<std::string> context;   // C^D, endogenous
  SourcePos pos;
};

struct RawRoles {
  std::string d1, h, d2, s, u;
  SourcePos pos;
};

struct RawModelSpec {
  std::string name;  // optional metadata
  std::vector<RawVariable> variables;
  std::vector<RawExogenous> exogenous;
  std::vector<RawFunction> functions;
  std::vector<RawDecision> decisions;
  std::optional<RawRoles> roles;
};

// ----- validated model -----

struct ExogenousSpec {
  std::string name;
  int owner = -1;                     // endogenous index
  std::vector<Code> values;
  std::vector<Rational> pmf;          // aligned; >= 0; sums to exactly 1
  std::vector<int> support;           // indices with positive probability
};

struct StructuralFunction {
  int target = -1;
  std::vector<int> parents;           // endogenous indices, declared order
  int exo = -1;                       // exogenous index
  std::optional<Expr> expr;           // kept for serialization only
  std::vector<int> table;             // target domain indices; row-major over
                                      // (parents..., exo), last axis fastest
  std::vector<long long> strides;     // per (parents..., exo)
};

struct DecisionSpec {
  int variable = -1;
  std::vector<int> context;           // endogenous indices, declaration order
};

// Induced causal influence diagram over the endogenous variables.
// Decision nodes take an inbound edge from each context member; other nodes
// from each structural-function parent. Exogenous variables are not nodes.
class DiagramView {
 public:
  int size() const { return static_cast<int>(parents_.size()); }
  const std::vector<int>& parents(int v) const { return parents_[v]; }
  const std::vector<int>& children(int v) const { return children_[v]; }
  // Directed paths of length >= 1; v itself is not its own descendant.
  const std::vector<int>& descendants(int v) const { return descendants_[v]; }
  std::vector<int> family(int v) const;  // Pa^V ∪ {V}
  bool is_descendant(int anc, int v) const { return desc_matrix_[anc][v] != 0; }
  // Directed path of length >= 0 (a == b counts as a path).
  bool has_path(int a, int b) const { return a == b || is_descendant(a, b); }

 private:
  friend class ScimModel;
  std::vector<std::vector<int>> parents_, children_, descendants_;
  std::vector<std::vector<char>> desc_matrix_;
};

enum class RelKind { Parents, Descendants, Family };

// Finite SCIM: variable partition, exogenous distributions, structural
// functions and decision contexts. Immutable after build; all queries are
// const and safe under concurrent readers.
class ScimModel {
 public:
  static ScimModel build(const RawModelSpec& spec);

  const std::string& name() const { return name_; }
  int var_count() const { return static_cast<int>(vars_.size()); }
  int exo_count() const { return static_cast<int>(exo_.size()); }

  int var_index(const std::string& name) const;         // throws UnknownVariable
  int find_var(const std::string& name) const;          // -1 when absent
  const std::string& var_name(int v) const { return vars_[v].name; }
  VarKind kind(int v) const { return vars_[v].kind; }
  const Domain& domain(int v) const { return vars_[v].domain; }
  bool is_decision(int v) const { return vars_[v].kind == VarKind::Decision; }

  const ExogenousSpec& exo(int e) const { return exo_[e]; }
  int exo_index(const std::string& name) const;
  // Exogenous variable attached to endogenous v (-1 for decisions).
  int exo_of(int v) const { return exo_of_[v]; }

  bool has_function(int v) const { return func_of_[v] >= 0; }
  const StructuralFunction& function(int v) const;       // non-decision v
  const std::vector<int>& decisions() const { return decision_vars_; }
  const DecisionSpec& decision(int v) const;             // decision v
  std::optional<int> decision_override(int v) const;     // forced domain index

  const std::vector<int>& topo_order() const { return topo_; }
  const DiagramView& diagram() const { return diagram_; }

  // Exact number of joint exogenous assignments with positive probability.
  BigInt world_count() const;

  RawModelSpec to_raw() const;

  friend bool operator==(const ScimModel& a, const ScimModel& b);

 private:
  friend ScimModel intervened_copy(const ScimModel&, int target, std::optional<int> forced,
                                   std::optional<StructuralFunction> replacement,
                                   const std::vector<std::pair<Code, Rational>>& extra_codes);

  struct Var {
    std::string name;
    VarKind kind;
    Domain domain;
  };

  void finalize();  // recompute diagram, topo order, strides, support

  std::string name_;
  std::vector<Var> vars_;
  std::vector<ExogenousSpec> exo_;
  std::vector<StructuralFunction> funcs_;
  std::vector<DecisionSpec> decision_specs_;
  std::vector<int> func_of_;        // var -> funcs_ index or -1
  std::vector<int> decision_of_;    // var -> decision_specs_ index or -1
  std::vector<int> exo_of_;         // var -> exo index or -1
  std::vector<int> decision_vars_;
  std::vector<std::optional<int>> override_;  // per var, forced domain index
  std::vector<int> topo_;
  DiagramView diagram_;
};

// Operation names from the module contract.
ScimModel build_model(const RawModelSpec& spec);
const DiagramView& induced_diagram(const ScimModel& m);
std::vector<std::string> relatives(const ScimModel& m, const std::string& v, RelKind kind);

struct RoleMap {
  std::string d1, h, d2, s, u;
  // Codes with fixed meaning: S = 0 is "shut down", H = 0 is "please shut down".
  static constexpr Code shutdown_value = 0;
  static constexpr Code request_shutdown_value = 0;
};

// A validated shutdown problem: the model plus the (D1, H, D2, S, U) roles,
// with the D1 ~> H ~> D2 ~> S ~> U path over distinct nodes.
class ShutdownProblem {
 public:
  ShutdownProblem() = default;  // empty until assigned from validate()

  static ShutdownProblem validate(ScimModel model, RoleMap roles);

  // Re-attaches roles to an intervened variant of the model without
  // re-checking the role path (function replacements at H or U may rewire
  // parents; the role structure itself is inherited).
  ShutdownProblem with_model(ScimModel model) const;

  const ScimModel& model() const { return model_; }
  const RoleMap& roles() const { return roles_; }
  int d1() const { return d1_; }
  int h() const { return h_; }
  int d2() const { return d2_; }
  int s() const { return s_; }
  int u() const { return u_; }

 private:
  ScimModel model_;
  RoleMap roles_;
  int d1_ = -1, h_ = -1, d2_ = -1, s_ = -1, u_ = -1;
};

ShutdownProblem validate_shutdown_problem(ScimModel model, RoleMap roles);

}  // namespace scim
