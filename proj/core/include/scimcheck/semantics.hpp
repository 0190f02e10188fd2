#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scimcheck/model.hpp"

namespace scim {

// One deterministic decision rule per decision variable. rules[k] pairs with
// model.decisions()[k]; each rule is a flat table of target-domain indices
// over the decision's context cells (context variables in declaration order,
// last axis fastest).
struct Policy {
  std::vector<std::vector<int>> rules;

  friend bool operator==(const Policy&, const Policy&) = default;
};

// Builds a policy from code-level rule tables, one entry per context cell in
// canonical order. Missing decisions or wrong table lengths throw.
Policy make_policy(const ScimModel& m,
                   const std::map<std::string, std::vector<Code>>& rules);
// Canonical one-line rendering, e.g. "M{}=0 O{H=0}=0 O{H=1}=1".
std::string policy_str(const ScimModel& m, const Policy& p);

// Joint assignment to the exogenous variables, by code.
using ExoAssignment = std::map<std::string, Code>;

// do(V=v), or a functional replacement of a structural function. Functional
// replacements on HumanReplacement / UtilityReplacement targets may rewire
// parents (App-B style); UtilityReplacement may extend the utility domain
// with extra punishment codes.
struct Intervention {
  enum class Kind { Atomic, Functional, HumanReplacement, UtilityReplacement };

  Kind kind = Kind::Atomic;
  std::string target;
  Code value = 0;                        // Atomic
  std::vector<std::string> parents;      // Functional*
  std::optional<Expr> body;              // over parents (and the target's exogenous)
  std::vector<Code> table;               // alternative to body
  std::vector<std::pair<Code, Rational>> extra_utility_codes;
  std::string label;

  static Intervention atomic(std::string target, Code value);
  static Intervention functional(Kind kind, std::string target, std::vector<std::string> parents,
                                 Expr body);
};

// Returns the intervened model M_{V=v} or M_{g^V}. Atomic interventions make
// the function constant and drop the node's inbound edges (decision targets
// are forced directly, bypassing the policy). Functional interventions rewire
// parents and re-check acyclicity. The exogenous space is never changed, so
// twin worlds share noise with the base model.
ScimModel intervene(const ScimModel& m, const Intervention& iv);

// Predicate over worlds: a conjunction of possibly negated atoms. Atoms test
// a variable against a code (factually or in the twin world), or compare a
// variable's factual value with its twin counterpart.
struct Event {
  enum class Cmp { Lt, Le, Eq, Ne, Ge, Gt };

  struct Atom {
    enum class Kind { VarEq, TwinVarEq, TwinCompare };
    Kind kind = Kind::VarEq;
    std::string var;
    Code value = 0;        // VarEq / TwinVarEq
    Cmp cmp = Cmp::Eq;     // TwinCompare: factual OP twin
    bool negated = false;
  };

  std::vector<Atom> atoms;

  static Event always() { return {}; }
  static Event var_eq(std::string var, Code value, bool negated = false);
  Event& and_var_eq(std::string var, Code value, bool negated = false);
  Event& and_twin_eq(std::string var, Code value, bool negated = false);
  // factual(var) OP twin(var); utility variables compare by exact value.
  Event& and_twin_cmp(std::string var, Cmp cmp, bool negated = false);
  bool references_twin() const;
};

struct WorldRow {
  ExoAssignment eps;
  Rational prob;
  std::map<std::string, Code> values;                // factual endogenous
  std::optional<std::map<std::string, Code>> twin;   // under the intervention
};

struct WorldTable {
  std::vector<WorldRow> rows;  // canonical eps order
};

// Unique endogenous assignment obtained by applying the structural functions
// and decision rules along the topological order.
std::map<std::string, Code> evaluate_world(const ScimModel& m, const Policy& policy,
                                           const ExoAssignment& eps);

// One row per joint exogenous assignment with positive probability. With an
// intervention, each row carries the twin assignment computed from the same
// eps in the intervened model (shared-noise counterfactual semantics).
WorldTable enumerate_worlds(const ScimModel& m, const Policy& policy,
                            const std::optional<Intervention>& iv = std::nullopt);

Rational probability(const ScimModel& m, const Policy& policy, const Event& event,
                     const std::optional<Intervention>& iv = std::nullopt);

// Exact conditional expectation of a utility-valued target. When an
// intervention is given, the target reads the twin world (e.g. U_{S=0});
// condition atoms default to factual values.
Rational expectation(const ScimModel& m, const Policy& policy, const std::string& target,
                     const std::optional<Event>& condition = std::nullopt,
                     const std::optional<Intervention>& iv = std::nullopt);

// Configurable cap on the joint exogenous assignment count; above it the
// engine refuses rather than approximate. Default 3^12, env override
// SCIMCHECK_WORLD_CAP.
long long world_cap();
// Cap on exhaustive policy enumeration. Default 10^5, env SCIMCHECK_POLICY_CAP.
long long policy_cap();

// ---- fast evaluation core shared by the checkers and solvers ----

// Flattened, index-based view of a model. Worlds are the positive-probability
// joint exogenous assignments in canonical (declaration-order, last fastest)
// order; values are domain indices. All methods are const and thread-safe.
class Engine {
 public:
  explicit Engine(const ScimModel& m);

  const ScimModel& model() const { return *m_; }
  long long worlds() const { return static_cast<long long>(world_exo_.size()); }
  std::span<const int> world_exo(long long w) const { return world_exo_[w]; }
  const Rational& world_prob(long long w) const { return world_prob_[w]; }
  // Probability numerator over the common denominator; denominators cancel in
  // same-model comparisons, which keeps hot paths in integer arithmetic.
  const BigInt& world_num(long long w) const { return world_num_[w]; }
  const BigInt& denom() const { return denom_; }

  // Evaluates world w under the policy into `out` (size var_count). `forced`
  // optionally pins one variable to a domain index, implementing an atomic
  // do() without building a new model.
  void eval(long long w, const Policy& policy, std::span<int> out,
            int forced_var = -1, int forced_idx = -1) const;

  ExoAssignment exo_assignment(long long w) const;

 private:
  const ScimModel* m_;
  std::vector<std::vector<int>> world_exo_;   // value indices per exogenous var
  std::vector<Rational> world_prob_;
  std::vector<BigInt> world_num_;
  BigInt denom_;
};

// Exhaustive deterministic-policy enumeration in canonical order:
// concatenate every decision's rule table (decisions in declaration order,
// cells in canonical context order); policies are ordered lexicographically
// over that digit string, last digit fastest.
class PolicySpace {
 public:
  explicit PolicySpace(const ScimModel& m);

  const BigInt& count() const { return count_; }
  bool within(long long cap) const { return count_ <= cap; }

  Policy first() const;
  bool next(Policy& p) const;  // false once the last policy was consumed
  BigInt index_of(const Policy& p) const;

 private:
  const ScimModel* m_;
  std::vector<int> radix_;        // |dom(D)| per decision
  std::vector<long long> cells_;  // rule length per decision
  BigInt count_;
};

// A (g^H, g^U) replacement pair; either side may be the identity.
struct InterventionPair {
  std::string name;
  std::optional<Intervention> g_h;
  std::optional<Intervention> g_u;

  bool is_identity() const { return !g_h && !g_u; }
};

// Applies the pair and re-attaches the roles (Def-4.1 revalidation is skipped:
// replacements at H or U may legitimately rewire parents).
ShutdownProblem apply_pair(const ShutdownProblem& p, const InterventionPair& pair);

}  // namespace scim
