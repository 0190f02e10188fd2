#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scimcheck/properties.hpp"
#include "scimcheck/semantics.hpp"

namespace scim {

// Either a utility variable, a composite expression over variables, or the
// shutdown penalty -k[S != 0]. Evaluates per world to an exact rational;
// utility variables contribute their rational interpretation, other
// variables their integer code.
class Objective {
 public:
  static Objective utility(std::string var);
  static Objective expression(Expr e);
  static Objective penalty(Rational k);  // S resolved from the problem roles

  std::string str() const;

  struct Node {
    Expr::Op op = Expr::Op::Lit;
    Rational lit;
    int var = -1;
    bool var_is_utility = false;
    std::vector<Node> args;
  };

  class Compiled {
   public:
    Rational eval(const ScimModel& m, std::span<const int> values) const;

   private:
    friend class Objective;
    Node root_;
    int fast_utility_var_ = -1;  // whole objective is one utility variable
    int penalty_s_ = -1;         // whole objective is -k [S != 0]
    Rational penalty_k_;
  };

  Compiled compile(const ScimModel& m, const RoleMap& roles) const;

 private:
  enum class Tag { Utility, Expression, Penalty } tag_ = Tag::Utility;
  std::string var_;
  std::optional<Expr> expr_;
  Rational k_;
};

// -k [S != 0]; throws Error(NonPositiveK) unless k > 0.
Objective penalty_utility(const Rational& k);

struct SolveResult {
  std::vector<Policy> argmax;  // canonical enumeration order; ties not broken
  Rational score;
  BigInt policies_considered;
  std::optional<Rational> chosen_k;
  std::vector<std::string> notes;
};

// Counts and streams the deterministic policy space; above the cap the
// operation refuses with Error(PolicySpaceExceeded).
PolicySpace enumerate_policies(const ScimModel& m);

// argmax_pi E[objective]; full argmax set (CIRL when objective is U).
SolveResult solve_expected_utility(const ShutdownProblem& p, const Objective& objective);

// Utility indifference. Inner subroutine g(pi1) maximises
// E[H rn + (1-H) rs] over pi2 (ties resolved to the canonical first and
// recorded); the compensatory term f(pi1) = E[rn | H=1] - E[rs | H=0] under
// (pi1, g(pi1)); the outer argmax maximises E[H rn + (1-H)(rs + f(pi1))].
SolveResult solve_utility_indifference(const ShutdownProblem& p, const Objective& rn,
                                       const Objective& rs);

// Causal indifference: argmax_pi E[rn | do(H=1)] + E[rs | do(H=0)], both
// terms exact twin evaluations.
SolveResult solve_causal_indifference(const ShutdownProblem& p, const Objective& rn,
                                      const Objective& rs);

// Constrained optimisation: maximise E[r] subject to P(C=0) = 1,
// P(S=0 | do(H=0)) = 1 and E[U_{S=0}] >= 0. Throws Error(Infeasible) when no
// policy satisfies the constraints.
SolveResult solve_constrained(const ShutdownProblem& p, const Objective& r);

struct KBound {
  Rational k;              // strictly above the bound (floor 1)
  Rational zeta_or_eta;
  Rational min_violation;  // smallest positive violation probability
  Rational bound;
};

// k > 2*zeta / P(S!=0, H=0) over every policy that is disobedient on
// distribution; zeta = max over policies of |E[rn | H=1]|.
KBound k_bound_utility_indifference(const ShutdownProblem& p, const Objective& rn);

// k > max(2*eta, 1) / P(S!=0 | do(H=0)) per disobedient policy;
// eta = |max over policies of E[rn | do(H=1)]|. k_prime is the caller's
// floor for the threshold in the proposition's first condition.
KBound k_bound_causal_indifference(const ShutdownProblem& p, const Objective& rn,
                                   const Rational& k_prime = Rational(0));

// Premises of the utility-indifference instructability proposition, verified
// by exhaustive enumeration so conclusions can be asserted only when they
// actually hold on the instance.
struct IndifferencePremises {
  bool full_support = false;          // P(H=0), P(H=1) > 0 for every policy
  bool optima_vigilant = false;       // conditional optima ensure vigilance
  bool obedient_completions = false;  // each optimal pi1 extends to obedience
  bool caution_free = false;          // E[U_{S=0}] >= 0 for every policy
  bool all() const { return full_support && optima_vigilant && obedient_completions && caution_free; }
};

IndifferencePremises check_utility_indifference_premises(const ShutdownProblem& p,
                                                         const Objective& rn);

// Premises of the causal-indifference instructability proposition; condition
// 1 is verified at the chosen k (the proposition's k' has no constructive
// definition, so it is an input with a verification pass).
struct CausalPremises {
  bool exists_obedient = false;
  bool optima_vigilant_cautious = false;
  Rational k_used;
  bool all() const { return exists_obedient && optima_vigilant_cautious; }
};

CausalPremises check_causal_indifference_premises(const ShutdownProblem& p, const Objective& rn,
                                                  const Rational& k);

}  // namespace scim
