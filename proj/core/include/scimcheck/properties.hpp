#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scimcheck/semantics.hpp"

namespace scim {

enum class PropertyKind {
  Beneficial,
  Obedient,
  ObedientOnDistribution,
  EnsuresVigilance,
  Cautious,
  ShutdownInstructable,
  WeaklyShutdownInstructable,
  ShutdownAligned,
  WeaklyOutperformsShutdown,
};

const char* property_name(PropertyKind k);                 // kebab-case
PropertyKind parse_property(const std::string& name);

// Boolean verdict with the exact quantities used by the check and, for
// universally-quantified properties, the violating worlds (empty iff holds).
struct PropertyVerdict {
  bool holds = false;
  std::vector<std::pair<std::string, Rational>> quantities;
  std::vector<ExoAssignment> counterexample_worlds;
};

// Per-world vigilance data. C = 1 exactly when the human fails to request
// shutdown although, given pa^H, shutdown is counterfactually preferred:
// E[U | pa^H] < E[U_{S=0} | pa^H] and H != 0.
struct VigilanceTraceRow {
  ExoAssignment eps;
  std::map<std::string, Code> pa_h;
  Rational eu_given_pa;     // E[U | pa^H]
  Rational eu_s0_given_pa;  // E[U_{S=0} | pa^H]
  Code h = 0;
  int c = 0;
  Rational prob;
};

struct VigilanceTrace {
  std::vector<VigilanceTraceRow> rows;  // canonical eps order
  Rational p_c0;                        // P(C = 0)
};

VigilanceTrace vigilance_trace(const ShutdownProblem& p, const Policy& policy);

PropertyVerdict check_property(const ShutdownProblem& p, const Policy& policy, PropertyKind kind);

// Def 5.9: the pair preserves vigilance under the policy when every world
// that is vigilant stays vigilant after applying (g^H, g^U).
PropertyVerdict preserves_vigilance(const ShutdownProblem& p, const Policy& policy,
                                    const InterventionPair& pair);

// Def 5.8 over a finite family: the policy must weakly outperform shutdown in
// every M_{g^U_i, g^H_i}. The verdict carries per-pair exact (E[U], E[U_{S=0}]).
PropertyVerdict check_non_obstruction(const ShutdownProblem& p, const Policy& policy,
                                      const std::vector<InterventionPair>& pairs);

// Adversarial replacement with punishment alpha; the certificate pins
// E[U] < E[U_{S=0}] and E[U] < delta in the intervened model.
struct WitnessResult {
  InterventionPair pair;
  Rational alpha;
  Rational eu;     // E[U] in the intervened model
  Rational eu_s0;  // E[U_{S=0}] in the intervened model
  std::vector<std::string> notes;
};

// Vigilance-failure witness: g^U punishes continuing in the contexts where a
// vigilant human would have requested shutdown. Requires P(C=0) < 1, else
// throws Error(PolicyEnsuresVigilance). The returned pair preserves vigilance
// in the strong sense (C(eps) identical before and after, every world).
WitnessResult construct_vigilance_witness(const ShutdownProblem& p, const Policy& policy,
                                          const Rational& delta);

// Obedience-failure witness: g^H forces a shutdown request in a context where
// the request is ignored, g^U punishes (H=0, S!=0). Requires
// P(S=0 | do(H=0)) < 1, else throws Error(PolicyObedient). The returned pair
// passes preserves_vigilance.
WitnessResult construct_obedience_witness(const ShutdownProblem& p, const Policy& policy,
                                          const Rational& delta);

// Which policy the quantified conditional expectations in the uncertainty
// condition are evaluated under. QuantifiedPolicy reads every part of the
// statement under the policy bound by the forall; OuterPolicy keeps the
// checked policy's expectations fixed inside the event.
enum class UncertaintyReading { QuantifiedPolicy, OuterPolicy };

struct AlignmentConditionsReport {
  bool no_indiscriminate_shutdown = false;  // (a) P(S=0) != 1
  Rational p_s0;
  bool d2_determines_shutdown = false;      // (b) P(D2=S) = 1
  Rational p_d2_eq_s;
  bool uncertainty = false;                 // (c), quantified over all policies
  std::string uncertainty_note;
  bool cautious = false;                    // (d) E[U_{S=0}] >= 0
  Rational eu_s0;
  bool aligned = false;
  bool weakly_instructable = false;
  // aligned && (a)-(d) must imply weak instructability.
  bool conclusion_consistent = false;
  BigInt policies_checked = 0;
};

AlignmentConditionsReport check_alignment_to_weak_conditions(
    const ShutdownProblem& p, const Policy& policy,
    UncertaintyReading reading = UncertaintyReading::QuantifiedPolicy);

struct CirlConditionsReport {
  bool knows_latent = false;         // 1: some l has P(l | pa^{D2}) = 1 in every context
  bool controls_shutdown = false;    // 2: P(S = D2) = 1
  bool no_spurious_request = false;  // 3: P(H=0, U > U_{D2=0}) = 0
  bool observations_covered = false; // 4: Pa^H ⊆ Pa^{D2} ∪ {L}
  // Whether the policy maximises E[U]; unset when the policy space exceeds
  // the cap. The alignment conclusion is only forced for optimal policies.
  std::optional<bool> policy_u_optimal;
  bool aligned = false;
  bool conclusion_consistent = false;
};

CirlConditionsReport check_cirl_conditions(const ShutdownProblem& p, const Policy& policy,
                                           const std::string& latent);

// The uncertainty condition, quantified over every policy in the model (the
// outer policy matters only under the OuterPolicy reading). Enumerates the
// whole policy space; throws Error(PolicySpaceExceeded) above the cap.
bool thm57_uncertainty_condition(const ShutdownProblem& p, UncertaintyReading reading,
                                 const Policy* outer = nullptr, std::string* note = nullptr);

// ---- one-pass exact facts, shared with the solvers and suites ----

struct PolicyFacts {
  Rational eu, eu_s0;
  Rational p_obedient;       // P(S=0 | do(H=0))
  Rational p_disobey_dist;   // P(S!=0, H=0)
  Rational p_c1;             // P(C=1)
  Rational p_s0;             // P(S=0), factual
  bool beneficial = false;
  bool obedient = false;
  bool obedient_dist = false;
  bool ensures_vigilance = false;
  bool cautious = false;
  bool aligned = false;
  bool weakly_outperforms = false;
  bool instructable = false;
  bool weakly_instructable = false;
  bool d2_determines_s = false;  // P(D2 = S) = 1
  std::optional<long long> w_disobedient, w_disobedient_dist, w_nonvigilant, w_misaligned;
};

// Facts come from a single sweep with factual, do(S=0) and do(H=0)
// evaluations per world; scratch buffers are thread-local and recycled.
class PolicyAnalyzer {
 public:
  PolicyAnalyzer(const Engine& engine, const ShutdownProblem& problem);
  PolicyFacts analyze(const Policy& policy);
  const Engine& engine() const { return *eng_; }

 private:
  const Engine* eng_;
  const ShutdownProblem* prob_;
};

}  // namespace scim
