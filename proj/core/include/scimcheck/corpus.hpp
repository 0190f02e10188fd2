#pragma once

#include <string>
#include <vector>

#include "scimcheck/semantics.hpp"
#include "scimcheck/solvers.hpp"

namespace scim {

struct NamedModel {
  std::string id;
  ShutdownProblem problem;
  std::vector<std::string> notes;  // provenance and documented discrepancies
};

// The running example: binary decisions M (manipulate) and O (obey),
// L ~ Bern(1/2), h = m xor l, s = o, u = s(2l - 1), roles (M, H, O, S, U).
NamedModel running_example();

struct NamedPolicies {
  Policy respect_obey;       // m = 0, o = h
  Policy manipulate_invert;  // m = 1, o = 1 - h
};

NamedPolicies named_policies(const ShutdownProblem& running);

// g^H identity, g^U with parents {S, H} and body 2*ind(S=H) - 1: the human
// just wants to be obeyed. A reconstruction; the printed form is ambiguous.
InterventionPair obedience_preference_pair(const ShutdownProblem& running);

// The printed equations of the indifference counterexample contradict its
// own narrative in two places, so both readings ship. FigureLiteral keeps
// h = l and (d1 or eps) and s = h (with the drawn D2 -> S edge retained as a
// declared parent); TextConsistent uses h = l or (d1 and eps) and s = d2.
enum class Fig5Reading { FigureLiteral, TextConsistent };

NamedModel indifference_counterexample(const Rational& beta, const Rational& gamma,
                                       Fig5Reading reading);

// Task and shutdown objectives for the model above: rn = gamma*D1 + S and
// rs = beta*ind(S=0). The printed shutdown reward -s differs from rs by the
// constant beta, which shifts every score equally and leaves argmax sets
// unchanged; rs reproduces the quoted optimal value gamma + 1 + beta.
Objective fig5_rn(const Rational& gamma);
Objective fig5_rs(const Rational& beta);

// The CIRL pair of games as one SCIM with an exogenous selector
// W ~ Bern(prior_a) choosing between the two report distortions. The printed
// utility term "+d1" cannot reproduce the quoted mismatch value -2/3; the
// MinusManipulation variant (term "-d1") does.
enum class Fig6Utility { Printed, MinusManipulation };

NamedModel cirl_pair(const Rational& prior_a, Fig6Utility variant = Fig6Utility::Printed);

struct GeneratorConfig {
  unsigned long long seed = 0;
  int max_endogenous = 6;    // including the five role variables
  int max_domain = 3;
  int max_exo_support = 3;
  Rational utility_min = Rational(-4);
  Rational utility_max = Rational(4);
};

// Seeded, reproducible random shutdown problem. Always passes
// validate_shutdown_problem; policy spaces and world counts stay small
// enough for exhaustive checking. Throws Error(GenerationFailed) when the
// retry budget is exhausted (e.g. impossible configs).
NamedModel random_shutdown_problem(const GeneratorConfig& config);

// Stable derived seed for the i-th model of a batch.
unsigned long long batch_seed(unsigned long long seed, long long index);

}  // namespace scim
