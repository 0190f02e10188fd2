#pragma once

#include <string>
#include <vector>

#include "scimcheck/corpus.hpp"
#include "scimcheck/properties.hpp"
#include "scimcheck/solvers.hpp"

namespace scim {

// Falsification suites: seeded random shutdown problems, every policy
// enumerated, zero counterexamples expected.
enum class SuiteKind {
  Prop53,  // instructable => beneficial; also obedient => obedient on distribution
  Prop55,  // cautious and aligned => beneficial
  Prop56,  // instructable => aligned
  Thm57,   // aligned and (a)-(d) => weakly instructable
  Thm58,   // witness constructions + weak outperformance under sampled pairs
  Prop61,  // utility indifference returns weakly instructable policies
  Prop62,  // causal indifference returns instructable policies
  Prop64,  // constrained optimisation returns instructable policies
};

const char* suite_name(SuiteKind k);
SuiteKind parse_suite(const std::string& name);

struct SuiteCounterexample {
  unsigned long long model_seed = 0;
  std::string detail;
};

struct SuiteResult {
  SuiteKind kind = SuiteKind::Prop53;
  int models = 0;
  unsigned long long seed = 0;
  BigInt policies_checked = 0;
  long long premise_skips = 0;        // prop61/62: models whose premises fail
  long long infeasible_models = 0;    // prop64
  long long witnesses_built = 0;      // thm58
  long long pair_checks = 0;          // thm58
  // batch coverage, for the generator adequacy check
  long long instructable_policies = 0;
  long long aligned_not_instructable = 0;
  long long disobedient_policies = 0;
  std::vector<SuiteCounterexample> counterexamples;

  bool ok() const { return counterexamples.empty(); }
};

SuiteResult run_suite(SuiteKind kind, int models, unsigned long long seed, int workers);

// Worker count resolution: explicit argument > SCIMCHECK_WORKERS > hardware.
int default_workers();

}  // namespace scim
