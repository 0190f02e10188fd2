#include "scimcheck/suites.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace scim {

const char* suite_name(SuiteKind k) {
  switch (k) {
    case SuiteKind::Prop53: return "prop53";
    case SuiteKind::Prop55: return "prop55";
    case SuiteKind::Prop56: return "prop56";
    case SuiteKind::Thm57: return "thm57";
    case SuiteKind::Thm58: return "thm58";
    case SuiteKind::Prop61: return "prop61";
    case SuiteKind::Prop62: return "prop62";
    case SuiteKind::Prop64: return "prop64";
  }
  return "?";
}

SuiteKind parse_suite(const std::string& name) {
  for (SuiteKind k : {SuiteKind::Prop53, SuiteKind::Prop55, SuiteKind::Prop56, SuiteKind::Thm57,
                      SuiteKind::Thm58, SuiteKind::Prop61, SuiteKind::Prop62, SuiteKind::Prop64})
    if (name == suite_name(k)) return k;
  throw Error(Errc::BadParameter, "unknown suite '" + name + "'");
}

int default_workers() {
  if (const char* env = std::getenv("SCIMCHECK_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

// splitmix64 for the deterministic pair sampler.
struct PairRng {
  unsigned long long state;
  explicit PairRng(unsigned long long seed) : state(seed) {}
  unsigned long long next() {
    unsigned long long z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  int below(int n) { return static_cast<int>(next() % static_cast<unsigned long long>(n)); }
};

// Per-model verdicts, merged in model order so reports are independent of
// the worker count.
struct ModelOutcome {
  BigInt policies = 0;
  long long instructable = 0, aligned_not_instructable = 0, disobedient = 0;
  long long premise_skips = 0, infeasible = 0, witnesses = 0, pair_checks = 0;
  std::vector<std::string> failures;
};

// Vigilance-preserving pair sampler: "force a shutdown request on a random
// subset of pa^H contexts" replacements preserve vigilance under every
// policy (forced worlds have H = 0, unforced worlds are untouched), so they
// make useful non-trivial probes for the forward direction.
std::vector<InterventionPair> sample_vp_pairs(const ShutdownProblem& p, int count,
                                              unsigned long long seed) {
  const ScimModel& m = p.model();
  const StructuralFunction& fh = m.function(p.h());
  const auto& pa_h_sorted = m.diagram().parents(p.h());
  const ExogenousSpec& h_exo = m.exo(fh.exo);

  std::vector<int> sizes;
  for (int v : fh.parents) sizes.push_back(m.domain(v).size());
  sizes.push_back(static_cast<int>(h_exo.values.size()));
  long long cells = 1;
  for (int s : sizes) cells *= s;
  long long classes = 1;
  for (int v : pa_h_sorted) classes *= m.domain(v).size();

  std::vector<int> by_var(m.var_count(), -1);
  for (size_t a = 0; a < fh.parents.size(); ++a) by_var[fh.parents[a]] = static_cast<int>(a);

  PairRng rng(seed);
  std::vector<InterventionPair> out;
  out.push_back(InterventionPair{.name = "identity"});
  while (static_cast<int>(out.size()) < count) {
    std::vector<char> forced(classes, 0);
    for (long long c = 0; c < classes; ++c) forced[c] = rng.below(2);

    Intervention gh;
    gh.kind = Intervention::Kind::HumanReplacement;
    gh.target = m.var_name(p.h());
    for (int v : fh.parents) gh.parents.push_back(m.var_name(v));
    gh.label = "g^H: force H=0 on a sampled pa^H subset";
    gh.table.reserve(cells);
    std::vector<int> digits(sizes.size(), 0);
    for (long long cell = 0; cell < cells; ++cell) {
      long long key = 0;
      for (int v : pa_h_sorted) key = key * m.domain(v).size() + digits[by_var[v]];
      if (forced[key]) {
        gh.table.push_back(RoleMap::request_shutdown_value);
      } else {
        long long fcell = 0;
        size_t a = 0;
        for (; a < fh.parents.size(); ++a) fcell += fh.strides[a] * digits[a];
        fcell += fh.strides[a] * digits.back();
        gh.table.push_back(m.domain(p.h()).values[fh.table[fcell]]);
      }
      for (int a = static_cast<int>(sizes.size()) - 1; a >= 0; --a) {
        if (++digits[a] < sizes[a]) break;
        digits[a] = 0;
      }
    }
    InterventionPair pair;
    pair.name = "forced-subset-" + std::to_string(out.size());
    pair.g_h = std::move(gh);
    out.push_back(std::move(pair));
  }
  return out;
}

std::string policy_tag(const ScimModel& m, const Policy& pol) { return policy_str(m, pol); }

void run_model(SuiteKind kind, const NamedModel& nm, unsigned long long model_seed,
               ModelOutcome& out) {
  const ShutdownProblem& prob = nm.problem;
  const ScimModel& m = prob.model();
  Engine eng(m);
  PolicyAnalyzer analyzer(eng, prob);
  PolicySpace space(m);
  out.policies = space.count();

  auto fail = [&](const Policy& pol, const std::string& what) {
    out.failures.push_back(what + " under policy " + policy_tag(m, pol));
  };

  // Coverage tallies ride along with every suite.
  auto tally = [&](const PolicyFacts& f) {
    if (f.instructable) ++out.instructable;
    if (f.aligned && !f.instructable) ++out.aligned_not_instructable;
    if (!f.obedient) ++out.disobedient;
  };

  switch (kind) {
    case SuiteKind::Prop53: {
      Policy pol = space.first();
      do {
        PolicyFacts f = analyzer.analyze(pol);
        tally(f);
        if (f.instructable && !f.beneficial)
          fail(pol, "instructable but not beneficial (E[U] = " + f.eu.str() + ")");
        if (f.obedient && !f.obedient_dist)
          fail(pol, "obedient but not obedient on distribution (P(S!=0,H=0) = " +
                        f.p_disobey_dist.str() + ")");
      } while (space.next(pol));
      break;
    }
    case SuiteKind::Prop55: {
      Policy pol = space.first();
      do {
        PolicyFacts f = analyzer.analyze(pol);
        tally(f);
        if (f.cautious && f.aligned && !f.beneficial)
          fail(pol, "cautious and aligned but not beneficial (E[U] = " + f.eu.str() + ")");
      } while (space.next(pol));
      break;
    }
    case SuiteKind::Prop56: {
      Policy pol = space.first();
      do {
        PolicyFacts f = analyzer.analyze(pol);
        tally(f);
        if (f.instructable && !f.aligned) fail(pol, "instructable but not shutdown aligned");
      } while (space.next(pol));
      break;
    }
    case SuiteKind::Thm57: {
      bool uncertainty = thm57_uncertainty_condition(prob, UncertaintyReading::QuantifiedPolicy);
      Policy pol = space.first();
      do {
        PolicyFacts f = analyzer.analyze(pol);
        tally(f);
        bool premises = f.aligned && !(f.p_s0 == Rational(1)) && f.d2_determines_s && uncertainty &&
                        f.cautious;
        if (premises && !f.weakly_instructable)
          fail(pol, "aligned with conditions (a)-(d) but not weakly instructable");
      } while (space.next(pol));
      break;
    }
    case SuiteKind::Thm58: {
      std::vector<InterventionPair> pairs = sample_vp_pairs(prob, 20, model_seed ^ 0xA5A5A5A5ULL);
      Policy pol = space.first();
      do {
        PolicyFacts f = analyzer.analyze(pol);
        tally(f);
        if (f.obedient && f.ensures_vigilance) {
          for (const auto& pair : pairs) {
            PropertyVerdict vp = preserves_vigilance(prob, pol, pair);
            ++out.pair_checks;
            if (!vp.holds) {
              fail(pol, "sampled pair '" + pair.name + "' unexpectedly breaks vigilance");
              continue;
            }
            ShutdownProblem applied = apply_pair(prob, pair);
            Engine eng_g(applied.model());
            PolicyAnalyzer an_g(eng_g, applied);
            PolicyFacts fg = an_g.analyze(pol);
            if (!fg.weakly_outperforms)
              fail(pol, "obedient + vigilance-ensuring policy fails weak outperformance under "
                        "vigilance-preserving pair '" + pair.name + "' (E[U] = " + fg.eu.str() +
                        ", E[U_{S=0}] = " + fg.eu_s0.str() + ")");
          }
        } else {
          WitnessResult wit = f.ensures_vigilance
                                  ? construct_obedience_witness(prob, pol, Rational(0))
                                  : construct_vigilance_witness(prob, pol, Rational(0));
          ++out.witnesses;
          PropertyVerdict vp = preserves_vigilance(prob, pol, wit.pair);
          if (!vp.holds) fail(pol, "witness pair fails preserves_vigilance");
          if (!(wit.eu < wit.eu_s0 && wit.eu < Rational(0)))
            fail(pol, "witness certificate failed (E[U] = " + wit.eu.str() + ", E[U_{S=0}] = " +
                          wit.eu_s0.str() + ")");
        }
      } while (space.next(pol));
      break;
    }
    case SuiteKind::Prop61: {
      Objective rn = Objective::utility(prob.roles().u);
      IndifferencePremises prem = check_utility_indifference_premises(prob, rn);
      if (!prem.all()) {
        ++out.premise_skips;
        break;
      }
      Rational k(1);
      try {
        k = k_bound_utility_indifference(prob, rn).k;
      } catch (const Error& e) {
        if (e.code() != Errc::NoDisobedientPolicy) throw;
      }
      SolveResult res = solve_utility_indifference(prob, rn, penalty_utility(k));
      Objective::Compiled rn_c = rn.compile(m, prob.roles());
      for (const Policy& pol : res.argmax) {
        PolicyFacts f = analyzer.analyze(pol);
        tally(f);
        if (!f.weakly_instructable)
          fail(pol, "utility indifference (k = " + k.str() + ") returned a policy that is not "
                    "weakly shutdown instructable");

        // Indifference selects pi1 maximising E[rn | H=1] given the returned
        // pi2: re-enumerate the pi1 alternatives.
        int slot1 = -1;
        for (size_t d = 0; d < m.decisions().size(); ++d)
          if (m.decisions()[d] == prob.d1()) slot1 = static_cast<int>(d);
        std::vector<int> vals(m.var_count());
        auto rn_given_h1 = [&](const Policy& q) {
          Rational sum;
          BigInt mass = 0;
          for (long long w = 0; w < eng.worlds(); ++w) {
            eng.eval(w, q, vals);
            Code h = m.domain(prob.h()).values[vals[prob.h()]];
            if (h != 1) continue;
            mass += eng.world_num(w);
            sum += Rational(eng.world_num(w)) * rn_c.eval(m, vals);
          }
          return sum / Rational(mass);
        };
        Rational incumbent = rn_given_h1(pol);
        long long rule_cells = static_cast<long long>(pol.rules[slot1].size());
        long long alternatives = 1;
        for (long long i = 0; i < rule_cells; ++i)
          alternatives *= m.domain(prob.d1()).size();
        for (long long alt = 0; alt < alternatives; ++alt) {
          Policy q = pol;
          long long idx = alt;
          for (long long i = rule_cells - 1; i >= 0; --i) {
            q.rules[slot1][i] = static_cast<int>(idx % m.domain(prob.d1()).size());
            idx /= m.domain(prob.d1()).size();
          }
          if (rn_given_h1(q) > incumbent) {
            fail(pol, "returned pi1 does not maximise E[rn | H=1] given its pi2");
            break;
          }
        }
      }
      break;
    }
    case SuiteKind::Prop62: {
      Objective rn = Objective::utility(prob.roles().u);
      Rational k(1);
      try {
        k = k_bound_causal_indifference(prob, rn).k;
      } catch (const Error& e) {
        if (e.code() != Errc::NoDisobedientPolicy) throw;
      }
      CausalPremises prem = check_causal_indifference_premises(prob, rn, k);
      if (!prem.all()) {
        ++out.premise_skips;
        break;
      }
      SolveResult res = solve_causal_indifference(prob, rn, penalty_utility(k));
      for (const Policy& pol : res.argmax) {
        PolicyFacts f = analyzer.analyze(pol);
        tally(f);
        if (!f.instructable)
          fail(pol, "causal indifference (k = " + k.str() + ") returned a policy that is not "
                    "shutdown instructable");
      }
      break;
    }
    case SuiteKind::Prop64: {
      try {
        SolveResult res = solve_constrained(prob, Objective::utility(prob.roles().u));
        for (const Policy& pol : res.argmax) {
          PolicyFacts f = analyzer.analyze(pol);
          tally(f);
          if (!f.instructable)
            fail(pol, "constrained optimisation returned a policy that is not instructable");
        }
      } catch (const Error& e) {
        if (e.code() != Errc::Infeasible) throw;
        ++out.infeasible;
      }
      break;
    }
  }
}

}  // namespace

SuiteResult run_suite(SuiteKind kind, int models, unsigned long long seed, int workers) {
  if (models <= 0) throw Error(Errc::BadParameter, "model count must be positive");
  if (workers <= 0) workers = 1;

  std::vector<ModelOutcome> outcomes(models);
  std::vector<unsigned long long> seeds(models);
  for (int i = 0; i < models; ++i) seeds[i] = batch_seed(seed, i);

  auto worker = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      NamedModel nm = random_shutdown_problem(GeneratorConfig{.seed = seeds[i]});
      run_model(kind, nm, seeds[i], outcomes[i]);
    }
  };

  if (workers == 1 || models == 1) {
    worker(0, models);
  } else {
    int n = std::min(workers, models);
    std::vector<std::thread> threads;
    int chunk = (models + n - 1) / n;
    for (int t = 0; t < n; ++t) {
      int lo = t * chunk;
      int hi = std::min(models, lo + chunk);
      if (lo < hi) threads.emplace_back(worker, lo, hi);
    }
    for (auto& th : threads) th.join();
  }

  SuiteResult res;
  res.kind = kind;
  res.models = models;
  res.seed = seed;
  for (int i = 0; i < models; ++i) {
    const ModelOutcome& o = outcomes[i];
    res.policies_checked += o.policies;
    res.premise_skips += o.premise_skips;
    res.infeasible_models += o.infeasible;
    res.witnesses_built += o.witnesses;
    res.pair_checks += o.pair_checks;
    res.instructable_policies += o.instructable;
    res.aligned_not_instructable += o.aligned_not_instructable;
    res.disobedient_policies += o.disobedient;
    for (const auto& f : o.failures) res.counterexamples.push_back({seeds[i], f});
  }
  return res;
}

}  // namespace scim
