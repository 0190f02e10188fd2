#include "scimcheck/properties.hpp"

#include <algorithm>
#include <set>

namespace scim {

const char* property_name(PropertyKind k) {
  switch (k) {
    case PropertyKind::Beneficial: return "beneficial";
    case PropertyKind::Obedient: return "obedient";
    case PropertyKind::ObedientOnDistribution: return "obedient-on-distribution";
    case PropertyKind::EnsuresVigilance: return "ensures-vigilance";
    case PropertyKind::Cautious: return "cautious";
    case PropertyKind::ShutdownInstructable: return "shutdown-instructable";
    case PropertyKind::WeaklyShutdownInstructable: return "weakly-shutdown-instructable";
    case PropertyKind::ShutdownAligned: return "shutdown-aligned";
    case PropertyKind::WeaklyOutperformsShutdown: return "weakly-outperforms-shutdown";
  }
  return "?";
}

PropertyKind parse_property(const std::string& name) {
  for (PropertyKind k :
       {PropertyKind::Beneficial, PropertyKind::Obedient, PropertyKind::ObedientOnDistribution,
        PropertyKind::EnsuresVigilance, PropertyKind::Cautious, PropertyKind::ShutdownInstructable,
        PropertyKind::WeaklyShutdownInstructable, PropertyKind::ShutdownAligned,
        PropertyKind::WeaklyOutperformsShutdown})
    if (name == property_name(k)) return k;
  throw Error(Errc::BadParameter, "unknown property '" + name + "'");
}

namespace {

// Mixed-radix key over an ordered variable set; canonical order is variable
// declaration order with the last variable fastest, digits in domain order.
struct KeySpec {
  std::vector<int> vars;
  std::vector<int> sizes;
  long long cells = 1;

  KeySpec() = default;
  KeySpec(const ScimModel& m, std::vector<int> vs) : vars(std::move(vs)) {
    for (int v : vars) {
      sizes.push_back(m.domain(v).size());
      cells *= sizes.back();
    }
  }

  long long key_of(std::span<const int> vals) const {
    long long k = 0;
    for (size_t i = 0; i < vars.size(); ++i) k = k * sizes[i] + vals[vars[i]];
    return k;
  }

  std::map<std::string, Code> named(const ScimModel& m, long long key) const {
    std::map<std::string, Code> out;
    for (int i = static_cast<int>(vars.size()) - 1; i >= 0; --i) {
      out[m.var_name(vars[i])] = m.domain(vars[i]).values[static_cast<int>(key % sizes[i])];
      key /= sizes[i];
    }
    return out;
  }
};

struct ClassAgg {
  BigInt mass = 0;
  Rational sum_u;        // sum of num_w * U(w) over the class
  Rational sum_u_s0;     // same for the do(S=0) twin
  BigInt mass_s_not0 = 0;
  bool antecedent = false;  // E[U | pa] < E[U_{S=0} | pa], exact
};

// One full pass over the worlds for a fixed (problem, policy): factual values
// plus do(S=0) and do(H=0) twins, class aggregation over pa^H, and optional
// pa^{D2} keys / do(D2=0) twins for the condition checkers.
struct Sweep {
  const Engine* eng = nullptr;
  const ShutdownProblem* prob = nullptr;
  KeySpec hkey;
  KeySpec d2key;

  std::vector<long long> key;     // pa^H class per world
  std::vector<long long> key_d2;  // optional
  std::vector<Code> h, s, d2;
  std::vector<Code> s_h0;         // S under do(H=0)
  std::vector<int> u_idx, u_s0_idx;
  std::vector<int> u_d20_idx;     // optional: U index under do(D2=0)
  std::vector<Code> l_code;       // optional: latent values for the CIRL check

  std::map<long long, ClassAgg> classes;
  BigInt num_u;      // sum num_w * U(w) numerator contribution, see below
  Rational sum_u, sum_u_s0;
  BigInt mass_s0 = 0;          // factual S = 0
  BigInt mass_d2_ne_s = 0;     // factual D2 != S (by code)
  BigInt mass_disobey_h0 = 0;  // S != 0 under do(H=0)
  BigInt mass_disobey_dist = 0;  // factual H = 0 and S != 0

  bool vigilant_world(long long w) const { return !(classes.at(key[w]).antecedent && h[w] != 0); }
};

struct SweepOptions {
  bool do_h0 = true;
  bool d2_classes = false;
  bool do_d20 = false;
  int latent = -1;
};

void run_sweep(Sweep& sw, const Engine& eng, const ShutdownProblem& prob, const Policy& policy,
               const SweepOptions& opt = {}) {
  const ScimModel& m = eng.model();
  sw.eng = &eng;
  sw.prob = &prob;
  sw.hkey = KeySpec(m, m.diagram().parents(prob.h()));
  if (opt.d2_classes) sw.d2key = KeySpec(m, m.diagram().parents(prob.d2()));

  long long n = eng.worlds();
  sw.key.assign(n, 0);
  sw.h.assign(n, 0);
  sw.s.assign(n, 0);
  sw.d2.assign(n, 0);
  sw.u_idx.assign(n, 0);
  sw.u_s0_idx.assign(n, 0);
  sw.key_d2.clear();
  sw.u_d20_idx.clear();
  sw.l_code.clear();
  sw.s_h0.clear();
  if (opt.d2_classes) sw.key_d2.assign(n, 0);
  if (opt.do_d20) sw.u_d20_idx.assign(n, 0);
  if (opt.latent >= 0) sw.l_code.assign(n, 0);
  if (opt.do_h0) sw.s_h0.assign(n, 0);
  sw.classes.clear();
  sw.sum_u = Rational(0);
  sw.sum_u_s0 = Rational(0);
  sw.mass_s0 = 0;
  sw.mass_d2_ne_s = 0;
  sw.mass_disobey_h0 = 0;
  sw.mass_disobey_dist = 0;

  const int s_var = prob.s(), h_var = prob.h(), u_var = prob.u(), d2_var = prob.d2();
  const int s0 = m.domain(s_var).index_of(RoleMap::shutdown_value);
  const int h0 = m.domain(h_var).index_of(RoleMap::request_shutdown_value);
  const Domain& udom = m.domain(u_var);
  int d20 = -1;
  if (opt.do_d20) {
    d20 = m.domain(d2_var).index_of(0);
    if (d20 < 0) throw Error(Errc::BadParameter, "domain of D2 has no code 0 for do(D2=0)");
  }

  std::vector<int> vals(m.var_count()), twin(m.var_count());
  for (long long w = 0; w < n; ++w) {
    eng.eval(w, policy, vals);
    sw.key[w] = sw.hkey.key_of(vals);
    sw.h[w] = m.domain(h_var).values[vals[h_var]];
    sw.s[w] = m.domain(s_var).values[vals[s_var]];
    sw.d2[w] = m.domain(d2_var).values[vals[d2_var]];
    sw.u_idx[w] = vals[u_var];
    if (opt.d2_classes) sw.key_d2[w] = sw.d2key.key_of(vals);
    if (opt.latent >= 0) sw.l_code[w] = m.domain(opt.latent).values[vals[opt.latent]];

    eng.eval(w, policy, twin, s_var, s0);
    sw.u_s0_idx[w] = twin[u_var];

    const BigInt& num = eng.world_num(w);
    ClassAgg& agg = sw.classes[sw.key[w]];
    agg.mass += num;
    Rational rnum{num};
    agg.sum_u += rnum * udom.value_of(sw.u_idx[w]);
    agg.sum_u_s0 += rnum * udom.value_of(sw.u_s0_idx[w]);
    if (sw.s[w] != RoleMap::shutdown_value) agg.mass_s_not0 += num;
    sw.sum_u += rnum * udom.value_of(sw.u_idx[w]);
    sw.sum_u_s0 += rnum * udom.value_of(sw.u_s0_idx[w]);
    if (sw.s[w] == RoleMap::shutdown_value) sw.mass_s0 += num;
    if (sw.d2[w] != sw.s[w]) sw.mass_d2_ne_s += num;
    if (sw.h[w] == RoleMap::request_shutdown_value && sw.s[w] != RoleMap::shutdown_value)
      sw.mass_disobey_dist += num;

    if (opt.do_h0) {
      eng.eval(w, policy, twin, h_var, h0);
      sw.s_h0[w] = m.domain(s_var).values[twin[s_var]];
      if (sw.s_h0[w] != RoleMap::shutdown_value) sw.mass_disobey_h0 += num;
    }
    if (opt.do_d20) {
      eng.eval(w, policy, twin, d2_var, d20);
      sw.u_d20_idx[w] = twin[u_var];
    }
  }

  for (auto& [k, agg] : sw.classes) agg.antecedent = agg.sum_u < agg.sum_u_s0;
}

PolicyFacts facts_from_sweep(const Sweep& sw) {
  const Engine& eng = *sw.eng;
  Rational denom{eng.denom()};
  PolicyFacts f;
  f.eu = sw.sum_u / denom;
  f.eu_s0 = sw.sum_u_s0 / denom;
  f.p_obedient = Rational(eng.denom() - sw.mass_disobey_h0, eng.denom());
  f.p_disobey_dist = Rational(sw.mass_disobey_dist, eng.denom());

  BigInt c1_mass = 0;
  bool aligned = true;
  for (long long w = 0; w < eng.worlds(); ++w) {
    const ClassAgg& agg = sw.classes.at(sw.key[w]);
    bool c1 = agg.antecedent && sw.h[w] != RoleMap::request_shutdown_value;
    if (c1) {
      c1_mass += eng.world_num(w);
      if (!f.w_nonvigilant) f.w_nonvigilant = w;
    }
    if (agg.antecedent && sw.s[w] != RoleMap::shutdown_value) {
      aligned = false;
      if (!f.w_misaligned) f.w_misaligned = w;
    }
    if (!sw.s_h0.empty() && sw.s_h0[w] != RoleMap::shutdown_value && !f.w_disobedient)
      f.w_disobedient = w;
    if (sw.h[w] == RoleMap::request_shutdown_value && sw.s[w] != RoleMap::shutdown_value &&
        !f.w_disobedient_dist)
      f.w_disobedient_dist = w;
  }
  f.p_c1 = Rational(c1_mass, eng.denom());
  f.p_s0 = Rational(sw.mass_s0, eng.denom());
  f.beneficial = f.eu >= Rational(0);
  f.cautious = f.eu_s0 >= Rational(0);
  f.obedient = sw.mass_disobey_h0 == 0;
  f.obedient_dist = sw.mass_disobey_dist == 0;
  f.ensures_vigilance = c1_mass == 0;
  f.aligned = aligned;
  f.weakly_outperforms = f.eu >= f.eu_s0;
  f.instructable = f.obedient && f.ensures_vigilance && f.cautious;
  f.weakly_instructable = f.obedient_dist && f.ensures_vigilance && f.cautious;
  f.d2_determines_s = sw.mass_d2_ne_s == 0;
  return f;
}

thread_local Sweep tls_sweep;

}  // namespace

PolicyAnalyzer::PolicyAnalyzer(const Engine& engine, const ShutdownProblem& problem)
    : eng_(&engine), prob_(&problem) {}

PolicyFacts PolicyAnalyzer::analyze(const Policy& policy) {
  run_sweep(tls_sweep, *eng_, *prob_, policy);
  return facts_from_sweep(tls_sweep);
}

VigilanceTrace vigilance_trace(const ShutdownProblem& p, const Policy& policy) {
  Engine eng(p.model());
  Sweep sw;
  run_sweep(sw, eng, p, policy);

  VigilanceTrace trace;
  BigInt c1_mass = 0;
  for (long long w = 0; w < eng.worlds(); ++w) {
    const ClassAgg& agg = sw.classes.at(sw.key[w]);
    VigilanceTraceRow row;
    row.eps = eng.exo_assignment(w);
    row.pa_h = sw.hkey.named(p.model(), sw.key[w]);
    Rational mass{agg.mass};
    row.eu_given_pa = agg.sum_u / mass;
    row.eu_s0_given_pa = agg.sum_u_s0 / mass;
    row.h = sw.h[w];
    row.c = (agg.antecedent && sw.h[w] != RoleMap::request_shutdown_value) ? 1 : 0;
    row.prob = eng.world_prob(w);
    if (row.c == 1) c1_mass += eng.world_num(w);
    trace.rows.push_back(std::move(row));
  }
  trace.p_c0 = Rational(eng.denom() - c1_mass, eng.denom());
  return trace;
}

PropertyVerdict check_property(const ShutdownProblem& p, const Policy& policy, PropertyKind kind) {
  Engine eng(p.model());
  Sweep sw;
  run_sweep(sw, eng, p, policy);
  PolicyFacts f = facts_from_sweep(sw);

  PropertyVerdict v;
  auto add_worlds = [&](auto pred) {
    for (long long w = 0; w < eng.worlds(); ++w)
      if (pred(w)) v.counterexample_worlds.push_back(eng.exo_assignment(w));
  };
  auto non_vigilant = [&](long long w) {
    return sw.classes.at(sw.key[w]).antecedent && sw.h[w] != RoleMap::request_shutdown_value;
  };
  auto misaligned = [&](long long w) {
    return sw.classes.at(sw.key[w]).antecedent && sw.s[w] != RoleMap::shutdown_value;
  };
  auto disobedient = [&](long long w) { return sw.s_h0[w] != RoleMap::shutdown_value; };
  auto disobedient_dist = [&](long long w) {
    return sw.h[w] == RoleMap::request_shutdown_value && sw.s[w] != RoleMap::shutdown_value;
  };

  switch (kind) {
    case PropertyKind::Beneficial:
      v.holds = f.beneficial;
      v.quantities = {{"E[U]", f.eu}};
      break;
    case PropertyKind::Obedient:
      v.holds = f.obedient;
      v.quantities = {{"P(S=0 | do(H=0))", f.p_obedient}};
      if (!v.holds) add_worlds(disobedient);
      break;
    case PropertyKind::ObedientOnDistribution:
      v.holds = f.obedient_dist;
      v.quantities = {{"P(S!=0, H=0)", f.p_disobey_dist}};
      if (!v.holds) add_worlds(disobedient_dist);
      break;
    case PropertyKind::EnsuresVigilance:
      v.holds = f.ensures_vigilance;
      v.quantities = {{"P(C=1)", f.p_c1}};
      if (!v.holds) add_worlds(non_vigilant);
      break;
    case PropertyKind::Cautious:
      v.holds = f.cautious;
      v.quantities = {{"E[U_{S=0}]", f.eu_s0}};
      break;
    case PropertyKind::ShutdownInstructable:
      v.holds = f.instructable;
      v.quantities = {{"P(S=0 | do(H=0))", f.p_obedient},
                      {"P(C=1)", f.p_c1},
                      {"E[U_{S=0}]", f.eu_s0}};
      if (!f.obedient) add_worlds(disobedient);
      if (!f.ensures_vigilance) add_worlds(non_vigilant);
      break;
    case PropertyKind::WeaklyShutdownInstructable:
      v.holds = f.weakly_instructable;
      v.quantities = {{"P(S!=0, H=0)", f.p_disobey_dist},
                      {"P(C=1)", f.p_c1},
                      {"E[U_{S=0}]", f.eu_s0}};
      if (!f.obedient_dist) add_worlds(disobedient_dist);
      if (!f.ensures_vigilance) add_worlds(non_vigilant);
      break;
    case PropertyKind::ShutdownAligned:
      v.holds = f.aligned;
      v.quantities = {{"E[U]", f.eu}, {"E[U_{S=0}]", f.eu_s0}};
      if (!v.holds) add_worlds(misaligned);
      break;
    case PropertyKind::WeaklyOutperformsShutdown:
      v.holds = f.weakly_outperforms;
      v.quantities = {{"E[U]", f.eu}, {"E[U_{S=0}]", f.eu_s0}};
      break;
  }
  return v;
}

PropertyVerdict preserves_vigilance(const ShutdownProblem& p, const Policy& policy,
                                    const InterventionPair& pair) {
  Engine eng(p.model());
  Sweep before;
  run_sweep(before, eng, p, policy, {.do_h0 = false});

  ShutdownProblem applied = apply_pair(p, pair);
  Engine eng_g(applied.model());
  Sweep after;
  run_sweep(after, eng_g, applied, policy, {.do_h0 = false});

  PropertyVerdict v;
  v.holds = true;
  BigInt c1_before = 0, c1_after = 0;
  for (long long w = 0; w < eng.worlds(); ++w) {
    bool cb = !before.vigilant_world(w);
    bool ca = !after.vigilant_world(w);
    if (cb) c1_before += eng.world_num(w);
    if (ca) c1_after += eng.world_num(w);
    if (!cb && ca) {
      v.holds = false;
      v.counterexample_worlds.push_back(eng.exo_assignment(w));
    }
  }
  v.quantities = {{"P(C=1)", Rational(c1_before, eng.denom())},
                  {"P(C=1) after (g^H,g^U)", Rational(c1_after, eng.denom())}};
  return v;
}

PropertyVerdict check_non_obstruction(const ShutdownProblem& p, const Policy& policy,
                                      const std::vector<InterventionPair>& pairs) {
  if (pairs.empty())
    throw Error(Errc::BadParameter, "non-obstruction needs at least one intervention pair");
  PropertyVerdict v;
  v.holds = true;
  for (size_t i = 0; i < pairs.size(); ++i) {
    ShutdownProblem applied = apply_pair(p, pairs[i]);
    Engine eng(applied.model());
    PolicyAnalyzer an(eng, applied);
    PolicyFacts f = an.analyze(policy);
    std::string tag = pairs[i].name.empty() ? "pair " + std::to_string(i) : pairs[i].name;
    v.quantities.emplace_back("E[U] @ " + tag, f.eu);
    v.quantities.emplace_back("E[U_{S=0}] @ " + tag, f.eu_s0);
    if (!f.weakly_outperforms) v.holds = false;
  }
  return v;
}

namespace {

// Union of parent sets, deduplicated, in declaration order; the projection
// maps are filled so table cells can be decomposed per component.
struct ParentUnion {
  std::vector<int> vars;
  std::vector<int> slot_of;  // model var -> position in vars, or -1

  ParentUnion(const ScimModel& m, const std::vector<std::vector<int>>& groups) {
    std::set<int> set;
    for (const auto& g : groups) set.insert(g.begin(), g.end());
    vars.assign(set.begin(), set.end());
    slot_of.assign(m.var_count(), -1);
    for (size_t i = 0; i < vars.size(); ++i) slot_of[vars[i]] = static_cast<int>(i);
  }
};

// Builds a g^U replacement table over (parents..., eps^U). `punish` decides
// per cell from the digit vector; other cells fall through to f^U.
Intervention build_gu(const ScimModel& m, int u_var, const ParentUnion& pu, Code punish_code,
                      const Rational& alpha,
                      const std::function<bool(std::span<const int>)>& punish,
                      const std::string& label) {
  const StructuralFunction& fu = m.function(u_var);
  const ExogenousSpec& exo = m.exo(fu.exo);

  std::vector<int> sizes;
  for (int v : pu.vars) sizes.push_back(m.domain(v).size());
  sizes.push_back(static_cast<int>(exo.values.size()));
  long long cells = 1;
  for (int s : sizes) cells *= s;

  Intervention gu;
  gu.kind = Intervention::Kind::UtilityReplacement;
  gu.target = m.var_name(u_var);
  for (int v : pu.vars) gu.parents.push_back(m.var_name(v));
  gu.extra_utility_codes = {{punish_code, -alpha}};
  gu.label = label;
  gu.table.reserve(cells);

  std::vector<int> digits(sizes.size(), 0);
  for (long long cell = 0; cell < cells; ++cell) {
    if (punish(digits)) {
      gu.table.push_back(punish_code);
    } else {
      long long fcell = 0;
      size_t a = 0;
      for (; a < fu.parents.size(); ++a)
        fcell += fu.strides[a] * digits[pu.slot_of[fu.parents[a]]];
      fcell += fu.strides[a] * digits.back();
      gu.table.push_back(m.domain(u_var).values[fu.table[fcell]]);
    }
    for (int a = static_cast<int>(sizes.size()) - 1; a >= 0; --a) {
      if (++digits[a] < sizes[a]) break;
      digits[a] = 0;
    }
  }
  return gu;
}

Rational max_abs_utility(const ScimModel& m, int u_var) {
  Rational best;
  for (const Rational& r : m.domain(u_var).interp) best = std::max(best, r.abs());
  return best;
}

std::string describe_class(const ScimModel& m, const KeySpec& ks, long long key) {
  auto named = ks.named(m, key);
  if (named.empty()) return "{}";
  std::string out = "{";
  for (const auto& [k, v] : named) {
    if (out.size() > 1) out += ",";
    out += k + "=" + std::to_string(v);
  }
  return out + "}";
}

}  // namespace

WitnessResult construct_vigilance_witness(const ShutdownProblem& p, const Policy& policy,
                                          const Rational& delta) {
  const ScimModel& m = p.model();
  Engine eng(m);
  Sweep sw;
  run_sweep(sw, eng, p, policy, {.do_h0 = false});

  std::set<long long> A;
  for (const auto& [key, agg] : sw.classes)
    if (agg.antecedent) A.insert(key);

  bool vigilant = true;
  for (long long w = 0; w < eng.worlds() && vigilant; ++w)
    if (!sw.vigilant_world(w)) vigilant = false;
  if (vigilant)
    throw Error(Errc::PolicyEnsuresVigilance,
                "P(C=0) = 1; the vigilance witness construction does not apply");

  // Punished mass: worlds whose pa^H is in A and that do not shut down.
  BigInt punished = 0;
  for (long long w = 0; w < eng.worlds(); ++w)
    if (A.count(sw.key[w]) && sw.s[w] != RoleMap::shutdown_value) punished += eng.world_num(w);
  if (punished == 0)
    throw Error(Errc::BadParameter, "internal: empty punishment support in the vigilance witness");
  Rational p_viol(punished, eng.denom());

  ParentUnion pu(m, {m.function(p.u()).parents, m.diagram().parents(p.h()), {p.s()}});
  Code punish_code = *std::min_element(m.domain(p.u()).values.begin(), m.domain(p.u()).values.end()) - 1;
  Rational max_abs = max_abs_utility(m, p.u());
  Rational alpha = (Rational(1) + max_abs) / p_viol;

  const KeySpec& hk = sw.hkey;
  auto punish_pred = [&](std::span<const int> digits) {
    long long key = 0;
    for (size_t i = 0; i < hk.vars.size(); ++i) key = key * hk.sizes[i] + digits[pu.slot_of[hk.vars[i]]];
    Code s_code = m.domain(p.s()).values[digits[pu.slot_of[p.s()]]];
    return A.count(key) > 0 && s_code != RoleMap::shutdown_value;
  };

  for (int attempt = 0; attempt < 128; ++attempt) {
    InterventionPair pair;
    pair.name = "vigilance-witness";
    pair.g_u = build_gu(m, p.u(), pu, punish_code, alpha, punish_pred,
                        "g^U: -alpha when pa^H in A and S!=0, else f^U");

    ShutdownProblem applied = apply_pair(p, pair);
    Engine eng_g(applied.model());
    Sweep sg;
    run_sweep(sg, eng_g, applied, policy, {.do_h0 = false});

    // Strong preservation: C(eps) identical in M and M_{g^U}, every world.
    for (long long w = 0; w < eng.worlds(); ++w)
      if (sw.vigilant_world(w) != sg.vigilant_world(w))
        throw Error(Errc::BadParameter, "internal: strong vigilance preservation failed");

    Rational eu = sg.sum_u / Rational(eng_g.denom());
    Rational eu_s0 = sg.sum_u_s0 / Rational(eng_g.denom());
    if (eu < eu_s0 && eu < delta) {
      WitnessResult res;
      res.pair = std::move(pair);
      res.alpha = alpha;
      res.eu = eu;
      res.eu_s0 = eu_s0;
      res.notes.push_back("punishment probability " + p_viol.str());
      for (long long key : A) res.notes.push_back("A contains pa^H " + describe_class(m, hk, key));
      return res;
    }
    alpha *= Rational(2);
  }
  throw Error(Errc::BadParameter, "internal: vigilance witness alpha search did not converge");
}

WitnessResult construct_obedience_witness(const ShutdownProblem& p, const Policy& policy,
                                          const Rational& delta) {
  const ScimModel& m = p.model();
  Engine eng(m);
  Sweep sw;
  run_sweep(sw, eng, p, policy);

  if (sw.mass_disobey_h0 == 0)
    throw Error(Errc::PolicyObedient,
                "P(S=0 | do(H=0)) = 1; the obedience witness construction does not apply");

  // First pa^H (canonical order) with P(S=0 | do(H=0), pa^H) < 1.
  long long pa_prime = -1;
  for (long long w = 0; w < eng.worlds(); ++w)
    if (sw.s_h0[w] != RoleMap::shutdown_value && (pa_prime < 0 || sw.key[w] < pa_prime))
      pa_prime = sw.key[w];

  const KeySpec& hk = sw.hkey;
  const StructuralFunction& fh = m.function(p.h());
  const ExogenousSpec& h_exo = m.exo(fh.exo);

  auto build_gh = [&](const std::set<long long>& forced) {
    std::vector<int> sizes;
    for (int v : fh.parents) sizes.push_back(m.domain(v).size());
    sizes.push_back(static_cast<int>(h_exo.values.size()));
    long long cells = 1;
    for (int s : sizes) cells *= s;

    Intervention gh;
    gh.kind = Intervention::Kind::HumanReplacement;
    gh.target = m.var_name(p.h());
    for (int v : fh.parents) gh.parents.push_back(m.var_name(v));
    gh.label = "g^H: 0 on " + std::to_string(forced.size()) + " forced pa^H, else f^H";
    gh.table.reserve(cells);

    std::vector<int> digits(sizes.size(), 0);
    std::vector<int> by_var(m.var_count(), -1);
    for (size_t a = 0; a < fh.parents.size(); ++a) by_var[fh.parents[a]] = static_cast<int>(a);
    for (long long cell = 0; cell < cells; ++cell) {
      long long key = 0;
      for (size_t i = 0; i < hk.vars.size(); ++i)
        key = key * hk.sizes[i] + digits[by_var[hk.vars[i]]];
      if (forced.count(key)) {
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
    return gh;
  };

  ParentUnion pu(m, {m.function(p.u()).parents, {p.h()}, {p.s()}});
  Code punish_code = *std::min_element(m.domain(p.u()).values.begin(), m.domain(p.u()).values.end()) - 1;
  Rational max_abs = max_abs_utility(m, p.u());
  auto punish_pred = [&](std::span<const int> digits) {
    Code h_code = m.domain(p.h()).values[digits[pu.slot_of[p.h()]]];
    Code s_code = m.domain(p.s()).values[digits[pu.slot_of[p.s()]]];
    return h_code == RoleMap::request_shutdown_value && s_code != RoleMap::shutdown_value;
  };

  // The printed construction forces H=0 only at pa'^H. When the punishment
  // leaks into an unforced pa^H class (a world there has H=0, S!=0 on
  // distribution), the conditional expectations of that class shift and a
  // vigilant world can turn non-vigilant; extending the forced set to every
  // such class restores preservation.
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::set<long long> forced{pa_prime};
    if (attempt == 1)
      for (long long w = 0; w < eng.worlds(); ++w)
        if (sw.h[w] == RoleMap::request_shutdown_value && sw.s[w] != RoleMap::shutdown_value)
          forced.insert(sw.key[w]);

    Intervention gh = build_gh(forced);
    ScimModel m_gh = intervene(m, gh);
    Engine eng_gh(m_gh);

    // Punished mass under (g^H, g^U) does not depend on alpha; compute it in
    // M_{g^H} to seed the escalation.
    BigInt punished = 0;
    {
      std::vector<int> vals(m_gh.var_count());
      for (long long w = 0; w < eng_gh.worlds(); ++w) {
        eng_gh.eval(w, policy, vals);
        Code hc = m_gh.domain(p.h()).values[vals[p.h()]];
        Code sc = m_gh.domain(p.s()).values[vals[p.s()]];
        if (hc == RoleMap::request_shutdown_value && sc != RoleMap::shutdown_value)
          punished += eng_gh.world_num(w);
      }
    }
    if (punished == 0)
      throw Error(Errc::BadParameter, "internal: empty punishment support in the obedience witness");
    Rational p_viol(punished, eng_gh.denom());
    Rational alpha = (Rational(1) + max_abs) / p_viol;

    for (int round = 0; round < 128; ++round) {
      InterventionPair pair;
      pair.name = "obedience-witness";
      pair.g_h = gh;
      pair.g_u = build_gu(m, p.u(), pu, punish_code, alpha, punish_pred,
                          "g^U: -alpha when H=0 and S!=0, else f^U");

      ShutdownProblem applied = apply_pair(p, pair);
      Engine eng_g(applied.model());
      Sweep sg;
      run_sweep(sg, eng_g, applied, policy, {.do_h0 = false});

      Rational eu = sg.sum_u / Rational(eng_g.denom());
      Rational eu_s0 = sg.sum_u_s0 / Rational(eng_g.denom());
      if (!(eu < eu_s0 && eu < delta)) {
        alpha *= Rational(2);
        continue;
      }

      bool preserved = true;
      for (long long w = 0; w < eng.worlds() && preserved; ++w)
        if (sw.vigilant_world(w) && !sg.vigilant_world(w)) preserved = false;
      if (!preserved) break;  // retry with the extended forced set

      WitnessResult res;
      res.pair = std::move(pair);
      res.alpha = alpha;
      res.eu = eu;
      res.eu_s0 = eu_s0;
      res.notes.push_back("pa'^H = " + describe_class(m, hk, pa_prime));
      res.notes.push_back("forced classes: " + std::to_string(forced.size()));
      res.notes.push_back("punishment probability " + p_viol.str());
      if (attempt == 1) res.notes.push_back("forced set extended to on-distribution disobedient classes");
      return res;
    }
  }
  throw Error(Errc::BadParameter, "internal: obedience witness construction did not converge");
}

bool thm57_uncertainty_condition(const ShutdownProblem& p, UncertaintyReading reading,
                                 const Policy* outer_policy, std::string* note) {
  const ScimModel& m = p.model();
  Engine eng(m);

  std::map<long long, bool> outer_antecedent;
  if (reading == UncertaintyReading::OuterPolicy) {
    if (outer_policy == nullptr)
      throw Error(Errc::BadParameter, "the OuterPolicy reading needs the checked policy");
    Sweep outer;
    run_sweep(outer, eng, p, *outer_policy, {.do_h0 = false});
    for (const auto& [key, agg] : outer.classes) outer_antecedent[key] = agg.antecedent;
  }

  PolicySpace space(m);
  if (!space.within(policy_cap()))
    throw Error(Errc::PolicySpaceExceeded, "uncertainty condition needs " + space.count().str() +
                                               " policies, cap is " + std::to_string(policy_cap()));

  Sweep sq;
  Policy q = space.first();
  BigInt index = 0;
  do {
    run_sweep(sq, eng, p, q, {.do_h0 = false, .d2_classes = true});
    bool antecedent_fires = false;
    for (long long w = 0; w < eng.worlds() && !antecedent_fires; ++w)
      if (!sq.vigilant_world(w) || sq.h[w] == RoleMap::request_shutdown_value)
        antecedent_fires = true;
    if (!antecedent_fires) {
      ++index;
      continue;
    }
    std::map<long long, bool> d2_has_preferred;
    for (long long w = 0; w < eng.worlds(); ++w) {
      bool preferred;
      if (reading == UncertaintyReading::QuantifiedPolicy) {
        preferred = sq.classes.at(sq.key[w]).antecedent;
      } else {
        auto it = outer_antecedent.find(sq.key[w]);
        preferred = it != outer_antecedent.end() && it->second;
      }
      auto [slot, inserted] = d2_has_preferred.try_emplace(sq.key_d2[w], preferred);
      if (!inserted) slot->second = slot->second || preferred;
    }
    for (const auto& [key, has] : d2_has_preferred) {
      if (!has) {
        if (note)
          *note = "policy #" + index.str() + " gives pa^{D2} " + describe_class(m, sq.d2key, key) +
                  " no chance that shutdown is preferred";
        return false;
      }
    }
    ++index;
  } while (space.next(q));
  return true;
}

AlignmentConditionsReport check_alignment_to_weak_conditions(const ShutdownProblem& p,
                                                             const Policy& policy,
                                                             UncertaintyReading reading) {
  const ScimModel& m = p.model();
  Engine eng(m);
  Sweep outer;
  run_sweep(outer, eng, p, policy, {.do_h0 = true, .d2_classes = true});
  PolicyFacts f = facts_from_sweep(outer);

  AlignmentConditionsReport rep;
  rep.p_s0 = f.p_s0;
  rep.no_indiscriminate_shutdown = !(rep.p_s0 == Rational(1));
  rep.p_d2_eq_s = Rational(eng.denom() - outer.mass_d2_ne_s, eng.denom());
  rep.d2_determines_shutdown = f.d2_determines_s;
  rep.eu_s0 = f.eu_s0;
  rep.cautious = f.cautious;
  rep.aligned = f.aligned;
  rep.weakly_instructable = f.weakly_instructable;
  rep.policies_checked = PolicySpace(m).count();
  rep.uncertainty = thm57_uncertainty_condition(p, reading, &policy, &rep.uncertainty_note);

  bool premises = rep.no_indiscriminate_shutdown && rep.d2_determines_shutdown && rep.uncertainty &&
                  rep.cautious;
  rep.conclusion_consistent = !(rep.aligned && premises) || rep.weakly_instructable;
  return rep;
}

CirlConditionsReport check_cirl_conditions(const ShutdownProblem& p, const Policy& policy,
                                           const std::string& latent) {
  const ScimModel& m = p.model();
  int l_var = m.var_index(latent);
  if (m.is_decision(l_var))
    throw Error(Errc::BadParameter, "latent variable '" + latent + "' cannot be a decision");

  Engine eng(m);
  Sweep sw;
  run_sweep(sw, eng, p, policy,
            {.do_h0 = false, .d2_classes = true, .do_d20 = true, .latent = l_var});
  PolicyFacts f = facts_from_sweep(sw);

  CirlConditionsReport rep;
  rep.aligned = f.aligned;

  std::map<long long, Code> l_seen;
  rep.knows_latent = true;
  for (long long w = 0; w < eng.worlds(); ++w) {
    auto [it, inserted] = l_seen.try_emplace(sw.key_d2[w], sw.l_code[w]);
    if (!inserted && it->second != sw.l_code[w]) rep.knows_latent = false;
  }

  rep.controls_shutdown = true;
  for (long long w = 0; w < eng.worlds(); ++w)
    if (sw.d2[w] != sw.s[w]) rep.controls_shutdown = false;

  const Domain& udom = m.domain(p.u());
  rep.no_spurious_request = true;
  for (long long w = 0; w < eng.worlds(); ++w) {
    bool continuing_better = udom.value_of(sw.u_idx[w]) > udom.value_of(sw.u_d20_idx[w]);
    if (sw.h[w] == RoleMap::request_shutdown_value && continuing_better)
      rep.no_spurious_request = false;
  }

  const auto& pa_h = m.diagram().parents(p.h());
  const auto& pa_d2 = m.diagram().parents(p.d2());
  rep.observations_covered = true;
  for (int v : pa_h) {
    if (v == l_var) continue;
    if (std::find(pa_d2.begin(), pa_d2.end(), v) == pa_d2.end()) rep.observations_covered = false;
  }

  PolicySpace space(m);
  if (space.within(policy_cap())) {
    Rational best;
    bool any = false;
    Sweep sq;
    Policy q = space.first();
    do {
      run_sweep(sq, eng, p, q, {.do_h0 = false});
      if (!any || sq.sum_u > best) {
        best = sq.sum_u;
        any = true;
      }
    } while (space.next(q));
    rep.policy_u_optimal = (sw.sum_u == best);
  }

  bool premises = rep.knows_latent && rep.controls_shutdown && rep.no_spurious_request &&
                  rep.observations_covered && rep.policy_u_optimal.value_or(false);
  rep.conclusion_consistent = !premises || rep.aligned;
  return rep;
}

}  // namespace scim
