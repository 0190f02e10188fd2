#include "scimcheck/solvers.hpp"

#include <algorithm>

namespace scim {

Objective Objective::utility(std::string var) {
  Objective o;
  o.tag_ = Tag::Utility;
  o.var_ = std::move(var);
  return o;
}

Objective Objective::expression(Expr e) {
  Objective o;
  o.tag_ = Tag::Expression;
  o.expr_ = std::move(e);
  return o;
}

Objective Objective::penalty(Rational k) {
  Objective o;
  o.tag_ = Tag::Penalty;
  o.k_ = std::move(k);
  return o;
}

std::string Objective::str() const {
  switch (tag_) {
    case Tag::Utility: return var_;
    case Tag::Expression: return expr_->str();
    case Tag::Penalty: return "-" + k_.str() + "*ind(S!=0)";
  }
  return "?";
}

Objective penalty_utility(const Rational& k) {
  if (!(k > Rational(0))) throw Error(Errc::NonPositiveK, "penalty needs k > 0, got " + k.str());
  return Objective::penalty(k);
}

namespace {

Objective::Node compile_expr(const ScimModel& m, const Expr& e) {
  Objective::Node n;
  n.op = e.op;
  n.lit = e.lit;
  if (e.op == Expr::Op::Var) {
    n.var = m.var_index(e.var);
    n.var_is_utility = m.kind(n.var) == VarKind::Utility;
  }
  for (const Expr& a : e.args) n.args.push_back(compile_expr(m, a));
  return n;
}

Rational eval_node(const Objective::Node& n, const ScimModel& m, std::span<const int> values) {
  using Op = Expr::Op;
  auto as_int = [](const Rational& r) -> BigInt {
    if (!r.is_integer())
      throw Error(Errc::PartialFunction, "objective applies an integer operator to " + r.str());
    return r.num();
  };
  auto as_bool = [&](const Rational& r) -> BigInt {
    BigInt v = as_int(r);
    if (v != 0 && v != 1)
      throw Error(Errc::PartialFunction, "objective boolean operator on non 0-1 value");
    return v;
  };
  switch (n.op) {
    case Op::Lit: return n.lit;
    case Op::Var:
      return n.var_is_utility ? m.domain(n.var).value_of(values[n.var])
                              : Rational(static_cast<long long>(m.domain(n.var).values[values[n.var]]));
    case Op::Neg: return -eval_node(n.args[0], m, values);
    case Op::Add: return eval_node(n.args[0], m, values) + eval_node(n.args[1], m, values);
    case Op::Sub: return eval_node(n.args[0], m, values) - eval_node(n.args[1], m, values);
    case Op::Mul: return eval_node(n.args[0], m, values) * eval_node(n.args[1], m, values);
    case Op::Mod: {
      BigInt a = as_int(eval_node(n.args[0], m, values));
      BigInt b = as_int(eval_node(n.args[1], m, values));
      if (b == 0) throw Error(Errc::PartialFunction, "objective mod by zero");
      BigInt r = a % b;
      if (r < 0) r += (b < 0 ? -b : b);
      return Rational(r);
    }
    case Op::And:
      return Rational(as_bool(eval_node(n.args[0], m, values)) &
                      as_bool(eval_node(n.args[1], m, values)));
    case Op::Or:
      return Rational(as_bool(eval_node(n.args[0], m, values)) |
                      as_bool(eval_node(n.args[1], m, values)));
    case Op::Xor:
      return Rational(as_bool(eval_node(n.args[0], m, values)) ^
                      as_bool(eval_node(n.args[1], m, values)));
    case Op::Not: return Rational(1 - as_bool(eval_node(n.args[0], m, values)));
    case Op::IndEq:
      return Rational(eval_node(n.args[0], m, values) == eval_node(n.args[1], m, values) ? 1 : 0);
    case Op::IndLt:
      return Rational(eval_node(n.args[0], m, values) < eval_node(n.args[1], m, values) ? 1 : 0);
    case Op::If:
      return as_bool(eval_node(n.args[0], m, values)) == 1 ? eval_node(n.args[1], m, values)
                                                           : eval_node(n.args[2], m, values);
  }
  throw Error(Errc::ParseError, "corrupt objective node");
}

}  // namespace

Objective::Compiled Objective::compile(const ScimModel& m, const RoleMap& roles) const {
  Compiled c;
  switch (tag_) {
    case Tag::Utility: {
      int v = m.var_index(var_);
      if (m.kind(v) != VarKind::Utility)
        throw Error(Errc::BadParameter, "objective variable '" + var_ + "' is not utility-valued");
      c.fast_utility_var_ = v;
      break;
    }
    case Tag::Penalty:
      c.penalty_s_ = m.var_index(roles.s);
      c.penalty_k_ = k_;
      break;
    case Tag::Expression:
      c.root_ = compile_expr(m, *expr_);
      break;
  }
  return c;
}

Rational Objective::Compiled::eval(const ScimModel& m, std::span<const int> values) const {
  if (fast_utility_var_ >= 0) return m.domain(fast_utility_var_).value_of(values[fast_utility_var_]);
  if (penalty_s_ >= 0) {
    Code s = m.domain(penalty_s_).values[values[penalty_s_]];
    return s != RoleMap::shutdown_value ? -penalty_k_ : Rational(0);
  }
  return eval_node(root_, m, values);
}

PolicySpace enumerate_policies(const ScimModel& m) {
  PolicySpace space(m);
  if (!space.within(policy_cap()))
    throw Error(Errc::PolicySpaceExceeded, "policy space has " + space.count().str() +
                                               " members, cap is " + std::to_string(policy_cap()));
  return space;
}

namespace {

struct ArgmaxSet {
  std::vector<Policy> best;
  Rational score;
  bool any = false;

  void offer(const Policy& p, const Rational& s) {
    if (!any || s > score) {
      best.clear();
      best.push_back(p);
      score = s;
      any = true;
    } else if (s == score) {
      best.push_back(p);
    }
  }
};

Rational expected_objective(const Engine& eng, const ShutdownProblem& p, const Policy& policy,
                            const Objective::Compiled& obj, int forced_var = -1,
                            int forced_idx = -1) {
  const ScimModel& m = eng.model();
  std::vector<int> vals(m.var_count());
  Rational sum;
  for (long long w = 0; w < eng.worlds(); ++w) {
    eng.eval(w, policy, vals, forced_var, forced_idx);
    sum += Rational(eng.world_num(w)) * obj.eval(m, vals);
  }
  return sum / Rational(eng.denom());
}

// Per-decision rule odometer for the two-decision algorithms.
struct RuleSpace {
  int radix = 0;
  long long cells = 0;
  long long count = 0;

  RuleSpace(const ScimModel& m, int d) {
    radix = m.domain(d).size();
    cells = 1;
    for (int c : m.decision(d).context) cells *= m.domain(c).size();
    count = 1;
    for (long long i = 0; i < cells; ++i) {
      count *= radix;
      if (count > policy_cap()) break;  // caught by the joint cap check
    }
  }

  std::vector<int> rule_at(long long index) const {
    std::vector<int> rule(cells, 0);
    for (long long i = cells - 1; i >= 0; --i) {
      rule[i] = static_cast<int>(index % radix);
      index /= radix;
    }
    return rule;
  }

  long long index_of(const std::vector<int>& rule) const {
    long long idx = 0;
    for (int digit : rule) idx = idx * radix + digit;
    return idx;
  }
};

void check_joint_cap(const ScimModel& m) {
  PolicySpace space(m);
  if (!space.within(policy_cap()))
    throw Error(Errc::PolicySpaceExceeded, "policy space has " + space.count().str() +
                                               " members, cap is " + std::to_string(policy_cap()));
}

}  // namespace

SolveResult solve_expected_utility(const ShutdownProblem& p, const Objective& objective) {
  check_joint_cap(p.model());
  Engine eng(p.model());
  Objective::Compiled obj = objective.compile(p.model(), p.roles());

  PolicySpace space(p.model());
  ArgmaxSet arg;
  Policy pol = space.first();
  do {
    arg.offer(pol, expected_objective(eng, p, pol, obj));
  } while (space.next(pol));

  SolveResult res;
  res.argmax = std::move(arg.best);
  res.score = arg.score;
  res.policies_considered = space.count();
  return res;
}

// Shared per-policy statistics for the indifference scan.
namespace {
struct IndiffCell {
  Rational inner;     // E[H rn + (1-H) rs]
  Rational rn_h1;     // sum num * rn over H=1 worlds
  Rational rs_h0;     // sum num * rs over H=0 worlds
  BigInt mass_h1 = 0;
  BigInt mass_h0 = 0;
};

struct IndiffScan {
  RuleSpace s1, s2;
  int slot1, slot2;  // positions of d1/d2 in model.decisions()
  std::vector<IndiffCell> cells;  // [i1 * s2.count + i2]
  BigInt denom;

  IndiffScan(const Engine& eng, const ShutdownProblem& p, const Objective::Compiled& rn,
             const Objective::Compiled& rs)
      : s1(p.model(), p.d1()), s2(p.model(), p.d2()) {
    const ScimModel& m = p.model();
    check_joint_cap(m);
    slot1 = slot2 = -1;
    for (size_t k = 0; k < m.decisions().size(); ++k) {
      if (m.decisions()[k] == p.d1()) slot1 = static_cast<int>(k);
      if (m.decisions()[k] == p.d2()) slot2 = static_cast<int>(k);
    }
    denom = eng.denom();
    cells.resize(static_cast<size_t>(s1.count) * s2.count);

    std::vector<int> vals(m.var_count());
    Policy pol;
    pol.rules.resize(2);
    for (long long i1 = 0; i1 < s1.count; ++i1) {
      pol.rules[slot1] = s1.rule_at(i1);
      for (long long i2 = 0; i2 < s2.count; ++i2) {
        pol.rules[slot2] = s2.rule_at(i2);
        IndiffCell& cell = cells[static_cast<size_t>(i1) * s2.count + i2];
        for (long long w = 0; w < eng.worlds(); ++w) {
          eng.eval(w, pol, vals);
          Code h = m.domain(p.h()).values[vals[p.h()]];
          Rational num{eng.world_num(w)};
          Rational rn_v = rn.eval(m, vals);
          Rational rs_v = rs.eval(m, vals);
          Rational hw{static_cast<long long>(h)};
          cell.inner += num * (hw * rn_v + (Rational(1) - hw) * rs_v);
          if (h == 1) {
            cell.mass_h1 += eng.world_num(w);
            cell.rn_h1 += num * rn_v;
          }
          if (h == 0) {
            cell.mass_h0 += eng.world_num(w);
            cell.rs_h0 += num * rs_v;
          }
        }
        if (cell.mass_h1 == 0 || cell.mass_h0 == 0)
          throw Error(Errc::DegenerateInstruction,
                      "some policy gives one instruction probability zero");
      }
    }
  }

  const IndiffCell& at(long long i1, long long i2) const {
    return cells[static_cast<size_t>(i1) * s2.count + i2];
  }
};
}  // namespace

SolveResult solve_utility_indifference(const ShutdownProblem& p, const Objective& rn,
                                       const Objective& rs) {
  const ScimModel& m = p.model();
  Engine eng(m);
  IndiffScan scan(eng, p, rn.compile(m, p.roles()), rs.compile(m, p.roles()));

  SolveResult res;
  res.policies_considered = BigInt(scan.s1.count) * scan.s2.count;

  // Inner stage: g(pi1) and the compensatory f(pi1).
  std::vector<long long> g(scan.s1.count);
  std::vector<Rational> f(scan.s1.count);
  for (long long i1 = 0; i1 < scan.s1.count; ++i1) {
    long long best = 0;
    int ties = 1;
    for (long long i2 = 1; i2 < scan.s2.count; ++i2) {
      const Rational& cand = scan.at(i1, i2).inner;
      const Rational& incumbent = scan.at(i1, best).inner;
      if (cand > incumbent) {
        best = i2;
        ties = 1;
      } else if (cand == incumbent) {
        ++ties;
      }
    }
    g[i1] = best;
    if (ties > 1)
      res.notes.push_back("g(pi1 #" + std::to_string(i1) + ") tie over " + std::to_string(ties) +
                          " rules, canonical first kept");
    const IndiffCell& gc = scan.at(i1, best);
    f[i1] = gc.rn_h1 / Rational(gc.mass_h1) - gc.rs_h0 / Rational(gc.mass_h0);
  }

  // Outer stage over every (pi1, pi2), canonical order.
  ArgmaxSet arg;
  Policy pol;
  pol.rules.resize(2);
  Rational denom{scan.denom};
  PolicySpace space(m);
  Policy joint = space.first();
  do {
    long long i1 = scan.s1.index_of(joint.rules[scan.slot1]);
    long long i2 = scan.s2.index_of(joint.rules[scan.slot2]);
    const IndiffCell& cell = scan.at(i1, i2);
    Rational score = cell.inner / denom + Rational(cell.mass_h0) / denom * f[i1];
    arg.offer(joint, score);
  } while (space.next(joint));

  res.argmax = std::move(arg.best);
  res.score = arg.score;
  return res;
}

SolveResult solve_causal_indifference(const ShutdownProblem& p, const Objective& rn,
                                      const Objective& rs) {
  const ScimModel& m = p.model();
  check_joint_cap(m);
  Engine eng(m);
  Objective::Compiled rn_c = rn.compile(m, p.roles());
  Objective::Compiled rs_c = rs.compile(m, p.roles());

  int h1 = m.domain(p.h()).index_of(1);
  int h0 = m.domain(p.h()).index_of(0);
  if (h1 < 0 || h0 < 0)
    throw Error(Errc::BadParameter, "causal indifference needs codes 0 and 1 in the domain of H");

  PolicySpace space(m);
  ArgmaxSet arg;
  Policy pol = space.first();
  do {
    Rational score = expected_objective(eng, p, pol, rn_c, p.h(), h1) +
                     expected_objective(eng, p, pol, rs_c, p.h(), h0);
    arg.offer(pol, score);
  } while (space.next(pol));

  SolveResult res;
  res.argmax = std::move(arg.best);
  res.score = arg.score;
  res.policies_considered = space.count();
  return res;
}

SolveResult solve_constrained(const ShutdownProblem& p, const Objective& r) {
  const ScimModel& m = p.model();
  check_joint_cap(m);
  Engine eng(m);
  Objective::Compiled obj = r.compile(m, p.roles());
  PolicyAnalyzer analyzer(eng, p);

  PolicySpace space(m);
  ArgmaxSet arg;
  BigInt feasible = 0;
  Policy pol = space.first();
  do {
    PolicyFacts f = analyzer.analyze(pol);
    if (!(f.ensures_vigilance && f.obedient && f.cautious)) continue;
    ++feasible;
    arg.offer(pol, expected_objective(eng, p, pol, obj));
  } while (space.next(pol));

  if (feasible == 0)
    throw Error(Errc::Infeasible, "no policy is obedient, vigilance-ensuring and cautious");

  SolveResult res;
  res.argmax = std::move(arg.best);
  res.score = arg.score;
  res.policies_considered = space.count();
  res.notes.push_back("feasible policies: " + feasible.str());
  return res;
}

KBound k_bound_utility_indifference(const ShutdownProblem& p, const Objective& rn) {
  const ScimModel& m = p.model();
  check_joint_cap(m);
  Engine eng(m);
  Objective::Compiled rn_c = rn.compile(m, p.roles());

  Rational zeta;
  std::optional<Rational> min_viol;
  std::vector<int> vals(m.var_count());

  PolicySpace space(m);
  Policy pol = space.first();
  do {
    Rational rn_h1;
    BigInt mass_h1 = 0, viol = 0;
    for (long long w = 0; w < eng.worlds(); ++w) {
      eng.eval(w, pol, vals);
      Code h = m.domain(p.h()).values[vals[p.h()]];
      Code s = m.domain(p.s()).values[vals[p.s()]];
      if (h == 1) {
        mass_h1 += eng.world_num(w);
        rn_h1 += Rational(eng.world_num(w)) * rn_c.eval(m, vals);
      }
      if (h == RoleMap::request_shutdown_value && s != RoleMap::shutdown_value)
        viol += eng.world_num(w);
    }
    if (mass_h1 == 0)
      throw Error(Errc::DegenerateInstruction, "a policy gives P(H=1) = 0; E[rn | H=1] undefined");
    zeta = std::max(zeta, (rn_h1 / Rational(mass_h1)).abs());
    if (viol > 0) {
      Rational pv(viol, eng.denom());
      if (!min_viol || pv < *min_viol) min_viol = pv;
    }
  } while (space.next(pol));

  if (!min_viol)
    throw Error(Errc::NoDisobedientPolicy,
                "every policy is obedient on distribution; the bound is vacuous");

  KBound kb;
  kb.zeta_or_eta = zeta;
  kb.min_violation = *min_viol;
  kb.bound = Rational(2) * zeta / *min_viol;
  kb.k = kb.bound + Rational(1);
  return kb;
}

KBound k_bound_causal_indifference(const ShutdownProblem& p, const Objective& rn,
                                   const Rational& k_prime) {
  const ScimModel& m = p.model();
  check_joint_cap(m);
  Engine eng(m);
  Objective::Compiled rn_c = rn.compile(m, p.roles());

  int h1 = m.domain(p.h()).index_of(1);
  int h0 = m.domain(p.h()).index_of(0);
  if (h1 < 0 || h0 < 0)
    throw Error(Errc::BadParameter, "the k bound needs codes 0 and 1 in the domain of H");

  std::optional<Rational> max_rn;
  std::optional<Rational> min_viol;
  std::vector<int> vals(m.var_count());

  PolicySpace space(m);
  Policy pol = space.first();
  do {
    Rational rn_sum;
    BigInt viol = 0;
    for (long long w = 0; w < eng.worlds(); ++w) {
      eng.eval(w, pol, vals, p.h(), h1);
      rn_sum += Rational(eng.world_num(w)) * rn_c.eval(m, vals);
      eng.eval(w, pol, vals, p.h(), h0);
      Code s = m.domain(p.s()).values[vals[p.s()]];
      if (s != RoleMap::shutdown_value) viol += eng.world_num(w);
    }
    Rational e = rn_sum / Rational(eng.denom());
    if (!max_rn || e > *max_rn) max_rn = e;
    if (viol > 0) {
      Rational pv(viol, eng.denom());
      if (!min_viol || pv < *min_viol) min_viol = pv;
    }
  } while (space.next(pol));

  if (!min_viol)
    throw Error(Errc::NoDisobedientPolicy, "every policy is obedient; the bound is vacuous");

  KBound kb;
  kb.zeta_or_eta = max_rn->abs();
  kb.min_violation = *min_viol;
  kb.bound = std::max(Rational(2) * kb.zeta_or_eta, Rational(1)) / *min_viol;
  kb.k = std::max(kb.bound, k_prime) + Rational(1);
  return kb;
}

IndifferencePremises check_utility_indifference_premises(const ShutdownProblem& p,
                                                         const Objective& rn) {
  const ScimModel& m = p.model();
  Engine eng(m);
  IndifferencePremises prem;

  RuleSpace s1(m, p.d1()), s2(m, p.d2());
  check_joint_cap(m);
  int slot1 = -1, slot2 = -1;
  for (size_t k = 0; k < m.decisions().size(); ++k) {
    if (m.decisions()[k] == p.d1()) slot1 = static_cast<int>(k);
    if (m.decisions()[k] == p.d2()) slot2 = static_cast<int>(k);
  }

  Objective::Compiled rn_c = rn.compile(m, p.roles());
  PolicyAnalyzer analyzer(eng, p);
  std::vector<int> vals(m.var_count());

  struct Entry {
    Rational rn_h1;
    bool defined = false;
    bool vigilant = false;
    bool obedient_dist = false;
    bool cautious = false;
  };
  std::vector<Entry> grid(static_cast<size_t>(s1.count) * s2.count);

  prem.full_support = true;
  prem.caution_free = true;
  Policy pol;
  pol.rules.resize(2);
  for (long long i1 = 0; i1 < s1.count; ++i1) {
    pol.rules[slot1] = s1.rule_at(i1);
    for (long long i2 = 0; i2 < s2.count; ++i2) {
      pol.rules[slot2] = s2.rule_at(i2);
      Entry& entry = grid[static_cast<size_t>(i1) * s2.count + i2];

      Rational rn_sum;
      BigInt mass_h1 = 0, mass_h0 = 0;
      for (long long w = 0; w < eng.worlds(); ++w) {
        eng.eval(w, pol, vals);
        Code h = m.domain(p.h()).values[vals[p.h()]];
        if (h == 1) {
          mass_h1 += eng.world_num(w);
          rn_sum += Rational(eng.world_num(w)) * rn_c.eval(m, vals);
        }
        if (h == 0) mass_h0 += eng.world_num(w);
      }
      if (mass_h1 == 0 || mass_h0 == 0) {
        prem.full_support = false;
      } else {
        entry.rn_h1 = rn_sum / Rational(mass_h1);
        entry.defined = true;
      }

      PolicyFacts f = analyzer.analyze(pol);
      entry.vigilant = f.ensures_vigilance;
      entry.obedient_dist = f.obedient_dist;
      entry.cautious = f.cautious;
      if (!f.cautious) prem.caution_free = false;
    }
  }

  if (!prem.full_support) return prem;  // conditional optima are undefined

  prem.optima_vigilant = true;
  prem.obedient_completions = true;
  for (long long i2 = 0; i2 < s2.count; ++i2) {
    Rational best;
    bool any = false;
    for (long long i1 = 0; i1 < s1.count; ++i1) {
      const Rational& v = grid[static_cast<size_t>(i1) * s2.count + i2].rn_h1;
      if (!any || v > best) {
        best = v;
        any = true;
      }
    }
    for (long long i1 = 0; i1 < s1.count; ++i1) {
      if (!(grid[static_cast<size_t>(i1) * s2.count + i2].rn_h1 == best)) continue;
      if (!grid[static_cast<size_t>(i1) * s2.count + i2].vigilant) prem.optima_vigilant = false;
      bool completion = false;
      for (long long j2 = 0; j2 < s2.count && !completion; ++j2)
        if (grid[static_cast<size_t>(i1) * s2.count + j2].obedient_dist) completion = true;
      if (!completion) prem.obedient_completions = false;
    }
  }
  return prem;
}

CausalPremises check_causal_indifference_premises(const ShutdownProblem& p, const Objective& rn,
                                                  const Rational& k) {
  CausalPremises prem;
  prem.k_used = k;

  Engine eng(p.model());
  PolicyAnalyzer analyzer(eng, p);
  PolicySpace space(p.model());
  if (!space.within(policy_cap()))
    throw Error(Errc::PolicySpaceExceeded, "premise check needs the full policy space");

  Policy pol = space.first();
  do {
    if (analyzer.analyze(pol).obedient) {
      prem.exists_obedient = true;
      break;
    }
  } while (space.next(pol));

  SolveResult at_k = solve_causal_indifference(p, rn, penalty_utility(k));
  prem.optima_vigilant_cautious = true;
  for (const Policy& q : at_k.argmax) {
    PolicyFacts f = analyzer.analyze(q);
    if (!(f.ensures_vigilance && f.cautious)) prem.optima_vigilant_cautious = false;
  }
  return prem;
}

}  // namespace scim
