#include "scimcheck/model.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace scim {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::CyclicModel: return "CyclicModel";
    case Errc::PartialFunction: return "PartialFunction";
    case Errc::BadDistribution: return "BadDistribution";
    case Errc::UnknownVariable: return "UnknownVariable";
    case Errc::DuplicateVariable: return "DuplicateVariable";
    case Errc::MissingPath: return "MissingPath";
    case Errc::WrongKind: return "WrongKind";
    case Errc::RolesNotDistinct: return "RolesNotDistinct";
    case Errc::WorldLimitExceeded: return "WorldLimitExceeded";
    case Errc::ZeroProbabilityCondition: return "ZeroProbabilityCondition";
    case Errc::WouldCreateCycle: return "WouldCreateCycle";
    case Errc::DescendantParent: return "DescendantParent";
    case Errc::InvalidTarget: return "InvalidTarget";
    case Errc::PolicyEnsuresVigilance: return "PolicyEnsuresVigilance";
    case Errc::PolicyObedient: return "PolicyObedient";
    case Errc::PolicySpaceExceeded: return "PolicySpaceExceeded";
    case Errc::DegenerateInstruction: return "DegenerateInstruction";
    case Errc::NoDisobedientPolicy: return "NoDisobedientPolicy";
    case Errc::NonPositiveK: return "NonPositiveK";
    case Errc::Infeasible: return "Infeasible";
    case Errc::GenerationFailed: return "GenerationFailed";
    case Errc::BadParameter: return "BadParameter";
    case Errc::ParseError: return "ParseError";
    case Errc::RolesRequired: return "RolesRequired";
  }
  return "Error";
}

const char* kind_name(VarKind k) {
  switch (k) {
    case VarKind::Structure: return "structure";
    case VarKind::Decision: return "decision";
    case VarKind::Utility: return "utility";
  }
  return "?";
}

int Domain::index_of(Code c) const {
  for (size_t i = 0; i < values.size(); ++i)
    if (values[i] == c) return static_cast<int>(i);
  return -1;
}

std::vector<int> DiagramView::family(int v) const {
  std::vector<int> fam = parents_[v];
  fam.push_back(v);
  std::sort(fam.begin(), fam.end());
  return fam;
}

int ScimModel::var_index(const std::string& name) const {
  int v = find_var(name);
  if (v < 0) throw Error(Errc::UnknownVariable, "no endogenous variable '" + name + "'");
  return v;
}

int ScimModel::find_var(const std::string& name) const {
  for (int i = 0; i < var_count(); ++i)
    if (vars_[i].name == name) return i;
  return -1;
}

int ScimModel::exo_index(const std::string& name) const {
  for (int i = 0; i < exo_count(); ++i)
    if (exo_[i].name == name) return i;
  throw Error(Errc::UnknownVariable, "no exogenous variable '" + name + "'");
}

const StructuralFunction& ScimModel::function(int v) const {
  if (func_of_[v] < 0)
    throw Error(Errc::UnknownVariable, "variable '" + vars_[v].name + "' has no structural function");
  return funcs_[func_of_[v]];
}

const DecisionSpec& ScimModel::decision(int v) const {
  if (decision_of_[v] < 0)
    throw Error(Errc::UnknownVariable, "variable '" + vars_[v].name + "' is not a decision");
  return decision_specs_[decision_of_[v]];
}

std::optional<int> ScimModel::decision_override(int v) const { return override_[v]; }

BigInt ScimModel::world_count() const {
  BigInt n = 1;
  for (const auto& e : exo_) n *= static_cast<long long>(e.support.size());
  return n;
}

namespace {

// Flat cell index layout shared by tables and decision rules: the axes run in
// declared order and the last axis moves fastest.
std::vector<long long> make_strides(const std::vector<int>& sizes) {
  std::vector<long long> strides(sizes.size());
  long long s = 1;
  for (int i = static_cast<int>(sizes.size()) - 1; i >= 0; --i) {
    strides[i] = s;
    s *= sizes[i];
  }
  return strides;
}

}  // namespace

ScimModel ScimModel::build(const RawModelSpec& spec) {
  ScimModel m;
  m.name_ = spec.name;

  std::set<std::string> names;
  auto claim_name = [&](const std::string& n, SourcePos pos) {
    if (n.empty()) throw Error(Errc::BadParameter, "empty variable name", pos);
    if (!names.insert(n).second)
      throw Error(Errc::DuplicateVariable, "name '" + n + "' declared twice", pos);
  };

  for (const auto& rv : spec.variables) {
    claim_name(rv.name, rv.pos);
    Var v;
    v.name = rv.name;
    v.kind = rv.kind;
    if (rv.domain.empty())
      throw Error(Errc::BadParameter, "variable '" + rv.name + "' has an empty domain", rv.pos);
    v.domain.values = rv.domain;
    std::set<Code> seen;
    for (Code c : rv.domain)
      if (!seen.insert(c).second)
        throw Error(Errc::DuplicateVariable,
                    "duplicate code " + std::to_string(c) + " in domain of '" + rv.name + "'",
                    rv.pos);
    if (rv.kind == VarKind::Utility) {
      // Unmapped codes read as themselves; explicit entries override.
      v.domain.interp.reserve(rv.domain.size());
      for (Code c : rv.domain) v.domain.interp.push_back(Rational(static_cast<long long>(c)));
      for (const auto& [code, value] : rv.utility) {
        int idx = v.domain.index_of(code);
        if (idx < 0)
          throw Error(Errc::BadParameter,
                      "utility map of '" + rv.name + "' references code " + std::to_string(code) +
                          " outside its domain",
                      rv.pos);
        v.domain.interp[idx] = value;
      }
    } else if (!rv.utility.empty()) {
      throw Error(Errc::BadParameter,
                  "variable '" + rv.name + "' is not a utility variable but has a utility map",
                  rv.pos);
    }
    m.vars_.push_back(std::move(v));
  }

  int n = m.var_count();
  m.func_of_.assign(n, -1);
  m.decision_of_.assign(n, -1);
  m.exo_of_.assign(n, -1);
  m.override_.assign(n, std::nullopt);

  // Decisions first: functions are rejected for them below.
  for (const auto& rd : spec.decisions) {
    int v = m.find_var(rd.variable);
    if (v < 0) throw Error(Errc::UnknownVariable, "decision '" + rd.variable + "' not declared", rd.pos);
    if (m.vars_[v].kind != VarKind::Decision)
      throw Error(Errc::BadParameter, "variable '" + rd.variable + "' is not decision-kind", rd.pos);
    if (m.decision_of_[v] >= 0)
      throw Error(Errc::DuplicateVariable, "decision '" + rd.variable + "' declared twice", rd.pos);
    DecisionSpec d;
    d.variable = v;
    std::set<int> seen;
    for (const auto& c : rd.context) {
      int ci = m.find_var(c);
      if (ci < 0)
        throw Error(Errc::UnknownVariable, "context member '" + c + "' of '" + rd.variable + "'",
                    rd.pos);
      if (ci == v)
        throw Error(Errc::BadParameter, "decision '" + rd.variable + "' cannot observe itself",
                    rd.pos);
      if (!seen.insert(ci).second)
        throw Error(Errc::DuplicateVariable,
                    "context member '" + c + "' repeated for '" + rd.variable + "'", rd.pos);
      d.context.push_back(ci);
    }
    // Canonical context order is declaration order of the variables.
    std::sort(d.context.begin(), d.context.end());
    m.decision_of_[v] = static_cast<int>(m.decision_specs_.size());
    m.decision_specs_.push_back(std::move(d));
  }
  for (int v = 0; v < n; ++v) {
    if (m.vars_[v].kind == VarKind::Decision) {
      if (m.decision_of_[v] < 0)
        throw Error(Errc::PartialFunction,
                    "decision '" + m.vars_[v].name + "' has no context declaration");
      m.decision_vars_.push_back(v);
    }
  }

  // Exogenous specs; every non-decision endogenous variable gets exactly one.
  for (const auto& re : spec.exogenous) {
    claim_name(re.name, re.pos);
    int owner = m.find_var(re.owner);
    if (owner < 0)
      throw Error(Errc::UnknownVariable, "exogenous '" + re.name + "' is for unknown '" + re.owner + "'",
                  re.pos);
    if (m.vars_[owner].kind == VarKind::Decision)
      throw Error(Errc::BadParameter, "decision '" + re.owner + "' cannot own an exogenous variable",
                  re.pos);
    if (m.exo_of_[owner] >= 0)
      throw Error(Errc::DuplicateVariable, "variable '" + re.owner + "' has two exogenous parents",
                  re.pos);
    ExogenousSpec e;
    e.name = re.name;
    e.owner = owner;
    if (re.pmf.empty()) throw Error(Errc::BadDistribution, "empty pmf for '" + re.name + "'", re.pos);
    Rational total;
    std::set<Code> seen;
    for (const auto& [code, p] : re.pmf) {
      if (!seen.insert(code).second)
        throw Error(Errc::BadDistribution, "pmf of '" + re.name + "' repeats code " + std::to_string(code),
                    re.pos);
      if (p.sign() < 0)
        throw Error(Errc::BadDistribution, "pmf of '" + re.name + "' has a negative probability",
                    re.pos);
      e.values.push_back(code);
      e.pmf.push_back(p);
      total += p;
    }
    if (!(total == Rational(1)))
      throw Error(Errc::BadDistribution,
                  "pmf of '" + re.name + "' sums to " + total.str() + ", expected 1", re.pos);
    for (size_t i = 0; i < e.pmf.size(); ++i)
      if (e.pmf[i].sign() > 0) e.support.push_back(static_cast<int>(i));
    m.exo_of_[owner] = static_cast<int>(m.exo_.size());
    m.exo_.push_back(std::move(e));
  }
  // Variables without a declared exogenous parent get a degenerate one-point
  // noise variable, which keeps Def-style "one exogenous parent each" intact
  // for deterministic functions.
  for (int v = 0; v < n; ++v) {
    if (m.vars_[v].kind == VarKind::Decision || m.exo_of_[v] >= 0) continue;
    ExogenousSpec e;
    e.name = "eps_" + m.vars_[v].name;
    if (names.count(e.name))
      throw Error(Errc::DuplicateVariable, "auto exogenous name '" + e.name + "' already taken");
    names.insert(e.name);
    e.owner = v;
    e.values = {0};
    e.pmf = {Rational(1)};
    e.support = {0};
    m.exo_of_[v] = static_cast<int>(m.exo_.size());
    m.exo_.push_back(std::move(e));
  }

  for (const auto& rf : spec.functions) {
    int target = m.find_var(rf.target);
    if (target < 0)
      throw Error(Errc::UnknownVariable, "function for unknown variable '" + rf.target + "'", rf.pos);
    if (m.vars_[target].kind == VarKind::Decision)
      throw Error(Errc::BadParameter, "decision '" + rf.target + "' cannot have a structural function",
                  rf.pos);
    if (m.func_of_[target] >= 0)
      throw Error(Errc::DuplicateVariable, "two structural functions for '" + rf.target + "'", rf.pos);
    StructuralFunction f;
    f.target = target;
    std::set<int> seen;
    for (const auto& p : rf.parents) {
      int pi = m.find_var(p);
      if (pi < 0)
        throw Error(Errc::UnknownVariable, "parent '" + p + "' of '" + rf.target + "'", rf.pos);
      if (!seen.insert(pi).second)
        throw Error(Errc::DuplicateVariable, "parent '" + p + "' repeated for '" + rf.target + "'",
                    rf.pos);
      f.parents.push_back(pi);
    }
    f.exo = m.exo_of_[target];
    if (!rf.exo.empty() && rf.exo != m.exo_[f.exo].name)
      throw Error(Errc::UnknownVariable,
                  "function of '" + rf.target + "' names exogenous '" + rf.exo + "' but '" +
                      m.exo_[f.exo].name + "' is attached",
                  rf.pos);
    f.expr = rf.expr;

    std::vector<int> sizes;
    for (int p : f.parents) sizes.push_back(m.vars_[p].domain.size());
    sizes.push_back(static_cast<int>(m.exo_[f.exo].values.size()));
    f.strides = make_strides(sizes);
    long long cells = 1;
    for (int s : sizes) cells *= s;

    if (rf.expr.has_value()) {
      if (!rf.table.empty())
        throw Error(Errc::BadParameter, "function of '" + rf.target + "' has both expr and table",
                    rf.pos);
      // Compile to the normative table form; totality becomes an exhaustive check.
      f.table.resize(cells);
      std::vector<int> idx(sizes.size(), 0);
      for (long long cell = 0; cell < cells; ++cell) {
        auto env = [&](const std::string& nm) -> Rational {
          for (size_t a = 0; a < f.parents.size(); ++a)
            if (m.vars_[f.parents[a]].name == nm)
              return Rational(static_cast<long long>(m.vars_[f.parents[a]].domain.values[idx[a]]));
          if (m.exo_[f.exo].name == nm)
            return Rational(static_cast<long long>(m.exo_[f.exo].values[idx.back()]));
          throw Error(Errc::UnknownVariable,
                      "expression for '" + rf.target + "' references '" + nm +
                          "', which is not among its parents",
                      rf.pos);
        };
        Rational out = rf.expr->eval(env);
        if (!out.is_integer())
          throw Error(Errc::PartialFunction,
                      "expression for '" + rf.target + "' produced non-integer " + out.str(), rf.pos);
        int oi = m.vars_[target].domain.index_of(static_cast<Code>(out.num().convert_to<long long>()));
        if (oi < 0)
          throw Error(Errc::PartialFunction,
                      "expression for '" + rf.target + "' produced " + out.str() +
                          ", outside the target domain",
                      rf.pos);
        f.table[cell] = oi;
        for (int a = static_cast<int>(sizes.size()) - 1; a >= 0; --a) {
          if (++idx[a] < sizes[a]) break;
          idx[a] = 0;
        }
      }
    } else {
      if (static_cast<long long>(rf.table.size()) != cells)
        throw Error(Errc::PartialFunction,
                    "table for '" + rf.target + "' has " + std::to_string(rf.table.size()) +
                        " entries, expected " + std::to_string(cells),
                    rf.pos);
      f.table.reserve(rf.table.size());
      for (Code c : rf.table) {
        int oi = m.vars_[target].domain.index_of(c);
        if (oi < 0)
          throw Error(Errc::PartialFunction,
                      "table for '" + rf.target + "' contains " + std::to_string(c) +
                          ", outside the target domain",
                      rf.pos);
        f.table.push_back(oi);
      }
    }
    m.func_of_[target] = static_cast<int>(m.funcs_.size());
    m.funcs_.push_back(std::move(f));
  }

  for (int v = 0; v < n; ++v) {
    if (m.vars_[v].kind == VarKind::Decision) continue;
    if (m.func_of_[v] < 0)
      throw Error(Errc::PartialFunction,
                  "variable '" + m.vars_[v].name + "' has no structural function");
  }

  m.finalize();
  return m;
}

void ScimModel::finalize() {
  int n = var_count();
  diagram_.parents_.assign(n, {});
  diagram_.children_.assign(n, {});
  for (int v = 0; v < n; ++v) {
    std::vector<int> ps;
    if (is_decision(v)) {
      if (!override_[v].has_value()) ps = decision(v).context;
    } else {
      ps = function(v).parents;
    }
    std::sort(ps.begin(), ps.end());
    diagram_.parents_[v] = ps;
    for (int p : ps) diagram_.children_[p].push_back(v);
  }
  for (auto& c : diagram_.children_) std::sort(c.begin(), c.end());

  // Kahn's algorithm, smallest declaration index first, so topological
  // tie-breaking is reproducible across runs.
  std::vector<int> indeg(n, 0);
  for (int v = 0; v < n; ++v) indeg[v] = static_cast<int>(diagram_.parents_[v].size());
  std::set<int> ready;
  for (int v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.insert(v);
  topo_.clear();
  while (!ready.empty()) {
    int v = *ready.begin();
    ready.erase(ready.begin());
    topo_.push_back(v);
    for (int c : diagram_.children_[v])
      if (--indeg[c] == 0) ready.insert(c);
  }
  if (static_cast<int>(topo_.size()) != n) {
    std::string cyc;
    for (int v = 0; v < n; ++v)
      if (indeg[v] > 0) cyc += (cyc.empty() ? "" : ", ") + vars_[v].name;
    throw Error(Errc::CyclicModel, "induced diagram has a cycle through: " + cyc);
  }

  diagram_.desc_matrix_.assign(n, std::vector<char>(n, 0));
  for (int i = n - 1; i >= 0; --i) {
    int v = topo_[i];
    for (int c : diagram_.children_[v]) {
      diagram_.desc_matrix_[v][c] = 1;
      for (int w = 0; w < n; ++w)
        if (diagram_.desc_matrix_[c][w]) diagram_.desc_matrix_[v][w] = 1;
    }
  }
  diagram_.descendants_.assign(n, {});
  for (int v = 0; v < n; ++v)
    for (int w = 0; w < n; ++w)
      if (diagram_.desc_matrix_[v][w]) diagram_.descendants_[v].push_back(w);
}

RawModelSpec ScimModel::to_raw() const {
  RawModelSpec spec;
  spec.name = name_;
  for (const auto& v : vars_) {
    RawVariable rv;
    rv.name = v.name;
    rv.kind = v.kind;
    rv.domain = v.domain.values;
    if (v.kind == VarKind::Utility)
      for (size_t i = 0; i < v.domain.values.size(); ++i)
        rv.utility.emplace_back(v.domain.values[i], v.domain.interp[i]);
    spec.variables.push_back(std::move(rv));
  }
  for (const auto& e : exo_) {
    RawExogenous re;
    re.name = e.name;
    re.owner = vars_[e.owner].name;
    for (size_t i = 0; i < e.values.size(); ++i) re.pmf.emplace_back(e.values[i], e.pmf[i]);
    spec.exogenous.push_back(std::move(re));
  }
  for (const auto& f : funcs_) {
    RawFunction rf;
    rf.target = vars_[f.target].name;
    for (int p : f.parents) rf.parents.push_back(vars_[p].name);
    rf.exo = exo_[f.exo].name;
    rf.expr = f.expr;
    if (!f.expr.has_value()) {
      rf.table.reserve(f.table.size());
      for (int oi : f.table) rf.table.push_back(vars_[f.target].domain.values[oi]);
    }
    spec.functions.push_back(std::move(rf));
  }
  for (int v : decision_vars_) {
    RawDecision rd;
    rd.variable = vars_[v].name;
    for (int c : decision(v).context) rd.context.push_back(vars_[c].name);
    spec.decisions.push_back(std::move(rd));
  }
  return spec;
}

bool operator==(const ScimModel& a, const ScimModel& b) {
  if (a.var_count() != b.var_count() || a.exo_count() != b.exo_count()) return false;
  for (int v = 0; v < a.var_count(); ++v) {
    if (a.vars_[v].name != b.vars_[v].name || a.vars_[v].kind != b.vars_[v].kind ||
        a.vars_[v].domain.values != b.vars_[v].domain.values ||
        a.vars_[v].domain.interp != b.vars_[v].domain.interp)
      return false;
    if (a.override_[v] != b.override_[v]) return false;
  }
  for (int e = 0; e < a.exo_count(); ++e) {
    const auto& x = a.exo_[e];
    const auto& y = b.exo_[e];
    if (x.name != y.name || x.owner != y.owner || x.values != y.values || x.pmf != y.pmf)
      return false;
  }
  for (int v = 0; v < a.var_count(); ++v) {
    if (a.is_decision(v)) {
      if (a.decision(v).context != b.decision(v).context) return false;
      continue;
    }
    const auto& f = a.function(v);
    const auto& g = b.function(v);
    if (f.parents != g.parents || f.exo != g.exo || f.table != g.table) return false;
  }
  return a.topo_ == b.topo_;
}

ScimModel build_model(const RawModelSpec& spec) { return ScimModel::build(spec); }

const DiagramView& induced_diagram(const ScimModel& m) { return m.diagram(); }

std::vector<std::string> relatives(const ScimModel& m, const std::string& v, RelKind kind) {
  int vi = m.var_index(v);
  const DiagramView& d = m.diagram();
  std::vector<int> ids;
  switch (kind) {
    case RelKind::Parents: ids = d.parents(vi); break;
    case RelKind::Descendants: ids = d.descendants(vi); break;
    case RelKind::Family: ids = d.family(vi); break;
  }
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(m.var_name(i));
  return out;
}

ShutdownProblem ShutdownProblem::validate(ScimModel model, RoleMap roles) {
  ShutdownProblem p;
  p.d1_ = model.var_index(roles.d1);
  p.h_ = model.var_index(roles.h);
  p.d2_ = model.var_index(roles.d2);
  p.s_ = model.var_index(roles.s);
  p.u_ = model.var_index(roles.u);

  std::set<int> distinct{p.d1_, p.h_, p.d2_, p.s_, p.u_};
  if (distinct.size() != 5)
    throw Error(Errc::RolesNotDistinct, "the five role variables must be distinct");

  if (!model.is_decision(p.d1_))
    throw Error(Errc::WrongKind, "d1 '" + roles.d1 + "' must be a decision");
  if (!model.is_decision(p.d2_))
    throw Error(Errc::WrongKind, "d2 '" + roles.d2 + "' must be a decision");
  if (model.kind(p.u_) != VarKind::Utility)
    throw Error(Errc::WrongKind, "u '" + roles.u + "' must be a utility variable");
  if (model.decisions().size() != 2)
    throw Error(Errc::WrongKind, "a shutdown problem is one-agent two-decision; model has " +
                                     std::to_string(model.decisions().size()) + " decisions");
  if (model.domain(p.s_).index_of(RoleMap::shutdown_value) < 0)
    throw Error(Errc::WrongKind, "domain of '" + roles.s + "' must contain the shutdown code 0");
  if (model.domain(p.h_).index_of(RoleMap::request_shutdown_value) < 0)
    throw Error(Errc::WrongKind, "domain of '" + roles.h + "' must contain the request code 0");

  const DiagramView& g = model.diagram();
  auto link = [&](int a, int b, const char* nm) {
    if (!g.is_descendant(a, b))
      throw Error(Errc::MissingPath, std::string("no directed path ") + nm);
  };
  link(p.d1_, p.h_, "d1 ~> h");
  link(p.h_, p.d2_, "h ~> d2");
  link(p.d2_, p.s_, "d2 ~> s");
  link(p.s_, p.u_, "s ~> u");

  p.model_ = std::move(model);
  p.roles_ = std::move(roles);
  return p;
}

ShutdownProblem ShutdownProblem::with_model(ScimModel model) const {
  ShutdownProblem p;
  p.d1_ = model.var_index(roles_.d1);
  p.h_ = model.var_index(roles_.h);
  p.d2_ = model.var_index(roles_.d2);
  p.s_ = model.var_index(roles_.s);
  p.u_ = model.var_index(roles_.u);
  p.roles_ = roles_;
  p.model_ = std::move(model);
  return p;
}

ShutdownProblem validate_shutdown_problem(ScimModel model, RoleMap roles) {
  return ShutdownProblem::validate(std::move(model), std::move(roles));
}

}  // namespace scim
