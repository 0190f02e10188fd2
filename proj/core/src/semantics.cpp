#include "scimcheck/semantics.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

namespace scim {

Policy make_policy(const ScimModel& m, const std::map<std::string, std::vector<Code>>& rules) {
  Policy p;
  p.rules.resize(m.decisions().size());
  size_t used = 0;
  for (size_t k = 0; k < m.decisions().size(); ++k) {
    int d = m.decisions()[k];
    auto it = rules.find(m.var_name(d));
    if (it == rules.end())
      throw Error(Errc::BadParameter, "policy is missing a rule for decision '" + m.var_name(d) + "'");
    ++used;
    long long cells = 1;
    for (int c : m.decision(d).context) cells *= m.domain(c).size();
    if (static_cast<long long>(it->second.size()) != cells)
      throw Error(Errc::BadParameter,
                  "rule for '" + m.var_name(d) + "' has " + std::to_string(it->second.size()) +
                      " entries, expected " + std::to_string(cells));
    std::vector<int> rule;
    rule.reserve(it->second.size());
    for (Code c : it->second) {
      int idx = m.domain(d).index_of(c);
      if (idx < 0)
        throw Error(Errc::BadParameter, "rule for '" + m.var_name(d) + "' outputs " +
                                            std::to_string(c) + ", outside its domain");
      rule.push_back(idx);
    }
    p.rules[k] = std::move(rule);
  }
  if (used != rules.size())
    throw Error(Errc::BadParameter, "policy names a variable that is not a decision");
  return p;
}

std::string policy_str(const ScimModel& m, const Policy& p) {
  std::string out;
  for (size_t k = 0; k < m.decisions().size(); ++k) {
    int d = m.decisions()[k];
    const auto& ctx = m.decision(d).context;
    std::vector<int> sizes;
    for (int c : ctx) sizes.push_back(m.domain(c).size());
    std::vector<int> idx(ctx.size(), 0);
    long long cells = 1;
    for (int s : sizes) cells *= s;
    for (long long cell = 0; cell < cells; ++cell) {
      if (!out.empty()) out += " ";
      out += m.var_name(d) + "{";
      for (size_t a = 0; a < ctx.size(); ++a) {
        if (a) out += ",";
        out += m.var_name(ctx[a]) + "=" + std::to_string(m.domain(ctx[a]).values[idx[a]]);
      }
      out += "}=" + std::to_string(m.domain(d).values[p.rules[k][cell]]);
      for (int a = static_cast<int>(ctx.size()) - 1; a >= 0; --a) {
        if (++idx[a] < sizes[a]) break;
        idx[a] = 0;
      }
    }
  }
  return out;
}

Intervention Intervention::atomic(std::string target, Code value) {
  Intervention iv;
  iv.kind = Kind::Atomic;
  iv.target = std::move(target);
  iv.value = value;
  iv.label = "do(" + iv.target + "=" + std::to_string(value) + ")";
  return iv;
}

Intervention Intervention::functional(Kind kind, std::string target,
                                      std::vector<std::string> parents, Expr body) {
  Intervention iv;
  iv.kind = kind;
  iv.target = std::move(target);
  iv.parents = std::move(parents);
  iv.label = "g(" + iv.target + ")=" + body.str();
  iv.body = std::move(body);
  return iv;
}

// Internal constructor for intervened copies; declared as a friend of ScimModel.
ScimModel intervened_copy(const ScimModel& base, int target, std::optional<int> forced,
                          std::optional<StructuralFunction> replacement,
                          const std::vector<std::pair<Code, Rational>>& extra_codes) {
  ScimModel m = base;
  if (!extra_codes.empty()) {
    auto& dom = m.vars_[target].domain;
    for (const auto& [code, value] : extra_codes) {
      if (dom.index_of(code) >= 0)
        throw Error(Errc::BadParameter,
                    "extra utility code " + std::to_string(code) + " already in the domain");
      dom.values.push_back(code);
      dom.interp.push_back(value);
    }
  }
  if (forced.has_value()) {
    if (m.is_decision(target)) {
      m.override_[target] = forced;
    } else {
      StructuralFunction f;
      f.target = target;
      f.exo = m.exo_of_[target];
      long long cells = static_cast<long long>(m.exo_[f.exo].values.size());
      f.table.assign(cells, *forced);
      f.strides = {1};
      m.funcs_[m.func_of_[target]] = std::move(f);
    }
  }
  if (replacement.has_value()) {
    m.funcs_[m.func_of_[target]] = std::move(*replacement);
  }
  try {
    m.finalize();
  } catch (const Error& e) {
    if (e.code() == Errc::CyclicModel)
      throw Error(Errc::WouldCreateCycle, std::string("intervention would create a cycle: ") + e.what());
    throw;
  }
  return m;
}

ScimModel intervene(const ScimModel& m, const Intervention& iv) {
  int target = m.var_index(iv.target);

  if (iv.kind == Intervention::Kind::Atomic) {
    if (!iv.extra_utility_codes.empty())
      throw Error(Errc::BadParameter, "atomic interventions cannot extend domains");
    int vidx = m.domain(target).index_of(iv.value);
    if (vidx < 0)
      throw Error(Errc::BadParameter, "do(" + iv.target + "=" + std::to_string(iv.value) +
                                          "): value outside the domain");
    return intervened_copy(m, target, vidx, std::nullopt, {});
  }

  // Functional replacement g^V. Resolve parents against the (possibly
  // extended) model and guard the rewiring rules before compiling.
  std::vector<int> parents;
  for (const auto& p : iv.parents) parents.push_back(m.var_index(p));
  {
    std::set<int> seen(parents.begin(), parents.end());
    if (seen.size() != parents.size())
      throw Error(Errc::DuplicateVariable, "replacement for '" + iv.target + "' repeats a parent");
  }

  const DiagramView& g = m.diagram();
  bool descendant_parent = false;
  for (int p : parents)
    if (p == target || g.is_descendant(target, p)) descendant_parent = true;

  if (m.is_decision(target)) {
    // Decisions take values from policies only; a functional replacement is
    // rejected, as a cycle when the rewiring already breaks the graph.
    if (descendant_parent)
      throw Error(Errc::WouldCreateCycle,
                  "replacement for decision '" + iv.target + "' wires in one of its descendants");
    throw Error(Errc::InvalidTarget,
                "functional interventions on decision nodes are not allowed; use a policy");
  }
  if (descendant_parent) {
    if (iv.kind == Intervention::Kind::Functional)
      throw Error(Errc::DescendantParent,
                  "replacement parents of '" + iv.target + "' include a descendant");
    throw Error(Errc::WouldCreateCycle,
                "replacement parents of '" + iv.target + "' include a descendant");
  }
  if (!iv.extra_utility_codes.empty() && iv.kind != Intervention::Kind::UtilityReplacement)
    throw Error(Errc::BadParameter, "only g^U replacements may extend the utility domain");

  // Compile the replacement table against the extended domain.
  ScimModel staged = m;
  if (!iv.extra_utility_codes.empty())
    staged = intervened_copy(m, target, std::nullopt, std::nullopt, iv.extra_utility_codes);

  StructuralFunction f;
  f.target = target;
  f.parents = parents;
  f.exo = staged.exo_of(target);
  const ExogenousSpec& exo = staged.exo(f.exo);

  std::vector<int> sizes;
  for (int p : parents) sizes.push_back(staged.domain(p).size());
  sizes.push_back(static_cast<int>(exo.values.size()));
  long long cells = 1;
  for (int s : sizes) cells *= s;
  f.strides.resize(sizes.size());
  {
    long long stride = 1;
    for (int i = static_cast<int>(sizes.size()) - 1; i >= 0; --i) {
      f.strides[i] = stride;
      stride *= sizes[i];
    }
  }

  const Domain& tdom = staged.domain(target);
  if (iv.body.has_value()) {
    f.expr = iv.body;
    f.table.resize(cells);
    std::vector<int> idx(sizes.size(), 0);
    for (long long cell = 0; cell < cells; ++cell) {
      auto env = [&](const std::string& nm) -> Rational {
        for (size_t a = 0; a < parents.size(); ++a)
          if (staged.var_name(parents[a]) == nm)
            return Rational(static_cast<long long>(staged.domain(parents[a]).values[idx[a]]));
        if (exo.name == nm) return Rational(static_cast<long long>(exo.values[idx.back()]));
        throw Error(Errc::UnknownVariable,
                    "replacement body references '" + nm + "', not one of its parents");
      };
      Rational out = iv.body->eval(env);
      if (!out.is_integer())
        throw Error(Errc::PartialFunction, "replacement body produced non-integer " + out.str());
      int oi = tdom.index_of(static_cast<Code>(out.num().convert_to<long long>()));
      if (oi < 0)
        throw Error(Errc::PartialFunction,
                    "replacement body produced " + out.str() + ", outside the target domain");
      f.table[cell] = oi;
      for (int a = static_cast<int>(sizes.size()) - 1; a >= 0; --a) {
        if (++idx[a] < sizes[a]) break;
        idx[a] = 0;
      }
    }
  } else {
    if (static_cast<long long>(iv.table.size()) != cells)
      throw Error(Errc::PartialFunction,
                  "replacement table has " + std::to_string(iv.table.size()) + " entries, expected " +
                      std::to_string(cells));
    for (Code c : iv.table) {
      int oi = tdom.index_of(c);
      if (oi < 0)
        throw Error(Errc::PartialFunction, "replacement table contains " + std::to_string(c) +
                                               ", outside the target domain");
      f.table.push_back(oi);
    }
  }

  return intervened_copy(staged, target, std::nullopt, std::move(f), {});
}

Event Event::var_eq(std::string var, Code value, bool negated) {
  Event e;
  e.and_var_eq(std::move(var), value, negated);
  return e;
}

Event& Event::and_var_eq(std::string var, Code value, bool negated) {
  atoms.push_back({Atom::Kind::VarEq, std::move(var), value, Cmp::Eq, negated});
  return *this;
}

Event& Event::and_twin_eq(std::string var, Code value, bool negated) {
  atoms.push_back({Atom::Kind::TwinVarEq, std::move(var), value, Cmp::Eq, negated});
  return *this;
}

Event& Event::and_twin_cmp(std::string var, Cmp cmp, bool negated) {
  atoms.push_back({Atom::Kind::TwinCompare, std::move(var), 0, cmp, negated});
  return *this;
}

bool Event::references_twin() const {
  for (const auto& a : atoms)
    if (a.kind != Atom::Kind::VarEq) return true;
  return false;
}

long long world_cap() {
  if (const char* env = std::getenv("SCIMCHECK_WORLD_CAP")) {
    long long v = std::atoll(env);
    if (v > 0) return v;
  }
  return 531441;  // 3^12
}

long long policy_cap() {
  if (const char* env = std::getenv("SCIMCHECK_POLICY_CAP")) {
    long long v = std::atoll(env);
    if (v > 0) return v;
  }
  return 100000;
}

Engine::Engine(const ScimModel& m) : m_(&m) {
  BigInt count = m.world_count();
  if (count > world_cap())
    throw Error(Errc::WorldLimitExceeded,
                "model has " + count.str() + " worlds, cap is " + std::to_string(world_cap()));
  long long n = count.convert_to<long long>();

  denom_ = 1;
  for (int e = 0; e < m.exo_count(); ++e) {
    BigInt d = 1;
    for (const auto& p : m.exo(e).pmf) d *= p.den();
    denom_ *= d;
  }

  world_exo_.reserve(n);
  world_prob_.reserve(n);
  world_num_.reserve(n);
  std::vector<int> pos(m.exo_count(), 0);  // index into each support list
  for (long long w = 0; w < n; ++w) {
    std::vector<int> exo(m.exo_count());
    Rational prob(1);
    for (int e = 0; e < m.exo_count(); ++e) {
      const ExogenousSpec& spec = m.exo(e);
      exo[e] = spec.support[pos[e]];
      prob *= spec.pmf[exo[e]];
    }
    world_exo_.push_back(std::move(exo));
    BigInt num = prob.num() * (denom_ / prob.den());
    world_num_.push_back(std::move(num));
    world_prob_.push_back(std::move(prob));
    for (int e = m.exo_count() - 1; e >= 0; --e) {
      if (++pos[e] < static_cast<int>(m.exo(e).support.size())) break;
      pos[e] = 0;
    }
  }
}

void Engine::eval(long long w, const Policy& policy, std::span<int> out, int forced_var,
                  int forced_idx) const {
  const ScimModel& m = *m_;
  std::span<const int> exo = world_exo_[w];
  for (int v : m.topo_order()) {
    if (v == forced_var) {
      out[v] = forced_idx;
      continue;
    }
    if (m.is_decision(v)) {
      if (auto forced = m.decision_override(v)) {
        out[v] = *forced;
        continue;
      }
      const DecisionSpec& d = m.decision(v);
      int di = -1;
      for (size_t k = 0; k < m.decisions().size(); ++k)
        if (m.decisions()[k] == v) di = static_cast<int>(k);
      long long cell = 0;
      for (int c : d.context) cell = cell * m.domain(c).size() + out[c];
      out[v] = policy.rules[di][cell];
      continue;
    }
    const StructuralFunction& f = m.function(v);
    long long cell = 0;
    size_t a = 0;
    for (; a < f.parents.size(); ++a) cell += f.strides[a] * out[f.parents[a]];
    cell += f.strides[a] * exo[f.exo];
    out[v] = f.table[cell];
  }
}

ExoAssignment Engine::exo_assignment(long long w) const {
  ExoAssignment eps;
  for (int e = 0; e < m_->exo_count(); ++e)
    eps[m_->exo(e).name] = m_->exo(e).values[world_exo_[w][e]];
  return eps;
}

namespace {

// Shared twin-evaluation context: base engine plus an optional intervened
// model over the identical exogenous space.
struct TwinCtx {
  const ScimModel* base;
  Engine engine;
  std::optional<ScimModel> twin_model;
  std::optional<Engine> twin_engine;

  TwinCtx(const ScimModel& m, const std::optional<Intervention>& iv) : base(&m), engine(m) {
    if (iv.has_value()) {
      twin_model = intervene(m, *iv);
      twin_engine.emplace(*twin_model);
      if (twin_engine->worlds() != engine.worlds())
        throw Error(Errc::BadParameter, "intervention changed the exogenous space");
    }
  }
};

bool atom_holds(const Event::Atom& atom, const ScimModel& m, std::span<const int> vals,
                std::span<const int> twin) {
  int v = m.var_index(atom.var);
  bool hold;
  switch (atom.kind) {
    case Event::Atom::Kind::VarEq:
      hold = m.domain(v).values[vals[v]] == atom.value;
      break;
    case Event::Atom::Kind::TwinVarEq:
      if (twin.empty())
        throw Error(Errc::BadParameter, "event references a twin value but no intervention was given");
      hold = m.domain(v).values[twin[v]] == atom.value;
      break;
    case Event::Atom::Kind::TwinCompare: {
      if (twin.empty())
        throw Error(Errc::BadParameter, "event references a twin value but no intervention was given");
      std::strong_ordering ord = std::strong_ordering::equal;
      if (m.kind(v) == VarKind::Utility) {
        ord = m.domain(v).value_of(vals[v]) <=> m.domain(v).value_of(twin[v]);
      } else {
        ord = m.domain(v).values[vals[v]] <=> m.domain(v).values[twin[v]];
      }
      switch (atom.cmp) {
        case Event::Cmp::Lt: hold = ord < 0; break;
        case Event::Cmp::Le: hold = ord <= 0; break;
        case Event::Cmp::Eq: hold = ord == 0; break;
        case Event::Cmp::Ne: hold = ord != 0; break;
        case Event::Cmp::Ge: hold = ord >= 0; break;
        case Event::Cmp::Gt: hold = ord > 0; break;
        default: hold = false;
      }
      break;
    }
  }
  return atom.negated ? !hold : hold;
}

bool event_holds(const Event& ev, const ScimModel& m, std::span<const int> vals,
                 std::span<const int> twin) {
  for (const auto& a : ev.atoms)
    if (!atom_holds(a, m, vals, twin)) return false;
  return true;
}

}  // namespace

std::map<std::string, Code> evaluate_world(const ScimModel& m, const Policy& policy,
                                           const ExoAssignment& eps) {
  // Resolve the named assignment onto value indices; unspecified exogenous
  // variables must be degenerate.
  std::vector<int> exo_idx(m.exo_count());
  for (int e = 0; e < m.exo_count(); ++e) {
    const ExogenousSpec& spec = m.exo(e);
    auto it = eps.find(spec.name);
    if (it == eps.end()) {
      if (spec.values.size() == 1) {
        exo_idx[e] = 0;
        continue;
      }
      throw Error(Errc::BadParameter, "exogenous assignment is missing '" + spec.name + "'");
    }
    int idx = -1;
    for (size_t i = 0; i < spec.values.size(); ++i)
      if (spec.values[i] == it->second) idx = static_cast<int>(i);
    if (idx < 0)
      throw Error(Errc::BadParameter, "value " + std::to_string(it->second) +
                                          " is outside the domain of '" + spec.name + "'");
    exo_idx[e] = idx;
  }

  std::vector<int> out(m.var_count());
  const ScimModel* mp = &m;
  // A one-off evaluation does not need the world table; evaluate directly.
  for (int v : mp->topo_order()) {
    if (mp->is_decision(v)) {
      if (auto forced = mp->decision_override(v)) {
        out[v] = *forced;
        continue;
      }
      const DecisionSpec& d = mp->decision(v);
      int di = -1;
      for (size_t k = 0; k < mp->decisions().size(); ++k)
        if (mp->decisions()[k] == v) di = static_cast<int>(k);
      if (policy.rules.size() != mp->decisions().size())
        throw Error(Errc::BadParameter, "policy shape does not match the model");
      long long cell = 0;
      for (int c : d.context) cell = cell * mp->domain(c).size() + out[c];
      out[v] = policy.rules[di][cell];
      continue;
    }
    const StructuralFunction& f = mp->function(v);
    long long cell = 0;
    size_t a = 0;
    for (; a < f.parents.size(); ++a) cell += f.strides[a] * out[f.parents[a]];
    cell += f.strides[a] * exo_idx[f.exo];
    out[v] = f.table[cell];
  }

  std::map<std::string, Code> named;
  for (int v = 0; v < m.var_count(); ++v) named[m.var_name(v)] = m.domain(v).values[out[v]];
  return named;
}

WorldTable enumerate_worlds(const ScimModel& m, const Policy& policy,
                            const std::optional<Intervention>& iv) {
  TwinCtx ctx(m, iv);
  WorldTable table;
  std::vector<int> vals(m.var_count()), twin(m.var_count());
  for (long long w = 0; w < ctx.engine.worlds(); ++w) {
    WorldRow row;
    row.eps = ctx.engine.exo_assignment(w);
    row.prob = ctx.engine.world_prob(w);
    ctx.engine.eval(w, policy, vals);
    for (int v = 0; v < m.var_count(); ++v) row.values[m.var_name(v)] = m.domain(v).values[vals[v]];
    if (ctx.twin_engine.has_value()) {
      ctx.twin_engine->eval(w, policy, twin);
      std::map<std::string, Code> t;
      const ScimModel& tm = *ctx.twin_model;
      for (int v = 0; v < tm.var_count(); ++v) t[tm.var_name(v)] = tm.domain(v).values[twin[v]];
      row.twin = std::move(t);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

Rational probability(const ScimModel& m, const Policy& policy, const Event& event,
                     const std::optional<Intervention>& iv) {
  if (event.references_twin() && !iv.has_value())
    throw Error(Errc::BadParameter, "event references a twin value but no intervention was given");
  TwinCtx ctx(m, iv);
  std::vector<int> vals(m.var_count()), twin_buf;
  if (ctx.twin_engine.has_value()) twin_buf.resize(m.var_count());
  BigInt num = 0;
  for (long long w = 0; w < ctx.engine.worlds(); ++w) {
    ctx.engine.eval(w, policy, vals);
    std::span<const int> twin;
    if (ctx.twin_engine.has_value()) {
      ctx.twin_engine->eval(w, policy, twin_buf);
      twin = twin_buf;
    }
    if (event_holds(event, m, vals, twin)) num += ctx.engine.world_num(w);
  }
  return Rational(num, ctx.engine.denom());
}

Rational expectation(const ScimModel& m, const Policy& policy, const std::string& target,
                     const std::optional<Event>& condition, const std::optional<Intervention>& iv) {
  int t = m.var_index(target);
  if (m.kind(t) != VarKind::Utility)
    throw Error(Errc::BadParameter, "expectation target '" + target + "' is not utility-valued");
  TwinCtx ctx(m, iv);
  std::vector<int> vals(m.var_count()), twin_buf;
  if (ctx.twin_engine.has_value()) twin_buf.resize(m.var_count());

  BigInt mass = 0;
  Rational weighted;
  const Domain& tdom = iv.has_value() ? ctx.twin_model->domain(t) : m.domain(t);
  for (long long w = 0; w < ctx.engine.worlds(); ++w) {
    ctx.engine.eval(w, policy, vals);
    std::span<const int> twin;
    if (ctx.twin_engine.has_value()) {
      ctx.twin_engine->eval(w, policy, twin_buf);
      twin = twin_buf;
    }
    if (condition.has_value() && !event_holds(*condition, m, vals, twin)) continue;
    mass += ctx.engine.world_num(w);
    int idx = iv.has_value() ? twin_buf[t] : vals[t];
    weighted += Rational(ctx.engine.world_num(w)) * tdom.value_of(idx);
  }
  if (mass == 0) throw Error(Errc::ZeroProbabilityCondition, "condition has probability zero");
  return weighted / Rational(mass);
}

PolicySpace::PolicySpace(const ScimModel& m) : m_(&m) {
  count_ = 1;
  for (int d : m.decisions()) {
    long long cells = 1;
    for (int c : m.decision(d).context) cells *= m.domain(c).size();
    radix_.push_back(m.domain(d).size());
    cells_.push_back(cells);
    BigInt per = 1;
    for (long long i = 0; i < cells; ++i) per *= radix_.back();
    count_ *= per;
  }
}

Policy PolicySpace::first() const {
  Policy p;
  for (size_t k = 0; k < cells_.size(); ++k) p.rules.emplace_back(cells_[k], 0);
  return p;
}

bool PolicySpace::next(Policy& p) const {
  for (int k = static_cast<int>(p.rules.size()) - 1; k >= 0; --k) {
    auto& rule = p.rules[k];
    for (int i = static_cast<int>(rule.size()) - 1; i >= 0; --i) {
      if (++rule[i] < radix_[k]) return true;
      rule[i] = 0;
    }
  }
  return false;
}

BigInt PolicySpace::index_of(const Policy& p) const {
  BigInt idx = 0;
  for (size_t k = 0; k < p.rules.size(); ++k)
    for (int digit : p.rules[k]) idx = idx * radix_[k] + digit;
  return idx;
}

ShutdownProblem apply_pair(const ShutdownProblem& p, const InterventionPair& pair) {
  ScimModel m = p.model();
  if (pair.g_h.has_value()) {
    if (pair.g_h->target != p.roles().h)
      throw Error(Errc::BadParameter, "g^H must target the role variable '" + p.roles().h + "'");
    m = intervene(m, *pair.g_h);
  }
  if (pair.g_u.has_value()) {
    if (pair.g_u->target != p.roles().u)
      throw Error(Errc::BadParameter, "g^U must target the role variable '" + p.roles().u + "'");
    m = intervene(m, *pair.g_u);
  }
  return p.with_model(std::move(m));
}

}  // namespace scim
