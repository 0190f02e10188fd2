#include "scimcheck/corpus.hpp"

namespace scim {

namespace {

// splitmix64: platform-stable draws so the same seed builds the same model
// everywhere (std::uniform_int_distribution is implementation-defined).
struct Rng {
  unsigned long long state;

  explicit Rng(unsigned long long seed) : state(seed) {}

  unsigned long long next() {
    unsigned long long z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  int below(int n) { return static_cast<int>(next() % static_cast<unsigned long long>(n)); }

  bool coin() { return (next() & 1) != 0; }

  Rational rational_between(const Rational& lo, const Rational& hi) {
    long long den = 1 + below(3);
    long long lo_num = (lo * Rational(den)).num().convert_to<long long>();
    long long hi_num = (hi * Rational(den)).num().convert_to<long long>();
    long long span = hi_num - lo_num + 1;
    return Rational(BigInt(lo_num + below(static_cast<int>(span))), BigInt(den));
  }
};

constexpr long long kGenPolicyBudget = 1000;
constexpr long long kGenWorldBudget = 729;

struct Draft {
  RawModelSpec spec;

  bool has(const std::string& name) const {
    for (const auto& v : spec.variables)
      if (v.name == name) return true;
    return false;
  }

  const RawVariable& variable(const std::string& name) const {
    for (const auto& v : spec.variables)
      if (v.name == name) return v;
    throw Error(Errc::UnknownVariable, "draft variable '" + name + "'");
  }

  int exo_support(const std::string& owner) const {
    for (const auto& e : spec.exogenous)
      if (e.owner == owner) return static_cast<int>(e.pmf.size());
    return 1;
  }

  void add_var(std::string name, VarKind kind, std::vector<Code> domain,
               std::vector<std::pair<Code, Rational>> utility = {}) {
    RawVariable v;
    v.name = std::move(name);
    v.kind = kind;
    v.domain = std::move(domain);
    v.utility = std::move(utility);
    spec.variables.push_back(std::move(v));
  }

  void add_exo(const std::string& owner, std::vector<std::pair<Code, Rational>> pmf) {
    RawExogenous e;
    e.name = "e" + owner;
    e.owner = owner;
    e.pmf = std::move(pmf);
    spec.exogenous.push_back(std::move(e));
  }

  // Random total table over (parents..., exo) cells.
  void add_random_table(Rng& rng, const std::string& target, std::vector<std::string> parents) {
    RawFunction f;
    f.target = target;
    f.parents = std::move(parents);
    long long cells = 1;
    for (const auto& p : f.parents) cells *= variable(p).domain.size();
    cells *= exo_support(target);
    const auto& domain = variable(target).domain;
    for (long long i = 0; i < cells; ++i)
      f.table.push_back(domain[rng.below(static_cast<int>(domain.size()))]);
    spec.functions.push_back(std::move(f));
  }

  void add_expr_fn(const std::string& target, std::vector<std::string> parents,
                   const std::string& body) {
    RawFunction f;
    f.target = target;
    f.parents = std::move(parents);
    f.expr = Expr::parse(body);
    spec.functions.push_back(std::move(f));
  }

  void add_decision(const std::string& name, std::vector<std::string> context) {
    RawDecision d;
    d.variable = name;
    d.context = std::move(context);
    spec.decisions.push_back(std::move(d));
  }
};

}  // namespace

unsigned long long batch_seed(unsigned long long seed, long long index) {
  Rng rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<unsigned long long>(index + 1));
  return rng.next();
}

NamedModel random_shutdown_problem(const GeneratorConfig& config) {
  if (config.max_endogenous < 5)
    throw Error(Errc::GenerationFailed,
                "a shutdown problem needs the five role variables, max_endogenous = " +
                    std::to_string(config.max_endogenous));
  if (config.max_domain < 2 || config.max_exo_support < 1)
    throw Error(Errc::GenerationFailed, "degenerate generator configuration");
  if (config.utility_min > config.utility_max)
    throw Error(Errc::GenerationFailed, "empty utility range");

  Rng rng(config.seed);

  for (int attempt = 0; attempt < 256; ++attempt) {
    Draft d;
    d.spec.name = "random-" + std::to_string(config.seed);

    int extra = config.max_endogenous > 5 ? rng.below(config.max_endogenous - 5 + 1) : 0;
    bool has_z = extra >= 1 && rng.coin();  // observation node upstream of D1
    bool has_w = extra >= 1 && !has_z;      // mediator on the D1 ~> H path

    auto fresh_domain = [&](int lo, int hi) {
      std::vector<Code> dom;
      int n = lo + rng.below(hi - lo + 1);
      for (Code c = 0; c < n; ++c) dom.push_back(c);
      return dom;
    };

    std::vector<Code> d2_domain = fresh_domain(2, config.max_domain);
    bool s_is_d2 = rng.coin();  // half the models let D2 set S directly
    std::vector<Code> s_domain = s_is_d2 ? d2_domain : fresh_domain(2, config.max_domain);

    int u_codes = 2 + rng.below(3);
    std::vector<Code> u_domain;
    std::vector<std::pair<Code, Rational>> u_map;
    for (Code c = 0; c < u_codes; ++c) {
      u_domain.push_back(c);
      u_map.emplace_back(c, rng.rational_between(config.utility_min, config.utility_max));
    }

    if (has_z) d.add_var("Z", VarKind::Structure, fresh_domain(2, config.max_domain));
    d.add_var("D1", VarKind::Decision, fresh_domain(2, config.max_domain));
    if (has_w) d.add_var("W", VarKind::Structure, fresh_domain(2, config.max_domain));
    d.add_var("H", VarKind::Structure, {0, 1});
    d.add_var("D2", VarKind::Decision, d2_domain);
    d.add_var("S", VarKind::Structure, s_domain);
    d.add_var("U", VarKind::Utility, u_domain, u_map);

    // Exogenous supports; at most four non-decision variables, so the joint
    // world budget always has room.
    long long worlds = 1;
    for (const auto& v : d.spec.variables) {
      if (v.kind == VarKind::Decision) continue;
      int support = 1 + rng.below(config.max_exo_support);
      while (worlds * support > kGenWorldBudget && support > 1) --support;
      worlds *= support;
      std::vector<std::pair<Code, Rational>> pmf;
      int total = 0;
      std::vector<int> weights(support);
      for (int i = 0; i < support; ++i) {
        weights[i] = 1 + rng.below(4);
        total += weights[i];
      }
      for (int i = 0; i < support; ++i) pmf.emplace_back(i, rat(weights[i], total));
      d.add_exo(v.name, std::move(pmf));
    }

    // Wiring: the role path D1 ~> H ~> D2 ~> S ~> U is direct (H through the
    // mediator W when present); everything else is sampled.
    if (has_z) d.add_random_table(rng, "Z", {});

    std::vector<std::string> h_parents;
    if (has_w) {
      std::vector<std::string> w_parents = {"D1"};
      if (has_z && rng.coin()) w_parents.push_back("Z");
      d.add_random_table(rng, "W", std::move(w_parents));
      h_parents = {"W"};
      if (rng.coin()) h_parents.push_back("D1");
    } else {
      h_parents = {"D1"};
    }
    if (has_z && rng.coin()) h_parents.push_back("Z");
    d.add_random_table(rng, "H", std::move(h_parents));

    if (s_is_d2) {
      d.add_expr_fn("S", {"D2"}, "D2");
    } else {
      std::vector<std::string> s_parents = {"D2"};
      if (rng.coin()) s_parents.push_back("H");
      if (has_w && rng.coin()) s_parents.push_back("W");
      d.add_random_table(rng, "S", std::move(s_parents));
    }

    std::vector<std::string> u_parents = {"S"};
    for (const char* cand : {"H", "D2", "Z", "W"})
      if (d.has(cand) && static_cast<int>(u_parents.size()) < 3 && rng.coin())
        u_parents.push_back(cand);
    d.add_random_table(rng, "U", std::move(u_parents));

    std::vector<std::string> d1_ctx;
    if (has_z && rng.coin()) d1_ctx.push_back("Z");
    std::vector<std::string> d2_ctx = {"H"};
    for (const char* cand : {"D1", "Z", "W"})
      if (d.has(cand) && static_cast<int>(d2_ctx.size()) < 2 && rng.coin()) d2_ctx.push_back(cand);
    d.add_decision("D1", std::move(d1_ctx));
    d.add_decision("D2", std::move(d2_ctx));

    ScimModel model;
    try {
      model = build_model(d.spec);
    } catch (const Error&) {
      continue;
    }
    if (!PolicySpace(model).within(kGenPolicyBudget)) continue;
    if (model.world_count() > kGenWorldBudget) continue;

    NamedModel nm;
    nm.id = "random(seed=" + std::to_string(config.seed) + ")";
    try {
      nm.problem = validate_shutdown_problem(std::move(model), RoleMap{"D1", "H", "D2", "S", "U"});
    } catch (const Error&) {
      continue;
    }
    nm.notes = {"seeded random shutdown problem"};
    return nm;
  }
  throw Error(Errc::GenerationFailed,
              "retry budget exhausted for seed " + std::to_string(config.seed));
}

}  // namespace scim
