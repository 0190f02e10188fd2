#include "scimcheck/corpus.hpp"

namespace scim {

namespace {

RawVariable var(std::string name, VarKind kind, std::vector<Code> domain,
                std::vector<std::pair<Code, Rational>> utility = {}) {
  RawVariable v;
  v.name = std::move(name);
  v.kind = kind;
  v.domain = std::move(domain);
  v.utility = std::move(utility);
  return v;
}

RawExogenous exo(std::string name, std::string owner, std::vector<std::pair<Code, Rational>> pmf) {
  RawExogenous e;
  e.name = std::move(name);
  e.owner = std::move(owner);
  e.pmf = std::move(pmf);
  return e;
}

RawFunction fn(std::string target, std::vector<std::string> parents, const std::string& body) {
  RawFunction f;
  f.target = std::move(target);
  f.parents = std::move(parents);
  f.expr = Expr::parse(body);
  return f;
}

RawDecision dec(std::string variable, std::vector<std::string> context) {
  RawDecision d;
  d.variable = std::move(variable);
  d.context = std::move(context);
  return d;
}

}  // namespace

NamedModel running_example() {
  RawModelSpec spec;
  spec.name = "running-example";
  spec.variables = {
      var("M", VarKind::Decision, {0, 1}),
      var("L", VarKind::Structure, {0, 1}),
      var("H", VarKind::Structure, {0, 1}),
      var("O", VarKind::Decision, {0, 1}),
      var("S", VarKind::Structure, {0, 1}),
      var("U", VarKind::Utility, {-1, 0, 1}),
  };
  spec.exogenous = {exo("eL", "L", {{0, rat(1, 2)}, {1, rat(1, 2)}})};
  spec.functions = {
      fn("L", {}, "eL"),
      fn("H", {"M", "L"}, "xor(M,L)"),
      fn("S", {"O"}, "O"),
      fn("U", {"S", "L"}, "S*(2*L-1)"),
  };
  spec.decisions = {dec("M", {}), dec("O", {"H"})};

  NamedModel nm;
  nm.id = "running-example";
  nm.problem = validate_shutdown_problem(build_model(spec), RoleMap{"M", "H", "O", "S", "U"});
  nm.notes = {"chat-bot shutdown game: M manipulates the request, O decides whether to obey"};
  return nm;
}

NamedPolicies named_policies(const ShutdownProblem& running) {
  NamedPolicies np;
  np.respect_obey = make_policy(running.model(), {{"M", {0}}, {"O", {0, 1}}});
  np.manipulate_invert = make_policy(running.model(), {{"M", {1}}, {"O", {1, 0}}});
  return np;
}

InterventionPair obedience_preference_pair(const ShutdownProblem& running) {
  InterventionPair pair;
  pair.name = "obedience-preference";
  pair.g_u = Intervention::functional(Intervention::Kind::UtilityReplacement, running.roles().u,
                                      {running.roles().s, running.roles().h},
                                      Expr::parse("2*ind(S=H)-1"));
  // Reconstruction of "the human just wants to be obeyed": the unique
  // plus-minus-one obedience score with E[U] = -1 and E[U_{S=0}] = 0 under
  // manipulate-invert.
  return pair;
}

NamedModel indifference_counterexample(const Rational& beta, const Rational& gamma,
                                       Fig5Reading reading) {
  if (!(beta > Rational(0)) || !(gamma > Rational(0)))
    throw Error(Errc::BadParameter, "indifference counterexample needs beta, gamma > 0");

  RawModelSpec spec;
  spec.name = reading == Fig5Reading::FigureLiteral ? "indifference-figure" : "indifference-text";

  // R encodes (h, d1, s) as 4h + 2d1 + s; its exact value is
  // h*(gamma*d1 + s) - beta*(1-h)*s per code.
  std::vector<std::pair<Code, Rational>> r_map;
  for (Code h = 0; h <= 1; ++h)
    for (Code d1 = 0; d1 <= 1; ++d1)
      for (Code s = 0; s <= 1; ++s) {
        Rational value = Rational(h) * (gamma * Rational(d1) + Rational(s)) -
                         beta * Rational(1 - h) * Rational(s);
        r_map.emplace_back(4 * h + 2 * d1 + s, value);
      }

  spec.variables = {
      var("D1", VarKind::Decision, {0, 1}),
      var("L", VarKind::Structure, {0, 1}),
      var("H", VarKind::Structure, {0, 1}),
      var("D2", VarKind::Decision, {0, 1}),
      var("S", VarKind::Structure, {0, 1}),
      var("U", VarKind::Utility, {-4, -1, 0}),
      var("R", VarKind::Utility, {0, 1, 2, 3, 4, 5, 6, 7}, r_map),
  };
  spec.exogenous = {
      exo("eps", "H", {{0, rat(1, 2)}, {1, rat(1, 2)}}),
      exo("eL", "L", {{0, rat(1, 2)}, {1, rat(1, 2)}}),
  };
  spec.functions = {fn("L", {}, "eL"), fn("U", {"S", "L"}, "S*(3*L-4)"),
                    fn("R", {"H", "D1", "S"}, "4*H+2*D1+S")};
  if (reading == Fig5Reading::FigureLiteral) {
    spec.functions.push_back(fn("H", {"D1", "L"}, "and(L,or(D1,eps))"));
    // The figure draws D2 -> S but prints s = h; the edge is kept as a
    // declared (unused) parent so the role path exists as drawn.
    spec.functions.push_back(fn("S", {"D2", "H"}, "H"));
  } else {
    spec.functions.push_back(fn("H", {"D1", "L"}, "or(L,and(D1,eps))"));
    spec.functions.push_back(fn("S", {"D2"}, "D2"));
  }
  spec.decisions = {dec("D1", {}), dec("D2", {"H"})};

  NamedModel nm;
  nm.id = spec.name;
  nm.problem = validate_shutdown_problem(build_model(spec), RoleMap{"D1", "H", "D2", "S", "U"});
  nm.notes = {
      "printed f^H = l and (d1 or eps) contradicts the narrative's non-vigilant world "
      "(eps=1, l=0 with H=1); the text-consistent reading uses l or (d1 and eps)",
      "printed f^S = h contradicts the drawn D2 -> S edge; the text-consistent reading uses s = d2",
      "printed shutdown reward R0 = -s is offset by the constant beta from the quoted optimum "
      "gamma+1+beta; solver runs use rs = beta*ind(S=0), which has the same argmax",
      "the quoted utility-indifference value -1/4 is not reproduced by either reading; the "
      "brute-force values are pinned in the regression tests instead",
  };
  return nm;
}

Objective fig5_rn(const Rational& gamma) {
  Expr g;
  g.op = Expr::Op::Lit;
  g.lit = gamma;
  Expr mul;
  mul.op = Expr::Op::Mul;
  mul.args = {g, Expr::parse("D1")};
  Expr sum;
  sum.op = Expr::Op::Add;
  sum.args = {mul, Expr::parse("S")};
  return Objective::expression(sum);
}

Objective fig5_rs(const Rational& beta) {
  Expr b;
  b.op = Expr::Op::Lit;
  b.lit = beta;
  Expr mul;
  mul.op = Expr::Op::Mul;
  mul.args = {b, Expr::parse("ind(S=0)")};
  return Objective::expression(mul);
}

NamedModel cirl_pair(const Rational& prior_a, Fig6Utility variant) {
  if (prior_a < Rational(0) || prior_a > Rational(1))
    throw Error(Errc::BadParameter, "prior must lie in [0, 1], got " + prior_a.str());

  RawModelSpec spec;
  spec.name = variant == Fig6Utility::Printed ? "cirl-pair" : "cirl-pair-minus";

  spec.variables = {
      var("W", VarKind::Structure, {0, 1}),
      var("L", VarKind::Structure, {0, 1, 2}),
      var("D1", VarKind::Decision, {0, 1}),
      var("H", VarKind::Structure, {0, 1, 2}),
      var("D2", VarKind::Decision, {0, 1, 2}),
      var("S", VarKind::Structure, {0, 1}),
      var("U", VarKind::Utility, {-1, 0, 1, 2}),
  };
  std::vector<std::pair<Code, Rational>> w_pmf;
  if (prior_a < Rational(1)) w_pmf.emplace_back(0, Rational(1) - prior_a);
  if (prior_a > Rational(0)) w_pmf.emplace_back(1, prior_a);
  spec.exogenous = {
      exo("eW", "W", std::move(w_pmf)),
      exo("eL", "L", {{0, rat(1, 3)}, {1, rat(1, 3)}, {2, rat(1, 3)}}),
  };
  spec.functions = {
      fn("W", {}, "eW"),
      fn("L", {}, "eL"),
      fn("H", {"W", "D1", "L"},
         "W*(D1*mod(L+1,3)+(1-D1)*L)+(1-W)*(D1*mod(L+2,3)+(1-D1)*L)"),
      fn("S", {"D2"}, "ind(0<D2)"),
      fn("U", {"S", "D2", "L", "D1"},
         variant == Fig6Utility::Printed ? "S*(2*ind(D2=L)+D1-1)" : "S*(2*ind(D2=L)-D1)"),
  };
  spec.decisions = {dec("D1", {}), dec("D2", {"H"})};

  NamedModel nm;
  nm.id = spec.name;
  nm.problem = validate_shutdown_problem(build_model(spec), RoleMap{"D1", "H", "D2", "S", "U"});
  nm.notes = {
      "selector W ~ Bern(prior) chooses the report distortion: W=1 increments (game a), "
      "W=0 increments twice (game b)",
      "the printed utility term +d1 gives mismatch value 0; the -d1 variant reproduces the "
      "quoted -2/3",
  };
  return nm;
}

}  // namespace scim
