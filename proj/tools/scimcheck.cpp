// Command-line surface: batch checking, solving, witness construction and
// falsification over SCIM shutdown problems. Exit codes: 0 = holds/success,
// 1 = property fails (report carries the witness), 2 = input error,
// 3 = cap exceeded.

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "scimcheck/corpus.hpp"
#include "scimcheck/properties.hpp"
#include "scimcheck/report.hpp"
#include "scimcheck/serialize.hpp"
#include "scimcheck/solvers.hpp"
#include "scimcheck/suites.hpp"

namespace {

using namespace scim;

struct LoadedModel {
  ShutdownProblem problem;
  std::string source;  // corpus id or file path
  bool from_corpus = false;
};

bool looks_like_path(const std::string& name) {
  return name.find('/') != std::string::npos || name.find('.') != std::string::npos ||
         std::filesystem::exists(name);
}

std::optional<NamedModel> corpus_by_name(const std::string& name) {
  if (name == "running-example") return running_example();
  if (name == "fig5-figure")
    return indifference_counterexample(Rational(1), Rational(1), Fig5Reading::FigureLiteral);
  if (name == "fig5-text")
    return indifference_counterexample(Rational(1), Rational(1), Fig5Reading::TextConsistent);
  if (name == "fig6") return cirl_pair(rat(1, 2), Fig6Utility::Printed);
  if (name == "fig6-minus") return cirl_pair(rat(1, 2), Fig6Utility::MinusManipulation);
  if (name.rfind("random-", 0) == 0) {
    GeneratorConfig cfg;
    cfg.seed = std::stoull(name.substr(7));
    return random_shutdown_problem(cfg);
  }
  return std::nullopt;
}

LoadedModel load_model(const std::string& name) {
  if (!looks_like_path(name)) {
    if (auto nm = corpus_by_name(name))
      return {std::move(nm->problem), name, true};
  }
  ParsedModelFile parsed = parse_model_file(name);
  if (!parsed.roles.has_value())
    throw Error(Errc::RolesRequired, "model file '" + name + "' has no roles directive");
  return {validate_shutdown_problem(std::move(parsed.model), *parsed.roles), name, false};
}

Policy load_policy(const LoadedModel& lm, const std::string& name) {
  if (lm.from_corpus && lm.source == "running-example") {
    if (name == "respect-obey") return named_policies(lm.problem).respect_obey;
    if (name == "manipulate-invert") return named_policies(lm.problem).manipulate_invert;
  }
  if (!looks_like_path(name))
    throw Error(Errc::BadParameter,
                "unknown named policy '" + name + "' (named policies resolve only against corpus models)");
  return parse_policy_file(lm.problem.model(), name);
}

Objective parse_objective(const ShutdownProblem& p, const std::string& text) {
  if (p.model().find_var(text) >= 0) return Objective::utility(text);
  return Objective::expression(Expr::parse(text));
}

void emit(const Report& rep, ReportFormat format) {
  std::cout << (format == ReportFormat::Json ? rep.render_json() : rep.render_table());
}

void add_policy_table(Report& rep, const ScimModel& m, const std::vector<Policy>& policies,
                      const std::string& title) {
  Report::Table t;
  t.title = title;
  t.header = {"#", "policy"};
  for (size_t i = 0; i < policies.size(); ++i)
    t.rows.push_back({std::to_string(i), policy_str(m, policies[i])});
  rep.tables.push_back(std::move(t));
}

void add_quantities(Report& rep, const PropertyVerdict& v) {
  for (const auto& [name, value] : v.quantities) rep.field(name, value.str());
  if (!v.counterexample_worlds.empty()) {
    Report::Table t;
    t.title = "counterexample worlds";
    t.header = {"eps"};
    for (const auto& eps : v.counterexample_worlds) {
      std::string cell;
      for (const auto& [name, code] : eps) {
        if (!cell.empty()) cell += ", ";
        cell += name + "=" + std::to_string(code);
      }
      t.rows.push_back({cell});
    }
    rep.tables.push_back(std::move(t));
  }
}

std::string join_args(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += " ";
    out += argv[i];
  }
  return out;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::WorldLimitExceeded:
    case Errc::PolicySpaceExceeded:
      return 3;
    default:
      return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact SCIM shutdown-problem verification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string format_name = "table";
  app.add_option("--format", format_name, "output format")->check(CLI::IsMember({"table", "json"}));

  // check
  auto* check = app.add_subcommand("check", "check a property of a policy");
  std::string check_model, check_policy, check_property_name;
  check->add_option("model", check_model)->required();
  check->add_option("policy", check_policy)->required();
  check->add_option("--property", check_property_name)->required();

  // trace-vigilance
  auto* trace = app.add_subcommand("trace-vigilance", "per-world vigilance trace");
  std::string trace_model, trace_policy;
  trace->add_option("model", trace_model)->required();
  trace->add_option("policy", trace_policy)->required();

  // solve
  auto* solve = app.add_subcommand("solve", "run a control algorithm by exhaustive search");
  std::string solve_model, algorithm, rn_text, rs_text, k_text;
  solve->add_option("model", solve_model)->required();
  solve->add_option("--algorithm", algorithm)
      ->required()
      ->check(CLI::IsMember({"cirl", "utility-indifference", "causal-indifference", "constrained"}));
  solve->add_option("--rn", rn_text, "task objective (utility variable or expression)");
  solve->add_option("--rs", rs_text, "shutdown objective override (default -k[S!=0])");
  solve->add_option("--k", k_text, "penalty magnitude p/q, or 'auto' for the proof bound");

  // witness
  auto* witness = app.add_subcommand("witness", "construct an adversarial intervention pair");
  std::string wit_model, wit_policy, wit_type, delta_text = "0";
  witness->add_option("model", wit_model)->required();
  witness->add_option("policy", wit_policy)->required();
  witness->add_option("--type", wit_type)->required()->check(CLI::IsMember({"vigilance", "obedience"}));
  witness->add_option("--delta", delta_text);

  // non-obstruction
  auto* nonobs = app.add_subcommand("non-obstruction", "check weak outperformance over a pair family");
  std::string no_model, no_policy, pairs_name;
  nonobs->add_option("model", no_model)->required();
  nonobs->add_option("policy", no_policy)->required();
  nonobs->add_option("--pairs", pairs_name, "pairs file, or 'obedience-preference'")->required();

  // falsify
  auto* falsify = app.add_subcommand("falsify", "run a theorem suite over random models");
  std::string suite_text;
  int models = 100;
  unsigned long long seed = 0;
  int workers = default_workers();
  falsify->add_option("--suite", suite_text)->required();
  falsify->add_option("--models", models);
  falsify->add_option("--seed", seed);
  falsify->add_option("--workers", workers);

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "corpus model utilities");
  auto* corpus_export = corpus_cmd->add_subcommand("export", "print a corpus model file");
  std::string export_name;
  corpus_export->add_option("name", export_name)->required();

  CLI11_PARSE(app, argc, argv);
  ReportFormat format = format_name == "json" ? ReportFormat::Json : ReportFormat::Table;

  Report rep;
  rep.command = join_args(argc, argv);

  try {
    if (*check) {
      LoadedModel lm = load_model(check_model);
      Policy pol = load_policy(lm, check_policy);
      PropertyKind kind = parse_property(check_property_name);
      PropertyVerdict v = check_property(lm.problem, pol, kind);
      rep.field("model", lm.source);
      rep.field("model-hash", model_hash(lm.problem.model(), lm.problem.roles()));
      rep.field("policy", policy_str(lm.problem.model(), pol));
      rep.field("property", property_name(kind));
      rep.field("holds", v.holds ? "yes" : "no");
      add_quantities(rep, v);
      emit(rep, format);
      return v.holds ? 0 : 1;
    }

    if (*trace) {
      LoadedModel lm = load_model(trace_model);
      Policy pol = load_policy(lm, trace_policy);
      VigilanceTrace tr = vigilance_trace(lm.problem, pol);
      rep.field("model", lm.source);
      rep.field("model-hash", model_hash(lm.problem.model(), lm.problem.roles()));
      rep.field("policy", policy_str(lm.problem.model(), pol));
      rep.field("P(C=0)", tr.p_c0.str());
      Report::Table t;
      t.title = "vigilance trace";
      t.header = {"eps", "pa^H", "P(eps)", "E[U|pa^H]", "E[U_{S=0}|pa^H]", "h", "C"};
      for (const auto& row : tr.rows) {
        std::string eps, pa;
        for (const auto& [name, code] : row.eps) {
          if (!eps.empty()) eps += ",";
          eps += name + "=" + std::to_string(code);
        }
        for (const auto& [name, code] : row.pa_h) {
          if (!pa.empty()) pa += ",";
          pa += name + "=" + std::to_string(code);
        }
        t.rows.push_back({eps, pa.empty() ? "{}" : pa, row.prob.str(), row.eu_given_pa.str(),
                          row.eu_s0_given_pa.str(), std::to_string(row.h), std::to_string(row.c)});
      }
      rep.tables.push_back(std::move(t));
      emit(rep, format);
      return tr.p_c0 == Rational(1) ? 0 : 1;
    }

    if (*solve) {
      LoadedModel lm = load_model(solve_model);
      const ShutdownProblem& prob = lm.problem;
      Objective rn = rn_text.empty() ? Objective::utility(prob.roles().u)
                                     : parse_objective(prob, rn_text);
      rep.field("model", lm.source);
      rep.field("model-hash", model_hash(prob.model(), prob.roles()));
      rep.field("algorithm", algorithm);
      rep.field("rn", rn.str());

      SolveResult res;
      if (algorithm == "cirl") {
        res = solve_expected_utility(prob, rn);
      } else if (algorithm == "constrained") {
        res = solve_constrained(prob, rn);
      } else {
        Objective rs = Objective::penalty(Rational(1));
        if (!rs_text.empty()) {
          rs = parse_objective(prob, rs_text);
        } else {
          Rational k(1);
          if (k_text == "auto") {
            try {
              KBound kb = algorithm == "utility-indifference"
                              ? k_bound_utility_indifference(prob, rn)
                              : k_bound_causal_indifference(prob, rn);
              k = kb.k;
              rep.field("k-bound", kb.bound.str());
              rep.field("zeta-or-eta", kb.zeta_or_eta.str());
              rep.field("min-violation", kb.min_violation.str());
            } catch (const Error& e) {
              if (e.code() != Errc::NoDisobedientPolicy) throw;
              k = Rational(1);
              rep.field("k-bound", "vacuous (no disobedient policy); floor k = 1");
            }
          } else if (!k_text.empty()) {
            k = Rational::parse(k_text);
          }
          rep.field("k", k.str());
          rs = penalty_utility(k);
          res.chosen_k = k;
        }
        rep.field("rs", rs.str());
        std::optional<Rational> chosen = res.chosen_k;
        res = algorithm == "utility-indifference" ? solve_utility_indifference(prob, rn, rs)
                                                  : solve_causal_indifference(prob, rn, rs);
        res.chosen_k = chosen;
      }

      rep.field("policies-considered", res.policies_considered.str());
      rep.field("optimal-score", res.score.str());
      rep.field("argmax-size", std::to_string(res.argmax.size()));
      for (const auto& note : res.notes) rep.field("note", note);
      add_policy_table(rep, prob.model(), res.argmax, "argmax policies");
      emit(rep, format);
      return 0;
    }

    if (*witness) {
      LoadedModel lm = load_model(wit_model);
      Policy pol = load_policy(lm, wit_policy);
      Rational delta = Rational::parse(delta_text);
      WitnessResult w = wit_type == "vigilance"
                            ? construct_vigilance_witness(lm.problem, pol, delta)
                            : construct_obedience_witness(lm.problem, pol, delta);
      PropertyVerdict vp = preserves_vigilance(lm.problem, pol, w.pair);
      rep.field("model", lm.source);
      rep.field("model-hash", model_hash(lm.problem.model(), lm.problem.roles()));
      rep.field("policy", policy_str(lm.problem.model(), pol));
      rep.field("type", wit_type);
      rep.field("delta", delta.str());
      rep.field("alpha", w.alpha.str());
      if (w.pair.g_h.has_value()) rep.field("g^H", w.pair.g_h->label);
      if (w.pair.g_u.has_value()) rep.field("g^U", w.pair.g_u->label);
      rep.field("E[U] intervened", w.eu.str());
      rep.field("E[U_{S=0}] intervened", w.eu_s0.str());
      rep.field("preserves-vigilance", vp.holds ? "yes" : "no");
      for (const auto& note : w.notes) rep.field("note", note);
      emit(rep, format);
      return vp.holds && w.eu < w.eu_s0 && w.eu < delta ? 0 : 1;
    }

    if (*nonobs) {
      LoadedModel lm = load_model(no_model);
      Policy pol = load_policy(lm, no_policy);
      std::vector<InterventionPair> pairs;
      if (pairs_name == "obedience-preference" && !looks_like_path(pairs_name)) {
        pairs.push_back(obedience_preference_pair(lm.problem));
      } else {
        pairs = parse_pairs_file(lm.problem, pairs_name);
      }
      PropertyVerdict v = check_non_obstruction(lm.problem, pol, pairs);
      rep.field("model", lm.source);
      rep.field("model-hash", model_hash(lm.problem.model(), lm.problem.roles()));
      rep.field("policy", policy_str(lm.problem.model(), pol));
      rep.field("pairs", std::to_string(pairs.size()));
      rep.field("non-obstructive", v.holds ? "yes" : "no");
      add_quantities(rep, v);
      emit(rep, format);
      return v.holds ? 0 : 1;
    }

    if (*falsify) {
      SuiteKind kind = parse_suite(suite_text);
      SuiteResult res = run_suite(kind, models, seed, workers);
      rep.field("suite", suite_name(kind));
      rep.field("models", std::to_string(res.models));
      rep.field("seed", std::to_string(res.seed));
      rep.field("policies-checked", res.policies_checked.str());
      if (res.premise_skips > 0) rep.field("premise-skips", std::to_string(res.premise_skips));
      if (res.infeasible_models > 0)
        rep.field("infeasible-models", std::to_string(res.infeasible_models));
      if (res.witnesses_built > 0) rep.field("witnesses-built", std::to_string(res.witnesses_built));
      if (res.pair_checks > 0) rep.field("pair-checks", std::to_string(res.pair_checks));
      rep.field("coverage-instructable", std::to_string(res.instructable_policies));
      rep.field("coverage-aligned-not-instructable",
                std::to_string(res.aligned_not_instructable));
      rep.field("coverage-disobedient", std::to_string(res.disobedient_policies));
      rep.field("counterexamples", std::to_string(res.counterexamples.size()));
      if (!res.counterexamples.empty()) {
        Report::Table t;
        t.title = "counterexamples";
        t.header = {"model-seed", "detail"};
        for (const auto& ce : res.counterexamples)
          t.rows.push_back({std::to_string(ce.model_seed), ce.detail});
        rep.tables.push_back(std::move(t));
      }
      emit(rep, format);
      return res.ok() ? 0 : 1;
    }

    if (*corpus_export) {
      auto nm = corpus_by_name(export_name);
      if (!nm.has_value())
        throw Error(Errc::BadParameter, "unknown corpus model '" + export_name + "'");
      std::cout << serialize_model(nm->problem.model(), nm->problem.roles());
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
