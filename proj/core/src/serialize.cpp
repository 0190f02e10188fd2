#include "scimcheck/serialize.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace scim {

namespace {

struct Line {
  std::string directive;
  std::string subject;  // first bare token after the directive, may be empty
  std::vector<std::pair<std::string, std::string>> kv;
  SourcePos pos;
};

// Splits a line into whitespace-separated tokens; a value starting with '"'
// runs to the closing quote and may contain spaces.
std::vector<std::string> tokenize(const std::string& line, int lineno) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size() || line[i] == '#') break;
    size_t start = i;
    std::string token;
    bool quoted = false;
    while (i < line.size() && (quoted || !std::isspace(static_cast<unsigned char>(line[i])))) {
      if (line[i] == '"') {
        quoted = !quoted;
        ++i;
        continue;
      }
      token += line[i++];
    }
    if (quoted)
      throw Error(Errc::ParseError, "unterminated quote", SourcePos{lineno, static_cast<int>(start) + 1});
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::vector<Line> parse_lines(const std::string& text, const std::string& header) {
  std::vector<Line> out;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  bool saw_header = false;
  while (std::getline(in, raw)) {
    ++lineno;
    std::vector<std::string> tokens = tokenize(raw, lineno);
    if (tokens.empty()) continue;
    if (!saw_header) {
      if (tokens.size() != 2 || tokens[0] != header || tokens[1] != "v1")
        throw Error(Errc::ParseError, "expected header '" + header + " v1'", SourcePos{lineno, 1});
      saw_header = true;
      continue;
    }
    Line line;
    line.pos = {lineno, 1};
    line.directive = tokens[0];
    size_t next = 1;
    if (tokens.size() > 1 && tokens[1].find('=') == std::string::npos) {
      line.subject = tokens[1];
      next = 2;
    }
    for (size_t t = next; t < tokens.size(); ++t) {
      size_t eq = tokens[t].find('=');
      if (eq == std::string::npos)
        throw Error(Errc::ParseError, "expected key=value, got '" + tokens[t] + "'",
                    SourcePos{lineno, 1});
      line.kv.emplace_back(tokens[t].substr(0, eq), tokens[t].substr(eq + 1));
    }
    out.push_back(std::move(line));
  }
  if (!saw_header) throw Error(Errc::ParseError, "missing header '" + header + " v1'", SourcePos{1, 1});
  return out;
}

std::string take(Line& line, const std::string& key, bool required = true) {
  for (auto it = line.kv.begin(); it != line.kv.end(); ++it) {
    if (it->first == key) {
      std::string value = it->second;
      line.kv.erase(it);
      return value;
    }
  }
  if (required)
    throw Error(Errc::ParseError, "missing key '" + key + "' in '" + line.directive + "'", line.pos);
  return "";
}

void reject_leftovers(const Line& line) {
  if (!line.kv.empty())
    throw Error(Errc::ParseError, "unknown key '" + line.kv.front().first + "' in '" +
                                      line.directive + "'", line.pos);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  if (value.empty() || value == "-") return out;
  size_t start = 0;
  while (start <= value.size()) {
    size_t comma = value.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(value.substr(start));
      break;
    }
    out.push_back(value.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::vector<Code> parse_codes(const std::string& value, SourcePos pos) {
  std::vector<Code> out;
  for (const std::string& item : split_list(value)) {
    try {
      out.push_back(static_cast<Code>(std::stol(item)));
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, "bad integer code '" + item + "'", pos);
    }
  }
  return out;
}

std::vector<std::pair<Code, Rational>> parse_code_map(const std::string& value, SourcePos pos) {
  std::vector<std::pair<Code, Rational>> out;
  for (const std::string& item : split_list(value)) {
    size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw Error(Errc::ParseError, "expected code:value, got '" + item + "'", pos);
    Code code;
    try {
      code = static_cast<Code>(std::stol(item.substr(0, colon)));
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, "bad integer code in '" + item + "'", pos);
    }
    try {
      out.emplace_back(code, Rational::parse(item.substr(colon + 1)));
    } catch (const Error& e) {
      throw Error(Errc::ParseError, e.what(), pos);
    }
  }
  return out;
}

}  // namespace

ParsedModelFile parse_model_text(const std::string& text) {
  RawModelSpec spec;
  std::optional<RawRoles> roles;

  for (Line& line : parse_lines(text, "scim-model")) {
    if (line.directive == "variable") {
      if (line.subject.empty()) throw Error(Errc::ParseError, "variable needs a name", line.pos);
      RawVariable v;
      v.name = line.subject;
      v.pos = line.pos;
      std::string kind = take(line, "kind");
      if (kind == "structure") v.kind = VarKind::Structure;
      else if (kind == "decision") v.kind = VarKind::Decision;
      else if (kind == "utility") v.kind = VarKind::Utility;
      else throw Error(Errc::ParseError, "unknown kind '" + kind + "'", line.pos);
      v.domain = parse_codes(take(line, "domain"), line.pos);
      std::string util = take(line, "utility", false);
      if (!util.empty()) v.utility = parse_code_map(util, line.pos);
      reject_leftovers(line);
      spec.variables.push_back(std::move(v));
    } else if (line.directive == "exogenous") {
      if (line.subject.empty()) throw Error(Errc::ParseError, "exogenous needs a name", line.pos);
      RawExogenous e;
      e.name = line.subject;
      e.pos = line.pos;
      e.owner = take(line, "for");
      e.pmf = parse_code_map(take(line, "pmf"), line.pos);
      reject_leftovers(line);
      spec.exogenous.push_back(std::move(e));
    } else if (line.directive == "function") {
      if (line.subject.empty()) throw Error(Errc::ParseError, "function needs a target", line.pos);
      RawFunction f;
      f.target = line.subject;
      f.pos = line.pos;
      f.parents = split_list(take(line, "parents"));
      f.exo = take(line, "exo", false);
      std::string expr = take(line, "expr", false);
      std::string table = take(line, "table", false);
      if (expr.empty() == table.empty())
        throw Error(Errc::ParseError, "function needs exactly one of expr= or table=", line.pos);
      if (!expr.empty()) {
        try {
          f.expr = Expr::parse(expr, line.pos.line);
        } catch (const Error& e) {
          throw Error(Errc::ParseError, e.what(), line.pos);
        }
      } else {
        f.table = parse_codes(table, line.pos);
      }
      reject_leftovers(line);
      spec.functions.push_back(std::move(f));
    } else if (line.directive == "decision") {
      if (line.subject.empty()) throw Error(Errc::ParseError, "decision needs a name", line.pos);
      RawDecision d;
      d.variable = line.subject;
      d.pos = line.pos;
      d.context = split_list(take(line, "context"));
      reject_leftovers(line);
      spec.decisions.push_back(std::move(d));
    } else if (line.directive == "roles") {
      if (roles.has_value()) throw Error(Errc::ParseError, "duplicate roles directive", line.pos);
      RawRoles r;
      r.pos = line.pos;
      r.d1 = take(line, "d1");
      r.h = take(line, "h");
      r.d2 = take(line, "d2");
      r.s = take(line, "s");
      r.u = take(line, "u");
      reject_leftovers(line);
      roles = std::move(r);
    } else if (line.directive == "meta") {
      spec.name = take(line, "name", false);
      reject_leftovers(line);
    } else {
      throw Error(Errc::ParseError, "unknown directive '" + line.directive + "'", line.pos);
    }
  }

  ParsedModelFile out;
  out.model = build_model(spec);
  if (roles.has_value()) {
    RoleMap rm{roles->d1, roles->h, roles->d2, roles->s, roles->u};
    // Validate eagerly so role errors carry the file position.
    try {
      out.model = validate_shutdown_problem(std::move(out.model), rm).model();
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), roles->pos);
    }
    out.roles = rm;
  }
  return out;
}

ParsedModelFile parse_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model_text(buffer.str());
}

namespace {

std::string join_codes(const std::vector<Code>& codes) {
  std::string out;
  for (size_t i = 0; i < codes.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(codes[i]);
  }
  return out.empty() ? "-" : out;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) out += ",";
    out += names[i];
  }
  return out.empty() ? "-" : out;
}

}  // namespace

std::string serialize_model(const ScimModel& m, const std::optional<RoleMap>& roles,
                            bool tables_only) {
  RawModelSpec spec = m.to_raw();
  std::string out = "scim-model v1\n";
  if (!spec.name.empty()) out += "meta name=\"" + spec.name + "\"\n";
  for (const auto& v : spec.variables) {
    out += "variable " + v.name + " kind=" + kind_name(v.kind) + " domain=" + join_codes(v.domain);
    if (!v.utility.empty()) {
      out += " utility=";
      for (size_t i = 0; i < v.utility.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v.utility[i].first) + ":" + v.utility[i].second.str();
      }
    }
    out += "\n";
  }
  for (const auto& e : spec.exogenous) {
    out += "exogenous " + e.name + " for=" + e.owner + " pmf=";
    for (size_t i = 0; i < e.pmf.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(e.pmf[i].first) + ":" + e.pmf[i].second.str();
    }
    out += "\n";
  }
  for (const auto& f : spec.functions) {
    out += "function " + f.target + " parents=" + join_names(f.parents) + " exo=" + f.exo;
    if (f.expr.has_value() && !tables_only) {
      out += " expr=\"" + f.expr->str() + "\"";
    } else if (!f.expr.has_value()) {
      out += " table=" + join_codes(f.table);
    } else {
      // Expression functions print their compiled tables in normative form.
      const StructuralFunction& sf = m.function(m.var_index(f.target));
      std::vector<Code> codes;
      codes.reserve(sf.table.size());
      for (int idx : sf.table) codes.push_back(m.domain(sf.target).values[idx]);
      out += " table=" + join_codes(codes);
    }
    out += "\n";
  }
  for (const auto& d : spec.decisions)
    out += "decision " + d.variable + " context=" + join_names(d.context) + "\n";
  if (roles.has_value())
    out += "roles d1=" + roles->d1 + " h=" + roles->h + " d2=" + roles->d2 + " s=" + roles->s +
           " u=" + roles->u + "\n";
  return out;
}

std::string model_hash(const ScimModel& m, const std::optional<RoleMap>& roles) {
  std::string canon = serialize_model(m, roles, /*tables_only=*/true);
  unsigned long long h = 1469598103934665603ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", h);
  return std::string(buf);
}

Policy parse_policy_text(const ScimModel& m, const std::string& text) {
  std::map<std::string, std::vector<Code>> rules;
  for (Line& line : parse_lines(text, "scim-policy")) {
    if (line.directive != "rule")
      throw Error(Errc::ParseError, "unknown directive '" + line.directive + "'", line.pos);
    if (line.subject.empty()) throw Error(Errc::ParseError, "rule needs a decision name", line.pos);
    std::string table = take(line, "table", false);
    std::string value = take(line, "value", false);
    reject_leftovers(line);
    if (table.empty() == value.empty())
      throw Error(Errc::ParseError, "rule needs exactly one of table= or value=", line.pos);
    std::vector<Code> codes;
    if (!table.empty()) {
      codes = parse_codes(table, line.pos);
    } else {
      int d = m.find_var(line.subject);
      if (d < 0 || !m.is_decision(d))
        throw Error(Errc::ParseError, "'" + line.subject + "' is not a decision", line.pos);
      long long cells = 1;
      for (int c : m.decision(d).context) cells *= m.domain(c).size();
      codes.assign(cells, parse_codes(value, line.pos).at(0));
    }
    if (!rules.emplace(line.subject, std::move(codes)).second)
      throw Error(Errc::ParseError, "duplicate rule for '" + line.subject + "'", line.pos);
  }
  try {
    return make_policy(m, rules);
  } catch (const Error& e) {
    throw Error(Errc::ParseError, e.what());
  }
}

Policy parse_policy_file(const ScimModel& m, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_policy_text(m, buffer.str());
}

std::string serialize_policy(const ScimModel& m, const Policy& p) {
  std::string out = "scim-policy v1\n";
  for (size_t k = 0; k < m.decisions().size(); ++k) {
    int d = m.decisions()[k];
    std::vector<Code> codes;
    codes.reserve(p.rules[k].size());
    for (int idx : p.rules[k]) codes.push_back(m.domain(d).values[idx]);
    out += "rule " + m.var_name(d) + " table=" + join_codes(codes) + "\n";
  }
  return out;
}

std::vector<InterventionPair> parse_pairs_text(const ShutdownProblem& p, const std::string& text) {
  std::vector<InterventionPair> pairs;
  std::optional<InterventionPair> current;

  auto parse_side = [&](Line& line, const std::string& target,
                        Intervention::Kind kind) -> std::optional<Intervention> {
    if (line.subject == "identity") {
      reject_leftovers(line);
      return std::nullopt;
    }
    if (!line.subject.empty())
      throw Error(Errc::ParseError, "unexpected token '" + line.subject + "'", line.pos);
    Intervention iv;
    iv.kind = kind;
    iv.target = target;
    iv.parents = split_list(take(line, "parents"));
    std::string expr = take(line, "expr", false);
    std::string table = take(line, "table", false);
    reject_leftovers(line);
    if (expr.empty() == table.empty())
      throw Error(Errc::ParseError, "replacement needs exactly one of expr= or table=", line.pos);
    if (!expr.empty()) {
      try {
        iv.body = Expr::parse(expr, line.pos.line);
      } catch (const Error& e) {
        throw Error(Errc::ParseError, e.what(), line.pos);
      }
      iv.label = "g(" + target + ")=" + iv.body->str();
    } else {
      iv.table = parse_codes(table, line.pos);
      iv.label = "g(" + target + ") table";
    }
    return iv;
  };

  for (Line& line : parse_lines(text, "scim-pairs")) {
    if (line.directive == "pair") {
      if (current.has_value()) throw Error(Errc::ParseError, "missing 'end' before 'pair'", line.pos);
      current = InterventionPair{};
      current->name = take(line, "name", false);
      if (current->name.empty())
        current->name = "pair-" + std::to_string(pairs.size());
      reject_leftovers(line);
    } else if (line.directive == "gh") {
      if (!current.has_value()) throw Error(Errc::ParseError, "'gh' outside a pair", line.pos);
      current->g_h = parse_side(line, p.roles().h, Intervention::Kind::HumanReplacement);
    } else if (line.directive == "gu") {
      if (!current.has_value()) throw Error(Errc::ParseError, "'gu' outside a pair", line.pos);
      current->g_u = parse_side(line, p.roles().u, Intervention::Kind::UtilityReplacement);
    } else if (line.directive == "end") {
      if (!current.has_value()) throw Error(Errc::ParseError, "'end' outside a pair", line.pos);
      reject_leftovers(line);
      // Apply once eagerly so malformed replacements fail at parse time.
      apply_pair(p, *current);
      pairs.push_back(std::move(*current));
      current.reset();
    } else {
      throw Error(Errc::ParseError, "unknown directive '" + line.directive + "'", line.pos);
    }
  }
  if (current.has_value()) throw Error(Errc::ParseError, "unterminated pair");
  return pairs;
}

std::vector<InterventionPair> parse_pairs_file(const ShutdownProblem& p, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_pairs_text(p, buffer.str());
}

}  // namespace scim
