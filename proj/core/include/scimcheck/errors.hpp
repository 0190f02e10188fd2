#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace scim {

enum class Errc {
  // model building
  CyclicModel,
  PartialFunction,
  BadDistribution,
  UnknownVariable,
  DuplicateVariable,
  // shutdown problem validation
  MissingPath,
  WrongKind,
  RolesNotDistinct,
  // semantics
  WorldLimitExceeded,
  ZeroProbabilityCondition,
  WouldCreateCycle,
  DescendantParent,
  InvalidTarget,
  // witness constructions
  PolicyEnsuresVigilance,
  PolicyObedient,
  // solvers
  PolicySpaceExceeded,
  DegenerateInstruction,
  NoDisobedientPolicy,
  NonPositiveK,
  Infeasible,
  // corpus / generator
  GenerationFailed,
  BadParameter,
  // cli / file formats
  ParseError,
  RolesRequired,
};

const char* errc_name(Errc c);

struct SourcePos {
  int line = 0;  // 1-based
  int col = 0;   // 1-based, 0 = whole line
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(errc_name(code) + std::string(": ") + message), code_(code) {}
  Error(Errc code, std::string message, SourcePos pos)
      : std::runtime_error(errc_name(code) + std::string(": ") + message + " (line " +
                           std::to_string(pos.line) +
                           (pos.col > 0 ? ", col " + std::to_string(pos.col) : "") + ")"),
        code_(code),
        pos_(pos) {}

  Errc code() const { return code_; }
  const std::optional<SourcePos>& pos() const { return pos_; }

 private:
  Errc code_;
  std::optional<SourcePos> pos_;
};

}  // namespace scim
