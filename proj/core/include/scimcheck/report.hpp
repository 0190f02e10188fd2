#pragma once

#include <string>
#include <utility>
#include <vector>

namespace scim {

inline constexpr const char* kVersion = "scimcheck 0.1.0";

// Machine-readable run report. Content is ordered and purely textual (exact
// rationals as "p/q" strings), so renderings are byte-identical across runs
// and worker counts.
struct Report {
  struct Table {
    std::string title;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
  };

  std::string command;
  std::string version = kVersion;
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<Table> tables;

  void field(std::string key, std::string value) {
    fields.emplace_back(std::move(key), std::move(value));
  }

  std::string render_table() const;
  std::string render_json() const;
};

enum class ReportFormat { Table, Json };

}  // namespace scim
