#include "scimcheck/report.hpp"

#include <algorithm>

#include <json.hpp>

namespace scim {

std::string Report::render_table() const {
  std::string out;
  out += "# " + command + "\n";
  out += "# " + version + "\n";
  size_t width = 0;
  for (const auto& [k, v] : fields) width = std::max(width, k.size());
  for (const auto& [k, v] : fields) out += k + std::string(width - k.size() + 2, ' ') + v + "\n";
  for (const Table& t : tables) {
    out += "\n[" + t.title + "]\n";
    std::vector<size_t> widths(t.header.size(), 0);
    for (size_t c = 0; c < t.header.size(); ++c) widths[c] = t.header[c].size();
    for (const auto& row : t.rows)
      for (size_t c = 0; c < row.size() && c < widths.size(); ++c)
        widths[c] = std::max(widths[c], row[c].size());
    auto emit = [&](const std::vector<std::string>& row) {
      for (size_t c = 0; c < row.size(); ++c) {
        out += row[c];
        if (c + 1 < row.size()) out += std::string(widths[c] - row[c].size() + 2, ' ');
      }
      out += "\n";
    };
    emit(t.header);
    for (const auto& row : t.rows) emit(row);
  }
  return out;
}

std::string Report::render_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["version"] = version;
  for (const auto& [k, v] : fields) j["fields"][k] = v;
  j["tables"] = nlohmann::ordered_json::array();
  for (const Table& t : tables) {
    nlohmann::ordered_json jt;
    jt["title"] = t.title;
    jt["header"] = t.header;
    jt["rows"] = t.rows;
    j["tables"].push_back(std::move(jt));
  }
  return j.dump(2) + "\n";
}

}  // namespace scim
