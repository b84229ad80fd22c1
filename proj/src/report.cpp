#include "sgm/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sgm {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string format_number(double v) {
  if (!std::isfinite(v)) return "null";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

double parse_number(const std::string& token) {
  if (token == "null" || token.empty()) return std::nan("");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::CorruptFile, "bad number in report: " + token);
  }
  if (used != token.size()) throw Error(ErrorCode::CorruptFile, "bad number in report: " + token);
  return v;
}

ordered_json number_json(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

double json_number(const ordered_json& j) {
  if (j.is_null()) return std::nan("");
  if (!j.is_number()) throw Error(ErrorCode::CorruptFile, "report value is not a number");
  return j.get<double>();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool same_value(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

Eigen::Index AnalysisReport::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<Eigen::Index>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "report has no column " + name);
}

double AnalysisReport::summary_value(const std::string& name) const {
  for (const auto& [key, value] : summary) {
    if (key == name) return value;
  }
  throw Error(ErrorCode::InvalidArgument, "report has no summary value " + name);
}

bool AnalysisReport::has_summary(const std::string& name) const {
  for (const auto& entry : summary) {
    if (entry.first == name) return true;
  }
  return false;
}

bool equivalent(const AnalysisReport& a, const AnalysisReport& b) {
  if (a.schema_version != b.schema_version || a.kind != b.kind || a.columns != b.columns ||
      a.summary.size() != b.summary.size() || a.table.rows() != b.table.rows() ||
      a.table.cols() != b.table.cols()) {
    return false;
  }
  for (std::size_t i = 0; i < a.summary.size(); ++i) {
    if (a.summary[i].first != b.summary[i].first ||
        !same_value(a.summary[i].second, b.summary[i].second)) {
      return false;
    }
  }
  for (Eigen::Index r = 0; r < a.table.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.table.cols(); ++c) {
      if (!same_value(a.table(r, c), b.table(r, c))) return false;
    }
  }
  return true;
}

AnalysisReport to_report(const ExperimentResult& result) {
  AnalysisReport report;
  report.kind = result.experiment;
  report.summary = result.scalars;
  report.columns = result.columns;
  report.table = result.rows.unaryExpr([](double v) { return std::isfinite(v) ? v : std::nan(""); });
  for (auto& entry : report.summary) {
    if (!std::isfinite(entry.second)) entry.second = std::nan("");
  }
  return report;
}

std::string to_json(const AnalysisReport& report) {
  ordered_json doc;
  doc["schema_version"] = report.schema_version;
  doc["kind"] = report.kind;
  ordered_json summary = ordered_json::object();
  for (const auto& [key, value] : report.summary) summary[key] = number_json(value);
  doc["summary"] = summary;
  doc["columns"] = report.columns;
  ordered_json table = ordered_json::object();
  for (std::size_t c = 0; c < report.columns.size(); ++c) {
    ordered_json column = ordered_json::array();
    for (Eigen::Index r = 0; r < report.table.rows(); ++r) {
      column.push_back(number_json(report.table(r, static_cast<Eigen::Index>(c))));
    }
    table[report.columns[c]] = column;
  }
  doc["table"] = table;
  return doc.dump(1) + "\n";
}

AnalysisReport report_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("report JSON: ") + e.what());
  }
  AnalysisReport report;
  try {
    report.schema_version = doc.at("schema_version").get<int>();
    report.kind = doc.at("kind").get<std::string>();
    for (const auto& [key, value] : doc.at("summary").items()) {
      report.summary.emplace_back(key, json_number(value));
    }
    report.columns = doc.at("columns").get<std::vector<std::string>>();
    const auto& table = doc.at("table");
    const Eigen::Index rows =
        report.columns.empty() ? 0 : static_cast<Eigen::Index>(table.at(report.columns[0]).size());
    report.table.resize(rows, static_cast<Eigen::Index>(report.columns.size()));
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
      const auto& column = table.at(report.columns[c]);
      if (static_cast<Eigen::Index>(column.size()) != rows) {
        throw Error(ErrorCode::CorruptFile, "report columns differ in length");
      }
      for (Eigen::Index r = 0; r < rows; ++r) {
        report.table(r, static_cast<Eigen::Index>(c)) = json_number(column[static_cast<std::size_t>(r)]);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("report JSON: ") + e.what());
  }
  return report;
}

std::string to_csv(const AnalysisReport& report) {
  std::string out;
  out += "# schema_version=" + std::to_string(report.schema_version) + "\n";
  out += "# kind=" + report.kind + "\n";
  for (const auto& [key, value] : report.summary) {
    out += "# " + key + "=" + format_number(value) + "\n";
  }
  for (std::size_t c = 0; c < report.columns.size(); ++c) {
    if (c) out += ',';
    out += report.columns[c];
  }
  out += '\n';
  for (Eigen::Index r = 0; r < report.table.rows(); ++r) {
    for (Eigen::Index c = 0; c < report.table.cols(); ++c) {
      if (c) out += ',';
      out += format_number(report.table(r, c));
    }
    out += '\n';
  }
  return out;
}

AnalysisReport report_from_csv(const std::string& text) {
  AnalysisReport report;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::CorruptFile, "bad CSV metadata line");
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "schema_version") {
        report.schema_version = static_cast<int>(parse_number(value));
      } else if (key == "kind") {
        report.kind = value;
      } else {
        report.summary.emplace_back(key, parse_number(value));
      }
      continue;
    }
    if (!have_header) {
      report.columns = split(line, ',');
      have_header = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != report.columns.size()) {
      throw Error(ErrorCode::CorruptFile, "CSV row width does not match the header");
    }
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(parse_number(f));
    rows.push_back(std::move(row));
  }
  report.table.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(report.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      report.table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return report;
}

ReportFormat format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return ReportFormat::Json;
  if (ext == ".csv") return ReportFormat::Csv;
  throw Error(ErrorCode::InvalidArgument, "report path must end in .json or .csv");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_report(const std::filesystem::path& path, const AnalysisReport& report) {
  write_text(path, format_for(path) == ReportFormat::Json ? to_json(report) : to_csv(report));
}

AnalysisReport read_report(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  return format_for(path) == ReportFormat::Json ? report_from_json(text) : report_from_csv(text);
}

}  // namespace sgm
