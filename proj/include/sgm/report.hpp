#pragma once

#include "sgm/simulation.hpp"
#include "sgm/types.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sgm {

inline constexpr int kReportSchemaVersion = 1;

/// Plot-ready table with a scalar summary. Missing or non-finite values are
/// stored as NaN and serialized as `null`.
struct AnalysisReport {
  int schema_version = kReportSchemaVersion;
  std::string kind = "analysis";
  std::vector<std::pair<std::string, double>> summary;
  std::vector<std::string> columns;
  Eigen::MatrixXd table;

  Eigen::Index column_index(const std::string& name) const;
  Eigen::VectorXd column(const std::string& name) const { return table.col(column_index(name)); }
  double summary_value(const std::string& name) const;
  bool has_summary(const std::string& name) const;
};

bool equivalent(const AnalysisReport& a, const AnalysisReport& b);

/// Tabular view of a simulation result (kind = experiment name).
AnalysisReport to_report(const ExperimentResult& result);

std::string to_json(const AnalysisReport& report);
std::string to_csv(const AnalysisReport& report);
AnalysisReport report_from_json(const std::string& text);
AnalysisReport report_from_csv(const std::string& text);

enum class ReportFormat { Json, Csv };
ReportFormat format_for(const std::filesystem::path& path);

void write_report(const std::filesystem::path& path, const AnalysisReport& report);
AnalysisReport read_report(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace sgm
