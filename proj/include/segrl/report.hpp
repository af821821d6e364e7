#pragma once

#include <optional>
#include <string>
#include <vector>

namespace segrl {

struct ScorePair {
  std::string game;
  double raw = 0.0;
  double segmented = 0.0;
  // Set by the caller when either agent failed to learn (or finished no
  // episode); such games are listed without a percentage.
  bool no_learning = false;
  std::string object_count;  // taxonomy tag, optional
  std::optional<double> raw_seconds;
  std::optional<double> segmented_seconds;
};

enum class ReportStatus { kOk, kNoLearning, kNotComparable };

struct ReportRow {
  ScorePair scores;
  std::optional<double> percent;  // 1 decimal, half away from zero
  ReportStatus status = ReportStatus::kOk;
};

struct ImprovementReport {
  std::vector<ReportRow> rows;

  std::string to_csv() const;
  // Aligned table with the columns game, improvement, segmented score, raw
  // score.
  std::string to_text() const;
};

// 100 * segmented / raw, rounded half away from zero to one decimal.
double improvement_percent(double raw, double segmented);

// Comparable games sorted by percent descending (ties keep input order),
// then "not comparable" (raw score 0), then "no learning".
ImprovementReport improvement_report(const std::vector<ScorePair>& pairs);

std::string to_string(ReportStatus status);

}  // namespace segrl
