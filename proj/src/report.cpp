#include "segrl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace segrl {
namespace {

std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string opt_seconds(const std::optional<double>& s) {
  if (!s) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", *s);
  return buf;
}

int rank(ReportStatus s) {
  switch (s) {
    case ReportStatus::kOk: return 0;
    case ReportStatus::kNotComparable: return 1;
    case ReportStatus::kNoLearning: return 2;
  }
  return 3;
}

}  // namespace

std::string to_string(ReportStatus status) {
  switch (status) {
    case ReportStatus::kOk: return "ok";
    case ReportStatus::kNoLearning: return "no learning";
    case ReportStatus::kNotComparable: return "not comparable";
  }
  return "?";
}

double improvement_percent(double raw, double segmented) {
  const double pct = 100.0 * segmented / raw;
  return std::round(pct * 10.0) / 10.0;
}

ImprovementReport improvement_report(const std::vector<ScorePair>& pairs) {
  ImprovementReport report;
  for (const auto& p : pairs) {
    ReportRow row{p, std::nullopt, ReportStatus::kOk};
    if (p.no_learning) {
      row.status = ReportStatus::kNoLearning;
    } else if (p.raw == 0.0) {
      row.status = ReportStatus::kNotComparable;
    } else {
      row.percent = improvement_percent(p.raw, p.segmented);
    }
    report.rows.push_back(std::move(row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (rank(a.status) != rank(b.status)) return rank(a.status) < rank(b.status);
    if (a.percent && b.percent) return *a.percent > *b.percent;
    return false;
  });
  return report;
}

std::string ImprovementReport::to_csv() const {
  std::ostringstream out;
  out << "game,improvement_percent,segmented_score,raw_score,status,object_count,segmented_seconds,raw_seconds\n";
  for (const auto& r : rows) {
    out << r.scores.game << ',' << (r.percent ? fixed1(*r.percent) : "") << ',' << exact(r.scores.segmented) << ','
        << exact(r.scores.raw) << ',' << to_string(r.status) << ',' << r.scores.object_count << ','
        << opt_seconds(r.scores.segmented_seconds) << ',' << opt_seconds(r.scores.raw_seconds) << '\n';
  }
  return out.str();
}

std::string ImprovementReport::to_text() const {
  const std::vector<std::string> header{"Game", "Game score improvement", "Segmented agent score", "Raw pixel agent score"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    if (r.status == ReportStatus::kOk) {
      cells.push_back({r.scores.game, fixed1(*r.percent) + "%", fixed1(r.scores.segmented), fixed1(r.scores.raw)});
    } else {
      cells.push_back({r.scores.game, to_string(r.status), "", ""});
    }
  }
  std::vector<std::size_t> width;
  for (const auto& h : header) width.push_back(h.size());
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  const auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << " | ";
      const std::size_t pad = width[c] - row[c].size();
      if (c == 0) {
        out << row[c] << std::string(pad, ' ');
      } else {
        out << std::string(pad, ' ') << row[c];
      }
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 3 * (width.size() - 1), '-') << '\n';
  for (const auto& row : cells) line(row);
  return out.str();
}

}  // namespace segrl
