#include "segrl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace segrl {
namespace {

template <typename T>
std::string opt(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_integral_v<T>) {
    return std::to_string(*v);
  } else {
    return format_number(*v);
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

MetricsRow& MetricsLog::row_at(long global_step) {
  if (!rows_.empty()) {
    if (rows_.back().global_step == global_step) return rows_.back();
    if (rows_.back().global_step > global_step) {
      throw std::logic_error("metrics global_step must increase: " + std::to_string(global_step) + " after " +
                             std::to_string(rows_.back().global_step));
    }
  }
  rows_.push_back(MetricsRow{});
  rows_.back().global_step = global_step;
  return rows_.back();
}

std::vector<double> MetricsLog::episodic_returns() const {
  std::vector<double> out;
  for (const auto& r : rows_) {
    if (r.episodic_return) out.push_back(*r.episodic_return);
  }
  return out;
}

std::string MetricsLog::to_csv() const {
  std::ostringstream out;
  out << kMetricsHeader << '\n';
  for (const auto& r : rows_) {
    out << r.global_step << ',' << opt(r.episodic_return) << ',' << opt(r.episodic_length) << ','
        << format_number(r.sps) << ',' << opt(r.policy_loss) << ',' << opt(r.value_loss) << ',' << opt(r.entropy)
        << ',' << opt(r.approx_kl) << ',' << opt(r.clipfrac) << '\n';
  }
  return out.str();
}

void MetricsLog::write_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open metrics file " + path);
  f << to_csv();
  if (!f) throw std::runtime_error("failed writing metrics file " + path);
}

MetricsLog MetricsLog::read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open metrics file " + path);
  std::string line;
  std::getline(f, line);
  if (line != kMetricsHeader) throw std::runtime_error("unexpected metrics header in " + path);
  MetricsLog log;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 9) throw std::runtime_error("malformed metrics row: " + line);
    MetricsRow& r = log.row_at(std::stol(c[0]));
    r.episodic_return = parse_opt(c[1]);
    if (!c[2].empty()) r.episodic_length = std::stoi(c[2]);
    r.sps = std::stod(c[3]);
    r.policy_loss = parse_opt(c[4]);
    r.value_loss = parse_opt(c[5]);
    r.entropy = parse_opt(c[6]);
    r.approx_kl = parse_opt(c[7]);
    r.clipfrac = parse_opt(c[8]);
  }
  return log;
}

std::vector<double> ema_smooth(const std::vector<double>& series, double factor) {
  if (series.empty()) throw std::invalid_argument("ema_smooth: empty series");
  std::vector<double> out(series.size());
  out[0] = series[0];
  for (std::size_t t = 1; t < series.size(); ++t) out[t] = factor * out[t - 1] + (1.0 - factor) * series[t];
  return out;
}

double ema_end_result(const std::vector<double>& series, double factor) { return ema_smooth(series, factor).back(); }

double ema_stationary_std(double sample_std, double factor) {
  return sample_std * std::sqrt((1.0 - factor) / (1.0 + factor));
}

double ema_end_std(double sample_std, int n, double factor) {
  if (n < 1) throw std::invalid_argument("ema_end_std: n must be >= 1");
  double sq = std::pow(factor, 2.0 * (n - 1));
  for (int k = 0; k < n - 1; ++k) sq += std::pow((1.0 - factor) * std::pow(factor, k), 2.0);
  return sample_std * std::sqrt(sq);
}

}  // namespace segrl
