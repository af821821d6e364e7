#pragma once

#include <optional>
#include <string>
#include <vector>

namespace segrl {

// One CSV row. Episode fields are set on rows where an episode finished,
// update fields on rows where a PPO update ran; both when they coincide.
struct MetricsRow {
  long global_step = 0;
  std::optional<double> episodic_return;
  std::optional<int> episodic_length;
  double sps = 0.0;
  std::optional<double> policy_loss;
  std::optional<double> value_loss;
  std::optional<double> entropy;
  std::optional<double> approx_kl;
  std::optional<double> clipfrac;
};

inline constexpr const char* kMetricsHeader =
    "global_step,episodic_return,episodic_length,sps,policy_loss,value_loss,entropy,approx_kl,clipfrac";

class MetricsLog {
 public:
  // Merges into the last row when global_step matches it; otherwise appends.
  // Throws if global_step would decrease.
  MetricsRow& row_at(long global_step);

  const std::vector<MetricsRow>& rows() const { return rows_; }
  std::vector<double> episodic_returns() const;

  std::string to_csv() const;
  void write_csv(const std::string& path) const;
  static MetricsLog read_csv(const std::string& path);

 private:
  std::vector<MetricsRow> rows_;
};

// s_0 = x_0, s_t = factor * s_{t-1} + (1 - factor) * x_t.
std::vector<double> ema_smooth(const std::vector<double>& series, double factor = 0.99);
double ema_end_result(const std::vector<double>& series, double factor = 0.99);

// Stationary standard deviation of an EMA of i.i.d. samples with standard
// deviation sample_std: sample_std * sqrt((1 - f) / (1 + f)).
double ema_stationary_std(double sample_std, double factor = 0.99);

// Standard deviation of ema_end_result over n i.i.d. samples (s_0 = x_0):
// sample_std * sqrt(f^(2(n-1)) + sum_{k<n-1} ((1-f) f^k)^2).
double ema_end_std(double sample_std, int n, double factor = 0.99);

std::string format_number(double v);

}  // namespace segrl
