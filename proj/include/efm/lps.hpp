#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace efm {

struct LinearModel {
  double beta0 = 0.0;
  double beta1 = 0.0;

  double predict(double x) const { return beta0 + beta1 * x; }
};

struct XYPoint {
  double x = 0.0;
  double d = 0.0;
};

struct SyntheticConfig {
  int n = 100;
  double beta0 = 1200.0;
  double beta1 = -10.0;
  double x_lo = 1.0;
  double x_hi = 50.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Ordinary least squares on (x, d).
LinearModel ls_fit(std::span<const XYPoint> points);

// Each row's regressors divided by its own response; the target becomes 1.
struct NormalizedPoint {
  double intercept_reg = 0.0;  // 1 / d
  double slope_reg = 0.0;      // x / d
};
std::vector<NormalizedPoint> instance_normalize(std::span<const XYPoint> points);

// Minimizes the squared percentage error by solving zero-intercept least
// squares on the normalized rows against a unit target.
LinearModel lps_fit(std::span<const XYPoint> points);

// d = beta0 + beta1 x + Gaussian noise; points with nonpositive responses are
// redrawn. Deterministic under the seed.
std::vector<XYPoint> generate_synthetic(const SyntheticConfig& cfg);

struct SweepRow {
  double sigma = 0.0;
  double ratio_indicator = 0.0;
  double mes_ls = 0.0;
  double mes_lps = 0.0;
  double mpes_ls = 0.0;
  double mpes_lps = 0.0;
  double under_ls = 0.0;
  double under_lps = 0.0;
};

// One generated dataset and both fits per sigma; each row derives its seed
// from the base config seed and the row index.
std::vector<SweepRow> sweep_sigma(std::span<const double> sigmas, const SyntheticConfig& base);

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path);

}  // namespace efm
