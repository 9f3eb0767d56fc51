#include "efm/lps.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "efm/errors.hpp"
#include "efm/metrics.hpp"
#include "efm/rng.hpp"

namespace efm {

void SyntheticConfig::validate() const {
  if (n < 2) throw ConfigError("synthetic sample needs n >= 2");
  if (sigma < 0.0) throw ConfigError("noise sigma must be nonnegative");
  if (!(x_hi > x_lo)) throw ConfigError("x range must be non-degenerate");
}

LinearModel ls_fit(std::span<const XYPoint> points) {
  if (points.size() < 2) throw DataError("least squares needs at least two points");
  double sx = 0.0, sd = 0.0, sxx = 0.0, sxd = 0.0;
  for (const XYPoint& p : points) {
    sx += p.x;
    sd += p.d;
    sxx += p.x * p.x;
    sxd += p.x * p.d;
  }
  double n = static_cast<double>(points.size());
  double det = n * sxx - sx * sx;
  if (det == 0.0) throw DataError("degenerate design: all x values equal");
  LinearModel model;
  model.beta1 = (n * sxd - sx * sd) / det;
  model.beta0 = (sd - model.beta1 * sx) / n;
  return model;
}

std::vector<NormalizedPoint> instance_normalize(std::span<const XYPoint> points) {
  std::vector<NormalizedPoint> out;
  out.reserve(points.size());
  for (const XYPoint& p : points) {
    if (!(p.d > 0.0)) throw DataError("instance normalization needs positive responses");
    out.push_back({1.0 / p.d, p.x / p.d});
  }
  return out;
}

LinearModel lps_fit(std::span<const XYPoint> points) {
  if (points.size() < 2) throw DataError("least percentage squares needs at least two points");
  std::vector<NormalizedPoint> rows = instance_normalize(points);

  // Normal equations of the two-regressor zero-intercept system with target 1.
  double saa = 0.0, sab = 0.0, sbb = 0.0, sa = 0.0, sb = 0.0;
  for (const NormalizedPoint& r : rows) {
    saa += r.intercept_reg * r.intercept_reg;
    sab += r.intercept_reg * r.slope_reg;
    sbb += r.slope_reg * r.slope_reg;
    sa += r.intercept_reg;
    sb += r.slope_reg;
  }
  double det = saa * sbb - sab * sab;
  if (det == 0.0) throw DataError("degenerate normalized design");
  LinearModel model;
  model.beta0 = (sbb * sa - sab * sb) / det;
  model.beta1 = (saa * sb - sab * sa) / det;
  return model;
}

std::vector<XYPoint> generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  DeterministicRng rng(cfg.seed);
  std::vector<XYPoint> points;
  points.reserve(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) {
    XYPoint p;
    do {
      p.x = rng.uniform(cfg.x_lo, cfg.x_hi);
      p.d = cfg.beta0 + cfg.beta1 * p.x + rng.gaussian(cfg.sigma);
    } while (!(p.d > 0.0));
    points.push_back(p);
  }
  return points;
}

std::vector<SweepRow> sweep_sigma(std::span<const double> sigmas, const SyntheticConfig& base) {
  if (sigmas.empty()) throw ConfigError("sigma sweep needs at least one value");
  std::vector<SweepRow> rows;
  rows.reserve(sigmas.size());
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    SyntheticConfig cfg = base;
    cfg.sigma = sigmas[i];
    cfg.seed = base.seed + i;
    std::vector<XYPoint> points = generate_synthetic(cfg);

    LinearModel ls = ls_fit(points);
    LinearModel lps = lps_fit(points);
    std::vector<double> actuals, fit_ls, fit_lps;
    actuals.reserve(points.size());
    for (const XYPoint& p : points) {
      actuals.push_back(p.d);
      fit_ls.push_back(ls.predict(p.x));
      fit_lps.push_back(lps.predict(p.x));
    }
    TrainingDiagnostics diag_ls = diagnostics(fit_ls, actuals);
    TrainingDiagnostics diag_lps = diagnostics(fit_lps, actuals);

    SweepRow row;
    row.sigma = cfg.sigma;
    row.ratio_indicator = diag_ls.ratio_indicator;
    row.mes_ls = diag_ls.mes;
    row.mes_lps = diag_lps.mes;
    row.mpes_ls = diag_ls.mpes;
    row.mpes_lps = diag_lps.mpes;
    row.under_ls = diag_ls.underestimation_ratio;
    row.under_lps = diag_lps.underestimation_ratio;
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open sweep CSV for writing: " + path.string());
  out << "sigma,ratio_indicator,MES_ls,MES_lps,MPES_ls,MPES_lps,under_ls,under_lps\n";
  char buf[220];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.sigma,
                  r.ratio_indicator, r.mes_ls, r.mes_lps, r.mpes_ls, r.mpes_lps, r.under_ls,
                  r.under_lps);
    out << buf;
  }
}

}  // namespace efm
