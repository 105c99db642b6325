#include "linkdrift/metrics.hpp"

#include <cmath>

#include "linkdrift/errors.hpp"
#include "linkdrift/io.hpp"

namespace linkdrift {

namespace {

void check_lengths(std::span<const double> pred, std::span<const double> actual, const char* what) {
  if (pred.size() != actual.size()) throw PreconditionError(std::string(what) + ": length mismatch");
  if (pred.empty()) throw PreconditionError(std::string(what) + ": empty input");
}

double pct_error(double p, double a, double eps) { return 100.0 * std::abs(p - a) / std::max(std::abs(a), eps); }

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> actual) {
  check_lengths(pred, actual, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - actual[i]) * (pred[i] - actual[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double mape(std::span<const double> pred, std::span<const double> actual, double eps) {
  check_lengths(pred, actual, "mape");
  if (!(eps > 0.0)) throw PreconditionError("mape: eps must be positive");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += pct_error(pred[i], actual[i], eps);
  return s / static_cast<double>(pred.size());
}

CumulativeCurves cumulative_curves(std::span<const double> pred, std::span<const double> actual, int horizon,
                                   double eps) {
  check_lengths(pred, actual, "cumulative_curves");
  if (horizon < 0 || pred.size() < static_cast<std::size_t>(horizon) + 1)
    throw PreconditionError("cumulative_curves: sequences do not cover the horizon");
  CumulativeCurves c;
  double sq = 0.0, pct = 0.0;
  for (int t = 0; t <= horizon; ++t) {
    const auto i = static_cast<std::size_t>(t);
    sq += (pred[i] - actual[i]) * (pred[i] - actual[i]);
    pct += pct_error(pred[i], actual[i], eps);
    c.rmse.push_back(std::sqrt(sq / (t + 1)));
    c.mape.push_back(pct / (t + 1));
  }
  return c;
}

void TConvConfig::validate() const {
  if (!(th > 0.0)) throw ConfigError("tconv th must be positive");
  if (x < 1) throw ConfigError("tconv x must be at least 1");
}

std::optional<int> tconv(std::span<const double> pred, std::span<const double> actual, const TConvConfig& cfg,
                         double eps) {
  cfg.validate();
  check_lengths(pred, actual, "tconv");
  if (pred.size() < static_cast<std::size_t>(cfg.x)) throw PreconditionError("tconv: horizon shorter than x");
  int run = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    run = pct_error(pred[i], actual[i], eps) <= cfg.th ? run + 1 : 0;
    if (run == cfg.x) return static_cast<int>(i) - cfg.x + 1;
  }
  return std::nullopt;
}

std::string to_string(ImpactClass c) { return c == ImpactClass::Highly ? "highly" : "moderately"; }

ImpactClass impact_class_from_string(const std::string& s) {
  if (s == "highly") return ImpactClass::Highly;
  if (s == "moderately") return ImpactClass::Moderately;
  throw ConfigError("unknown impact class '" + s + "'");
}

ImpactResult classify_impact(std::span<const double> series, int failure_step, double eps) {
  if (failure_step < kImpactWindow || series.size() < static_cast<std::size_t>(failure_step + kImpactWindow))
    throw PreconditionError("classify_impact: need 50 samples on both sides of the failure");
  ImpactResult r;
  for (int i = 0; i < kImpactWindow; ++i) {
    r.mean_pre += series[static_cast<std::size_t>(failure_step - kImpactWindow + i)];
    r.mean_post += series[static_cast<std::size_t>(failure_step + i)];
  }
  r.mean_pre /= kImpactWindow;
  r.mean_post /= kImpactWindow;
  r.change = std::abs(r.mean_post - r.mean_pre) / std::max(r.mean_pre, eps);
  r.cls = r.change > kImpactThreshold ? ImpactClass::Highly : ImpactClass::Moderately;
  return r;
}

ApproachResult evaluate_approach(const std::string& name, std::span<const double> pred,
                                 std::span<const double> actual, int horizon,
                                 std::span<const TConvConfig> tconv_cfgs, int tconv_horizon, double eps) {
  ApproachResult r;
  r.approach = name;
  r.curves = cumulative_curves(pred, actual, horizon, eps);
  const auto n = std::min(pred.size(), static_cast<std::size_t>(tconv_horizon) + 1);
  for (const auto& c : tconv_cfgs) r.tconv[{c.th, c.x}] = tconv(pred.first(n), actual.first(n), c, eps);
  return r;
}

std::string curves_csv(const EvalReport& r) {
  std::string out = "approach,step,cum_rmse,cum_mape\n";
  for (const auto& a : r.approaches)
    for (std::size_t t = 0; t < a.curves.rmse.size(); ++t)
      out += a.approach + "," + std::to_string(t) + "," + format_double(a.curves.rmse[t]) + "," +
             format_double(a.curves.mape[t]) + "\n";
  return out;
}

std::string tconv_csv(const EvalReport& r) {
  std::string out = "approach,th,x,tconv\n";
  for (const auto& a : r.approaches)
    for (const auto& [key, v] : a.tconv)
      out += a.approach + "," + format_double(key.first) + "," + std::to_string(key.second) + "," +
             (v ? std::to_string(*v) : std::string("not_converged")) + "\n";
  return out;
}

void write_curves_csv(const EvalReport& r, const std::filesystem::path& path) { write_text_file(path, curves_csv(r)); }
void write_tconv_csv(const EvalReport& r, const std::filesystem::path& path) { write_text_file(path, tconv_csv(r)); }

}  // namespace linkdrift
