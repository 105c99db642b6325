#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace linkdrift {

inline constexpr double kDefaultEpsGbps = 1.0;
inline constexpr double kImpactThreshold = 0.80;
inline constexpr int kImpactWindow = 50;

double rmse(std::span<const double> pred, std::span<const double> actual);
/// Mean absolute percentage error in percent; denominators are floored at eps.
double mape(std::span<const double> pred, std::span<const double> actual, double eps = kDefaultEpsGbps);

struct CumulativeCurves {
  std::vector<double> rmse;  // index t: over steps 0..t
  std::vector<double> mape;
};

/// Cumulative curves over indices 0..horizon (horizon + 1 points).
CumulativeCurves cumulative_curves(std::span<const double> pred, std::span<const double> actual, int horizon,
                                   double eps = kDefaultEpsGbps);

struct TConvConfig {
  double th = 10.0;
  int x = 5;
  void validate() const;
};

/// First index starting a run of `cfg.x` predictions all within `cfg.th`
/// percent; nullopt if none within the sequences.
std::optional<int> tconv(std::span<const double> pred, std::span<const double> actual, const TConvConfig& cfg,
                         double eps = kDefaultEpsGbps);

enum class ImpactClass { Highly, Moderately };
std::string to_string(ImpactClass c);
ImpactClass impact_class_from_string(const std::string& s);

struct ImpactResult {
  ImpactClass cls = ImpactClass::Moderately;
  double mean_pre = 0.0;
  double mean_post = 0.0;
  double change = 0.0;  // |post - pre| / max(pre, eps)
};

/// Compares the 50 samples before `failure_step` with the 50 starting at it.
ImpactResult classify_impact(std::span<const double> series, int failure_step, double eps = kDefaultEpsGbps);

struct ApproachResult {
  std::string approach;
  CumulativeCurves curves;
  std::map<std::pair<double, int>, std::optional<int>> tconv;  // (th, x)
};

struct EvalReport {
  std::string scenario;
  ImpactResult impact;
  std::vector<ApproachResult> approaches;
};

/// Evaluates aligned post-failure streams (index 0 = failure step).
ApproachResult evaluate_approach(const std::string& name, std::span<const double> pred,
                                 std::span<const double> actual, int horizon,
                                 std::span<const TConvConfig> tconv_cfgs, int tconv_horizon,
                                 double eps = kDefaultEpsGbps);

std::string curves_csv(const EvalReport& r);
std::string tconv_csv(const EvalReport& r);
void write_curves_csv(const EvalReport& r, const std::filesystem::path& path);
void write_tconv_csv(const EvalReport& r, const std::filesystem::path& path);

}  // namespace linkdrift
