#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "linkdrift/ltc.hpp"
#include "linkdrift/rng.hpp"

// Independent reference implementations used as oracles.
namespace linkdrift::testing {

// dx/dt = -(1/tau + f) x + f A
inline std::vector<double> ltc_derivative(const LtcCellView& c, std::span<const double> x,
                                          std::span<const double> in) {
  std::vector<double> f(x.size()), dx(x.size());
  c.gate(x, in, f);
  for (std::size_t i = 0; i < x.size(); ++i)
    dx[i] = -(1.0 / c.tau(static_cast<int>(i)) + f[i]) * x[i] + f[i] * c.a[i];
  return dx;
}

// Classic fourth-order Runge-Kutta with input held constant.
inline std::vector<double> rk4(const LtcCellView& c, std::vector<double> x, std::span<const double> in, double h,
                               int steps) {
  const std::size_t n = x.size();
  std::vector<double> tmp(n);
  for (int s = 0; s < steps; ++s) {
    const auto k1 = ltc_derivative(c, x, in);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    const auto k2 = ltc_derivative(c, tmp, in);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    const auto k3 = ltc_derivative(c, tmp, in);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    const auto k4 = ltc_derivative(c, tmp, in);
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return x;
}

inline LtcDims small_ltc_dims(int hidden) {
  LtcDims d;
  d.hidden = hidden;
  d.head = {3, 1};
  return d;
}

inline LtcNetwork random_cell(int hidden, std::uint64_t seed) {
  LtcNetwork net(small_ltc_dims(hidden));
  net.initialize(seed);
  Rng rng(seed + 17);
  for (double& a : net.a()) a = rng.uniform(-1.5, 1.5);
  for (double& b : net.bias()) b = rng.uniform(-1.0, 1.0);
  return net;
}

// Max abs deviation from the reference over a trajectory, one unit of time
// per input with `unfold` fused sub-steps.
inline double trajectory_error(const LtcNetwork& net, int unfold, const std::vector<double>& inputs) {
  LtcCellView c = net.cell();
  c.unfold_steps = unfold;
  c.dt = 1.0 / unfold;
  std::vector<double> x(static_cast<std::size_t>(c.hidden), 0.1), ref = x;
  double err = 0.0;
  for (double in : inputs) {
    const std::vector<double> i1{in};
    x = ltc_step(c, x, i1);
    ref = rk4(c, ref, i1, 1.0 / 6400.0, 6400);
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(x[i] - ref[i]));
  }
  return err;
}

inline double naive_rmse(const std::vector<double>& p, const std::vector<double>& a) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) s += static_cast<long double>(p[i] - a[i]) * (p[i] - a[i]);
  return static_cast<double>(std::sqrt(s / static_cast<long double>(p.size())));
}

inline double naive_mape(const std::vector<double>& p, const std::vector<double>& a, double eps) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - a[i]) / std::max(std::abs(a[i]), eps);
  return static_cast<double>(100.0L * s / static_cast<long double>(p.size()));
}

inline std::optional<int> naive_tconv(const std::vector<double>& p, const std::vector<double>& a, double th, int x,
                                      double eps) {
  const int n = static_cast<int>(p.size());
  for (int t = 0; t + x <= n; ++t) {
    bool ok = true;
    for (int i = t; i < t + x; ++i) {
      const auto k = static_cast<std::size_t>(i);
      ok = ok && 100.0 * std::abs(p[k] - a[k]) / std::max(std::abs(a[k]), eps) <= th;
    }
    if (ok) return t;
  }
  return std::nullopt;
}

}  // namespace linkdrift::testing
