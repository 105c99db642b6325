#include "linkdrift/forecast_common.hpp"

#include <algorithm>
#include <cmath>

#include "linkdrift/errors.hpp"

namespace linkdrift {

void ForecasterConfig::validate() const {
  if (history < 1) throw ConfigError("forecaster.history must be at least 1");
  if (train_steps <= history) throw ConfigError("forecaster.train_steps must exceed history");
  if (epochs < 1) throw ConfigError("forecaster.epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("forecaster.learning_rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("forecaster.lr_decay must lie in (0, 1]");
  if (lr_decay_every < 1) throw ConfigError("forecaster.lr_decay_every must be at least 1");
  if (!(clip_norm > 0.0)) throw ConfigError("forecaster.clip_norm must be positive");
  if (batch_size < 1) throw ConfigError("forecaster.batch_size must be at least 1");
  if (partial_fit_epochs < 1) throw ConfigError("forecaster.partial_fit_epochs must be at least 1");
  if (!(partial_fit_learning_rate > 0.0))
    throw ConfigError("forecaster.partial_fit_learning_rate must be positive");
}

double ForecasterConfig::learning_rate_at(int epoch) const {
  return learning_rate * std::pow(lr_decay, epoch / lr_decay_every);
}

MinMaxScaler MinMaxScaler::fit(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("MinMaxScaler::fit: empty input");
  auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  MinMaxScaler s{*mn, *mx};
  // A flat window would divide by zero; keep the scale of the level instead.
  if (!(s.hi - s.lo > 1e-9 * std::max(1.0, std::abs(s.hi)))) s.hi = s.lo + std::max(1.0, std::abs(s.lo));
  return s;
}

std::vector<Window> make_windows(std::span<const double> values, int history, int end,
                                 const MinMaxScaler& scaler) {
  if (end > static_cast<int>(values.size())) throw PreconditionError("make_windows: end past series");
  std::vector<Window> out;
  for (int t = history; t < end; ++t) {
    Window w;
    w.inputs.reserve(static_cast<std::size_t>(history));
    for (int i = t - history; i < t; ++i) w.inputs.push_back(scaler.transform(values[static_cast<std::size_t>(i)]));
    w.target = scaler.transform(values[static_cast<std::size_t>(t)]);
    out.push_back(std::move(w));
  }
  return out;
}

Adam::Adam(std::size_t params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(params, 0.0), v_(params, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad, double learning_rate) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void Adam::restore(std::vector<double> m, std::vector<double> v, std::size_t t) {
  if (m.size() != v.size()) throw PreconditionError("Adam::restore: moment sizes differ");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

double clip_global_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

std::size_t DenseStack::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 1; l < widths.size(); ++l)
    n += static_cast<std::size_t>(widths[l]) * static_cast<std::size_t>(widths[l - 1] + 1);
  return n;
}

double DenseStack::forward(std::span<const double> params, std::span<const double> input,
                           std::vector<std::vector<double>>& acts) const {
  acts.resize(widths.size());
  acts[0].assign(input.begin(), input.end());
  std::size_t off = 0;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    const auto in = static_cast<std::size_t>(widths[l - 1]);
    const auto out = static_cast<std::size_t>(widths[l]);
    const double* w = params.data() + off;
    const double* b = w + in * out;
    auto& a = acts[l];
    a.assign(out, 0.0);
    const bool hidden = l + 1 < widths.size();
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      for (std::size_t i = 0; i < in; ++i) z += w[o * in + i] * acts[l - 1][i];
      a[o] = (hidden && relu_hidden) ? std::max(0.0, z) : z;
    }
    off += in * out + out;
  }
  return acts.back()[0];
}

std::vector<double> DenseStack::backward(std::span<const double> params,
                                         const std::vector<std::vector<double>>& acts, double dout,
                                         std::span<double> grad) const {
  std::vector<std::size_t> offsets(widths.size(), 0);
  for (std::size_t l = 1; l < widths.size(); ++l)
    offsets[l] = (l == 1 ? 0 : offsets[l - 1] + static_cast<std::size_t>(widths[l - 2] + 1) *
                                                    static_cast<std::size_t>(widths[l - 1]));
  std::vector<double> delta{dout};
  for (std::size_t l = widths.size() - 1; l >= 1; --l) {
    const auto in = static_cast<std::size_t>(widths[l - 1]);
    const auto out = static_cast<std::size_t>(widths[l]);
    const double* w = params.data() + offsets[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + in * out;
    const bool hidden = l + 1 < widths.size();
    if (hidden && relu_hidden)
      for (std::size_t o = 0; o < out; ++o)
        if (acts[l][o] <= 0.0) delta[o] = 0.0;
    std::vector<double> prev(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      for (std::size_t i = 0; i < in; ++i) {
        gw[o * in + i] += d * acts[l - 1][i];
        prev[i] += d * w[o * in + i];
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

}  // namespace linkdrift
