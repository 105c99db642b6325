#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace linkdrift {

struct ForecasterConfig {
  int history = 3;  // p: observations per input window
  int train_steps = 6000;
  int epochs = 50;
  double learning_rate = 1e-2;
  double lr_decay = 0.5;
  int lr_decay_every = 20;
  double clip_norm = 1.0;
  int batch_size = 32;
  std::uint64_t seed = 7;
  // Incremental learner only.
  int partial_fit_epochs = 5;
  double partial_fit_learning_rate = 1e-3;

  void validate() const;
  double learning_rate_at(int epoch) const;
};

/// Min-max scaling fitted on the training window. Values outside the fitted
/// range map outside [0, 1]; nothing is clipped.
struct MinMaxScaler {
  double lo = 0.0;
  double hi = 1.0;

  static MinMaxScaler fit(std::span<const double> values);
  double range() const noexcept { return hi - lo; }
  double transform(double v) const noexcept { return (v - lo) / range(); }
  double inverse(double v) const noexcept { return v * range() + lo; }
};

/// One supervised pair built from a sliding window over a series.
struct Window {
  std::vector<double> inputs;  // scaled, oldest first
  double target = 0.0;         // scaled
};

/// Windows of length `history` slid by one over values[0, end); targets are
/// values[history .. end).
std::vector<Window> make_windows(std::span<const double> values, int history, int end,
                                 const MinMaxScaler& scaler);

/// Adam over a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<double> params, std::span<const double> grad, double learning_rate);

  std::size_t steps() const noexcept { return t_; }
  const std::vector<double>& first_moment() const noexcept { return m_; }
  const std::vector<double>& second_moment() const noexcept { return v_; }
  void restore(std::vector<double> m, std::vector<double> v, std::size_t t);

 private:
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::size_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Rescales `grad` in place so its L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
double clip_global_norm(std::span<double> grad, double max_norm);

/// Fully connected layer stack with linear or ReLU hidden activations stored
/// in a caller-owned flat parameter vector. Layout per layer: W (out x in,
/// row-major) followed by b (out).
struct DenseStack {
  std::vector<int> widths;  // widths[0] = input size
  bool relu_hidden = false;

  std::size_t param_count() const;
  /// Activations per layer (including the input) are written to `acts`.
  double forward(std::span<const double> params, std::span<const double> input,
                 std::vector<std::vector<double>>& acts) const;
  /// Accumulates parameter gradients into `grad` and returns d loss / d input.
  std::vector<double> backward(std::span<const double> params, const std::vector<std::vector<double>>& acts,
                               double dout, std::span<double> grad) const;
};

}  // namespace linkdrift
