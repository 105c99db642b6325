#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "linkdrift/forecast_common.hpp"

namespace linkdrift {

inline constexpr int kMlpHiddenWidth = 25;

/// MLP regressor p -> 25 (ReLU) -> 1 that is periodically partially fitted
/// on each completed batch of streamed observations (modified test-then-train:
/// every forecast uses the true previous observations).
class IncrementalMlp {
 public:
  IncrementalMlp() = default;

  /// Initial fit on the first `cfg.train_steps` samples; scaling is frozen
  /// afterwards. Returns the final training MSE in scaled units.
  double initial_fit(std::span<const double> series, const ForecasterConfig& cfg);

  /// Sets the refit batch size; clears any pending samples.
  void set_retrain_window(int samples);
  int retrain_window() const noexcept { return retrain_window_; }

  /// Pure forecast from `recent` (exactly `history` true observations, Gbps).
  double predict(std::span<const double> recent) const;

  /// Buffers (recent, actual); when the buffer reaches the retrain window runs
  /// one partial fit on exactly that batch and clears it. Returns true if a
  /// refit happened.
  bool observe(std::span<const double> recent, double actual);

  /// predict() followed by observe().
  double predict_then_buffer(std::span<const double> recent, double actual);

  bool fitted() const noexcept { return fitted_; }
  std::size_t refit_count() const noexcept { return refits_; }
  const std::vector<Window>& pending_batch() const noexcept { return buffer_; }
  const std::vector<double>& params() const noexcept { return params_; }
  const MinMaxScaler& scaler() const noexcept { return scaler_; }
  const ForecasterConfig& config() const noexcept { return cfg_; }
  const Adam& optimizer() const noexcept { return adam_; }

  std::string to_checkpoint() const;
  static IncrementalMlp from_checkpoint(const std::string& text);

 private:
  double batch_step(const std::vector<Window>& batch, std::size_t begin, std::size_t end, double lr);
  DenseStack stack() const;

  ForecasterConfig cfg_;
  MinMaxScaler scaler_;
  std::vector<double> params_;
  Adam adam_;
  std::vector<Window> buffer_;
  int retrain_window_ = 5;
  std::size_t refits_ = 0;
  bool fitted_ = false;
};

}  // namespace linkdrift
