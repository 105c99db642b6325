#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "linkdrift/forecast_common.hpp"

namespace linkdrift {

/// Shape of a liquid time-constant network: an LTC layer followed by a linear
/// dense head applied to tanh of the hidden state.
struct LtcDims {
  int inputs = 1;
  int hidden = 30;
  std::vector<int> head{10, 5, 1};
  int unfold_steps = 6;
  double dt = 1.0 / 6.0;
};

/// Read-only view of the cell parameters.
///
/// The state obeys dx/dt = -(1/tau + f) x + f A with
/// f = sigmoid(W_rec x + W_in I + b), integrated by the fused semi-implicit
/// step x <- (x + dt f A) / (1 + dt (1/tau + f)). tau = softplus(tau_raw) + 0.05.
struct LtcCellView {
  int inputs = 0;
  int hidden = 0;
  int unfold_steps = 1;
  double dt = 1.0;
  std::span<const double> w_in;   // hidden x inputs
  std::span<const double> w_rec;  // hidden x hidden
  std::span<const double> bias;   // hidden
  std::span<const double> tau_raw;
  std::span<const double> a;

  double tau(int i) const;
  /// Gate f(x, I) in (0, 1)^hidden.
  void gate(std::span<const double> x, std::span<const double> input, std::span<double> f) const;
};

inline constexpr double kTauFloor = 0.05;
double softplus(double x);
/// Inverse of softplus(raw) + kTauFloor.
double tau_to_raw(double tau);

/// Advances `x` by `cell.unfold_steps` fused sub-steps with `input` held
/// constant. Throws NumericalError on non-finite state.
std::vector<double> ltc_step(const LtcCellView& cell, std::span<const double> x, std::span<const double> input);

/// Records what backward() needs from one forward pass.
struct LtcTape {
  std::vector<double> inputs;          // window, flattened time-major
  std::vector<std::vector<double>> x;  // state before each sub-step
  std::vector<std::vector<double>> f;  // gate at each sub-step
  std::vector<double> final_state;
  std::vector<std::vector<double>> head_acts;
};

/// LTC layer + dense head over a flat parameter vector.
class LtcNetwork {
 public:
  LtcNetwork() = default;
  explicit LtcNetwork(LtcDims dims);

  const LtcDims& dims() const noexcept { return dims_; }
  std::size_t param_count() const noexcept { return params_.size(); }
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  void set_params(std::vector<double> p);

  /// Random initialization; deterministic in `seed`.
  void initialize(std::uint64_t seed);

  LtcCellView cell() const;
  /// Mutable spans for the cell blocks (tests build special cells this way).
  std::span<double> w_in() { return block(0); }
  std::span<double> w_rec() { return block(1); }
  std::span<double> bias() { return block(2); }
  std::span<double> tau_raw() { return block(3); }
  std::span<double> a() { return block(4); }

  /// Runs the cell over `window` (time-major, inputs per step) starting from
  /// `state`, which is advanced in place, and returns the scalar output.
  double forward(std::span<const double> window, std::vector<double>& state, LtcTape* tape = nullptr) const;

  /// Accumulates d loss / d params given d loss / d output. The initial state
  /// is treated as a constant.
  void backward(const LtcTape& tape, double dout, std::span<double> grad) const;

 private:
  std::span<double> block(int i);
  std::span<const double> block(int i) const;

  LtcDims dims_;
  DenseStack head_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;  // 5 cell blocks, then head start
};

/// Mean squared error of `net` on windows with independent initial states and
/// its gradient.
double ltc_batch_loss(const LtcNetwork& net, std::span<const std::vector<double>> windows,
                      std::span<const std::vector<double>> initial_states, std::span<const double> targets,
                      std::vector<double>* grad);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

/// Central finite differences (step 1e-5) against BPTT on a random batch.
/// If `zero_loss`, targets are set to the network's own outputs.
GradientCheckResult ltc_gradient_check(const LtcDims& dims, int history, std::uint64_t seed,
                                       bool zero_loss = false);

/// The forecaster: LTC(30) -> dense(10) -> dense(5) -> dense(1) over p-step
/// windows of a scalar series, with persistent hidden state for streaming.
class LtcModel {
 public:
  LtcModel();
  explicit LtcModel(LtcDims dims);

  /// Fits scaling on the first `cfg.train_steps` values and trains by BPTT
  /// with Adam. Windows are visited in order and each starts from the previous
  /// window's final state, exactly as in streaming inference. Returns the final
  /// training MSE (scaled units), measured by a frozen-parameter replay that
  /// also leaves the hidden state ready for deployment.
  double train(std::span<const double> series, const ForecasterConfig& cfg);

  /// One-step forecast from exactly `history` most recent observations (Gbps).
  /// Advances the hidden state; never touches parameters.
  double predict_online(std::span<const double> recent);

  bool trained() const noexcept { return trained_; }
  void reset_state();
  const std::vector<double>& state() const noexcept { return state_; }
  const LtcNetwork& network() const noexcept { return net_; }
  LtcNetwork& network() noexcept { return net_; }
  const MinMaxScaler& scaler() const noexcept { return scaler_; }
  const ForecasterConfig& config() const noexcept { return cfg_; }
  double final_train_mse() const noexcept { return final_mse_; }
  /// Denormalized predictions of the frozen replay over the training windows.
  const std::vector<double>& training_predictions() const noexcept { return train_predictions_; }
  const std::vector<double>& loss_history() const noexcept { return loss_history_; }

  std::string to_checkpoint() const;
  static LtcModel from_checkpoint(const std::string& text);

 private:
  LtcNetwork net_;
  MinMaxScaler scaler_;
  ForecasterConfig cfg_;
  std::vector<double> state_;
  bool trained_ = false;
  double final_mse_ = 0.0;
  std::vector<double> train_predictions_;
  std::vector<double> loss_history_;
};

}  // namespace linkdrift
