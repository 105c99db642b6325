#include "linkdrift/ltc.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "linkdrift/errors.hpp"
#include "linkdrift/rng.hpp"

namespace linkdrift {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Gradients below this magnitude are compared in absolute terms; at a 1e-5
// step the central difference cannot resolve them any better.
constexpr double kGradCheckFloor = 1e-6;

}  // namespace

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double tau_to_raw(double tau) {
  const double y = tau - kTauFloor;
  if (!(y > 0.0)) throw PreconditionError("tau must exceed the floor");
  return y > 30.0 ? y : std::log(std::expm1(y));
}

double LtcCellView::tau(int i) const { return softplus(tau_raw[static_cast<std::size_t>(i)]) + kTauFloor; }

void LtcCellView::gate(std::span<const double> x, std::span<const double> input, std::span<double> f) const {
  const auto n = static_cast<std::size_t>(hidden);
  const auto m = static_cast<std::size_t>(inputs);
  for (std::size_t i = 0; i < n; ++i) {
    double z = bias[i];
    const double* wr = w_rec.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) z += wr[j] * x[j];
    const double* wi = w_in.data() + i * m;
    for (std::size_t k = 0; k < m; ++k) z += wi[k] * input[k];
    f[i] = sigmoid(z);
  }
}

std::vector<double> ltc_step(const LtcCellView& cell, std::span<const double> x, std::span<const double> input) {
  if (x.size() != static_cast<std::size_t>(cell.hidden) || input.size() != static_cast<std::size_t>(cell.inputs))
    throw PreconditionError("ltc_step: dimension mismatch");
  std::vector<double> state(x.begin(), x.end());
  std::vector<double> f(state.size());
  for (int k = 0; k < cell.unfold_steps; ++k) {
    cell.gate(state, input, f);
    for (std::size_t i = 0; i < state.size(); ++i) {
      const double inv_tau = 1.0 / cell.tau(static_cast<int>(i));
      state[i] = (state[i] + cell.dt * f[i] * cell.a[i]) / (1.0 + cell.dt * (inv_tau + f[i]));
      if (!std::isfinite(state[i])) throw NumericalError("ltc_step: non-finite state");
    }
  }
  return state;
}

LtcNetwork::LtcNetwork(LtcDims dims) : dims_(std::move(dims)) {
  if (dims_.inputs < 1 || dims_.hidden < 1 || dims_.unfold_steps < 1 || !(dims_.dt > 0.0))
    throw ConfigError("invalid LTC dimensions");
  if (dims_.head.empty() || dims_.head.back() != 1) throw ConfigError("LTC head must end in a single output");
  head_.widths.push_back(dims_.hidden);
  head_.widths.insert(head_.widths.end(), dims_.head.begin(), dims_.head.end());
  head_.relu_hidden = false;
  const auto n = static_cast<std::size_t>(dims_.hidden);
  const auto m = static_cast<std::size_t>(dims_.inputs);
  const std::size_t sizes[5] = {n * m, n * n, n, n, n};
  std::size_t off = 0;
  for (std::size_t s : sizes) {
    offsets_.push_back(off);
    off += s;
  }
  offsets_.push_back(off);
  params_.assign(off + head_.param_count(), 0.0);
}

void LtcNetwork::set_params(std::vector<double> p) {
  if (p.size() != params_.size()) throw PreconditionError("LtcNetwork::set_params: size mismatch");
  params_ = std::move(p);
}

std::span<double> LtcNetwork::block(int i) {
  const auto b = static_cast<std::size_t>(i);
  return std::span<double>(params_).subspan(offsets_[b], offsets_[b + 1] - offsets_[b]);
}

std::span<const double> LtcNetwork::block(int i) const {
  const auto b = static_cast<std::size_t>(i);
  return std::span<const double>(params_).subspan(offsets_[b], offsets_[b + 1] - offsets_[b]);
}

void LtcNetwork::initialize(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x4C5443));
  const double n = dims_.hidden;
  for (double& w : w_in()) w = rng.uniform(-1.0, 1.0);
  for (double& w : w_rec()) w = rng.uniform(-1.0, 1.0) / std::sqrt(n);
  for (double& b : bias()) b = 0.0;
  const double raw = tau_to_raw(1.0);
  for (double& t : tau_raw()) t = raw;
  for (double& a : a()) a = rng.uniform(-1.0, 1.0);
  std::size_t off = offsets_.back();
  for (std::size_t l = 1; l < head_.widths.size(); ++l) {
    const auto in = static_cast<std::size_t>(head_.widths[l - 1]);
    const auto out = static_cast<std::size_t>(head_.widths[l]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < in * out; ++i) params_[off + i] = rng.uniform(-limit, limit);
    for (std::size_t i = 0; i < out; ++i) params_[off + in * out + i] = 0.0;
    off += in * out + out;
  }
}

LtcCellView LtcNetwork::cell() const {
  return {dims_.inputs, dims_.hidden, dims_.unfold_steps, dims_.dt, block(0), block(1), block(2), block(3), block(4)};
}

double LtcNetwork::forward(std::span<const double> window, std::vector<double>& state, LtcTape* tape) const {
  const auto n = static_cast<std::size_t>(dims_.hidden);
  const auto m = static_cast<std::size_t>(dims_.inputs);
  if (window.size() % m != 0 || window.empty()) throw PreconditionError("LtcNetwork::forward: bad window size");
  if (state.size() != n) state.assign(n, 0.0);
  const LtcCellView c = cell();
  std::vector<double> inv_tau(n);
  for (std::size_t i = 0; i < n; ++i) inv_tau[i] = 1.0 / c.tau(static_cast<int>(i));

  const std::size_t samples = window.size() / m;
  const std::size_t substeps = samples * static_cast<std::size_t>(dims_.unfold_steps);
  if (tape) {
    tape->inputs.assign(window.begin(), window.end());
    tape->x.resize(substeps);
    tape->f.resize(substeps);
  }
  std::vector<double> f_local(n);
  std::size_t k = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto input = window.subspan(s * m, m);
    for (int u = 0; u < dims_.unfold_steps; ++u, ++k) {
      std::vector<double>& f = tape ? tape->f[k] : f_local;
      f.resize(n);
      if (tape) tape->x[k] = state;
      c.gate(state, input, f);
      for (std::size_t i = 0; i < n; ++i)
        state[i] = (state[i] + c.dt * f[i] * c.a[i]) / (1.0 + c.dt * (inv_tau[i] + f[i]));
    }
  }
  for (double v : state)
    if (!std::isfinite(v)) throw NumericalError("LTC forward: non-finite state");

  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = std::tanh(state[i]);
  std::vector<std::vector<double>> local_acts;
  auto& acts = tape ? tape->head_acts : local_acts;
  const double y = head_.forward(std::span<const double>(params_).subspan(offsets_.back()), h, acts);
  if (tape) tape->final_state = state;
  if (!std::isfinite(y)) throw NumericalError("LTC forward: non-finite output");
  return y;
}

void LtcNetwork::backward(const LtcTape& tape, double dout, std::span<double> grad) const {
  const auto n = static_cast<std::size_t>(dims_.hidden);
  const auto m = static_cast<std::size_t>(dims_.inputs);
  const auto head_params = std::span<const double>(params_).subspan(offsets_.back());
  const std::vector<double> dh = head_.backward(head_params, tape.head_acts, dout, grad.subspan(offsets_.back()));

  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::tanh(tape.final_state[i]);
    g[i] = dh[i] * (1.0 - t * t);
  }

  const LtcCellView c = cell();
  double* gw_in = grad.data() + offsets_[0];
  double* gw_rec = grad.data() + offsets_[1];
  double* gb = grad.data() + offsets_[2];
  double* gtau = grad.data() + offsets_[3];
  double* ga = grad.data() + offsets_[4];
  std::vector<double> inv_tau(n), dtau_draw(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_tau[i] = 1.0 / c.tau(static_cast<int>(i));
    dtau_draw[i] = sigmoid(c.tau_raw[i]);  // d softplus / d raw
  }

  std::vector<double> dz(n), dx(n);
  const std::size_t substeps = tape.x.size();
  const auto unfold = static_cast<std::size_t>(dims_.unfold_steps);
  for (std::size_t kk = substeps; kk-- > 0;) {
    const auto& x = tape.x[kk];
    const auto& f = tape.f[kk];
    const double* input = tape.inputs.data() + (kk / unfold) * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double den = 1.0 + c.dt * (inv_tau[i] + f[i]);
      const double num = x[i] + c.dt * f[i] * c.a[i];
      const double xn = num / den;
      const double dnum = g[i] / den;
      const double dden = -g[i] * xn / den;
      ga[i] += dnum * c.dt * f[i];
      const double dinv_tau = dden * c.dt;
      gtau[i] += dinv_tau * (-inv_tau[i] * inv_tau[i]) * dtau_draw[i];
      const double df = dnum * c.dt * c.a[i] + dden * c.dt;
      dz[i] = df * f[i] * (1.0 - f[i]);
      dx[i] = dnum;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double d = dz[i];
      gb[i] += d;
      double* gwr = gw_rec + i * n;
      const double* wr = c.w_rec.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        gwr[j] += d * x[j];
        dx[j] += wr[j] * d;
      }
      for (std::size_t q = 0; q < m; ++q) gw_in[i * m + q] += d * input[q];
    }
    g.swap(dx);
  }
}

double ltc_batch_loss(const LtcNetwork& net, std::span<const std::vector<double>> windows,
                      std::span<const std::vector<double>> initial_states, std::span<const double> targets,
                      std::vector<double>* grad) {
  if (windows.size() != targets.size() || windows.size() != initial_states.size() || windows.empty())
    throw PreconditionError("ltc_batch_loss: batch size mismatch");
  if (grad) grad->assign(net.param_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(windows.size());
  double loss = 0.0;
  LtcTape tape;
  for (std::size_t b = 0; b < windows.size(); ++b) {
    std::vector<double> state = initial_states[b];
    const double y = net.forward(windows[b], state, grad ? &tape : nullptr);
    const double err = y - targets[b];
    loss += err * err * scale;
    if (grad) net.backward(tape, 2.0 * err * scale, *grad);
  }
  return loss;
}

GradientCheckResult ltc_gradient_check(const LtcDims& dims, int history, std::uint64_t seed, bool zero_loss) {
  LtcNetwork net(dims);
  net.initialize(seed);
  Rng rng(derive_seed(seed, 0x47434B));
  // Spread the cell parameters so every block has non-trivial gradients.
  for (double& b : net.bias()) b = rng.uniform(-0.5, 0.5);
  for (double& t : net.tau_raw()) t = rng.uniform(-1.0, 1.0);

  constexpr int kBatch = 4;
  std::vector<std::vector<double>> windows(kBatch), states(kBatch);
  std::vector<double> targets(kBatch);
  for (int b = 0; b < kBatch; ++b) {
    for (int i = 0; i < history * dims.inputs; ++i) windows[b].push_back(rng.uniform());
    for (int i = 0; i < dims.hidden; ++i) states[b].push_back(rng.uniform(-0.5, 0.5));
    targets[b] = rng.uniform();
  }
  if (zero_loss) {
    for (int b = 0; b < kBatch; ++b) {
      auto s = states[b];
      targets[b] = net.forward(windows[b], s);
    }
  }

  GradientCheckResult out;
  ltc_batch_loss(net, windows, states, targets, &out.analytic);
  constexpr double h = 1e-5;
  out.numeric.resize(net.param_count());
  for (std::size_t i = 0; i < net.param_count(); ++i) {
    const double orig = net.params()[i];
    net.params()[i] = orig + h;
    const double up = ltc_batch_loss(net, windows, states, targets, nullptr);
    net.params()[i] = orig - h;
    const double down = ltc_batch_loss(net, windows, states, targets, nullptr);
    net.params()[i] = orig;
    out.numeric[i] = (up - down) / (2.0 * h);
    const double a = out.analytic[i];
    const double num = out.numeric[i];
    const double denom = std::max({std::abs(a), std::abs(num), kGradCheckFloor});
    out.max_relative_error = std::max(out.max_relative_error, std::abs(a - num) / denom);
  }
  return out;
}

LtcModel::LtcModel() : LtcModel(LtcDims{}) {}

LtcModel::LtcModel(LtcDims dims) : net_(std::move(dims)) {}

void LtcModel::reset_state() { state_.assign(static_cast<std::size_t>(net_.dims().hidden), 0.0); }

double LtcModel::train(std::span<const double> series, const ForecasterConfig& cfg) {
  cfg.validate();
  if (series.size() < static_cast<std::size_t>(cfg.train_steps) + 1)
    throw PreconditionError("LtcModel::train: series shorter than train_steps + 1");
  cfg_ = cfg;
  scaler_ = MinMaxScaler::fit(series.first(static_cast<std::size_t>(cfg.train_steps)));
  const auto windows = make_windows(series, cfg.history, cfg.train_steps, scaler_);
  net_.initialize(cfg.seed);

  Adam adam(net_.param_count());
  std::vector<double> grad(net_.param_count(), 0.0);
  LtcTape tape;
  loss_history_.clear();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate_at(epoch);
    reset_state();
    double loss = 0.0;
    int in_batch = 0;
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t k = 0; k < windows.size(); ++k) {
      const double y = net_.forward(windows[k].inputs, state_, &tape);
      const double err = y - windows[k].target;
      loss += err * err;
      net_.backward(tape, 2.0 * err, grad);
      ++in_batch;
      if (in_batch == cfg.batch_size || k + 1 == windows.size()) {
        for (double& g : grad) g /= in_batch;
        clip_global_norm(grad, cfg.clip_norm);
        adam.step(net_.params(), grad, lr);
        std::fill(grad.begin(), grad.end(), 0.0);
        in_batch = 0;
      }
    }
    loss /= static_cast<double>(windows.size());
    if (!std::isfinite(loss))
      throw TrainingError("LTC training diverged at epoch " + std::to_string(epoch) + " (lr " +
                          std::to_string(lr) + ")");
    loss_history_.push_back(loss);
  }

  trained_ = true;
  reset_state();
  train_predictions_.clear();
  double mse = 0.0;
  const auto p = static_cast<std::size_t>(cfg.history);
  for (std::size_t t = p; t < static_cast<std::size_t>(cfg.train_steps); ++t) {
    const double y = predict_online(series.subspan(t - p, p));
    train_predictions_.push_back(y);
    const double e = scaler_.transform(y) - scaler_.transform(series[t]);
    mse += e * e;
  }
  final_mse_ = mse / static_cast<double>(windows.size());
  if (!std::isfinite(final_mse_)) throw TrainingError("LTC training produced a non-finite final loss");
  return final_mse_;
}

double LtcModel::predict_online(std::span<const double> recent) {
  if (!trained_) throw PreconditionError("LtcModel::predict_online: model is not trained");
  if (recent.size() != static_cast<std::size_t>(cfg_.history))
    throw PreconditionError("LtcModel::predict_online: expected exactly `history` observations");
  std::vector<double> window(recent.size());
  for (std::size_t i = 0; i < recent.size(); ++i) window[i] = scaler_.transform(recent[i]);
  return scaler_.inverse(net_.forward(window, state_));
}

std::string LtcModel::to_checkpoint() const {
  nlohmann::json j;
  j["format"] = "linkdrift-checkpoint";
  j["version"] = 1;
  j["kind"] = "ltc";
  const auto& d = net_.dims();
  j["dims"] = {{"inputs", d.inputs}, {"hidden", d.hidden}, {"head", d.head},
               {"unfold_steps", d.unfold_steps}, {"dt", d.dt}};
  j["config"] = {{"history", cfg_.history}, {"train_steps", cfg_.train_steps}, {"epochs", cfg_.epochs},
                 {"learning_rate", cfg_.learning_rate}, {"lr_decay", cfg_.lr_decay},
                 {"lr_decay_every", cfg_.lr_decay_every}, {"clip_norm", cfg_.clip_norm},
                 {"batch_size", cfg_.batch_size}, {"seed", cfg_.seed}};
  j["scaler"] = {{"lo", scaler_.lo}, {"hi", scaler_.hi}};
  j["trained"] = trained_;
  j["final_train_mse"] = final_mse_;
  j["params"] = std::vector<double>(net_.params().begin(), net_.params().end());
  j["state"] = state_;
  return j.dump(1);
}

LtcModel LtcModel::from_checkpoint(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "linkdrift-checkpoint" || j.at("kind") != "ltc")
      throw Error("not an LTC checkpoint");
    if (j.at("version").get<int>() != 1) throw Error("unsupported checkpoint version");
    LtcDims d;
    const auto& jd = j.at("dims");
    d.inputs = jd.at("inputs");
    d.hidden = jd.at("hidden");
    d.head = jd.at("head").get<std::vector<int>>();
    d.unfold_steps = jd.at("unfold_steps");
    d.dt = jd.at("dt");
    LtcModel m(d);
    const auto& c = j.at("config");
    m.cfg_.history = c.at("history");
    m.cfg_.train_steps = c.at("train_steps");
    m.cfg_.epochs = c.at("epochs");
    m.cfg_.learning_rate = c.at("learning_rate");
    m.cfg_.lr_decay = c.at("lr_decay");
    m.cfg_.lr_decay_every = c.at("lr_decay_every");
    m.cfg_.clip_norm = c.at("clip_norm");
    m.cfg_.batch_size = c.at("batch_size");
    m.cfg_.seed = c.at("seed");
    m.scaler_.lo = j.at("scaler").at("lo");
    m.scaler_.hi = j.at("scaler").at("hi");
    m.trained_ = j.at("trained");
    m.final_mse_ = j.at("final_train_mse");
    m.net_.set_params(j.at("params").get<std::vector<double>>());
    m.state_ = j.at("state").get<std::vector<double>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed LTC checkpoint: ") + e.what());
  }
}

}  // namespace linkdrift
