#include "linkdrift/mlp.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "linkdrift/errors.hpp"
#include "linkdrift/rng.hpp"

namespace linkdrift {

DenseStack IncrementalMlp::stack() const {
  DenseStack s;
  s.widths = {cfg_.history, kMlpHiddenWidth, 1};
  s.relu_hidden = true;
  return s;
}

double IncrementalMlp::batch_step(const std::vector<Window>& batch, std::size_t begin, std::size_t end,
                                  double lr) {
  const DenseStack s = stack();
  std::vector<double> grad(params_.size(), 0.0);
  std::vector<std::vector<double>> acts;
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const double y = s.forward(params_, batch[i].inputs, acts);
    const double err = y - batch[i].target;
    loss += err * err * scale;
    s.backward(params_, acts, 2.0 * err * scale, grad);
  }
  clip_global_norm(grad, cfg_.clip_norm);
  adam_.step(params_, grad, lr);
  return loss;
}

double IncrementalMlp::initial_fit(std::span<const double> series, const ForecasterConfig& cfg) {
  cfg.validate();
  if (series.size() < static_cast<std::size_t>(cfg.train_steps) + 1)
    throw PreconditionError("IncrementalMlp::initial_fit: series shorter than train_steps + 1");
  cfg_ = cfg;
  scaler_ = MinMaxScaler::fit(series.first(static_cast<std::size_t>(cfg.train_steps)));
  const auto windows = make_windows(series, cfg.history, cfg.train_steps, scaler_);

  const DenseStack s = stack();
  params_.assign(s.param_count(), 0.0);
  Rng rng(derive_seed(cfg.seed, 0x4D4C50));
  std::size_t off = 0;
  for (std::size_t l = 1; l < s.widths.size(); ++l) {
    const auto in = static_cast<std::size_t>(s.widths[l - 1]);
    const auto out = static_cast<std::size_t>(s.widths[l]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < in * out; ++i) params_[off + i] = rng.uniform(-limit, limit);
    off += in * out + out;
  }
  adam_ = Adam(params_.size());

  // Shuffled mini-batches; the MLP has no state linking consecutive windows.
  std::vector<std::size_t> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Window> shuffled(windows.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
    for (std::size_t i = 0; i < order.size(); ++i) shuffled[i] = windows[order[i]];
    double loss = 0.0;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t b = 0; b < shuffled.size(); b += bs) {
      const std::size_t e = std::min(shuffled.size(), b + bs);
      loss += batch_step(shuffled, b, e, cfg.learning_rate_at(epoch)) * static_cast<double>(e - b);
    }
    if (!std::isfinite(loss)) throw TrainingError("MLP training diverged at epoch " + std::to_string(epoch));
  }

  const DenseStack st = stack();
  std::vector<std::vector<double>> acts;
  double mse = 0.0;
  for (const auto& w : windows) {
    const double e = st.forward(params_, w.inputs, acts) - w.target;
    mse += e * e;
  }
  mse /= static_cast<double>(windows.size());
  if (!std::isfinite(mse)) throw TrainingError("MLP training produced a non-finite final loss");
  buffer_.clear();
  refits_ = 0;
  fitted_ = true;
  return mse;
}

void IncrementalMlp::set_retrain_window(int samples) {
  if (samples < 1) throw ConfigError("retrain window must be at least 1");
  retrain_window_ = samples;
  buffer_.clear();
}

double IncrementalMlp::predict(std::span<const double> recent) const {
  if (!fitted_) throw PreconditionError("IncrementalMlp::predict: model is not fitted");
  if (recent.size() != static_cast<std::size_t>(cfg_.history))
    throw PreconditionError("IncrementalMlp::predict: expected exactly `history` observations");
  std::vector<double> x(recent.size());
  for (std::size_t i = 0; i < recent.size(); ++i) x[i] = scaler_.transform(recent[i]);
  std::vector<std::vector<double>> acts;
  return scaler_.inverse(stack().forward(params_, x, acts));
}

bool IncrementalMlp::observe(std::span<const double> recent, double actual) {
  if (!fitted_) throw PreconditionError("IncrementalMlp::observe: model is not fitted");
  if (recent.size() != static_cast<std::size_t>(cfg_.history))
    throw PreconditionError("IncrementalMlp::observe: expected exactly `history` observations");
  Window w;
  for (double v : recent) w.inputs.push_back(scaler_.transform(v));
  w.target = scaler_.transform(actual);
  buffer_.push_back(std::move(w));
  if (static_cast<int>(buffer_.size()) < retrain_window_) return false;
  for (int e = 0; e < cfg_.partial_fit_epochs; ++e)
    batch_step(buffer_, 0, buffer_.size(), cfg_.partial_fit_learning_rate);
  buffer_.clear();
  ++refits_;
  return true;
}

double IncrementalMlp::predict_then_buffer(std::span<const double> recent, double actual) {
  const double forecast = predict(recent);
  observe(recent, actual);
  return forecast;
}

std::string IncrementalMlp::to_checkpoint() const {
  nlohmann::json j;
  j["format"] = "linkdrift-checkpoint";
  j["version"] = 1;
  j["kind"] = "mlp";
  j["config"] = {{"history", cfg_.history}, {"train_steps", cfg_.train_steps}, {"epochs", cfg_.epochs},
                 {"learning_rate", cfg_.learning_rate}, {"lr_decay", cfg_.lr_decay},
                 {"lr_decay_every", cfg_.lr_decay_every}, {"clip_norm", cfg_.clip_norm},
                 {"batch_size", cfg_.batch_size}, {"seed", cfg_.seed},
                 {"partial_fit_epochs", cfg_.partial_fit_epochs},
                 {"partial_fit_learning_rate", cfg_.partial_fit_learning_rate}};
  j["scaler"] = {{"lo", scaler_.lo}, {"hi", scaler_.hi}};
  j["fitted"] = fitted_;
  j["retrain_window"] = retrain_window_;
  j["refits"] = refits_;
  j["params"] = params_;
  j["adam"] = {{"t", adam_.steps()}, {"m", adam_.first_moment()}, {"v", adam_.second_moment()}};
  nlohmann::json pending = nlohmann::json::array();
  for (const auto& w : buffer_) pending.push_back({{"inputs", w.inputs}, {"target", w.target}});
  j["pending"] = pending;
  return j.dump(1);
}

IncrementalMlp IncrementalMlp::from_checkpoint(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "linkdrift-checkpoint" || j.at("kind") != "mlp") throw Error("not an MLP checkpoint");
    if (j.at("version").get<int>() != 1) throw Error("unsupported checkpoint version");
    IncrementalMlp m;
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
    m.cfg_.partial_fit_epochs = c.at("partial_fit_epochs");
    m.cfg_.partial_fit_learning_rate = c.at("partial_fit_learning_rate");
    m.scaler_.lo = j.at("scaler").at("lo");
    m.scaler_.hi = j.at("scaler").at("hi");
    m.fitted_ = j.at("fitted");
    m.retrain_window_ = j.at("retrain_window");
    m.refits_ = j.at("refits");
    m.params_ = j.at("params").get<std::vector<double>>();
    m.adam_ = Adam(m.params_.size());
    m.adam_.restore(j.at("adam").at("m").get<std::vector<double>>(), j.at("adam").at("v").get<std::vector<double>>(),
                    j.at("adam").at("t").get<std::size_t>());
    for (const auto& w : j.at("pending"))
      m.buffer_.push_back({w.at("inputs").get<std::vector<double>>(), w.at("target").get<double>()});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed MLP checkpoint: ") + e.what());
  }
}

}  // namespace linkdrift
