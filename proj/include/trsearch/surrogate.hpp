#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "json.hpp"
#include "trsearch/value.hpp"

namespace trsearch {

struct TrainOptions {
  int epochs = 200;
  double lr = 1e-3;
  // Training stops early once the loss has improved by less than
  // `min_improvement` over a window of `patience` epochs.
  int patience = 20;
  double min_improvement = 1e-8;
};

struct TrainStats {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int epochs_run = 0;
  bool early_stopped = false;
  bool reinitialized = false;  // weights went non-finite once and were reset
};

// Gradient of the mean-squared-error loss with respect to every parameter;
// exposed so the backward pass can be checked against finite differences.
struct Gradients {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
};

// Small dense net mapping a unit-cube point to one predicted value per
// measurement: two tanh hidden layers, linear output. Targets are
// z-scored internally (refreshed from each training batch) so measurements
// that live nine decades apart still train on an even footing; predictions
// come back in raw measurement units.
class MlpSurrogate {
 public:
  MlpSurrogate(int input_dim, int output_dim, int hidden_dim = 64, std::uint64_t seed = 0);

  int input_dim() const { return static_cast<int>(w1_.cols()); }
  int output_dim() const { return static_cast<int>(w3_.rows()); }
  int hidden_dim() const { return static_cast<int>(w1_.rows()); }

  // Raw-unit predictions, one row per input row.
  Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& unit_rows) const;
  Measurements predict(std::span<const double> unit) const;

  // Mean over samples of the squared error in normalized target space.
  double loss(const Eigen::MatrixXd& unit_rows, const Eigen::MatrixXd& norm_targets) const;
  Gradients gradient(const Eigen::MatrixXd& unit_rows, const Eigen::MatrixXd& norm_targets) const;

  // Refreshes target normalization from `raw_targets`, then runs full-batch
  // Adam. The final loss never exceeds the initial loss: the best weights
  // seen during the run are restored at the end. A non-finite loss triggers
  // one reinitialization; a second is a hard error.
  TrainStats train(const Eigen::MatrixXd& unit_rows, const Eigen::MatrixXd& raw_targets,
                   const TrainOptions& opts = {});

  // Normalization helpers (used by train; exposed for tests).
  Eigen::MatrixXd normalize_targets(const Eigen::MatrixXd& raw_targets) const;
  void refresh_target_stats(const Eigen::MatrixXd& raw_targets);

  nlohmann::ordered_json to_snapshot() const;
  static MlpSurrogate from_snapshot(const nlohmann::ordered_json& j);

  bool operator==(const MlpSurrogate& other) const;

 private:
  friend struct SurrogateTestAccess;
  void init_weights(std::uint64_t seed);
  void forward(const Eigen::MatrixXd& x, Eigen::MatrixXd& h1, Eigen::MatrixXd& h2,
               Eigen::MatrixXd& y) const;

  Eigen::MatrixXd w1_, w2_, w3_;  // (hidden x in), (hidden x hidden), (out x hidden)
  Eigen::VectorXd b1_, b2_, b3_;
  Eigen::VectorXd out_mean_, out_std_;
  std::uint64_t seed_ = 0;
};

}  // namespace trsearch
