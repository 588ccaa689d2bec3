#include "trsearch/surrogate.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "trsearch/util.hpp"

namespace trsearch {

namespace {

// Adam optimizer state for one parameter block.
struct AdamState {
  Eigen::MatrixXd m, v;
  explicit AdamState(const Eigen::MatrixXd& shape_like)
      : m(Eigen::MatrixXd::Zero(shape_like.rows(), shape_like.cols())),
        v(Eigen::MatrixXd::Zero(shape_like.rows(), shape_like.cols())) {}
};

void adam_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamState& st, double lr,
               int t) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  st.m = beta1 * st.m + (1.0 - beta1) * grad;
  st.v = beta2 * st.v.array().matrix() + (1.0 - beta2) * grad.array().square().matrix();
  double c1 = 1.0 - std::pow(beta1, t);
  double c2 = 1.0 - std::pow(beta2, t);
  param.array() -= lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + eps);
}

nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::ordered_json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw std::runtime_error(std::string("model snapshot: ") + what + " is not a matrix");
  Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols)
      throw std::runtime_error(std::string("model snapshot: ") + what + " has ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::ordered_json& j, const char* what) {
  if (!j.is_array())
    throw std::runtime_error(std::string("model snapshot: ") + what + " is not a vector");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

nlohmann::ordered_json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

MlpSurrogate::MlpSurrogate(int input_dim, int output_dim, int hidden_dim, std::uint64_t seed)
    : seed_(seed) {
  if (input_dim < 1 || output_dim < 1 || hidden_dim < 1)
    throw std::logic_error("surrogate dimensions must be >= 1");
  w1_.resize(hidden_dim, input_dim);
  w2_.resize(hidden_dim, hidden_dim);
  w3_.resize(output_dim, hidden_dim);
  b1_ = Eigen::VectorXd::Zero(hidden_dim);
  b2_ = Eigen::VectorXd::Zero(hidden_dim);
  b3_ = Eigen::VectorXd::Zero(output_dim);
  out_mean_ = Eigen::VectorXd::Zero(output_dim);
  out_std_ = Eigen::VectorXd::Ones(output_dim);
  init_weights(seed);
}

void MlpSurrogate::init_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& w) {
    double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
  };
  fill(w1_);
  fill(w2_);
  fill(w3_);
  b1_.setZero();
  b2_.setZero();
  b3_.setZero();
}

void MlpSurrogate::forward(const Eigen::MatrixXd& x, Eigen::MatrixXd& h1, Eigen::MatrixXd& h2,
                           Eigen::MatrixXd& y) const {
  h1 = ((x * w1_.transpose()).rowwise() + b1_.transpose()).array().tanh();
  h2 = ((h1 * w2_.transpose()).rowwise() + b2_.transpose()).array().tanh();
  y = (h2 * w3_.transpose()).rowwise() + b3_.transpose();
}

Eigen::MatrixXd MlpSurrogate::predict_batch(const Eigen::MatrixXd& unit_rows) const {
  if (unit_rows.cols() != w1_.cols())
    throw std::logic_error("surrogate fed " + std::to_string(unit_rows.cols()) +
                           "-dimensional inputs, expected " + std::to_string(w1_.cols()));
  Eigen::MatrixXd h1, h2, y;
  forward(unit_rows, h1, h2, y);
  // Undo target normalization so callers see raw measurement units.
  y = (y.array().rowwise() * out_std_.transpose().array()).rowwise() +
      out_mean_.transpose().array();
  return y;
}

Measurements MlpSurrogate::predict(std::span<const double> unit) const {
  Eigen::MatrixXd x(1, static_cast<Eigen::Index>(unit.size()));
  for (std::size_t i = 0; i < unit.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = unit[i];
  Eigen::MatrixXd y = predict_batch(x);
  Measurements out(static_cast<std::size_t>(y.cols()));
  for (Eigen::Index c = 0; c < y.cols(); ++c) out[static_cast<std::size_t>(c)] = y(0, c);
  return out;
}

double MlpSurrogate::loss(const Eigen::MatrixXd& unit_rows,
                          const Eigen::MatrixXd& norm_targets) const {
  Eigen::MatrixXd h1, h2, y;
  forward(unit_rows, h1, h2, y);
  return (norm_targets - y).array().square().matrix().rowwise().sum().mean();
}

Gradients MlpSurrogate::gradient(const Eigen::MatrixXd& unit_rows,
                                 const Eigen::MatrixXd& norm_targets) const {
  const double m = static_cast<double>(unit_rows.rows());
  Eigen::MatrixXd h1, h2, y;
  forward(unit_rows, h1, h2, y);

  Eigen::MatrixXd dy = (2.0 / m) * (y - norm_targets);           // m x out
  Gradients g;
  g.w3 = dy.transpose() * h2;                                    // out x hidden
  g.b3 = dy.colwise().sum().transpose();
  Eigen::MatrixXd dh2 = dy * w3_;                                // m x hidden
  Eigen::MatrixXd dz2 = dh2.array() * (1.0 - h2.array().square());
  g.w2 = dz2.transpose() * h1;
  g.b2 = dz2.colwise().sum().transpose();
  Eigen::MatrixXd dh1 = dz2 * w2_;
  Eigen::MatrixXd dz1 = dh1.array() * (1.0 - h1.array().square());
  g.w1 = dz1.transpose() * unit_rows;
  g.b1 = dz1.colwise().sum().transpose();
  return g;
}

void MlpSurrogate::refresh_target_stats(const Eigen::MatrixXd& raw_targets) {
  if (raw_targets.cols() != out_mean_.size())
    throw std::logic_error("surrogate fed " + std::to_string(raw_targets.cols()) +
                           " target columns, expected " + std::to_string(out_mean_.size()));
  out_mean_ = raw_targets.colwise().mean().transpose();
  Eigen::MatrixXd centered = raw_targets.rowwise() - out_mean_.transpose();
  out_std_ = (centered.array().square().colwise().mean()).sqrt().transpose();
  for (Eigen::Index i = 0; i < out_std_.size(); ++i)
    if (!(out_std_(i) > 1e-12)) out_std_(i) = 1e-12;  // constant column guard
}

Eigen::MatrixXd MlpSurrogate::normalize_targets(const Eigen::MatrixXd& raw_targets) const {
  return (raw_targets.rowwise() - out_mean_.transpose()).array().rowwise() /
         out_std_.transpose().array();
}

TrainStats MlpSurrogate::train(const Eigen::MatrixXd& unit_rows, const Eigen::MatrixXd& raw_targets,
                               const TrainOptions& opts) {
  if (unit_rows.rows() != raw_targets.rows())
    throw std::logic_error("surrogate training inputs and targets disagree on sample count");
  if (unit_rows.rows() < 1) throw std::logic_error("surrogate training needs at least one sample");

  refresh_target_stats(raw_targets);
  Eigen::MatrixXd targets = normalize_targets(raw_targets);

  TrainStats stats;
  for (int attempt = 0;; ++attempt) {
    stats.initial_loss = loss(unit_rows, targets);
    if (!std::isfinite(stats.initial_loss)) {
      if (attempt > 0) throw std::runtime_error("surrogate training diverged twice; giving up");
      init_weights(derive_seed(seed_, 0xdead + attempt));
      stats.reinitialized = true;
      continue;
    }

    AdamState s_w1(w1_), s_w2(w2_), s_w3(w3_), s_b1(b1_), s_b2(b2_), s_b3(b3_);
    double best_loss = stats.initial_loss;
    Eigen::MatrixXd best_w1 = w1_, best_w2 = w2_, best_w3 = w3_;
    Eigen::VectorXd best_b1 = b1_, best_b2 = b2_, best_b3 = b3_;
    std::vector<double> history{stats.initial_loss};
    bool diverged = false;

    stats.epochs_run = 0;
    stats.early_stopped = false;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
      Gradients g = gradient(unit_rows, targets);
      adam_step(w1_, g.w1, s_w1, opts.lr, epoch + 1);
      adam_step(w2_, g.w2, s_w2, opts.lr, epoch + 1);
      adam_step(w3_, g.w3, s_w3, opts.lr, epoch + 1);
      Eigen::MatrixXd gb1 = g.b1, gb2 = g.b2, gb3 = g.b3;
      Eigen::MatrixXd mb1 = b1_, mb2 = b2_, mb3 = b3_;
      adam_step(mb1, gb1, s_b1, opts.lr, epoch + 1);
      adam_step(mb2, gb2, s_b2, opts.lr, epoch + 1);
      adam_step(mb3, gb3, s_b3, opts.lr, epoch + 1);
      b1_ = mb1;
      b2_ = mb2;
      b3_ = mb3;
      ++stats.epochs_run;

      double cur = loss(unit_rows, targets);
      if (!std::isfinite(cur)) {
        diverged = true;
        break;
      }
      if (cur < best_loss) {
        best_loss = cur;
        best_w1 = w1_;
        best_w2 = w2_;
        best_w3 = w3_;
        best_b1 = b1_;
        best_b2 = b2_;
        best_b3 = b3_;
      }
      history.push_back(cur);
      if (static_cast<int>(history.size()) > opts.patience) {
        double then = history[history.size() - 1 - opts.patience];
        if (then - cur < opts.min_improvement) {
          stats.early_stopped = true;
          break;
        }
      }
    }

    if (diverged) {
      if (attempt > 0) throw std::runtime_error("surrogate training diverged twice; giving up");
      init_weights(derive_seed(seed_, 0xbeef + attempt));
      stats.reinitialized = true;
      continue;
    }

    // Keep the best weights seen, so final loss <= initial loss always.
    w1_ = best_w1;
    w2_ = best_w2;
    w3_ = best_w3;
    b1_ = best_b1;
    b2_ = best_b2;
    b3_ = best_b3;
    stats.final_loss = best_loss;
    return stats;
  }
}

nlohmann::ordered_json MlpSurrogate::to_snapshot() const {
  nlohmann::ordered_json j;
  j["schema_version"] = "1.0";
  j["input_dim"] = input_dim();
  j["hidden_dim"] = hidden_dim();
  j["output_dim"] = output_dim();
  j["w1"] = matrix_to_json(w1_);
  j["b1"] = vector_to_json(b1_);
  j["w2"] = matrix_to_json(w2_);
  j["b2"] = vector_to_json(b2_);
  j["w3"] = matrix_to_json(w3_);
  j["b3"] = vector_to_json(b3_);
  j["out_mean"] = vector_to_json(out_mean_);
  j["out_std"] = vector_to_json(out_std_);
  return j;
}

MlpSurrogate MlpSurrogate::from_snapshot(const nlohmann::ordered_json& j) {
  std::string version = j.value("schema_version", "");
  if (version.rfind("1.", 0) != 0)
    throw std::runtime_error("model snapshot has unsupported schema_version '" + version + "'");
  int in = j.at("input_dim").get<int>();
  int hidden = j.at("hidden_dim").get<int>();
  int out = j.at("output_dim").get<int>();
  MlpSurrogate model(in, out, hidden, 0);
  auto expect = [](const Eigen::MatrixXd& m, int rows, int cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols)
      throw std::runtime_error(std::string("model snapshot: ") + what + " is " +
                               std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                               ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  };
  model.w1_ = matrix_from_json(j.at("w1"), "w1");
  model.w2_ = matrix_from_json(j.at("w2"), "w2");
  model.w3_ = matrix_from_json(j.at("w3"), "w3");
  expect(model.w1_, hidden, in, "w1");
  expect(model.w2_, hidden, hidden, "w2");
  expect(model.w3_, out, hidden, "w3");
  model.b1_ = vector_from_json(j.at("b1"), "b1");
  model.b2_ = vector_from_json(j.at("b2"), "b2");
  model.b3_ = vector_from_json(j.at("b3"), "b3");
  expect(model.b1_, hidden, 1, "b1");
  expect(model.b2_, hidden, 1, "b2");
  expect(model.b3_, out, 1, "b3");
  model.out_mean_ = vector_from_json(j.at("out_mean"), "out_mean");
  model.out_std_ = vector_from_json(j.at("out_std"), "out_std");
  expect(model.out_mean_, out, 1, "out_mean");
  expect(model.out_std_, out, 1, "out_std");
  return model;
}

bool MlpSurrogate::operator==(const MlpSurrogate& other) const {
  auto same = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
  };
  return same(w1_, other.w1_) && same(w2_, other.w2_) && same(w3_, other.w3_) &&
         same(b1_, other.b1_) && same(b2_, other.b2_) && same(b3_, other.b3_) &&
         same(out_mean_, other.out_mean_) && same(out_std_, other.out_std_);
}

}  // namespace trsearch
