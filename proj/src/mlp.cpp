#include <cmath>

#include "dmlkit/errors.hpp"
#include "dmlkit/learners.hpp"

namespace dmlkit {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct AdamSlot {
  MatrixXd m_w, v_w;
  VectorXd m_b, v_b;
};

// Activations of every layer for a full batch; acts[0] is the input.
void forward(const MlpModel& model, const MatrixXd& input, std::vector<MatrixXd>& acts) {
  const std::size_t layers = model.weights.size();
  acts.resize(layers + 1);
  acts[0] = input;
  for (std::size_t l = 0; l < layers; ++l) {
    acts[l + 1].noalias() = acts[l] * model.weights[l];
    acts[l + 1].rowwise() += model.biases[l].transpose();
    if (l + 1 < layers) acts[l + 1] = acts[l + 1].cwiseMax(0.0);
  }
}

}  // namespace

MlpModel fit_mlp(const MlpParams& p, const Matrix& X, const Vector& y, Rng& rng) {
  if (X.rows() != y.size()) throw ShapeError("fit_mlp: X/y row mismatch");
  std::vector<int> widths;
  widths.push_back(static_cast<int>(X.cols()));
  widths.insert(widths.end(), p.hidden.begin(), p.hidden.end());
  widths.push_back(1);

  // Glorot-uniform initialization for weights and biases.
  MlpModel model;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    MatrixXd w(fan_in, fan_out);
    for (Index c = 0; c < w.cols(); ++c)
      for (Index r = 0; r < w.rows(); ++r) w(r, c) = bound * (2.0 * rng.uniform() - 1.0);
    VectorXd b(fan_out);
    for (Index i = 0; i < b.size(); ++i) b[i] = bound * (2.0 * rng.uniform() - 1.0);
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }

  const std::size_t layers = model.weights.size();
  std::vector<AdamSlot> adam(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    adam[l].m_w = MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols());
    adam[l].v_w = adam[l].m_w;
    adam[l].m_b = VectorXd::Zero(model.biases[l].size());
    adam[l].v_b = adam[l].m_b;
  }

  const MatrixXd input = X;
  const double n = static_cast<double>(X.rows());
  std::vector<MatrixXd> acts;
  MatrixXd delta;
  MatrixXd grad_w;
  VectorXd grad_b;
  double beta1_t = 1.0;
  double beta2_t = 1.0;

  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    forward(model, input, acts);
    // Loss is 0.5 * mean squared error + 0.5 * l2 * |W|^2 / n.
    delta = (acts[layers].col(0) - y) / n;
    beta1_t *= p.beta1;
    beta2_t *= p.beta2;
    const double step = p.learning_rate * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);

    for (std::size_t l = layers; l-- > 0;) {
      grad_w.noalias() = acts[l].transpose() * delta;
      grad_w += (p.l2 / n) * model.weights[l];
      grad_b = delta.colwise().sum().transpose();
      if (l > 0) {
        MatrixXd back = delta * model.weights[l].transpose();
        delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
      }
      AdamSlot& s = adam[l];
      s.m_w = p.beta1 * s.m_w + (1.0 - p.beta1) * grad_w;
      s.v_w = p.beta2 * s.v_w + (1.0 - p.beta2) * grad_w.cwiseAbs2();
      s.m_b = p.beta1 * s.m_b + (1.0 - p.beta1) * grad_b;
      s.v_b = p.beta2 * s.v_b + (1.0 - p.beta2) * grad_b.cwiseAbs2();
      model.weights[l].array() -= step * s.m_w.array() / (s.v_w.array().sqrt() + p.epsilon);
      model.biases[l].array() -= step * s.m_b.array() / (s.v_b.array().sqrt() + p.epsilon);
    }
  }
  return model;
}

Vector predict_mlp(const MlpModel& model, const Matrix& X) {
  std::vector<MatrixXd> acts;
  forward(model, X, acts);
  return acts.back().col(0);
}

double mlp_training_loss(const MlpModel& model, const Matrix& X, const Vector& y) {
  return (predict_mlp(model, X) - y).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace dmlkit
