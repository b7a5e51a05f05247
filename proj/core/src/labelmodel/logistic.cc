#include "wsre/labelmodel/logistic.h"

#include <cmath>
#include <string>

#include "wsre/error.h"

namespace wsre::labelmodel {
namespace {

double Sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
double Softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

}  // namespace

double LogisticModel::Predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return Sigmoid(weights.dot(x) + bias);
}

std::vector<double> LogisticModel::PredictAll(const Eigen::MatrixXd& x) const {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = Predict(x.row(i).transpose());
  }
  return out;
}

LossGradient LogisticLoss(const Eigen::MatrixXd& x, std::span<const double> q,
                          const Eigen::VectorXd& w, double b, double l2) {
  const Eigen::Index n = x.rows();
  const Eigen::VectorXd t = (x * w).array() + b;
  Eigen::VectorXd resid(n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double qi = q[static_cast<std::size_t>(i)];
    // -[q log s(t) + (1-q) log(1 - s(t))] = softplus(t) - q t
    loss += Softplus(t[i]) - qi * t[i];
    resid[i] = Sigmoid(t[i]) - qi;
  }
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  LossGradient out;
  out.loss = loss * inv_n + 0.5 * l2 * w.squaredNorm();
  out.grad_w = x.transpose() * resid * inv_n + l2 * w;
  out.grad_b = resid.sum() * inv_n;
  return out;
}

LogisticModel FitLogistic(const Eigen::MatrixXd& x, std::span<const double> q,
                          const LogisticOptions& options) {
  if (static_cast<std::size_t>(x.rows()) != q.size()) {
    throw ValidationError("logistic regression: " + std::to_string(x.rows()) +
                          " feature rows but " + std::to_string(q.size()) + " labels");
  }
  if (x.rows() == 0) throw ValidationError("logistic regression needs at least one row");
  if (!x.allFinite()) throw ValidationError("logistic regression features must be finite");
  for (double v : q) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("soft labels must lie in [0, 1]");
    }
  }
  if (options.epochs < 0 || !(options.learning_rate > 0.0) || options.l2 < 0.0) {
    throw ValidationError("invalid logistic regression hyperparameters");
  }

  LogisticModel model;
  model.options = options;
  model.weights = Eigen::VectorXd::Zero(x.cols());
  for (int epoch = 0; epoch <= options.epochs; ++epoch) {
    const LossGradient lg = LogisticLoss(x, q, model.weights, model.bias, options.l2);
    if (!std::isfinite(lg.loss)) {
      throw NumericalError("logistic regression loss is not finite at epoch " +
                           std::to_string(epoch));
    }
    model.loss_trace.push_back(lg.loss);
    if (epoch == options.epochs) break;
    model.weights -= options.learning_rate * lg.grad_w;
    model.bias -= options.learning_rate * lg.grad_b;
  }
  return model;
}

}  // namespace wsre::labelmodel
