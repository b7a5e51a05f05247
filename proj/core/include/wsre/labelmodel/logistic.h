#ifndef WSRE_LABELMODEL_LOGISTIC_H_
#define WSRE_LABELMODEL_LOGISTIC_H_

// Logistic regression on soft labels, used to smooth label-model posteriors
// over the open-ended answer embeddings.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace wsre::labelmodel {

struct LogisticOptions {
  double learning_rate = 0.5;
  double l2 = 1e-3;
  int epochs = 300;
  std::uint64_t seed = 0;  // recorded for provenance; initialization is zero
};

struct LogisticModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  LogisticOptions options;
  std::vector<double> loss_trace;  // loss before each epoch, then final

  double Predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::vector<double> PredictAll(const Eigen::MatrixXd& x) const;
};

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd grad_w;
  double grad_b = 0.0;
};

// Mean soft-label cross-entropy plus (l2 / 2) |w|^2 and its gradient.
LossGradient LogisticLoss(const Eigen::MatrixXd& x, std::span<const double> q,
                          const Eigen::VectorXd& w, double b, double l2);

// Full-batch gradient descent from zero. Throws ValidationError on shape
// mismatch, non-finite features or labels outside [0, 1], and
// NumericalError naming the epoch when the loss becomes non-finite.
LogisticModel FitLogistic(const Eigen::MatrixXd& x, std::span<const double> q,
                          const LogisticOptions& options = {});

}  // namespace wsre::labelmodel

#endif  // WSRE_LABELMODEL_LOGISTIC_H_
