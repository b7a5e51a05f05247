#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "wsre/error.h"
#include "wsre/labelmodel/io.h"
#include "wsre/labelmodel/logistic.h"
#include "wsre/util/random.h"

namespace wsre::labelmodel {
namespace {

TEST(LogisticTest, SeparableToySetIsClassifiedExactly) {
  Rng rng(1);
  const int n = 40, d = 4;
  Eigen::MatrixXd x(n, d);
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    Eigen::VectorXd v(d);
    for (int k = 0; k < d; ++k) v(k) = rng.Normal();
    v /= v.norm();
    // Positives on one side of the first axis, negatives mirrored.
    v(0) = pos ? std::abs(v(0)) + 0.2 : -std::abs(v(0)) - 0.2;
    x.row(i) = v.transpose() / v.norm();
    q[i] = pos ? 0.95 : 0.05;
  }
  const auto model = FitLogistic(x, q);
  const auto p = model.PredictAll(x);
  for (int i = 0; i < n; ++i) EXPECT_EQ(p[i] > 0.5, q[i] > 0.5) << "row " << i;
}

TEST(LogisticTest, HalfLabelsKeepWeightsAtZero) {
  Rng rng(2);
  Eigen::MatrixXd x(30, 5);
  for (int i = 0; i < 30; ++i) {
    for (int k = 0; k < 5; ++k) x(i, k) = rng.Normal();
  }
  const std::vector<double> q(30, 0.5);
  const auto model = FitLogistic(x, q);
  EXPECT_LT(model.weights.norm(), 1e-12);
  EXPECT_NEAR(model.bias, 0.0, 1e-12);
  for (double p : model.PredictAll(x)) EXPECT_NEAR(p, 0.5, 1e-12);
}

TEST(LogisticTest, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  const int n = 12, d = 5;
  Eigen::MatrixXd x(n, d);
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) x(i, k) = rng.Normal();
    q[i] = rng.Uniform();
  }
  Eigen::VectorXd w(d);
  for (int k = 0; k < d; ++k) w(k) = rng.Normal();
  const double b = rng.Normal(), l2 = 0.1, h = 1e-6;
  const LossGradient g = LogisticLoss(x, q, w, b, l2);
  double worst = 0.0;
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd up = w, down = w;
    up(k) += h;
    down(k) -= h;
    const double fd =
        (LogisticLoss(x, q, up, b, l2).loss - LogisticLoss(x, q, down, b, l2).loss) / (2 * h);
    worst = std::max(worst, std::abs(fd - g.grad_w(k)));
  }
  const double fd_b =
      (LogisticLoss(x, q, w, b + h, l2).loss - LogisticLoss(x, q, w, b - h, l2).loss) / (2 * h);
  worst = std::max(worst, std::abs(fd_b - g.grad_b));
  EXPECT_LT(worst, 1e-6);
}

TEST(LogisticTest, LossMatchesCrossEntropyDefinition) {
  Eigen::MatrixXd x(2, 1);
  x << 1.0, -2.0;
  const std::vector<double> q = {0.9, 0.2};
  Eigen::VectorXd w(1);
  w << 0.5;
  const double b = 0.1;
  double expected = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(w(0) * x(i, 0) + b)));
    expected += -(q[i] * std::log(p) + (1 - q[i]) * std::log(1 - p)) / 2.0;
  }
  expected += 0.5 * 0.01 * 0.25;
  EXPECT_NEAR(LogisticLoss(x, q, w, b, 0.01).loss, expected, 1e-12);
}

TEST(LogisticTest, LossTraceIsNonIncreasing) {
  Rng rng(4);
  Eigen::MatrixXd x(50, 6);
  std::vector<double> q(50);
  for (int i = 0; i < 50; ++i) {
    for (int k = 0; k < 6; ++k) x(i, k) = rng.Normal() / std::sqrt(6.0);
    q[i] = rng.Uniform();
  }
  LogisticOptions opts;
  opts.learning_rate = 0.1;
  opts.epochs = 200;
  const auto model = FitLogistic(x, q, opts);
  ASSERT_EQ(model.loss_trace.size(), 201u);
  for (std::size_t e = 1; e < model.loss_trace.size(); ++e) {
    EXPECT_LE(model.loss_trace[e], model.loss_trace[e - 1] + 1e-15) << "epoch " << e;
  }
  EXPECT_NEAR(model.loss_trace.front(), std::log(2.0), 1e-12);
}

TEST(LogisticTest, DivergenceReportsEpoch) {
  Eigen::MatrixXd x(2, 1);
  x << 1e200, -1e200;
  const std::vector<double> q = {1.0, 0.0};
  LogisticOptions opts;
  opts.learning_rate = 1e200;
  opts.l2 = 1.0;
  try {
    FitLogistic(x, q, opts);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}

TEST(LogisticTest, RejectsBadInputs) {
  Eigen::MatrixXd x(2, 1);
  x << 1.0, 2.0;
  EXPECT_THROW(FitLogistic(x, std::vector<double>{0.5}), ValidationError);
  EXPECT_THROW(FitLogistic(x, std::vector<double>{0.5, 1.5}), ValidationError);
  x(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(FitLogistic(x, std::vector<double>{0.5, 0.5}), ValidationError);
}

TEST(LogisticTest, SerializationAndTrace) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 0, 0, 1, -1, 0, 0, -1;
  const std::vector<double> q = {0.9, 0.8, 0.1, 0.2};
  LogisticOptions opts;
  opts.epochs = 10;
  const auto model = FitLogistic(x, q, opts);
  const auto back = LogisticFromJson(LogisticToJson(model));
  EXPECT_EQ(back.weights, model.weights);
  EXPECT_EQ(back.bias, model.bias);
  EXPECT_EQ(back.options.epochs, 10);

  const auto path = std::filesystem::path(WSRE_TEST_TMP_DIR) / "loss_trace.csv";
  std::filesystem::create_directories(path.parent_path());
  WriteLossTrace(path, model.loss_trace);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,loss");
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.rfind(std::to_string(rows) + ",", 0), 0u) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 11);
}

}  // namespace
}  // namespace wsre::labelmodel
