#include "wsre/labelmodel/label_model.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "wsre/error.h"
#include "wsre/util/random.h"

namespace wsre::labelmodel {
namespace {

// Columns of the moment design matrix and the LF each belongs to.
struct Design {
  Eigen::MatrixXd x;           // n x d
  std::vector<std::size_t> block;
  std::vector<int> value;      // indicator basis: the vote value; signed: 0
};

Design BuildDesign(const VoteMatrix& votes, MomentBasis basis) {
  const std::size_t n = votes.rows();
  Design d;
  std::vector<std::vector<double>> cols;
  for (std::size_t lf = 0; lf < votes.cols(); ++lf) {
    if (basis == MomentBasis::kSigned) {
      std::vector<double> c(n);
      for (std::size_t i = 0; i < n; ++i) c[i] = ToInt(votes(i, lf));
      cols.push_back(std::move(c));
      d.block.push_back(lf);
      d.value.push_back(0);
      continue;
    }
    bool abstains = false;
    for (std::size_t i = 0; i < n && !abstains; ++i) {
      abstains = votes(i, lf) == Vote::kAbstain;
    }
    std::vector<int> values = {1};
    if (abstains) values.push_back(-1);
    for (int v : values) {
      std::vector<double> c(n);
      for (std::size_t i = 0; i < n; ++i) c[i] = ToInt(votes(i, lf)) == v ? 1.0 : 0.0;
      cols.push_back(std::move(c));
      d.block.push_back(lf);
      d.value.push_back(v);
    }
  }
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    d.x.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXd>(cols[j].data(), static_cast<Eigen::Index>(n));
  }
  return d;
}

// Perfectly (anti-)correlated LF pairs make the moment matrix singular.
void CheckDistinctLfs(const VoteMatrix& votes) {
  const std::size_t m = votes.cols();
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      bool same = true;
      bool negated = true;
      for (std::size_t i = 0; i < votes.rows() && (same || negated); ++i) {
        const int va = ToInt(votes(i, a));
        const int vb = ToInt(votes(i, b));
        same = same && va == vb;
        negated = negated && va == -vb;
      }
      if (same || negated) {
        throw NumericalError("singular moment matrix: labeling functions '" +
                             votes.lf_names()[a] + "' and '" +
                             votes.lf_names()[b] + "' are perfectly " +
                             (same ? "correlated" : "anti-correlated"));
      }
    }
  }
}

bool Unanimous(const VoteMatrix& votes) {
  for (std::size_t i = 0; i < votes.rows(); ++i) {
    const Vote first = votes(i, 0);
    if (first == Vote::kAbstain) return false;
    for (std::size_t lf = 1; lf < votes.cols(); ++lf) {
      if (votes(i, lf) != first) return false;
    }
  }
  return true;
}

struct Completion {
  Eigen::VectorXd z;
  double residual_norm = 0.0;
  int iterations = 0;
};

// Entries (i, j), i < j, of K_O that conditional independence sets to zero.
std::vector<std::pair<Eigen::Index, Eigen::Index>> ZeroPattern(
    const std::vector<std::size_t>& block) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> omega;
  for (std::size_t i = 0; i < block.size(); ++i) {
    for (std::size_t j = i + 1; j < block.size(); ++j) {
      if (block[i] != block[j]) {
        omega.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  return omega;
}

// Starting point from the closed-form triplet relation
//   K_ij = -z_i z_j  =>  z_i^2 = -K_ij K_ik / K_jk
// averaged (median) over valid (j, k), with signs propagated from index 0.
Eigen::VectorXd InitialZ(const Eigen::MatrixXd& k, const std::vector<std::size_t>& block) {
  const auto d = static_cast<Eigen::Index>(block.size());
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    std::vector<double> est;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (block[j] == block[i]) continue;
      for (Eigen::Index l = j + 1; l < d; ++l) {
        if (block[l] == block[i] || block[l] == block[j]) continue;
        if (k(j, l) == 0.0) continue;
        const double sq = -k(i, j) * k(i, l) / k(j, l);
        if (sq > 0.0 && std::isfinite(sq)) est.push_back(std::sqrt(sq));
      }
    }
    if (est.empty()) {
      z[i] = 0.1;
    } else {
      std::nth_element(est.begin(), est.begin() + static_cast<std::ptrdiff_t>(est.size() / 2), est.end());
      z[i] = est[est.size() / 2];
    }
  }
  // Signs relative to z_0 > 0.
  Eigen::Index other = -1;
  for (Eigen::Index j = 1; j < d; ++j) {
    if (block[j] != block[0]) {
      other = j;
      break;
    }
  }
  for (Eigen::Index i = 1; i < d; ++i) {
    if (block[i] != block[0]) {
      if (-k(i, 0) < 0.0) z[i] = -z[i];
    }
  }
  for (Eigen::Index i = 1; i < d; ++i) {
    if (block[i] == block[0] && other >= 0) {
      const double s = (-k(i, other) < 0.0 ? -1.0 : 1.0) * (z[other] < 0.0 ? -1.0 : 1.0);
      z[i] = s * std::abs(z[i]);
    }
  }
  return z;
}

// Change in the recovered covariances below which the completion counts as
// converged. When the data sit on the model boundary z runs off to infinity
// along a flat valley while S_O z / sqrt(1 + z^T S_O z) settles.
constexpr double kMomentTolerance = 1e-7;

// Levenberg-Marquardt on r_ij(z) = K_ij + z_i z_j over the zero pattern.
Completion SolveCompletion(const Eigen::MatrixXd& k, const Eigen::MatrixXd& sigma_o,
                           const std::vector<std::size_t>& block, const FitOptions& options) {
  const auto omega = ZeroPattern(block);
  const auto d = static_cast<Eigen::Index>(block.size());
  const auto m = static_cast<Eigen::Index>(omega.size());

  auto residuals = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd r(m);
    for (Eigen::Index e = 0; e < m; ++e) {
      const auto [i, j] = omega[static_cast<std::size_t>(e)];
      r[e] = k(i, j) + z[i] * z[j];
    }
    return r;
  };

  auto moments = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    return sigma_o * z / std::sqrt(1.0 + z.dot(sigma_o * z));
  };

  Completion out;
  out.z = InitialZ(k, block);
  Eigen::VectorXd r = residuals(out.z);
  double cost = r.squaredNorm();
  double damping = 1e-3;

  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, d);
    for (Eigen::Index e = 0; e < m; ++e) {
      const auto [i, j] = omega[static_cast<std::size_t>(e)];
      jac(e, i) = out.z[j];
      jac(e, j) = out.z[i];
    }
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() <= options.tolerance * std::max(1.0, cost)) {
      out.residual_norm = std::sqrt(cost);
      return out;
    }
    // Full Hessian: the residuals have constant second derivatives, and
    // with a nonzero optimal residual Gauss-Newton alone is only linear.
    Eigen::MatrixXd hess = jac.transpose() * jac;
    for (Eigen::Index e = 0; e < m; ++e) {
      const auto [i, j] = omega[static_cast<std::size_t>(e)];
      hess(i, j) += r[e];
      hess(j, i) += r[e];
    }

    bool accepted = false;
    while (damping < 1e12) {
      Eigen::MatrixXd lhs = hess;
      lhs.diagonal().array() += damping * (1.0 + hess.diagonal().array().abs());
      Eigen::VectorXd step = lhs.ldlt().solve(-grad);
      Eigen::VectorXd z_new = out.z + step;
      Eigen::VectorXd r_new = residuals(z_new);
      double cost_new = r_new.squaredNorm();
      if (cost_new < cost) {
        // Keep doubling while the cost falls, so that a valley running off
        // to infinity is crossed in geometrically growing strides.
        for (int k = 0; k < 30; ++k) {
          const Eigen::VectorXd z_far = out.z + 2.0 * step;
          const Eigen::VectorXd r_far = residuals(z_far);
          const double cost_far = r_far.squaredNorm();
          if (!(cost_far < cost_new)) break;
          step *= 2.0;
          z_new = z_far;
          r_new = r_far;
          cost_new = cost_far;
        }
        const double rel_step = step.norm() / (out.z.norm() + options.tolerance);
        const double rel_drop = (cost - cost_new) / std::max(cost, 1e-300);
        // Heavily damped steps are short for reasons unrelated to convergence.
        const bool settled = damping <= 1.0 && (moments(z_new) - moments(out.z))
                                                   .lpNorm<Eigen::Infinity>() < kMomentTolerance;
        out.z = z_new;
        r = r_new;
        cost = cost_new;
        damping = std::max(damping / 3.0, 1e-12);
        accepted = true;
        if (rel_step < 1e-12 || rel_drop < 1e-15 || settled) {
          out.residual_norm = std::sqrt(cost);
          return out;
        }
        break;
      }
      damping *= 4.0;
    }
    if (!accepted) {
      // No descent direction left at machine precision: a stationary point.
      out.residual_norm = std::sqrt(cost);
      return out;
    }
  }
  throw NumericalError("label model completion did not converge in " +
                       std::to_string(options.max_iterations) +
                       " iterations (residual norm " + std::to_string(std::sqrt(cost)) + ")");
}

std::vector<double> AccuraciesFromCovariance(const Design& design, const Eigen::VectorXd& cov_os,
                                             const Eigen::VectorXd& means, double pi,
                                             std::size_t n_lf, MomentBasis basis,
                                             const std::vector<double>& coverage) {
  std::vector<double> acc(n_lf, 0.5);
  if (basis == MomentBasis::kSigned) {
    const double var_s = pi * (1.0 - pi);
    for (std::size_t lf = 0; lf < n_lf; ++lf) {
      const double margin = cov_os[static_cast<Eigen::Index>(lf)] / (2.0 * var_s * coverage[lf]);
      acc[lf] = 0.5 * (1.0 + margin);
    }
    return acc;
  }
  // Indicator basis: joint P(vote = v, Y = +1) = Cov + P(vote = v) * pi.
  for (std::size_t lf = 0; lf < n_lf; ++lf) {
    double pos_pos = 0.0, neg_pos = 0.0, p_pos = 0.0, p_neg = 0.0;
    bool has_neg_column = false;
    for (std::size_t c = 0; c < design.block.size(); ++c) {
      if (design.block[c] != lf) continue;
      const auto ci = static_cast<Eigen::Index>(c);
      const double joint = cov_os[ci] + means[ci] * pi;
      if (design.value[c] == 1) {
        pos_pos = joint;
        p_pos = means[ci];
      } else {
        neg_pos = joint;
        p_neg = means[ci];
        has_neg_column = true;
      }
    }
    if (!has_neg_column) {  // never abstains
      neg_pos = pi - pos_pos;
      p_neg = 1.0 - p_pos;
    }
    const double neg_neg = p_neg - neg_pos;
    acc[lf] = (pos_pos + neg_neg) / coverage[lf];
  }
  return acc;
}

}  // namespace

LabelModelFit FitLabelModel(const VoteMatrix& votes, double class_balance,
                            const FitOptions& options) {
  const std::size_t n_lf = votes.cols();
  if (n_lf < 3) {
    throw ValidationError("label model needs at least 3 labeling functions, got " +
                          std::to_string(n_lf));
  }
  if (!(class_balance > 0.0 && class_balance < 1.0)) {
    throw ValidationError("class balance must lie in (0, 1)");
  }
  if (votes.rows() == 0) throw ValidationError("label model needs at least one row");
  std::vector<double> coverage(n_lf, 0.0);
  for (std::size_t lf = 0; lf < n_lf; ++lf) {
    std::size_t voted = 0;
    for (std::size_t i = 0; i < votes.rows(); ++i) voted += votes(i, lf) != Vote::kAbstain;
    if (voted == 0) {
      throw ValidationError("labeling function '" + votes.lf_names()[lf] +
                            "' never votes");
    }
    coverage[lf] = static_cast<double>(voted) / static_cast<double>(votes.rows());
  }

  LabelModelFit fit;
  fit.params.class_balance = class_balance;
  const double hi = 1.0 - options.clip_eps;
  const double lo = 0.5 + options.clip_eps;

  // Every LF agrees with every other on every row: the only accuracies
  // consistent with the model are 1 (the moment matrix is rank one).
  if (Unanimous(votes)) {
    fit.raw_accuracies.assign(n_lf, 1.0);
    for (std::size_t lf = 0; lf < n_lf; ++lf) fit.params.lfs.push_back({hi, coverage[lf]});
    return fit;
  }
  CheckDistinctLfs(votes);

  const Design design = BuildDesign(votes, options.basis);
  const double n = static_cast<double>(votes.rows());
  const Eigen::VectorXd means = design.x.colwise().mean();
  const Eigen::MatrixXd centered = design.x.rowwise() - means.transpose();
  const Eigen::MatrixXd sigma_o = centered.transpose() * centered / n;

  for (Eigen::Index c = 0; c < sigma_o.rows(); ++c) {
    if (sigma_o(c, c) <= 0.0) {
      throw NumericalError("singular moment matrix: labeling function '" +
                           votes.lf_names()[design.block[static_cast<std::size_t>(c)]] +
                           "' has no variance");
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_o);
  const double min_ev = eig.eigenvalues().minCoeff();
  const double max_ev = eig.eigenvalues().maxCoeff();
  if (!(min_ev > 1e-12 * max_ev)) {
    throw NumericalError("singular moment matrix (eigenvalue ratio " +
                         std::to_string(min_ev / max_ev) + ")");
  }
  const Eigen::MatrixXd k = sigma_o.ldlt().solve(
      Eigen::MatrixXd::Identity(sigma_o.rows(), sigma_o.cols()));

  Completion completion = SolveCompletion(k, sigma_o, design.block, options);
  fit.residual_norm = completion.residual_norm;
  fit.iterations = completion.iterations;

  const double var_s = class_balance * (1.0 - class_balance);
  auto recover = [&](const Eigen::VectorXd& z) {
    const double c = (1.0 + z.dot(sigma_o * z)) / var_s;
    const Eigen::VectorXd cov_os = sigma_o * z / std::sqrt(c);
    return AccuraciesFromCovariance(design, cov_os, means, class_balance, n_lf,
                                    options.basis, coverage);
  };
  std::vector<double> acc = recover(completion.z);
  const double mean_acc = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(n_lf);
  if (mean_acc < 0.5) acc = recover(-completion.z);

  fit.raw_accuracies = acc;
  for (std::size_t lf = 0; lf < n_lf; ++lf) {
    const double a = std::isfinite(acc[lf]) ? std::clamp(acc[lf], lo, hi) : lo;
    fit.params.lfs.push_back({a, coverage[lf]});
  }
  return fit;
}

std::array<double, 3> TripletAccuracies(const VoteMatrix& votes,
                                        std::array<std::size_t, 3> lfs,
                                        bool clip_radicand) {
  for (std::size_t lf : lfs) {
    if (lf >= votes.cols()) throw ValidationError("triplet LF index out of range");
  }
  if (lfs[0] == lfs[1] || lfs[0] == lfs[2] || lfs[1] == lfs[2]) {
    throw ValidationError("triplet needs three distinct labeling functions");
  }
  auto moment = [&](std::size_t a, std::size_t b) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < votes.rows(); ++i) {
      const int va = ToInt(votes(i, a));
      const int vb = ToInt(votes(i, b));
      if (va == 0 || vb == 0) continue;
      sum += va * vb;
      ++count;
    }
    if (count == 0) {
      throw NumericalError("labeling functions '" + votes.lf_names()[a] + "' and '" +
                           votes.lf_names()[b] + "' never vote on the same row");
    }
    return sum / static_cast<double>(count);
  };
  const double m01 = moment(lfs[0], lfs[1]);
  const double m02 = moment(lfs[0], lfs[2]);
  const double m12 = moment(lfs[1], lfs[2]);

  constexpr double kTiny = 1e-12;
  auto margin = [&](double num_a, double num_b, double den, std::size_t lf) {
    double rad = den != 0.0 ? num_a * num_b / den : -1.0;
    if (!(rad > 0.0)) {
      if (!clip_radicand) {
        throw NumericalError("triplet radicand for '" + votes.lf_names()[lf] +
                             "' is not positive (" + std::to_string(rad) + ")");
      }
      rad = kTiny;
    }
    return std::sqrt(rad);
  };
  std::array<double, 3> mag = {margin(m01, m02, m12, lfs[0]),
                               margin(m01, m12, m02, lfs[1]),
                               margin(m02, m12, m01, lfs[2])};
  // sign(m_ij) = sign(margin_i) * sign(margin_j); take margin_0 > 0.
  std::array<double, 3> sign = {1.0, m01 < 0.0 ? -1.0 : 1.0, m02 < 0.0 ? -1.0 : 1.0};
  std::array<double, 3> acc{};
  double mean = 0.0;
  for (int i = 0; i < 3; ++i) {
    acc[i] = 0.5 * (1.0 + sign[i] * mag[i]);
    mean += acc[i] / 3.0;
  }
  if (mean < 0.5) {
    for (double& a : acc) a = 1.0 - a;
  }
  return acc;
}

double Posterior(const LabelModelParams& params, std::span<const Vote> row) {
  if (row.size() != params.lfs.size()) {
    throw ValidationError("vote row width does not match the label model");
  }
  const double pi = params.class_balance;
  double log_odds = std::log(pi) - std::log1p(-pi);
  for (std::size_t i = 0; i < row.size(); ++i) {
    const int v = ToInt(row[i]);
    if (v == 0) continue;
    const double a = params.lfs[i].accuracy;
    log_odds += v * (std::log(a) - std::log1p(-a));
  }
  if (log_odds >= 0.0) return 1.0 / (1.0 + std::exp(-log_odds));
  const double e = std::exp(log_odds);
  return e / (1.0 + e);
}

std::vector<double> Posteriors(const LabelModelParams& params, const VoteMatrix& votes) {
  std::vector<double> out(votes.rows());
  for (std::size_t i = 0; i < votes.rows(); ++i) out[i] = Posterior(params, votes.Row(i));
  return out;
}

SyntheticSample GenerateSynthetic(const LabelModelParams& truth, std::size_t n,
                                  std::uint64_t seed) {
  std::vector<std::string> names;
  for (std::size_t lf = 0; lf < truth.lfs.size(); ++lf) {
    names.push_back("lf_" + std::to_string(lf));
  }
  SyntheticSample sample{VoteMatrix(n, std::move(names)), std::vector<int>(n)};
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = rng.Bernoulli(truth.class_balance) ? 1 : -1;
    sample.labels[i] = y;
    for (std::size_t lf = 0; lf < truth.lfs.size(); ++lf) {
      const bool votes = rng.Bernoulli(truth.lfs[lf].propensity);
      const bool correct = rng.Bernoulli(truth.lfs[lf].accuracy);
      if (!votes) continue;
      sample.votes(i, lf) = (correct ? y : -y) > 0 ? Vote::kPositive : Vote::kNegative;
    }
  }
  return sample;
}

}  // namespace wsre::labelmodel
