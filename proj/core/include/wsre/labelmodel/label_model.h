#ifndef WSRE_LABELMODEL_LABEL_MODEL_H_
#define WSRE_LABELMODEL_LABEL_MODEL_H_

// Generative label model for binary relation existence under conditionally
// independent labeling functions.
//
// Each LF i abstains with probability 1 - p_i independently of Y and, when
// it votes, agrees with Y with probability a_i. The accuracies are
// recovered without labels from second moments: with O the LF statistics
// and S the indicator of Y = +1,
//
//   Cov(O u S) = [[S_O, S_OS], [S_OS^T, S_S]],   K = Cov^-1,
//   K_O = S_O^-1 + z z^T,  z = sqrt(c) S_O^-1 S_OS,
//   c = (S_S - S_OS^T S_O^-1 S_OS)^-1.
//
// Conditional independence forces the entries of K_O linking different
// LFs to vanish, so z solves the rank-one completion
//   min_z  sum_{(i,j) across LFs} ((S_O^-1)_ij + z_i z_j)^2,
// after which S_OS = S_O z / sqrt(c) with c = (1 + z^T S_O z) / S_S gives
// the LF/label covariances, and from them the accuracies. The global sign
// of z is fixed by assuming the LFs are better than random on average.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wsre/labelmodel/votes.h"

namespace wsre::labelmodel {

struct LfParams {
  double accuracy = 0.5;    // P(vote == Y | vote != 0)
  double propensity = 1.0;  // P(vote != 0)
};

struct LabelModelParams {
  double class_balance = 0.5;  // P(Y = +1)
  std::vector<LfParams> lfs;
};

enum class MomentBasis {
  // One statistic per LF: the signed vote in {-1, 0, +1}.
  kSigned,
  // Indicators for all but one vote value per LF: 1{+1} and 1{-1} when the
  // LF abstains somewhere, else 1{+1} alone.
  kIndicator,
};

struct FitOptions {
  MomentBasis basis = MomentBasis::kSigned;
  double clip_eps = 1e-3;  // accuracies clipped to [0.5 + eps, 1 - eps]
  int max_iterations = 5000;
  double tolerance = 1e-12;
};

struct LabelModelFit {
  LabelModelParams params;
  std::vector<double> raw_accuracies;  // before clipping
  double residual_norm = 0.0;          // of the completion objective
  int iterations = 0;
};

// Requires >= 3 LFs, each voting somewhere, and class_balance in (0, 1).
// Throws ValidationError for unmet preconditions and NumericalError for a
// singular moment matrix (naming the perfectly correlated LF pair) or when
// the completion does not converge (reporting the residual norm).
LabelModelFit FitLabelModel(const VoteMatrix& votes, double class_balance,
                            const FitOptions& options = {});

// Closed-form method of moments for three LFs, from agreement moments on
// jointly non-abstaining rows, M_ij = E[l_i l_j | l_i, l_j != 0]:
//   |2 a_i - 1| = sqrt(M_ij M_ik / M_jk).
// Under the symmetric-accuracy model these moments do not depend on the
// class balance. Signs follow from the signs of M and the
// better-than-random assumption. A non-positive radicand throws
// NumericalError unless clip_radicand, which replaces it with a tiny
// positive value.
std::array<double, 3> TripletAccuracies(const VoteMatrix& votes,
                                        std::array<std::size_t, 3> lfs = {0, 1, 2},
                                        bool clip_radicand = false);

// P(Y = +1 | votes) under conditional independence. Abstains contribute
// nothing; an all-abstain row returns the class balance.
double Posterior(const LabelModelParams& params, std::span<const Vote> row);
std::vector<double> Posteriors(const LabelModelParams& params,
                               const VoteMatrix& votes);

struct SyntheticSample {
  VoteMatrix votes;
  std::vector<int> labels;  // +1 / -1
};

// Y ~ Bernoulli(class_balance) mapped to +/-1; each LF independently
// abstains with probability 1 - p_i, else votes Y with probability a_i.
SyntheticSample GenerateSynthetic(const LabelModelParams& truth, std::size_t n,
                                  std::uint64_t seed);

}  // namespace wsre::labelmodel

#endif  // WSRE_LABELMODEL_LABEL_MODEL_H_
