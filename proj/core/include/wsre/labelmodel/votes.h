#ifndef WSRE_LABELMODEL_VOTES_H_
#define WSRE_LABELMODEL_VOTES_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wsre/scoring.h"

namespace wsre::labelmodel {

// Labeling-function output for relation existence.
enum class Vote : std::int8_t { kNegative = -1, kAbstain = 0, kPositive = 1 };

constexpr int ToInt(Vote v) { return static_cast<int>(v); }

// Row-major n_rows x n_lfs matrix of votes.
class VoteMatrix {
 public:
  VoteMatrix() = default;
  VoteMatrix(std::size_t n_rows, std::vector<std::string> lf_names);

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return lf_names_.size(); }
  const std::vector<std::string>& lf_names() const { return lf_names_; }

  Vote operator()(std::size_t row, std::size_t lf) const {
    return data_[row * cols() + lf];
  }
  Vote& operator()(std::size_t row, std::size_t lf) {
    return data_[row * cols() + lf];
  }
  std::span<const Vote> Row(std::size_t row) const {
    return {data_.data() + row * cols(), cols()};
  }

  // Keeps only the listed rows, in the given order.
  VoteMatrix SelectRows(std::span<const std::size_t> rows) const;
  // Keeps only the listed labeling functions.
  VoteMatrix SelectColumns(std::span<const std::size_t> cols) const;

 private:
  std::size_t n_rows_ = 0;
  std::vector<std::string> lf_names_;
  std::vector<Vote> data_;
};

// Percentile cut points for turning one continuous source into votes.
struct SourceThresholds {
  double hi = 70.0;
  double lo = 30.0;
};

// +1 if v >= percentile(hi), -1 if v <= percentile(lo), else abstain
// (linear-interpolated percentiles over the finite values). NaN entries
// abstain. Fewer than two distinct values abstains everywhere and sets
// *constant.
std::vector<Vote> BinarizeSource(std::span<const double> values,
                                 const SourceThresholds& thresholds,
                                 bool* constant = nullptr);

struct BinarizeOptions {
  SourceThresholds re;   // each existence paraphrase
  SourceThresholds cos;  // mean cosine similarity
  SourceThresholds sr;   // mean relation-specific logit
  bool include_sr = false;
};

struct BinarizeResult {
  VoteMatrix votes;
  std::vector<std::string> warnings;
};

// One LF per existence paraphrase ("re_0", "re_1", ...), then "mean_cos",
// then "mean_sr" when enabled. Rows follow `scores`.
BinarizeResult BinarizeSources(std::span<const scoring::PairScores> scores,
                               const BinarizeOptions& options);

// Sign of the sum of non-abstain votes; ties and all-abstain rows give -1.
std::vector<int> MajorityVote(const VoteMatrix& votes);

}  // namespace wsre::labelmodel

#endif  // WSRE_LABELMODEL_VOTES_H_
