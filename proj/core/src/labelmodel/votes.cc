#include "wsre/labelmodel/votes.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wsre/error.h"
#include "wsre/util/stats.h"

namespace wsre::labelmodel {

VoteMatrix::VoteMatrix(std::size_t n_rows, std::vector<std::string> lf_names)
    : n_rows_(n_rows),
      lf_names_(std::move(lf_names)),
      data_(n_rows * lf_names_.size(), Vote::kAbstain) {}

VoteMatrix VoteMatrix::SelectRows(std::span<const std::size_t> rows) const {
  VoteMatrix out(rows.size(), lf_names_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols(); ++j) out(i, j) = (*this)(rows[i], j);
  }
  return out;
}

VoteMatrix VoteMatrix::SelectColumns(std::span<const std::size_t> cols) const {
  std::vector<std::string> names;
  for (std::size_t c : cols) names.push_back(lf_names_.at(c));
  VoteMatrix out(n_rows_, std::move(names));
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = (*this)(i, cols[j]);
  }
  return out;
}

std::vector<Vote> BinarizeSource(std::span<const double> values,
                                 const SourceThresholds& thresholds,
                                 bool* constant) {
  if (!(thresholds.lo <= thresholds.hi) || thresholds.lo < 0.0 ||
      thresholds.hi > 100.0) {
    throw ValidationError("vote thresholds need 0 <= lo <= hi <= 100");
  }
  std::vector<double> finite;
  for (double v : values) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  std::sort(finite.begin(), finite.end());
  std::vector<Vote> out(values.size(), Vote::kAbstain);
  const bool degenerate = finite.empty() || finite.front() == finite.back();
  if (constant) *constant = degenerate;
  if (degenerate) return out;

  const double hi = PercentileSorted(finite, thresholds.hi);
  const double lo = PercentileSorted(finite, thresholds.lo);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) continue;
    if (v >= hi) {
      out[i] = Vote::kPositive;
    } else if (v <= lo) {
      out[i] = Vote::kNegative;
    }
  }
  return out;
}

BinarizeResult BinarizeSources(std::span<const scoring::PairScores> scores,
                               const BinarizeOptions& options) {
  std::size_t n_re = 0;
  for (const auto& s : scores) n_re = std::max(n_re, s.re_logits.size());

  std::vector<std::string> names;
  for (std::size_t k = 0; k < n_re; ++k) names.push_back("re_" + std::to_string(k));
  names.push_back("mean_cos");
  if (options.include_sr) names.push_back("mean_sr");

  BinarizeResult result{VoteMatrix(scores.size(), names), {}};
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  auto fill = [&](std::size_t lf, const std::vector<double>& values,
                  const SourceThresholds& th) {
    bool constant = false;
    const std::vector<Vote> votes = BinarizeSource(values, th, &constant);
    if (constant) {
      result.warnings.push_back("labeling function '" + names[lf] +
                                "' has fewer than two distinct values; it abstains everywhere");
    }
    for (std::size_t i = 0; i < votes.size(); ++i) result.votes(i, lf) = votes[i];
  };

  std::vector<double> values(scores.size());
  for (std::size_t k = 0; k < n_re; ++k) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const auto& re = scores[i].re_logits;
      values[i] = scores[i].scored && k < re.size() ? re[k] : kNaN;
    }
    fill(k, values, options.re);
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    values[i] = scores[i].scored && !scores[i].cos_sims.empty() ? scores[i].mean_cos : kNaN;
  }
  fill(n_re, values, options.cos);
  if (options.include_sr) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      values[i] = scores[i].mean_sr ? *scores[i].mean_sr : kNaN;
    }
    fill(n_re + 1, values, options.sr);
  }
  return result;
}

std::vector<int> MajorityVote(const VoteMatrix& votes) {
  std::vector<int> out(votes.rows());
  for (std::size_t i = 0; i < votes.rows(); ++i) {
    int sum = 0;
    for (Vote v : votes.Row(i)) sum += ToInt(v);
    out[i] = sum > 0 ? 1 : -1;
  }
  return out;
}

}  // namespace wsre::labelmodel
