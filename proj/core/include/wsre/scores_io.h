#ifndef WSRE_SCORES_IO_H_
#define WSRE_SCORES_IO_H_

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "wsre/scoring.h"

namespace wsre::scoring {

// One JSON object per line:
//   {doc_id, h, t, head_type, tail_type, oe_embedding | oe_row, cos_sims,
//    re_logits, sr_logits?, mean_cos, mean_sr, scored, flags}
// With `embedding_sidecar`, embeddings go to <path>.emb.bin (row-major
// little-endian float32) described by <path>.emb.json
// {"rows", "cols", "dtype": "float32", "order": "row-major",
//  "byte_order": "little"}, and each line carries "oe_row" instead.
void WriteScores(const std::filesystem::path& path,
                 const std::vector<PairScores>& scores,
                 bool embedding_sidecar = false);

std::vector<PairScores> ReadScores(const std::filesystem::path& path);

nlohmann::json ScoresToJson(const PairScores& s);
PairScores ScoresFromJson(const nlohmann::json& j);

}  // namespace wsre::scoring

#endif  // WSRE_SCORES_IO_H_
