#ifndef WSRE_LABELMODEL_IO_H_
#define WSRE_LABELMODEL_IO_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wsre/labelmodel/label_model.h"
#include "wsre/labelmodel/logistic.h"
#include "wsre/labelmodel/votes.h"

namespace wsre::labelmodel {

// {"lf_names": [...], "votes": [[-1, 0, 1, ...], ...]}
nlohmann::json VotesToJson(const VoteMatrix& votes);
VoteMatrix VotesFromJson(const nlohmann::json& j);

// {"class_balance", "lfs": [{"name", "accuracy", "propensity"}]}
nlohmann::json ParamsToJson(const LabelModelParams& params,
                            std::span<const std::string> lf_names = {});
LabelModelParams ParamsFromJson(const nlohmann::json& j);

// {"weights", "bias", "learning_rate", "l2", "epochs", "seed", "final_loss"}
nlohmann::json LogisticToJson(const LogisticModel& model);
LogisticModel LogisticFromJson(const nlohmann::json& j);

// "epoch,loss" header then one line per entry.
void WriteLossTrace(const std::filesystem::path& path,
                    std::span<const double> trace);

}  // namespace wsre::labelmodel

#endif  // WSRE_LABELMODEL_IO_H_
