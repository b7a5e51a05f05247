#include "wsre/labelmodel/io.h"

#include <cstdio>
#include <fstream>

#include "wsre/error.h"

namespace wsre::labelmodel {

nlohmann::json VotesToJson(const VoteMatrix& votes) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < votes.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Vote v : votes.Row(i)) row.push_back(ToInt(v));
    rows.push_back(std::move(row));
  }
  return {{"lf_names", votes.lf_names()}, {"votes", std::move(rows)}};
}

VoteMatrix VotesFromJson(const nlohmann::json& j) {
  try {
    auto names = j.at("lf_names").get<std::vector<std::string>>();
    const auto& rows = j.at("votes");
    VoteMatrix votes(rows.size(), names);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != names.size()) {
        throw ParseError("vote row " + std::to_string(i) + " has the wrong width");
      }
      for (std::size_t lf = 0; lf < names.size(); ++lf) {
        const int v = rows[i][lf].get<int>();
        if (v < -1 || v > 1) {
          throw ParseError("vote row " + std::to_string(i) + " has a value outside {-1, 0, 1}");
        }
        votes(i, lf) = static_cast<Vote>(v);
      }
    }
    return votes;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed vote matrix: ") + e.what());
  }
}

nlohmann::json ParamsToJson(const LabelModelParams& params,
                            std::span<const std::string> lf_names) {
  nlohmann::json lfs = nlohmann::json::array();
  for (std::size_t i = 0; i < params.lfs.size(); ++i) {
    nlohmann::json lf = {{"accuracy", params.lfs[i].accuracy},
                         {"propensity", params.lfs[i].propensity}};
    if (i < lf_names.size()) lf["name"] = lf_names[i];
    lfs.push_back(std::move(lf));
  }
  return {{"class_balance", params.class_balance}, {"lfs", std::move(lfs)}};
}

LabelModelParams ParamsFromJson(const nlohmann::json& j) {
  try {
    LabelModelParams params;
    params.class_balance = j.at("class_balance").get<double>();
    for (const auto& lf : j.at("lfs")) {
      params.lfs.push_back({lf.at("accuracy").get<double>(),
                            lf.at("propensity").get<double>()});
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed label model parameters: ") + e.what());
  }
}

nlohmann::json LogisticToJson(const LogisticModel& model) {
  std::vector<double> w(model.weights.data(), model.weights.data() + model.weights.size());
  return {{"weights", w},
          {"bias", model.bias},
          {"learning_rate", model.options.learning_rate},
          {"l2", model.options.l2},
          {"epochs", model.options.epochs},
          {"seed", model.options.seed},
          {"final_loss", model.loss_trace.empty() ? 0.0 : model.loss_trace.back()}};
}

LogisticModel LogisticFromJson(const nlohmann::json& j) {
  try {
    LogisticModel model;
    const auto w = j.at("weights").get<std::vector<double>>();
    model.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    model.bias = j.at("bias").get<double>();
    model.options.learning_rate = j.value("learning_rate", model.options.learning_rate);
    model.options.l2 = j.value("l2", model.options.l2);
    model.options.epochs = j.value("epochs", model.options.epochs);
    model.options.seed = j.value("seed", model.options.seed);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed logistic model: ") + e.what());
  }
}

void WriteLossTrace(const std::filesystem::path& path, std::span<const double> trace) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, trace[i]);
    out << buf;
  }
}

}  // namespace wsre::labelmodel
