#include "recoat/predictions_io.hpp"

#include <fstream>

#include <json.hpp>

#include "recoat/error.hpp"

namespace recoat {

using nlohmann::json;

void write_predictions(const std::string& path,
                       const std::vector<PredictionRecord>& records) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open predictions for writing: " + path);
  os << json{{"schema", kPredictionSchema}}.dump() << "\n";
  for (const PredictionRecord& r : records) {
    validate_prediction_set(r.pred);
    json trajs = json::array();
    const int k = r.pred.trajectories.dim(0);
    const int t_len = r.pred.trajectories.dim(1);
    for (int j = 0; j < k; ++j) {
      json pts = json::array();
      for (int t = 0; t < t_len; ++t)
        pts.push_back({r.pred.trajectories.at(j, t, 0),
                       r.pred.trajectories.at(j, t, 1)});
      trajs.push_back(pts);
    }
    os << json{{"scenario_id", r.scenario_id},
               {"trajectories", trajs},
               {"probs", r.pred.probs}}
              .dump()
       << "\n";
  }
  if (!os) throw IoError("predictions write failed: " + path);
}

std::vector<PredictionRecord> read_predictions(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open predictions: " + path);
  std::string line;
  if (!std::getline(is, line))
    throw ParseError("empty predictions file: " + path);
  try {
    const json header = json::parse(line);
    if (header.at("schema").get<std::string>() != kPredictionSchema)
      throw ParseError("unsupported prediction schema: " + path);
    std::vector<PredictionRecord> out;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      PredictionRecord r;
      r.scenario_id = j.at("scenario_id").get<std::string>();
      const auto& trajs = j.at("trajectories");
      const int k = static_cast<int>(trajs.size());
      const int t_len = k > 0 ? static_cast<int>(trajs[0].size()) : 0;
      r.pred.trajectories = Tensor({k, t_len, 2});
      for (int jj = 0; jj < k; ++jj)
        for (int t = 0; t < t_len; ++t) {
          r.pred.trajectories.at(jj, t, 0) = trajs[jj][t][0].get<double>();
          r.pred.trajectories.at(jj, t, 1) = trajs[jj][t][1].get<double>();
        }
      r.pred.probs = j.at("probs").get<std::vector<double>>();
      validate_prediction_set(r.pred);
      out.push_back(std::move(r));
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed predictions: ") + e.what());
  }
}

}  // namespace recoat
