#pragma once

#include <string>
#include <vector>

#include "recoat/model.hpp"

namespace recoat {

inline constexpr const char* kPredictionSchema = "recoat-pred/1";

struct PredictionRecord {
  std::string scenario_id;
  PredictionSet pred;
};

// JSON lines: a {"schema": "recoat-pred/1"} header line, then one record per
// scene.
void write_predictions(const std::string& path,
                       const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> read_predictions(const std::string& path);

}  // namespace recoat
