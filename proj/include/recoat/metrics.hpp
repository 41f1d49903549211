#pragma once

#include <string>
#include <vector>

#include "recoat/model.hpp"

namespace recoat {

// Another agent's ground-truth future, valid-masked per step.
struct OtherFuture {
  std::vector<Point> points;
  std::vector<bool> valid;
};

struct EvalRecord {
  std::string scenario_id;
  PredictionSet pred;
  Tensor gt_future;  // (T,2)
  std::vector<OtherFuture> others_future;
};

// min over modes of the mean per-step displacement
double min_ade(const EvalRecord& record);

// min over modes of the final-step displacement
double min_fde(const EvalRecord& record);

// fraction of records with min_fde above the threshold
double miss_rate(const std::vector<EvalRecord>& records,
                 double threshold = 2.0);

// fraction of records whose top-probability trajectory passes within `radius`
// of any other agent's position at the same timestep
double overlap_rate(const std::vector<EvalRecord>& records,
                    double radius = 1.0);

// Single-bucket average precision: (record, mode) pairs ranked by confidence
// descending (ties by record then mode index); a pair is a true positive when
// its FDE is within the threshold and no higher-ranked pair already matched
// the record. Area under the max-interpolated PR curve, sampled at
// equal-confidence group boundaries.
double map_score(const std::vector<EvalRecord>& records,
                 double threshold = 2.0);

// first `steps` future steps only (horizon slicing: 6/10/16 steps for
// 3 s / 5 s / 8 s at 2 Hz)
EvalRecord truncate_record(const EvalRecord& record, int steps);

struct MetricsRow {
  std::string metric;
  double value = 0.0;
  std::size_t count = 0;
};

std::vector<MetricsRow> compute_metrics(const std::vector<EvalRecord>& records,
                                        bool per_horizon = false,
                                        double miss_threshold = 2.0,
                                        double overlap_radius = 1.0);

// CSV "metric,value,count" with a header line
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);

}  // namespace recoat
