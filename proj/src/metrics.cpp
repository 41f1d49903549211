#include "recoat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "recoat/error.hpp"

namespace recoat {

namespace {

void check_record(const EvalRecord& r) {
  if (r.pred.trajectories.rank() != 3 || r.pred.trajectories.dim(2) != 2)
    throw ShapeError("eval record: trajectories must be (K,T,2)");
  if (r.gt_future.rank() != 2 || r.gt_future.dim(1) != 2 ||
      r.gt_future.dim(0) != r.pred.trajectories.dim(1))
    throw ShapeError("eval record: gt/pred length mismatch");
  if (r.pred.probs.size() !=
      static_cast<std::size_t>(r.pred.trajectories.dim(0)))
    throw ShapeError("eval record: probs length mismatch");
}

double mode_fde(const EvalRecord& r, int j) {
  const int t = r.pred.trajectories.dim(1) - 1;
  return std::hypot(r.pred.trajectories.at(j, t, 0) - r.gt_future.at(t, 0),
                    r.pred.trajectories.at(j, t, 1) - r.gt_future.at(t, 1));
}

}  // namespace

double min_ade(const EvalRecord& record) {
  check_record(record);
  const int k = record.pred.trajectories.dim(0);
  const int t_len = record.pred.trajectories.dim(1);
  double best = 0.0;
  for (int j = 0; j < k; ++j) {
    double acc = 0.0;
    for (int t = 0; t < t_len; ++t)
      acc += std::hypot(
          record.pred.trajectories.at(j, t, 0) - record.gt_future.at(t, 0),
          record.pred.trajectories.at(j, t, 1) - record.gt_future.at(t, 1));
    acc /= t_len;
    if (j == 0 || acc < best) best = acc;
  }
  return best;
}

double min_fde(const EvalRecord& record) {
  check_record(record);
  const int k = record.pred.trajectories.dim(0);
  double best = 0.0;
  for (int j = 0; j < k; ++j) {
    const double d = mode_fde(record, j);
    if (j == 0 || d < best) best = d;
  }
  return best;
}

double miss_rate(const std::vector<EvalRecord>& records, double threshold) {
  if (records.empty()) return 0.0;
  std::size_t missed = 0;
  for (const EvalRecord& r : records)
    if (min_fde(r) > threshold) ++missed;
  return static_cast<double>(missed) / static_cast<double>(records.size());
}

double overlap_rate(const std::vector<EvalRecord>& records, double radius) {
  if (records.empty()) return 0.0;
  std::size_t overlapping = 0;
  for (const EvalRecord& r : records) {
    check_record(r);
    int top = 0;
    for (std::size_t j = 1; j < r.pred.probs.size(); ++j)
      if (r.pred.probs[j] > r.pred.probs[static_cast<std::size_t>(top)])
        top = static_cast<int>(j);
    const int t_len = r.pred.trajectories.dim(1);
    bool hit = false;
    for (const OtherFuture& other : r.others_future) {
      const int n = static_cast<int>(
          std::min<std::size_t>(other.points.size(), static_cast<std::size_t>(t_len)));
      for (int t = 0; t < n && !hit; ++t) {
        if (t < static_cast<int>(other.valid.size()) &&
            !other.valid[static_cast<std::size_t>(t)])
          continue;
        const double d =
            std::hypot(r.pred.trajectories.at(top, t, 0) -
                           other.points[static_cast<std::size_t>(t)].x,
                       r.pred.trajectories.at(top, t, 1) -
                           other.points[static_cast<std::size_t>(t)].y);
        if (d <= radius) hit = true;
      }
      if (hit) break;
    }
    if (hit) ++overlapping;
  }
  return static_cast<double>(overlapping) /
         static_cast<double>(records.size());
}

double map_score(const std::vector<EvalRecord>& records, double threshold) {
  if (records.empty()) throw ValueError("map_score: empty record set");
  struct Pair {
    double prob;
    std::size_t record;
    int mode;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < records.size(); ++i) {
    check_record(records[i]);
    for (std::size_t j = 0; j < records[i].pred.probs.size(); ++j)
      pairs.push_back({records[i].pred.probs[j], i, static_cast<int>(j)});
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    if (a.record != b.record) return a.record < b.record;
    return a.mode < b.mode;
  });

  // precision/recall sampled at equal-confidence group boundaries
  std::vector<bool> matched(records.size(), false);
  const double positives = static_cast<double>(records.size());
  std::size_t tp = 0, seen = 0;
  std::vector<std::pair<double, double>> curve;  // (recall, precision)
  std::size_t i = 0;
  while (i < pairs.size()) {
    std::size_t jend = i;
    while (jend < pairs.size() && pairs[jend].prob == pairs[i].prob) ++jend;
    for (std::size_t p = i; p < jend; ++p) {
      ++seen;
      const EvalRecord& r = records[pairs[p].record];
      if (!matched[pairs[p].record] &&
          mode_fde(r, pairs[p].mode) <= threshold) {
        matched[pairs[p].record] = true;
        ++tp;
      }
    }
    curve.emplace_back(static_cast<double>(tp) / positives,
                       static_cast<double>(tp) / static_cast<double>(seen));
    i = jend;
  }

  // max-interpolated area under the PR curve
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t c = 0; c < curve.size(); ++c) {
    double p_interp = 0.0;
    for (std::size_t d = c; d < curve.size(); ++d)
      p_interp = std::max(p_interp, curve[d].second);
    ap += (curve[c].first - prev_recall) * p_interp;
    prev_recall = curve[c].first;
  }
  return ap;
}

EvalRecord truncate_record(const EvalRecord& record, int steps) {
  check_record(record);
  const int k = record.pred.trajectories.dim(0);
  const int t_len = record.pred.trajectories.dim(1);
  if (steps < 1 || steps > t_len)
    throw ValueError("truncate_record: bad step count");
  EvalRecord out;
  out.scenario_id = record.scenario_id;
  out.pred.probs = record.pred.probs;
  out.pred.trajectories = Tensor({k, steps, 2});
  for (int j = 0; j < k; ++j)
    for (int t = 0; t < steps; ++t) {
      out.pred.trajectories.at(j, t, 0) = record.pred.trajectories.at(j, t, 0);
      out.pred.trajectories.at(j, t, 1) = record.pred.trajectories.at(j, t, 1);
    }
  out.gt_future = Tensor({steps, 2});
  for (int t = 0; t < steps; ++t) {
    out.gt_future.at(t, 0) = record.gt_future.at(t, 0);
    out.gt_future.at(t, 1) = record.gt_future.at(t, 1);
  }
  for (const OtherFuture& other : record.others_future) {
    OtherFuture trimmed;
    const std::size_t n =
        std::min(other.points.size(), static_cast<std::size_t>(steps));
    trimmed.points.assign(other.points.begin(), other.points.begin() + static_cast<std::ptrdiff_t>(n));
    trimmed.valid.assign(other.valid.begin(),
                         other.valid.begin() + static_cast<std::ptrdiff_t>(
                                                   std::min(other.valid.size(), n)));
    out.others_future.push_back(std::move(trimmed));
  }
  return out;
}

std::vector<MetricsRow> compute_metrics(const std::vector<EvalRecord>& records,
                                        bool per_horizon,
                                        double miss_threshold,
                                        double overlap_radius) {
  std::vector<MetricsRow> rows;
  const std::size_t n = records.size();
  auto add_all = [&](const std::vector<EvalRecord>& rs,
                     const std::string& suffix) {
    double ade = 0.0, fde = 0.0;
    for (const EvalRecord& r : rs) {
      ade += min_ade(r);
      fde += min_fde(r);
    }
    const double inv = rs.empty() ? 0.0 : 1.0 / static_cast<double>(rs.size());
    rows.push_back({"minADE" + suffix, ade * inv, rs.size()});
    rows.push_back({"minFDE" + suffix, fde * inv, rs.size()});
    rows.push_back({"miss_rate" + suffix, miss_rate(rs, miss_threshold), rs.size()});
    rows.push_back({"overlap_rate" + suffix, overlap_rate(rs, overlap_radius), rs.size()});
    rows.push_back({"mAP" + suffix, rs.empty() ? 0.0 : map_score(rs, miss_threshold), rs.size()});
  };
  add_all(records, "");
  if (per_horizon && n > 0) {
    for (const auto& [suffix, steps] :
         std::vector<std::pair<std::string, int>>{
             {"@3s", 6}, {"@5s", 10}, {"@8s", 16}}) {
      std::vector<EvalRecord> sliced;
      sliced.reserve(n);
      for (const EvalRecord& r : records)
        sliced.push_back(truncate_record(r, steps));
      add_all(sliced, suffix);
    }
  }
  return rows;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open metrics csv for writing: " + path);
  os << "metric,value,count\n";
  os.precision(17);
  for (const MetricsRow& r : rows)
    os << r.metric << "," << r.value << "," << r.count << "\n";
  if (!os) throw IoError("metrics csv write failed: " + path);
}

}  // namespace recoat
