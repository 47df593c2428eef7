#include "srlstm/evaluation.hpp"

#include <algorithm>
#include <future>
#include <iomanip>
#include <ostream>

namespace srlstm {

double EvalReport::avg_mad() const {
  if (scenes.empty()) throw MetricError("report has no scenes");
  double s = 0.0;
  for (const auto& r : scenes) s += r.mad;
  return s / double(scenes.size());
}

double EvalReport::avg_fad() const {
  if (scenes.empty()) throw MetricError("report has no scenes");
  double s = 0.0;
  for (const auto& r : scenes) s += r.fad;
  return s / double(scenes.size());
}

SceneResult evaluate_windows(SrLstmModel& model, const std::vector<PedestrianWindow>& windows,
                             const std::string& scene, std::vector<TraceRow>* traces,
                             PredictionSource source) {
  DisplacementTotals totals;
  for (const auto& w : windows) {
    RolloutResult r;
    if (source == PredictionSource::ground_truth) {
      for (std::size_t p = 0; p < w.peds(); ++p) {
        if (!w.is_target(p)) continue;
        r.targets.push_back(p);
        Trajectory truth;
        for (std::size_t t = kObserved; t < w.steps; ++t) truth.push_back(w.scene_xy[w.at(t, p)]);
        r.truth.push_back(truth);
        r.predicted.push_back(truth);
      }
    } else {
      r = rollout(model, w);
    }
    totals.add(r.predicted, r.truth);
    if (!traces) continue;
    for (std::size_t k = 0; k < r.targets.size(); ++k) {
      for (std::size_t s = 0; s < r.predicted[k].size(); ++s) {
        traces->push_back({w.scene, w.frame(kObserved + s), w.ped_ids[r.targets[k]], r.truth[k][s],
                           r.predicted[k][s]});
      }
    }
  }
  SceneResult out;
  out.scene = scene;
  out.mad = totals.mad();
  out.fad = totals.fad();
  out.targets = totals.pedestrians;
  return out;
}

namespace {

const std::vector<PedestrianWindow>& scene_data(const SceneWindows& data, const std::string& scene) {
  auto it = data.find(scene);
  if (it == data.end() || it->second.empty()) {
    throw ConfigError("no prepared windows for scene `" + scene + "`");
  }
  return it->second;
}

std::vector<std::string> test_scenes(const RunConfig& config) {
  return config.test_scenes.empty() ? config.scenes : config.test_scenes;
}

}  // namespace

SrLstmModel train_on_scenes(const RunConfig& config, const SceneWindows& data,
                            const std::vector<std::string>& held_out, const EpochCallback& on_epoch,
                            std::vector<FitResult>* stages) {
  std::vector<PedestrianWindow> pool;
  for (const auto& scene : config.scenes) {
    if (std::find(held_out.begin(), held_out.end(), scene) != held_out.end()) continue;
    const auto& w = scene_data(data, scene);
    pool.insert(pool.end(), w.begin(), w.end());
  }
  if (pool.empty()) throw ConfigError("no training scenes left after holding out test scenes");
  std::vector<PedestrianWindow> train, validation;
  split_validation(pool, config.train.validation_fraction, train, validation);
  return train_model(config.model, train, validation, config.train, on_epoch, stages);
}

FoldResult run_fold(const RunConfig& config, const SceneWindows& data, const std::string& test_scene,
                    const FoldCallback& on_epoch) {
  const auto& test = scene_data(data, test_scene);
  EpochCallback cb;
  if (on_epoch) cb = [&](const EpochLog& log) { on_epoch(test_scene, log); };
  std::vector<FitResult> stages;
  SrLstmModel model = train_on_scenes(config, data, {test_scene}, cb, &stages);
  SceneResult result = evaluate_windows(model, test, test_scene);
  return FoldResult{test_scene, std::move(model), std::move(stages), result};
}

EvalReport leave_one_out(const RunConfig& config, const SceneWindows& data,
                         const FoldCallback& on_epoch, std::vector<FoldResult>* folds) {
  const auto scenes = test_scenes(config);
  for (const auto& s : config.scenes) scene_data(data, s);
  for (const auto& s : scenes) scene_data(data, s);

  std::vector<FoldResult> results;
  const std::size_t jobs = std::max<std::size_t>(1, config.jobs);
  for (std::size_t begin = 0; begin < scenes.size(); begin += jobs) {
    const std::size_t end = std::min(scenes.size(), begin + jobs);
    if (end - begin == 1) {
      results.push_back(run_fold(config, data, scenes[begin], on_epoch));
      continue;
    }
    std::vector<std::future<FoldResult>> pending;
    for (std::size_t i = begin; i < end; ++i) {
      pending.push_back(std::async(std::launch::async, [&, i] {
        return run_fold(config, data, scenes[i], on_epoch);
      }));
    }
    for (auto& f : pending) results.push_back(f.get());
  }

  EvalReport report;
  report.variant_id = variant_label(config);
  report.fingerprint = fingerprint(config);
  for (const auto& f : results) report.scenes.push_back(f.result);
  if (folds) *folds = std::move(results);
  return report;
}

std::vector<EvalReport> ablation_matrix(const RunConfig& base, const std::vector<int>& variant_ids,
                                        const SceneWindows& data, const FoldCallback& on_epoch) {
  std::vector<RunConfig> configs;
  for (int id : variant_ids) {
    RunConfig c = base;
    apply_variant(c, id);
    configs.push_back(std::move(c));
  }
  std::vector<EvalReport> reports;
  for (const auto& c : configs) reports.push_back(leave_one_out(c, data, on_epoch));
  return reports;
}

std::string variant_label(const RunConfig& config) {
  if (config.variant == 0) return "V-LSTM";
  if (config.variant > 0) return std::to_string(config.variant);
  return "custom";
}

void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  const auto old = out.precision(17);
  out << "variant_id,scene,MAD,FAD\n";
  for (const auto& r : reports) {
    for (const auto& s : r.scenes) out << r.variant_id << ',' << s.scene << ',' << s.mad << ',' << s.fad << '\n';
    out << r.variant_id << ",AVG," << r.avg_mad() << ',' << r.avg_fad() << '\n';
  }
  out.precision(old);
}

void write_traces_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  const auto old = out.precision(17);
  out << "frame,ped,x_gt,y_gt,x_pred,y_pred\n";
  for (const auto& r : rows) {
    out << r.frame << ',' << r.ped << ',' << r.truth.x << ',' << r.truth.y << ',' << r.predicted.x << ','
        << r.predicted.y << '\n';
  }
  out.precision(old);
}

}  // namespace srlstm
