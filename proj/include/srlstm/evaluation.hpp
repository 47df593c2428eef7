#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "srlstm/config.hpp"
#include "srlstm/metrics.hpp"
#include "srlstm/model.hpp"
#include "srlstm/training.hpp"

namespace srlstm {

using SceneWindows = std::map<std::string, std::vector<PedestrianWindow>>;

struct SceneResult {
  std::string scene;
  double mad = 0.0;
  double fad = 0.0;
  std::size_t targets = 0;
};

struct EvalReport {
  std::string variant_id;
  std::string fingerprint;
  std::vector<SceneResult> scenes;

  /// Unweighted means over the scene rows.
  double avg_mad() const;
  double avg_fad() const;
};

/// One predicted point of one target, in the scene frame.
struct TraceRow {
  std::string scene;
  std::int64_t frame = 0;
  std::int64_t ped = 0;
  Point truth;
  Point predicted;
};

enum class PredictionSource { model, ground_truth };

/// Multi-step rollouts over every window; metrics pool all pedestrian-steps.
/// PredictionSource::ground_truth replaces the model with a perfect oracle.
SceneResult evaluate_windows(SrLstmModel& model, const std::vector<PedestrianWindow>& windows,
                             const std::string& scene, std::vector<TraceRow>* traces = nullptr,
                             PredictionSource source = PredictionSource::model);

struct FoldResult {
  std::string test_scene;
  SrLstmModel model;
  std::vector<FitResult> stages;
  SceneResult result;
};

using FoldCallback = std::function<void(const std::string& test_scene, const EpochLog&)>;

/// Trains on every configured scene not in `held_out`, validating on the
/// final part of each training scene.
SrLstmModel train_on_scenes(const RunConfig& config, const SceneWindows& data,
                            const std::vector<std::string>& held_out, const EpochCallback& on_epoch = {},
                            std::vector<FitResult>* stages = nullptr);

/// Trains on every configured scene except `test_scene` and evaluates on it.
FoldResult run_fold(const RunConfig& config, const SceneWindows& data, const std::string& test_scene,
                    const FoldCallback& on_epoch = {});

/// Every test scene in turn (config.test_scenes, or all config.scenes), up to
/// config.jobs folds at once. Throws ConfigError if a scene has no data.
EvalReport leave_one_out(const RunConfig& config, const SceneWindows& data,
                         const FoldCallback& on_epoch = {}, std::vector<FoldResult>* folds = nullptr);

/// leave_one_out for each ablation row applied on top of `base`.
std::vector<EvalReport> ablation_matrix(const RunConfig& base, const std::vector<int>& variant_ids,
                                        const SceneWindows& data, const FoldCallback& on_epoch = {});

std::string variant_label(const RunConfig& config);

/// `variant_id,scene,MAD,FAD` rows plus one AVG row per report.
void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports);
/// `frame,ped,x_gt,y_gt,x_pred,y_pred`.
void write_traces_csv(std::ostream& out, const std::vector<TraceRow>& rows);

}  // namespace srlstm
