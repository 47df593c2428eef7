#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "refinement_oracle.hpp"
#include "srlstm/cli.hpp"
#include "srlstm/evaluation.hpp"
#include "srlstm/gradcheck.hpp"
#include "srlstm/metrics.hpp"
#include "srlstm/synthetic.hpp"
#include "srlstm/training.hpp"

using namespace srlstm;
using namespace srlstm::testing;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

PedestrianWindow permute(const PedestrianWindow& w, const std::vector<std::size_t>& perm) {
  PedestrianWindow out = w;
  const std::size_t n = w.peds();
  for (std::size_t k = 0; k < n; ++k) {
    out.ped_ids[k] = w.ped_ids[perm[k]];
    out.target[k] = w.target[perm[k]];
    out.shift[k] = w.shift[perm[k]];
    for (std::size_t t = 0; t < w.steps; ++t) {
      out.scene_xy[out.at(t, k)] = w.scene_xy[w.at(t, perm[k])];
      out.model_xy[out.at(t, k)] = w.model_xy[w.at(t, perm[k])];
      out.present[out.at(t, k)] = w.present[w.at(t, perm[k])];
    }
  }
  return out;
}

ModelConfig refinement_model(std::size_t iterations) {
  ModelConfig m;
  m.refinement.iterations = iterations;
  return m;
}

// Scenes in the dataset root when present, simulated ones otherwise.
struct Scenes {
  fs::path root;
  bool synthetic = false;
};

Scenes locate_scenes(const fs::path& work) {
  RunConfig probe;
  const fs::path root = cli::dataset_root(probe);
  if (fs::exists(root / "zara01.txt") && fs::exists(root / "zara02.txt")) return {root, false};
  const fs::path synth = work / "synthetic";
  write_synthetic_benchmark(synth);
  return {synth, true};
}

std::vector<PedestrianWindow> load_windows(const Scenes& scenes, const fs::path& work, const std::string& name) {
  RunConfig c;
  c.dataset_root = scenes.root.string();
  c.out_dir = (work / "prepared").string();
  return cli::prepare_scenes(c, {name})[0].windows;
}

Verdict criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  GradcheckSetup setup;
  setup.pedestrians = 5;
  setup.steps = 6;
  GradcheckOutcome g = run_gradcheck(refinement_model(2), setup);
  const double secs = seconds_since(start);
  const bool pass = g.result.max_relative_error < 1e-4 && secs < 120.0;
  return {pass, "L=2 MG+PA, max rel err " + fmt(g.result.max_relative_error) + " at " + g.result.worst_parameter +
                    ", " + std::to_string(g.result.checked) + " entries, " + fmt(secs) + " s"};
}

Verdict criterion_2() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Instance in = random_instance(5000 + seed, 3 + seed % 3);
    NeighborGraph g = graph_of(in);
    Tensor2 c = refine_step(in.states, in.pos, g, in.store, 0, in.config);
    auto h = rows_of(in.states.h);
    worst = std::max(worst, max_diff(c, oracle_step(in, h, rows_of(in.states.c), h, 0, true, true)));
  }
  return {worst < 1e-12, "10 instances, max abs diff " + fmt(worst)};
}

Verdict criterion_3(const std::vector<PedestrianWindow>& windows) {
  // (a) L = 0 against a model built without refinement.
  bool a = true;
  SrLstmModel vanilla = SrLstmModel::create(refinement_model(0), 3);
  SrLstmModel zeroed = SrLstmModel::create(refinement_model(2), 3);
  zeroed.config.refinement.iterations = 0;
  for (std::size_t k = 0; k < 20 && k < windows.size(); ++k)
    a = a && rollout(vanilla, windows[k]).predicted == rollout(zeroed, windows[k]).predicted;

  // (b) a single pedestrian under any L.
  bool b = true;
  for (std::size_t L = 1; L <= 3; ++L) {
    SrLstmModel sr = SrLstmModel::create(refinement_model(L), 3);
    for (std::size_t k = 0; k < 10; ++k) {
      PedestrianWindow w = straight_window(1, 70 + k);
      b = b && rollout(sr, w).predicted == rollout(vanilla, w).predicted;
    }
  }

  // (c) no gate, no attention: c_i + mean_j W_mp h_j.
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Instance in = random_instance(6000 + seed, 5);
    in.config.use_motion_gate = false;
    in.config.use_attention = false;
    NeighborGraph g = graph_of(in);
    Tensor2 c = refine_step(in.states, in.pos, g, in.store, 0, in.config);
    const Tensor2& W = in.store.value(sr_names::message(0));
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t r = 0; r < 64; ++r) {
        double expect = in.states.c(i, r);
        for (std::size_t j : g.neighbors[i]) {
          double m = 0.0;
          for (std::size_t q = 0; q < 64; ++q) m += W(r, q) * in.states.h(j, q);
          expect += m / double(g.neighbors[i].size());
        }
        worst = std::max(worst, std::abs(c(i, r) - expect));
      }
  }
  const bool c = worst < 1e-12;
  return {a && b && c, std::string("(a) L=0 bitwise ") + (a ? "yes" : "no") + ", (b) lone pedestrian bitwise " +
                           (b ? "yes" : "no") + ", (c) simple refinement max diff " + fmt(worst)};
}

Verdict criterion_4() {
  double worst_sum = 0.0, min_gate = 1.0, max_gate = 0.0;
  std::size_t vectors = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Instance in = random_instance(7000 + seed, 2 + seed % 8, 1, 6.0 + double(seed % 5));
    RefinementTrace trace;
    refine_step(in.states, in.pos, graph_of(in), in.store, 0, in.config, {}, &trace);
    std::vector<double> sums(in.pos.size(), 0.0);
    std::vector<bool> seen(in.pos.size(), false);
    for (const auto& rec : trace.records) {
      sums[rec.target] += rec.weight;
      seen[rec.target] = true;
      for (double g : rec.gate) {
        min_gate = std::min(min_gate, g);
        max_gate = std::max(max_gate, g);
      }
    }
    for (std::size_t i = 0; i < sums.size(); ++i) {
      if (!seen[i]) continue;
      ++vectors;
      worst_sum = std::max(worst_sum, std::abs(sums[i] - 1.0));
    }
  }
  const bool pass = worst_sum <= 1e-9 && min_gate > 0.0 && max_gate < 1.0 && vectors > 0;
  return {pass, "1000 evaluations, " + std::to_string(vectors) + " attention vectors, max |sum-1| " +
                    fmt(worst_sum) + ", gates in [" + fmt(min_gate, 6) + ", " + fmt(max_gate, 6) + "]"};
}

Verdict criterion_5(const std::vector<PedestrianWindow>& windows) {
  SrLstmModel model = SrLstmModel::create(refinement_model(2), 5);
  std::mt19937_64 rng(55);
  double worst = 0.0;
  std::size_t tested = 0;
  for (std::size_t k = 0; tested < 20 && k < windows.size(); k += 7) {
    const PedestrianWindow& w = windows[k];
    if (w.peds() < 2) continue;
    std::vector<std::size_t> perm(w.peds());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    RolloutResult base = rollout(model, w), moved = rollout(model, permute(w, perm));
    // Pedestrian k of the permuted window is perm[k] of the original.
    for (std::size_t a = 0; a < moved.targets.size(); ++a) {
      const std::size_t original = perm[moved.targets[a]];
      const auto it = std::find(base.targets.begin(), base.targets.end(), original);
      if (it == base.targets.end()) return {false, "target sets differ"};
      const auto& p = base.predicted[std::size_t(it - base.targets.begin())];
      for (std::size_t t = 0; t < p.size(); ++t)
        worst = std::max({worst, std::abs(p[t].x - moved.predicted[a][t].x), std::abs(p[t].y - moved.predicted[a][t].y)});
    }
    ++tested;
  }
  return {tested == 20 && worst == 0.0, std::to_string(tested) + " instances, L=2, max deviation " + fmt(worst)};
}

Verdict criterion_6(const std::vector<PedestrianWindow>& zara01, bool synthetic) {
  const auto start = std::chrono::steady_clock::now();
  MiniBatch batch;
  batch.windows.assign(zara01.begin(), zara01.begin() + 8);
  SrLstmModel model = SrLstmModel::create(refinement_model(1), 1);
  TrainConfig tc;
  tc.random_rotation = false;
  AdamState adam;
  adam.learning_rate = tc.learning_rate;
  std::mt19937_64 rng(1);
  const std::vector<MiniBatch> batches{batch};
  for (int step = 0; step < 2000; ++step) train_epoch(model, batches, tc, adam, rng);
  const double loss = batch_loss(model, batch, tc);
  const double secs = seconds_since(start);
  return {loss < 1e-3 && secs < 600.0, std::string(synthetic ? "synthetic zara01 surrogate" : "zara01") +
                                           ", 2000 Adam steps, loss " + fmt(loss) + ", " + fmt(secs) + " s"};
}

Verdict criterion_7() {
  Trajectory gt(12), pr(12);
  for (std::size_t t = 0; t < 12; ++t) {
    gt[t] = {0.1 * double(t), -0.2 * double(t)};
    pr[t] = {gt[t].x + 0.3, gt[t].y + 0.4};
  }
  const double offset_mad = mad({pr}, {gt});
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-10, 10);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t peds = 1 + trial % 6;
    std::vector<Trajectory> a(peds, Trajectory(12)), b(peds, Trajectory(12));
    double sum = 0.0, last = 0.0;
    for (std::size_t p = 0; p < peds; ++p)
      for (std::size_t t = 0; t < 12; ++t) {
        a[p][t] = {u(rng), u(rng)};
        b[p][t] = {u(rng), u(rng)};
        const double d = std::sqrt((a[p][t].x - b[p][t].x) * (a[p][t].x - b[p][t].x) +
                                   (a[p][t].y - b[p][t].y) * (a[p][t].y - b[p][t].y));
        sum += d;
        if (t == 11) last += d;
      }
    worst = std::max({worst, std::abs(mad(a, b) - sum / double(peds * 12)), std::abs(fad(a, b) - last / double(peds))});
  }
  const bool exact = std::abs(offset_mad - 0.5) < 1e-15;
  return {exact && worst < 1e-12, "offset (0.3,0.4) MAD " + fmt(offset_mad, 17) + ", random max diff " + fmt(worst)};
}

Verdict criterion_8(const Scenes& scenes, const fs::path& work) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig base;
  base.scenes = {"zara01", "zara02"};
  base.test_scenes = {"zara02"};
  base.train.epochs = 50;
  base.dataset_root = scenes.root.string();
  base.out_dir = (work / "prepared").string();
  SceneWindows data = cli::as_scene_windows(cli::prepare_scenes(base, base.scenes));

  double result[2] = {0, 0}, fad_result[2] = {0, 0};
  const int variants[2] = {0, 5};
  for (int k = 0; k < 2; ++k) {
    RunConfig c = base;
    apply_variant(c, variants[k]);
    FoldResult f = run_fold(c, data, "zara02");
    result[k] = f.result.mad;
    fad_result[k] = f.result.fad;
    std::cout << "  criterion 8: " << variant_label(c) << " zara02 MAD " << fmt(f.result.mad, 6) << " FAD "
              << fmt(f.result.fad, 6) << " (" << fmt(seconds_since(start), 4) << " s elapsed)" << std::endl;
  }
  const std::string label = scenes.synthetic ? "synthetic surrogate scenes" : "recorded scenes";
  return {result[1] < result[0], label + ", 50 epochs, zara01 -> zara02: V-LSTM " + fmt(result[0], 4) + "/" +
                                     fmt(fad_result[0], 4) + " vs variant 5 " + fmt(result[1], 4) + "/" +
                                     fmt(fad_result[1], 4) + ", " + fmt(seconds_since(start), 4) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "criteria to run (default 1..8)");
  CLI11_PARSE(app, argc, argv);
  if (only.empty()) only = {1, 2, 3, 4, 5, 6, 7, 8};
  fs::create_directories(work);

  const Scenes scenes = locate_scenes(work);
  std::vector<PedestrianWindow> zara01;
  auto need_windows = [&]() -> const std::vector<PedestrianWindow>& {
    if (zara01.empty()) zara01 = load_windows(scenes, work, "zara01");
    return zara01;
  };

  int failures = 0;
  for (int id : std::set<int>(only.begin(), only.end())) {
    Verdict v;
    try {
      switch (id) {
        case 1: v = criterion_1(); break;
        case 2: v = criterion_2(); break;
        case 3: v = criterion_3(need_windows()); break;
        case 4: v = criterion_4(); break;
        case 5: v = criterion_5(need_windows()); break;
        case 6: v = criterion_6(need_windows(), scenes.synthetic); break;
        case 7: v = criterion_7(); break;
        case 8: v = criterion_8(scenes, work); break;
        default: v = {false, "no such criterion"};
      }
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << " - " << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
