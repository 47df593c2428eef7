#include "srlstm/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>

#include "srlstm/checkpoint.hpp"
#include "srlstm/gradcheck.hpp"
#include "srlstm/introspection.hpp"
#include "srlstm/synthetic.hpp"

namespace srlstm::cli {

namespace fs = std::filesystem;

fs::path dataset_root(const RunConfig& config) {
  if (!config.dataset_root.empty()) return config.dataset_root;
  if (const char* env = std::getenv("SRLSTM_DATA_ROOT"); env != nullptr && *env != '\0') return env;
  return "data";
}

fs::path scene_file(const RunConfig& config, const std::string& scene) {
  return dataset_root(config) / (scene + ".txt");
}

std::uint64_t cache_hash(const std::string& raw_bytes, const std::string& scene, const PreprocessConfig& pre) {
  std::ostringstream key;
  key << "scene=" << scene << ";norm=" << (pre.normalization == Normalization::nabs ? "nabs" : "rela")
      << ";euf=" << pre.frame_rate_correction << ";euf_scene=" << pre.corrected_scene
      << ";stride=" << pre.default_stride << ";euf_stride=" << pre.euf_stride << ";length=" << kWindowLength
      << ";observed=" << kObserved << ";format=2";
  return fnv1a(raw_bytes, fnv1a(key.str()));
}

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<PreparedScene> prepare_scenes(const RunConfig& config, const std::vector<std::string>& scenes) {
  std::vector<PreparedScene> out;
  const fs::path cache_dir = fs::path(config.out_dir) / "cache";
  for (const auto& scene : scenes) {
    const fs::path file = scene_file(config, scene);
    if (!fs::is_regular_file(file)) throw MissingFile(file);
    const std::string bytes = read_file(file);

    PreparedScene prepared;
    prepared.scene = scene;
    prepared.cache_file = cache_dir / (scene + "-" + hex(cache_hash(bytes, scene, config.preprocess)) + ".win");
    if (std::ifstream cached(prepared.cache_file, std::ios::binary); cached) {
      prepared.windows = read_windows(cached);
      prepared.cache_hit = true;
    } else {
      std::istringstream in(bytes);
      prepared.windows = prepare_scene(parse_dataset(in, scene), config.preprocess);
      fs::create_directories(cache_dir);
      const fs::path tmp = prepared.cache_file.string() + ".tmp";
      {
        std::ofstream o(tmp, std::ios::binary);
        if (!o) throw std::runtime_error("cannot write " + tmp.string());
        write_windows(o, prepared.windows);
      }
      fs::rename(tmp, prepared.cache_file);
    }
    out.push_back(std::move(prepared));
  }
  return out;
}

SceneWindows as_scene_windows(std::vector<PreparedScene> prepared) {
  SceneWindows data;
  for (auto& p : prepared) data[p.scene] = std::move(p.windows);
  return data;
}

namespace {

const std::vector<std::string> kPreprocessKeys = {"normalization", "euf",        "random_rotation",
                                                  "euf_scene",     "default_stride", "euf_stride"};

}  // namespace

std::string checkpoint_metadata(const RunConfig& config) {
  KeyValues all = to_key_values(config);
  KeyValues kept;
  for (const auto& [k, v] : all) {
    const bool pre = std::find(kPreprocessKeys.begin(), kPreprocessKeys.end(), k) != kPreprocessKeys.end();
    if (is_model_key(k) || pre || k == "variant" || k == "preproc" || k == "seed") kept[k] = v;
  }
  std::ostringstream os;
  write_key_values(os, kept);
  return os.str();
}

namespace {

struct Options {
  std::string config, scene, variant, preproc, seed, jobs, out, epochs, L, limit_batches, data, checkpoint;
  std::vector<std::string> sets;
  bool oracle = false;
  std::string inject_bug;
  std::size_t peds = 5, steps = 6, samples = 100, top_k = 20;
  std::string variants = "1,2,3,4,5,6,7,8,9";
};

KeyValues user_values(const Options& o) {
  KeyValues kv;
  if (!o.config.empty()) {
    if (!fs::is_regular_file(o.config)) throw MissingFile(o.config);
    kv = read_key_values(o.config);
  }
  auto put = [&](const char* key, const std::string& v) {
    if (!v.empty()) kv[key] = v;
  };
  put("test_scenes", o.scene);
  put("variant", o.variant);
  put("preproc", o.preproc);
  put("seed", o.seed);
  put("jobs", o.jobs);
  put("out_dir", o.out);
  put("epochs", o.epochs);
  put("L", o.L);
  put("limit_batches", o.limit_batches);
  put("dataset_root", o.data);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got `" + s + "`");
    std::istringstream line(s);
    for (const auto& [k, v] : parse_key_values(line)) kv[k] = v;
  }
  return kv;
}

void write_resolved(const RunConfig& c, const std::string& command) {
  fs::create_directories(c.out_dir);
  std::ofstream o(fs::path(c.out_dir) / (command + ".resolved.cfg"));
  write_key_values(o, to_key_values(c));
}

std::vector<std::string> eval_scenes(const RunConfig& c) { return c.test_scenes.empty() ? c.scenes : c.test_scenes; }

std::vector<std::string> training_scenes(const RunConfig& c) {
  std::vector<std::string> out;
  for (const auto& s : c.scenes)
    if (std::find(c.test_scenes.begin(), c.test_scenes.end(), s) == c.test_scenes.end()) out.push_back(s);
  return out;
}

fs::path checkpoint_path(const Options& o, const RunConfig& c) {
  return o.checkpoint.empty() ? fs::path(c.out_dir) / "model.ckpt" : fs::path(o.checkpoint);
}

Checkpoint open_checkpoint(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw MissingFile(path);
  try {
    return load_checkpoint(path);
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

// Settings stored in the checkpoint fill in whatever the user left unset; a
// preset given on the command line replaces the stored keys it controls.
RunConfig config_for_checkpoint(const KeyValues& user, const Checkpoint& ckpt, ModelConfig& stored) {
  std::istringstream meta(ckpt.metadata);
  KeyValues saved = parse_key_values(meta);
  KeyValues stored_model;
  for (const auto& [k, v] : saved)
    if (is_model_key(k)) stored_model[k] = v;
  stored = model_from_key_values(stored_model);

  KeyValues merged = saved;
  if (user.count("variant")) {
    for (const auto& [k, _] : stored_model) merged.erase(k);
  }
  if (user.count("preproc")) {
    for (const auto& k : kPreprocessKeys) merged.erase(k);
  }
  for (const auto& [k, v] : user) merged[k] = v;
  return resolve_config(merged);
}

SrLstmModel checkpoint_model(const KeyValues& user, const Checkpoint& ckpt, RunConfig& resolved) {
  ModelConfig stored;
  resolved = config_for_checkpoint(user, ckpt, stored);
  const KeyValues want = model_key_values(resolved.model);
  const KeyValues have = model_key_values(stored);
  std::string diff;
  for (const auto& [k, v] : want) {
    if (have.at(k) != v) diff += " " + k + "=" + v + " (checkpoint " + have.at(k) + ")";
  }
  if (!diff.empty()) {
    if (resolved.model.refinement.iterations > 0 && stored.refinement.iterations == 0) {
      throw ShapeMismatch("checkpoint has no refinement parameters but L=" +
                          std::to_string(resolved.model.refinement.iterations) + " was requested");
    }
    throw ShapeMismatch("config does not match checkpoint:" + diff);
  }
  SrLstmModel model{stored, ckpt.params};
  model.check_shapes();
  return model;
}

int cmd_prepare(const Options& o, std::ostream& out) {
  RunConfig c = resolve_config(user_values(o));
  write_resolved(c, "prepare");
  out << "scene,windows,targets,cache,file\n";
  for (const auto& p : prepare_scenes(c, c.scenes)) {
    std::size_t targets = 0;
    for (const auto& w : p.windows) targets += w.target_count();
    out << p.scene << ',' << p.windows.size() << ',' << targets << ',' << (p.cache_hit ? "hit" : "miss") << ','
        << p.cache_file.string() << '\n';
  }
  return exit_ok;
}

void save_model(const fs::path& path, const RunConfig& c, const SrLstmModel& model) {
  RunConfig meta = c;
  meta.model = model.config;
  save_checkpoint(path, Checkpoint{checkpoint_metadata(meta), model.params, std::nullopt});
}

int cmd_train(const Options& o, std::ostream& out) {
  RunConfig c = resolve_config(user_values(o));
  write_resolved(c, "train");
  SceneWindows data = as_scene_windows(prepare_scenes(c, training_scenes(c)));

  std::ofstream log(fs::path(c.out_dir) / "train_log.csv");
  log << std::setprecision(17) << "stage,epoch,train_loss,val_MAD,val_FAD\n";
  std::size_t stage = 0;
  auto on_epoch = [&](const EpochLog& e) {
    if (e.epoch == 1) ++stage;
    log << stage << ',' << e.epoch << ',' << e.train_loss << ',' << e.val_mad << ',' << e.val_fad << '\n';
    log.flush();
    out << "stage " << stage << " epoch " << e.epoch << " loss " << e.train_loss << " val_MAD " << e.val_mad
        << " val_FAD " << e.val_fad << '\n';
  };
  std::vector<FitResult> stages;
  SrLstmModel model = train_on_scenes(c, data, c.test_scenes, on_epoch, &stages);
  const fs::path ckpt = fs::path(c.out_dir) / "model.ckpt";
  save_model(ckpt, c, model);
  out << "checkpoint " << ckpt.string() << " (best epoch " << stages.back().best_epoch << ", val_MAD "
      << stages.back().best_val_mad << ")\n";
  return exit_ok;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const KeyValues user = user_values(o);
  RunConfig base = resolve_config(user);
  Checkpoint ckpt = open_checkpoint(checkpoint_path(o, base));
  RunConfig c;
  SrLstmModel model = checkpoint_model(user, ckpt, c);
  write_resolved(c, "eval");

  EvalReport report;
  report.variant_id = variant_label(c);
  report.fingerprint = fingerprint(c);
  const auto source = o.oracle ? PredictionSource::ground_truth : PredictionSource::model;
  for (auto& p : prepare_scenes(c, eval_scenes(c))) {
    std::vector<TraceRow> traces;
    report.scenes.push_back(evaluate_windows(model, p.windows, p.scene, &traces, source));
    std::ofstream t(fs::path(c.out_dir) / ("traces_" + p.scene + ".csv"));
    write_traces_csv(t, traces);
  }
  std::ofstream r(fs::path(c.out_dir) / "report.csv");
  write_report_csv(r, {report});
  write_report_csv(out, {report});
  return exit_ok;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const KeyValues user = user_values(o);
  RunConfig base = resolve_config(user);
  Checkpoint ckpt = open_checkpoint(checkpoint_path(o, base));
  RunConfig c;
  SrLstmModel model = checkpoint_model(user, ckpt, c);
  write_resolved(c, "predict");
  for (auto& p : prepare_scenes(c, eval_scenes(c))) {
    std::vector<TraceRow> traces;
    for (const auto& w : p.windows) evaluate_windows(model, {w}, p.scene, &traces);
    const fs::path file = fs::path(c.out_dir) / ("predictions_" + p.scene + ".csv");
    std::ofstream t(file);
    write_traces_csv(t, traces);
    out << p.scene << ": " << traces.size() << " predicted points -> " << file.string() << '\n';
  }
  return exit_ok;
}

int cmd_gradcheck(const Options& o, std::ostream& out, std::ostream& err) {
  RunConfig c = resolve_config(user_values(o));
  write_resolved(c, "gradcheck");
  GradcheckSetup setup;
  setup.pedestrians = o.peds;
  setup.steps = o.steps;
  setup.seed = c.train.seed;
  setup.samples_per_tensor = o.samples;
  setup.inject_bug = o.inject_bug;
  if (!setup.inject_bug.empty()) {
    SrLstmModel probe = SrLstmModel::create(c.model, setup.seed);
    if (!probe.params.contains(setup.inject_bug)) {
      throw ConfigError("--inject-grad-bug: no parameter named `" + setup.inject_bug + "`");
    }
  }
  const GradcheckOutcome g = run_gradcheck(c.model, setup);
  out << std::setprecision(6) << "gradcheck L=" << c.model.refinement.iterations << " parameters=" << g.parameters
      << " checked=" << g.result.checked << " below_noise=" << g.result.skipped
      << " max_relative_error=" << g.result.max_relative_error
      << " worst=" << g.result.worst_parameter << "[" << g.result.worst_index << "]"
      << " analytic=" << g.result.analytic << " numeric=" << g.result.numeric << ' '
      << (g.passed ? "PASS" : "FAIL") << '\n';
  if (!g.passed) {
    err << "gradcheck failed: parameter " << g.result.worst_parameter << " has relative error "
        << g.result.max_relative_error << '\n';
    return exit_gradcheck;
  }
  return exit_ok;
}

int cmd_introspect(const Options& o, std::ostream& out) {
  const KeyValues user = user_values(o);
  RunConfig base = resolve_config(user);
  Checkpoint ckpt = open_checkpoint(checkpoint_path(o, base));
  RunConfig c;
  SrLstmModel model = checkpoint_model(user, ckpt, c);
  write_resolved(c, "introspect");

  std::vector<PedestrianWindow> windows;
  for (auto& p : prepare_scenes(c, eval_scenes(c)))
    windows.insert(windows.end(), p.windows.begin(), p.windows.end());
  const Introspection dump = introspect(model, windows, o.top_k);
  const fs::path dir = c.out_dir;
  std::ofstream n(dir / "neurons.csv"), g(dir / "gates.csv"), a(dir / "attention.csv");
  write_neurons_csv(n, dump.neurons);
  write_gates_csv(g, dump.gates);
  write_attention_csv(a, dump.attention);
  out << "windows " << windows.size() << ", neuron hits " << dump.neurons.size() << ", gate hits "
      << dump.gates.size() << ", attention rows " << dump.attention.size() << " -> " << dir.string() << '\n';
  return exit_ok;
}

struct LockedLog {
  std::mutex mutex;
  std::ofstream file;
  std::ostream* echo = nullptr;
  std::map<std::string, std::size_t> stage;

  void write(const std::string& label, const std::string& scene, const EpochLog& e) {
    std::lock_guard lock(mutex);
    auto& s = stage[label + "/" + scene];
    if (e.epoch == 1) ++s;
    file << label << ',' << scene << ',' << s << ',' << e.epoch << ',' << e.train_loss << ',' << e.val_mad << ','
         << e.val_fad << '\n';
    file.flush();
    if (echo) {
      *echo << label << " fold " << scene << " stage " << s << " epoch " << e.epoch << " loss " << e.train_loss
            << " val_MAD " << e.val_mad << '\n';
    }
  }
};

void open_log(LockedLog& log, const RunConfig& c, std::ostream& out) {
  log.file.open(fs::path(c.out_dir) / "train_log.csv");
  log.file << std::setprecision(17) << "variant_id,fold,stage,epoch,train_loss,val_MAD,val_FAD\n";
  log.echo = &out;
}

int cmd_loo(const Options& o, std::ostream& out) {
  RunConfig c = resolve_config(user_values(o));
  write_resolved(c, "loo");
  SceneWindows data = as_scene_windows(prepare_scenes(c, c.scenes));
  LockedLog log;
  open_log(log, c, out);
  const std::string label = variant_label(c);
  std::vector<FoldResult> folds;
  EvalReport report = leave_one_out(
      c, data, [&](const std::string& s, const EpochLog& e) { log.write(label, s, e); }, &folds);
  for (const auto& f : folds) save_model(fs::path(c.out_dir) / ("model_" + f.test_scene + ".ckpt"), c, f.model);
  std::ofstream r(fs::path(c.out_dir) / "report.csv");
  write_report_csv(r, {report});
  write_report_csv(out, {report});
  return exit_ok;
}

std::vector<int> parse_variants(const std::string& text) {
  std::vector<int> ids;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      ids.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("unknown variant `" + item + "`");
    }
  }
  if (ids.empty()) throw ConfigError("no variants given");
  return ids;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  RunConfig c = resolve_config(user_values(o));
  const std::vector<int> ids = parse_variants(o.variants);
  for (int id : ids) {
    RunConfig probe = c;
    apply_variant(probe, id);
  }
  write_resolved(c, "ablate");
  SceneWindows data = as_scene_windows(prepare_scenes(c, c.scenes));
  LockedLog log;
  open_log(log, c, out);
  std::vector<EvalReport> reports;
  for (int id : ids) {
    RunConfig v = c;
    apply_variant(v, id);
    const std::string label = variant_label(v);
    reports.push_back(
        leave_one_out(v, data, [&](const std::string& s, const EpochLog& e) { log.write(label, s, e); }));
  }
  std::ofstream r(fs::path(c.out_dir) / "ablation.csv");
  write_report_csv(r, reports);
  std::ofstream fp(fs::path(c.out_dir) / "variants.csv");
  fp << "variant_id,fingerprint\n";
  for (const auto& rep : reports) fp << rep.variant_id << ',' << rep.fingerprint << '\n';
  write_report_csv(out, reports);
  return exit_ok;
}

int cmd_synth(const Options& o, std::ostream& out) {
  RunConfig c = resolve_config(user_values(o));
  const fs::path dir = o.out.empty() ? dataset_root(c) : fs::path(o.out);
  write_synthetic_benchmark(dir, c.train.seed);
  for (const auto& s : benchmark_scenes()) out << (dir / (s + ".txt")).string() << '\n';
  return exit_ok;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "flat key = value config file");
  cmd->add_option("--scene", o.scene, "test scene(s), comma separated");
  cmd->add_option("--variant", o.variant, "ablation preset 1..9, or 0 for V-LSTM");
  cmd->add_option("--preproc", o.preproc, "pre-processing preset 1..4");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--jobs", o.jobs, "parallel leave-one-out folds");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--L", o.L, "refinement iterations");
  cmd->add_option("--limit-batches", o.limit_batches, "batches per epoch (0 = all)");
  cmd->add_option("--data", o.data, "dataset root (overrides SRLSTM_DATA_ROOT)");
  cmd->add_option("--set", o.sets, "extra key=value overrides");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SR-LSTM trajectory prediction"};
  app.require_subcommand(1);
  Options o;

  auto* prepare = app.add_subcommand("prepare", "parse, resample and window the scenes into the cache");
  auto* train = app.add_subcommand("train", "train on the configured scenes except --scene");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test scenes");
  auto* predict = app.add_subcommand("predict", "write predicted trajectories of a checkpoint");
  auto* gradcheck = app.add_subcommand("gradcheck", "compare backprop with finite differences");
  auto* introspect = app.add_subcommand("introspect", "dump neuron, motion-gate and attention statistics");
  auto* loo = app.add_subcommand("loo", "leave-one-out benchmark for one configuration");
  auto* ablate = app.add_subcommand("ablate", "leave-one-out benchmark for several variants");
  auto* synth = app.add_subcommand("synth", "write simulated scenes in the dataset text format");
  for (auto* cmd : {prepare, train, eval, predict, gradcheck, introspect, loo, ablate, synth}) add_common(cmd, o);
  for (auto* cmd : {eval, predict, introspect}) cmd->add_option("--checkpoint", o.checkpoint, "checkpoint file");
  eval->add_flag("--oracle", o.oracle, "test hook: predictions are the ground truth");
  gradcheck->add_option("--peds", o.peds, "pedestrians in the check window");
  gradcheck->add_option("--steps", o.steps, "steps in the check window");
  gradcheck->add_option("--samples", o.samples, "entries per tensor (0 = all)");
  gradcheck->add_option("--inject-grad-bug", o.inject_bug, "test hook: corrupt this parameter's gradient");
  introspect->add_option("--top-k", o.top_k, "responses kept per neuron and gate element");
  ablate->add_option("--variants", o.variants, "comma separated variant ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_input;
  }

  try {
    if (*prepare) return cmd_prepare(o, out);
    if (*train) return cmd_train(o, out);
    if (*eval) return cmd_eval(o, out);
    if (*predict) return cmd_predict(o, out);
    if (*gradcheck) return cmd_gradcheck(o, out, err);
    if (*introspect) return cmd_introspect(o, out);
    if (*loo) return cmd_loo(o, out);
    if (*ablate) return cmd_ablate(o, out);
    if (*synth) return cmd_synth(o, out);
  } catch (const MissingFile& e) {
    err << "error: " << e.what() << '\n';
    return exit_input;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_input;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_input;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return exit_input;
  } catch (const TrainingError& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return exit_numeric;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return exit_numeric;
  } catch (const ShapeMismatch& e) {
    err << "error: " << e.what() << '\n';
    return exit_shape;
  } catch (const ModelShapeError& e) {
    err << "error: " << e.what() << '\n';
    return exit_shape;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << '\n';
    return exit_shape;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failure;
  }
  return exit_failure;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"srlstm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace srlstm::cli
