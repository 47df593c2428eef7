#include "srlstm/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace srlstm {

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      // training
      "seed", "epochs", "lr", "batch_size", "grad_clip", "loss_horizon", "lr_decay_factor",
      "lr_decay_every", "limit_batches", "val_fraction", "staged",
      // model
      "L", "neighborhood_size", "neighborhood_shape", "motion_gate", "attention", "hidden_source",
      "embed_activation", "embed_dim", "hidden_dim", "relative_dim",
      // pre-processing
      "normalization", "euf", "random_rotation", "euf_scene", "default_stride", "euf_stride",
      // run
      "scenes", "test_scenes", "dataset_root", "out_dir", "variant", "preproc", "jobs"};
  return keys;
}

bool is_model_key(const std::string& k) {
  static const std::vector<std::string> keys = {
      "L", "neighborhood_size", "neighborhood_shape", "motion_gate", "attention", "hidden_source",
      "embed_activation", "embed_dim", "hidden_dim", "relative_dim"};
  return std::find(keys.begin(), keys.end(), k) != keys.end();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool known_key(const std::string& k) {
  const auto& keys = config_keys();
  return std::find(keys.begin(), keys.end(), k) != keys.end();
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config: `" + key + "` expects an integer, got `" + v + "`");
  }
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long long n = to_int(key, v);
  if (n < 0) throw ConfigError("config: `" + key + "` must be non-negative");
  return static_cast<std::size_t>(n);
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config: `" + key + "` expects a number, got `" + v + "`");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError("config: `" + key + "` expects a boolean, got `" + v + "`");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::string real_text(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <typename Enum>
Enum to_enum(const std::string& key, const std::string& v,
             std::initializer_list<std::pair<const char*, Enum>> options) {
  for (const auto& [name, value] : options)
    if (v == name) return value;
  throw ConfigError("config: unsupported value `" + v + "` for `" + key + "`");
}

void apply_model_key(ModelConfig& m, const std::string& k, const std::string& v) {
  auto& r = m.refinement;
  if (k == "L") r.iterations = to_count(k, v);
  else if (k == "neighborhood_size") {
    r.neighborhood_size = to_real(k, v);
    if (!(r.neighborhood_size > 0.0)) throw ConfigError("config: neighborhood_size must be positive");
  } else if (k == "neighborhood_shape")
    r.shape = to_enum<NeighborhoodShape>(k, v, {{"square", NeighborhoodShape::square},
                                                {"disk", NeighborhoodShape::disk}});
  else if (k == "motion_gate") r.use_motion_gate = to_bool(k, v);
  else if (k == "attention") r.use_attention = to_bool(k, v);
  else if (k == "hidden_source")
    r.hidden_source = to_enum<HiddenSource>(k, v, {{"current", HiddenSource::current},
                                                   {"previous", HiddenSource::previous}});
  else if (k == "embed_activation")
    r.embed_activation =
        to_enum<Activation>(k, v, {{"relu", Activation::relu}, {"linear", Activation::linear}});
  else if (k == "embed_dim") m.dims.embed = to_count(k, v);
  else if (k == "hidden_dim") m.dims.hidden = to_count(k, v);
  else if (k == "relative_dim") m.dims.relative = to_count(k, v);
}


void apply_key(RunConfig& c, const std::string& k, const std::string& v) {
  auto& t = c.train;
  auto& p = c.preprocess;
  if (is_model_key(k)) apply_model_key(c.model, k, v);
  else if (k == "seed") t.seed = static_cast<std::uint64_t>(to_count(k, v));
  else if (k == "epochs") t.epochs = to_count(k, v);
  else if (k == "lr") t.learning_rate = to_real(k, v);
  else if (k == "batch_size") {
    t.batch_size = to_count(k, v);
    if (t.batch_size == 0) throw ConfigError("config: batch_size must be positive");
  } else if (k == "grad_clip") t.grad_clip = to_real(k, v);
  else if (k == "loss_horizon")
    t.loss_horizon = to_enum<LossHorizon>(k, v, {{"full", LossHorizon::full},
                                                 {"prediction", LossHorizon::prediction}});
  else if (k == "lr_decay_factor") t.lr_decay_factor = to_real(k, v);
  else if (k == "lr_decay_every") t.lr_decay_every = to_count(k, v);
  else if (k == "limit_batches") t.limit_batches = to_count(k, v);
  else if (k == "val_fraction") t.validation_fraction = to_real(k, v);
  else if (k == "staged") t.staged = to_bool(k, v);
  else if (k == "normalization")
    p.normalization = to_enum<Normalization>(k, v, {{"nabs", Normalization::nabs},
                                                    {"rela", Normalization::rela}});
  else if (k == "euf") p.frame_rate_correction = to_bool(k, v);
  else if (k == "random_rotation") {
    p.random_rotation = to_bool(k, v);
    t.random_rotation = p.random_rotation;
  } else if (k == "euf_scene") p.corrected_scene = v;
  else if (k == "default_stride") p.default_stride = static_cast<std::int64_t>(to_count(k, v));
  else if (k == "euf_stride") p.euf_stride = static_cast<std::int64_t>(to_count(k, v));
  else if (k == "scenes") c.scenes = to_list(v);
  else if (k == "test_scenes") c.test_scenes = to_list(v);
  else if (k == "dataset_root") c.dataset_root = v;
  else if (k == "out_dir") c.out_dir = v;
  else if (k == "jobs") c.jobs = std::max<std::size_t>(1, to_count(k, v));
  else if (k == "variant" || k == "preproc") {
  } else throw ConfigError("config: unknown key `" + k + "`");
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!known_key(key)) throw ConfigError("config: unknown key `" + key + "`");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_key_values(in);
}

void apply_variant(RunConfig& c, int variant) {
  auto& r = c.model.refinement;
  struct Row {
    bool mg, pa;
    double ns;
    std::size_t l;
    HiddenSource src;
  };
  static const Row rows[] = {
      {false, false, 2, 1, HiddenSource::current}, {false, false, 10, 1, HiddenSource::current},
      {true, false, 10, 1, HiddenSource::current}, {false, true, 10, 1, HiddenSource::current},
      {true, true, 10, 1, HiddenSource::current},  {true, true, 2, 1, HiddenSource::current},
      {true, true, 10, 2, HiddenSource::current},  {true, true, 10, 3, HiddenSource::current},
      {true, true, 10, 1, HiddenSource::previous}};
  if (variant == 0) {
    r.iterations = 0;
  } else if (variant >= 1 && variant <= 9) {
    const Row& row = rows[variant - 1];
    r.use_motion_gate = row.mg;
    r.use_attention = row.pa;
    r.neighborhood_size = row.ns;
    r.iterations = row.l;
    r.hidden_source = row.src;
  } else {
    throw ConfigError("unknown variant " + std::to_string(variant) + " (expected 0..9)");
  }
  c.variant = variant;
}

void apply_preproc(RunConfig& c, int preproc) {
  auto& p = c.preprocess;
  switch (preproc) {
    case 1: p = {Normalization::rela, false, false}; break;
    case 2: p = {Normalization::nabs, false, false}; break;
    case 3: p = {Normalization::nabs, true, false}; break;
    case 4: p = {Normalization::nabs, true, true}; break;
    default: throw ConfigError("unknown preproc " + std::to_string(preproc) + " (expected 1..4)");
  }
  c.train.random_rotation = p.random_rotation;
  c.preproc = preproc;
}

RunConfig resolve_config(const KeyValues& values) {
  for (const auto& [k, _] : values) {
    if (!known_key(k)) throw ConfigError("config: unknown key `" + k + "`");
  }
  RunConfig c;
  c.train.random_rotation = c.preprocess.random_rotation;
  if (auto it = values.find("preproc"); it != values.end()) {
    const int p = static_cast<int>(to_int("preproc", it->second));
    if (p != 0) apply_preproc(c, p);
  }
  if (auto it = values.find("variant"); it != values.end()) {
    const int v = static_cast<int>(to_int("variant", it->second));
    if (v >= 0) apply_variant(c, v);
  }
  for (const auto& [k, v] : values) apply_key(c, k, v);
  return c;
}

KeyValues model_key_values(const ModelConfig& m) {
  const auto& r = m.refinement;
  return {
      {"L", std::to_string(r.iterations)},
      {"neighborhood_size", real_text(r.neighborhood_size)},
      {"neighborhood_shape", r.shape == NeighborhoodShape::square ? "square" : "disk"},
      {"motion_gate", r.use_motion_gate ? "1" : "0"},
      {"attention", r.use_attention ? "1" : "0"},
      {"hidden_source", r.hidden_source == HiddenSource::current ? "current" : "previous"},
      {"embed_activation", r.embed_activation == Activation::relu ? "relu" : "linear"},
      {"embed_dim", std::to_string(m.dims.embed)},
      {"hidden_dim", std::to_string(m.dims.hidden)},
      {"relative_dim", std::to_string(m.dims.relative)},
  };
}

ModelConfig model_from_key_values(const KeyValues& values) {
  ModelConfig m;
  for (const auto& [k, v] : values) {
    if (!is_model_key(k)) throw ConfigError("checkpoint metadata: unexpected key `" + k + "`");
    apply_model_key(m, k, v);
  }
  return m;
}

KeyValues to_key_values(const RunConfig& c) {
  KeyValues kv = model_key_values(c.model);
  const auto& t = c.train;
  const auto& p = c.preprocess;
  kv["seed"] = std::to_string(t.seed);
  kv["epochs"] = std::to_string(t.epochs);
  kv["lr"] = real_text(t.learning_rate);
  kv["batch_size"] = std::to_string(t.batch_size);
  kv["grad_clip"] = real_text(t.grad_clip);
  kv["loss_horizon"] = t.loss_horizon == LossHorizon::full ? "full" : "prediction";
  kv["lr_decay_factor"] = real_text(t.lr_decay_factor);
  kv["lr_decay_every"] = std::to_string(t.lr_decay_every);
  kv["limit_batches"] = std::to_string(t.limit_batches);
  kv["val_fraction"] = real_text(t.validation_fraction);
  kv["staged"] = t.staged ? "1" : "0";
  kv["normalization"] = p.normalization == Normalization::nabs ? "nabs" : "rela";
  kv["euf"] = p.frame_rate_correction ? "1" : "0";
  kv["random_rotation"] = t.random_rotation ? "1" : "0";
  kv["euf_scene"] = p.corrected_scene;
  kv["default_stride"] = std::to_string(p.default_stride);
  kv["euf_stride"] = std::to_string(p.euf_stride);
  kv["scenes"] = join(c.scenes);
  kv["test_scenes"] = join(c.test_scenes);
  kv["dataset_root"] = c.dataset_root;
  kv["out_dir"] = c.out_dir;
  kv["variant"] = std::to_string(c.variant);
  kv["preproc"] = std::to_string(c.preproc);
  kv["jobs"] = std::to_string(c.jobs);
  return kv;
}

void write_key_values(std::ostream& out, const KeyValues& values) {
  for (const auto& [k, v] : values) out << k << " = " << v << '\n';
}

std::string fingerprint(const RunConfig& c) {
  const auto& r = c.model.refinement;
  const auto& p = c.preprocess;
  std::ostringstream os;
  os << "MG=" << (r.use_motion_gate ? 1 : 0) << " PA=" << (r.use_attention ? 1 : 0)
     << " NS=" << r.neighborhood_size << " L=" << r.iterations
     << " CP=" << (r.hidden_source == HiddenSource::current ? "C" : "P")
     << " pre=" << (p.normalization == Normalization::nabs ? "nabs" : "rela")
     << (p.frame_rate_correction ? "+euf" : "") << (c.train.random_rotation ? "+rr" : "");
  return os.str();
}

}  // namespace srlstm
