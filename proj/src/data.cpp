#include "srlstm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "srlstm/binary_io.hpp"

namespace srlstm {

namespace {

bool parse_real(const std::string& token, double& out) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_id(const std::string& token, std::int64_t& out) {
  double v = 0.0;
  if (!parse_real(token, v) || !std::isfinite(v) || v != std::floor(v)) return false;
  out = static_cast<std::int64_t>(v);
  return true;
}

}  // namespace

Scene parse_dataset(std::istream& in, const std::string& name) {
  Scene scene;
  scene.name = name;
  std::map<std::int64_t, std::int64_t> last_frame;
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    TrackPoint p;
    if (tokens.size() != 4 || !parse_id(tokens[0], p.frame) || !parse_id(tokens[1], p.ped) ||
        !parse_real(tokens[2], p.x) || !parse_real(tokens[3], p.y) || !std::isfinite(p.x) ||
        !std::isfinite(p.y)) {
      throw ParseError(name + ":" + std::to_string(line_no) + ": expected `frame ped x y`, got `" +
                       line + "`");
    }
    if (!seen.emplace(p.frame, p.ped).second) {
      throw DataError(name + ":" + std::to_string(line_no) + ": duplicate row for frame " +
                      std::to_string(p.frame) + " pedestrian " + std::to_string(p.ped));
    }
    auto [it, inserted] = last_frame.try_emplace(p.ped, p.frame);
    if (!inserted) {
      if (p.frame <= it->second) {
        throw DataError(name + ":" + std::to_string(line_no) + ": frames of pedestrian " +
                        std::to_string(p.ped) + " are not increasing");
      }
      it->second = p.frame;
    }
    scene.points.push_back(p);
  }
  std::sort(scene.points.begin(), scene.points.end(), [](const TrackPoint& a, const TrackPoint& b) {
    return a.ped != b.ped ? a.ped < b.ped : a.frame < b.frame;
  });
  return scene;
}

Scene parse_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  return parse_dataset(in, path.stem().string());
}

void write_dataset(std::ostream& out, const Scene& scene) {
  std::vector<TrackPoint> rows = scene.points;
  std::sort(rows.begin(), rows.end(), [](const TrackPoint& a, const TrackPoint& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.ped < b.ped;
  });
  out << std::setprecision(17);
  for (const auto& p : rows) out << p.frame << '\t' << p.ped << '\t' << p.x << '\t' << p.y << '\n';
}

Scene resample(const Scene& scene, std::int64_t frame_stride) {
  if (frame_stride <= 0) throw std::invalid_argument("resample: stride must be positive");
  Scene out;
  out.name = scene.name;
  out.frame_stride = frame_stride;
  if (scene.points.empty()) return out;
  std::int64_t origin = scene.points.front().frame;
  for (const auto& p : scene.points) origin = std::min(origin, p.frame);
  for (const auto& p : scene.points) {
    if ((p.frame - origin) % frame_stride == 0) out.points.push_back(p);
  }
  return out;
}

std::int64_t frame_stride_for(const std::string& scene, bool frame_rate_correction,
                              const std::string& corrected_scene, std::int64_t default_stride,
                              std::int64_t euf_stride) {
  return frame_rate_correction && scene == corrected_scene ? euf_stride : default_stride;
}

std::size_t PedestrianWindow::target_count() const {
  return static_cast<std::size_t>(std::count(target.begin(), target.end(), std::uint8_t{1}));
}

std::vector<PedestrianWindow> slide_windows(const Scene& resampled, std::size_t length) {
  std::vector<PedestrianWindow> windows;
  if (resampled.points.empty()) return windows;
  const std::int64_t stride = resampled.frame_stride > 0 ? resampled.frame_stride : 1;
  std::int64_t origin = resampled.points.front().frame;
  for (const auto& p : resampled.points) origin = std::min(origin, p.frame);

  // Per pedestrian: sample index → position, sorted by index.
  struct Track {
    std::int64_t ped;
    std::vector<std::pair<std::int64_t, Point>> samples;
  };
  std::vector<Track> tracks;
  std::int64_t last_index = 0;
  for (const auto& p : resampled.points) {
    if ((p.frame - origin) % stride != 0) continue;
    const std::int64_t idx = (p.frame - origin) / stride;
    if (tracks.empty() || tracks.back().ped != p.ped) tracks.push_back({p.ped, {}});
    tracks.back().samples.emplace_back(idx, Point{p.x, p.y});
    last_index = std::max(last_index, idx);
  }

  const auto len = static_cast<std::int64_t>(length);
  for (std::int64_t start = 0; start + len - 1 <= last_index; ++start) {
    PedestrianWindow w;
    w.scene = resampled.name;
    w.start_frame = origin + start * stride;
    w.frame_stride = stride;
    w.steps = length;
    struct Run {
      std::int64_t ped;
      std::vector<std::pair<std::size_t, Point>> steps;
    };
    std::vector<Run> runs;
    for (const auto& track : tracks) {
      auto it = std::lower_bound(track.samples.begin(), track.samples.end(), start,
                                 [](const auto& s, std::int64_t v) { return s.first < v; });
      if (it == track.samples.end() || it->first >= start + len) continue;
      Run run{track.ped, {}};
      std::int64_t expected = it->first;
      for (; it != track.samples.end() && it->first < start + len; ++it) {
        if (it->first != expected) break;  // first contiguous run only
        run.steps.emplace_back(static_cast<std::size_t>(it->first - start), it->second);
        ++expected;
      }
      runs.push_back(std::move(run));
    }
    const bool has_target = std::any_of(runs.begin(), runs.end(),
                                        [&](const Run& r) { return r.steps.size() == length; });
    if (!has_target) continue;

    const std::size_t peds = runs.size();
    w.ped_ids.resize(peds);
    w.scene_xy.assign(length * peds, Point{});
    w.model_xy.assign(length * peds, Point{});
    w.present.assign(length * peds, 0);
    w.target.assign(peds, 0);
    w.shift.assign(peds, Point{});
    for (std::size_t p = 0; p < peds; ++p) {
      w.ped_ids[p] = runs[p].ped;
      w.target[p] = runs[p].steps.size() == length ? 1 : 0;
      for (const auto& [t, pt] : runs[p].steps) {
        w.scene_xy[w.at(t, p)] = pt;
        w.present[w.at(t, p)] = 1;
      }
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

void normalize(PedestrianWindow& w, Normalization mode, std::size_t observed) {
  w.normalization = mode;
  const std::size_t peds = w.peds();
  w.model_xy.assign(w.steps * peds, Point{});
  w.shift.assign(peds, Point{});
  for (std::size_t p = 0; p < peds; ++p) {
    std::size_t first = w.steps;
    for (std::size_t t = 0; t < w.steps; ++t) {
      if (w.is_present(t, p)) {
        first = t;
        break;
      }
    }
    if (first == w.steps) continue;
    if (mode == Normalization::nabs) {
      const std::size_t anchor_step = observed - 1;
      const Point anchor = anchor_step < w.steps && w.is_present(anchor_step, p)
                               ? w.scene_xy[w.at(anchor_step, p)]
                               : w.scene_xy[w.at(first, p)];
      w.shift[p] = anchor;
      for (std::size_t t = 0; t < w.steps; ++t) {
        if (!w.is_present(t, p)) continue;
        const Point s = w.scene_xy[w.at(t, p)];
        w.model_xy[w.at(t, p)] = {s.x - anchor.x, s.y - anchor.y};
      }
    } else {
      w.shift[p] = w.scene_xy[w.at(first, p)];
      for (std::size_t t = first + 1; t < w.steps; ++t) {
        if (!w.is_present(t, p)) continue;
        const Point s = w.scene_xy[w.at(t, p)];
        const Point prev = w.scene_xy[w.at(t - 1, p)];
        w.model_xy[w.at(t, p)] = {s.x - prev.x, s.y - prev.y};
      }
    }
  }
}

Point to_scene(const PedestrianWindow& w, std::size_t p, const Point& model, const Point& previous) {
  if (w.normalization == Normalization::nabs) return {model.x + w.shift[p].x, model.y + w.shift[p].y};
  return {previous.x + model.x, previous.y + model.y};
}

Point rotate(const Point& p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

void random_rotate(MiniBatch& batch, double angle) {
  batch.angle = angle;
  if (angle == 0.0) return;
  for (auto& w : batch.windows) {
    for (auto& pt : w.scene_xy) pt = rotate(pt, angle);
    for (auto& pt : w.model_xy) pt = rotate(pt, angle);
    for (auto& pt : w.shift) pt = rotate(pt, angle);
  }
}

std::vector<MiniBatch> make_batches(const std::vector<PedestrianWindow>& windows,
                                    std::size_t batch_size, std::uint64_t shuffle_seed) {
  if (batch_size == 0) throw std::invalid_argument("make_batches: batch size must be positive");
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(shuffle_seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<MiniBatch> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    MiniBatch b;
    for (std::size_t k = i; k < std::min(order.size(), i + batch_size); ++k)
      b.windows.push_back(windows[order[k]]);
    batches.push_back(std::move(b));
  }
  return batches;
}

std::vector<PedestrianWindow> prepare_scene(const Scene& raw, const PreprocessConfig& config) {
  const std::int64_t stride = frame_stride_for(raw.name, config.frame_rate_correction,
                                               config.corrected_scene, config.default_stride,
                                               config.euf_stride);
  auto windows = slide_windows(resample(raw, stride));
  for (auto& w : windows) normalize(w, config.normalization);
  return windows;
}

// --- cache ------------------------------------------------------------------

namespace {
constexpr char kWindowMagic[8] = {'S', 'R', 'W', 'I', 'N', 'D', '0', '1'};

void write_points(std::ostream& out, const std::vector<Point>& pts) {
  io::write_u64(out, pts.size());
  for (const auto& p : pts) {
    io::write_f64(out, p.x);
    io::write_f64(out, p.y);
  }
}

std::vector<Point> read_points(std::istream& in) {
  std::vector<Point> pts(io::read_u64(in));
  for (auto& p : pts) {
    p.x = io::read_f64(in);
    p.y = io::read_f64(in);
  }
  return pts;
}

void write_bytes(std::ostream& out, const std::vector<std::uint8_t>& v) {
  io::write_u64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
}

std::vector<std::uint8_t> read_bytes(std::istream& in) {
  std::vector<std::uint8_t> v(io::read_u64(in));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size()));
  if (!in) throw DataError("window cache: truncated");
  return v;
}
}  // namespace

void write_windows(std::ostream& out, const std::vector<PedestrianWindow>& windows) {
  out.write(kWindowMagic, sizeof kWindowMagic);
  io::write_u64(out, windows.size());
  for (const auto& w : windows) {
    io::write_string(out, w.scene);
    io::write_u64(out, static_cast<std::uint64_t>(w.start_frame));
    io::write_u64(out, static_cast<std::uint64_t>(w.frame_stride));
    io::write_u64(out, w.steps);
    io::write_u64(out, w.ped_ids.size());
    for (auto id : w.ped_ids) io::write_u64(out, static_cast<std::uint64_t>(id));
    write_points(out, w.scene_xy);
    write_points(out, w.model_xy);
    write_bytes(out, w.present);
    write_bytes(out, w.target);
    write_points(out, w.shift);
    io::write_u64(out, w.normalization == Normalization::nabs ? 0 : 1);
  }
}

std::vector<PedestrianWindow> read_windows(std::istream& in) {
  char magic[sizeof kWindowMagic];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + sizeof magic, kWindowMagic)) {
    throw DataError("window cache: bad magic");
  }
  std::vector<PedestrianWindow> windows(io::read_u64(in));
  for (auto& w : windows) {
    w.scene = io::read_string(in);
    w.start_frame = static_cast<std::int64_t>(io::read_u64(in));
    w.frame_stride = static_cast<std::int64_t>(io::read_u64(in));
    w.steps = io::read_u64(in);
    w.ped_ids.resize(io::read_u64(in));
    for (auto& id : w.ped_ids) id = static_cast<std::int64_t>(io::read_u64(in));
    w.scene_xy = read_points(in);
    w.model_xy = read_points(in);
    w.present = read_bytes(in);
    w.target = read_bytes(in);
    w.shift = read_points(in);
    w.normalization = io::read_u64(in) == 0 ? Normalization::nabs : Normalization::rela;
  }
  return windows;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace srlstm
