#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "srlstm/refinement.hpp"

namespace srlstm {

class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct TrackPoint {
  std::int64_t frame = 0;
  std::int64_t ped = 0;
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

/// All observations of one recording, sorted by (ped, frame).
struct Scene {
  std::string name;
  std::vector<TrackPoint> points;
  /// Frames per 0.4 s sample once resampled; 0 before resampling.
  std::int64_t frame_stride = 0;
};

/// Reads whitespace-separated `frame ped x y` rows. Integral ids written as
/// reals (e.g. "10.0") are accepted. Blank lines are skipped.
Scene parse_dataset(std::istream& in, const std::string& name = "");
Scene parse_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const Scene& scene);

/// Keeps frames aligned to `frame_stride` counted from the scene's first frame.
Scene resample(const Scene& scene, std::int64_t frame_stride);

/// Per-scene sampling interval in frames: `euf_stride` for the frame-rate
/// corrected scene when the correction is on, `default_stride` otherwise.
std::int64_t frame_stride_for(const std::string& scene, bool frame_rate_correction,
                              const std::string& corrected_scene = "eth",
                              std::int64_t default_stride = 10, std::int64_t euf_stride = 6);

enum class Normalization { nabs, rela };

inline constexpr std::size_t kWindowLength = 20;
inline constexpr std::size_t kObserved = 8;
inline constexpr std::size_t kPredicted = 12;

/// A 20-step slice of a scene. Per-step arrays are indexed [t * peds + p].
struct PedestrianWindow {
  std::string scene;
  std::int64_t start_frame = 0;
  std::int64_t frame_stride = 1;
  std::size_t steps = kWindowLength;
  std::vector<std::int64_t> ped_ids;
  std::vector<Point> scene_xy;
  std::vector<Point> model_xy;
  std::vector<std::uint8_t> present;
  std::vector<std::uint8_t> target;
  /// Origin subtracted per pedestrian under Nabs (scene frame).
  std::vector<Point> shift;
  Normalization normalization = Normalization::nabs;

  std::size_t peds() const { return ped_ids.size(); }
  std::size_t at(std::size_t t, std::size_t p) const { return t * ped_ids.size() + p; }
  bool is_present(std::size_t t, std::size_t p) const { return present[at(t, p)] != 0; }
  bool is_target(std::size_t p) const { return target[p] != 0; }
  std::int64_t frame(std::size_t t) const { return start_frame + std::int64_t(t) * frame_stride; }
  std::size_t target_count() const;
};

/// Windows of `length` consecutive samples, stride 1, keeping those with at
/// least one pedestrian present throughout. Only a pedestrian's first
/// contiguous run inside a window is kept.
std::vector<PedestrianWindow> slide_windows(const Scene& resampled,
                                            std::size_t length = kWindowLength);

/// Fills model_xy and shift from scene_xy. Nabs subtracts each pedestrian's
/// position at the last observed step (or first present step if absent then);
/// Rela uses per-step offsets with the first present step at the origin.
void normalize(PedestrianWindow& window, Normalization mode, std::size_t observed = kObserved);

/// Model-frame value predicted for step t of pedestrian p converted to the
/// scene frame, given the scene position at t-1 (used by Rela).
Point to_scene(const PedestrianWindow& window, std::size_t p, const Point& model, const Point& previous);

struct MiniBatch {
  std::vector<PedestrianWindow> windows;
  double angle = 0.0;
};

Point rotate(const Point& p, double angle);
/// Rotates scene- and model-frame coordinates and shifts of every window
/// about the scene origin.
void random_rotate(MiniBatch& batch, double angle);

/// Deterministic shuffle by seed; the last batch may be partial.
std::vector<MiniBatch> make_batches(const std::vector<PedestrianWindow>& windows,
                                    std::size_t batch_size, std::uint64_t shuffle_seed);

struct PreprocessConfig {
  Normalization normalization = Normalization::nabs;
  bool frame_rate_correction = true;
  bool random_rotation = true;
  std::string corrected_scene = "eth";
  std::int64_t default_stride = 10;
  std::int64_t euf_stride = 6;
};

/// parse → resample → slide → normalize.
std::vector<PedestrianWindow> prepare_scene(const Scene& raw, const PreprocessConfig& config);

// Binary window cache.
void write_windows(std::ostream& out, const std::vector<PedestrianWindow>& windows);
std::vector<PedestrianWindow> read_windows(std::istream& in);

/// FNV-1a over bytes; stable across platforms.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ull);

}  // namespace srlstm
