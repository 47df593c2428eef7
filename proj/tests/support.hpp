#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "srlstm/data.hpp"
#include "srlstm/tensor.hpp"

namespace srlstm::testing {

inline Tensor2 random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Tensor2 t(rows, cols);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline double max_abs_diff(const Tensor2& a, const Tensor2& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Fully present pedestrians walking straight lines, normalized with Nabs.
inline PedestrianWindow straight_window(std::size_t peds, std::uint64_t seed, std::size_t steps = kWindowLength,
                                        double spread = 4.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(0.0, spread), vel(-0.5, 0.5);
  PedestrianWindow w;
  w.scene = "toy";
  w.steps = steps;
  for (std::size_t p = 0; p < peds; ++p) w.ped_ids.push_back(std::int64_t(p) * 3 + 2);
  w.scene_xy.resize(steps * peds);
  for (std::size_t p = 0; p < peds; ++p) {
    Point pos{start(rng), start(rng)};
    const Point v{vel(rng), vel(rng)};
    for (std::size_t t = 0; t < steps; ++t) {
      w.scene_xy[w.at(t, p)] = pos;
      pos.x += v.x;
      pos.y += v.y;
    }
  }
  w.present.assign(steps * peds, 1);
  w.target.assign(peds, 1);
  normalize(w, Normalization::nabs);
  return w;
}

/// Fresh directory under the build tree (or the system temp dir).
inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* root = std::getenv("SRLSTM_TEST_TMP");
  std::filesystem::path dir = root != nullptr ? std::filesystem::path(root)
                                              : std::filesystem::temp_directory_path() / "srlstm_tests";
  dir /= name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace srlstm::testing
