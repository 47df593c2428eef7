#include "srlstm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace srlstm {

SynthConfig synth_preset(const std::string& scene, std::uint64_t seed) {
  SynthConfig c;
  c.name = scene;
  c.seed = seed;
  if (scene == "eth") {
    c.seconds_per_frame = 0.4 / 6.0;
    c.width = 14.0;
    c.height = 10.0;
    c.arrival_rate = 0.3;
    c.duration_s = 200.0;
  } else if (scene == "hotel") {
    c.width = 12.0;
    c.height = 6.0;
    c.arrival_rate = 0.2;
    c.group_probability = 0.25;
    c.duration_s = 200.0;
  } else if (scene == "zara01") {
    c.arrival_rate = 0.3;
    c.duration_s = 200.0;
  } else if (scene == "zara02") {
    c.arrival_rate = 0.4;
    c.duration_s = 200.0;
  } else if (scene == "univ") {
    c.width = 18.0;
    c.height = 12.0;
    c.arrival_rate = 0.6;
    c.group_probability = 0.45;
    c.standing_probability = 0.2;
    c.duration_s = 160.0;
  }
  return c;
}

std::vector<std::string> benchmark_scenes() { return {"eth", "hotel", "zara01", "zara02", "univ"}; }

namespace {

struct Agent {
  std::int64_t id;
  Point pos;
  Point vel;
  Point goal;
  double speed;
  std::int64_t group;
  double pause;        // pending idle duration, started mid-scene
  double stand_until;
};

double length(Point p) { return std::hypot(p.x, p.y); }

}  // namespace

Scene simulate_scene(const SynthConfig& c) {
  std::mt19937_64 rng(fnv1a(c.name, c.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double dt = c.seconds_per_frame * double(c.frame_step);
  const auto steps = static_cast<std::int64_t>(c.duration_s / dt);

  Scene scene;
  scene.name = c.name;
  std::vector<Agent> agents;
  std::int64_t next_id = 1, next_group = 1;

  auto spawn_group = [&]() {
    const bool from_left = unit(rng) < 0.5;
    const double margin = 1.0;
    const std::size_t size = unit(rng) < c.group_probability ? (unit(rng) < 0.7 ? 2 : 3) : 1;
    const double y0 = margin + unit(rng) * (c.height - 2 * margin);
    const double gy = margin + unit(rng) * (c.height - 2 * margin);
    const double speed = std::clamp(c.speed_mean + c.speed_sd * gauss(rng), 0.6, 1.9);
    const bool stands = unit(rng) < c.standing_probability;
    const std::int64_t group = next_group++;
    for (std::size_t k = 0; k < size; ++k) {
      Agent a;
      a.id = next_id++;
      const double lateral = (double(k) - 0.5 * double(size - 1)) * 0.7;
      a.pos = {from_left ? -0.5 : c.width + 0.5, std::clamp(y0 + lateral, 0.3, c.height - 0.3)};
      a.goal = {from_left ? c.width + 2.0 : -2.0, std::clamp(gy + lateral, 0.3, c.height - 0.3)};
      a.speed = speed * (1.0 + 0.03 * gauss(rng));
      a.vel = {from_left ? a.speed : -a.speed, 0.0};
      a.group = group;
      a.pause = stands ? 8.0 + 12.0 * unit(rng) : 0.0;
      a.stand_until = 0.0;
      agents.push_back(a);
    }
  };

  for (std::int64_t s = 0; s < steps; ++s) {
    const double now = double(s) * dt;
    if (unit(rng) < c.arrival_rate * dt) spawn_group();

    std::vector<Point> force(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
      Agent& a = agents[i];
      if (a.pause > 0.0 && std::abs(a.pos.x - 0.5 * c.width) < 1.0) {
        a.stand_until = now + a.pause;
        a.pause = 0.0;
      }
      const bool idle = a.stand_until > now;
      Point to_goal{a.goal.x - a.pos.x, a.goal.y - a.pos.y};
      const double dist = std::max(length(to_goal), 1e-9);
      const double v0 = idle ? 0.0 : a.speed;
      Point f{(v0 * to_goal.x / dist - a.vel.x) / c.relaxation_s,
              (v0 * to_goal.y / dist - a.vel.y) / c.relaxation_s};

      const double vn = std::max(length(a.vel), 1e-9);
      for (std::size_t j = 0; j < agents.size(); ++j) {
        if (j == i) continue;
        const Agent& b = agents[j];
        Point d{a.pos.x - b.pos.x, a.pos.y - b.pos.y};
        const double dij = std::max(length(d), 1e-6);
        if (dij > 5.0) continue;
        const Point n{d.x / dij, d.y / dij};
        // Anisotropy: neighbors ahead matter more than those behind.
        const double cos_phi = -(a.vel.x * n.x + a.vel.y * n.y) / vn;
        const double weight = 0.3 + 0.7 * 0.5 * (1.0 + cos_phi);
        double amp = c.repulsion * std::exp((2.0 * c.personal_radius - dij) / c.repulsion_range) * weight;
        if (b.group == a.group) amp *= 0.3;
        f.x += amp * n.x;
        f.y += amp * n.y;
        // Oncoming walkers: sidestep to the right of the direction of travel.
        if (b.group != a.group && dij < 3.5 && cos_phi > 0.6 && a.vel.x * b.vel.x < 0.0) {
          const Point right{a.vel.y / vn, -a.vel.x / vn};
          const double push = 1.2 * (3.5 - dij) / 3.5;
          f.x += push * right.x;
          f.y += push * right.y;
        }
        if (b.group == a.group && dij > 0.9) {
          f.x -= 0.8 * (dij - 0.9) * n.x;
          f.y -= 0.8 * (dij - 0.9) * n.y;
        }
      }
      // Boundaries at y = 0 and y = height.
      f.y += 2.0 * std::exp(-a.pos.y / 0.3) - 2.0 * std::exp(-(c.height - a.pos.y) / 0.3);
      force[i] = f;
    }

    for (std::size_t i = 0; i < agents.size(); ++i) {
      Agent& a = agents[i];
      a.vel.x += force[i].x * dt;
      a.vel.y += force[i].y * dt;
      const double v = length(a.vel);
      const double cap = 1.3 * a.speed;
      if (v > cap) {
        a.vel.x *= cap / v;
        a.vel.y *= cap / v;
      }
      a.pos.x += a.vel.x * dt;
      a.pos.y += a.vel.y * dt;
    }
    std::erase_if(agents, [&](const Agent& a) { return a.pos.x < -1.0 || a.pos.x > c.width + 1.0; });

    for (const auto& a : agents) {
      TrackPoint p;
      p.frame = s * c.frame_step;
      p.ped = a.id;
      p.x = std::round((a.pos.x + c.position_noise * gauss(rng)) * 1000.0) / 1000.0;
      p.y = std::round((a.pos.y + c.position_noise * gauss(rng)) * 1000.0) / 1000.0;
      scene.points.push_back(p);
    }
  }
  std::sort(scene.points.begin(), scene.points.end(), [](const TrackPoint& a, const TrackPoint& b) {
    return a.ped != b.ped ? a.ped < b.ped : a.frame < b.frame;
  });
  return scene;
}

void write_synthetic_benchmark(const std::filesystem::path& dir, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (const auto& name : benchmark_scenes()) {
    std::ofstream out(dir / (name + ".txt"));
    if (!out) throw std::runtime_error("cannot write " + (dir / (name + ".txt")).string());
    write_dataset(out, simulate_scene(synth_preset(name, seed)));
  }
}

}  // namespace srlstm
