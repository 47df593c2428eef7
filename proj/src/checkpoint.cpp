#include "srlstm/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "srlstm/binary_io.hpp"

namespace srlstm {

namespace {
constexpr char kMagic[8] = {'S', 'R', 'L', 'S', 'T', 'M', 'C', 'K'};

void write_tensor(std::ostream& out, const Tensor2& t) {
  io::write_u64(out, t.rows());
  io::write_u64(out, t.cols());
  for (double v : t.data()) io::write_f64(out, v);
}

Tensor2 read_tensor(std::istream& in) {
  const std::uint64_t rows = io::read_u64(in);
  const std::uint64_t cols = io::read_u64(in);
  if (rows > (1u << 20) || cols > (1u << 20)) throw CheckpointError("checkpoint: implausible shape");
  Tensor2 t(rows, cols);
  for (double& v : t.data()) v = io::read_f64(in);
  return t;
}
}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic, sizeof kMagic);
  io::write_u64(out, kCheckpointVersion);
  io::write_string(out, ckpt.metadata);
  io::write_u64(out, ckpt.params.size());
  for (const auto& [name, e] : ckpt.params.entries()) {
    io::write_string(out, name);
    io::write_u64(out, e.trainable ? 1 : 0);
    write_tensor(out, e.value);
  }
  io::write_u64(out, ckpt.adam ? 1 : 0);
  if (ckpt.adam) {
    const AdamState& a = *ckpt.adam;
    io::write_f64(out, a.learning_rate);
    io::write_f64(out, a.beta1);
    io::write_f64(out, a.beta2);
    io::write_f64(out, a.epsilon);
    io::write_u64(out, a.step);
    io::write_u64(out, a.first_moment.size());
    for (const auto& [name, m] : a.first_moment) {
      io::write_string(out, name);
      write_tensor(out, m);
      write_tensor(out, a.second_moment.at(name));
    }
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + sizeof magic, kMagic)) {
    throw CheckpointError("checkpoint: bad magic header");
  }
  const std::uint64_t version = io::read_u64(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.metadata = io::read_string(in);
  const std::uint64_t count = io::read_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = io::read_string(in);
    const bool trainable = io::read_u64(in) != 0;
    ckpt.params.add(name, read_tensor(in), trainable);
  }
  if (io::read_u64(in) != 0) {
    AdamState a;
    a.learning_rate = io::read_f64(in);
    a.beta1 = io::read_f64(in);
    a.beta2 = io::read_f64(in);
    a.epsilon = io::read_f64(in);
    a.step = io::read_u64(in);
    const std::uint64_t moments = io::read_u64(in);
    for (std::uint64_t i = 0; i < moments; ++i) {
      std::string name = io::read_string(in);
      a.first_moment.emplace(name, read_tensor(in));
      a.second_moment.emplace(name, read_tensor(in));
    }
    ckpt.adam = std::move(a);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace srlstm
