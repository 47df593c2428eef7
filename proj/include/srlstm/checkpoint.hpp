#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "srlstm/params.hpp"

namespace srlstm {

/// Binary container: magic "SRLSTMCK", format version, a free-form metadata
/// string, named tensors (name, rows, cols, trainable, little-endian f64
/// values) and optionally the Adam state.
class CheckpointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  std::string metadata;
  ParamStore params;
  std::optional<AdamState> adam;
};

inline constexpr std::uint64_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace srlstm
