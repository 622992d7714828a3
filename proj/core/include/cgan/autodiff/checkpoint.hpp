#pragma once

#include <filesystem>
#include <stdexcept>

#include "cgan/autodiff/optim.hpp"

namespace cgan::ad {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout (little-endian):
///   "CGAN" | u32 version | repeated { u16 name_len | name | u8 rank |
///   u64 extents[rank] | f64 payload[numel] } until end of file.
void save_checkpoint(const std::filesystem::path& path, const ParamList& params);

/// Loads values into `params`; every parameter must appear in the file with
/// an identical shape and the file must hold no extra entries.
void load_checkpoint(const std::filesystem::path& path, ParamList& params);

}  // namespace cgan::ad
