#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dtwin/policy.hpp"

namespace dtwin {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ActorParams actor;
  CriticParams critic;
  std::vector<std::uint64_t> seeds;
  std::uint64_t config_hash = 0;
  std::uint64_t steps = 0;
  std::uint64_t updates = 0;
};

/// Binary layout (host byte order): magic "DTWINCKP", u32 version, u64
/// config hash, steps, updates, seed count + seeds, then for the actor and
/// the critic: u64 layer count, layer dims (in, out per layer), flattened
/// f64 parameters; finally the actor log_std vector.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dtwin
