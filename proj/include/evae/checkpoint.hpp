#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "evae/rng.hpp"
#include "evae/sprites.hpp"
#include "evae/vae.hpp"

namespace evae {

/// Everything that determines the continuation of a training trajectory.
struct TrainState {
  VaeModel model;
  Rng rng;
  data::BatchIterator batches;
  std::uint64_t iteration = 0;
};

/// Serialized TrainState plus its FNV-1a hash.
///
/// Layout: "EVAECKPT", u64 version, architecture, ParamStore (values and Adam
/// moments as raw doubles), rng state, batch iterator state, iteration.
struct Checkpoint {
  std::string bytes;
  std::uint64_t hash = 0;
};

Checkpoint save_checkpoint(const TrainState& state);
/// Throws IntegrityError when the bytes do not match the recorded hash or
/// the decoded state does not re-serialize to the same bytes.
TrainState restore_checkpoint(const Checkpoint& ckpt);
std::uint64_t state_hash(const TrainState& state);

void write_checkpoint_file(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint_file(const std::filesystem::path& path);

}  // namespace evae
