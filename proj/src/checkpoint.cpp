#include "evae/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "evae/binary_io.hpp"
#include "evae/errors.hpp"
#include "evae/hashing.hpp"

namespace evae {
namespace {

constexpr char kMagic[8] = {'E', 'V', 'A', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint64_t kVersion = 1;

std::string serialize(const TrainState& s) {
  std::ostringstream os(std::ios::binary);
  os.write(kMagic, sizeof kMagic);
  io::write_u64(os, kVersion);
  const auto& a = s.model.arch();
  io::write_u64(os, a.input_dim);
  io::write_u64(os, a.hidden.size());
  for (auto h : a.hidden) io::write_u64(os, h);
  io::write_u64(os, a.latent_dim);
  io::write_string(os, to_string(a.activation));
  io::write_string(os, to_string(a.likelihood));
  s.model.params().write(os);
  io::write_string(os, s.rng.state());
  io::write_string(os, s.batches.state());
  io::write_u64(os, s.iteration);
  return os.str();
}

TrainState deserialize(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || !std::equal(magic, magic + 8, kMagic)) throw IntegrityError("checkpoint: bad magic");
  if (io::read_u64(is) != kVersion) throw IntegrityError("checkpoint: unsupported version");
  VaeArchitecture a;
  a.input_dim = io::read_u64(is);
  a.hidden.resize(io::read_u64(is));
  for (auto& h : a.hidden) h = io::read_u64(is);
  a.latent_dim = io::read_u64(is);
  a.activation = activation_from_string(io::read_string(is));
  a.likelihood = likelihood_from_string(io::read_string(is));
  ParamStore params = ParamStore::read(is);
  Rng rng;
  rng.set_state(io::read_string(is));
  data::BatchIterator batches;
  batches.set_state(io::read_string(is));
  const std::uint64_t iteration = io::read_u64(is);
  return TrainState{VaeModel::from_params(a, std::move(params)), std::move(rng),
                    std::move(batches), iteration};
}

}  // namespace

Checkpoint save_checkpoint(const TrainState& state) {
  Checkpoint c;
  c.bytes = serialize(state);
  c.hash = fnv1a64(c.bytes);
  return c;
}

TrainState restore_checkpoint(const Checkpoint& ckpt) {
  if (fnv1a64(ckpt.bytes) != ckpt.hash) throw IntegrityError("checkpoint: hash mismatch");
  TrainState s = deserialize(ckpt.bytes);
  if (fnv1a64(serialize(s)) != ckpt.hash) {
    throw IntegrityError("checkpoint: restored state does not reproduce the snapshot");
  }
  return s;
}

std::uint64_t state_hash(const TrainState& state) { return fnv1a64(serialize(state)); }

void write_checkpoint_file(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  os.write(ckpt.bytes.data(), static_cast<std::streamsize>(ckpt.bytes.size()));
  if (!os) throw ConfigError("cannot write checkpoint " + path.string());
}

Checkpoint read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  Checkpoint c;
  c.bytes = buf.str();
  c.hash = fnv1a64(c.bytes);
  return c;
}

}  // namespace evae
