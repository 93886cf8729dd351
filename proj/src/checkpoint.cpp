#include "dtwin/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dtwin {

namespace {

constexpr std::array<char, 8> kMagic = {'D', 'T', 'W', 'I', 'N', 'C', 'K', 'P'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("checkpoint truncated");
  return v;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  put<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (1ULL << 32)) throw std::runtime_error("checkpoint array length is implausible");
  std::vector<double> v(n);
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double))))
    throw std::runtime_error("checkpoint truncated");
  return v;
}

void put_net(std::ostream& os, const MlpParams& p) {
  put<std::uint64_t>(os, p.layers.size());
  for (const auto& l : p.layers) {
    put<std::uint64_t>(os, static_cast<std::uint64_t>(l.weight.cols()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(l.weight.rows()));
  }
  put_doubles(os, p.flatten());
}

MlpParams get_net(std::istream& is) {
  const auto layers = get<std::uint64_t>(is);
  if (layers == 0 || layers > 64) throw std::runtime_error("checkpoint layer count is implausible");
  MlpParams p;
  for (std::uint64_t l = 0; l < layers; ++l) {
    const auto in = get<std::uint64_t>(is);
    const auto out = get<std::uint64_t>(is);
    if (!p.layers.empty() && static_cast<std::uint64_t>(p.layers.back().weight.rows()) != in)
      throw std::runtime_error("checkpoint layer dims do not chain");
    p.layers.push_back({Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
                        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out))});
  }
  const auto flat = get_doubles(is);
  p.assign(flat);
  return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint64_t>(os, ck.config_hash);
  put<std::uint64_t>(os, ck.steps);
  put<std::uint64_t>(os, ck.updates);
  put<std::uint64_t>(os, ck.seeds.size());
  for (auto s : ck.seeds) put<std::uint64_t>(os, s);
  put_net(os, ck.actor.net);
  put_net(os, ck.critic.net);
  put_doubles(os, std::vector<double>(ck.actor.log_std.data(), ck.actor.log_std.data() + ck.actor.log_std.size()));
  if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error(path.string() + " is not a checkpoint");
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.config_hash = get<std::uint64_t>(is);
  ck.steps = get<std::uint64_t>(is);
  ck.updates = get<std::uint64_t>(is);
  const auto n_seeds = get<std::uint64_t>(is);
  if (n_seeds > 1000000) throw std::runtime_error("checkpoint seed count is implausible");
  for (std::uint64_t i = 0; i < n_seeds; ++i) ck.seeds.push_back(get<std::uint64_t>(is));
  ck.actor.net = get_net(is);
  ck.critic.net = get_net(is);
  const auto ls = get_doubles(is);
  if (ls.size() != ck.actor.net.output_dim()) throw std::runtime_error("checkpoint log_std size mismatch");
  ck.actor.log_std = Eigen::Map<const Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
  if (ck.critic.net.output_dim() != 1) throw std::runtime_error("checkpoint critic must have one output");
  return ck;
}

}  // namespace dtwin
