#include "combcast/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "combcast/rng.hpp"

namespace combcast {

void ChannelConfig::validate() const {
  if (path_loss_exponent < 0.0) {
    throw std::invalid_argument("ChannelConfig: path_loss_exponent must be >= 0");
  }
  if (!(noise_power > 0.0)) {
    throw std::invalid_argument("ChannelConfig: noise_power must be > 0");
  }
}

Topology place_users(int num_bs, double spacing, int num_users,
                     std::uint64_t seed) {
  if (num_bs < 1 || num_users < 1) {
    throw std::invalid_argument("place_users: need at least one BS and one user");
  }
  if (!(spacing > 0.0)) {
    throw std::invalid_argument("place_users: spacing must be > 0");
  }

  Topology topology;
  topology.num_bs = num_bs;
  topology.spacing = spacing;
  topology.bs_positions.reserve(num_bs);
  for (int n = 0; n < num_bs; ++n) {
    topology.bs_positions.push_back(n * spacing);
  }

  const double lo = -spacing / 2.0;
  const double hi = (num_bs - 1) * spacing + spacing / 2.0;
  const CounterRng rng(derive_key(seed, rng_stream::kUserPlacement));
  topology.user_positions.reserve(num_users);
  for (int i = 0; i < num_users; ++i) {
    topology.user_positions.push_back(rng.uniform(i, lo, hi));
  }
  return topology;
}

ChannelMatrix generate_channel(const Topology& topology,
                               const ChannelConfig& config) {
  return generate_channel(topology, config, config.seed);
}

ChannelMatrix generate_channel(const Topology& topology,
                               const ChannelConfig& config,
                               std::uint64_t seed) {
  config.validate();
  const int users = topology.num_users();
  const int num_bs = topology.num_bs;
  if (users < 1 || num_bs < 1) {
    throw std::invalid_argument("generate_channel: empty topology");
  }

  ChannelMatrix channel;
  channel.coefficients.resize(users, num_bs);
  channel.fading_draws.resize(users, num_bs);
  channel.distances.resize(users, num_bs);

  const CounterRng rng(derive_key(seed, rng_stream::kFading));
  for (int i = 0; i < users; ++i) {
    for (int j = 0; j < num_bs; ++j) {
      const double d =
          std::abs(topology.user_positions[i] - topology.bs_positions[j]);
      std::complex<double> g{1.0, 0.0};
      if (config.fading) {
        g = rng.complex_gaussian(static_cast<std::uint64_t>(i) * num_bs + j);
      }
      // d = 0 must give h = g for every eta, including eta = 0 where
      // pow(0, 0) would otherwise contribute a spurious 1.
      const double attenuation =
          (d == 0.0) ? 0.0 : std::pow(d, config.path_loss_exponent / 2.0);
      channel.distances(i, j) = d;
      channel.fading_draws(i, j) = g;
      channel.coefficients(i, j) = g / (1.0 + attenuation);
    }
  }
  return channel;
}

}  // namespace combcast
