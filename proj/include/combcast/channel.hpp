#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace combcast {

// Linear (1-D) arrangement of cooperating base stations with users scattered
// over the cluster span extended by half a cell on each side.
struct Topology {
  int num_bs = 0;
  double spacing = 1.0;                // inter-BS distance D
  std::vector<double> bs_positions;    // n * D
  std::vector<double> user_positions;  // K coordinates on the same axis

  int num_users() const { return static_cast<int>(user_positions.size()); }
};

// Draws `num_users` coordinates independently and uniformly on
// [-D/2, (N-1) D + D/2]. Identical seed gives identical coordinates.
Topology place_users(int num_bs, double spacing, int num_users,
                     std::uint64_t seed);

struct ChannelConfig {
  double path_loss_exponent = 3.0;  // eta
  bool fading = true;               // test hook: false sets g = 1
  double noise_power = 1.0;         // sigma^2 per user
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// h_ij = g_ij / (1 + d_ij^(eta/2)), g_ij ~ CN(0,1) when fading is enabled.
// d_ij = 0 gives h_ij = g_ij exactly, for every eta.
struct ChannelMatrix {
  Eigen::MatrixXcd coefficients;  // H, users x base stations
  Eigen::MatrixXcd fading_draws;  // g
  Eigen::MatrixXd distances;      // d
};

ChannelMatrix generate_channel(const Topology& topology,
                               const ChannelConfig& config,
                               std::uint64_t seed);

// Convenience overload using the seed stored in the config.
ChannelMatrix generate_channel(const Topology& topology,
                               const ChannelConfig& config);

}  // namespace combcast
