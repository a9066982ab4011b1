#pragma once

#include <stdexcept>
#include <vector>

namespace combcast {

// Zipf popularity law over a finite catalog: the file of rank i is requested
// with frequency f(i) = i^-alpha, ranks 1..catalog_size.
class ZipfModel {
 public:
  ZipfModel(double alpha, int catalog_size);

  double alpha() const { return alpha_; }
  int catalog_size() const { return catalog_size_; }

  // f(rank) = rank^-alpha. Throws std::out_of_range outside [1, catalog_size].
  double popularity(int rank) const;

  // f(rank) / C, where C = sum_i f(i).
  double normalized_popularity(int rank) const;

  // C = sum_{i=1}^{catalog_size} f(i), by direct summation.
  double normalization() const { return normalization_; }

 private:
  double alpha_;
  int catalog_size_;
  double normalization_;
};

// Direct sum of i^-alpha over i = 1..catalog_size.
double zipf_normalization(double alpha, int catalog_size);

// Expected per-rank demand when each of `subscribers` users requests exactly
// one file according to the popularity law.
struct DemandProfile {
  std::vector<double> expected_requests;  // index r holds rank r+1
  int subscribers = 0;
  double file_size_bits = 0.0;
};

DemandProfile make_demand_profile(const ZipfModel& model, int subscribers,
                                  double file_size_bits);

// Volume pushed over the broadcast mode when ranks < threshold are broadcast
// exactly once: (threshold - 1) * s. Threshold range is [1, catalog_size + 1];
// both endpoints (pure unicast, pure broadcast) are representable.
double volume_broadcast(const ZipfModel& model, int threshold,
                        double file_size_bits);

// Volume unicast when ranks >= threshold are individually delivered:
// s * K * sum_{i=threshold}^{i_max} f(i)/C.
double volume_unicast(const ZipfModel& model, int threshold,
                      double file_size_bits, int subscribers);

}  // namespace combcast
