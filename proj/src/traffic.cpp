#include "combcast/traffic.hpp"

#include <cmath>

namespace combcast {

double zipf_normalization(double alpha, int catalog_size) {
  if (catalog_size < 1) {
    throw std::invalid_argument("zipf_normalization: catalog_size must be >= 1");
  }
  double sum = 0.0;
  for (int i = 1; i <= catalog_size; ++i) {
    sum += std::pow(static_cast<double>(i), -alpha);
  }
  return sum;
}

ZipfModel::ZipfModel(double alpha, int catalog_size)
    : alpha_(alpha), catalog_size_(catalog_size) {
  if (alpha < 0.0) {
    throw std::invalid_argument("ZipfModel: alpha must be >= 0");
  }
  if (catalog_size < 1) {
    throw std::invalid_argument("ZipfModel: catalog_size must be >= 1");
  }
  normalization_ = zipf_normalization(alpha, catalog_size);
}

double ZipfModel::popularity(int rank) const {
  if (rank < 1 || rank > catalog_size_) {
    throw std::out_of_range("ZipfModel::popularity: rank out of range");
  }
  return std::pow(static_cast<double>(rank), -alpha_);
}

double ZipfModel::normalized_popularity(int rank) const {
  return popularity(rank) / normalization_;
}

DemandProfile make_demand_profile(const ZipfModel& model, int subscribers,
                                  double file_size_bits) {
  if (subscribers < 1) {
    throw std::invalid_argument("make_demand_profile: subscribers must be >= 1");
  }
  DemandProfile profile;
  profile.subscribers = subscribers;
  profile.file_size_bits = file_size_bits;
  profile.expected_requests.reserve(model.catalog_size());
  for (int rank = 1; rank <= model.catalog_size(); ++rank) {
    profile.expected_requests.push_back(subscribers *
                                        model.normalized_popularity(rank));
  }
  return profile;
}

namespace {
void check_threshold(const ZipfModel& model, int threshold) {
  if (threshold < 1 || threshold > model.catalog_size() + 1) {
    throw std::out_of_range("threshold outside [1, catalog_size + 1]");
  }
}
}  // namespace

double volume_broadcast(const ZipfModel& model, int threshold,
                        double file_size_bits) {
  check_threshold(model, threshold);
  return (threshold - 1) * file_size_bits;
}

double volume_unicast(const ZipfModel& model, int threshold,
                      double file_size_bits, int subscribers) {
  check_threshold(model, threshold);
  double tail = 0.0;
  for (int i = threshold; i <= model.catalog_size(); ++i) {
    tail += model.popularity(i);
  }
  return file_size_bits * subscribers * tail / model.normalization();
}

}  // namespace combcast
