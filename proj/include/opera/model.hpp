#pragma once

#include <cstdint>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "opera/grouping.hpp"
#include "opera/rng.hpp"

namespace opera {

struct VertexType {
  int id = 0;
  std::string label;
};

struct Resource {
  int id = 0;
  int capacity = 1;
};

struct ArrivalModel {
  std::vector<int> batch_sizes;            // b^t
  std::vector<std::vector<double>> probs;  // [t][v]

  int rounds() const { return static_cast<int>(batch_sizes.size()); }
};

// Distribution of how many rounds a resource stays busy after an assignment.
// Stored as a sorted support with probabilities; a constant has one point.
class OccupancyDistribution {
 public:
  OccupancyDistribution() = default;
  static OccupancyDistribution constant(int rounds);
  // Merges duplicate support points and drops zero-probability ones.
  static OccupancyDistribution categorical(std::vector<int> support,
                                           std::vector<double> probs);

  bool is_constant() const { return support_.size() == 1; }
  int constant_value() const { return support_.front(); }
  const std::vector<int>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }
  int max_value() const { return support_.back(); }

  // Pr[c > d].
  double survival(int d) const;
  int sample(RngStream& rng) const;

  friend bool operator==(const OccupancyDistribution&,
                         const OccupancyDistribution&) = default;

 private:
  std::vector<int> support_{1};
  std::vector<double> probs_{1.0};
};

// Full problem description. Weights and occupancy are dense over
// (resource, group, round); occupancy cells point into a table of distinct
// distributions so large instances stay small.
class Instance {
 public:
  Instance() = default;
  Instance(int kappa, std::vector<VertexType> types,
           std::vector<Resource> resources, ArrivalModel arrivals,
           GroupCatalog catalog);

  int kappa() const { return kappa_; }
  int num_resources() const { return static_cast<int>(resources_.size()); }
  int num_types() const { return static_cast<int>(types_.size()); }
  int num_groups() const { return catalog_.size(); }
  int rounds() const { return arrivals_.rounds(); }

  const std::vector<VertexType>& vertex_types() const { return types_; }
  const std::vector<Resource>& resources() const { return resources_; }
  const ArrivalModel& arrivals() const { return arrivals_; }
  const GroupCatalog& catalog() const { return catalog_; }
  int batch_size(int t) const { return arrivals_.batch_sizes[t]; }
  std::span<const double> probs(int t) const { return arrivals_.probs[t]; }

  bool relax_batch_size() const { return relax_batch_size_; }
  void set_relax_batch_size(bool relax) { relax_batch_size_ = relax; }
  BatchRule batch_rule() const {
    return relax_batch_size_ ? BatchRule::kRelaxed : BatchRule::kStrict;
  }

  double weight(int u, int g, int t) const { return weights_[cell(u, g, t)]; }
  void set_weight(int u, int g, int t, double w) { weights_[cell(u, g, t)] = w; }
  // Sets the weight for every round.
  void set_weight(int u, int g, double w);

  const OccupancyDistribution& occupancy(int u, int g, int t) const {
    return distributions_[occupancy_ref_[cell(u, g, t)]];
  }
  void set_occupancy(int u, int g, int t, const OccupancyDistribution& d);
  void set_occupancy(int u, int g, const OccupancyDistribution& d);
  const std::vector<OccupancyDistribution>& distinct_occupancies() const {
    return distributions_;
  }
  // Largest occupancy support value over the whole instance.
  int max_occupancy() const;

  nlohmann::json& metadata() { return metadata_; }
  const nlohmann::json& metadata() const { return metadata_; }

  size_t cell(int u, int g, int t) const {
    return (static_cast<size_t>(u) * num_groups() + g) * rounds() + t;
  }

 private:
  int intern(const OccupancyDistribution& d);

  int kappa_ = 1;
  std::vector<VertexType> types_;
  std::vector<Resource> resources_;
  ArrivalModel arrivals_;
  GroupCatalog catalog_;
  bool relax_batch_size_ = false;
  std::vector<double> weights_;
  std::vector<int32_t> occupancy_ref_;
  std::vector<OccupancyDistribution> distributions_;
  nlohmann::json metadata_ = nlohmann::json::object();
};

struct ValidationReport {
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

inline constexpr double kProbabilityTolerance = 1e-9;

ValidationReport validate_instance(const Instance& inst);

// Throws InvalidArgument listing every failure.
void require_valid(const Instance& inst);

}  // namespace opera
