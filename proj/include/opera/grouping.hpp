#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace opera {

// A multiset of vertex types that can share one resource. Members are kept
// sorted by ascending type id, which is the canonical total order over types.
struct GroupType {
  std::vector<int> members;

  int size() const { return static_cast<int>(members.size()); }
  int multiplicity(int type) const;
  // (type, count) for each distinct member, ascending by type.
  std::vector<std::pair<int, int>> multiplicities() const;
  std::string to_string() const;

  friend bool operator==(const GroupType&, const GroupType&) = default;
};

// Number of group types of size 1..kappa over num_types types:
// sum_k C(num_types + k - 1, k). Throws SizeLimitExceeded past 2^62.
uint64_t count_group_types(int num_types, int kappa);

// Position of a sorted multiset in the canonical order (by size, then
// lexicographic).
uint64_t canonical_rank(std::span<const int> members, int num_types);

using GroupPredicate = std::function<bool(const GroupType&)>;

inline constexpr uint64_t kMaxCatalogSize = 1'000'000;

// Every multiset of cardinality 1..kappa exactly once, in canonical order.
// Refuses catalogs above kMaxCatalogSize unless a pruning predicate is given,
// in which case only the retained groups count against the limit.
std::vector<GroupType> enumerate_group_types(int num_types, int kappa,
                                             const GroupPredicate& keep = {});

// Immutable, indexed list of the group types an instance uses.
class GroupCatalog {
 public:
  GroupCatalog() = default;
  static GroupCatalog full(int num_types, int kappa);
  static GroupCatalog pruned(int num_types, int kappa,
                             const GroupPredicate& keep);
  // Groups must be valid, unique and already in canonical order.
  static GroupCatalog from_groups(int num_types, int kappa,
                                  std::vector<GroupType> groups);

  int size() const { return static_cast<int>(groups_.size()); }
  int num_types() const { return num_types_; }
  int kappa() const { return kappa_; }
  bool is_full() const { return full_; }
  const GroupType& operator[](int index) const { return groups_[index]; }
  const std::vector<GroupType>& groups() const { return groups_; }

  // Index of the group with these sorted members, or -1 when absent.
  int index_of(std::span<const int> sorted_members) const;

  // Group indices containing `type`, ascending.
  const std::vector<int>& groups_containing(int type) const {
    return containing_[type];
  }

  void write_csv(std::ostream& out) const;

 private:
  void build_indexes();

  int num_types_ = 0;
  int kappa_ = 0;
  bool full_ = true;
  std::vector<GroupType> groups_;
  std::unordered_map<uint64_t, int> by_rank_;
  std::vector<std::vector<int>> containing_;
};

// How h_factor treats batches that are not larger than the group.
enum class BatchRule {
  kStrict,   // require b > |g|
  kRelaxed,  // allow any b >= 1; groups larger than b get h = 0
};

// Number of step-lattice positions at which a group type is considered:
// b (b-1) ... (b-|g|+1) / prod_v n_v!.
double h_factor(const GroupType& g, int batch_size,
                BatchRule rule = BatchRule::kStrict);

// Expected number of formable groups of this type in a batch of b iid draws:
// h_factor * prod_v p_v^{n_v}.
double expected_group_count(const GroupType& g, std::span<const double> probs,
                            int batch_size,
                            BatchRule rule = BatchRule::kStrict);

// prod_v p_v^{n_v}, accumulated by repeated multiplication from 1.0.
double group_probability_product(const GroupType& g,
                                 std::span<const double> probs);

inline double expected_vertex_count(int type, std::span<const double> probs,
                                    int batch_size) {
  return static_cast<double>(batch_size) * probs[type];
}

// The (b)^kappa step lattice visited within one round, restricted to the
// positions that can hold a group: distinct labels l_1..l_s padded by
// repeating l_s. Steps are kept in lexicographic order of the padded tuple.
// Labels are 0-based here; the padded tuple uses the same labels.
class StepLattice {
 public:
  StepLattice() = default;
  StepLattice(int batch_size, int kappa);

  int batch_size() const { return batch_size_; }
  int kappa() const { return kappa_; }
  int size() const { return static_cast<int>(labels_.size()); }
  // All lattice points, including those where nothing happens.
  uint64_t lattice_points() const { return lattice_points_; }

  // Distinct labels of valid step s, in tuple order.
  const std::vector<int>& labels(int step) const { return labels_[step]; }
  std::vector<int> tuple(int step) const;
  // Position of a padded tuple among valid steps, or -1 if nothing happens
  // there.
  int step_of(std::span<const int> tuple) const;

  // True when no earlier step involves any of this step's labels. At a fresh
  // step the member vertices cannot have been consumed and resource
  // availability is independent of the members' types.
  bool fresh(int step) const { return fresh_[step]; }

 private:
  int batch_size_ = 0;
  int kappa_ = 0;
  uint64_t lattice_points_ = 0;
  std::vector<std::vector<int>> labels_;
  std::vector<bool> fresh_;
  std::unordered_map<uint64_t, int> by_code_;
};

enum class StepKind {
  kNoGroup,    // lattice point that does not hold a group
  kDuplicate,  // concrete group already visited at an earlier step
  kProcess,    // first visit of this concrete group
};

struct StepOutcome {
  StepKind kind = StepKind::kNoGroup;
  GroupType group;          // valid unless kNoGroup
  std::vector<int> labels;  // labels of the member vertices
};

// Group formed at a padded lattice tuple given the types of the labeled
// vertices. A concrete group is processed only at the step whose labels are
// ordered by (type, label); every other visit is a duplicate.
StepOutcome group_of_step(std::span<const int> tuple,
                          std::span<const int> label_types);

// Same rule for a valid step index of a lattice; fills `members` with the
// sorted member types and returns true on a first visit.
bool first_visit(const StepLattice& lattice, int step,
                 std::span<const int> label_types, std::vector<int>& members);

}  // namespace opera
