#include "opera/grouping.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "opera/errors.hpp"

namespace opera {
namespace {

constexpr unsigned __int128 kCountLimit = static_cast<unsigned __int128>(1)
                                          << 62;

// C(n, k) saturating at kCountLimit.
unsigned __int128 binom_sat(int64_t n, int64_t k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (int64_t i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned __int128>(n - k + i) / i;
    if (r > kCountLimit) return kCountLimit + 1;
  }
  return r;
}

// Number of nondecreasing sequences of length len over `width` symbols.
uint64_t multisets(int width, int len) {
  if (len == 0) return 1;
  if (width <= 0) return 0;
  auto r = binom_sat(width + len - 1, len);
  if (r > kCountLimit) throw SizeLimitExceeded("group type count overflow");
  return static_cast<uint64_t>(r);
}

void check_catalog_args(int num_types, int kappa) {
  if (num_types < 1) throw InvalidArgument("need at least one vertex type");
  if (kappa < 1) throw InvalidArgument("kappa must be at least 1");
}

void enumerate_size(int num_types, int size, std::vector<int>& cur,
                    const GroupPredicate& keep, std::vector<GroupType>& out) {
  if (static_cast<int>(cur.size()) == size) {
    GroupType g{cur};
    if (!keep || keep(g)) {
      if (out.size() >= kMaxCatalogSize) {
        throw SizeLimitExceeded("group catalog exceeds " +
                                std::to_string(kMaxCatalogSize) + " entries");
      }
      out.push_back(std::move(g));
    }
    return;
  }
  int start = cur.empty() ? 0 : cur.back();
  for (int v = start; v < num_types; ++v) {
    cur.push_back(v);
    enumerate_size(num_types, size, cur, keep, out);
    cur.pop_back();
  }
}

}  // namespace

int GroupType::multiplicity(int type) const {
  return static_cast<int>(std::count(members.begin(), members.end(), type));
}

std::vector<std::pair<int, int>> GroupType::multiplicities() const {
  std::vector<std::pair<int, int>> out;
  for (int v : members) {
    if (!out.empty() && out.back().first == v) {
      ++out.back().second;
    } else {
      out.emplace_back(v, 1);
    }
  }
  return out;
}

std::string GroupType::to_string() const {
  std::ostringstream os;
  os << '{';
  for (size_t i = 0; i < members.size(); ++i) {
    if (i) os << ',';
    os << members[i];
  }
  os << '}';
  return os.str();
}

uint64_t count_group_types(int num_types, int kappa) {
  check_catalog_args(num_types, kappa);
  unsigned __int128 total = 0;
  for (int k = 1; k <= kappa; ++k) {
    total += binom_sat(static_cast<int64_t>(num_types) + k - 1, k);
    if (total > kCountLimit) {
      throw SizeLimitExceeded("group type count exceeds 2^62");
    }
  }
  return static_cast<uint64_t>(total);
}

uint64_t canonical_rank(std::span<const int> members, int num_types) {
  int s = static_cast<int>(members.size());
  uint64_t rank = 0;
  for (int k = 1; k < s; ++k) rank += multisets(num_types, k);
  int prev = 0;
  for (int k = 0; k < s; ++k) {
    for (int x = prev; x < members[k]; ++x) {
      rank += multisets(num_types - x, s - k - 1);
    }
    prev = members[k];
  }
  return rank;
}

std::vector<GroupType> enumerate_group_types(int num_types, int kappa,
                                             const GroupPredicate& keep) {
  check_catalog_args(num_types, kappa);
  if (!keep) {
    uint64_t n = count_group_types(num_types, kappa);
    if (n > kMaxCatalogSize) {
      throw SizeLimitExceeded("full catalog has " + std::to_string(n) +
                              " group types; supply a pruning predicate");
    }
  }
  std::vector<GroupType> out;
  std::vector<int> cur;
  for (int size = 1; size <= kappa; ++size) {
    enumerate_size(num_types, size, cur, keep, out);
  }
  return out;
}

GroupCatalog GroupCatalog::full(int num_types, int kappa) {
  GroupCatalog c;
  c.num_types_ = num_types;
  c.kappa_ = kappa;
  c.full_ = true;
  c.groups_ = enumerate_group_types(num_types, kappa);
  c.build_indexes();
  return c;
}

GroupCatalog GroupCatalog::pruned(int num_types, int kappa,
                                  const GroupPredicate& keep) {
  GroupCatalog c;
  c.num_types_ = num_types;
  c.kappa_ = kappa;
  c.groups_ = enumerate_group_types(num_types, kappa, keep);
  c.full_ = c.groups_.size() == count_group_types(num_types, kappa);
  c.build_indexes();
  return c;
}

GroupCatalog GroupCatalog::from_groups(int num_types, int kappa,
                                       std::vector<GroupType> groups) {
  check_catalog_args(num_types, kappa);
  GroupCatalog c;
  c.num_types_ = num_types;
  c.kappa_ = kappa;
  uint64_t prev = 0;
  for (size_t i = 0; i < groups.size(); ++i) {
    const auto& m = groups[i].members;
    if (m.empty() || static_cast<int>(m.size()) > kappa) {
      throw InvalidArgument("group " + std::to_string(i) + " has bad size");
    }
    for (size_t k = 0; k < m.size(); ++k) {
      if (m[k] < 0 || m[k] >= num_types || (k && m[k] < m[k - 1])) {
        throw InvalidArgument("group " + std::to_string(i) +
                              " is not a sorted multiset of known types");
      }
    }
    uint64_t r = canonical_rank(m, num_types);
    if (i && r <= prev) {
      throw InvalidArgument("groups are not unique and in canonical order");
    }
    prev = r;
  }
  c.groups_ = std::move(groups);
  c.full_ = c.groups_.size() == count_group_types(num_types, kappa);
  c.build_indexes();
  return c;
}

void GroupCatalog::build_indexes() {
  by_rank_.clear();
  by_rank_.reserve(groups_.size());
  containing_.assign(num_types_, {});
  for (int i = 0; i < size(); ++i) {
    by_rank_.emplace(canonical_rank(groups_[i].members, num_types_), i);
    for (auto [v, n] : groups_[i].multiplicities()) containing_[v].push_back(i);
  }
}

int GroupCatalog::index_of(std::span<const int> sorted_members) const {
  if (sorted_members.empty() ||
      static_cast<int>(sorted_members.size()) > kappa_) {
    return -1;
  }
  uint64_t r = canonical_rank(sorted_members, num_types_);
  if (full_) return static_cast<int>(r);
  auto it = by_rank_.find(r);
  return it == by_rank_.end() ? -1 : it->second;
}

void GroupCatalog::write_csv(std::ostream& out) const {
  out << "group_index,members,size,multiplicities\n";
  for (int i = 0; i < size(); ++i) {
    const auto& g = groups_[i];
    out << i << ',';
    for (int k = 0; k < g.size(); ++k) out << (k ? ";" : "") << g.members[k];
    out << ',' << g.size() << ',';
    bool first = true;
    for (auto [v, n] : g.multiplicities()) {
      out << (first ? "" : ";") << v << ':' << n;
      first = false;
    }
    out << '\n';
  }
}

double h_factor(const GroupType& g, int batch_size, BatchRule rule) {
  int s = g.size();
  if (batch_size < 1) throw InvalidArgument("batch size must be positive");
  if (rule == BatchRule::kStrict && batch_size <= s) {
    throw InvalidArgument("batch size " + std::to_string(batch_size) +
                          " must exceed group size " + std::to_string(s));
  }
  if (batch_size < s) return 0.0;
  double num = 1.0;
  for (int i = 0; i < s; ++i) num *= static_cast<double>(batch_size - i);
  double den = 1.0;
  for (auto [v, n] : g.multiplicities()) {
    for (int i = 2; i <= n; ++i) den *= i;
  }
  return num / den;
}

double group_probability_product(const GroupType& g,
                                 std::span<const double> probs) {
  double prod = 1.0;
  for (int v : g.members) prod *= probs[v];
  return prod;
}

double expected_group_count(const GroupType& g, std::span<const double> probs,
                            int batch_size, BatchRule rule) {
  return h_factor(g, batch_size, rule) * group_probability_product(g, probs);
}

StepLattice::StepLattice(int batch_size, int kappa)
    : batch_size_(batch_size), kappa_(kappa) {
  if (batch_size < 1 || kappa < 1) {
    throw InvalidArgument("lattice needs positive batch size and kappa");
  }
  unsigned __int128 points = 1;
  for (int k = 0; k < kappa; ++k) {
    points *= static_cast<unsigned>(batch_size);
    if (points > kCountLimit) throw SizeLimitExceeded("lattice too large");
  }
  lattice_points_ = static_cast<uint64_t>(points);

  // Valid steps in lexicographic order of the padded tuple. A depth-first
  // walk over labels produces them in that order: at each depth either stop
  // (pad with the current last label) or extend with an unused label, and
  // the padded tuple of "stop" sorts before any extension with a larger
  // label but after extensions with a smaller one.
  std::vector<int> cur;
  std::vector<bool> used(batch_size, false);
  std::vector<std::vector<int>> found;
  auto pad_code = [&](const std::vector<int>& l) {
    uint64_t code = 0;
    for (int k = 0; k < kappa; ++k) {
      int x = k < static_cast<int>(l.size()) ? l[k] : l.back();
      code = code * batch_size + x;
    }
    return code;
  };
  auto rec = [&](auto&& self) -> void {
    if (!cur.empty()) found.push_back(cur);
    if (static_cast<int>(cur.size()) == kappa) return;
    for (int x = 0; x < batch_size; ++x) {
      if (used[x]) continue;
      used[x] = true;
      cur.push_back(x);
      self(self);
      cur.pop_back();
      used[x] = false;
    }
  };
  rec(rec);
  std::vector<std::pair<uint64_t, int>> order;
  order.reserve(found.size());
  for (int i = 0; i < static_cast<int>(found.size()); ++i) {
    order.emplace_back(pad_code(found[i]), i);
  }
  std::sort(order.begin(), order.end());
  labels_.reserve(found.size());
  std::vector<bool> seen(batch_size, false);
  for (auto [code, i] : order) {
    by_code_.emplace(code, static_cast<int>(labels_.size()));
    bool fresh = true;
    for (int x : found[i]) fresh = fresh && !seen[x];
    for (int x : found[i]) seen[x] = true;
    fresh_.push_back(fresh);
    labels_.push_back(std::move(found[i]));
  }
}

std::vector<int> StepLattice::tuple(int step) const {
  const auto& l = labels_[step];
  std::vector<int> t(l);
  t.resize(kappa_, l.back());
  return t;
}

int StepLattice::step_of(std::span<const int> tuple) const {
  if (static_cast<int>(tuple.size()) != kappa_) return -1;
  uint64_t code = 0;
  for (int x : tuple) {
    if (x < 0 || x >= batch_size_) return -1;
    code = code * batch_size_ + x;
  }
  auto it = by_code_.find(code);
  return it == by_code_.end() ? -1 : it->second;
}

namespace {

// Distinct labels of a padded tuple, or empty when the tuple holds no group.
std::vector<int> distinct_prefix(std::span<const int> tuple) {
  std::vector<int> labels;
  for (size_t k = 0; k < tuple.size(); ++k) {
    int x = tuple[k];
    if (std::find(labels.begin(), labels.end(), x) != labels.end()) {
      if (x != labels.back()) return {};
      for (size_t j = k; j < tuple.size(); ++j) {
        if (tuple[j] != x) return {};
      }
      break;
    }
    labels.push_back(x);
  }
  return labels;
}

bool ordered_by_type(std::span<const int> labels,
                     std::span<const int> label_types) {
  for (size_t k = 1; k < labels.size(); ++k) {
    int ta = label_types[labels[k - 1]];
    int tb = label_types[labels[k]];
    if (ta > tb || (ta == tb && labels[k - 1] >= labels[k])) return false;
  }
  return true;
}

}  // namespace

StepOutcome group_of_step(std::span<const int> tuple,
                          std::span<const int> label_types) {
  StepOutcome out;
  out.labels = distinct_prefix(tuple);
  if (out.labels.empty()) return out;
  for (int l : out.labels) {
    if (l < 0 || l >= static_cast<int>(label_types.size())) {
      throw InvalidArgument("step label outside the batch");
    }
    out.group.members.push_back(label_types[l]);
  }
  std::sort(out.group.members.begin(), out.group.members.end());
  out.kind = ordered_by_type(out.labels, label_types) ? StepKind::kProcess
                                                      : StepKind::kDuplicate;
  return out;
}

bool first_visit(const StepLattice& lattice, int step,
                 std::span<const int> label_types, std::vector<int>& members) {
  const auto& labels = lattice.labels(step);
  if (!ordered_by_type(labels, label_types)) return false;
  members.clear();
  for (int l : labels) members.push_back(label_types[l]);
  return true;
}

}  // namespace opera
