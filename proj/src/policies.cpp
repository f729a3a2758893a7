#include "opera/policies.hpp"

#include <algorithm>
#include <cmath>

#include "opera/errors.hpp"
#include "opera/offline.hpp"

namespace opera {

double gamma_fixed_point(int kappa) {
  if (kappa < 1) throw InvalidArgument("kappa must be at least 1");
  // f(g) = g - (1-g)^(k+1) is increasing with f(0) < 0 < f(1).
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid - std::pow(1.0 - mid, kappa + 1) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

int sample_safe_set(std::span<const int> safe, std::span<double> probs,
                    RngStream& rng, bool& clamped) {
  clamped = false;
  if (safe.empty()) return -1;
  double total = 0.0;
  for (double p : probs) {
    if (p > 1.0) clamped = true;
    total += p;
  }
  if (total > 1.0) clamped = true;
  if (clamped) {
    for (double& p : probs) p /= total;
  }
  const double z = rng.uniform();
  double acc = 0.0;
  for (size_t k = 0; k < safe.size(); ++k) {
    acc += probs[k];
    if (z < acc) return safe[k];
  }
  return -1;
}

LpPlan::LpPlan(const Instance& inst, const LpSolution& sol) {
  const int U = inst.num_resources();
  const int G = inst.num_groups();
  const int T = inst.rounds();
  if (sol.num_resources != U || sol.num_groups != G || sol.rounds != T) {
    throw InvalidArgument("LP solution does not match the instance");
  }
  width_ = std::max(U, G);
  objective_ = sol.objective;
  totals_.assign(static_cast<size_t>(T) * width_, 0.0);
  // Counting pass, then fill; both lists come out ascending.
  std::vector<size_t> res_count(static_cast<size_t>(T) * width_ + 1, 0);
  std::vector<size_t> grp_count(static_cast<size_t>(T) * width_ + 1, 0);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u < U; ++u) {
      for (int g = 0; g < G; ++g) {
        const double x = sol.value(u, g, t);
        if (x <= 0.0) continue;
        ++res_count[key(u, t) + 1];
        ++grp_count[key(g, t) + 1];
        totals_[key(g, t)] += x;
      }
    }
  }
  for (size_t k = 1; k < res_count.size(); ++k) {
    res_count[k] += res_count[k - 1];
    grp_count[k] += grp_count[k - 1];
  }
  res_start_ = res_count;
  grp_start_ = grp_count;
  res_entries_.resize(res_count.back());
  grp_entries_.resize(grp_count.back());
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u < U; ++u) {
      for (int g = 0; g < G; ++g) {
        const double x = sol.value(u, g, t);
        if (x <= 0.0) continue;
        res_entries_[res_count[key(u, t)]++] = {g, x};
        grp_entries_[grp_count[key(g, t)]++] = {u, x};
      }
    }
  }
}

std::span<const LpPlan::Entry> LpPlan::by_resource(int u, int t) const {
  const size_t k = key(u, t);
  return std::span<const Entry>(res_entries_).subspan(
      res_start_[k], res_start_[k + 1] - res_start_[k]);
}

std::span<const LpPlan::Entry> LpPlan::by_group(int g, int t) const {
  const size_t k = key(g, t);
  return std::span<const Entry>(grp_entries_).subspan(
      grp_start_[k], grp_start_[k + 1] - grp_start_[k]);
}

bool take_labels(const GroupType& group, std::span<const int> label_types,
                 std::vector<char>& consumed, std::vector<int>& labels) {
  labels.clear();
  for (int v : group.members) {
    int found = -1;
    for (size_t l = 0; l < label_types.size(); ++l) {
      if (label_types[l] == v && !consumed[l]) {
        found = static_cast<int>(l);
        break;
      }
    }
    if (found < 0) {
      for (int l : labels) consumed[l] = 0;
      labels.clear();
      return false;
    }
    consumed[found] = 1;
    labels.push_back(found);
  }
  return true;
}

void GreedyPolicy::decide(const RoundView& view, RngStream&,
                          std::vector<Decision>& out, Telemetry& tel) const {
  std::vector<int> idle;
  for (int u = 0; u < inst_.num_resources(); ++u) {
    if (view.idle(u)) idle.push_back(u);
  }
  if (idle.empty()) return;
  const RoundMatching m =
      greedy_matching_ilp(inst_, view.round, idle, view.counts);
  if (!m.exact) ++tel.inexact_rounds;
  std::vector<char> consumed(view.label_types.size(), 0);
  for (const Assignment& a : m.assignments) {
    Decision d{a.resource, a.group, {}, -1};
    if (!take_labels(inst_.catalog()[a.group], view.label_types, consumed,
                     d.labels)) {
      throw InconsistentState("greedy matching uses more vertices than arrived");
    }
    out.push_back(std::move(d));
  }
}

namespace {

// All label subsets of size 1..kappa, lexicographic within each size, flat.
void label_subsets(int b, int kappa, std::vector<int>& flat,
                   std::vector<int>& start) {
  flat.clear();
  start.assign(1, 0);
  std::vector<int> c;
  for (int k = 1; k <= std::min(kappa, b); ++k) {
    c.resize(k);
    for (int i = 0; i < k; ++i) c[i] = i;
    while (true) {
      flat.insert(flat.end(), c.begin(), c.end());
      start.push_back(static_cast<int>(flat.size()));
      int i = k - 1;
      while (i >= 0 && c[i] == b - k + i) --i;
      if (i < 0) break;
      ++c[i];
      for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
    }
  }
}

}  // namespace

void RandomPolicy::decide(const RoundView& view, RngStream& rng,
                          std::vector<Decision>& out, Telemetry&) const {
  const int U = inst_.num_resources();
  std::vector<char> free(U);
  int num_free = 0;
  for (int u = 0; u < U; ++u) {
    free[u] = view.idle(u);
    num_free += free[u];
  }
  if (num_free == 0) return;
  const int b = static_cast<int>(view.label_types.size());
  std::vector<int> flat, start;
  label_subsets(b, inst_.kappa(), flat, start);
  std::vector<int> order(start.size() - 1);
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng.shuffle(std::span<int>(order));

  std::vector<char> consumed(b, 0);
  std::vector<int> members, candidates;
  for (int s : order) {
    if (num_free == 0) break;
    const std::span<const int> labels(flat.data() + start[s],
                                      start[s + 1] - start[s]);
    bool ok = true;
    members.clear();
    for (int l : labels) {
      if (consumed[l]) ok = false;
      members.push_back(view.label_types[l]);
    }
    if (!ok) continue;
    std::sort(members.begin(), members.end());
    const int g = inst_.catalog().index_of(members);
    if (g < 0) continue;
    candidates.clear();
    for (int u = 0; u < U; ++u) {
      if (free[u] && inst_.weight(u, g, view.round) > 0.0) {
        candidates.push_back(u);
      }
    }
    if (candidates.empty()) continue;
    const int u = candidates[rng.below(candidates.size())];
    free[u] = 0;
    --num_free;
    for (int l : labels) consumed[l] = 1;
    out.push_back({u, g, std::vector<int>(labels.begin(), labels.end()), -1});
  }
}

OperaPolicy::OperaPolicy(const Instance& inst,
                         std::shared_ptr<const LpPlan> plan,
                         OperaVariant variant)
    : inst_(inst), plan_(std::move(plan)), variant_(variant) {
  const int G = inst.num_groups();
  expected_.resize(static_cast<size_t>(inst.rounds()) * G);
  for (int t = 0; t < inst.rounds(); ++t) {
    for (int g = 0; g < G; ++g) {
      expected_[static_cast<size_t>(t) * G + g] =
          expected_group_count(inst.catalog()[g], inst.probs(t),
                               inst.batch_size(t), inst.batch_rule());
    }
  }
}

std::string OperaPolicy::name() const {
  return variant_ == OperaVariant::kRatioToExpected ? "opera1" : "opera2";
}

void OperaPolicy::decide(const RoundView& view, RngStream& rng,
                         std::vector<Decision>& out, Telemetry&) const {
  const int t = view.round;
  const int G = inst_.num_groups();
  std::vector<int> idle;
  for (int u = 0; u < inst_.num_resources(); ++u) {
    if (view.idle(u)) idle.push_back(u);
  }
  if (idle.empty()) return;
  rng.shuffle(std::span<int>(idle));
  std::vector<int> remaining(view.counts.begin(), view.counts.end());
  std::vector<char> consumed(view.label_types.size(), 0);
  std::vector<int> cand;
  std::vector<double> ratio;
  for (int u : idle) {
    cand.clear();
    ratio.clear();
    for (const LpPlan::Entry& e : plan_->by_resource(u, t)) {
      const GroupType& group = inst_.catalog()[e.index];
      bool formable = true;
      for (auto [v, n] : group.multiplicities()) {
        if (remaining[v] < n) formable = false;
      }
      if (!formable) continue;
      const double denom =
          variant_ == OperaVariant::kRatioToExpected
              ? expected_[static_cast<size_t>(t) * G + e.index]
              : plan_->group_total(e.index, t);
      cand.push_back(e.index);
      ratio.push_back(e.x / denom);
    }
    if (cand.empty()) continue;
    double total = 0.0;
    for (double r : ratio) total += r;
    double scale = 1.0;
    if (variant_ == OperaVariant::kShareOfTotal || total > 1.0) scale = total;
    const double z = rng.uniform() * scale;
    double acc = 0.0;
    int pick = -1;
    for (size_t k = 0; k < cand.size(); ++k) {
      acc += ratio[k];
      if (z < acc) {
        pick = cand[k];
        break;
      }
    }
    if (pick < 0) continue;
    Decision d{u, pick, {}, -1};
    take_labels(inst_.catalog()[pick], view.label_types, consumed, d.labels);
    for (int l : d.labels) --remaining[view.label_types[l]];
    out.push_back(std::move(d));
  }
}

EpsGreedyPolicy::EpsGreedyPolicy(const Instance& inst,
                                 std::shared_ptr<const LpPlan> plan,
                                 double epsilon)
    : greedy_(inst),
      opera_(inst, std::move(plan), OperaVariant::kRatioToExpected),
      epsilon_(epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw InvalidArgument("epsilon must lie in [0, 1]");
  }
}

void EpsGreedyPolicy::decide(const RoundView& view, RngStream& rng,
                             std::vector<Decision>& out,
                             Telemetry& tel) const {
  bool use_greedy = epsilon_ >= 1.0;
  if (epsilon_ > 0.0 && epsilon_ < 1.0) use_greedy = rng.uniform() < epsilon_;
  if (use_greedy) {
    greedy_.decide(view, rng, out, tel);
  } else {
    opera_.decide(view, rng, out, tel);
  }
}

}  // namespace opera
