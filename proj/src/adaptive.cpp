#include "opera/adaptive.hpp"

#include <algorithm>
#include <cmath>

#include "opera/errors.hpp"
#include "opera/stats.hpp"

namespace opera {

const GroupCell* RoundTables::find(int step, int group) const {
  auto first = cells.begin() + cell_start[step];
  auto last = cells.begin() + cell_start[step + 1];
  auto it = std::lower_bound(
      first, last, group,
      [](const GroupCell& c, int g) { return c.group < g; });
  if (it == last || it->group != group) return nullptr;
  return &*it;
}

double AdaptiveTables::standard_error(double p) const {
  return bernoulli_se(p, static_cast<size_t>(config.samples));
}

const StepLattice& LatticeCache::get(int batch_size) {
  auto& slot = lattices_[batch_size];
  if (!slot) slot = std::make_unique<StepLattice>(batch_size, kappa_);
  return *slot;
}

bool step_compatible(const GroupType& group, std::span<const int> labels) {
  if (static_cast<int>(labels.size()) != group.size()) return false;
  for (size_t k = 0; k + 1 < labels.size(); ++k) {
    if (group.members[k] == group.members[k + 1] && labels[k] >= labels[k + 1]) {
      return false;
    }
  }
  return true;
}

// Per-step decision procedure shared by the estimator's particles and by
// live episodes.
class AdaptiveEngine {
 public:
  struct Scratch {
    std::vector<int> members;
    std::vector<int> safe;
    std::vector<double> probs;
  };

  AdaptiveEngine(const Instance& inst, const LpPlan& plan, const AdaptiveConfig& config,
         double gamma)
      : inst_(inst),
        plan_(plan),
        kind_(config.kind),
        rule_(config.rule),
        gamma_(gamma),
        lattices_(inst.kappa()) {
    const int T = inst.rounds();
    const int G = inst.num_groups();
    const int V = inst.num_types();
    if (kind_ == AdaptiveKind::kBatch) {
      if (inst.kappa() != 1) {
        throw InvalidArgument("batch adaptive policy requires kappa = 1");
      }
      q_.resize(static_cast<size_t>(T) * V);
      for (int t = 0; t < T; ++t) {
        for (int v = 0; v < V; ++v) {
          q_[static_cast<size_t>(t) * V + v] =
              expected_vertex_count(v, inst.probs(t), inst.batch_size(t));
        }
      }
      return;
    }
    h_.resize(static_cast<size_t>(T) * G);
    prod_.resize(h_.size());
    hprod_.resize(h_.size());
    for (int t = 0; t < T; ++t) {
      lattices_.get(inst.batch_size(t));
      for (int g = 0; g < G; ++g) {
        const size_t k = static_cast<size_t>(t) * G + g;
        const GroupType& group = inst.catalog()[g];
        h_[k] = h_factor(group, inst.batch_size(t), inst.batch_rule());
        prod_[k] = group_probability_product(group, inst.probs(t));
        hprod_[k] = h_[k] * prod_[k];
      }
    }
  }

  AdaptiveKind kind() const { return kind_; }

  int steps(int t) const {
    return kind_ == AdaptiveKind::kBatch ? inst_.batch_size(t)
                                         : lattice(t).size();
  }
  const StepLattice& lattice(int t) const {
    return lattices_.at(inst_.batch_size(t));
  }

  // Group offered at step s of round t, or -1. Fills scratch.members.
  int offered_group(int t, int s, std::span<const int> types,
                    Scratch& scratch) const {
    if (kind_ == AdaptiveKind::kBatch) {
      scratch.members.assign(1, types[s]);
      return inst_.catalog().index_of(scratch.members);
    }
    if (!first_visit(lattice(t), s, types, scratch.members)) return -1;
    return inst_.catalog().index_of(scratch.members);
  }

  // Takes step s of round t. Returns the chosen resource or -1, marking
  // consumed vertices and the resource as no longer free.
  int step(int t, int s, const RoundTables& tab, std::span<const int> types,
           std::span<char> consumed, std::span<char> free, RngStream& rng,
           Telemetry& tel, Scratch& scratch, int& group) const {
    const int U = inst_.num_resources();
    group = offered_group(t, s, types, scratch);
    if (group < 0) return -1;
    const std::vector<int>* labels = nullptr;
    if (kind_ == AdaptiveKind::kShare) {
      labels = &lattice(t).labels(s);
      for (int l : *labels) {
        if (consumed[l]) return -1;
      }
    }
    const auto entries = plan_.by_group(group, t);
    scratch.safe.clear();
    scratch.probs.clear();
    const double* beta = tab.beta.data() + static_cast<size_t>(s) * U;
    if (kind_ == AdaptiveKind::kBatch) {
      const double q = q_[static_cast<size_t>(t) * inst_.num_types() + types[s]];
      for (const LpPlan::Entry& e : entries) {
        if (!free[e.index]) continue;
        scratch.safe.push_back(e.index);
        scratch.probs.push_back(rule_value(e.x * gamma_, q * beta[e.index]));
      }
    } else {
      const size_t k = static_cast<size_t>(t) * inst_.num_groups() + group;
      const bool fresh = lattice(t).fresh(s);
      const GroupCell* cell = fresh ? nullptr : tab.find(s, group);
      for (size_t j = 0; j < entries.size(); ++j) {
        const LpPlan::Entry& e = entries[j];
        if (!free[e.index]) continue;
        double denom;
        if (rule_ == AdaptiveRule::kMarginal) {
          const double p = cell != nullptr && cell->p > 0.0 ? cell->p : prod_[k];
          denom = h_[k] * p * beta[e.index];
        } else {
          double c = beta[e.index];
          if (cell != nullptr && cell->shown > 0) c = tab.cond[cell->cond_offset + j];
          denom = hprod_[k] * c;
        }
        scratch.safe.push_back(e.index);
        scratch.probs.push_back(rule_value(e.x * gamma_, denom));
      }
    }
    if (scratch.safe.empty()) return -1;
    bool clamped = false;
    const int u = sample_safe_set(scratch.safe, scratch.probs, rng, clamped);
    ++tel.samples;
    if (clamped) ++tel.clamps;
    if (u < 0) return -1;
    free[u] = 0;
    if (labels != nullptr) {
      for (int l : *labels) consumed[l] = 1;
    } else {
      consumed[s] = 1;
    }
    return u;
  }

 private:
  // A zero denominator means the estimator never saw this state; the value
  // 2 forces a clamp so the event is counted.
  static double rule_value(double num, double denom) {
    return denom > 0.0 ? num / denom : 2.0;
  }

  const Instance& inst_;
  const LpPlan& plan_;
  AdaptiveKind kind_;
  AdaptiveRule rule_;
  double gamma_;
  LatticeCache lattices_;
  std::vector<double> q_;
  std::vector<double> h_, prod_, hprod_;
};

namespace {

double resolve_gamma(const Instance& inst, const AdaptiveConfig& config) {
  if (config.gamma == 0.0) return gamma_fixed_point(inst.kappa());
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) {
    throw InvalidArgument("gamma must lie in (0, 1]");
  }
  return config.gamma;
}

}  // namespace

std::shared_ptr<const AdaptiveTables> estimate_adaptive_tables(
    const Instance& inst, std::shared_ptr<const LpPlan> plan,
    const AdaptiveConfig& config) {
  if (config.samples < 1) throw InvalidArgument("samples must be positive");
  auto tables = std::make_shared<AdaptiveTables>();
  tables->config = config;
  tables->gamma = resolve_gamma(inst, config);
  tables->num_resources = inst.num_resources();
  AdaptiveEngine engine(inst, *plan, config, tables->gamma);
  const bool share = config.kind == AdaptiveKind::kShare;

  const int N = config.samples;
  const int U = inst.num_resources();
  const int G = inst.num_groups();
  int max_b = 0;
  for (int t = 0; t < inst.rounds(); ++t) {
    max_b = std::max(max_b, inst.batch_size(t));
  }
  std::vector<RngStream> arrivals, choices, occupancy;
  arrivals.reserve(N);
  choices.reserve(N);
  occupancy.reserve(N);
  for (int i = 0; i < N; ++i) {
    arrivals.emplace_back(config.seed, i, StreamPurpose::kEstimatorArrivals);
    choices.emplace_back(config.seed, i, StreamPurpose::kEstimatorPolicy);
    occupancy.emplace_back(config.seed, i, StreamPurpose::kEstimatorOccupancy);
  }
  std::vector<int> busy_until(static_cast<size_t>(N) * U, 0);
  std::vector<int> types(static_cast<size_t>(N) * max_b);
  std::vector<char> consumed(types.size());
  std::vector<char> free(busy_until.size());
  std::vector<int64_t> idle_count(U);
  AdaptiveEngine::Scratch scratch;

  tables->rounds.resize(inst.rounds());
  for (int t = 0; t < inst.rounds(); ++t) {
    const int b = inst.batch_size(t);
    const int S = engine.steps(t);
    RoundTables& tab = tables->rounds[t];
    tab.steps = S;
    tab.beta.assign(static_cast<size_t>(S) * U, 0.0);
    tab.cell_start.assign(1, 0);
    if (share) {
      std::vector<int> tracked;
      for (int g = 0; g < G; ++g) {
        if (config.track_all_groups || !plan->by_group(g, t).empty()) {
          tracked.push_back(g);
        }
      }
      const StepLattice& lattice = engine.lattice(t);
      int offset = 0;
      for (int s = 0; s < S; ++s) {
        for (int g : tracked) {
          if (!step_compatible(inst.catalog()[g], lattice.labels(s))) continue;
          GroupCell cell;
          cell.group = g;
          cell.cond_offset = offset;
          offset += static_cast<int>(plan->by_group(g, t).size());
          tab.cells.push_back(cell);
        }
        tab.cell_start.push_back(static_cast<int>(tab.cells.size()));
      }
      tab.cond_count.assign(offset, 0);
      tab.cond.assign(offset, 0.0);
    } else {
      tab.cell_start.assign(S + 1, 0);
    }

    for (int i = 0; i < N; ++i) {
      const std::vector<int> batch = sample_batch(inst.probs(t), b, arrivals[i]);
      std::copy(batch.begin(), batch.end(), types.begin() + size_t(i) * max_b);
      std::fill_n(consumed.begin() + size_t(i) * max_b, b, 0);
      for (int u = 0; u < U; ++u) {
        free[size_t(i) * U + u] = t >= busy_until[size_t(i) * U + u];
      }
    }

    for (int s = 0; s < S; ++s) {
      // Tally.
      std::fill(idle_count.begin(), idle_count.end(), 0);
      for (int i = 0; i < N; ++i) {
        const char* f = free.data() + size_t(i) * U;
        for (int u = 0; u < U; ++u) idle_count[u] += f[u];
        if (!share) continue;
        const std::span<const int> ty(types.data() + size_t(i) * max_b, b);
        const int g = engine.offered_group(t, s, ty, scratch);
        if (g < 0) continue;
        auto* cell = const_cast<GroupCell*>(tab.find(s, g));
        if (cell == nullptr) continue;
        ++cell->shown;
        bool open = true;
        for (int l : engine.lattice(t).labels(s)) {
          if (consumed[size_t(i) * max_b + l]) open = false;
        }
        if (!open) continue;
        ++cell->available;
        const auto entries = plan->by_group(g, t);
        for (size_t j = 0; j < entries.size(); ++j) {
          if (f[entries[j].index]) ++tab.cond_count[cell->cond_offset + j];
        }
      }
      for (int u = 0; u < U; ++u) {
        tab.beta[size_t(s) * U + u] = static_cast<double>(idle_count[u]) / N;
      }
      for (int c = tab.cell_start[s]; c < tab.cell_start[s + 1]; ++c) {
        GroupCell& cell = tab.cells[c];
        cell.p = static_cast<double>(cell.available) / N;
        const size_t n = plan->by_group(cell.group, t).size();
        for (size_t j = 0; j < n; ++j) {
          const size_t k = cell.cond_offset + j;
          tab.cond[k] = cell.shown > 0 ? static_cast<double>(tab.cond_count[k]) /
                                             static_cast<double>(cell.shown)
                                       : 0.0;
        }
      }
      // Decide.
      for (int i = 0; i < N; ++i) {
        int g = -1;
        const int u = engine.step(
            t, s, tab, std::span<const int>(types.data() + size_t(i) * max_b, b),
            std::span<char>(consumed.data() + size_t(i) * max_b, b),
            std::span<char>(free.data() + size_t(i) * U, U), choices[i],
            tables->estimator, scratch, g);
        if (u < 0) continue;
        busy_until[size_t(i) * U + u] =
            t + inst.occupancy(u, g, t).sample(occupancy[i]);
      }
    }
  }
  return tables;
}

AdaptivePolicy::AdaptivePolicy(const Instance& inst,
                               std::shared_ptr<const LpPlan> plan,
                               std::shared_ptr<const AdaptiveTables> tables)
    : inst_(inst),
      plan_(std::move(plan)),
      tables_(std::move(tables)),
      engine_(std::make_unique<AdaptiveEngine>(inst, *plan_, tables_->config,
                                       tables_->gamma)) {
  if (static_cast<int>(tables_->rounds.size()) != inst.rounds()) {
    throw InvalidArgument("adaptive tables do not match the instance");
  }
}

AdaptivePolicy::~AdaptivePolicy() = default;

std::string AdaptivePolicy::name() const {
  return engine_->kind() == AdaptiveKind::kBatch ? "adapbatch" : "adapshare";
}

void AdaptivePolicy::decide(const RoundView& view, RngStream& rng,
                            std::vector<Decision>& out, Telemetry& tel) const {
  const int t = view.round;
  const int U = inst_.num_resources();
  const int b = static_cast<int>(view.label_types.size());
  const RoundTables& tab = tables_->rounds[t];
  std::vector<char> consumed(b, 0);
  std::vector<char> free(U);
  for (int u = 0; u < U; ++u) free[u] = view.idle(u);
  AdaptiveEngine::Scratch scratch;
  for (int s = 0; s < tab.steps; ++s) {
    int g = -1;
    const int u = engine_->step(t, s, tab, view.label_types, consumed, free,
                                rng, tel, scratch, g);
    if (u < 0) continue;
    Decision d{u, g, {}, s};
    if (engine_->kind() == AdaptiveKind::kBatch) {
      d.labels.push_back(s);
    } else {
      d.labels = engine_->lattice(t).labels(s);
    }
    out.push_back(std::move(d));
  }
}

}  // namespace opera
