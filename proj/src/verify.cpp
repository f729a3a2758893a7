#include "opera/verify.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>

#include "opera/errors.hpp"
#include "opera/lp.hpp"
#include "opera/offline.hpp"
#include "opera/policies.hpp"
#include "opera/stats.hpp"
#include "opera/synthetic.hpp"

namespace opera {

bool SuiteResult::pass() const {
  for (const CheckResult& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

namespace {

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

std::vector<double> random_simplex(RngStream& rng, int n) {
  std::vector<double> p(n);
  double sum = 0.0;
  for (double& x : p) {
    x = rng.exponential();
    sum += x;
  }
  for (double& x : p) x /= sum;
  return p;
}

Instance bare_instance(int resources, int types, int kappa,
                       std::vector<int> batch_sizes,
                       std::vector<std::vector<double>> probs) {
  std::vector<VertexType> vt(types);
  for (int v = 0; v < types; ++v) vt[v] = {v, "v" + std::to_string(v)};
  std::vector<Resource> res(resources);
  for (int u = 0; u < resources; ++u) res[u] = {u, kappa};
  ArrivalModel arrivals{std::move(batch_sizes), std::move(probs)};
  return Instance(kappa, std::move(vt), std::move(res), std::move(arrivals),
                  GroupCatalog::full(types, kappa));
}

// Suites ------------------------------------------------------------------

void suite_gamma(SuiteResult& out) {
  const double g2 = gamma_fixed_point(2);
  out.checks.push_back({"gamma(2) = 0.31767 +- 1e-5", std::fabs(g2 - 0.31767) <= 1e-5,
                        fmt("gamma(2) = %.10f", g2)});
  const double g1 = gamma_fixed_point(1);
  const double closed = (3.0 - std::sqrt(5.0)) / 2.0;
  out.checks.push_back({"gamma(1) = (3 - sqrt 5) / 2 +- 1e-10",
                        std::fabs(g1 - closed) <= 1e-10,
                        fmt("gamma(1) = %.15f, closed form %.15f", g1, closed)});
  bool monotone = true;
  double worst_residual = 0.0;
  double prev = 1.0;
  for (int k = 1; k <= 10; ++k) {
    const double g = gamma_fixed_point(k);
    if (!(g < prev)) monotone = false;
    prev = g;
    worst_residual =
        std::max(worst_residual, std::fabs(g - std::pow(1.0 - g, k + 1)));
  }
  out.checks.push_back({"gamma decreasing in kappa = 1..10", monotone, ""});
  out.checks.push_back({"fixed-point residual <= 1e-10", worst_residual <= 1e-10,
                        fmt("max residual %.3g", worst_residual)});
}

void suite_combinatorics(SuiteResult& out, const VerifyOptions& opt) {
  bool counts_ok = true;
  std::string detail;
  for (int n = 1; n <= 12; ++n) {
    for (int k = 1; k <= 4; ++k) {
      const uint64_t c = count_group_types(n, k);
      const size_t e = enumerate_group_types(n, k).size();
      if (c != e) {
        counts_ok = false;
        detail = fmt("n=%d kappa=%d: %llu vs %zu", n, k,
                     static_cast<unsigned long long>(c), e);
      }
    }
  }
  out.checks.push_back({"group counts match enumeration (n <= 12, kappa <= 4)",
                        counts_ok, detail});

  bool h_ok = true;
  for (int b = 3; b <= 6; ++b) {
    const double one = h_factor(GroupType{{0}}, b);
    const double two = h_factor(GroupType{{0, 1}}, b);
    const double same = h_factor(GroupType{{0, 0}}, b);
    if (one != b || two != b * (b - 1) || same != b * (b - 1) / 2) h_ok = false;
  }
  out.checks.push_back({"h factor gives b, b(b-1), b(b-1)/2 for b = 3..6", h_ok, ""});

  RngStream rng(opt.seed, 0, StreamPurpose::kVerification);
  int passed = 0;
  const int cases = 20;
  std::string worst;
  double worst_z = 0.0;
  for (int c = 0; c < cases; ++c) {
    const int V = 2 + static_cast<int>(rng.below(3));
    const int size = 1 + static_cast<int>(rng.below(3));
    GroupType g;
    for (int i = 0; i < size; ++i) g.members.push_back(static_cast<int>(rng.below(V)));
    std::sort(g.members.begin(), g.members.end());
    const int b = size + 1 + static_cast<int>(rng.below(4));
    const std::vector<double> p = random_simplex(rng, V);
    const double expected = expected_group_count(g, p, b);
    const auto mult = g.multiplicities();
    double sum = 0.0, sum2 = 0.0;
    std::vector<int> m(V);
    for (int64_t s = 0; s < opt.mc_batches; ++s) {
      std::fill(m.begin(), m.end(), 0);
      for (int i = 0; i < b; ++i) ++m[rng.categorical(p)];
      double formable = 1.0;
      for (auto [v, n] : mult) {
        // C(m_v, n)
        double comb = 1.0;
        for (int i = 0; i < n; ++i) comb = comb * (m[v] - i) / (i + 1);
        formable *= comb;
      }
      sum += formable;
      sum2 += formable * formable;
    }
    const double n = static_cast<double>(opt.mc_batches);
    const double mean = sum / n;
    const double se = std::sqrt(std::max(0.0, sum2 / n - mean * mean) / (n - 1));
    const double z = se > 0.0 ? std::fabs(mean - expected) / se
                              : (mean == expected ? 0.0 : INFINITY);
    if (z <= 3.0) ++passed;
    if (z >= worst_z) {
      worst_z = z;
      worst = fmt("worst: g=%s b=%d expected %.6f mc %.6f (z=%.2f)",
                  g.to_string().c_str(), b, expected, mean, z);
    }
  }
  out.checks.push_back({fmt("expected group count within 3 se of Monte Carlo "
                            "(%d cases)", cases),
                        passed == cases, worst});
}

void suite_upper_bound(SuiteResult& out, const VerifyOptions& opt) {
  RngStream rng(opt.seed, 1, StreamPurpose::kVerification);
  TinyLimits limits;
  int ok = 0;
  double worst_gap = INFINITY;
  std::string failures;
  for (int i = 0; i < opt.upper_bound_instances; ++i) {
    const Instance inst = random_tiny_instance(rng, limits);
    const double lp = solve_lp(build_lp_share(inst)).objective;
    const double opt_value = expected_offline_optimal(inst);
    worst_gap = std::min(worst_gap, lp - opt_value);
    if (lp >= opt_value - 1e-6) {
      ++ok;
    } else if (failures.size() < 200) {
      failures += fmt("#%d lp %.9f < opt %.9f; ", i, lp, opt_value);
    }
  }
  out.checks.push_back(
      {fmt("LP bound >= expected offline optimum - 1e-6 on %d tiny instances",
           opt.upper_bound_instances),
       ok == opt.upper_bound_instances,
       failures.empty() ? fmt("smallest gap %.3g", worst_gap) : failures});
}

void check_match_rates(SuiteResult& out, const char* label, const Instance& inst,
                       AdaptiveKind kind, const VerifyOptions& opt) {
  const MatchRateResult r =
      measure_match_rates(inst, kind, opt.beta_samples, opt.episodes, opt.seed);
  int within = 0;
  double worst_z = 0.0;
  for (const MatchRateCell& c : r.cells) {
    const double z = std::fabs(c.frequency - c.target) / c.se;
    if (z <= 3.0) ++within;
    worst_z = std::max(worst_z, z);
  }
  out.checks.push_back(
      {fmt("%s: match frequency = gamma x* within 3 se", label),
       within == static_cast<int>(r.cells.size()) && r.stray == 0,
       fmt("%d/%zu cells, max |z| %.2f, stray matches %lld", within,
           r.cells.size(), worst_z, static_cast<long long>(r.stray))});
  const double rate = r.telemetry.samples > 0
                          ? static_cast<double>(r.telemetry.clamps) /
                                static_cast<double>(r.telemetry.samples)
                          : 0.0;
  out.checks.push_back({fmt("%s: clamp rate < 0.1%%", label), rate < 1e-3,
                        fmt("%lld of %lld choices",
                            static_cast<long long>(r.telemetry.clamps),
                            static_cast<long long>(r.telemetry.samples))});
}

void suite_match_rate(SuiteResult& out, const VerifyOptions& opt) {
  check_match_rates(out, "batch policy (kappa 1)", match_rate_instance(1),
                    AdaptiveKind::kBatch, opt);
  check_match_rates(out, "share policy (kappa 2)", match_rate_instance(2),
                    AdaptiveKind::kShare, opt);
}

void check_bounds(SuiteResult& out, const char* label, const Instance& inst,
                  AdaptiveKind kind, const VerifyOptions& opt) {
  const LpSolution sol = solve_lp(build_lp_auto(inst));
  auto plan = std::make_shared<LpPlan>(inst, sol);
  AdaptiveConfig config;
  config.kind = kind;
  config.samples = opt.beta_samples;
  config.seed = opt.seed;
  config.track_all_groups = true;
  const auto tables = estimate_adaptive_tables(inst, plan, config);
  const double keep = 1.0 - tables->gamma;
  const int U = inst.num_resources();
  int beta_cells = 0, beta_bad = 0, p_cells = 0, p_bad = 0;
  double beta_min = 1.0;
  for (int t = 0; t < inst.rounds(); ++t) {
    const RoundTables& tab = tables->rounds[t];
    for (int s = 0; s < tab.steps; ++s) {
      for (int u = 0; u < U; ++u) {
        const double b = tab.beta[size_t(s) * U + u];
        ++beta_cells;
        beta_min = std::min(beta_min, b);
        if (b < keep - 3.0 * tables->standard_error(b)) ++beta_bad;
      }
    }
    for (const GroupCell& c : tab.cells) {
      const double bound =
          std::pow(keep, inst.kappa()) *
          group_probability_product(inst.catalog()[c.group], inst.probs(t));
      ++p_cells;
      if (c.p < bound - 3.0 * tables->standard_error(c.p)) ++p_bad;
    }
  }
  out.checks.push_back({fmt("%s: beta >= 1 - gamma - 3 se", label), beta_bad == 0,
                        fmt("%d cells, %d below, min %.4f vs %.4f", beta_cells,
                            beta_bad, beta_min, keep)});
  if (kind == AdaptiveKind::kShare) {
    out.checks.push_back({fmt("%s: P >= (1 - gamma)^kappa prod p - 3 se", label),
                          p_bad == 0 && p_cells > 0,
                          fmt("%d cells, %d below", p_cells, p_bad)});
  }
}

void suite_bounds(SuiteResult& out, const VerifyOptions& opt) {
  check_bounds(out, "batch policy (kappa 1)", match_rate_instance(1),
               AdaptiveKind::kBatch, opt);
  check_bounds(out, "share policy (kappa 2)", match_rate_instance(2),
               AdaptiveKind::kShare, opt);
}

void suite_reduction(SuiteResult& out, const VerifyOptions& opt) {
  RngStream rng(opt.seed, 2, StreamPurpose::kVerification);
  TinyLimits limits;
  limits.max_resources = 3;
  limits.max_types = 3;
  limits.max_rounds = 4;
  limits.min_batch = 2;
  limits.max_batch = 4;
  limits.max_kappa = 1;
  limits.max_occupancy = 3;
  limits.constant_occupancy = false;
  int same = 0;
  int64_t events = 0;
  std::string first_diff;
  const int samples = std::min(opt.beta_samples, 2000);
  for (int i = 0; i < opt.reduction_instances; ++i) {
    const Instance inst = random_tiny_instance(rng, limits);
    auto plan = std::make_shared<LpPlan>(inst, solve_lp(build_lp_batch(inst)));
    AdaptiveConfig config;
    config.samples = samples;
    config.seed = opt.seed + i;
    config.kind = AdaptiveKind::kBatch;
    AdaptivePolicy batch(inst, plan, estimate_adaptive_tables(inst, plan, config));
    config.kind = AdaptiveKind::kShare;
    AdaptivePolicy share(inst, plan, estimate_adaptive_tables(inst, plan, config));
    bool equal = true;
    for (int r = 0; r < opt.reduction_runs && equal; ++r) {
      const EpisodeResult a = run_episode(inst, batch, opt.seed, r, true);
      const EpisodeResult b = run_episode(inst, share, opt.seed, r, true);
      events += static_cast<int64_t>(a.trace.events.size());
      if (!(a.trace == b.trace) || a.reward != b.reward) {
        equal = false;
        if (first_diff.empty()) first_diff = fmt("instance %d run %d differs", i, r);
      }
    }
    if (equal) ++same;
  }
  out.checks.push_back(
      {fmt("kappa-1 share policy reproduces the batch policy on %d instances",
           opt.reduction_instances),
       same == opt.reduction_instances,
       first_diff.empty()
           ? fmt("%lld matched events", static_cast<long long>(events))
           : first_diff});
}

void suite_clamp(SuiteResult& out, const VerifyOptions& opt) {
  const Instance inst = clamp_instance();
  auto plan = std::make_shared<LpPlan>(inst, solve_lp(build_lp_share(inst)));
  for (double gamma : {0.5, 0.0}) {
    AdaptiveConfig config;
    config.gamma = gamma;
    config.samples = opt.beta_samples;
    config.seed = opt.seed;
    AdaptivePolicy policy(inst, plan, estimate_adaptive_tables(inst, plan, config));
    Telemetry tel;
    for (int r = 0; r < 2000; ++r) tel += run_episode(inst, policy, opt.seed, r).telemetry;
    const std::string counts =
        fmt("%lld clamps in %lld choices", static_cast<long long>(tel.clamps),
            static_cast<long long>(tel.samples));
    if (gamma > 0.0) {
      out.checks.push_back({"gamma = 0.5 at kappa 2 reports clamping",
                            tel.clamps > 0, counts});
    } else {
      out.checks.push_back({"fixed-point gamma does not clamp", tel.clamps == 0,
                            counts});
    }
  }
}

}  // namespace

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names = {
      "gamma", "combinatorics", "upper-bound", "match-rate",
      "bounds", "reduction", "clamp"};
  return names;
}

SuiteResult run_verify_suite(const std::string& name, const VerifyOptions& opt) {
  SuiteResult out;
  out.suite = name;
  const auto start = std::chrono::steady_clock::now();
  if (name == "gamma") {
    suite_gamma(out);
  } else if (name == "combinatorics") {
    suite_combinatorics(out, opt);
  } else if (name == "upper-bound") {
    suite_upper_bound(out, opt);
  } else if (name == "match-rate") {
    suite_match_rate(out, opt);
  } else if (name == "bounds") {
    suite_bounds(out, opt);
  } else if (name == "reduction") {
    suite_reduction(out, opt);
  } else if (name == "clamp") {
    suite_clamp(out, opt);
  } else {
    throw InvalidArgument("unknown verification suite '" + name + "'");
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
  return out;
}

Instance match_rate_instance(int kappa) {
  SyntheticParams p;
  p.resources = 2;
  p.types = 2;
  p.rounds = 4;
  p.kappa = kappa;
  p.batch_size = 3;
  p.max_occupancy = 3;
  return generate_synthetic(p, 11);
}

Instance clamp_instance() {
  Instance inst = bare_instance(2, 2, 2, {3, 3}, {{0.5, 0.5}, {0.5, 0.5}});
  const int mixed = inst.catalog().index_of(std::vector<int>{0, 1});
  for (int u = 0; u < 2; ++u) {
    inst.set_occupancy(u, mixed, OccupancyDistribution::constant(1));
    inst.set_weight(u, mixed, 1.0);
  }
  return inst;
}

Instance random_tiny_instance(RngStream& rng, const TinyLimits& limits) {
  auto pick = [&](int lo, int hi) {
    return lo + static_cast<int>(rng.below(static_cast<uint64_t>(hi - lo + 1)));
  };
  const int U = pick(1, limits.max_resources);
  const int V = pick(1, limits.max_types);
  const int T = pick(1, limits.max_rounds);
  const int kappa = pick(1, limits.max_kappa);
  std::vector<int> b(T);
  std::vector<std::vector<double>> probs(T);
  bool relax = false;
  for (int t = 0; t < T; ++t) {
    b[t] = pick(limits.min_batch, limits.max_batch);
    relax |= b[t] <= kappa;
    probs[t] = random_simplex(rng, V);
  }
  Instance inst = bare_instance(U, V, kappa, std::move(b), std::move(probs));
  inst.set_relax_batch_size(relax);
  for (int u = 0; u < U; ++u) {
    for (int g = 0; g < inst.num_groups(); ++g) {
      for (int t = 0; t < T; ++t) {
        inst.set_weight(u, g, t, std::round(rng.uniform() * 1000.0) / 100.0);
        if (limits.constant_occupancy) {
          inst.set_occupancy(u, g, t, OccupancyDistribution::constant(
                                          pick(1, limits.max_occupancy)));
        } else {
          const int a = pick(1, limits.max_occupancy);
          const int c = pick(1, limits.max_occupancy);
          const double w = rng.uniform();
          inst.set_occupancy(u, g, t,
                             OccupancyDistribution::categorical({a, c}, {w, 1.0 - w}));
        }
      }
    }
  }
  return inst;
}

MatchRateResult measure_match_rates(const Instance& inst, AdaptiveKind kind,
                                    int samples, int episodes, uint64_t seed) {
  const LpSolution sol = solve_lp(build_lp_auto(inst));
  auto plan = std::make_shared<LpPlan>(inst, sol);
  AdaptiveConfig config;
  config.kind = kind;
  config.samples = samples;
  config.seed = seed;
  const auto tables = estimate_adaptive_tables(inst, plan, config);
  AdaptivePolicy policy(inst, plan, tables);
  const int U = inst.num_resources();
  const int G = inst.num_groups();
  const int T = inst.rounds();
  std::vector<int64_t> counts(static_cast<size_t>(T) * U * G, 0);
  MatchRateResult result;
  result.gamma = tables->gamma;
  for (int e = 0; e < episodes; ++e) {
    const EpisodeResult r = run_episode(inst, policy, seed, e, true);
    result.telemetry += r.telemetry;
    for (const TraceEvent& ev : r.trace.events) {
      ++counts[(size_t(ev.round) * U + ev.resource) * G + ev.group];
    }
  }
  const double n = episodes;
  for (int t = 0; t < T; ++t) {
    const RoundTables& tab = tables->rounds[t];
    for (int u = 0; u < U; ++u) {
      for (int g = 0; g < G; ++g) {
        const int64_t count = counts[(size_t(t) * U + u) * G + g];
        const double x = sol.value(u, g, t);
        if (x <= 0.0) {
          result.stray += count;
          continue;
        }
        MatchRateCell cell;
        cell.round = t;
        cell.resource = u;
        cell.group = g;
        cell.x = x;
        cell.target = result.gamma * x;
        cell.frequency = static_cast<double>(count) / n;
        // Relative error of each step's divisor, summed in quadrature over
        // the steps that can offer g.
        const GroupType& group = inst.catalog()[g];
        const double h = h_factor(group, inst.batch_size(t), inst.batch_rule());
        double rel2 = 0.0;
        LatticeCache lattices(inst.kappa());
        const StepLattice* lattice =
            kind == AdaptiveKind::kShare ? &lattices.get(inst.batch_size(t)) : nullptr;
        for (int s = 0; s < tab.steps; ++s) {
          double c, se;
          const double beta = tab.beta[size_t(s) * U + u];
          if (lattice != nullptr) {
            if (!step_compatible(group, lattice->labels(s))) continue;
            const GroupCell* gc = lattice->fresh(s) ? nullptr : tab.find(s, g);
            const auto entries = plan->by_group(g, t);
            int j = -1;
            for (size_t k = 0; k < entries.size(); ++k) {
              if (entries[k].index == u) j = static_cast<int>(k);
            }
            if (gc != nullptr && gc->shown > 0 && j >= 0) {
              c = tab.cond[gc->cond_offset + j];
              se = bernoulli_se(c, static_cast<size_t>(gc->shown));
            } else {
              c = beta;
              se = tables->standard_error(beta);
            }
          } else {
            c = beta;
            se = tables->standard_error(beta);
          }
          if (c > 0.0) rel2 += (se / c) * (se / c);
        }
        const double est_se = cell.target / h * std::sqrt(rel2);
        const double mc_var = cell.target * (1.0 - cell.target) / n;
        cell.se = std::sqrt(mc_var + est_se * est_se);
        result.cells.push_back(cell);
      }
    }
  }
  return result;
}

}  // namespace opera
