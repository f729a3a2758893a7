#include "opera/lp.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <json.hpp>
#include <limits>
#include <ostream>

#include "opera/errors.hpp"

namespace opera {
namespace {

LpModel build_model(const Instance& inst, LpKind kind,
                    const LpBuildOptions& options) {
  require_valid(inst);
  const int U = inst.num_resources();
  const int V = inst.num_types();
  const int G = inst.num_groups();
  const int T = inst.rounds();
  const auto& cat = inst.catalog();
  if (kind != LpKind::kShare && inst.kappa() != 1) {
    throw InvalidArgument(std::string(lp_kind_name(kind)) +
                          " requires kappa = 1");
  }
  if (kind == LpKind::kSequential) {
    for (int t = 0; t < T; ++t) {
      if (inst.batch_size(t) != 1) {
        throw InvalidArgument("LPSequential requires unit batches");
      }
    }
  }
  if (cat.num_types() != V || cat.kappa() != inst.kappa()) {
    throw InvalidArgument("group catalog is inconsistent with the instance");
  }
  const uint64_t cols = static_cast<uint64_t>(U) * G * T;
  if (cols > static_cast<uint64_t>(std::numeric_limits<int32_t>::max())) {
    throw SizeLimitExceeded("LP has too many columns");
  }

  LpModel m;
  m.kind = kind;
  m.num_resources = U;
  m.num_types = V;
  m.num_groups = G;
  m.rounds = T;
  const BatchRule rule = inst.batch_rule();
  const int base = T * (V + U);
  m.group_row_of.assign(static_cast<size_t>(T) * G, -1);
  std::vector<double> group_rhs;
  for (int t = 0; t < T; ++t) {
    auto p = inst.probs(t);
    const int b = inst.batch_size(t);
    for (int g = 0; g < G; ++g) {
      if (cat[g].size() < 2) continue;
      const double q = expected_group_count(cat[g], p, b, rule);
      if (options.drop_implied_rows) {
        double implied = U;
        for (auto [v, n] : cat[g].multiplicities()) {
          implied = std::min(implied, expected_vertex_count(v, p, b) / n);
        }
        if (q >= implied) continue;
      }
      m.group_row_of[static_cast<size_t>(t) * G + g] =
          base + static_cast<int>(m.group_rows.size());
      m.group_rows.emplace_back(g, t);
      group_rhs.push_back(q);
    }
  }
  const int rows = base + static_cast<int>(m.group_rows.size());
  m.matrix.rows = rows;
  m.matrix.cols = static_cast<int>(cols);
  m.rhs.assign(rows, 0.0);
  for (int t = 0; t < T; ++t) {
    auto p = inst.probs(t);
    for (int v = 0; v < V; ++v) {
      m.rhs[m.supply_row(v, t)] = expected_vertex_count(v, p, inst.batch_size(t));
    }
    for (int u = 0; u < U; ++u) m.rhs[m.reuse_row(u, t)] = 1.0;
  }
  std::copy(group_rhs.begin(), group_rhs.end(), m.rhs.begin() + base);

  std::vector<std::vector<std::pair<int, int>>> mult(G);
  for (int g = 0; g < G; ++g) mult[g] = cat[g].multiplicities();

  auto& a = m.matrix;
  a.start.assign(1, 0);
  a.start.reserve(cols + 1);
  m.objective.reserve(cols);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u < U; ++u) {
      for (int g = 0; g < G; ++g) {
        m.objective.push_back(inst.weight(u, g, t));
        for (auto [v, n] : mult[g]) {
          a.index.push_back(m.supply_row(v, t));
          a.value.push_back(n);
        }
        const auto& occ = inst.occupancy(u, g, t);
        a.index.push_back(m.reuse_row(u, t));
        a.value.push_back(1.0);
        const int last = std::min(T - 1, t + occ.max_value() - 1);
        for (int t2 = t + 1; t2 <= last; ++t2) {
          double s = occ.survival(t2 - t);
          if (s > 0.0) {
            a.index.push_back(m.reuse_row(u, t2));
            a.value.push_back(s);
          }
        }
        if (const int gr = m.group_row(g, t); gr >= 0) {
          a.index.push_back(gr);
          a.value.push_back(1.0);
        }
        a.start.push_back(static_cast<int64_t>(a.index.size()));
      }
    }
  }
  return m;
}

}  // namespace

const char* lp_kind_name(LpKind kind) {
  switch (kind) {
    case LpKind::kSequential:
      return "LPSequential";
    case LpKind::kBatch:
      return "LPBatch";
    case LpKind::kShare:
      return "LPShare";
  }
  return "?";
}

std::string LpModel::row_name(int row) const {
  const int supply = rounds * num_types;
  const int reuse = rounds * num_resources;
  if (row < supply) {
    return "supply_v" + std::to_string(row % num_types) + "_t" +
           std::to_string(row / num_types);
  }
  row -= supply;
  if (row < reuse) {
    return "reuse_u" + std::to_string(row / rounds) + "_t" +
           std::to_string(row % rounds);
  }
  row -= reuse;
  return "group_g" + std::to_string(group_rows[row].first) + "_t" +
         std::to_string(group_rows[row].second);
}

std::string LpModel::col_name(int col) const {
  const int g = col % num_groups;
  const int u = (col / num_groups) % num_resources;
  const int t = col / (num_groups * num_resources);
  return "x_u" + std::to_string(u) + "_g" + std::to_string(g) + "_t" +
         std::to_string(t);
}

LpModel build_lp_sequential(const Instance& inst) {
  return build_model(inst, LpKind::kSequential, {});
}

LpModel build_lp_batch(const Instance& inst) {
  return build_model(inst, LpKind::kBatch, {});
}

LpModel build_lp_share(const Instance& inst, const LpBuildOptions& options) {
  return build_model(inst, LpKind::kShare, options);
}

LpModel build_lp_auto(const Instance& inst) {
  return inst.kappa() == 1 ? build_lp_batch(inst) : build_lp_share(inst);
}

double LpSolution::group_total(int g, int t) const {
  double s = 0.0;
  for (int u = 0; u < num_resources; ++u) s += value(u, g, t);
  return s;
}

FeasibilityReport check_feasibility(const LpModel& model,
                                    const std::vector<double>& x) {
  FeasibilityReport rep;
  const auto& a = model.matrix;
  if (static_cast<int>(x.size()) != a.cols) {
    throw InvalidArgument("solution length does not match the model");
  }
  std::vector<double> lhs(a.rows, 0.0);
  for (int j = 0; j < a.cols; ++j) {
    const double xj = x[j];
    rep.min_x = std::min(rep.min_x, xj);
    rep.max_x = std::max(rep.max_x, xj);
    if (xj == 0.0) continue;
    for (int64_t e = a.start[j]; e < a.start[j + 1]; ++e) {
      lhs[a.index[e]] += a.value[e] * xj;
    }
  }
  for (int i = 0; i < a.rows; ++i) {
    const double v = lhs[i] - model.rhs[i];
    if (v > rep.max_violation) {
      rep.max_violation = v;
      rep.worst_row = i;
    }
  }
  return rep;
}

LpSolution solve_lp(const LpModel& model, const SimplexOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  SimplexResult r =
      simplex_maximize(model.matrix, model.objective, model.rhs, options);
  LpSolution sol;
  sol.kind = model.kind;
  sol.num_resources = model.num_resources;
  sol.num_groups = model.num_groups;
  sol.rounds = model.rounds;
  sol.x = std::move(r.x);
  sol.duals = std::move(r.duals);
  sol.objective = r.objective;
  sol.iterations = r.iterations;
  sol.basis = std::move(r.basis);
  auto rep = check_feasibility(model, sol.x);
  if (!rep.ok(kFeasibilityTolerance)) {
    throw InconsistentState(
        "LP solution violates " +
        (rep.worst_row >= 0 ? model.row_name(rep.worst_row)
                            : std::string("variable bounds")) +
        " by " + std::to_string(rep.max_violation));
  }
  sol.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return sol;
}

void write_mps(const LpModel& model, std::ostream& out) {
  out << "NAME          " << lp_kind_name(model.kind) << "\n";
  out << "OBJSENSE\n    MAX\n";
  out << "ROWS\n N  obj\n";
  for (int i = 0; i < model.num_rows(); ++i) {
    out << " L  " << model.row_name(i) << "\n";
  }
  out << "COLUMNS\n";
  out.precision(17);
  const auto& a = model.matrix;
  for (int j = 0; j < a.cols; ++j) {
    const std::string name = model.col_name(j);
    if (model.objective[j] != 0.0) {
      out << "    " << name << "  obj  " << model.objective[j] << "\n";
    }
    for (int64_t e = a.start[j]; e < a.start[j + 1]; ++e) {
      out << "    " << name << "  " << model.row_name(a.index[e]) << "  "
          << a.value[e] << "\n";
    }
  }
  out << "RHS\n";
  for (int i = 0; i < model.num_rows(); ++i) {
    if (model.rhs[i] != 0.0) {
      out << "    rhs  " << model.row_name(i) << "  " << model.rhs[i] << "\n";
    }
  }
  out << "ENDATA\n";
}

void write_solution_json(const LpModel& model, const LpSolution& sol,
                         std::ostream& out) {
  nlohmann::json j;
  j["model"] = lp_kind_name(sol.kind);
  j["status"] = "optimal";
  j["objective"] = sol.objective;
  j["iterations"] = sol.iterations;
  j["num_resources"] = sol.num_resources;
  j["num_groups"] = sol.num_groups;
  j["rounds"] = sol.rounds;
  j["rows"] = model.num_rows();
  j["columns"] = model.num_cols();
  auto& xs = j["x"] = nlohmann::json::array();
  for (int t = 0; t < sol.rounds; ++t) {
    for (int u = 0; u < sol.num_resources; ++u) {
      for (int g = 0; g < sol.num_groups; ++g) {
        double v = sol.value(u, g, t);
        if (v != 0.0) xs.push_back({u, g, t, v});
      }
    }
  }
  out << j.dump(1) << "\n";
}

LpSolution read_solution_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
    LpSolution sol;
    const std::string model = j.at("model").get<std::string>();
    if (model == "LPSequential") {
      sol.kind = LpKind::kSequential;
    } else if (model == "LPBatch") {
      sol.kind = LpKind::kBatch;
    } else {
      sol.kind = LpKind::kShare;
    }
    sol.objective = j.at("objective").get<double>();
    sol.iterations = j.at("iterations").get<int64_t>();
    sol.num_resources = j.at("num_resources").get<int>();
    sol.num_groups = j.at("num_groups").get<int>();
    sol.rounds = j.at("rounds").get<int>();
    sol.x.assign(static_cast<size_t>(sol.num_resources) * sol.num_groups *
                     sol.rounds,
                 0.0);
    for (const auto& e : j.at("x")) {
      int u = e.at(0), g = e.at(1), t = e.at(2);
      if (u < 0 || u >= sol.num_resources || g < 0 || g >= sol.num_groups ||
          t < 0 || t >= sol.rounds) {
        throw IoError("solution entry out of range");
      }
      sol.x[(static_cast<size_t>(t) * sol.num_resources + u) *
                sol.num_groups +
            g] = e.at(3).get<double>();
    }
    return sol;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed LP solution: ") + e.what());
  }
}

}  // namespace opera
