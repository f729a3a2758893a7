#include "opera/instance_io.hpp"

#include <fstream>
#include <sstream>

#include "opera/errors.hpp"

namespace opera {
namespace {

using nlohmann::json;

json occupancy_value(const OccupancyDistribution& d) {
  if (d.is_constant()) return d.constant_value();
  return json{{"support", d.support()}, {"probs", d.probs()}};
}

OccupancyDistribution parse_occupancy(const json& j) {
  if (j.is_number_integer()) {
    return OccupancyDistribution::constant(j.get<int>());
  }
  if (j.is_object()) {
    return OccupancyDistribution::categorical(
        j.at("support").get<std::vector<int>>(),
        j.at("probs").get<std::vector<double>>());
  }
  throw IoError("occupancy value must be an integer or a distribution");
}

bool weights_constant(const Instance& inst, int u, int g) {
  const double w0 = inst.weight(u, g, 0);
  for (int t = 1; t < inst.rounds(); ++t) {
    if (inst.weight(u, g, t) != w0) return false;
  }
  return true;
}

bool occupancy_constant(const Instance& inst, int u, int g) {
  const auto& d0 = inst.occupancy(u, g, 0);
  for (int t = 1; t < inst.rounds(); ++t) {
    if (!(inst.occupancy(u, g, t) == d0)) return false;
  }
  return true;
}

void check_index(int value, int bound, const char* what) {
  if (value < 0 || value >= bound) {
    throw IoError(std::string(what) + " index " + std::to_string(value) +
                  " out of range");
  }
}

}  // namespace

json instance_to_json(const Instance& inst) {
  json j;
  j["kappa"] = inst.kappa();
  j["T"] = inst.rounds();
  j["batch_sizes"] = inst.arrivals().batch_sizes;
  j["probs"] = inst.arrivals().probs;
  j["relax_batch_size"] = inst.relax_batch_size();
  auto& types = j["vertex_types"] = json::array();
  for (const auto& v : inst.vertex_types()) {
    types.push_back({{"id", v.id}, {"label", v.label}});
  }
  auto& res = j["resources"] = json::array();
  for (const auto& r : inst.resources()) {
    res.push_back({{"id", r.id}, {"capacity", r.capacity}});
  }
  auto& weights = j["weights"] = json::array();
  auto& occ = j["occupancy"] = json::array();
  for (int u = 0; u < inst.num_resources(); ++u) {
    json row = json::array();
    for (int g = 0; g < inst.num_groups(); ++g) {
      if (weights_constant(inst, u, g)) {
        if (double w = inst.weight(u, g, 0); w != 0.0) {
          weights.push_back({u, g, w});
        }
      } else {
        for (int t = 0; t < inst.rounds(); ++t) {
          if (double w = inst.weight(u, g, t); w != 0.0) {
            weights.push_back({u, g, t, w});
          }
        }
      }
      if (occupancy_constant(inst, u, g)) {
        row.push_back(occupancy_value(inst.occupancy(u, g, 0)));
      } else {
        json per_round = json::array();
        for (int t = 0; t < inst.rounds(); ++t) {
          per_round.push_back(occupancy_value(inst.occupancy(u, g, t)));
        }
        row.push_back(std::move(per_round));
      }
    }
    occ.push_back(std::move(row));
  }
  if (!inst.catalog().is_full()) {
    auto& groups = j["groups"] = json::array();
    for (const auto& g : inst.catalog().groups()) groups.push_back(g.members);
  }
  j["metadata"] = inst.metadata();
  return j;
}

Instance instance_from_json(const json& j) {
  try {
    const int kappa = j.at("kappa").get<int>();
    const int T = j.at("T").get<int>();
    ArrivalModel arrivals;
    arrivals.batch_sizes = j.at("batch_sizes").get<std::vector<int>>();
    arrivals.probs = j.at("probs").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(arrivals.batch_sizes.size()) != T ||
        static_cast<int>(arrivals.probs.size()) != T) {
      throw IoError("batch_sizes and probs must have T entries");
    }
    std::vector<VertexType> types;
    for (const auto& v : j.at("vertex_types")) {
      types.push_back({v.at("id").get<int>(), v.value("label", std::string())});
    }
    std::vector<Resource> resources;
    for (const auto& r : j.at("resources")) {
      resources.push_back({r.at("id").get<int>(), r.at("capacity").get<int>()});
    }
    const int V = static_cast<int>(types.size());
    if (V < 1 || kappa < 1) throw IoError("instance needs types and kappa >= 1");
    GroupCatalog catalog;
    if (j.contains("groups")) {
      std::vector<GroupType> groups;
      for (const auto& g : j.at("groups")) {
        groups.push_back({g.get<std::vector<int>>()});
      }
      catalog = GroupCatalog::from_groups(V, kappa, std::move(groups));
    } else {
      catalog = GroupCatalog::full(V, kappa);
    }
    const int U = static_cast<int>(resources.size());
    const int G = catalog.size();
    Instance inst(kappa, std::move(types), std::move(resources),
                  std::move(arrivals), std::move(catalog));
    inst.set_relax_batch_size(j.value("relax_batch_size", false));
    for (const auto& e : j.at("weights")) {
      if (e.size() == 3) {
        const int u = e[0], g = e[1];
        check_index(u, U, "resource");
        check_index(g, G, "group");
        inst.set_weight(u, g, e[2].get<double>());
      } else if (e.size() == 4) {
        const int u = e[0], g = e[1], t = e[2];
        check_index(u, U, "resource");
        check_index(g, G, "group");
        check_index(t, T, "round");
        inst.set_weight(u, g, t, e[3].get<double>());
      } else {
        throw IoError("weight entries must be [u,g,w] or [u,g,t,w]");
      }
    }
    const auto& occ = j.at("occupancy");
    if (static_cast<int>(occ.size()) != U) {
      throw IoError("occupancy must have one row per resource");
    }
    for (int u = 0; u < U; ++u) {
      if (static_cast<int>(occ[u].size()) != G) {
        throw IoError("occupancy row " + std::to_string(u) +
                      " must have one entry per group");
      }
      for (int g = 0; g < G; ++g) {
        const auto& cell = occ[u][g];
        if (cell.is_array()) {
          if (static_cast<int>(cell.size()) != T) {
            throw IoError("per-round occupancy must have T entries");
          }
          for (int t = 0; t < T; ++t) {
            inst.set_occupancy(u, g, t, parse_occupancy(cell[t]));
          }
        } else {
          inst.set_occupancy(u, g, parse_occupancy(cell));
        }
      }
    }
    if (j.contains("metadata")) inst.metadata() = j.at("metadata");
    return inst;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed instance: ") + e.what());
  }
}

std::string serialize_instance(const Instance& inst) {
  return instance_to_json(inst).dump() + "\n";
}

Instance parse_instance(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("instance is not valid JSON: ") + e.what());
  }
  return instance_from_json(j);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path);
  return os.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << contents;
  if (!out) throw IoError("error writing " + path);
}

void save_instance(const Instance& inst, const std::string& path) {
  write_file(path, serialize_instance(inst));
}

Instance load_instance(const std::string& path) {
  try {
    return parse_instance(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace opera
