#pragma once

#include <iosfwd>
#include <json.hpp>
#include <string>

#include "opera/model.hpp"

namespace opera {

// Canonical JSON form of an instance. Keys are sorted and numbers use the
// shortest round-trip representation, so serialize -> parse -> serialize is
// byte-identical.
//
//   kappa, T, batch_sizes[t], probs[t][v], relax_batch_size,
//   vertex_types [{id, label}], resources [{id, capacity}],
//   weights: nonzero entries, [u, g, w] for every round or [u, g, t, w],
//   occupancy[u][g]: one value for every round or an array over t, where a
//     value is an integer constant or {"support": [...], "probs": [...]},
//   groups: member lists, present only when the catalog is pruned,
//   metadata: free-form object.
nlohmann::json instance_to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& j);

std::string serialize_instance(const Instance& inst);
Instance parse_instance(const std::string& text);

// File helpers; throw IoError naming the path on failure.
void save_instance(const Instance& inst, const std::string& path);
Instance load_instance(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace opera
