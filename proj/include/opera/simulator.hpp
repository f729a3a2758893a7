#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "opera/model.hpp"
#include "opera/rng.hpp"

namespace opera {

// b iid draws from probs followed by a uniform shuffle; entry i is the type of
// the vertex labelled i.
std::vector<int> sample_batch(std::span<const double> probs, int batch_size,
                              RngStream& rng);

// What a policy sees at the start of a round.
struct RoundView {
  int round = 0;
  std::span<const int> label_types;  // type of each labelled vertex
  std::span<const int> counts;       // arrived vertices per type
  std::span<const int> busy_until;   // resource u is idle iff round >= this
  bool idle(int u) const { return round >= busy_until[u]; }
};

// One resource matched to the vertices with the given labels. The simulator
// checks that the labels' types form `group`.
struct Decision {
  int resource = 0;
  int group = 0;
  std::vector<int> labels;
  int step = -1;  // lattice step for adaptive policies, -1 otherwise
};

struct Telemetry {
  int64_t samples = 0;        // randomized choices over a non-empty safe set
  int64_t clamps = 0;         // choices whose rule had to be rescaled
  int64_t inexact_rounds = 0; // greedy rounds that hit the search budget
  Telemetry& operator+=(const Telemetry& o) {
    samples += o.samples;
    clamps += o.clamps;
    inexact_rounds += o.inexact_rounds;
    return *this;
  }
};

// Online assignment rule. decide() must not mutate the policy, so one object
// can serve episodes on several threads.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void decide(const RoundView& view, RngStream& rng,
                      std::vector<Decision>& out, Telemetry& tel) const = 0;
};

struct TraceEvent {
  int round = 0;
  int step = -1;
  int resource = 0;
  int group = 0;
  double weight = 0.0;
  int duration = 0;
  std::vector<int> labels;
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct Trace {
  std::vector<std::vector<int>> arrivals;  // [t] -> type of each label
  std::vector<TraceEvent> events;
  friend bool operator==(const Trace&, const Trace&) = default;
};

struct EpisodeResult {
  double reward = 0.0;
  int assignments = 0;
  Telemetry telemetry;
  Trace trace;  // empty unless requested
};

// Simulates one episode. Arrivals, policy choices and occupancy draws come
// from separate streams (seed, run, purpose), so every policy faces the same
// arrivals for a given run. Throws InvariantViolation if the policy breaks a
// matching or occupancy rule.
EpisodeResult run_episode(const Instance& inst, const Policy& policy,
                          uint64_t seed, uint32_t run,
                          bool record_trace = false);

// Re-checks a trace against the instance (idle resources, single use of each
// vertex, member types of the right count, weights and duration support)
// and returns the reward, summed in trace order.
double replay(const Instance& inst, const Trace& trace);

inline constexpr const char* kTraceHeader = "# opera-trace v1";

void write_trace(const Trace& trace, std::ostream& out);
Trace read_trace(std::istream& in);

}  // namespace opera
