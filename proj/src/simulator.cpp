#include "opera/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "opera/errors.hpp"

namespace opera {

std::vector<int> sample_batch(std::span<const double> probs, int batch_size,
                              RngStream& rng) {
  std::vector<int> types(batch_size);
  for (int i = 0; i < batch_size; ++i) types[i] = rng.categorical(probs);
  rng.shuffle(std::span<int>(types));
  return types;
}

namespace {

// Legality checks shared by the live simulation and replay. `consumed` and
// `taken` are per-round scratch.
class RoundChecker {
 public:
  explicit RoundChecker(const Instance& inst)
      : inst_(inst), busy_until_(inst.num_resources(), 0) {}

  void begin(int round, std::span<const int> label_types) {
    round_ = round;
    types_ = label_types;
    consumed_.assign(label_types.size(), 0);
    taken_.assign(inst_.num_resources(), 0);
  }

  std::span<const int> busy_until() const { return busy_until_; }

  // Validates one assignment and returns its weight.
  double check(int u, int g, std::span<const int> labels) {
    if (u < 0 || u >= inst_.num_resources()) fail("resource out of range");
    if (round_ < busy_until_[u]) {
      fail("resource " + std::to_string(u) + " assigned while busy until " +
           std::to_string(busy_until_[u]));
    }
    if (taken_[u]) {
      fail("resource " + std::to_string(u) + " assigned twice");
    }
    if (g < 0 || g >= inst_.num_groups()) fail("group out of range");
    const GroupType& group = inst_.catalog()[g];
    if (static_cast<int>(labels.size()) != group.size()) {
      fail("group " + group.to_string() + " given " +
           std::to_string(labels.size()) + " vertices");
    }
    members_.clear();
    for (int l : labels) {
      if (l < 0 || l >= static_cast<int>(types_.size())) {
        fail("label out of range");
      }
      if (consumed_[l]) fail("vertex " + std::to_string(l) + " used twice");
      consumed_[l] = 1;
      members_.push_back(types_[l]);
    }
    std::sort(members_.begin(), members_.end());
    if (members_ != group.members) {
      fail("vertices do not form group " + group.to_string());
    }
    taken_[u] = 1;
    return inst_.weight(u, g, round_);
  }

  void occupy(int u, int duration) { busy_until_[u] = round_ + duration; }

  [[noreturn]] void fail(const std::string& what) const {
    throw InvariantViolation(round_ + 1, what);
  }

 private:
  const Instance& inst_;
  std::vector<int> busy_until_;
  int round_ = 0;
  std::span<const int> types_;
  std::vector<char> consumed_;
  std::vector<char> taken_;
  std::vector<int> members_;
};

}  // namespace

EpisodeResult run_episode(const Instance& inst, const Policy& policy,
                          uint64_t seed, uint32_t run, bool record_trace) {
  RngStream arrivals(seed, run, StreamPurpose::kArrivals);
  RngStream choices(seed, run, StreamPurpose::kPolicy);
  RngStream occupancy(seed, run, StreamPurpose::kOccupancy);
  EpisodeResult result;
  RoundChecker checker(inst);
  std::vector<int> counts(inst.num_types());
  std::vector<Decision> decisions;
  for (int t = 0; t < inst.rounds(); ++t) {
    const std::vector<int> types =
        sample_batch(inst.probs(t), inst.batch_size(t), arrivals);
    std::fill(counts.begin(), counts.end(), 0);
    for (int v : types) ++counts[v];
    checker.begin(t, types);
    RoundView view{t, types, counts, checker.busy_until()};
    decisions.clear();
    policy.decide(view, choices, decisions, result.telemetry);
    for (const Decision& d : decisions) {
      const double w = checker.check(d.resource, d.group, d.labels);
      const int duration = inst.occupancy(d.resource, d.group, t).sample(occupancy);
      checker.occupy(d.resource, duration);
      result.reward += w;
      ++result.assignments;
      if (record_trace) {
        result.trace.events.push_back(
            {t, d.step, d.resource, d.group, w, duration, d.labels});
      }
    }
    if (record_trace) result.trace.arrivals.push_back(types);
  }
  return result;
}

double replay(const Instance& inst, const Trace& trace) {
  if (static_cast<int>(trace.arrivals.size()) != inst.rounds()) {
    throw InvalidArgument("trace covers " +
                          std::to_string(trace.arrivals.size()) +
                          " rounds, instance has " +
                          std::to_string(inst.rounds()));
  }
  RoundChecker checker(inst);
  double reward = 0.0;
  size_t e = 0;
  for (int t = 0; t < inst.rounds(); ++t) {
    const auto& types = trace.arrivals[t];
    if (static_cast<int>(types.size()) != inst.batch_size(t)) {
      throw InvariantViolation(t + 1, "batch size does not match instance");
    }
    for (int v : types) {
      if (v < 0 || v >= inst.num_types()) {
        throw InvariantViolation(t + 1, "vertex type out of range");
      }
    }
    checker.begin(t, types);
    for (; e < trace.events.size() && trace.events[e].round == t; ++e) {
      const TraceEvent& ev = trace.events[e];
      const double w = checker.check(ev.resource, ev.group, ev.labels);
      if (w != ev.weight) checker.fail("recorded weight differs");
      const auto& support = inst.occupancy(ev.resource, ev.group, t).support();
      if (!std::binary_search(support.begin(), support.end(), ev.duration)) {
        checker.fail("duration outside the occupancy support");
      }
      checker.occupy(ev.resource, ev.duration);
      reward += w;
    }
  }
  if (e != trace.events.size()) {
    throw InvalidArgument("trace events out of round order");
  }
  return reward;
}

void write_trace(const Trace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  char buf[32];
  size_t e = 0;
  for (size_t t = 0; t < trace.arrivals.size(); ++t) {
    out << "A," << t;
    for (int v : trace.arrivals[t]) out << ',' << v;
    out << '\n';
    for (; e < trace.events.size() &&
           trace.events[e].round == static_cast<int>(t);
         ++e) {
      const TraceEvent& ev = trace.events[e];
      std::snprintf(buf, sizeof(buf), "%.17g", ev.weight);
      out << "E," << ev.round << ',' << ev.step << ',' << ev.resource << ','
          << ev.group << ',' << buf << ',' << ev.duration;
      for (int l : ev.labels) out << ',' << l;
      out << '\n';
    }
  }
}

Trace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw IoError("not a trace file (missing header)");
  }
  Trace trace;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    try {
      if (fields[0] == "A" && fields.size() >= 2) {
        if (std::stoul(fields[1]) != trace.arrivals.size()) {
          throw IoError("rounds out of order");
        }
        std::vector<int> types;
        for (size_t i = 2; i < fields.size(); ++i) {
          types.push_back(std::stoi(fields[i]));
        }
        trace.arrivals.push_back(std::move(types));
      } else if (fields[0] == "E" && fields.size() >= 7) {
        TraceEvent ev;
        ev.round = std::stoi(fields[1]);
        ev.step = std::stoi(fields[2]);
        ev.resource = std::stoi(fields[3]);
        ev.group = std::stoi(fields[4]);
        ev.weight = std::stod(fields[5]);
        ev.duration = std::stoi(fields[6]);
        for (size_t i = 7; i < fields.size(); ++i) {
          ev.labels.push_back(std::stoi(fields[i]));
        }
        trace.events.push_back(std::move(ev));
      } else {
        throw IoError("unknown record");
      }
    } catch (const std::logic_error&) {
      throw IoError("trace line " + std::to_string(line_no) + ": bad number");
    } catch (const IoError& e) {
      throw IoError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace opera
