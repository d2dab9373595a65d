#pragma once

#include <string>
#include <vector>

namespace edgefaas {

// One unit of modelled work: a compute stage or a transfer.
struct SimTask {
    std::string name;      // unique within a run
    std::string resource;  // label only; tasks never contend for resources
    double duration = 0.0;
    std::vector<std::string> deps;
    double release = 0.0;  // earliest start
};

struct TraceEvent {
    std::string task;
    std::string resource;
    double start = 0.0;
    double finish = 0.0;
};

struct Trace {
    std::vector<TraceEvent> events;  // in completion order
    double makespan = 0.0;           // virtual clock after the last event

    const TraceEvent* find(const std::string& task) const;
};

// Discrete-event execution on a virtual clock. A task starts once its
// dependencies finished and its release time passed. Simultaneous events are
// ordered by task name, so the trace is a pure function of the input.
// Throws std::invalid_argument on duplicate names, unknown dependencies,
// negative durations or cycles.
Trace virtual_clock_run(const std::vector<SimTask>& tasks);

} // namespace edgefaas
