#include "edgefaas/event_sim.hpp"

#include <map>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace edgefaas {

const TraceEvent* Trace::find(const std::string& task) const
{
    for (const auto& e : events) {
        if (e.task == task) {
            return &e;
        }
    }
    return nullptr;
}

namespace {

enum class Kind { Start = 0, Finish = 1 };

struct Event {
    double time;
    Kind kind;
    std::size_t task;
    const std::string* name;

    // std::priority_queue pops the largest, so invert.
    bool operator<(const Event& other) const
    {
        return std::tie(other.time, other.kind, *other.name) < std::tie(time, kind, *name);
    }
};

} // namespace

Trace virtual_clock_run(const std::vector<SimTask>& tasks)
{
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!(tasks[i].duration >= 0.0) || !(tasks[i].release >= 0.0)) {
            throw std::invalid_argument("task " + tasks[i].name + " has a negative time");
        }
        if (!index.emplace(tasks[i].name, i).second) {
            throw std::invalid_argument("duplicate task " + tasks[i].name);
        }
    }
    std::vector<std::size_t> waiting(tasks.size(), 0);
    std::vector<std::vector<std::size_t>> dependents(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        for (const auto& dep : tasks[i].deps) {
            auto it = index.find(dep);
            if (it == index.end()) {
                throw std::invalid_argument("task " + tasks[i].name + " depends on unknown " + dep);
            }
            dependents[it->second].push_back(i);
            ++waiting[i];
        }
    }

    std::priority_queue<Event> queue;
    std::vector<double> started(tasks.size(), 0.0);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (waiting[i] == 0) {
            queue.push({tasks[i].release, Kind::Start, i, &tasks[i].name});
        }
    }

    Trace trace;
    double clock = 0.0;
    while (!queue.empty()) {
        auto event = queue.top();
        queue.pop();
        clock = event.time;
        const auto& task = tasks[event.task];
        if (event.kind == Kind::Start) {
            started[event.task] = clock;
            queue.push({clock + task.duration, Kind::Finish, event.task, &task.name});
            continue;
        }
        trace.events.push_back({task.name, task.resource, started[event.task], clock});
        for (auto next : dependents[event.task]) {
            if (--waiting[next] == 0) {
                queue.push({std::max(clock, tasks[next].release), Kind::Start, next, &tasks[next].name});
            }
        }
    }
    if (trace.events.size() != tasks.size()) {
        throw std::invalid_argument("task dependencies form a cycle");
    }
    trace.makespan = clock;
    return trace;
}

} // namespace edgefaas
