#include "muvine/simulator.hpp"

#include "muvine/error.hpp"

#include <limits>
#include <queue>
#include <string>
#include <tuple>

namespace muvine {

bool operator<(const SimEvent& a, const SimEvent& b) noexcept {
    const int ka = a.kind == EventKind::Departure ? 0 : 1;
    const int kb = b.kind == EventKind::Departure ? 0 : 1;
    return std::tie(a.time, ka, a.vn) < std::tie(b.time, kb, b.vn);
}

namespace {

struct Active {
    Embedding embedding;
};

void check_conservation(const SubstrateNetwork& net, const SubstrateNetwork& initial, Units cpu, Units mem,
                        const std::vector<Units>& link_reserved, SimulationResult& out) {
    if (net.total_cpu_allocated() != cpu || net.total_mem_allocated() != mem) {
        throw AccountingError("allocated node resources differ from the active embeddings");
    }
    ++out.assertions;
    for (std::size_t l = 0; l < net.link_count(); ++l) {
        const auto& now = net.link(static_cast<int>(l));
        if (initial.link(static_cast<int>(l)).bw_avail - now.bw_avail != link_reserved[l]) {
            throw AccountingError("reserved bandwidth on link " + std::to_string(l) +
                                  " differs from the active embeddings");
        }
    }
    ++out.assertions;
}

}  // namespace

double trailing_episode_reward(const SimulationResult& result, std::size_t arrivals, std::size_t window) {
    const std::size_t from = arrivals > window ? arrivals - window : 0;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < result.episode_rewards.size(); ++k) {
        if (result.episode_arrivals[k] < from) continue;
        sum += result.episode_rewards[k];
        ++n;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

SimulationResult simulate(SubstrateNetwork net, std::span<const VnRequest> stream, const ArrivalHandler& handler,
                          const SimulationOptions& options) {
    SimulationResult out;
    out.accepted.assign(stream.size(), std::nullopt);
    out.log.cpu_capacity = net.total_cpu_capacity();
    out.log.mem_capacity = net.total_mem_capacity();

    double horizon = 0.0;
    std::priority_queue<SimEvent, std::vector<SimEvent>, std::function<bool(const SimEvent&, const SimEvent&)>> queue(
        [](const SimEvent& a, const SimEvent& b) { return b < a; });
    for (std::size_t k = 0; k < stream.size(); ++k) {
        queue.push({stream[k].start(), EventKind::Arrival, static_cast<int>(k)});
        horizon = std::max(horizon, stream[k].start());
    }

    const SubstrateNetwork initial = net;
    std::vector<std::optional<Active>> active(stream.size());
    std::vector<Units> link_reserved(net.link_count(), 0);
    Units cpu_reserved = net.total_cpu_allocated();
    Units mem_reserved = net.total_mem_allocated();
    double clock = -std::numeric_limits<double>::infinity();
    std::size_t arrivals = 0;

    while (!queue.empty()) {
        const SimEvent ev = queue.top();
        queue.pop();
        if (ev.time < clock) throw AccountingError("simulation clock moved backwards");
        clock = ev.time;
        const auto& vn = stream[static_cast<std::size_t>(ev.vn)];

        LogEntry entry;
        entry.time = ev.time;
        entry.kind = ev.kind;
        entry.vn_id = vn.id();

        if (ev.kind == EventKind::Departure) {
            auto& a = active[static_cast<std::size_t>(ev.vn)];
            for (const auto& p : a->embedding.placements) {
                net.release(p.node, p.cpu, p.mem);
                cpu_reserved -= p.cpu;
                mem_reserved -= p.mem;
            }
            for (const auto& [l, links] : a->embedding.link_paths) {
                const Units bw = vn.vlinks()[static_cast<std::size_t>(l)].bw_demand;
                net.release_path(links, bw);
                for (int id : links) link_reserved[static_cast<std::size_t>(id)] -= bw;
            }
            a.reset();
        } else {
            entry.demand_cpu = vn.agg_cpu();
            entry.demand_mem = vn.agg_mem();
            std::optional<SubstrateNetwork> before;
            if (options.verify_embeddings) before = net;
            ArrivalOutcome res = handler(net, vn);
            entry.admitted = res.admitted;
            if (!res.episode.rewards.empty()) {
                out.episode_rewards.push_back(res.episode.mean_reward());
                out.episode_arrivals.push_back(arrivals);
            }
            ++arrivals;
            if (res.admitted && res.episode.embedding) {
                const auto& emb = *res.episode.embedding;
                if (before) {
                    if (!check_constraints(vn, emb, *before).all_passed()) {
                        throw AccountingError("accepted embedding of vn " + std::to_string(vn.id()) +
                                              " violates a constraint");
                    }
                    ++out.assertions;
                }
                entry.accepted = true;
                for (const auto& p : emb.placements) {
                    entry.alloc_cpu += p.cpu;
                    entry.alloc_mem += p.mem;
                }
                cpu_reserved += entry.alloc_cpu;
                mem_reserved += entry.alloc_mem;
                for (const auto& [l, links] : emb.link_paths) {
                    for (int id : links) {
                        link_reserved[static_cast<std::size_t>(id)] += vn.vlinks()[static_cast<std::size_t>(l)].bw_demand;
                    }
                }
                active[static_cast<std::size_t>(ev.vn)] = Active{emb};
                if (vn.end() && *vn.end() <= horizon) {
                    queue.push({std::max(*vn.end(), ev.time), EventKind::Departure, ev.vn});
                }
            }
            out.accepted[static_cast<std::size_t>(ev.vn)] = entry.accepted;
        }

        if (options.check_conservation) check_conservation(net, initial, cpu_reserved, mem_reserved, link_reserved, out);
        entry.total_cpu_allocated = net.total_cpu_allocated();
        entry.total_mem_allocated = net.total_mem_allocated();
        out.log.entries.push_back(entry);
    }
    out.final_state = std::move(net);
    return out;
}

}  // namespace muvine
