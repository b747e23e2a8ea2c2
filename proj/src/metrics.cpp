#include "muvine/metrics.hpp"

#include "muvine/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace muvine {

bool ObjectiveWeights::valid() const noexcept {
    return cpu >= 0.0 && mem >= 0.0 && net >= 0.0 && std::abs(cpu + mem + net - 1.0) <= 1e-9;
}

double objective_value(const ObjectiveWeights& weights, const SubstrateNetwork& before, const VnRequest& vn,
                       const Embedding& emb) {
    if (const auto violations = validate_embedding(vn, emb, before); !violations.empty()) {
        throw std::invalid_argument("objective_value: invalid embedding (" + violations.front().entity + ": " +
                                    violations.front().detail + ")");
    }
    const double m = static_cast<double>(before.node_count());
    double utilization_term = 0.0;
    for (const auto& p : emb.placements) {
        const auto& node = before.node(p.node);
        const auto& vm = vn.vm(p.vm);
        if (node.cpu_capacity() > 0) {
            utilization_term += weights.cpu *
                                static_cast<double>(node.cpu_allocated() + vm.cpu_demand) /
                                static_cast<double>(node.cpu_capacity());
        }
        if (node.mem_capacity() > 0) {
            utilization_term += weights.mem *
                                static_cast<double>(node.mem_allocated() + vm.mem_demand) /
                                static_cast<double>(node.mem_capacity());
        }
    }
    utilization_term /= m;

    double proximity_term = 0.0;
    for (const auto& vl : vn.vlinks()) {
        const int a = *emb.node_of(vl.a);
        const int b = *emb.node_of(vl.b);
        if (a == b) {
            proximity_term += 2.0 * weights.net;
            continue;
        }
        if (auto path = before.shortest_feasible_path(a, b, vl.bw_demand)) {
            proximity_term += weights.net / static_cast<double>(path->hops());
        }
    }
    return utilization_term + proximity_term;
}

bool ConstraintReport::all_passed() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const ConstraintCheck& c) { return c.passed; });
}

const ConstraintCheck& ConstraintReport::get(Constraint c) const {
    for (const auto& check : checks) {
        if (check.constraint == c) return check;
    }
    throw std::out_of_range("constraint not in report");
}

ConstraintReport check_constraints(const VnRequest& vn, const Embedding& emb, const SubstrateNetwork& before,
                                   const ObjectiveWeights& weights) {
    ConstraintReport report;
    for (auto c : {Constraint::OneToOne, Constraint::FeasibleDemand, Constraint::DemandFits,
                   Constraint::WeightsSumToOne}) {
        report.checks.push_back({c, true, {}});
    }
    auto record = [&](Constraint c, std::string witness) {
        auto& check = report.checks[static_cast<std::size_t>(c)];
        check.passed = false;
        check.witnesses.push_back(std::move(witness));
    };

    for (const auto& v : validate_embedding(vn, emb, before)) record(v.constraint, v.entity + ": " + v.detail);

    for (int j = 0; j < static_cast<int>(vn.vm_count()); ++j) {
        Units cpu = vn.vm(j).cpu_demand;
        Units mem = vn.vm(j).mem_demand;
        for (const auto& p : emb.placements) {
            if (p.vm == j) {
                cpu = p.cpu;
                mem = p.mem;
                break;
            }
        }
        const auto nodes = before.nodes();
        const bool hostable = std::any_of(nodes.begin(), nodes.end(), [&](const SubstrateNode& node) {
            return node.cpu_avail() >= cpu && node.mem_avail() >= mem;
        });
        if (!hostable) record(Constraint::FeasibleDemand, "vm " + std::to_string(j) + ": no node can host it");
    }

    if (!weights.valid()) {
        record(Constraint::WeightsSumToOne, "weights (" + io::format_double(weights.cpu) + ", " +
                                                io::format_double(weights.mem) + ", " +
                                                io::format_double(weights.net) + ")");
    }
    return report;
}

UtilizationSeries utilization_series(const RunLog& log) {
    UtilizationSeries series;
    const double cpu_cap = static_cast<double>(log.cpu_capacity);
    const double mem_cap = static_cast<double>(log.mem_capacity);
    for (const auto& e : log.entries) {
        series.points.push_back({e.time, cpu_cap > 0 ? static_cast<double>(e.total_cpu_allocated) / cpu_cap : 0.0,
                                 mem_cap > 0 ? static_cast<double>(e.total_mem_allocated) / mem_cap : 0.0});
    }
    const auto& pts = series.points;
    if (pts.empty()) return series;

    const double span = pts.back().time - pts.front().time;
    double wsum = 0.0, cpu_sum = 0.0, mem_sum = 0.0, cpu_sq = 0.0, mem_sq = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        // Piecewise constant: point k holds until point k+1. With a zero time
        // span every point weighs the same.
        double w = 1.0;
        if (span > 0.0) w = k + 1 < pts.size() ? pts[k + 1].time - pts[k].time : 0.0;
        wsum += w;
        cpu_sum += w * pts[k].cpu;
        mem_sum += w * pts[k].mem;
        cpu_sq += w * pts[k].cpu * pts[k].cpu;
        mem_sq += w * pts[k].mem * pts[k].mem;
    }
    series.cpu_mean = cpu_sum / wsum;
    series.mem_mean = mem_sum / wsum;
    series.cpu_std = std::sqrt(std::max(0.0, cpu_sq / wsum - series.cpu_mean * series.cpu_mean));
    series.mem_std = std::sqrt(std::max(0.0, mem_sq / wsum - series.mem_mean * series.mem_mean));
    return series;
}

NodeUtilization node_utilization(const SubstrateNetwork& net) {
    NodeUtilization out;
    for (const auto& node : net.nodes()) {
        out.cpu.push_back(node.cpu_capacity() > 0
                              ? static_cast<double>(node.cpu_allocated()) / static_cast<double>(node.cpu_capacity())
                              : 0.0);
        out.mem.push_back(node.mem_capacity() > 0
                              ? static_cast<double>(node.mem_allocated()) / static_cast<double>(node.mem_capacity())
                              : 0.0);
    }
    return out;
}

RunMetrics acceptance_and_allocation_stats(const RunLog& log) {
    if (log.entries.empty()) throw std::invalid_argument("cannot compute run metrics of an empty log");
    RunMetrics m;
    double demand_cpu = 0.0, demand_mem = 0.0, alloc_cpu = 0.0, alloc_mem = 0.0;
    for (const auto& e : log.entries) {
        if (e.kind != EventKind::Arrival) continue;
        ++m.requests;
        if (e.admitted) ++m.admitted;
        if (!e.accepted) continue;
        ++m.accepted;
        demand_cpu += static_cast<double>(e.demand_cpu);
        demand_mem += static_cast<double>(e.demand_mem);
        alloc_cpu += static_cast<double>(e.alloc_cpu);
        alloc_mem += static_cast<double>(e.alloc_mem);
    }
    m.acceptance_rate = m.requests > 0 ? static_cast<double>(m.accepted) / static_cast<double>(m.requests) : 0.0;
    if (demand_cpu > 0.0) m.alloc_fraction_cpu = alloc_cpu / demand_cpu;
    if (demand_mem > 0.0) m.alloc_fraction_mem = alloc_mem / demand_mem;
    m.alloc_fraction = 0.5 * (m.alloc_fraction_cpu + m.alloc_fraction_mem);

    const auto series = utilization_series(log);
    m.cpu_utilization_mean = series.cpu_mean;
    m.mem_utilization_mean = series.mem_mean;
    m.cpu_utilization_std = series.cpu_std;
    m.mem_utilization_std = series.mem_std;

    m.duration = log.entries.back().time - log.entries.front().time;
    m.throughput = m.duration > 0.0 ? static_cast<double>(m.accepted) / m.duration : 0.0;
    return m;
}

RunLog prefix_log(const RunLog& log, std::size_t requests) {
    RunLog out;
    out.cpu_capacity = log.cpu_capacity;
    out.mem_capacity = log.mem_capacity;
    std::size_t arrivals = 0;
    for (const auto& e : log.entries) {
        if (e.kind == EventKind::Arrival) {
            if (arrivals == requests) break;
            ++arrivals;
        }
        out.entries.push_back(e);
    }
    return out;
}

void write_metrics_csv(std::ostream& out, const RunLog& log, double bucket) {
    if (bucket <= 0.0) throw std::invalid_argument("bucket width must be positive");
    out << "schema_version,bucket,start_time,arrivals,accepted,departures,cpu_utilization,mem_utilization\n";
    const auto series = utilization_series(log);
    if (series.points.empty()) return;

    struct Bucket {
        std::size_t arrivals = 0, accepted = 0, departures = 0;
        double weight = 0.0, cpu = 0.0, mem = 0.0;
    };
    std::map<long long, Bucket> buckets;
    auto index_of = [&](double t) { return static_cast<long long>(std::floor(t / bucket)); };
    for (const auto& e : log.entries) {
        auto& b = buckets[index_of(e.time)];
        if (e.kind == EventKind::Arrival) {
            ++b.arrivals;
            if (e.accepted) ++b.accepted;
        } else {
            ++b.departures;
        }
    }
    const auto& pts = series.points;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        // Split the constant segment [t_k, t_{k+1}) across bucket boundaries.
        double t = pts[k].time;
        const double end = pts[k + 1].time;
        while (t < end) {
            const long long idx = index_of(t);
            const double boundary = std::min(end, static_cast<double>(idx + 1) * bucket);
            const double w = boundary - t;
            auto& b = buckets[idx];
            b.weight += w;
            b.cpu += w * pts[k].cpu;
            b.mem += w * pts[k].mem;
            if (boundary <= t) break;
            t = boundary;
        }
    }
    for (const auto& [idx, b] : buckets) {
        const double cpu = b.weight > 0 ? b.cpu / b.weight : 0.0;
        const double mem = b.weight > 0 ? b.mem / b.weight : 0.0;
        out << kMetricsSchemaVersion << ',' << idx << ',' << io::format_double(static_cast<double>(idx) * bucket) << ','
            << b.arrivals << ',' << b.accepted << ',' << b.departures << ',' << io::format_fixed(cpu, 6) << ','
            << io::format_fixed(mem, 6) << '\n';
    }
}

}  // namespace muvine
