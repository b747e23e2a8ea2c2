#pragma once

#include "muvine/substrate.hpp"
#include "muvine/virtual_network.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace muvine {

struct ObjectiveWeights {
    double cpu = 0.4;
    double mem = 0.4;
    double net = 0.2;

    [[nodiscard]] bool valid() const noexcept;
};

/// Placement-quality objective of embedding `emb` against the pre-embedding
/// snapshot `before`:
///
///   sum_{x in cpu,mem} sum_{placed j on i} w_x (C_i^x - A_i^x + D_j^x) / C_i^x / m
/// + sum_{virtual links (u,v)} w_net / hops(node(u), node(v), L_uv)
///
/// where hops() is the length of the bandwidth-feasible shortest path on
/// `before`. Co-located endpoints score 2 * w_net. Throws std::invalid_argument
/// if `emb` does not validate against `before`.
double objective_value(const ObjectiveWeights& weights, const SubstrateNetwork& before, const VnRequest& vn,
                       const Embedding& emb);

struct ConstraintCheck {
    Constraint constraint;
    bool passed = true;
    std::vector<std::string> witnesses;
};

struct ConstraintReport {
    std::vector<ConstraintCheck> checks;  // one per Constraint, in enum order

    [[nodiscard]] bool all_passed() const noexcept;
    [[nodiscard]] const ConstraintCheck& get(Constraint c) const;
};

ConstraintReport check_constraints(const VnRequest& vn, const Embedding& emb, const SubstrateNetwork& before,
                                   const ObjectiveWeights& weights = {});

// ---------------------------------------------------------------------------
// Run logs and statistics

enum class EventKind { Arrival, Departure };

/// One processed simulation event together with the network-wide allocation
/// state right after it.
struct LogEntry {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    int vn_id = 0;
    bool accepted = false;           // arrivals only
    bool admitted = true;            // false when stage 1 rejected the request
    Units demand_cpu = 0;            // arrivals: VN demand
    Units demand_mem = 0;
    Units alloc_cpu = 0;             // arrivals: amount reserved for this VN (0 if rejected)
    Units alloc_mem = 0;
    Units total_cpu_allocated = 0;   // network-wide after the event
    Units total_mem_allocated = 0;
};

struct RunLog {
    Units cpu_capacity = 0;
    Units mem_capacity = 0;
    std::vector<LogEntry> entries;
};

struct UtilizationPoint {
    double time = 0.0;
    double cpu = 0.0;
    double mem = 0.0;
};

struct UtilizationSeries {
    std::vector<UtilizationPoint> points;
    double cpu_mean = 0.0;  // time-weighted between first and last event
    double mem_mean = 0.0;
    double cpu_std = 0.0;
    double mem_std = 0.0;
};

UtilizationSeries utilization_series(const RunLog& log);

/// Per-node allocated/capacity fractions of a snapshot.
struct NodeUtilization {
    std::vector<double> cpu;
    std::vector<double> mem;
};
NodeUtilization node_utilization(const SubstrateNetwork& net);

struct RunMetrics {
    std::size_t requests = 0;
    std::size_t accepted = 0;
    std::size_t admitted = 0;
    double acceptance_rate = 0.0;
    double cpu_utilization_mean = 0.0;
    double mem_utilization_mean = 0.0;
    double cpu_utilization_std = 0.0;
    double mem_utilization_std = 0.0;
    double alloc_fraction_cpu = 1.0;
    double alloc_fraction_mem = 1.0;
    double alloc_fraction = 1.0;  // mean of the CPU and memory fractions
    double throughput = 0.0;      // accepted requests per time unit
    double duration = 0.0;
    std::optional<double> admission_accuracy;
    std::optional<double> vm_type_accuracy;
    std::optional<double> mean_reward;
};

/// Throws std::invalid_argument on an empty log.
RunMetrics acceptance_and_allocation_stats(const RunLog& log);

/// Same statistics restricted to the first `requests` arrivals.
RunLog prefix_log(const RunLog& log, std::size_t requests);

inline constexpr int kMetricsSchemaVersion = 1;

/// CSV with one row per time bucket of width `bucket`.
void write_metrics_csv(std::ostream& out, const RunLog& log, double bucket);

}  // namespace muvine
