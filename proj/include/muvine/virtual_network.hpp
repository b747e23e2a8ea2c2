#pragma once

#include "muvine/substrate.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace muvine {

/// Delay-sensitivity class. Class1 is the most delay sensitive.
enum class VmClass { Class1 = 1, Class2 = 2, Class3 = 3 };

/// VN/VM priority from its class: Class3 -> 1, Class2 -> 2, Class1 -> 3.
int priority_of(VmClass c) noexcept;
VmClass parse_vm_class(int value);

struct VirtualMachine {
    int id = 0;
    Units cpu_demand = 1;
    Units mem_demand = 1;
    VmClass vm_class = VmClass::Class3;
    int priority = 1;
    double start = 0.0;
    /// Unknown at arrival.
    std::optional<double> end;
    /// Observed post-hoc usage, 0 < actual <= demand.
    std::optional<double> actual_cpu;
    std::optional<double> actual_mem;
    /// Observed post-hoc GPU share of the workload in [0,1].
    std::optional<double> gpu_affinity;
};

struct VirtualLink {
    int a = 0;
    int b = 0;
    Units bw_demand = 1;
};

/// A virtual-network request. Aggregates, class and priority are derived from
/// the members at construction and the request is immutable afterwards.
class VnRequest {
public:
    VnRequest() = default;
    /// Throws std::invalid_argument when any VM/link invariant is violated.
    VnRequest(int id, double start, std::vector<VirtualMachine> vms, std::vector<VirtualLink> vlinks,
              std::optional<double> end = std::nullopt);

    [[nodiscard]] int id() const noexcept { return id_; }
    [[nodiscard]] double start() const noexcept { return start_; }
    [[nodiscard]] std::optional<double> end() const noexcept { return end_; }
    [[nodiscard]] const std::vector<VirtualMachine>& vms() const noexcept { return vms_; }
    [[nodiscard]] const std::vector<VirtualLink>& vlinks() const noexcept { return vlinks_; }
    [[nodiscard]] std::size_t vm_count() const noexcept { return vms_.size(); }
    [[nodiscard]] const VirtualMachine& vm(int j) const;

    [[nodiscard]] Units agg_cpu() const noexcept { return agg_cpu_; }
    [[nodiscard]] Units agg_mem() const noexcept { return agg_mem_; }
    [[nodiscard]] Units total_link_demand() const noexcept;
    [[nodiscard]] VmClass vn_class() const noexcept { return vn_class_; }
    [[nodiscard]] int priority() const noexcept { return priority_; }

    /// Sum of the demands of the virtual links incident to VM `j`.
    [[nodiscard]] Units vm_bandwidth_demand(int j) const;

    void write(std::ostream& out) const;

private:
    int id_ = 0;
    double start_ = 0.0;
    std::optional<double> end_;
    std::vector<VirtualMachine> vms_;
    std::vector<VirtualLink> vlinks_;
    Units agg_cpu_ = 0;
    Units agg_mem_ = 0;
    VmClass vn_class_ = VmClass::Class3;
    int priority_ = 1;
};

/// VN class is its strictest member class; priority follows from it.
std::pair<VmClass, int> derive_vn_class(std::span<const VirtualMachine> vms);

std::string vn_stream_to_text(std::span<const VnRequest> stream);
void write_vn_stream(std::ostream& out, std::span<const VnRequest> stream);
std::vector<VnRequest> read_vn_stream(std::istream& in);
std::vector<VnRequest> vn_stream_from_text(std::string_view text);

/// One VM hosted on a substrate node with the amounts actually reserved for it.
struct Placement {
    int vm = 0;
    int node = 0;
    Units cpu = 0;
    Units mem = 0;
};

struct Embedding {
    std::vector<Placement> placements;
    /// Virtual-link index -> substrate link ids. Co-located endpoints map to an empty list.
    std::map<int, std::vector<int>> link_paths;

    /// Node of `vm` when it is placed exactly once.
    [[nodiscard]] std::optional<int> node_of(int vm) const;
};

/// Placement with reservation equal to the full demand.
Placement full_demand_placement(const VnRequest& vn, int vm, int node);

enum class Constraint {
    OneToOne,         // each VM on exactly one node
    FeasibleDemand,   // some node can host each VM
    DemandFits,       // per-node and per-link demand within availability
    WeightsSumToOne,  // objective weights
};

std::string_view to_string(Constraint c);

struct Violation {
    Constraint constraint;
    std::string entity;  // e.g. "vm 3", "node 1", "vlink 2"
    std::string detail;
};

/// Check `emb` against the pre-embedding snapshot `net`. An empty result means
/// replaying the embedding through allocate/reserve_path succeeds.
std::vector<Violation> validate_embedding(const VnRequest& vn, const Embedding& emb, const SubstrateNetwork& net);

/// Allocate nodes and reserve link paths of `emb` on `net`, all or nothing.
void apply_embedding(SubstrateNetwork& net, const VnRequest& vn, const Embedding& emb);
/// Inverse of apply_embedding.
void release_embedding(SubstrateNetwork& net, const VnRequest& vn, const Embedding& emb);

}  // namespace muvine
