#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace muvine {

using Units = std::int64_t;

/// Hardware flavour of a substrate node; matched against the predicted VM type
/// when scoring a placement.
enum class NodeKind { CpuRich = 0, GpuRich = 1, MemRich = 2 };

inline constexpr int kNodeKindCount = 3;

std::string_view to_string(NodeKind kind);
NodeKind parse_node_kind(std::string_view text);

class SubstrateNode {
public:
    SubstrateNode(int id, Units cpu_capacity, Units mem_capacity, Units clock, NodeKind kind);

    [[nodiscard]] int id() const noexcept { return id_; }
    [[nodiscard]] Units cpu_capacity() const noexcept { return cpu_capacity_; }
    [[nodiscard]] Units mem_capacity() const noexcept { return mem_capacity_; }
    [[nodiscard]] Units cpu_avail() const noexcept { return cpu_avail_; }
    [[nodiscard]] Units mem_avail() const noexcept { return mem_avail_; }
    [[nodiscard]] Units clock_avail() const noexcept { return clock_avail_; }
    [[nodiscard]] NodeKind kind() const noexcept { return kind_; }

    [[nodiscard]] Units cpu_allocated() const noexcept { return cpu_capacity_ - cpu_avail_; }
    [[nodiscard]] Units mem_allocated() const noexcept { return mem_capacity_ - mem_avail_; }

    bool operator==(const SubstrateNode&) const = default;

private:
    friend class SubstrateNetwork;

    int id_;
    Units cpu_capacity_;
    Units mem_capacity_;
    Units cpu_avail_;
    Units mem_avail_;
    Units clock_avail_;
    NodeKind kind_;
};

struct SubstrateLink {
    int a = 0;  // a < b
    int b = 0;
    Units bw_capacity = 0;
    Units bw_avail = 0;

    [[nodiscard]] int other(int endpoint) const noexcept { return endpoint == a ? b : a; }
    bool operator==(const SubstrateLink&) const = default;
};

struct Adjacency {
    int neighbor;
    int link;
};

/// A route through the substrate. `nodes` has one more entry than `links`;
/// a route from a node to itself has a single node and no links.
struct SubstratePath {
    std::vector<int> nodes;
    std::vector<int> links;

    [[nodiscard]] std::size_t hops() const noexcept { return links.size(); }
    bool operator==(const SubstratePath&) const = default;
};

/// Undirected substrate graph with live CPU/memory/bandwidth accounting.
///
/// All mutating operations are all-or-nothing: on error nothing is changed.
class SubstrateNetwork {
public:
    SubstrateNetwork() = default;

    int add_node(Units cpu_capacity, Units mem_capacity, Units clock, NodeKind kind);
    /// Throws std::invalid_argument on self-loops or duplicate links.
    int add_link(int i, int j, Units bw_capacity);

    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] std::size_t link_count() const noexcept { return links_.size(); }

    [[nodiscard]] const SubstrateNode& node(int i) const;
    [[nodiscard]] const SubstrateLink& link(int id) const;
    [[nodiscard]] std::span<const SubstrateNode> nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::span<const SubstrateLink> links() const noexcept { return links_; }
    /// Incident links of `i`, sorted by neighbour index.
    [[nodiscard]] std::span<const Adjacency> neighbors(int i) const;
    [[nodiscard]] std::optional<int> find_link(int i, int j) const;

    /// Largest available bandwidth over the links incident to `i`; 0 when isolated.
    [[nodiscard]] Units node_bandwidth_avail(int i) const;
    /// Largest bandwidth capacity over the links incident to `i`; 0 when isolated.
    [[nodiscard]] Units node_bandwidth_capacity(int i) const;

    /// Minimum-hop path using only links with bw_avail >= bw_demand. Among
    /// equal-hop paths the lexicographically smallest node sequence wins.
    [[nodiscard]] std::optional<SubstratePath> shortest_feasible_path(int src, int dst, Units bw_demand) const;

    /// Feasible minimum hop count from `src` to every node; -1 when unreachable.
    [[nodiscard]] std::vector<int> feasible_hop_counts(int src, Units bw_demand) const;

    void allocate(int i, Units cpu, Units mem);
    void release(int i, Units cpu, Units mem);
    void reserve_path(std::span<const int> links, Units bw);
    void release_path(std::span<const int> links, Units bw);

    [[nodiscard]] bool is_connected() const;

    [[nodiscard]] Units total_cpu_capacity() const noexcept;
    [[nodiscard]] Units total_mem_capacity() const noexcept;
    [[nodiscard]] Units total_cpu_allocated() const noexcept;
    [[nodiscard]] Units total_mem_allocated() const noexcept;

    bool operator==(const SubstrateNetwork& other) const;

    void write(std::ostream& out) const;
    [[nodiscard]] std::string to_text() const;
    static SubstrateNetwork read(std::istream& in);
    static SubstrateNetwork from_text(std::string_view text);

private:
    void check_node(int i) const;

    std::vector<SubstrateNode> nodes_;
    std::vector<SubstrateLink> links_;
    std::vector<std::vector<Adjacency>> adjacency_;
};

}  // namespace muvine
