#include "muvine/substrate.hpp"

#include "muvine/error.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace muvine {

std::string_view to_string(NodeKind kind) {
    switch (kind) {
    case NodeKind::CpuRich:
        return "CpuRich";
    case NodeKind::GpuRich:
        return "GpuRich";
    case NodeKind::MemRich:
        return "MemRich";
    }
    return "?";
}

NodeKind parse_node_kind(std::string_view text) {
    if (text == "CpuRich") return NodeKind::CpuRich;
    if (text == "GpuRich") return NodeKind::GpuRich;
    if (text == "MemRich") return NodeKind::MemRich;
    throw FormatError("unknown node kind '" + std::string(text) + "'");
}

SubstrateNode::SubstrateNode(int id, Units cpu_capacity, Units mem_capacity, Units clock, NodeKind kind)
    : id_(id),
      cpu_capacity_(cpu_capacity),
      mem_capacity_(mem_capacity),
      cpu_avail_(cpu_capacity),
      mem_avail_(mem_capacity),
      clock_avail_(clock),
      kind_(kind) {
    if (cpu_capacity < 0 || mem_capacity < 0 || clock < 0) {
        throw std::invalid_argument("substrate node capacities must be non-negative");
    }
}

int SubstrateNetwork::add_node(Units cpu_capacity, Units mem_capacity, Units clock, NodeKind kind) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back(id, cpu_capacity, mem_capacity, clock, kind);
    adjacency_.emplace_back();
    return id;
}

int SubstrateNetwork::add_link(int i, int j, Units bw_capacity) {
    check_node(i);
    check_node(j);
    if (i == j) throw std::invalid_argument("substrate link endpoints must be distinct");
    if (bw_capacity < 0) throw std::invalid_argument("link capacity must be non-negative");
    if (find_link(i, j)) throw std::invalid_argument("duplicate substrate link");

    const int id = static_cast<int>(links_.size());
    links_.push_back({std::min(i, j), std::max(i, j), bw_capacity, bw_capacity});
    auto insert_sorted = [](std::vector<Adjacency>& adj, Adjacency entry) {
        auto pos = std::lower_bound(adj.begin(), adj.end(), entry,
                                    [](const Adjacency& x, const Adjacency& y) { return x.neighbor < y.neighbor; });
        adj.insert(pos, entry);
    };
    insert_sorted(adjacency_[i], {j, id});
    insert_sorted(adjacency_[j], {i, id});
    return id;
}

void SubstrateNetwork::check_node(int i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= nodes_.size()) {
        throw std::out_of_range("substrate node index " + std::to_string(i) + " out of range");
    }
}

const SubstrateNode& SubstrateNetwork::node(int i) const {
    check_node(i);
    return nodes_[i];
}

const SubstrateLink& SubstrateNetwork::link(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= links_.size()) {
        throw std::out_of_range("substrate link index " + std::to_string(id) + " out of range");
    }
    return links_[id];
}

std::span<const Adjacency> SubstrateNetwork::neighbors(int i) const {
    check_node(i);
    return adjacency_[i];
}

std::optional<int> SubstrateNetwork::find_link(int i, int j) const {
    check_node(i);
    check_node(j);
    const auto& adj = adjacency_[i];
    auto pos = std::lower_bound(adj.begin(), adj.end(), j,
                                [](const Adjacency& x, int target) { return x.neighbor < target; });
    if (pos != adj.end() && pos->neighbor == j) return pos->link;
    return std::nullopt;
}

Units SubstrateNetwork::node_bandwidth_avail(int i) const {
    Units best = 0;
    for (const auto& adj : neighbors(i)) best = std::max(best, links_[adj.link].bw_avail);
    return best;
}

Units SubstrateNetwork::node_bandwidth_capacity(int i) const {
    Units best = 0;
    for (const auto& adj : neighbors(i)) best = std::max(best, links_[adj.link].bw_capacity);
    return best;
}

std::optional<SubstratePath> SubstrateNetwork::shortest_feasible_path(int src, int dst, Units bw_demand) const {
    check_node(src);
    check_node(dst);
    if (bw_demand < 0) throw std::invalid_argument("bandwidth demand must be non-negative");
    if (src == dst) return SubstratePath{{src}, {}};

    // BFS from dst gives the hop distance to dst over feasible links; walking
    // forward from src and always taking the smallest-index neighbour one hop
    // closer yields the lexicographically smallest minimum-hop route.
    constexpr int kUnreached = std::numeric_limits<int>::max();
    std::vector<int> dist(nodes_.size(), kUnreached);
    std::vector<int> queue;
    queue.reserve(nodes_.size());
    dist[dst] = 0;
    queue.push_back(dst);
    for (std::size_t head = 0; head < queue.size() && dist[src] == kUnreached; ++head) {
        const int u = queue[head];
        for (const auto& adj : adjacency_[u]) {
            if (dist[adj.neighbor] != kUnreached || links_[adj.link].bw_avail < bw_demand) continue;
            dist[adj.neighbor] = dist[u] + 1;
            queue.push_back(adj.neighbor);
        }
    }
    if (dist[src] == kUnreached) return std::nullopt;

    SubstratePath path;
    path.nodes.push_back(src);
    int u = src;
    while (u != dst) {
        for (const auto& adj : adjacency_[u]) {
            if (links_[adj.link].bw_avail >= bw_demand && dist[adj.neighbor] == dist[u] - 1) {
                path.links.push_back(adj.link);
                path.nodes.push_back(adj.neighbor);
                u = adj.neighbor;
                break;
            }
        }
    }
    return path;
}

std::vector<int> SubstrateNetwork::feasible_hop_counts(int src, Units bw_demand) const {
    check_node(src);
    std::vector<int> dist(nodes_.size(), -1);
    std::vector<int> queue{src};
    queue.reserve(nodes_.size());
    dist[src] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const int u = queue[head];
        for (const auto& adj : adjacency_[u]) {
            if (dist[adj.neighbor] >= 0 || links_[adj.link].bw_avail < bw_demand) continue;
            dist[adj.neighbor] = dist[u] + 1;
            queue.push_back(adj.neighbor);
        }
    }
    return dist;
}

void SubstrateNetwork::allocate(int i, Units cpu, Units mem) {
    check_node(i);
    if (cpu < 0 || mem < 0) throw std::invalid_argument("allocation amounts must be non-negative");
    auto& n = nodes_[i];
    if (cpu > n.cpu_avail_ || mem > n.mem_avail_) {
        throw AllocationError("node " + std::to_string(i) + " cannot host cpu=" + std::to_string(cpu) +
                              " mem=" + std::to_string(mem) + " (avail cpu=" + std::to_string(n.cpu_avail_) +
                              " mem=" + std::to_string(n.mem_avail_) + ")");
    }
    n.cpu_avail_ -= cpu;
    n.mem_avail_ -= mem;
}

void SubstrateNetwork::release(int i, Units cpu, Units mem) {
    check_node(i);
    if (cpu < 0 || mem < 0) throw std::invalid_argument("release amounts must be non-negative");
    auto& n = nodes_[i];
    if (n.cpu_avail_ + cpu > n.cpu_capacity_ || n.mem_avail_ + mem > n.mem_capacity_) {
        throw AccountingError("release on node " + std::to_string(i) + " exceeds capacity");
    }
    n.cpu_avail_ += cpu;
    n.mem_avail_ += mem;
}

void SubstrateNetwork::reserve_path(std::span<const int> path, Units bw) {
    if (bw < 0) throw std::invalid_argument("bandwidth must be non-negative");
    // A path may not revisit a link, but be strict anyway: count per link.
    for (std::size_t k = 0; k < path.size(); ++k) {
        const auto& l = link(path[k]);
        const auto uses = static_cast<Units>(std::count(path.begin(), path.end(), path[k]));
        if (l.bw_avail < bw * uses) {
            throw PathReservationError("link " + std::to_string(path[k]) + " has " + std::to_string(l.bw_avail) +
                                       " < " + std::to_string(bw) + " available");
        }
    }
    for (int id : path) links_[id].bw_avail -= bw;
}

void SubstrateNetwork::release_path(std::span<const int> path, Units bw) {
    if (bw < 0) throw std::invalid_argument("bandwidth must be non-negative");
    for (std::size_t k = 0; k < path.size(); ++k) {
        const auto& l = link(path[k]);
        const auto uses = static_cast<Units>(std::count(path.begin(), path.end(), path[k]));
        if (l.bw_avail + bw * uses > l.bw_capacity) {
            throw AccountingError("bandwidth release on link " + std::to_string(path[k]) + " exceeds capacity");
        }
    }
    for (int id : path) links_[id].bw_avail += bw;
}

bool SubstrateNetwork::is_connected() const {
    if (nodes_.size() <= 1) return true;
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (const auto& adj : adjacency_[u]) {
            if (!seen[adj.neighbor]) {
                seen[adj.neighbor] = 1;
                ++reached;
                stack.push_back(adj.neighbor);
            }
        }
    }
    return reached == nodes_.size();
}

Units SubstrateNetwork::total_cpu_capacity() const noexcept {
    Units total = 0;
    for (const auto& n : nodes_) total += n.cpu_capacity();
    return total;
}

Units SubstrateNetwork::total_mem_capacity() const noexcept {
    Units total = 0;
    for (const auto& n : nodes_) total += n.mem_capacity();
    return total;
}

Units SubstrateNetwork::total_cpu_allocated() const noexcept {
    Units total = 0;
    for (const auto& n : nodes_) total += n.cpu_allocated();
    return total;
}

Units SubstrateNetwork::total_mem_allocated() const noexcept {
    Units total = 0;
    for (const auto& n : nodes_) total += n.mem_allocated();
    return total;
}

bool SubstrateNetwork::operator==(const SubstrateNetwork& other) const {
    return nodes_ == other.nodes_ && links_ == other.links_;
}

void SubstrateNetwork::write(std::ostream& out) const {
    out << "nodes " << nodes_.size() << '\n';
    for (const auto& n : nodes_) {
        out << "node " << n.id() << ' ' << n.cpu_capacity() << ' ' << n.mem_capacity() << ' ' << n.clock_avail()
            << ' ' << to_string(n.kind()) << '\n';
    }
    for (const auto& l : links_) out << "link " << l.a << ' ' << l.b << ' ' << l.bw_capacity << '\n';
}

std::string SubstrateNetwork::to_text() const {
    std::ostringstream out;
    write(out);
    return out.str();
}

SubstrateNetwork SubstrateNetwork::read(std::istream& in) {
    SubstrateNetwork net;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> declared;
    auto fail = [&](const std::string& why) {
        throw FormatError("substrate line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string tag;
        fields >> tag;
        if (tag == "nodes") {
            std::size_t m = 0;
            if (declared || !(fields >> m)) fail("bad or repeated 'nodes' header");
            declared = m;
        } else if (tag == "node") {
            int id = 0;
            Units cpu = 0, mem = 0, clock = 0;
            std::string kind;
            if (!declared) fail("'node' before 'nodes' header");
            if (!(fields >> id >> cpu >> mem >> clock >> kind)) fail("expected 'node <id> <cpu> <mem> <clock> <kind>'");
            if (id != static_cast<int>(net.node_count())) fail("node ids must be dense and ordered");
            net.add_node(cpu, mem, clock, parse_node_kind(kind));
        } else if (tag == "link") {
            int i = 0, j = 0;
            Units bw = 0;
            if (!(fields >> i >> j >> bw)) fail("expected 'link <i> <j> <bw>'");
            try {
                net.add_link(i, j, bw);
            } catch (const std::exception& e) {
                fail(e.what());
            }
        } else {
            fail("unknown record '" + tag + "'");
        }
        std::string extra;
        if (fields >> extra) fail("trailing fields");
    }
    if (!declared) throw FormatError("substrate: missing 'nodes' header");
    if (*declared != net.node_count()) throw FormatError("substrate: node count does not match header");
    return net;
}

SubstrateNetwork SubstrateNetwork::from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    return read(in);
}

}  // namespace muvine
