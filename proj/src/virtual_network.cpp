#include "muvine/virtual_network.hpp"

#include "muvine/error.hpp"
#include "muvine/io_util.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace muvine {

int priority_of(VmClass c) noexcept {
    switch (c) {
    case VmClass::Class1:
        return 3;
    case VmClass::Class2:
        return 2;
    case VmClass::Class3:
        return 1;
    }
    return 1;
}

VmClass parse_vm_class(int value) {
    if (value < 1 || value > 3) throw FormatError("VM class must be 1, 2 or 3, got " + std::to_string(value));
    return static_cast<VmClass>(value);
}

std::pair<VmClass, int> derive_vn_class(std::span<const VirtualMachine> vms) {
    if (vms.empty()) throw std::invalid_argument("cannot derive the class of an empty VN");
    VmClass strictest = VmClass::Class3;
    for (const auto& vm : vms) strictest = std::min(strictest, vm.vm_class);
    return {strictest, priority_of(strictest)};
}

VnRequest::VnRequest(int id, double start, std::vector<VirtualMachine> vms, std::vector<VirtualLink> vlinks,
                     std::optional<double> end)
    : id_(id), start_(start), end_(end), vms_(std::move(vms)), vlinks_(std::move(vlinks)) {
    const int n = static_cast<int>(vms_.size());
    for (int j = 0; j < n; ++j) {
        const auto& vm = vms_[j];
        if (vm.id != j) throw std::invalid_argument("VM ids must be 0..n-1 in order");
        if (vm.cpu_demand <= 0 || vm.mem_demand <= 0) throw std::invalid_argument("VM demands must be positive");
        if (vm.actual_cpu && (*vm.actual_cpu <= 0.0 || *vm.actual_cpu > static_cast<double>(vm.cpu_demand))) {
            throw std::invalid_argument("actual CPU usage must lie in (0, demand]");
        }
        if (vm.actual_mem && (*vm.actual_mem <= 0.0 || *vm.actual_mem > static_cast<double>(vm.mem_demand))) {
            throw std::invalid_argument("actual memory usage must lie in (0, demand]");
        }
        agg_cpu_ += vm.cpu_demand;
        agg_mem_ += vm.mem_demand;
    }
    std::set<std::pair<int, int>> seen;
    for (auto& vl : vlinks_) {
        if (vl.a < 0 || vl.a >= n || vl.b < 0 || vl.b >= n) throw std::invalid_argument("virtual link endpoint out of range");
        if (vl.a == vl.b) throw std::invalid_argument("virtual link endpoints must be distinct");
        if (vl.bw_demand <= 0) throw std::invalid_argument("virtual link demand must be positive");
        if (!seen.insert({std::min(vl.a, vl.b), std::max(vl.a, vl.b)}).second) {
            throw std::invalid_argument("duplicate virtual link");
        }
    }
    if (!vms_.empty()) std::tie(vn_class_, priority_) = derive_vn_class(vms_);
}

const VirtualMachine& VnRequest::vm(int j) const {
    if (j < 0 || static_cast<std::size_t>(j) >= vms_.size()) {
        throw std::out_of_range("VM index " + std::to_string(j) + " out of range");
    }
    return vms_[j];
}

Units VnRequest::total_link_demand() const noexcept {
    Units total = 0;
    for (const auto& vl : vlinks_) total += vl.bw_demand;
    return total;
}

Units VnRequest::vm_bandwidth_demand(int j) const {
    (void)vm(j);
    Units total = 0;
    for (const auto& vl : vlinks_) {
        if (vl.a == j || vl.b == j) total += vl.bw_demand;
    }
    return total;
}

void VnRequest::write(std::ostream& out) const {
    out << "vn " << id_ << ' ' << static_cast<int>(vn_class_) << ' ' << io::format_double(start_) << '\n';
    for (const auto& vm : vms_) {
        out << "vm " << vm.id << ' ' << vm.cpu_demand << ' ' << vm.mem_demand << ' ' << static_cast<int>(vm.vm_class)
            << '\n';
    }
    for (const auto& vl : vlinks_) out << "vlink " << vl.a << ' ' << vl.b << ' ' << vl.bw_demand << '\n';
}

void write_vn_stream(std::ostream& out, std::span<const VnRequest> stream) {
    for (const auto& vn : stream) vn.write(out);
}

std::string vn_stream_to_text(std::span<const VnRequest> stream) {
    std::ostringstream out;
    write_vn_stream(out, stream);
    return out.str();
}

std::vector<VnRequest> read_vn_stream(std::istream& in) {
    struct Pending {
        int id;
        int declared_class;
        double start;
        std::vector<VirtualMachine> vms;
        std::vector<VirtualLink> vlinks;
    };
    std::vector<VnRequest> out;
    std::optional<Pending> cur;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        throw FormatError("VN stream line " + std::to_string(line_no) + ": " + why);
    };
    auto flush = [&] {
        if (!cur) return;
        try {
            VnRequest vn(cur->id, cur->start, std::move(cur->vms), std::move(cur->vlinks));
            if (vn.vm_count() > 0 && static_cast<int>(vn.vn_class()) != cur->declared_class) {
                fail("declared VN class does not match its VMs");
            }
            out.push_back(std::move(vn));
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
        cur.reset();
    };

    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string tag;
        fields >> tag;
        if (tag == "vn") {
            flush();
            Pending p{};
            if (!(fields >> p.id >> p.declared_class >> p.start)) fail("expected 'vn <id> <class> <start>'");
            cur = std::move(p);
        } else if (tag == "vm") {
            if (!cur) fail("'vm' before 'vn'");
            VirtualMachine vm;
            int cls = 0;
            if (!(fields >> vm.id >> vm.cpu_demand >> vm.mem_demand >> cls)) fail("expected 'vm <id> <cpu> <mem> <class>'");
            vm.vm_class = parse_vm_class(cls);
            vm.priority = priority_of(vm.vm_class);
            vm.start = cur->start;
            cur->vms.push_back(vm);
        } else if (tag == "vlink") {
            if (!cur) fail("'vlink' before 'vn'");
            VirtualLink vl;
            if (!(fields >> vl.a >> vl.b >> vl.bw_demand)) fail("expected 'vlink <i> <j> <bw>'");
            cur->vlinks.push_back(vl);
        } else {
            fail("unknown record '" + tag + "'");
        }
        std::string extra;
        if (fields >> extra) fail("trailing fields");
    }
    flush();
    return out;
}

std::vector<VnRequest> vn_stream_from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    return read_vn_stream(in);
}

std::optional<int> Embedding::node_of(int vm) const {
    std::optional<int> found;
    for (const auto& p : placements) {
        if (p.vm != vm) continue;
        if (found) return std::nullopt;
        found = p.node;
    }
    return found;
}

Placement full_demand_placement(const VnRequest& vn, int vm, int node) {
    const auto& v = vn.vm(vm);
    return {vm, node, v.cpu_demand, v.mem_demand};
}

std::string_view to_string(Constraint c) {
    switch (c) {
    case Constraint::OneToOne:
        return "one_to_one";
    case Constraint::FeasibleDemand:
        return "feasible_demand";
    case Constraint::DemandFits:
        return "demand_fits";
    case Constraint::WeightsSumToOne:
        return "weights_sum_to_one";
    }
    return "?";
}

std::vector<Violation> validate_embedding(const VnRequest& vn, const Embedding& emb, const SubstrateNetwork& net) {
    std::vector<Violation> out;
    const int n = static_cast<int>(vn.vm_count());
    const int m = static_cast<int>(net.node_count());

    std::vector<int> times_placed(n, 0);
    for (const auto& p : emb.placements) {
        if (p.vm < 0 || p.vm >= n) {
            out.push_back({Constraint::OneToOne, "vm " + std::to_string(p.vm), "unknown VM"});
            continue;
        }
        ++times_placed[p.vm];
        if (p.node < 0 || p.node >= m) {
            out.push_back({Constraint::OneToOne, "vm " + std::to_string(p.vm), "unknown node " + std::to_string(p.node)});
        }
    }
    for (int j = 0; j < n; ++j) {
        if (times_placed[j] != 1) {
            out.push_back({Constraint::OneToOne, "vm " + std::to_string(j),
                           "placed on " + std::to_string(times_placed[j]) + " nodes"});
        }
    }

    std::vector<Units> cpu_on(m, 0), mem_on(m, 0);
    for (const auto& p : emb.placements) {
        if (p.vm < 0 || p.vm >= n || p.node < 0 || p.node >= m) continue;
        const auto& vm = vn.vm(p.vm);
        if (p.cpu <= 0 || p.mem <= 0 || p.cpu > vm.cpu_demand || p.mem > vm.mem_demand) {
            out.push_back({Constraint::DemandFits, "vm " + std::to_string(p.vm),
                           "reservation must be positive and at most the demand"});
        }
        cpu_on[p.node] += p.cpu;
        mem_on[p.node] += p.mem;
    }
    for (int i = 0; i < m; ++i) {
        const auto& node = net.node(i);
        if (cpu_on[i] > node.cpu_avail() || mem_on[i] > node.mem_avail()) {
            out.push_back({Constraint::DemandFits, "node " + std::to_string(i),
                           "hosts cpu=" + std::to_string(cpu_on[i]) + " mem=" + std::to_string(mem_on[i]) +
                               " but has cpu=" + std::to_string(node.cpu_avail()) +
                               " mem=" + std::to_string(node.mem_avail())});
        }
    }

    // Link bandwidth: every inter-node virtual link needs a connecting path and
    // the summed demand routed over each substrate link must fit.
    std::vector<Units> bw_on(net.link_count(), 0);
    const auto& vlinks = vn.vlinks();
    for (int k = 0; k < static_cast<int>(vlinks.size()); ++k) {
        const auto& vl = vlinks[k];
        const std::string entity = "vlink " + std::to_string(k);
        const auto na = emb.node_of(vl.a);
        const auto nb = emb.node_of(vl.b);
        if (!na || !nb) continue;  // already reported as a one-to-one violation
        auto it = emb.link_paths.find(k);
        const std::vector<int> empty;
        const auto& path = it == emb.link_paths.end() ? empty : it->second;
        if (*na == *nb) {
            if (!path.empty()) out.push_back({Constraint::DemandFits, entity, "co-located endpoints but non-empty path"});
            continue;
        }
        if (it == emb.link_paths.end() || path.empty()) {
            out.push_back({Constraint::DemandFits, entity, "no substrate path"});
            continue;
        }
        int at = *na;
        bool connected = true;
        for (int id : path) {
            if (id < 0 || static_cast<std::size_t>(id) >= net.link_count()) {
                connected = false;
                break;
            }
            const auto& l = net.link(id);
            if (l.a != at && l.b != at) {
                connected = false;
                break;
            }
            at = l.other(at);
            bw_on[id] += vl.bw_demand;
        }
        if (!connected || at != *nb) out.push_back({Constraint::DemandFits, entity, "path does not connect the hosts"});
    }
    for (std::size_t id = 0; id < bw_on.size(); ++id) {
        if (bw_on[id] > net.link(static_cast<int>(id)).bw_avail) {
            out.push_back({Constraint::DemandFits, "link " + std::to_string(id),
                           "routes " + std::to_string(bw_on[id]) + " but has " +
                               std::to_string(net.link(static_cast<int>(id)).bw_avail)});
        }
    }
    return out;
}

void apply_embedding(SubstrateNetwork& net, const VnRequest& vn, const Embedding& emb) {
    const SubstrateNetwork before = net;
    try {
        for (const auto& p : emb.placements) net.allocate(p.node, p.cpu, p.mem);
        for (const auto& [k, path] : emb.link_paths) net.reserve_path(path, vn.vlinks().at(k).bw_demand);
    } catch (...) {
        net = before;
        throw;
    }
}

void release_embedding(SubstrateNetwork& net, const VnRequest& vn, const Embedding& emb) {
    const SubstrateNetwork before = net;
    try {
        for (const auto& p : emb.placements) net.release(p.node, p.cpu, p.mem);
        for (const auto& [k, path] : emb.link_paths) net.release_path(path, vn.vlinks().at(k).bw_demand);
    } catch (...) {
        net = before;
        throw;
    }
}

}  // namespace muvine
