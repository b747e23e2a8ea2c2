#pragma once

#include "muvine/substrate.hpp"
#include "muvine/virtual_network.hpp"

#include <vector>

namespace muvine::testing {

inline VirtualMachine make_vm(int id, Units cpu, Units mem, VmClass cls = VmClass::Class3) {
    VirtualMachine vm;
    vm.id = id;
    vm.cpu_demand = cpu;
    vm.mem_demand = mem;
    vm.vm_class = cls;
    vm.priority = priority_of(cls);
    return vm;
}

inline VnRequest single_vm_vn(int id, Units cpu, Units mem) { return VnRequest(id, 0.0, {make_vm(0, cpu, mem)}, {}); }

/// Two nodes (14 cpu, 150 mem) and (12 cpu, 150 mem) joined by one link.
inline SubstrateNetwork two_node_substrate() {
    SubstrateNetwork net;
    net.add_node(14, 150, 2000, NodeKind::CpuRich);
    net.add_node(12, 150, 2000, NodeKind::CpuRich);
    net.add_link(0, 1, 1000);
    return net;
}

/// Single-VM requests VN1 to VN4 of the two-node motivating workload.
inline std::vector<VnRequest> motivating_vns() {
    return {single_vm_vn(1, 5, 20), single_vm_vn(2, 3, 65), single_vm_vn(3, 5, 13), single_vm_vn(4, 2, 83)};
}

/// Nodes 0..2 on a line: 0-1 with bandwidth `a`, 1-2 with bandwidth `b`.
inline SubstrateNetwork line_substrate(Units a, Units b) {
    SubstrateNetwork net;
    for (int i = 0; i < 3; ++i) net.add_node(10, 100, 2000, NodeKind::CpuRich);
    net.add_link(0, 1, a);
    net.add_link(1, 2, b);
    return net;
}

}  // namespace muvine::testing
