#include "fixtures.hpp"

#include "muvine/error.hpp"
#include "muvine/metrics.hpp"

#include <doctest.h>

#include <algorithm>

using namespace muvine;
using namespace muvine::testing;

namespace {

bool has(const std::vector<Violation>& v, Constraint c) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.constraint == c; });
}

}  // namespace

TEST_SUITE("virtual_network") {

TEST_CASE("per-VM bandwidth demand sums incident links") {
    const VnRequest pair(0, 0.0, {make_vm(0, 1, 500), make_vm(1, 1, 500), make_vm(2, 1, 500)},
                         {{0, 1, 100}, {0, 2, 250}});
    CHECK(pair.vm_bandwidth_demand(0) == 350);

    const VnRequest lone(0, 0.0, {make_vm(0, 1, 500)}, {});
    CHECK(lone.vm_bandwidth_demand(0) == 0);

    const VnRequest triangle(0, 0.0, {make_vm(0, 1, 500), make_vm(1, 1, 500), make_vm(2, 1, 500)},
                             {{0, 1, 100}, {1, 2, 100}, {0, 2, 100}});
    for (int j = 0; j < 3; ++j) CHECK(triangle.vm_bandwidth_demand(j) == 200);
}

TEST_CASE("VN class is the strictest member class") {
    auto cls = [](std::vector<VmClass> classes) {
        std::vector<VirtualMachine> vms;
        for (std::size_t k = 0; k < classes.size(); ++k) vms.push_back(make_vm(static_cast<int>(k), 1, 1, classes[k]));
        return derive_vn_class(vms);
    };
    CHECK(cls({VmClass::Class3, VmClass::Class3}) == std::pair{VmClass::Class3, 1});
    CHECK(cls({VmClass::Class1, VmClass::Class3}) == std::pair{VmClass::Class1, 3});
    CHECK(cls({VmClass::Class3, VmClass::Class1}) == std::pair{VmClass::Class1, 3});
    CHECK(cls({VmClass::Class2}) == std::pair{VmClass::Class2, 2});
    CHECK_THROWS_AS(derive_vn_class({}), std::invalid_argument);
}

TEST_CASE("aggregates match the members") {
    const VnRequest vn(3, 1.5, {make_vm(0, 1, 500), make_vm(1, 2, 600, VmClass::Class2)}, {{0, 1, 40}});
    CHECK(vn.agg_cpu() == 3);
    CHECK(vn.agg_mem() == 1100);
    CHECK(vn.total_link_demand() == 40);
    CHECK(vn.vn_class() == VmClass::Class2);
    CHECK(vn.priority() == 2);
}

TEST_CASE("malformed requests are rejected") {
    CHECK_THROWS_AS(VnRequest(0, 0.0, {make_vm(1, 1, 1)}, {}), std::invalid_argument);
    CHECK_THROWS_AS(VnRequest(0, 0.0, {make_vm(0, 0, 1)}, {}), std::invalid_argument);
    CHECK_THROWS_AS(VnRequest(0, 0.0, {make_vm(0, 1, 1), make_vm(1, 1, 1)}, {{0, 0, 5}}), std::invalid_argument);
    CHECK_THROWS_AS(VnRequest(0, 0.0, {make_vm(0, 1, 1), make_vm(1, 1, 1)}, {{0, 1, 0}}), std::invalid_argument);
}

TEST_CASE("validate_embedding") {
    const auto vns = motivating_vns();
    auto net = two_node_substrate();
    const std::vector<int> even{0, 0, 1, 1};
    for (std::size_t k = 0; k < vns.size(); ++k) {
        Embedding e;
        e.placements.push_back(full_demand_placement(vns[k], 0, even[k]));
        CHECK(validate_embedding(vns[k], e, net).empty());
        CHECK(check_constraints(vns[k], e, net).all_passed());
        apply_embedding(net, vns[k], e);
    }

    const auto fresh = two_node_substrate();
    Embedding twice;
    twice.placements.push_back(full_demand_placement(vns[0], 0, 0));
    twice.placements.push_back(full_demand_placement(vns[0], 0, 1));
    CHECK(has(validate_embedding(vns[0], twice, fresh), Constraint::OneToOne));

    SubstrateNetwork small;
    small.add_node(5, 100, 2000, NodeKind::CpuRich);
    const auto big = single_vm_vn(0, 6, 10);
    Embedding over;
    over.placements.push_back(full_demand_placement(big, 0, 0));
    CHECK(has(validate_embedding(big, over, small), Constraint::DemandFits));
}

TEST_CASE("a valid embedding replays without error") {
    auto net = line_substrate(500, 500);
    const VnRequest vn(0, 0.0, {make_vm(0, 2, 30), make_vm(1, 3, 40)}, {{0, 1, 100}});
    Embedding e;
    e.placements.push_back(full_demand_placement(vn, 0, 0));
    e.placements.push_back(full_demand_placement(vn, 1, 2));
    e.link_paths[0] = {0, 1};
    REQUIRE(validate_embedding(vn, e, net).empty());
    const auto before = net;
    apply_embedding(net, vn, e);
    CHECK(net.link(0).bw_avail == 400);
    CHECK(net.node(2).cpu_avail() == 7);
    release_embedding(net, vn, e);
    CHECK(net == before);
}

TEST_CASE("stream text round trip keeps the arrival-time view") {
    VirtualMachine a = make_vm(0, 2, 700, VmClass::Class1);
    a.actual_cpu = 1.25;
    a.actual_mem = 512.5;
    a.gpu_affinity = 0.3;
    const std::vector<VnRequest> stream{VnRequest(0, 0.5, {a, make_vm(1, 1, 600)}, {{0, 1, 120}}, 42.0),
                                        VnRequest(1, 3.0, {make_vm(0, 4, 4000)}, {})};
    const auto text = vn_stream_to_text(stream);
    const auto back = vn_stream_from_text(text);
    REQUIRE(back.size() == 2);
    CHECK(vn_stream_to_text(back) == text);
    CHECK(back[0].start() == 0.5);
    CHECK(back[0].vm(0).vm_class == VmClass::Class1);
    CHECK(back[0].vlinks().size() == 1);
    // End times and observed usage travel in the labeled trace instead.
    CHECK_FALSE(back[0].end());
    CHECK_FALSE(back[0].vm(0).actual_cpu);
    CHECK_THROWS_AS(vn_stream_from_text("vn x\n"), FormatError);
}

}  // TEST_SUITE
