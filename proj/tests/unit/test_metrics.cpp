#include "fixtures.hpp"

#include "muvine/embedder.hpp"
#include "muvine/metrics.hpp"
#include "muvine/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace muvine;
using namespace muvine::testing;

namespace {

/// Straight transcription of the objective, written apart from the library.
double naive_objective(const ObjectiveWeights& w, const SubstrateNetwork& before, const VnRequest& vn,
                       const Embedding& e) {
    const double m = static_cast<double>(before.node_count());
    double first = 0.0;
    for (const auto& p : e.placements) {
        const auto& n = before.node(p.node);
        const auto& vm = vn.vm(p.vm);
        const double cpu_used = static_cast<double>(n.cpu_capacity() - n.cpu_avail() + vm.cpu_demand);
        const double mem_used = static_cast<double>(n.mem_capacity() - n.mem_avail() + vm.mem_demand);
        first += w.cpu * cpu_used / static_cast<double>(n.cpu_capacity()) / m;
        first += w.mem * mem_used / static_cast<double>(n.mem_capacity()) / m;
    }
    double second = 0.0;
    for (const auto& vl : vn.vlinks()) {
        const int a = *e.node_of(vl.a), b = *e.node_of(vl.b);
        if (a == b) {
            second += 2.0 * w.net;
            continue;
        }
        second += w.net / static_cast<double>(before.shortest_feasible_path(a, b, vl.bw_demand)->hops());
    }
    return first + second;
}

SubstrateNetwork square() {
    SubstrateNetwork net;
    for (int i = 0; i < 4; ++i) net.add_node(12, 1200, 2000, NodeKind::CpuRich);
    net.add_link(0, 1, 800);
    net.add_link(1, 2, 800);
    net.add_link(2, 3, 800);
    return net;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("objective hand evaluation") {
    SubstrateNetwork net;
    net.add_node(10, 100, 2000, NodeKind::CpuRich);
    const auto vn = single_vm_vn(0, 5, 20);
    Embedding e;
    e.placements.push_back(full_demand_placement(vn, 0, 0));
    CHECK(objective_value(ObjectiveWeights{0.4, 0.4, 0.2}, net, vn, e) == doctest::Approx(0.28));
    CHECK(objective_value(ObjectiveWeights{}, net, VnRequest{}, Embedding{}) == 0.0);
}

TEST_CASE("objective agrees with an independent evaluator") {
    Rng rng(77);
    std::uniform_int_distribution<int> node(0, 3);
    std::uniform_int_distribution<Units> cpu(1, 4), mem(50, 400), bw(10, 500);
    const ObjectiveWeights w{0.3, 0.5, 0.2};
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        auto net = square();
        net.allocate(node(rng), cpu(rng), mem(rng));
        const VnRequest vn(0, 0.0, {make_vm(0, cpu(rng), mem(rng)), make_vm(1, cpu(rng), mem(rng)), make_vm(2, cpu(rng), mem(rng))},
                           {{0, 1, bw(rng)}, {1, 2, bw(rng)}});
        Embedding e;
        for (int j = 0; j < 3; ++j) e.placements.push_back(full_demand_placement(vn, j, node(rng)));
        if (!map_virtual_links(net, vn, e)) continue;
        for (const auto& [link, path] : e.link_paths) net.release_path(path, vn.vlinks()[static_cast<std::size_t>(link)].bw_demand);
        if (!validate_embedding(vn, e, net).empty()) continue;
        ++checked;
        CHECK(objective_value(w, net, vn, e) == doctest::Approx(naive_objective(w, net, vn, e)).epsilon(1e-9));
    }
    CHECK(checked > 50);
}

TEST_CASE("objective grows with demand") {
    SubstrateNetwork net;
    net.add_node(10, 1000, 2000, NodeKind::CpuRich);
    const ObjectiveWeights w;
    double prev = -1.0;
    for (Units c = 1; c <= 10; ++c) {
        const auto vn = single_vm_vn(0, c, 100);
        Embedding e;
        e.placements.push_back(full_demand_placement(vn, 0, 0));
        const double v = objective_value(w, net, vn, e);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("constraint report") {
    const auto vns = motivating_vns();
    const auto net = two_node_substrate();
    Embedding e;
    e.placements.push_back(full_demand_placement(vns[0], 0, 0));
    CHECK(check_constraints(vns[0], e, net).all_passed());

    const auto bad_w = check_constraints(vns[0], e, net, ObjectiveWeights{0.5, 0.5, 0.5});
    CHECK_FALSE(bad_w.get(Constraint::WeightsSumToOne).passed);

    const auto huge = single_vm_vn(0, 50, 20);
    Embedding he;
    he.placements.push_back(full_demand_placement(huge, 0, 0));
    const auto r = check_constraints(huge, he, net);
    CHECK_FALSE(r.get(Constraint::FeasibleDemand).passed);
    CHECK_FALSE(r.get(Constraint::FeasibleDemand).witnesses.empty());
}

TEST_CASE("constraint report matches validation") {
    Rng rng(5);
    std::uniform_int_distribution<int> node(0, 1);
    std::uniform_int_distribution<Units> cpu(1, 16), mem(10, 200);
    for (int trial = 0; trial < 200; ++trial) {
        const auto net = two_node_substrate();
        const VnRequest vn(0, 0.0, {make_vm(0, cpu(rng), mem(rng)), make_vm(1, cpu(rng), mem(rng))}, {{0, 1, 100}});
        Embedding e;
        for (int j = 0; j < 2; ++j) e.placements.push_back(full_demand_placement(vn, j, node(rng)));
        if (*e.node_of(0) != *e.node_of(1)) e.link_paths[0] = {0};
        CHECK(check_constraints(vn, e, net).all_passed() == validate_embedding(vn, e, net).empty());
    }
}

TEST_CASE("utilization") {
    const auto idle = node_utilization(two_node_substrate());
    for (double u : idle.cpu) CHECK(u == 0.0);

    auto net = two_node_substrate();
    const auto vns = motivating_vns();
    const std::vector<int> uneven{0, 1, 0, 1};
    for (std::size_t k = 0; k < vns.size(); ++k) {
        Embedding e;
        e.placements.push_back(full_demand_placement(vns[k], 0, uneven[k]));
        apply_embedding(net, vns[k], e);
    }
    const auto u = node_utilization(net);
    CHECK(100.0 * u.cpu[0] == doctest::Approx(71.4).epsilon(0.002));
    CHECK(100.0 * u.cpu[1] == doctest::Approx(41.6).epsilon(0.003));
    CHECK(100.0 * u.mem[0] == doctest::Approx(22.0).epsilon(0.005));
    CHECK(100.0 * u.mem[1] == doctest::Approx(98.6).epsilon(0.002));
}

TEST_CASE("run statistics") {
    CHECK_THROWS_AS(acceptance_and_allocation_stats(RunLog{}), std::invalid_argument);

    RunLog log;
    log.cpu_capacity = 100;
    log.mem_capacity = 1000;
    auto arrival = [&](double t, Units cpu, Units alloc) {
        LogEntry e;
        e.time = t;
        e.accepted = true;
        e.demand_cpu = cpu;
        e.demand_mem = 10 * cpu;
        e.alloc_cpu = alloc;
        e.alloc_mem = 10 * alloc;
        const Units prev = log.entries.empty() ? 0 : log.entries.back().total_cpu_allocated;
        e.total_cpu_allocated = prev + alloc;
        e.total_mem_allocated = 10 * (prev + alloc);
        log.entries.push_back(e);
    };
    arrival(0.0, 10, 10);
    arrival(10.0, 20, 20);
    const auto exact = acceptance_and_allocation_stats(log);
    CHECK(exact.acceptance_rate == 1.0);
    CHECK(exact.alloc_fraction == 1.0);

    arrival(20.0, 10, 5);
    const auto scaled = acceptance_and_allocation_stats(log);
    CHECK(scaled.alloc_fraction < 1.0);
    CHECK(prefix_log(log, 2).entries.size() == 2);
    CHECK(acceptance_and_allocation_stats(prefix_log(log, 2)).alloc_fraction == 1.0);

    const auto series = utilization_series(log);
    CHECK(series.cpu_mean == doctest::Approx(0.2));

    std::stringstream csv;
    write_metrics_csv(csv, log, 10.0);
    CHECK(csv.str().find('\n') != std::string::npos);
}

TEST_CASE("simulation keeps the books") {
    SubstrateNetwork net;
    net.add_node(6, 600, 2000, NodeKind::CpuRich);
    std::vector<VnRequest> stream;
    stream.emplace_back(0, 0.0, std::vector<VirtualMachine>{make_vm(0, 4, 100)}, std::vector<VirtualLink>{}, 5.0);
    stream.emplace_back(1, 1.0, std::vector<VirtualMachine>{make_vm(0, 4, 100)}, std::vector<VirtualLink>{}, 2.0);
    stream.emplace_back(2, 6.0, std::vector<VirtualMachine>{make_vm(0, 4, 100)}, std::vector<VirtualLink>{}, 9.0);
    stream.emplace_back(3, 7.0, std::vector<VirtualMachine>{make_vm(0, 1, 100)}, std::vector<VirtualLink>{}, 50.0);
    SimulationOptions opt;
    opt.verify_embeddings = true;
    const auto sim = simulate(
        net, stream,
        [](SubstrateNetwork& live, const VnRequest& vn) {
            ArrivalOutcome out;
            out.episode = embed_vn_baseline(BaselineStrategy::FirstFit, live, vn);
            return out;
        },
        opt);
    CHECK(sim.accepted[0] == true);
    CHECK(sim.accepted[1] == false);
    CHECK(sim.accepted[2] == true);
    CHECK(sim.accepted[3] == true);
    double prev = 0.0;
    for (const auto& e : sim.log.entries) {
        CHECK(e.time >= prev);
        prev = e.time;
    }
    CHECK(sim.final_state.node(0).cpu_avail() == 1);
    CHECK(sim.assertions > 0);

    CHECK(SimEvent{1.0, EventKind::Departure, 5} < SimEvent{1.0, EventKind::Arrival, 0});
    CHECK(SimEvent{1.0, EventKind::Arrival, 0} < SimEvent{1.0, EventKind::Arrival, 1});
}

TEST_CASE("trailing reward counts recent arrivals") {
    SimulationResult r;
    r.episode_rewards = {0.0, 1.0, 0.5};
    r.episode_arrivals = {0, 5, 9};
    CHECK(trailing_episode_reward(r, 10, 5) == doctest::Approx(0.75));
    CHECK(trailing_episode_reward(r, 10, 100) == doctest::Approx(0.5));
}

}  // TEST_SUITE
