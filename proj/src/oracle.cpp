#include "muvine/oracle.hpp"

#include "muvine/error.hpp"
#include "muvine/io_util.hpp"
#include "muvine/workload.hpp"

#include <ostream>
#include <random>

namespace muvine {

namespace {

WorkloadConfig tiny_config(std::uint64_t seed, int nodes, int vms) {
    WorkloadConfig cfg;
    cfg.seed = seed;
    cfg.sn_count = nodes;
    cfg.vn_count = 1;
    cfg.vms_per_vn = {1, vms};
    cfg.unexpired_fraction = 0.0;
    return cfg;
}

void preload(SubstrateNetwork& net, Rng& rng, double max_fraction) {
    std::uniform_real_distribution<double> frac(0.0, max_fraction);
    for (int i = 0; i < static_cast<int>(net.nodes().size()); ++i) {
        const auto& node = net.node(i);
        const auto cpu = static_cast<Units>(std::floor(frac(rng) * static_cast<double>(node.cpu_capacity())));
        const auto mem = static_cast<Units>(std::floor(frac(rng) * static_cast<double>(node.mem_capacity())));
        net.allocate(i, cpu, mem);
    }
}

std::vector<VmType> true_types(const VnRequest& vn, const WorkloadConfig& cfg) {
    std::vector<VmType> types;
    for (const auto& vm : vn.vms()) types.push_back(vm_type_label(vm, cfg));
    return types;
}

double mean_of(const std::vector<OracleRow>& rows, double (OracleRow::*ratio)() const noexcept) {
    double sum = 0.0;
    for (const auto& r : rows) sum += (r.*ratio)();
    return rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
}

}  // namespace

OracleInstance draw_oracle_instance(Rng& rng, const OracleParams& params, int id) {
    if (params.max_nodes < 1 || params.max_vms < 1 ||
        static_cast<std::size_t>(params.max_nodes) > kBruteForceMaxNodes ||
        static_cast<std::size_t>(params.max_vms) > kBruteForceMaxVms) {
        throw ConfigError("oracle instance size exceeds the brute-force cap");
    }
    std::uniform_int_distribution<int> node_count(std::min(2, params.max_nodes), params.max_nodes);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const auto cfg = tiny_config(rng(), node_count(rng), params.max_vms);
        auto net = generate_substrate(cfg);
        preload(net, rng, params.max_preload);
        auto stream = generate_vn_stream(cfg);
        const auto& proto = stream.front();
        VnRequest vn(id, 0.0, std::vector<VirtualMachine>(proto.vms().begin(), proto.vms().end()),
                     std::vector<VirtualLink>(proto.vlinks().begin(), proto.vlinks().end()), proto.end());
        auto probe = net;
        if (embed_vn_baseline(BaselineStrategy::BruteForce, probe, vn).accepted()) return {std::move(net), std::move(vn)};
    }
    throw GenerationError("no feasible oracle instance after 1000 draws");
}

OracleSummary run_oracle(const OracleParams& params) {
    if (params.instances < 1) throw ConfigError("oracle needs at least one instance");
    const auto truth_cfg = tiny_config(0, params.max_nodes, params.max_vms);

    SarsaAgent agent(params.sarsa, sub_seed(params.seed, "oracle_agent"));
    Rng warm_rng(sub_seed(params.seed, "oracle_warmup"));
    for (int e = 0; e < params.warmup_episodes; ++e) {
        auto inst = draw_oracle_instance(warm_rng, params, e);
        agent.embed(inst.net, inst.vn, true_types(inst.vn, truth_cfg), true);
    }

    OracleSummary summary;
    Rng rng(sub_seed(params.seed, "oracle_instances"));
    for (int k = 0; k < params.instances; ++k) {
        const auto inst = draw_oracle_instance(rng, params, k);
        const auto types = true_types(inst.vn, truth_cfg);
        OracleRow row;
        row.instance = k;
        row.vms = static_cast<int>(inst.vn.vms().size());
        row.nodes = static_cast<int>(inst.net.nodes().size());

        auto score = [&](const EpisodeResult& r) {
            return r.embedding ? objective_value(params.sarsa.weights, inst.net, inst.vn, *r.embedding) : 0.0;
        };
        auto brute_net = inst.net;
        row.optimum = score(embed_vn_baseline(BaselineStrategy::BruteForce, brute_net, inst.vn, types,
                                              full_demand_reservations(inst.vn), nullptr, params.sarsa.weights));
        auto agent_net = inst.net;
        row.agent = score(agent.embed(agent_net, inst.vn, types, false));
        auto greedy_net = inst.net;
        row.greedy = score(embed_vn_baseline(BaselineStrategy::GreedyBestFit, greedy_net, inst.vn, types,
                                             full_demand_reservations(inst.vn), nullptr, params.sarsa.weights));
        summary.rows.push_back(row);
    }
    summary.mean_agent_ratio = mean_of(summary.rows, &OracleRow::agent_ratio);
    summary.mean_greedy_ratio = mean_of(summary.rows, &OracleRow::greedy_ratio);
    return summary;
}

void write_oracle_csv(std::ostream& out, const OracleSummary& summary) {
    out << "instance,vms,nodes,optimum,agent,greedy,agent_ratio,greedy_ratio\n";
    for (const auto& r : summary.rows) {
        out << r.instance << ',' << r.vms << ',' << r.nodes << ',' << io::format_double(r.optimum) << ','
            << io::format_double(r.agent) << ',' << io::format_double(r.greedy) << ','
            << io::format_double(r.agent_ratio()) << ',' << io::format_double(r.greedy_ratio()) << '\n';
    }
}

}  // namespace muvine
