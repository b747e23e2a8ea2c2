#pragma once

#include "muvine/embedder.hpp"
#include "muvine/metrics.hpp"
#include "muvine/substrate.hpp"
#include "muvine/virtual_network.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace muvine {

struct OracleParams {
    std::uint64_t seed = 1;
    int instances = 50;
    int max_vms = 3;
    int max_nodes = 4;
    /// Learning episodes on separately drawn instances before the greedy run.
    int warmup_episodes = 2000;
    /// Nodes start with a uniform random load of up to this fraction.
    double max_preload = 0.6;
    SarsaParams sarsa;
};

struct OracleInstance {
    SubstrateNetwork net;
    VnRequest vn;
};

struct OracleRow {
    int instance = 0;
    int vms = 0;
    int nodes = 0;
    double optimum = 0.0;
    double agent = 0.0;   // 0 when the agent rejected the VN
    double greedy = 0.0;  // 0 when greedy rejected the VN

    [[nodiscard]] double agent_ratio() const noexcept { return agent / optimum; }
    [[nodiscard]] double greedy_ratio() const noexcept { return greedy / optimum; }
};

struct OracleSummary {
    std::vector<OracleRow> rows;
    double mean_agent_ratio = 0.0;
    double mean_greedy_ratio = 0.0;
};

/// A random instance the brute-force enumerator can embed, drawn from `rng`.
OracleInstance draw_oracle_instance(Rng& rng, const OracleParams& params, int id);

/// Trains an agent on warm-up instances, then compares its greedy embedding
/// and the greedy best-fit baseline against the enumerated optimum.
OracleSummary run_oracle(const OracleParams& params);

/// Header `instance,vms,nodes,optimum,agent,greedy,agent_ratio,greedy_ratio`.
void write_oracle_csv(std::ostream& out, const OracleSummary& summary);

}  // namespace muvine
