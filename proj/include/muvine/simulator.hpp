#pragma once

#include "muvine/embedder.hpp"
#include "muvine/metrics.hpp"
#include "muvine/substrate.hpp"
#include "muvine/virtual_network.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace muvine {

struct SimEvent {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    int vn = 0;  // index into the stream

    /// Earlier time first; at equal times departures precede arrivals, then
    /// lower request index.
    friend bool operator<(const SimEvent& a, const SimEvent& b) noexcept;
};

/// What the arrival handler did with one VN.
struct ArrivalOutcome {
    bool admitted = true;
    EpisodeResult episode;
    std::vector<Reservation> reservations;  // per VM, used when accepted
};

using ArrivalHandler = std::function<ArrivalOutcome(SubstrateNetwork& net, const VnRequest& vn)>;

struct SimulationOptions {
    /// Check resource conservation after every event.
    bool check_conservation = true;
    /// Re-validate every accepted embedding against its pre-arrival snapshot.
    bool verify_embeddings = false;
};

struct SimulationResult {
    RunLog log;
    std::vector<std::optional<bool>> accepted;  // per stream index
    std::vector<double> episode_rewards;        // mean reward of every episode that placed a VM
    std::vector<std::size_t> episode_arrivals;  // arrival ordinal of each entry of episode_rewards
    std::size_t assertions = 0;                 // invariant checks performed
    SubstrateNetwork final_state;
};

/// Mean of the episode rewards among the last `window` arrivals.
double trailing_episode_reward(const SimulationResult& result, std::size_t arrivals, std::size_t window);

/// Run the stream through the event loop. Departures are processed only up
/// to the last arrival; requests ending later hold their resources. Throws
/// AccountingError when an invariant check fails.
SimulationResult simulate(SubstrateNetwork net, std::span<const VnRequest> stream, const ArrivalHandler& handler,
                          const SimulationOptions& options = {});

}  // namespace muvine
