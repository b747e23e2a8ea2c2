#pragma once

#include "muvine/metrics.hpp"
#include "muvine/rng.hpp"
#include "muvine/substrate.hpp"
#include "muvine/virtual_network.hpp"
#include "muvine/workload.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace muvine {

/// CPU/memory actually reserved for one VM.
struct Reservation {
    Units cpu = 0;
    Units mem = 0;
};

std::vector<Reservation> full_demand_reservations(const VnRequest& vn);

/// VM indices, largest first by cpu/max_cpu + mem/max_mem within the VN;
/// ties keep the lower index first.
std::vector<int> vm_processing_order(const VnRequest& vn);

// ---------------------------------------------------------------------------
// Rewards

/// Whether the chosen node covered the VM's full demand per resource at
/// placement time.
struct PlacementOutcome {
    bool cpu_ok = false;
    bool mem_ok = false;
    bool net_ok = false;
};

struct RewardBreakdown {
    double type_component = 0.0;  // +0.5 on a kind match, else 0 (or -0.5 when penalized)
    double cpu = 0.0;             // +-1/6
    double mem = 0.0;
    double net = 0.0;

    [[nodiscard]] double total() const noexcept { return type_component + cpu + mem + net; }
};

inline constexpr double kTypeReward = 0.5;
inline constexpr double kResourceReward = 1.0 / 6.0;

RewardBreakdown compute_reward(VmType vm_type, NodeKind node_kind, PlacementOutcome outcome,
                               bool penalize_type_mismatch = false);

/// Outcome of placing VM `vm` on `node` given the current availabilities:
/// CPU and memory availability against the full demand, the node's best
/// incident link against the VM's summed virtual-link demand.
PlacementOutcome assess_placement(const SubstrateNetwork& net, const VnRequest& vn, int vm, int node);

// ---------------------------------------------------------------------------
// SARSA

struct SarsaParams {
    int q_levels = 4;
    int position_cap = 3;
    double alpha = 0.1;
    double gamma = 0.9;
    double epsilon_start = 0.3;
    double epsilon_decay = 0.999;
    double epsilon_floor = 0.01;
    bool penalize_type_mismatch = false;
    /// Weight of the marginal placement objective added to Q when ranking
    /// candidate nodes; 0 ranks purely by Q with node index as tie-break.
    double objective_blend = 4.0;
    ObjectiveWeights weights;

    /// Throws ConfigError.
    void validate() const;
};

/// floor(fraction * levels), clamped to [0, levels-1].
int quantize(double fraction, int levels) noexcept;

struct RlState {
    int vm_type = 0;
    /// Per node kind: quantized aggregate cpu, mem and bandwidth availability.
    std::array<int, 3 * kNodeKindCount> profile{};
    int position = 0;

    [[nodiscard]] std::string key() const;
    /// Type and position only; the fallback row for unvisited profiles.
    [[nodiscard]] std::string coarse_key() const;
    auto operator<=>(const RlState&) const = default;
};

struct ActionClass {
    NodeKind kind = NodeKind::CpuRich;
    int bucket = 0;  // quantized min(cpu, mem) availability of the node

    [[nodiscard]] std::string key() const;
    /// Node kind only, shared by all buckets of the kind.
    [[nodiscard]] std::string kind_key() const;
    auto operator<=>(const ActionClass&) const = default;
};

RlState encode_state(const SubstrateNetwork& net, VmType vm_type, int position, const SarsaParams& params);
ActionClass action_class_of(const SubstrateNetwork& net, int node, int q_levels);

class QTable {
public:
    /// Missing entries read as 0.
    [[nodiscard]] double get(const std::string& state, const std::string& action) const;
    [[nodiscard]] std::optional<double> find(const std::string& state, const std::string& action) const;
    void set(const std::string& state, const std::string& action, double q);
    [[nodiscard]] std::size_t size() const noexcept { return entries_; }

    void write(std::ostream& out) const;
    static QTable read(std::istream& in);

    bool operator==(const QTable&) const = default;

private:
    std::map<std::string, std::map<std::string, double>> q_;
    std::size_t entries_ = 0;
};

struct Transition {
    std::string state;
    std::string action;
};

/// Q(s,a) += alpha (r + gamma Q(s',a') - Q(s,a)); a terminal step passes no
/// successor and uses 0. Returns the new value.
double sarsa_update(QTable& q, const Transition& current, double reward, const std::optional<Transition>& next,
                    double alpha, double gamma);

struct EpisodeResult {
    std::optional<Embedding> embedding;
    std::vector<RewardBreakdown> rewards;  // in placement order
    std::string failure;

    [[nodiscard]] bool accepted() const noexcept { return embedding.has_value(); }
    [[nodiscard]] double mean_reward() const noexcept;
};

class SarsaAgent {
public:
    explicit SarsaAgent(SarsaParams params = {}, std::uint64_t seed = 1);
    SarsaAgent(SarsaParams params, QTable table);

    /// Q values are kept at three levels: full state and action class, coarse
    /// state (type and position) and action class, coarse state and node
    /// kind. Ranking uses the most specific level present; a new entry starts
    /// from the next level down. All levels learn from every step.
    ///
    /// One episode = one VN. On success the substrate keeps the allocations
    /// and path reservations; on failure it is left exactly as it was. With
    /// `learn` set the policy is epsilon-greedy and the table is updated;
    /// otherwise the greedy policy is used and nothing changes.
    EpisodeResult embed(SubstrateNetwork& net, const VnRequest& vn, std::span<const VmType> vm_types,
                        std::span<const Reservation> reservations, bool learn);
    EpisodeResult embed(SubstrateNetwork& net, const VnRequest& vn, std::span<const VmType> vm_types, bool learn);

    [[nodiscard]] const QTable& table() const noexcept { return table_; }
    [[nodiscard]] const SarsaParams& params() const noexcept { return params_; }
    [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
    [[nodiscard]] std::size_t episodes() const noexcept { return episodes_; }

private:
    SarsaParams params_;
    QTable table_;
    Rng rng_;
    double epsilon_;
    std::size_t episodes_ = 0;
};

// ---------------------------------------------------------------------------
// Baselines

enum class BaselineStrategy { Random, FirstFit, GreedyBestFit, BruteForce };

std::string_view to_string(BaselineStrategy s);
BaselineStrategy parse_baseline(std::string_view text);

inline constexpr std::size_t kBruteForceMaxVms = 4;
inline constexpr std::size_t kBruteForceMaxNodes = 5;

/// Place VMs by the named rule, then map virtual links. `vm_types` may be
/// empty, in which case no rewards are reported. Random needs `rng`.
/// BruteForce throws std::invalid_argument beyond 4 VMs or 5 nodes.
EpisodeResult embed_vn_baseline(BaselineStrategy strategy, SubstrateNetwork& net, const VnRequest& vn,
                                std::span<const VmType> vm_types, std::span<const Reservation> reservations,
                                Rng* rng = nullptr, const ObjectiveWeights& weights = {});
EpisodeResult embed_vn_baseline(BaselineStrategy strategy, SubstrateNetwork& net, const VnRequest& vn,
                                Rng* rng = nullptr);

/// Reserve a shortest feasible path for every inter-node virtual link of
/// `emb` (in link order) and record it. On failure nothing stays reserved and
/// false is returned.
bool map_virtual_links(SubstrateNetwork& net, const VnRequest& vn, Embedding& emb);

}  // namespace muvine
