#include "muvine/embedder.hpp"

#include "muvine/error.hpp"
#include "muvine/io_util.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

namespace muvine {

std::vector<Reservation> full_demand_reservations(const VnRequest& vn) {
    std::vector<Reservation> out;
    out.reserve(vn.vm_count());
    for (const auto& vm : vn.vms()) out.push_back({vm.cpu_demand, vm.mem_demand});
    return out;
}

std::vector<int> vm_processing_order(const VnRequest& vn) {
    Units max_cpu = 1, max_mem = 1;
    for (const auto& vm : vn.vms()) {
        max_cpu = std::max(max_cpu, vm.cpu_demand);
        max_mem = std::max(max_mem, vm.mem_demand);
    }
    std::vector<std::pair<double, int>> keyed;
    for (const auto& vm : vn.vms()) {
        keyed.emplace_back(static_cast<double>(vm.cpu_demand) / static_cast<double>(max_cpu) +
                               static_cast<double>(vm.mem_demand) / static_cast<double>(max_mem),
                           vm.id);
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<int> order;
    for (const auto& [k, id] : keyed) order.push_back(id);
    return order;
}

RewardBreakdown compute_reward(VmType vm_type, NodeKind node_kind, PlacementOutcome outcome,
                               bool penalize_type_mismatch) {
    RewardBreakdown r;
    if (matching_kind(vm_type) == node_kind) {
        r.type_component = kTypeReward;
    } else if (penalize_type_mismatch) {
        r.type_component = -kTypeReward;
    }
    r.cpu = outcome.cpu_ok ? kResourceReward : -kResourceReward;
    r.mem = outcome.mem_ok ? kResourceReward : -kResourceReward;
    r.net = outcome.net_ok ? kResourceReward : -kResourceReward;
    return r;
}

PlacementOutcome assess_placement(const SubstrateNetwork& net, const VnRequest& vn, int vm, int node) {
    const auto& v = vn.vm(vm);
    const auto& n = net.node(node);
    return {n.cpu_avail() >= v.cpu_demand, n.mem_avail() >= v.mem_demand,
            net.node_bandwidth_avail(node) >= vn.vm_bandwidth_demand(vm)};
}

void SarsaParams::validate() const {
    if (q_levels < 1) throw ConfigError("q_levels must be at least 1");
    if (position_cap < 0) throw ConfigError("position_cap must be non-negative");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0,1]");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) throw ConfigError("epsilon_start must lie in [0,1]");
    if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw ConfigError("epsilon_decay must lie in (0,1]");
    if (!(epsilon_floor >= 0.0 && epsilon_floor <= 1.0)) throw ConfigError("epsilon_floor must lie in [0,1]");
    if (!(objective_blend >= 0.0)) throw ConfigError("objective_blend must be non-negative");
    if (!weights.valid()) throw ConfigError("objective weights must be non-negative and sum to 1");
}

int quantize(double fraction, int levels) noexcept {
    if (!(fraction > 0.0)) return 0;
    return std::min(levels - 1, static_cast<int>(std::floor(fraction * levels)));
}

std::string RlState::key() const {
    std::string k = "t" + std::to_string(vm_type) + "/p";
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (i) k += '.';
        k += std::to_string(profile[i]);
    }
    k += "/j" + std::to_string(position);
    return k;
}

std::string RlState::coarse_key() const {
    return "t" + std::to_string(vm_type) + "/j" + std::to_string(position);
}

std::string ActionClass::key() const { return std::string(to_string(kind)) + ":" + std::to_string(bucket); }

std::string ActionClass::kind_key() const { return std::string(to_string(kind)) + ":*"; }

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

/// Per-kind availability sums, kept current while an episode allocates.
struct KindProfile {
    std::array<double, kNodeKindCount> cpu_cap{}, mem_cap{}, cpu_avail{}, mem_avail{}, bw_cap{}, bw_avail{};

    explicit KindProfile(const SubstrateNetwork& net) {
        for (const auto& n : net.nodes()) {
            const auto k = static_cast<std::size_t>(n.kind());
            cpu_cap[k] += static_cast<double>(n.cpu_capacity());
            mem_cap[k] += static_cast<double>(n.mem_capacity());
            cpu_avail[k] += static_cast<double>(n.cpu_avail());
            mem_avail[k] += static_cast<double>(n.mem_avail());
            bw_cap[k] += static_cast<double>(net.node_bandwidth_capacity(n.id()));
            bw_avail[k] += static_cast<double>(net.node_bandwidth_avail(n.id()));
        }
    }

    void consume(NodeKind kind, Units cpu, Units mem) {
        const auto k = static_cast<std::size_t>(kind);
        cpu_avail[k] -= static_cast<double>(cpu);
        mem_avail[k] -= static_cast<double>(mem);
    }

    [[nodiscard]] RlState state(VmType type, int position, const SarsaParams& p) const {
        RlState s;
        s.vm_type = static_cast<int>(type);
        for (std::size_t k = 0; k < static_cast<std::size_t>(kNodeKindCount); ++k) {
            s.profile[3 * k] = quantize(ratio(cpu_avail[k], cpu_cap[k]), p.q_levels);
            s.profile[3 * k + 1] = quantize(ratio(mem_avail[k], mem_cap[k]), p.q_levels);
            s.profile[3 * k + 2] = quantize(ratio(bw_avail[k], bw_cap[k]), p.q_levels);
        }
        s.position = std::min(position, p.position_cap);
        return s;
    }
};

std::vector<int> candidate_nodes(const SubstrateNetwork& net, const Reservation& r) {
    std::vector<int> out;
    for (const auto& n : net.nodes()) {
        if (n.cpu_avail() >= r.cpu && n.mem_avail() >= r.mem) out.push_back(n.id());
    }
    return out;
}

void rollback_nodes(SubstrateNetwork& net, const std::vector<Placement>& placed) {
    for (auto it = placed.rbegin(); it != placed.rend(); ++it) net.release(it->node, it->cpu, it->mem);
}

void check_inputs(const VnRequest& vn, std::span<const VmType> types, std::span<const Reservation> res,
                  bool types_required) {
    if (res.size() != vn.vm_count()) throw std::invalid_argument("one reservation per VM is required");
    if ((types_required || !types.empty()) && types.size() != vn.vm_count()) {
        throw std::invalid_argument("one VM type per VM is required");
    }
}

/// Marginal placement objective of putting one VM on each node, given the
/// VN's already-placed VMs. Mirrors objective_value term by term.
class ObjectiveGain {
public:
    ObjectiveGain(const SubstrateNetwork& net, const VnRequest& vn, const ObjectiveWeights& w)
        : net_(net), vn_(vn), w_(w) {
        for (const auto& n : net.nodes()) {
            pre_cpu_alloc_.push_back(static_cast<double>(n.cpu_allocated()));
            pre_mem_alloc_.push_back(static_cast<double>(n.mem_allocated()));
        }
    }

    double operator()(int vm, int node, const std::vector<int>& node_of_vm) {
        const auto& n = net_.node(node);
        const auto& v = vn_.vm(vm);
        const double m = static_cast<double>(net_.node_count());
        double g = 0.0;
        g += w_.cpu * ratio(pre_cpu_alloc_[node] + static_cast<double>(v.cpu_demand),
                            static_cast<double>(n.cpu_capacity())) / m;
        g += w_.mem * ratio(pre_mem_alloc_[node] + static_cast<double>(v.mem_demand),
                            static_cast<double>(n.mem_capacity())) / m;
        for (const auto& vl : vn_.vlinks()) {
            int other = -1;
            if (vl.a == vm) other = vl.b;
            if (vl.b == vm) other = vl.a;
            if (other < 0 || node_of_vm[other] < 0) continue;
            const int q = node_of_vm[other];
            if (q == node) {
                g += 2.0 * w_.net;
                continue;
            }
            const int h = hops(q, vl.bw_demand)[node];
            if (h > 0) g += w_.net / h;
        }
        return g;
    }

private:
    const std::vector<int>& hops(int src, Units demand) {
        auto key = std::pair{src, demand};
        auto it = hop_cache_.find(key);
        if (it == hop_cache_.end()) it = hop_cache_.emplace(key, net_.feasible_hop_counts(src, demand)).first;
        return it->second;
    }

    const SubstrateNetwork& net_;
    const VnRequest& vn_;
    ObjectiveWeights w_;
    std::vector<double> pre_cpu_alloc_;
    std::vector<double> pre_mem_alloc_;
    std::map<std::pair<int, Units>, std::vector<int>> hop_cache_;
};

Embedding sorted_embedding(std::vector<Placement> placed) {
    std::sort(placed.begin(), placed.end(), [](const Placement& a, const Placement& b) { return a.vm < b.vm; });
    return Embedding{std::move(placed), {}};
}

}  // namespace

RlState encode_state(const SubstrateNetwork& net, VmType vm_type, int position, const SarsaParams& params) {
    return KindProfile(net).state(vm_type, position, params);
}

ActionClass action_class_of(const SubstrateNetwork& net, int node, int q_levels) {
    const auto& n = net.node(node);
    const double cpu = ratio(static_cast<double>(n.cpu_avail()), static_cast<double>(n.cpu_capacity()));
    const double mem = ratio(static_cast<double>(n.mem_avail()), static_cast<double>(n.mem_capacity()));
    return {n.kind(), quantize(std::min(cpu, mem), q_levels)};
}

double QTable::get(const std::string& state, const std::string& action) const {
    auto s = q_.find(state);
    if (s == q_.end()) return 0.0;
    auto a = s->second.find(action);
    return a == s->second.end() ? 0.0 : a->second;
}

std::optional<double> QTable::find(const std::string& state, const std::string& action) const {
    auto s = q_.find(state);
    if (s == q_.end()) return std::nullopt;
    auto a = s->second.find(action);
    if (a == s->second.end()) return std::nullopt;
    return a->second;
}

void QTable::set(const std::string& state, const std::string& action, double q) {
    auto [it, inserted] = q_[state].insert_or_assign(action, q);
    (void)it;
    if (inserted) ++entries_;
}

void QTable::write(std::ostream& out) const {
    out << "qtable " << entries_ << '\n';
    for (const auto& [s, row] : q_) {
        for (const auto& [a, v] : row) out << s << ' ' << a << ' ' << io::format_double(v) << '\n';
    }
}

QTable QTable::read(std::istream& in) {
    std::string tag;
    std::size_t n = 0;
    if (!(in >> tag >> n) || tag != "qtable") throw FormatError("expected 'qtable <entries>' header");
    QTable t;
    for (std::size_t i = 0; i < n; ++i) {
        std::string s, a;
        double v = 0.0;
        if (!(in >> s >> a >> v)) throw FormatError("truncated q-table");
        t.set(s, a, v);
    }
    if (t.size() != n) throw FormatError("q-table has duplicate rows");
    return t;
}

double sarsa_update(QTable& q, const Transition& current, double reward, const std::optional<Transition>& next,
                    double alpha, double gamma) {
    const double old = q.get(current.state, current.action);
    const double future = next ? q.get(next->state, next->action) : 0.0;
    const double updated = old + alpha * (reward + gamma * future - old);
    q.set(current.state, current.action, updated);
    return updated;
}

double EpisodeResult::mean_reward() const noexcept {
    if (rewards.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : rewards) s += r.total();
    return s / static_cast<double>(rewards.size());
}

bool map_virtual_links(SubstrateNetwork& net, const VnRequest& vn, Embedding& emb) {
    std::vector<std::pair<std::vector<int>, Units>> reserved;
    emb.link_paths.clear();
    const auto& vlinks = vn.vlinks();
    for (std::size_t l = 0; l < vlinks.size(); ++l) {
        const auto a = emb.node_of(vlinks[l].a);
        const auto b = emb.node_of(vlinks[l].b);
        if (!a || !b) throw std::invalid_argument("virtual link endpoint is not placed");
        if (*a == *b) {
            emb.link_paths[static_cast<int>(l)] = {};
            continue;
        }
        auto path = net.shortest_feasible_path(*a, *b, vlinks[l].bw_demand);
        if (!path) {
            for (auto it = reserved.rbegin(); it != reserved.rend(); ++it) net.release_path(it->first, it->second);
            emb.link_paths.clear();
            return false;
        }
        net.reserve_path(path->links, vlinks[l].bw_demand);
        reserved.emplace_back(path->links, vlinks[l].bw_demand);
        emb.link_paths[static_cast<int>(l)] = std::move(path->links);
    }
    return true;
}

SarsaAgent::SarsaAgent(SarsaParams params, std::uint64_t seed)
    : params_(params), rng_(seed), epsilon_(params.epsilon_start) {
    params_.validate();
}

SarsaAgent::SarsaAgent(SarsaParams params, QTable table)
    : params_(params), table_(std::move(table)), rng_(0), epsilon_(params.epsilon_floor) {
    params_.validate();
}

EpisodeResult SarsaAgent::embed(SubstrateNetwork& net, const VnRequest& vn, std::span<const VmType> vm_types,
                                bool learn) {
    const auto res = full_demand_reservations(vn);
    return embed(net, vn, vm_types, res, learn);
}

EpisodeResult SarsaAgent::embed(SubstrateNetwork& net, const VnRequest& vn, std::span<const VmType> vm_types,
                                std::span<const Reservation> reservations, bool learn) {
    check_inputs(vn, vm_types, reservations, true);
    EpisodeResult result;
    KindProfile profile(net);
    ObjectiveGain gain(net, vn, params_.weights);
    std::vector<int> node_of_vm(vn.vm_count(), -1);
    std::vector<Placement> placed;
    // Backoff levels, most specific first.
    constexpr std::size_t kLevels = 3;
    using Levels = std::array<Transition, kLevels>;
    std::optional<std::pair<Levels, double>> pending;
    const double eps = learn ? epsilon_ : 0.0;

    auto value = [&](const Levels& t, std::size_t from) {
        for (std::size_t l = from; l < kLevels; ++l) {
            if (auto v = table_.find(t[l].state, t[l].action)) return *v;
        }
        return 0.0;
    };
    auto finish_learning = [&] {
        if (!learn) return;
        if (pending) {
            for (const auto& t : pending->first) {
                sarsa_update(table_, t, pending->second, std::nullopt, params_.alpha, params_.gamma);
            }
        }
        ++episodes_;
        epsilon_ = std::max(params_.epsilon_floor, epsilon_ * params_.epsilon_decay);
    };

    const auto order = vm_processing_order(vn);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const int j = order[pos];
        const auto& r = reservations[static_cast<std::size_t>(j)];
        const auto candidates = candidate_nodes(net, r);
        if (candidates.empty()) {
            rollback_nodes(net, placed);
            result.failure = "no feasible node for vm " + std::to_string(j);
            finish_learning();
            return result;
        }
        const auto type = vm_types[static_cast<std::size_t>(j)];
        const RlState rl = profile.state(type, static_cast<int>(pos), params_);
        const std::string state = rl.key();
        const std::string coarse = rl.coarse_key();

        std::vector<Levels> actions;
        std::vector<double> score;
        actions.reserve(candidates.size());
        score.reserve(candidates.size());
        for (int node : candidates) {
            const auto cls = action_class_of(net, node, params_.q_levels);
            actions.push_back({Transition{state, cls.key()}, Transition{coarse, cls.key()},
                               Transition{coarse, cls.kind_key()}});
            const double blend = params_.objective_blend > 0.0 ? params_.objective_blend * gain(j, node, node_of_vm) : 0.0;
            score.push_back(blend);
        }

        std::size_t pick = 0;
        if (eps > 0.0 && std::bernoulli_distribution(eps)(rng_)) {
            // Explore: a uniformly chosen action class, its best member.
            std::vector<std::string> classes;
            for (const auto& a : actions) classes.push_back(a[0].action);
            std::sort(classes.begin(), classes.end());
            classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
            const auto& chosen = classes[std::uniform_int_distribution<std::size_t>(0, classes.size() - 1)(rng_)];
            bool found = false;
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                if (actions[c][0].action != chosen) continue;
                if (!found || score[c] > score[pick]) pick = c;
                found = true;
            }
        } else {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                const double v = value(actions[c], 0) + score[c];
                if (v > best) {
                    best = v;
                    pick = c;
                }
            }
        }
        const int node = candidates[pick];
        const Levels& now = actions[pick];
        if (learn) {
            for (std::size_t l = kLevels - 1; l-- > 0;) {
                if (!table_.find(now[l].state, now[l].action)) table_.set(now[l].state, now[l].action, value(now, l + 1));
            }
            if (pending) {
                for (std::size_t l = 0; l < kLevels; ++l) {
                    sarsa_update(table_, pending->first[l], pending->second, now[l], params_.alpha, params_.gamma);
                }
            }
        }

        const auto reward = compute_reward(type, net.node(node).kind(), assess_placement(net, vn, j, node),
                                           params_.penalize_type_mismatch);
        net.allocate(node, r.cpu, r.mem);
        profile.consume(net.node(node).kind(), r.cpu, r.mem);
        placed.push_back({j, node, r.cpu, r.mem});
        node_of_vm[static_cast<std::size_t>(j)] = node;
        result.rewards.push_back(reward);
        pending = std::pair{now, reward.total()};
    }
    finish_learning();

    Embedding emb = sorted_embedding(placed);
    if (!map_virtual_links(net, vn, emb)) {
        rollback_nodes(net, placed);
        result.failure = "no feasible path for a virtual link";
        return result;
    }
    result.embedding = std::move(emb);
    return result;
}

std::string_view to_string(BaselineStrategy s) {
    switch (s) {
    case BaselineStrategy::Random:
        return "random";
    case BaselineStrategy::FirstFit:
        return "first_fit";
    case BaselineStrategy::GreedyBestFit:
        return "greedy_best_fit";
    case BaselineStrategy::BruteForce:
        return "brute_force";
    }
    return "?";
}

BaselineStrategy parse_baseline(std::string_view text) {
    for (auto s : {BaselineStrategy::Random, BaselineStrategy::FirstFit, BaselineStrategy::GreedyBestFit,
                   BaselineStrategy::BruteForce}) {
        if (to_string(s) == text) return s;
    }
    throw ConfigError("unknown embedder '" + std::string(text) + "'");
}

namespace {

EpisodeResult brute_force(SubstrateNetwork& net, const VnRequest& vn, std::span<const VmType> types,
                          std::span<const Reservation> res, const ObjectiveWeights& weights) {
    const std::size_t n = vn.vm_count();
    const std::size_t m = net.node_count();
    if (n > kBruteForceMaxVms || m > kBruteForceMaxNodes) {
        throw std::invalid_argument("brute force is limited to 4 VMs on 5 nodes");
    }
    EpisodeResult result;
    std::optional<Embedding> best;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<int> assign(n, 0);
    std::size_t total = 1;
    for (std::size_t j = 0; j < n; ++j) total *= m;

    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (std::size_t j = n; j-- > 0;) {
            assign[j] = static_cast<int>(c % m);
            c /= m;
        }
        std::vector<Units> cpu(m, 0), mem(m, 0);
        bool fits = true;
        for (std::size_t j = 0; j < n && fits; ++j) {
            cpu[assign[j]] += res[j].cpu;
            mem[assign[j]] += res[j].mem;
            const auto& node = net.node(assign[j]);
            fits = cpu[assign[j]] <= node.cpu_avail() && mem[assign[j]] <= node.mem_avail();
        }
        if (!fits) continue;
        Embedding emb;
        for (std::size_t j = 0; j < n; ++j) {
            emb.placements.push_back({static_cast<int>(j), assign[j], res[j].cpu, res[j].mem});
        }
        SubstrateNetwork trial = net;
        if (!map_virtual_links(trial, vn, emb)) continue;
        const double value = objective_value(weights, net, vn, emb);
        if (value > best_value) {
            best_value = value;
            best = std::move(emb);
        }
    }
    if (!best) {
        result.failure = "no feasible assignment";
        return result;
    }
    for (int j : vm_processing_order(vn)) {
        const auto& p = best->placements[static_cast<std::size_t>(j)];
        if (!types.empty()) {
            result.rewards.push_back(
                compute_reward(types[static_cast<std::size_t>(j)], net.node(p.node).kind(),
                               assess_placement(net, vn, j, p.node)));
        }
        net.allocate(p.node, p.cpu, p.mem);
    }
    for (const auto& [l, links] : best->link_paths) net.reserve_path(links, vn.vlinks()[static_cast<std::size_t>(l)].bw_demand);
    result.embedding = std::move(best);
    return result;
}

}  // namespace

EpisodeResult embed_vn_baseline(BaselineStrategy strategy, SubstrateNetwork& net, const VnRequest& vn,
                                Rng* rng) {
    const auto res = full_demand_reservations(vn);
    return embed_vn_baseline(strategy, net, vn, {}, res, rng);
}

EpisodeResult embed_vn_baseline(BaselineStrategy strategy, SubstrateNetwork& net, const VnRequest& vn,
                                std::span<const VmType> vm_types, std::span<const Reservation> reservations,
                                Rng* rng, const ObjectiveWeights& weights) {
    check_inputs(vn, vm_types, reservations, false);
    if (strategy == BaselineStrategy::BruteForce) return brute_force(net, vn, vm_types, reservations, weights);
    if (strategy == BaselineStrategy::Random && rng == nullptr) {
        throw std::invalid_argument("the random baseline needs a random generator");
    }

    EpisodeResult result;
    std::vector<Placement> placed;
    for (int j : vm_processing_order(vn)) {
        const auto& r = reservations[static_cast<std::size_t>(j)];
        const auto candidates = candidate_nodes(net, r);
        if (candidates.empty()) {
            rollback_nodes(net, placed);
            result.failure = "no feasible node for vm " + std::to_string(j);
            return result;
        }
        int node = candidates.front();
        if (strategy == BaselineStrategy::Random) {
            node = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(*rng)];
        } else if (strategy == BaselineStrategy::GreedyBestFit) {
            // Highest post-placement balanced utilization: min over CPU and
            // memory first, then max, then lowest index.
            std::tuple<double, double> best{-1.0, -1.0};
            for (int i : candidates) {
                const auto& n = net.node(i);
                const double u_cpu = ratio(static_cast<double>(n.cpu_allocated() + r.cpu),
                                           static_cast<double>(n.cpu_capacity()));
                const double u_mem = ratio(static_cast<double>(n.mem_allocated() + r.mem),
                                           static_cast<double>(n.mem_capacity()));
                const std::tuple<double, double> key{std::min(u_cpu, u_mem), std::max(u_cpu, u_mem)};
                if (key > best) {
                    best = key;
                    node = i;
                }
            }
        }
        if (!vm_types.empty()) {
            result.rewards.push_back(compute_reward(vm_types[static_cast<std::size_t>(j)], net.node(node).kind(),
                                                    assess_placement(net, vn, j, node)));
        }
        net.allocate(node, r.cpu, r.mem);
        placed.push_back({j, node, r.cpu, r.mem});
    }
    Embedding emb = sorted_embedding(placed);
    if (!map_virtual_links(net, vn, emb)) {
        rollback_nodes(net, placed);
        result.failure = "no feasible path for a virtual link";
        return result;
    }
    result.embedding = std::move(emb);
    return result;
}

}  // namespace muvine
