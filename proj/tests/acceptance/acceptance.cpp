// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include "muvine/embedder.hpp"
#include "muvine/oracle.hpp"
#include "muvine/pipeline.hpp"
#include "muvine/regression.hpp"
#include "muvine/vm_classifier.hpp"
#include "muvine/workload.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace muvine;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Full pipeline runs are shared by criteria 7 to 10.
std::map<std::uint64_t, PipelineResult>& runs() {
    static std::map<std::uint64_t, PipelineResult> cache;
    return cache;
}

const PipelineResult& pipeline_run(std::uint64_t seed) {
    auto it = runs().find(seed);
    if (it != runs().end()) return it->second;
    PipelineConfig cfg;
    cfg.seed = seed;
    cfg.verify_embeddings = true;
    return runs().emplace(seed, run_pipeline(cfg)).first->second;
}

Verdict admission_accuracy() {
    PipelineConfig cfg;
    const auto net = generate_substrate(substrate_config(cfg));
    const auto trace = build_trace(cfg, net);
    TrainedModels models;
    const auto report = train_models(cfg, net, trace, {"svm"}, models);
    const double acc = report.admission_accuracy.value_or(0.0);
    return {acc >= 0.79, "held-out accuracy " + fmt(acc) + " over " + std::to_string(report.test_vns) +
                             " VNs, reference acceptance " + fmt(report.reference_acceptance)};
}

Verdict vm_type_share_error() {
    PipelineConfig cfg;
    const auto net = generate_substrate(substrate_config(cfg));
    const auto trace = build_trace(cfg, net);
    std::vector<std::size_t> idx(trace.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto [train_idx, test_idx] = split_train_test(idx, cfg.train_ratio, sub_seed(cfg.seed, "split"));
    std::sort(train_idx.begin(), train_idx.end());

    struct Vm {
        const VnRequest* vn;
        const VirtualMachine* vm;
        VmType type;
    };
    auto collect = [&](const std::vector<std::size_t>& which) {
        std::vector<Vm> out;
        for (auto i : which) {
            for (const auto& vm : trace[i].vn.vms()) {
                out.push_back({&trace[i].vn, &vm, trace[i].vm_types[static_cast<std::size_t>(vm.id)]});
            }
        }
        return out;
    };
    const auto train_vms = collect(train_idx);
    const auto test_vms = collect(test_idx);
    const double horizon = [&] {
        std::vector<VnRequest> s;
        for (const auto& r : trace) s.push_back(r.vn);
        return stream_horizon(s);
    }();

    auto share_error = [&](std::size_t n) {
        std::vector<DerivedSample> samples;
        for (std::size_t k = 0; k < n; ++k) {
            const auto& [vn, vm, type] = train_vms[k];
            DerivedSample s;
            s.core = extract_vm_core_features(*vm);
            if (vn->end() && *vn->end() <= horizon) s.lifetime = *vn->end() - vn->start();
            s.cpu_demand = static_cast<double>(vm->cpu_demand);
            s.mem_demand = static_cast<double>(vm->mem_demand);
            s.actual_cpu = vm->actual_cpu.value_or(s.cpu_demand);
            s.actual_mem = vm->actual_mem.value_or(s.mem_demand);
            samples.push_back(std::move(s));
        }
        RbrParams rp = cfg.rbr;
        rp.seed = sub_seed(cfg.seed, "rbr");
        const auto derived = fit_derived_models(samples, rp);
        std::vector<FeatureVector> x;
        std::vector<VmType> y;
        for (std::size_t k = 0; k < n; ++k) {
            const auto pred = derived.predict(*train_vms[k].vm);
            x.push_back(aggregate_features(*train_vms[k].vm, &pred));
            y.push_back(train_vms[k].type);
        }
        const auto clf = train_vm_classifier(x, y, cfg.mlc_equal_priors);
        std::vector<VmType> truth, predicted;
        for (const auto& v : test_vms) {
            const auto pred = derived.predict(*v.vm);
            truth.push_back(v.type);
            predicted.push_back(clf.classify(aggregate_features(*v.vm, &pred)));
        }
        return class_share_error(predicted, truth);
    };
    if (train_vms.size() < 15000) return {false, "only " + std::to_string(train_vms.size()) + " training VMs"};
    const double e1000 = share_error(1000);
    const double e15000 = share_error(15000);
    return {e1000 <= 0.08 && e15000 <= 0.04 && e15000 <= e1000,
            "share error " + fmt(e1000) + " at 1000 VMs, " + fmt(e15000) + " at 15000 VMs"};
}

Verdict rbr_interpolation() {
    Rng rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<FeatureVector> x;
    std::vector<double> y;
    while (x.size() < 200) {
        FeatureVector p{u(rng), u(rng), u(rng), u(rng)};
        x.push_back(p);
        y.push_back(std::sin(p[0]) + p[1] * p[2] - 0.5 * p[3]);
    }
    const auto model = rbr_fit(x, y, median_heuristic_gamma(x), 0);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(rbr_predict(model, x[i]) - y[i]));

    const auto flat = rbr_fit(x, y, 1e-10, 0);
    bool finite = true;
    for (const auto& p : x) finite = finite && std::isfinite(rbr_predict(flat, p));
    return {worst <= 1e-6 && flat.ridge_used && finite,
            "max residual " + std::to_string(worst) + ", ridge at gamma 1e-10 " +
                (flat.ridge_used ? "engaged" : "not engaged") + (finite ? ", finite" : ", non-finite")};
}

Verdict sarsa_learning() {
    std::string detail;
    bool pass = true;
    bool bounded = true;
    for (std::uint64_t seed : {1, 2, 3}) {
        PipelineConfig cfg;
        cfg.seed = seed;
        const auto net = generate_substrate(substrate_config(cfg));
        auto wcfg = history_config(cfg);
        wcfg.vn_count = 5000;
        const auto stream = generate_vn_stream(wcfg);
        auto types_of = [&](const VnRequest& vn) {
            std::vector<VmType> t;
            for (const auto& vm : vn.vms()) t.push_back(vm_type_label(vm, wcfg));
            return t;
        };
        auto check = [&](const EpisodeResult& r) {
            for (const auto& rw : r.rewards) bounded = bounded && rw.total() >= -1.0 && rw.total() <= 1.0;
        };
        SarsaParams sp = cfg.sarsa;
        sp.weights = cfg.weights;
        SarsaAgent agent(sp, sub_seed(seed, "sarsa"));
        const auto learned = simulate(net, stream, [&](SubstrateNetwork& live, const VnRequest& vn) {
            ArrivalOutcome out;
            out.episode = agent.embed(live, vn, types_of(vn), true);
            check(out.episode);
            return out;
        });
        Rng rng(sub_seed(seed, "baseline_random"));
        const auto random = simulate(net, stream, [&](SubstrateNetwork& live, const VnRequest& vn) {
            ArrivalOutcome out;
            const auto types = types_of(vn);
            out.episode = embed_vn_baseline(BaselineStrategy::Random, live, vn, types, full_demand_reservations(vn),
                                            &rng, cfg.weights);
            check(out.episode);
            return out;
        });
        const double a = trailing_episode_reward(learned, stream.size(), 500);
        const double b = trailing_episode_reward(random, stream.size(), 500);
        pass = pass && a - b >= 0.1;
        detail += "seed " + std::to_string(seed) + " sarsa " + fmt(a) + " random " + fmt(b) + "; ";
    }
    return {pass && bounded, detail + (bounded ? "rewards bounded" : "reward out of [-1,1]")};
}

Verdict oracle_dominance() {
    OracleParams p;
    p.instances = 50;
    p.max_vms = 3;
    p.max_nodes = 4;
    const auto s = run_oracle(p);
    return {s.mean_agent_ratio >= 0.9 && s.mean_greedy_ratio >= 0.8,
            "agent " + fmt(s.mean_agent_ratio) + ", greedy " + fmt(s.mean_greedy_ratio) + " of the optimum"};
}

Verdict motivation_example() {
    auto single = [](int id, Units cpu, Units mem) {
        VirtualMachine vm;
        vm.cpu_demand = cpu;
        vm.mem_demand = mem;
        return VnRequest(id, 0.0, {vm}, {});
    };
    const std::vector<VnRequest> vns{single(1, 5, 20), single(2, 3, 65), single(3, 5, 13), single(4, 2, 83)};
    const auto vn5 = single(5, 5, 36);
    auto substrate = [] {
        SubstrateNetwork net;
        net.add_node(14, 150, 2000, NodeKind::CpuRich);
        net.add_node(12, 150, 2000, NodeKind::CpuRich);
        net.add_link(0, 1, 1000);
        return net;
    };
    auto place = [&](const std::vector<int>& nodes) {
        auto net = substrate();
        for (std::size_t k = 0; k < vns.size(); ++k) {
            Embedding e;
            e.placements.push_back(full_demand_placement(vns[k], 0, nodes[k]));
            apply_embedding(net, vns[k], e);
        }
        return net;
    };
    auto fits = [&](SubstrateNetwork net) {
        return embed_vn_baseline(BaselineStrategy::FirstFit, net, vn5).accepted();
    };
    const auto uneven = place({0, 1, 0, 1});
    const auto even = place({0, 0, 1, 1});
    auto pct = [](Units used, Units cap) { return 100.0 * static_cast<double>(used) / static_cast<double>(cap); };
    const double c1 = pct(uneven.node(0).cpu_allocated(), 14), c2 = pct(uneven.node(1).cpu_allocated(), 12);
    const double m1 = pct(uneven.node(0).mem_allocated(), 150), m2 = pct(uneven.node(1).mem_allocated(), 150);
    const bool numbers = std::abs(c1 - 71.4) <= 0.1 && std::abs(c2 - 41.6) <= 0.1 && std::abs(m1 - 22.0) <= 0.1 &&
                         std::abs(m2 - 98.6) <= 0.1;
    const bool uneven_rejects = !fits(uneven);
    const bool even_accepts = fits(even);
    return {numbers && uneven_rejects && even_accepts,
            "uneven cpu " + fmt(c1, 2) + "%/" + fmt(c2, 2) + "% mem " + fmt(m1, 2) + "%/" + fmt(m2, 2) + "%, VN5 " +
                (uneven_rejects ? "rejected" : "accepted") + " uneven, " + (even_accepts ? "accepted" : "rejected") +
                " even"};
}

Verdict constraint_soundness() {
    const auto& r = pipeline_run(1);
    const auto n = r.evaluation.invariant_assertions;
    return {n >= 10000, std::to_string(n) + " assertions, no violation; " +
                            std::to_string(r.evaluation.muvine.accepted) + " accepted embeddings re-validated"};
}

Verdict utilization_ballpark() {
    int util_wins = 0, std_wins = 0;
    std::string detail;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto& e = pipeline_run(seed).evaluation;
        const auto& g = e.baselines.at("greedy_best_fit");
        const auto& r = e.baselines.at("random");
        util_wins += e.muvine.cpu_utilization_mean >= g.cpu_utilization_mean;
        std_wins += e.muvine.cpu_utilization_std <= r.cpu_utilization_std;
        detail += "seed " + std::to_string(seed) + " cpu " + fmt(e.muvine.cpu_utilization_mean) + " vs greedy " +
                  fmt(g.cpu_utilization_mean) + ", std " + fmt(e.muvine.cpu_utilization_std) + " vs random " +
                  fmt(r.cpu_utilization_std) + "; ";
    }
    return {util_wins >= 2 && std_wins >= 2, detail + std::to_string(util_wins) + "/3 utilization, " +
                                                 std::to_string(std_wins) + "/3 std"};
}

Verdict allocation_trend() {
    const auto& e = pipeline_run(1).evaluation;
    if (!e.alloc_fraction_500 || !e.alloc_fraction_5000) return {false, "stream shorter than 5000 requests"};
    const double a = *e.alloc_fraction_500, b = *e.alloc_fraction_5000;
    return {a < 1.0 && b < 1.0 && b >= a, "fraction " + fmt(a) + " at 500, " + fmt(b) + " at 5000"};
}

Verdict determinism() {
    PipelineConfig cfg;
    auto render = [&](const PipelineResult& r) {
        std::ostringstream csv;
        write_metrics_csv(csv, r.evaluation.muvine_log, cfg.time_units_per_hour);
        return csv.str() + metrics_json(cfg, r.training, r.evaluation);
    };
    const auto a = render(run_pipeline(cfg));
    const auto b = render(run_pipeline(cfg));
    return {a == b, a == b ? "metrics CSV and JSON byte-identical" : "outputs differ"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        double budget_s;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> criteria{
        {1, 120, admission_accuracy}, {2, 60, vm_type_share_error}, {3, 10, rbr_interpolation},
        {4, 180, sarsa_learning},     {5, 60, oracle_dominance},    {6, 1, motivation_example},
        {7, 120, constraint_soundness}, {8, 600, utilization_ballpark}, {9, 600, allocation_trend},
        {10, 600, determinism},
    };
    const auto start = std::chrono::steady_clock::now();
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double elapsed = seconds_since(t0);
        if (elapsed > c.budget_s) {
            v.pass = false;
            v.detail += "; over budget";
        }
        failures += v.pass ? 0 : 1;
        std::printf("criterion %d: %s (%s; %.1f s)\n", c.id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), elapsed);
        std::fflush(stdout);
    }
    const double total = seconds_since(start);
    std::printf("total %.1f s\n", total);
    return failures == 0 && total <= 600 ? 0 : 1;
}
