#include "muvine/pipeline.hpp"

#include "muvine/error.hpp"
#include "muvine/io_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace muvine {

void PipelineConfig::validate() const {
    workload.validate();
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("train_ratio must lie in (0,1)");
    if (!(alloc_safety >= 1.0)) throw ConfigError("alloc_safety must be at least 1");
    if (!(alloc_floor > 0.0 && alloc_floor <= 1.0)) throw ConfigError("alloc_floor must lie in (0,1]");
    if (!(svm.lambda > 0.0)) throw ConfigError("svm lambda must be positive");
    if (svm.epochs < 1) throw ConfigError("svm epochs must be at least 1");
    if (rbr.max_centers < 1) throw ConfigError("rbr max_centers must be at least 1");
    if (rbr.gamma && !(*rbr.gamma > 0.0)) throw ConfigError("rbr gamma must be positive");
    sarsa.validate();
    if (sarsa_passes < 0) throw ConfigError("sarsa passes must be non-negative");
    if (!weights.valid()) throw ConfigError("objective weights must be non-negative and sum to 1");
    if (!(time_units_per_hour > 0.0)) throw ConfigError("time_units_per_hour must be positive");
}

WorkloadConfig substrate_config(const PipelineConfig& cfg) {
    WorkloadConfig w = cfg.workload;
    w.seed = sub_seed(cfg.seed, "substrate");
    return w;
}

WorkloadConfig history_config(const PipelineConfig& cfg) {
    WorkloadConfig w = cfg.workload;
    w.seed = sub_seed(cfg.seed, "history");
    return w;
}

TraceSplit split_trace(const PipelineConfig& cfg, std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto [train, test] = split_train_test(idx, cfg.train_ratio, sub_seed(cfg.seed, "split"));
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

Reservation scaled_reservation(const VirtualMachine& vm, const DerivedPrediction& pred, const PipelineConfig& cfg) {
    if (!cfg.scaled_allocation || vm.vm_class == VmClass::Class1) return {vm.cpu_demand, vm.mem_demand};
    auto scale = [&](Units demand, double predicted) {
        const auto by_usage = static_cast<Units>(std::ceil(cfg.alloc_safety * predicted - 1e-9));
        const auto floor = static_cast<Units>(std::ceil(cfg.alloc_floor * static_cast<double>(demand) - 1e-9));
        return std::clamp(std::max(by_usage, floor), Units{1}, demand);
    };
    return {scale(vm.cpu_demand, pred.actual_cpu), scale(vm.mem_demand, pred.actual_mem)};
}

SimulationResult run_reference(const SubstrateNetwork& net, std::span<const VnRequest> stream,
                               const SimulationOptions& options) {
    return simulate(
        net, stream,
        [](SubstrateNetwork& live, const VnRequest& vn) {
            ArrivalOutcome out;
            out.episode = embed_vn_baseline(BaselineStrategy::GreedyBestFit, live, vn);
            return out;
        },
        options);
}

FeatureVector aggregate_features(const VirtualMachine& vm, const DerivedPrediction* pred) {
    FeatureVector f = extract_vm_core_features(vm);
    if (pred) {
        f.push_back(pred->lifetime);
        f.push_back(pred->actual_cpu);
        f.push_back(pred->actual_mem);
    }
    return f;
}

namespace {

/// Per-VM stage-2 outputs of one VN.
struct VnPrediction {
    std::vector<VmType> types;
    std::vector<Reservation> reservations;
};

/// `truth` holds the labeled types, used when no classifier is active.
VnPrediction predict_vn(const VnRequest& vn, const TrainedModels& models, const PipelineConfig& cfg,
                        std::span<const VmType> truth) {
    VnPrediction out;
    const DerivedModels* derived = models.derived ? &*models.derived : nullptr;
    const VmTypeClassifier* classifier =
        cfg.classifier_enabled && models.classifier ? &*models.classifier : nullptr;
    for (const auto& vm : vn.vms()) {
        std::optional<DerivedPrediction> pred;
        if (derived) pred = derived->predict(vm);
        if (classifier) {
            out.types.push_back(classifier->classify(aggregate_features(vm, pred ? &*pred : nullptr)));
        } else {
            out.types.push_back(truth[static_cast<std::size_t>(vm.id)]);
        }
        out.reservations.push_back(pred ? scaled_reservation(vm, *pred, cfg)
                                        : Reservation{vm.cpu_demand, vm.mem_demand});
    }
    return out;
}

template <typename F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

}  // namespace

std::vector<TraceRecord> build_trace(const PipelineConfig& cfg, const SubstrateNetwork& net,
                                     std::vector<VnRequest>* stream_out) {
    const auto hist_cfg = history_config(cfg);
    auto stream = generate_vn_stream(hist_cfg);
    const auto ref = run_reference(net, stream);
    auto trace = label_trace(stream, ref.accepted, hist_cfg);
    if (stream_out) *stream_out = std::move(stream);
    return trace;
}

TrainingReport train_models(const PipelineConfig& cfg, const SubstrateNetwork& net,
                            std::span<const TraceRecord> trace, const std::vector<std::string>& stages,
                            TrainedModels& models) {
    auto wants = [&](std::string_view s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
    TrainingReport report;
    if (trace.empty()) throw TrainingError("empty trace");

    const auto [train_idx, test_idx] = split_trace(cfg, trace.size());
    report.train_vns = train_idx.size();
    report.test_vns = test_idx.size();
    std::size_t accepted = 0;
    for (const auto& r : trace) accepted += r.accepted ? 1 : 0;
    report.reference_acceptance = static_cast<double>(accepted) / static_cast<double>(trace.size());

    std::vector<VnRequest> stream;
    stream.reserve(trace.size());
    for (const auto& r : trace) stream.push_back(r.vn);
    const double horizon = stream_horizon(stream);

    if (wants("svm")) {
        std::vector<FeatureVector> x;
        std::vector<int> y;
        for (auto i : train_idx) {
            x.push_back(extract_vn_features(trace[i].vn));
            y.push_back(trace[i].accepted ? 1 : -1);
        }
        SvmParams p = cfg.svm;
        p.seed = sub_seed(cfg.seed, "svm");
        models.svm = svm_train(x, y, p);
        if (!test_idx.empty()) {
            std::size_t hit = 0;
            for (auto i : test_idx) {
                hit += svm_predict(*models.svm, extract_vn_features(trace[i].vn)).accepted == trace[i].accepted;
            }
            report.admission_accuracy = static_cast<double>(hit) / static_cast<double>(test_idx.size());
        }
    }

    if (wants("rbr")) {
        std::vector<DerivedSample> samples;
        for (auto i : train_idx) {
            const auto& vn = trace[i].vn;
            for (const auto& vm : vn.vms()) {
                DerivedSample s;
                s.core = extract_vm_core_features(vm);
                if (vn.end() && *vn.end() <= horizon) s.lifetime = *vn.end() - vn.start();
                s.cpu_demand = static_cast<double>(vm.cpu_demand);
                s.mem_demand = static_cast<double>(vm.mem_demand);
                s.actual_cpu = vm.actual_cpu.value_or(s.cpu_demand);
                s.actual_mem = vm.actual_mem.value_or(s.mem_demand);
                samples.push_back(std::move(s));
            }
        }
        RbrParams p = cfg.rbr;
        p.seed = sub_seed(cfg.seed, "rbr");
        models.derived = fit_derived_models(samples, p);
        bool ridge = false;
        for (const auto& m : models.derived->models) ridge = ridge || m.ridge_used;
        report.rbr_ridge_used = ridge;
    }

    const DerivedModels* derived = models.derived ? &*models.derived : nullptr;
    auto vm_features = [&](const VirtualMachine& vm) {
        std::optional<DerivedPrediction> pred;
        if (derived) pred = derived->predict(vm);
        return aggregate_features(vm, pred ? &*pred : nullptr);
    };

    if (wants("mlc")) {
        std::vector<FeatureVector> x;
        std::vector<VmType> y;
        for (auto i : train_idx) {
            for (const auto& vm : trace[i].vn.vms()) {
                x.push_back(vm_features(vm));
                y.push_back(trace[i].vm_types[static_cast<std::size_t>(vm.id)]);
            }
        }
        models.classifier = train_vm_classifier(x, y, cfg.mlc_equal_priors);
        std::vector<VmType> truth, predicted;
        for (auto i : test_idx) {
            for (const auto& vm : trace[i].vn.vms()) {
                truth.push_back(trace[i].vm_types[static_cast<std::size_t>(vm.id)]);
                predicted.push_back(models.classifier->classify(vm_features(vm)));
            }
        }
        if (!truth.empty()) {
            std::size_t hit = 0;
            for (std::size_t k = 0; k < truth.size(); ++k) hit += truth[k] == predicted[k];
            report.vm_type_accuracy = static_cast<double>(hit) / static_cast<double>(truth.size());
            report.vm_share_error = class_share_error(predicted, truth);
        }
    }

    if (wants("sarsa")) {
        std::vector<VnRequest> train_stream;
        std::map<int, const std::vector<VmType>*> labels;  // VN ids are unique within a trace
        for (auto i : train_idx) {
            train_stream.push_back(trace[i].vn);
            labels.emplace(trace[i].vn.id(), &trace[i].vm_types);
        }
        SarsaParams sp = cfg.sarsa;
        sp.weights = cfg.weights;
        SarsaAgent agent(sp, sub_seed(cfg.seed, "sarsa"));
        std::optional<double> trailing;
        for (int pass = 0; pass < cfg.sarsa_passes; ++pass) {
            auto sim = simulate(net, train_stream, [&](SubstrateNetwork& live, const VnRequest& vn) {
                const auto pred = predict_vn(vn, models, cfg, *labels.at(vn.id()));
                ArrivalOutcome out;
                out.reservations = pred.reservations;
                out.episode = agent.embed(live, vn, pred.types, pred.reservations, true);
                return out;
            });
            if (!sim.episode_rewards.empty()) trailing = trailing_episode_reward(sim, train_stream.size(), 500);
        }
        models.qtable = agent.table();
        report.sarsa_episodes = agent.episodes();
        report.sarsa_mean_reward = trailing;
    }
    return report;
}

EvaluationReport evaluate(const PipelineConfig& cfg, const SubstrateNetwork& net, const TrainedModels& models,
                          std::span<const TraceRecord> trace) {
    EvaluationReport report;
    if (trace.empty()) throw std::invalid_argument("empty trace");
    const auto held_out = split_trace(cfg, trace.size()).test;
    if (held_out.empty()) throw std::invalid_argument("held-out split is empty");
    std::vector<VnRequest> stream;
    std::map<int, const TraceRecord*> by_id;  // VN ids are unique within a trace
    for (auto i : held_out) {
        stream.push_back(trace[i].vn);
        by_id.emplace(trace[i].vn.id(), &trace[i]);
    }

    SarsaParams sp = cfg.sarsa;
    sp.weights = cfg.weights;
    SarsaAgent agent(sp, models.qtable.value_or(QTable{}));
    const bool admission = cfg.admission_enabled && models.svm.has_value();
    std::size_t admission_hits = 0;
    std::size_t type_hits = 0, type_total = 0;

    SimulationOptions options;
    options.verify_embeddings = cfg.verify_embeddings;
    auto sim = simulate(
        net, stream,
        [&](SubstrateNetwork& live, const VnRequest& vn) {
            ArrivalOutcome out;
            if (admission) {
                out.admitted = svm_predict(*models.svm, extract_vn_features(vn)).accepted;
                admission_hits += out.admitted == by_id.at(vn.id())->accepted;
            }
            if (!out.admitted) return out;
            const auto pred = predict_vn(vn, models, cfg, by_id.at(vn.id())->vm_types);
            if (cfg.classifier_enabled && models.classifier) {
                const auto& truth = by_id.at(vn.id())->vm_types;
                for (const auto& vm : vn.vms()) {
                    type_hits += pred.types[static_cast<std::size_t>(vm.id)] == truth[static_cast<std::size_t>(vm.id)];
                    ++type_total;
                }
            }
            out.reservations = pred.reservations;
            out.episode = agent.embed(live, vn, pred.types, pred.reservations, false);
            return out;
        },
        options);

    report.muvine = acceptance_and_allocation_stats(sim.log);
    if (admission) report.muvine.admission_accuracy = static_cast<double>(admission_hits) / static_cast<double>(stream.size());
    if (type_total > 0) report.muvine.vm_type_accuracy = static_cast<double>(type_hits) / static_cast<double>(type_total);
    if (!sim.episode_rewards.empty()) {
        report.muvine.mean_reward = std::accumulate(sim.episode_rewards.begin(), sim.episode_rewards.end(), 0.0) /
                                    static_cast<double>(sim.episode_rewards.size());
    }
    report.invariant_assertions += sim.assertions;
    if (stream.size() >= 500) report.alloc_fraction_500 = acceptance_and_allocation_stats(prefix_log(sim.log, 500)).alloc_fraction;
    if (stream.size() >= 5000) report.alloc_fraction_5000 = acceptance_and_allocation_stats(prefix_log(sim.log, 5000)).alloc_fraction;
    report.muvine_log = std::move(sim.log);

    for (auto strategy : cfg.baselines) {
        Rng rng(sub_seed(cfg.seed, "baseline_" + std::string(to_string(strategy))));
        auto base = simulate(
            net, stream,
            [&](SubstrateNetwork& live, const VnRequest& vn) {
                const auto& types = by_id.at(vn.id())->vm_types;
                ArrivalOutcome out;
                out.reservations = full_demand_reservations(vn);
                out.episode = embed_vn_baseline(strategy, live, vn, types, out.reservations, &rng, cfg.weights);
                return out;
            },
            options);
        auto m = acceptance_and_allocation_stats(base.log);
        if (!base.episode_rewards.empty()) {
            m.mean_reward = std::accumulate(base.episode_rewards.begin(), base.episode_rewards.end(), 0.0) /
                            static_cast<double>(base.episode_rewards.size());
        }
        report.invariant_assertions += base.assertions;
        report.baselines.emplace(std::string(to_string(strategy)), m);
    }
    return report;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    in_stage("config", [&] { cfg.validate(); });
    PipelineResult result;
    const auto net = in_stage("generate", [&] { return generate_substrate(substrate_config(cfg)); });
    const auto trace = in_stage("generate", [&] { return build_trace(cfg, net); });
    result.training = in_stage("train", [&] {
        return train_models(cfg, net, trace, {"svm", "rbr", "mlc", "sarsa"}, result.models);
    });
    result.evaluation = in_stage("evaluate", [&] { return evaluate(cfg, net, result.models, trace); });
    return result;
}

namespace {

nlohmann::ordered_json metrics_to_json(const RunMetrics& m) {
    nlohmann::ordered_json j;
    j["requests"] = m.requests;
    j["accepted"] = m.accepted;
    j["admitted"] = m.admitted;
    j["acceptance_rate"] = m.acceptance_rate;
    j["cpu_utilization_mean"] = m.cpu_utilization_mean;
    j["cpu_utilization_std"] = m.cpu_utilization_std;
    j["mem_utilization_mean"] = m.mem_utilization_mean;
    j["mem_utilization_std"] = m.mem_utilization_std;
    j["alloc_fraction_cpu"] = m.alloc_fraction_cpu;
    j["alloc_fraction_mem"] = m.alloc_fraction_mem;
    j["alloc_fraction"] = m.alloc_fraction;
    j["throughput"] = m.throughput;
    j["duration"] = m.duration;
    j["admission_accuracy"] = m.admission_accuracy ? nlohmann::ordered_json(*m.admission_accuracy) : nullptr;
    j["vm_type_accuracy"] = m.vm_type_accuracy ? nlohmann::ordered_json(*m.vm_type_accuracy) : nullptr;
    j["mean_reward"] = m.mean_reward ? nlohmann::ordered_json(*m.mean_reward) : nullptr;
    return j;
}

template <typename T>
nlohmann::ordered_json opt(const std::optional<T>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

namespace {

nlohmann::ordered_json training_to_json(const TrainingReport& training) {
    nlohmann::ordered_json t;
    t["train_vns"] = training.train_vns;
    t["test_vns"] = training.test_vns;
    t["reference_acceptance"] = training.reference_acceptance;
    t["admission_accuracy"] = opt(training.admission_accuracy);
    t["vm_type_accuracy"] = opt(training.vm_type_accuracy);
    t["vm_share_error"] = opt(training.vm_share_error);
    t["rbr_ridge_used"] = opt(training.rbr_ridge_used);
    t["sarsa_episodes"] = training.sarsa_episodes;
    t["sarsa_mean_reward"] = opt(training.sarsa_mean_reward);
    return t;
}

template <typename T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

}  // namespace

std::string training_json(const TrainingReport& training) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["training"] = training_to_json(training);
    return j.dump(2) + "\n";
}

TrainingReport parse_training_json(std::string_view text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("schema_version").get<int>() != kReportSchemaVersion) {
            throw FormatError("unsupported training report schema version");
        }
        const auto& t = doc.at("training");
        TrainingReport r;
        r.train_vns = t.at("train_vns").get<std::size_t>();
        r.test_vns = t.at("test_vns").get<std::size_t>();
        r.reference_acceptance = t.at("reference_acceptance").get<double>();
        r.admission_accuracy = get_opt<double>(t, "admission_accuracy");
        r.vm_type_accuracy = get_opt<double>(t, "vm_type_accuracy");
        r.vm_share_error = get_opt<double>(t, "vm_share_error");
        r.rbr_ridge_used = get_opt<bool>(t, "rbr_ridge_used");
        r.sarsa_episodes = t.at("sarsa_episodes").get<std::size_t>();
        r.sarsa_mean_reward = get_opt<double>(t, "sarsa_mean_reward");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed training report: ") + e.what());
    }
}

std::string metrics_json(const PipelineConfig& cfg, const TrainingReport& training, const EvaluationReport& eval) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["seed"] = cfg.seed;
    j["history_vn_count"] = cfg.workload.vn_count;
    j["training"] = training_to_json(training);
    j["muvine"] = metrics_to_json(eval.muvine);
    nlohmann::ordered_json b = nlohmann::ordered_json::object();
    for (const auto& [name, m] : eval.baselines) b[name] = metrics_to_json(m);
    j["baselines"] = b;
    j["alloc_fraction_500"] = opt(eval.alloc_fraction_500);
    j["alloc_fraction_5000"] = opt(eval.alloc_fraction_5000);
    j["invariant_assertions"] = eval.invariant_assertions;
    return j.dump(2) + "\n";
}

void write_reports(const std::filesystem::path& dir, const PipelineConfig& cfg, const TrainingReport& training,
                   const EvaluationReport& eval) {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "metrics.csv", std::ios::binary);
    write_metrics_csv(csv, eval.muvine_log, cfg.time_units_per_hour);
    std::ofstream json(dir / "metrics.json", std::ios::binary);
    json << metrics_json(cfg, training, eval);
    if (!csv || !json) throw std::runtime_error("failed to write reports to " + dir.string());
}

void save_models(const std::filesystem::path& dir, const TrainedModels& models) {
    std::filesystem::create_directories(dir);
    auto save = [&](const char* name, const auto& model) {
        std::ofstream out(dir / name, std::ios::binary);
        model.write(out);
        if (!out) throw std::runtime_error(std::string("failed to write ") + name);
    };
    if (models.svm) save("svm.txt", *models.svm);
    if (models.derived) save("rbr.txt", *models.derived);
    if (models.classifier) save("mlc.txt", *models.classifier);
    if (models.qtable) save("qtable.txt", *models.qtable);
}

TrainedModels load_models(const std::filesystem::path& dir) {
    TrainedModels models;
    auto load = [&](const char* name, auto reader) {
        std::ifstream in(dir / name, std::ios::binary);
        if (!in) return decltype(reader(in))();
        return reader(in);
    };
    models.svm = load("svm.txt", [](std::istream& in) { return std::optional<SvmModel>(SvmModel::read(in)); });
    models.derived =
        load("rbr.txt", [](std::istream& in) { return std::optional<DerivedModels>(DerivedModels::read(in)); });
    models.classifier = load(
        "mlc.txt", [](std::istream& in) { return std::optional<VmTypeClassifier>(VmTypeClassifier::read(in)); });
    models.qtable = load("qtable.txt", [](std::istream& in) { return std::optional<QTable>(QTable::read(in)); });
    return models;
}

}  // namespace muvine
