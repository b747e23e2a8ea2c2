#pragma once

#include "muvine/admission.hpp"
#include "muvine/embedder.hpp"
#include "muvine/metrics.hpp"
#include "muvine/regression.hpp"
#include "muvine/simulator.hpp"
#include "muvine/vm_classifier.hpp"
#include "muvine/workload.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace muvine {

/// Everything a full experiment needs. Defaults reproduce the documented
/// setup; config/default.ini lists the same values.
struct PipelineConfig {
    std::uint64_t seed = 1;
    WorkloadConfig workload;  // history trace; its seed is derived from `seed`
    double train_ratio = 0.66;

    bool admission_enabled = true;
    bool classifier_enabled = true;
    bool scaled_allocation = true;
    double alloc_safety = 1.1;
    double alloc_floor = 0.8;

    SvmParams svm;
    RbrParams rbr;
    bool mlc_equal_priors = false;
    SarsaParams sarsa;
    int sarsa_passes = 1;

    std::vector<BaselineStrategy> baselines{BaselineStrategy::GreedyBestFit, BaselineStrategy::FirstFit,
                                            BaselineStrategy::Random};
    ObjectiveWeights weights;
    double time_units_per_hour = 100.0;
    bool verify_embeddings = false;

    /// Throws ConfigError.
    void validate() const;
};

/// Per-component workload configs derived from the global seed.
WorkloadConfig substrate_config(const PipelineConfig& cfg);
WorkloadConfig history_config(const PipelineConfig& cfg);

/// Trace positions of each split, both in arrival order.
struct TraceSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded split of a trace of `n` VNs by `train_ratio`.
TraceSplit split_trace(const PipelineConfig& cfg, std::size_t n);

/// min(D, max(ceil(safety * predicted), ceil(floor * D))); Class1 VMs and a
/// disabled policy get the full demand.
Reservation scaled_reservation(const VirtualMachine& vm, const DerivedPrediction& pred, const PipelineConfig& cfg);

/// Reference CSP: greedy best-fit with full demands, no admission stage.
SimulationResult run_reference(const SubstrateNetwork& net, std::span<const VnRequest> stream,
                               const SimulationOptions& options = {});

struct TrainedModels {
    std::optional<SvmModel> svm;
    std::optional<DerivedModels> derived;
    std::optional<VmTypeClassifier> classifier;
    std::optional<QTable> qtable;
};

struct TrainingReport {
    std::size_t train_vns = 0;
    std::size_t test_vns = 0;
    double reference_acceptance = 0.0;
    std::optional<double> admission_accuracy;  // held-out split
    std::optional<double> vm_type_accuracy;    // held-out VMs
    std::optional<double> vm_share_error;      // held-out VMs
    std::optional<bool> rbr_ridge_used;
    std::optional<double> sarsa_mean_reward;   // episodes among the last 500 training arrivals
    std::size_t sarsa_episodes = 0;
};

/// Core features followed by the derived predictions when given.
FeatureVector aggregate_features(const VirtualMachine& vm, const DerivedPrediction* pred);

/// Phase 1: history stream labeled by the reference CSP.
std::vector<TraceRecord> build_trace(const PipelineConfig& cfg, const SubstrateNetwork& net,
                                     std::vector<VnRequest>* stream_out = nullptr);

/// Phases 2 and 3 restricted to the named stages ("svm", "rbr", "mlc",
/// "sarsa"). Stages depending on untrained ones use `models` as given.
TrainingReport train_models(const PipelineConfig& cfg, const SubstrateNetwork& net,
                            std::span<const TraceRecord> trace, const std::vector<std::string>& stages,
                            TrainedModels& models);

struct EvaluationReport {
    RunMetrics muvine;
    RunLog muvine_log;
    std::map<std::string, RunMetrics> baselines;
    std::size_t invariant_assertions = 0;
    std::optional<double> alloc_fraction_500;
    std::optional<double> alloc_fraction_5000;
};

/// Phase 4: the frozen pipeline and the baselines replay the held-out split of
/// `trace` in arrival order. Admission and type accuracy are scored against
/// the trace labels.
EvaluationReport evaluate(const PipelineConfig& cfg, const SubstrateNetwork& net, const TrainedModels& models,
                          std::span<const TraceRecord> trace);

struct PipelineResult {
    TrainingReport training;
    EvaluationReport evaluation;
    TrainedModels models;
};

/// All four phases. Failures are rethrown as StageError naming the phase.
PipelineResult run_pipeline(const PipelineConfig& cfg);

inline constexpr int kReportSchemaVersion = kMetricsSchemaVersion;

/// Standalone training summary (training.json) and its inverse.
std::string training_json(const TrainingReport& training);
TrainingReport parse_training_json(std::string_view text);

/// metrics.json document.
std::string metrics_json(const PipelineConfig& cfg, const TrainingReport& training, const EvaluationReport& eval);
/// metrics.csv (hourly buckets of the pipeline run) and metrics.json.
void write_reports(const std::filesystem::path& dir, const PipelineConfig& cfg, const TrainingReport& training,
                   const EvaluationReport& eval);

void save_models(const std::filesystem::path& dir, const TrainedModels& models);
/// Loads whichever model files exist in `dir`.
TrainedModels load_models(const std::filesystem::path& dir);

}  // namespace muvine
