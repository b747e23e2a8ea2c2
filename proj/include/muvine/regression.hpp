#pragma once

#include "muvine/features.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace muvine {

/// Gaussian radial-basis interpolant Theta(x) = sum_n w_n exp(-gamma |x - x_n|^2).
struct RbrModel {
    int target_id = 0;
    double gamma = 1.0;
    Eigen::MatrixXd centers;  // N x dim
    Eigen::VectorXd weights;  // N
    bool ridge_used = false;

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(centers.rows()); }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(centers.cols()); }

    void write(std::ostream& out) const;
    static RbrModel read(std::istream& in);
};

/// 1 / (2 median^2) over all pairwise distances. Throws std::invalid_argument
/// with fewer than two points or when every distance is zero.
double median_heuristic_gamma(std::span<const FeatureVector> x);

/// Solves the interpolation system; falls back to (Phi + 1e-8 I) w = y when
/// Phi is numerically singular. Repeated inputs with equal targets collapse
/// to one center; repeated inputs with different targets throw TrainingError.
RbrModel rbr_fit(std::span<const FeatureVector> x, std::span<const double> y, double gamma, int target_id = 0);

/// Raw Eq. 12 sum, no clamping. Throws DimensionError on a length mismatch.
double rbr_predict(const RbrModel& model, std::span<const double> x);

/// Post-hoc VM quantities the regressors estimate.
enum class DerivedTarget { Lifetime = 0, CpuUsage = 1, MemUsage = 2 };
inline constexpr int kDerivedTargetCount = 3;

struct RbrParams {
    std::size_t max_centers = 500;
    /// Kernel width; the median heuristic is used when unset.
    std::optional<double> gamma;
    std::uint64_t seed = 1;
};

/// One training example: a VM with its observed lifetime and usage. VMs of
/// unexpired requests carry no lifetime.
struct DerivedSample {
    FeatureVector core;
    std::optional<double> lifetime;
    double cpu_demand = 1.0;
    double mem_demand = 1.0;
    double actual_cpu = 1.0;
    double actual_mem = 1.0;
};

struct DerivedPrediction {
    double lifetime = 0.0;  // >= 0
    double actual_cpu = 0.0;  // in (0, cpu_demand]
    double actual_mem = 0.0;  // in (0, mem_demand]
};

/// The k per-target regressors over standardized core features. Targets are
/// fitted in normalized form (usage as a fraction of demand, lifetime over
/// `lifetime_scale`) and mapped back on prediction.
struct DerivedModels {
    Standardizer scaler;
    double lifetime_scale = 1.0;
    std::vector<RbrModel> models;  // indexed by DerivedTarget; may be empty

    [[nodiscard]] DerivedPrediction predict(const VirtualMachine& vm) const;

    void write(std::ostream& out) const;
    static DerivedModels read(std::istream& in);
};

DerivedModels fit_derived_models(std::span<const DerivedSample> samples, const RbrParams& params);

/// Aggregate feature set: the core features followed by one prediction per
/// fitted model (lifetime, actual CPU, actual memory).
FeatureVector derive_features(const VirtualMachine& vm, const DerivedModels& models);

}  // namespace muvine
