#pragma once

#include "muvine/features.hpp"
#include "muvine/workload.hpp"

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

namespace muvine {

inline constexpr int kMlcClassCount = 3;

/// Gaussian naive-Bayes model. Class index i follows VmType (Cpu, Gpu, Mem).
struct MlcModel {
    std::array<double, kMlcClassCount> priors{};
    std::array<std::vector<double>, kMlcClassCount> mean;
    std::array<std::vector<double>, kMlcClassCount> var;

    [[nodiscard]] std::size_t dim() const noexcept { return mean[0].size(); }

    void write(std::ostream& out) const;
    static MlcModel read(std::istream& in);
};

inline constexpr double kMlcVarianceFloor = 1e-6;

/// Per-class population moments with the variance floor applied. Priors are
/// class frequencies, or 1/3 each when `equal_priors` is set. Throws
/// TrainingError when a class has fewer than two samples.
MlcModel mlc_fit(std::span<const FeatureVector> x, std::span<const int> labels, bool equal_priors = false);

/// log p(class) + sum_k log N(x_k; mu_k, var_k). Throws DimensionError.
double mlc_log_likelihood(const MlcModel& model, std::span<const double> x, int class_index);

struct MlcResult {
    int label = 0;
    std::array<double, kMlcClassCount> posteriors{};
};

/// MAP class; ties go to the lowest index.
MlcResult mlc_classify(const MlcModel& model, std::span<const double> x);

/// MLC over standardized aggregate features.
struct VmTypeClassifier {
    Standardizer scaler;
    MlcModel model;

    [[nodiscard]] VmType classify(std::span<const double> aggregate) const;

    void write(std::ostream& out) const;
    static VmTypeClassifier read(std::istream& in);
};

VmTypeClassifier train_vm_classifier(std::span<const FeatureVector> aggregate, std::span<const VmType> labels,
                                     bool equal_priors = false);

/// Largest absolute difference between predicted and true class shares.
double class_share_error(std::span<const VmType> predicted, std::span<const VmType> truth);

}  // namespace muvine
