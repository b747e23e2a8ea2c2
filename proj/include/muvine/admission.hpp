#pragma once

#include "muvine/features.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace muvine {

struct SvmParams {
    double lambda = 1e-3;
    int epochs = 2000;
    std::uint64_t seed = 1;
};

/// Linear soft-margin classifier. Inputs are passed through `scaler` before
/// the hyperplane; a default-constructed model uses the identity scaling.
struct SvmModel {
    std::vector<double> w;
    double c = 0.0;
    double lambda = 1e-3;
    Standardizer scaler;
    int epochs = 0;
    std::uint64_t seed = 0;

    SvmModel() = default;
    SvmModel(std::vector<double> weights, double bias, double lambda_);

    [[nodiscard]] std::size_t dim() const noexcept { return w.size(); }
    void write(std::ostream& out) const;
    static SvmModel read(std::istream& in);
};

struct SvmPrediction {
    bool accepted = true;
    double score = 0.0;
};

/// Mean hinge loss plus lambda * |w|^2 over already-scaled rows.
double svm_objective(std::span<const double> w, double c, double lambda, std::span<const FeatureVector> x,
                     std::span<const int> labels);

/// Full-batch subgradient descent on the hinge objective. Labels are +1
/// (accepted) or -1 (rejected). When `standardize` is set the rows are
/// z-scored first and the scaler is stored in the model. Throws
/// TrainingError when only one label is present.
SvmModel svm_train(std::span<const FeatureVector> x, std::span<const int> labels, const SvmParams& params,
                   bool standardize = true);

/// Accepted iff the score is >= 0. Throws DimensionError on a length mismatch.
SvmPrediction svm_predict(const SvmModel& model, std::span<const double> x);

}  // namespace muvine
