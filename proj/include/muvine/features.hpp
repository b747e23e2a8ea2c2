#pragma once

#include "muvine/virtual_network.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace muvine {

using FeatureVector = std::vector<double>;

/// Arrival-time VN features: aggregate CPU, aggregate memory, class one-hot
/// (3), priority, start time, VM count, total virtual-link demand.
inline constexpr std::size_t kVnFeatureCount = 9;
FeatureVector extract_vn_features(const VnRequest& vn);

/// Core VM features known at arrival: CPU demand, memory demand, class, priority.
inline constexpr std::size_t kVmCoreFeatureCount = 4;
FeatureVector extract_vm_core_features(const VirtualMachine& vm);

/// Per-feature z-score from a training sample. Constant features keep a unit
/// scale so they map to 0.
class Standardizer {
public:
    Standardizer() = default;
    Standardizer(std::vector<double> mean, std::vector<double> scale);

    /// Throws std::invalid_argument on an empty or ragged sample.
    static Standardizer fit(std::span<const FeatureVector> rows);

    [[nodiscard]] std::size_t dim() const noexcept { return mean_.size(); }
    [[nodiscard]] const std::vector<double>& mean() const noexcept { return mean_; }
    [[nodiscard]] const std::vector<double>& scale() const noexcept { return scale_; }

    /// Throws DimensionError on a length mismatch.
    [[nodiscard]] FeatureVector transform(std::span<const double> x) const;
    [[nodiscard]] std::vector<FeatureVector> transform_all(std::span<const FeatureVector> rows) const;

    void write(std::ostream& out) const;
    static Standardizer read(std::istream& in);

    bool operator==(const Standardizer&) const = default;

private:
    std::vector<double> mean_;
    std::vector<double> scale_;
};

}  // namespace muvine
