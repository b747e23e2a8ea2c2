#include "muvine/features.hpp"

#include "muvine/error.hpp"
#include "muvine/io_util.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace muvine {

FeatureVector extract_vn_features(const VnRequest& vn) {
    FeatureVector f;
    f.reserve(kVnFeatureCount);
    f.push_back(static_cast<double>(vn.agg_cpu()));
    f.push_back(static_cast<double>(vn.agg_mem()));
    for (int c = 1; c <= 3; ++c) f.push_back(static_cast<int>(vn.vn_class()) == c ? 1.0 : 0.0);
    f.push_back(static_cast<double>(vn.priority()));
    f.push_back(vn.start());
    f.push_back(static_cast<double>(vn.vm_count()));
    f.push_back(static_cast<double>(vn.total_link_demand()));
    return f;
}

FeatureVector extract_vm_core_features(const VirtualMachine& vm) {
    return {static_cast<double>(vm.cpu_demand), static_cast<double>(vm.mem_demand),
            static_cast<double>(static_cast<int>(vm.vm_class)), static_cast<double>(vm.priority)};
}

Standardizer::Standardizer(std::vector<double> mean, std::vector<double> scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
    if (mean_.size() != scale_.size()) throw DimensionError("scaler mean and scale lengths differ");
    for (double s : scale_) {
        if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("scaler scales must be positive");
    }
}

Standardizer Standardizer::fit(std::span<const FeatureVector> rows) {
    if (rows.empty()) throw std::invalid_argument("cannot fit a scaler on an empty sample");
    const std::size_t d = rows.front().size();
    std::vector<double> mean(d, 0.0), scale(d, 0.0);
    for (const auto& r : rows) {
        if (r.size() != d) throw DimensionError("ragged feature rows");
        for (std::size_t k = 0; k < d; ++k) mean[k] += r[k];
    }
    const double n = static_cast<double>(rows.size());
    for (auto& m : mean) m /= n;
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < d; ++k) scale[k] += (r[k] - mean[k]) * (r[k] - mean[k]);
    }
    for (auto& s : scale) {
        s = std::sqrt(s / n);
        if (s < 1e-12) s = 1.0;
    }
    return Standardizer(std::move(mean), std::move(scale));
}

FeatureVector Standardizer::transform(std::span<const double> x) const {
    if (x.size() != mean_.size()) {
        throw DimensionError("expected " + std::to_string(mean_.size()) + " features, got " +
                             std::to_string(x.size()));
    }
    FeatureVector out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = (x[k] - mean_[k]) / scale_[k];
    return out;
}

std::vector<FeatureVector> Standardizer::transform_all(std::span<const FeatureVector> rows) const {
    std::vector<FeatureVector> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(transform(r));
    return out;
}

void Standardizer::write(std::ostream& out) const {
    out << "scaler " << mean_.size() << '\n';
    for (std::size_t k = 0; k < mean_.size(); ++k) {
        out << io::format_double(mean_[k]) << ' ' << io::format_double(scale_[k]) << '\n';
    }
}

Standardizer Standardizer::read(std::istream& in) {
    std::string tag;
    std::size_t d = 0;
    if (!(in >> tag >> d) || tag != "scaler") throw FormatError("expected 'scaler <dim>' header");
    std::vector<double> mean(d), scale(d);
    for (std::size_t k = 0; k < d; ++k) {
        if (!(in >> mean[k] >> scale[k])) throw FormatError("truncated scaler");
    }
    try {
        return Standardizer(std::move(mean), std::move(scale));
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
}

}  // namespace muvine
