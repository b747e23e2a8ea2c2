#include "muvine/vm_classifier.hpp"

#include "muvine/error.hpp"
#include "muvine/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

namespace muvine {

void MlcModel::write(std::ostream& out) const {
    out << "mlc " << dim() << '\n';
    for (int i = 0; i < kMlcClassCount; ++i) {
        out << "prior " << io::format_double(priors[i]) << '\n';
        for (std::size_t k = 0; k < dim(); ++k) {
            out << io::format_double(mean[i][k]) << ' ' << io::format_double(var[i][k]) << '\n';
        }
    }
}

MlcModel MlcModel::read(std::istream& in) {
    std::string tag;
    std::size_t p = 0;
    if (!(in >> tag >> p) || tag != "mlc") throw FormatError("expected 'mlc <p>' header");
    MlcModel m;
    for (int i = 0; i < kMlcClassCount; ++i) {
        if (!(in >> tag >> m.priors[i]) || tag != "prior") throw FormatError("expected 'prior <value>'");
        m.mean[i].resize(p);
        m.var[i].resize(p);
        for (std::size_t k = 0; k < p; ++k) {
            if (!(in >> m.mean[i][k] >> m.var[i][k])) throw FormatError("truncated mlc class block");
            if (!(m.var[i][k] > 0.0)) throw FormatError("mlc variance must be positive");
        }
    }
    return m;
}

MlcModel mlc_fit(std::span<const FeatureVector> x, std::span<const int> labels, bool equal_priors) {
    if (x.size() != labels.size()) throw std::invalid_argument("one label per sample is required");
    if (x.empty()) throw TrainingError("empty training set");
    const std::size_t p = x.front().size();
    MlcModel m;
    std::array<std::size_t, kMlcClassCount> count{};
    for (int i = 0; i < kMlcClassCount; ++i) {
        m.mean[i].assign(p, 0.0);
        m.var[i].assign(p, 0.0);
    }
    for (std::size_t s = 0; s < x.size(); ++s) {
        const int c = labels[s];
        if (c < 0 || c >= kMlcClassCount) throw std::invalid_argument("class index out of range");
        if (x[s].size() != p) throw DimensionError("ragged classifier inputs");
        ++count[c];
        for (std::size_t k = 0; k < p; ++k) m.mean[c][k] += x[s][k];
    }
    for (int i = 0; i < kMlcClassCount; ++i) {
        if (count[i] < 2) throw TrainingError("class " + std::to_string(i) + " has fewer than two samples");
        for (auto& v : m.mean[i]) v /= static_cast<double>(count[i]);
    }
    for (std::size_t s = 0; s < x.size(); ++s) {
        const int c = labels[s];
        for (std::size_t k = 0; k < p; ++k) m.var[c][k] += (x[s][k] - m.mean[c][k]) * (x[s][k] - m.mean[c][k]);
    }
    for (int i = 0; i < kMlcClassCount; ++i) {
        for (auto& v : m.var[i]) v = std::max(kMlcVarianceFloor, v / static_cast<double>(count[i]));
        m.priors[i] = equal_priors ? 1.0 / kMlcClassCount
                                   : static_cast<double>(count[i]) / static_cast<double>(x.size());
    }
    return m;
}

double mlc_log_likelihood(const MlcModel& model, std::span<const double> x, int class_index) {
    if (class_index < 0 || class_index >= kMlcClassCount) throw std::out_of_range("class index out of range");
    if (x.size() != model.dim()) {
        throw DimensionError("classifier expects " + std::to_string(model.dim()) + " features, got " +
                             std::to_string(x.size()));
    }
    static const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
    double ll = std::log(model.priors[class_index]);
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double v = model.var[class_index][k];
        const double d = x[k] - model.mean[class_index][k];
        ll += -kLogSqrt2Pi - 0.5 * std::log(v) - d * d / (2.0 * v);
    }
    return ll;
}

MlcResult mlc_classify(const MlcModel& model, std::span<const double> x) {
    std::array<double, kMlcClassCount> ll{};
    MlcResult r;
    for (int i = 0; i < kMlcClassCount; ++i) {
        ll[i] = mlc_log_likelihood(model, x, i);
        if (ll[i] > ll[r.label]) r.label = i;
    }
    const double top = ll[r.label];
    double z = 0.0;
    for (int i = 0; i < kMlcClassCount; ++i) z += std::exp(ll[i] - top);
    for (int i = 0; i < kMlcClassCount; ++i) r.posteriors[i] = std::exp(ll[i] - top) / z;
    return r;
}

VmType VmTypeClassifier::classify(std::span<const double> aggregate) const {
    return static_cast<VmType>(mlc_classify(model, scaler.transform(aggregate)).label);
}

void VmTypeClassifier::write(std::ostream& out) const {
    scaler.write(out);
    model.write(out);
}

VmTypeClassifier VmTypeClassifier::read(std::istream& in) {
    VmTypeClassifier c;
    c.scaler = Standardizer::read(in);
    c.model = MlcModel::read(in);
    if (c.model.dim() != c.scaler.dim()) throw FormatError("classifier dimension differs from its scaler");
    return c;
}

VmTypeClassifier train_vm_classifier(std::span<const FeatureVector> aggregate, std::span<const VmType> labels,
                                     bool equal_priors) {
    VmTypeClassifier c;
    c.scaler = Standardizer::fit(aggregate);
    const auto z = c.scaler.transform_all(aggregate);
    std::vector<int> idx;
    idx.reserve(labels.size());
    for (auto t : labels) idx.push_back(static_cast<int>(t));
    c.model = mlc_fit(z, idx, equal_priors);
    return c;
}

double class_share_error(std::span<const VmType> predicted, std::span<const VmType> truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw std::invalid_argument("share error needs equal-length, non-empty label lists");
    }
    std::array<double, kMlcClassCount> diff{};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        diff[static_cast<int>(predicted[i])] += 1.0;
        diff[static_cast<int>(truth[i])] -= 1.0;
    }
    double worst = 0.0;
    for (double d : diff) worst = std::max(worst, std::abs(d) / static_cast<double>(truth.size()));
    return worst;
}

}  // namespace muvine
