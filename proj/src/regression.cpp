#include "muvine/regression.hpp"

#include "muvine/error.hpp"
#include "muvine/io_util.hpp"
#include "muvine/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>

namespace muvine {

namespace {

constexpr double kRidge = 1e-8;
constexpr double kMinRcond = 1e-12;
constexpr double kMinUsageFraction = 1e-3;

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
}

}  // namespace

void RbrModel::write(std::ostream& out) const {
    out << "rbr " << target_id << ' ' << io::format_double(gamma) << ' ' << centers.rows() << ' ' << centers.cols()
        << '\n';
    for (Eigen::Index n = 0; n < centers.rows(); ++n) {
        for (Eigen::Index k = 0; k < centers.cols(); ++k) out << io::format_double(centers(n, k)) << ' ';
        out << io::format_double(weights(n)) << '\n';
    }
}

RbrModel RbrModel::read(std::istream& in) {
    std::string tag;
    RbrModel m;
    Eigen::Index n = 0, d = 0;
    if (!(in >> tag >> m.target_id >> m.gamma >> n >> d) || tag != "rbr") {
        throw FormatError("expected 'rbr <target> <gamma> <N> <dim>' header");
    }
    if (!(m.gamma > 0.0) || n < 0 || d < 0) throw FormatError("bad rbr header values");
    m.centers.resize(n, d);
    m.weights.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) {
            if (!(in >> m.centers(i, k))) throw FormatError("truncated rbr centers");
        }
        if (!(in >> m.weights(i))) throw FormatError("truncated rbr weights");
    }
    return m;
}

double median_heuristic_gamma(std::span<const FeatureVector> x) {
    if (x.size() < 2) throw std::invalid_argument("median heuristic needs at least two points");
    std::vector<double> d;
    d.reserve(x.size() * (x.size() - 1) / 2);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) d.push_back(std::sqrt(squared_distance(x[i], x[j])));
    }
    const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    double median = *mid;
    if (d.size() % 2 == 0) median = 0.5 * (median + *std::max_element(d.begin(), mid));
    if (!(median > 0.0)) throw std::invalid_argument("all points coincide");
    return 1.0 / (2.0 * median * median);
}

RbrModel rbr_fit(std::span<const FeatureVector> x, std::span<const double> y, double gamma, int target_id) {
    if (x.size() != y.size()) throw std::invalid_argument("one target per point is required");
    if (x.empty()) throw TrainingError("cannot fit a regressor without points");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be positive");
    const std::size_t dim = x.front().size();

    std::map<FeatureVector, double> unique;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].size() != dim) throw DimensionError("ragged regression inputs");
        auto [it, inserted] = unique.emplace(x[i], y[i]);
        if (!inserted && it->second != y[i]) throw TrainingError("repeated center with conflicting targets");
    }
    // Keep the caller's order so the system matches the input listing.
    std::vector<std::size_t> keep;
    {
        std::map<FeatureVector, bool> taken;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (taken.emplace(x[i], true).second) keep.push_back(i);
        }
    }

    const auto n = static_cast<Eigen::Index>(keep.size());
    RbrModel m;
    m.target_id = target_id;
    m.gamma = gamma;
    m.centers.resize(n, static_cast<Eigen::Index>(dim));
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = x[keep[static_cast<std::size_t>(i)]];
        for (std::size_t k = 0; k < dim; ++k) m.centers(i, static_cast<Eigen::Index>(k)) = row[k];
        rhs(i) = y[keep[static_cast<std::size_t>(i)]];
    }
    Eigen::MatrixXd phi(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        phi(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = std::exp(-gamma * (m.centers.row(i) - m.centers.row(j)).squaredNorm());
            phi(i, j) = v;
            phi(j, i) = v;
        }
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(phi);
    if (lu.rcond() >= kMinRcond) {
        m.weights = lu.solve(rhs);
        if (m.weights.allFinite()) return m;
    }
    m.ridge_used = true;
    phi.diagonal().array() += kRidge;
    m.weights = Eigen::PartialPivLU<Eigen::MatrixXd>(phi).solve(rhs);
    if (!m.weights.allFinite()) throw TrainingError("ridge-regularized interpolation produced non-finite weights");
    return m;
}

double rbr_predict(const RbrModel& model, std::span<const double> x) {
    if (x.size() != model.dim()) {
        throw DimensionError("regressor expects " + std::to_string(model.dim()) + " features, got " +
                             std::to_string(x.size()));
    }
    const Eigen::Map<const Eigen::RowVectorXd> q(x.data(), static_cast<Eigen::Index>(x.size()));
    double s = 0.0;
    for (Eigen::Index n = 0; n < model.centers.rows(); ++n) {
        s += model.weights(n) * std::exp(-model.gamma * (model.centers.row(n) - q).squaredNorm());
    }
    return s;
}

namespace {

double predict_target(const DerivedModels& dm, const VirtualMachine& vm, std::size_t t, const FeatureVector& z) {
    const double raw = rbr_predict(dm.models[t], z);
    switch (static_cast<DerivedTarget>(dm.models[t].target_id)) {
    case DerivedTarget::Lifetime:
        return std::max(0.0, raw) * dm.lifetime_scale;
    case DerivedTarget::CpuUsage:
        return std::clamp(raw, kMinUsageFraction, 1.0) * static_cast<double>(vm.cpu_demand);
    case DerivedTarget::MemUsage:
        return std::clamp(raw, kMinUsageFraction, 1.0) * static_cast<double>(vm.mem_demand);
    }
    return raw;
}

}  // namespace

DerivedPrediction DerivedModels::predict(const VirtualMachine& vm) const {
    if (models.size() != static_cast<std::size_t>(kDerivedTargetCount)) {
        throw std::invalid_argument("derived prediction needs one model per target");
    }
    const FeatureVector z = scaler.transform(extract_vm_core_features(vm));
    return {predict_target(*this, vm, 0, z), predict_target(*this, vm, 1, z), predict_target(*this, vm, 2, z)};
}

void DerivedModels::write(std::ostream& out) const {
    out << "derived " << models.size() << ' ' << io::format_double(lifetime_scale) << '\n';
    scaler.write(out);
    for (const auto& m : models) m.write(out);
}

DerivedModels DerivedModels::read(std::istream& in) {
    std::string tag;
    std::size_t k = 0;
    DerivedModels dm;
    if (!(in >> tag >> k >> dm.lifetime_scale) || tag != "derived") {
        throw FormatError("expected 'derived <k> <lifetime_scale>' header");
    }
    dm.scaler = Standardizer::read(in);
    for (std::size_t t = 0; t < k; ++t) {
        dm.models.push_back(RbrModel::read(in));
        if (dm.models.back().target_id != static_cast<int>(t)) throw FormatError("regressors out of order");
        if (dm.models.back().dim() != dm.scaler.dim()) throw FormatError("regressor dimension differs from scaler");
    }
    return dm;
}

DerivedModels fit_derived_models(std::span<const DerivedSample> samples, const RbrParams& params) {
    if (samples.empty()) throw TrainingError("no samples for the derived-feature regressors");
    if (params.max_centers < 1) throw std::invalid_argument("max_centers must be at least 1");
    std::vector<FeatureVector> core;
    core.reserve(samples.size());
    for (const auto& s : samples) core.push_back(s.core);

    DerivedModels dm;
    dm.scaler = Standardizer::fit(core);
    double life_sum = 0.0;
    std::size_t life_n = 0;
    for (const auto& s : samples) {
        if (s.lifetime) {
            life_sum += *s.lifetime;
            ++life_n;
        }
    }
    if (life_n == 0) throw TrainingError("no completed lifetimes to learn from");
    dm.lifetime_scale = life_sum > 0.0 ? life_sum / static_cast<double>(life_n) : 1.0;

    for (int t = 0; t < kDerivedTargetCount; ++t) {
        // Identical inputs are averaged into one center.
        std::map<FeatureVector, std::pair<double, std::size_t>> groups;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            double y = 0.0;
            if (t == static_cast<int>(DerivedTarget::Lifetime)) {
                if (!s.lifetime) continue;
                y = *s.lifetime / dm.lifetime_scale;
            } else if (t == static_cast<int>(DerivedTarget::CpuUsage)) {
                y = s.actual_cpu / s.cpu_demand;
            } else {
                y = s.actual_mem / s.mem_demand;
            }
            auto& g = groups[dm.scaler.transform(s.core)];
            g.first += y;
            g.second += 1;
        }
        std::vector<std::pair<FeatureVector, double>> points;
        points.reserve(groups.size());
        for (auto& [x, g] : groups) points.emplace_back(x, g.first / static_cast<double>(g.second));
        if (points.size() > params.max_centers) {
            Rng rng(sub_seed(params.seed, "rbr_centers_" + std::to_string(t)));
            for (std::size_t i = points.size() - 1; i > 0; --i) {
                std::uniform_int_distribution<std::size_t> pick(0, i);
                std::swap(points[i], points[pick(rng)]);
            }
            points.resize(params.max_centers);
        }
        std::vector<FeatureVector> xs;
        std::vector<double> ys;
        for (auto& [x, y] : points) {
            xs.push_back(x);
            ys.push_back(y);
        }
        double gamma = 1.0;
        if (params.gamma) {
            gamma = *params.gamma;
        } else if (xs.size() >= 2) {
            gamma = median_heuristic_gamma(xs);
        }
        dm.models.push_back(rbr_fit(xs, ys, gamma, t));
    }
    return dm;
}

FeatureVector derive_features(const VirtualMachine& vm, const DerivedModels& models) {
    FeatureVector out = extract_vm_core_features(vm);
    if (models.models.empty()) return out;
    const FeatureVector z = models.scaler.transform(out);
    for (std::size_t t = 0; t < models.models.size(); ++t) out.push_back(predict_target(models, vm, t, z));
    return out;
}

}  // namespace muvine
