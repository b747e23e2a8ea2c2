#include "muvine/admission.hpp"

#include "muvine/error.hpp"
#include "muvine/io_util.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

namespace muvine {

SvmModel::SvmModel(std::vector<double> weights, double bias, double lambda_)
    : w(std::move(weights)), c(bias), lambda(lambda_),
      scaler(std::vector<double>(w.size(), 0.0), std::vector<double>(w.size(), 1.0)) {}

void SvmModel::write(std::ostream& out) const {
    out << "svm " << w.size() << ' ' << io::format_double(lambda) << '\n';
    for (std::size_t k = 0; k < w.size(); ++k) out << (k ? " " : "") << io::format_double(w[k]);
    out << '\n' << io::format_double(c) << '\n';
    scaler.write(out);
}

SvmModel SvmModel::read(std::istream& in) {
    std::string tag;
    std::size_t d = 0;
    double lambda = 0.0;
    if (!(in >> tag >> d >> lambda) || tag != "svm") throw FormatError("expected 'svm <dim> <lambda>' header");
    if (!(lambda > 0.0)) throw FormatError("svm lambda must be positive");
    std::vector<double> w(d);
    for (auto& v : w) {
        if (!(in >> v)) throw FormatError("truncated svm weights");
    }
    double c = 0.0;
    if (!(in >> c)) throw FormatError("missing svm bias");
    SvmModel m(std::move(w), c, lambda);
    m.scaler = Standardizer::read(in);
    if (m.scaler.dim() != d) throw FormatError("svm scaler dimension differs from the weights");
    return m;
}

double svm_objective(std::span<const double> w, double c, double lambda, std::span<const FeatureVector> x,
                     std::span<const int> labels) {
    double hinge = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double s = c;
        for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * x[i][k];
        hinge += std::max(0.0, 1.0 - labels[i] * s);
    }
    double norm2 = 0.0;
    for (double v : w) norm2 += v * v;
    return (x.empty() ? 0.0 : hinge / static_cast<double>(x.size())) + lambda * norm2;
}

SvmModel svm_train(std::span<const FeatureVector> x, std::span<const int> labels, const SvmParams& params,
                   bool standardize) {
    if (x.size() != labels.size()) throw std::invalid_argument("one label per sample is required");
    if (x.empty()) throw TrainingError("empty training set");
    if (!(params.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (params.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
    const bool has_neg = std::find(labels.begin(), labels.end(), -1) != labels.end();
    for (int l : labels) {
        if (l != 1 && l != -1) throw std::invalid_argument("labels must be +1 or -1");
    }
    if (!has_pos || !has_neg) throw TrainingError("training set contains a single class");

    const std::size_t d = x.front().size();
    Standardizer scaler = standardize ? Standardizer::fit(x)
                                      : Standardizer(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0));
    const std::vector<FeatureVector> rows = scaler.transform_all(x);
    const double n = static_cast<double>(rows.size());

    std::vector<double> w(d, 0.0), grad(d);
    double c = 0.0;
    std::vector<double> best_w = w;
    double best_c = c;
    double best_obj = svm_objective(w, c, params.lambda, rows, labels);

    // The regularizer lambda*|w|^2 is 2*lambda strongly convex, so steps
    // decay as 1/(2*lambda*t). The offset t0 = 1/(2*lambda) keeps the first
    // step near 1 on standardized features. Iterates are not monotone; the
    // best one seen is kept.
    const double t0 = 1.0 / (2.0 * params.lambda);
    for (int t = 1; t <= params.epochs; ++t) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_c = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double s = c;
            for (std::size_t k = 0; k < d; ++k) s += w[k] * rows[i][k];
            if (labels[i] * s < 1.0) {
                for (std::size_t k = 0; k < d; ++k) grad[k] -= labels[i] * rows[i][k];
                grad_c -= labels[i];
            }
        }
        const double eta = 1.0 / (2.0 * params.lambda * (t + t0));
        for (std::size_t k = 0; k < d; ++k) w[k] -= eta * (grad[k] / n + 2.0 * params.lambda * w[k]);
        c -= eta * grad_c / n;

        const double obj = svm_objective(w, c, params.lambda, rows, labels);
        if (obj < best_obj) {
            best_obj = obj;
            best_w = w;
            best_c = c;
        }
    }

    SvmModel model(std::move(best_w), best_c, params.lambda);
    model.scaler = std::move(scaler);
    model.epochs = params.epochs;
    model.seed = params.seed;
    return model;
}

SvmPrediction svm_predict(const SvmModel& model, std::span<const double> x) {
    if (x.size() != model.w.size()) {
        throw DimensionError("svm expects " + std::to_string(model.w.size()) + " features, got " +
                             std::to_string(x.size()));
    }
    const FeatureVector z = model.scaler.transform(x);
    double s = model.c;
    for (std::size_t k = 0; k < z.size(); ++k) s += model.w[k] * z[k];
    return {s >= 0.0, s};
}

}  // namespace muvine
