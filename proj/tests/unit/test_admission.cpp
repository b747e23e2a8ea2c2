#include "fixtures.hpp"

#include "muvine/admission.hpp"
#include "muvine/error.hpp"
#include "muvine/rng.hpp"
#include "muvine/features.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace muvine;
using namespace muvine::testing;

TEST_SUITE("admission") {

TEST_CASE("VN features") {
    const VnRequest vn(0, 12.5, {make_vm(0, 1, 500), make_vm(1, 2, 600, VmClass::Class2)}, {{0, 1, 80}});
    const auto f = extract_vn_features(vn);
    REQUIRE(f.size() == kVnFeatureCount);
    CHECK(f[0] == 3.0);
    CHECK(f[1] == 1100.0);
    CHECK(f == extract_vn_features(vn));
}

TEST_CASE("standardized corpus has zero mean and unit variance") {
    Rng rng(3);
    std::normal_distribution<double> g(5.0, 3.0);
    std::vector<FeatureVector> rows;
    for (int i = 0; i < 400; ++i) rows.push_back({g(rng), 2.0 * g(rng) + 1.0, 7.0});
    const auto scaler = Standardizer::fit(rows);
    const auto z = scaler.transform_all(rows);
    for (std::size_t k = 0; k < 3; ++k) {
        double mean = 0.0, var = 0.0;
        for (const auto& r : z) mean += r[k];
        mean /= static_cast<double>(z.size());
        for (const auto& r : z) var += (r[k] - mean) * (r[k] - mean);
        var /= static_cast<double>(z.size());
        CHECK(std::abs(mean) < 1e-9);
        if (k < 2) CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
        else CHECK(var == 0.0);
    }
    CHECK_THROWS_AS((void)scaler.transform(std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("prediction") {
    const SvmModel m({1.0, 0.0}, 0.0, 1e-3);
    const auto a = svm_predict(m, std::vector<double>{2.0, 5.0});
    CHECK(a.score == 2.0);
    CHECK(a.accepted);

    const SvmModel shifted({1.0, 0.0}, -3.0, 1e-3);
    const auto r = svm_predict(shifted, std::vector<double>{2.0, 5.0});
    CHECK(r.score == -1.0);
    CHECK_FALSE(r.accepted);

    const SvmModel tie({1.0, 0.0}, -2.0, 1e-3);
    CHECK(svm_predict(tie, std::vector<double>{2.0, 5.0}).accepted);

    CHECK_THROWS_AS(svm_predict(m, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("positive rescaling keeps every label") {
    Rng rng(9);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const SvmModel m({0.7, -1.3}, 0.4, 1e-3);
    const SvmModel scaled({0.7 * 3.5, -1.3 * 3.5}, 0.4 * 3.5, 1e-3);
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> x{u(rng), u(rng)};
        CHECK(svm_predict(m, x).accepted == svm_predict(scaled, x).accepted);
    }
}

TEST_CASE("hinge term vanishes on the margin") {
    const std::vector<FeatureVector> x{{1.0}};
    const std::vector<int> y{1};
    const std::vector<double> w{0.5};
    CHECK(svm_objective(w, 0.5, 0.0, x, y) == 0.0);
    CHECK(svm_objective(w, 0.5, 2.0, x, y) == doctest::Approx(0.5));
}

TEST_CASE("training") {
    SvmParams p;
    p.epochs = 500;
    const std::vector<FeatureVector> x{{-1.0}, {1.0}};
    const std::vector<int> y{-1, 1};
    const auto m = svm_train(x, y, p);
    CHECK_FALSE(svm_predict(m, x[0]).accepted);
    CHECK(svm_predict(m, x[1]).accepted);

    p.lambda = 1e6;
    const auto flat = svm_train(x, y, p);
    CHECK(std::abs(flat.w[0]) < 1e-3);

    const std::vector<int> one_label{1, 1};
    CHECK_THROWS_AS(svm_train(x, one_label, p), TrainingError);
}

TEST_CASE("training never ends above the zero model") {
    Rng rng(21);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int run = 0; run < 5; ++run) {
        std::vector<FeatureVector> x;
        std::vector<int> y;
        for (int i = 0; i < 150; ++i) {
            x.push_back({g(rng), g(rng), g(rng)});
            y.push_back(g(rng) + x.back()[0] > 0.0 ? 1 : -1);
        }
        SvmParams p;
        p.epochs = 200;
        p.seed = static_cast<std::uint64_t>(run);
        const auto m = svm_train(x, y, p, false);
        const std::vector<double> zero(3, 0.0);
        CHECK(svm_objective(m.w, m.c, p.lambda, x, y) <= svm_objective(zero, 0.0, p.lambda, x, y));
    }
}

TEST_CASE("separable corpus generalizes") {
    Rng rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::vector<double> truth{1.0, -2.0, 0.5};
    auto draw = [&](std::vector<FeatureVector>& x, std::vector<int>& y, int n) {
        while (static_cast<int>(x.size()) < n) {
            FeatureVector v{g(rng), g(rng), g(rng)};
            const double s = truth[0] * v[0] + truth[1] * v[1] + truth[2] * v[2];
            if (std::abs(s) < 0.5 * std::sqrt(5.25)) continue;
            x.push_back(v);
            y.push_back(s > 0.0 ? 1 : -1);
        }
    };
    std::vector<FeatureVector> xtr, xte;
    std::vector<int> ytr, yte;
    draw(xtr, ytr, 600);
    draw(xte, yte, 300);
    const auto m = svm_train(xtr, ytr, SvmParams{});
    int hit = 0;
    for (std::size_t i = 0; i < xte.size(); ++i) hit += svm_predict(m, xte[i]).accepted == (yte[i] > 0);
    CHECK(static_cast<double>(hit) / static_cast<double>(xte.size()) >= 0.95);
}

TEST_CASE("model text round trip") {
    const std::vector<FeatureVector> x{{-1.0, 2.0}, {1.0, 3.0}, {0.5, -1.0}};
    const std::vector<int> y{-1, 1, 1};
    SvmParams p;
    p.epochs = 50;
    const auto m = svm_train(x, y, p);
    std::stringstream ss;
    m.write(ss);
    const auto back = SvmModel::read(ss);
    CHECK(back.w == m.w);
    CHECK(back.c == m.c);
    CHECK(back.scaler == m.scaler);
    std::stringstream bad("svm\nnonsense\n");
    CHECK_THROWS_AS(SvmModel::read(bad), FormatError);
}

}  // TEST_SUITE
