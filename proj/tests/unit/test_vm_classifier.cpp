#include "muvine/error.hpp"
#include "muvine/rng.hpp"
#include "muvine/vm_classifier.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace muvine;

namespace {

const std::vector<FeatureVector> kThreeClasses{{2.0}, {4.0}, {10.0}, {12.0}, {20.0}, {22.0}};
const std::vector<int> kThreeLabels{0, 0, 1, 1, 2, 2};

}  // namespace

TEST_SUITE("vm_classifier") {

TEST_CASE("class moments and priors") {
    const auto m = mlc_fit(kThreeClasses, kThreeLabels);
    CHECK(m.mean[0][0] == 3.0);
    CHECK(m.var[0][0] == 1.0);
    for (double p : m.priors) CHECK(p == doctest::Approx(1.0 / 3.0));

    const std::vector<FeatureVector> x{{2.0}, {4.0}, {12.0}, {10.0}, {22.0}, {20.0}};
    const std::vector<int> y{0, 0, 1, 1, 2, 2};
    const auto permuted = mlc_fit(x, y);
    CHECK(permuted.mean == m.mean);
    CHECK(permuted.var == m.var);
    CHECK(permuted.priors == m.priors);

    const std::vector<int> short_class{0, 0, 0, 1, 2, 2};
    CHECK_THROWS_AS(mlc_fit(kThreeClasses, short_class), TrainingError);
}

TEST_CASE("log likelihood") {
    const auto m = mlc_fit(kThreeClasses, kThreeLabels);
    const double peak = mlc_log_likelihood(m, std::vector<double>{3.0}, 0);
    CHECK(peak == doctest::Approx(std::log(1.0 / 3.0) + std::log(1.0 / std::sqrt(2.0 * std::numbers::pi))));
    CHECK(mlc_log_likelihood(m, std::vector<double>{1e3}, 0) < -1e4);
    CHECK_THROWS_AS(mlc_log_likelihood(m, std::vector<double>{1.0, 2.0}, 0), DimensionError);

    MlcModel two;
    two.priors = {0.2, 0.3, 0.5};
    for (int i = 0; i < kMlcClassCount; ++i) {
        two.mean[static_cast<std::size_t>(i)] = {1.0 * i, -1.0 * i};
        two.var[static_cast<std::size_t>(i)] = {1.5, 0.5};
    }
    MlcModel first = two, second = two;
    for (int i = 0; i < kMlcClassCount; ++i) {
        const auto k = static_cast<std::size_t>(i);
        first.mean[k] = {two.mean[k][0]};
        first.var[k] = {two.var[k][0]};
        second.mean[k] = {two.mean[k][1]};
        second.var[k] = {two.var[k][1]};
    }
    const double joint = mlc_log_likelihood(two, std::vector<double>{0.4, 0.9}, 1);
    const double parts = mlc_log_likelihood(first, std::vector<double>{0.4}, 1) +
                         mlc_log_likelihood(second, std::vector<double>{0.9}, 1) - std::log(0.3);
    CHECK(joint == doctest::Approx(parts));
}

TEST_CASE("MAP decision") {
    MlcModel m;
    m.priors = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    for (int i = 0; i < kMlcClassCount; ++i) {
        m.mean[static_cast<std::size_t>(i)] = {1.0 * i, 2.0 * i};
        m.var[static_cast<std::size_t>(i)] = {1.0, 1.0};
    }
    const auto at_second = mlc_classify(m, std::vector<double>{1.0, 2.0});
    CHECK(at_second.label == 1);
    double total = 0.0;
    for (double p : at_second.posteriors) {
        CHECK(p >= 0.0);
        total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    MlcModel same = m;
    for (int i = 0; i < kMlcClassCount; ++i) same.mean[static_cast<std::size_t>(i)] = {0.0, 0.0};
    CHECK(mlc_classify(same, std::vector<double>{0.5, -0.5}).label == 0);
}

TEST_CASE("well separated classes are learned") {
    Rng rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<FeatureVector> x;
    std::vector<VmType> y;
    for (int i = 0; i < 900; ++i) {
        const int c = i % 3;
        x.push_back({5.0 * c + g(rng), -5.0 * c + g(rng)});
        y.push_back(static_cast<VmType>(c));
    }
    const auto clf = train_vm_classifier(x, y);
    int hit = 0;
    std::vector<VmType> predicted;
    for (std::size_t i = 0; i < x.size(); ++i) {
        predicted.push_back(clf.classify(x[i]));
        hit += predicted.back() == y[i];
    }
    CHECK(static_cast<double>(hit) / static_cast<double>(x.size()) >= 0.99);
    CHECK(class_share_error(predicted, y) <= 0.07);

    std::stringstream ss;
    clf.write(ss);
    const auto back = VmTypeClassifier::read(ss);
    for (std::size_t i = 0; i < 30; ++i) CHECK(back.classify(x[i]) == predicted[i]);
}

TEST_CASE("share error") {
    const std::vector<VmType> truth{VmType::Cpu, VmType::Cpu, VmType::Mem, VmType::Gpu};
    const std::vector<VmType> predicted{VmType::Cpu, VmType::Mem, VmType::Mem, VmType::Gpu};
    CHECK(class_share_error(predicted, truth) == doctest::Approx(0.25));
    CHECK(class_share_error(truth, truth) == 0.0);
    CHECK_THROWS_AS(class_share_error(std::vector<VmType>{}, std::vector<VmType>{}), std::invalid_argument);
}

}  // TEST_SUITE
