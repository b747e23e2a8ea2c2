#include "fixtures.hpp"

#include "muvine/error.hpp"
#include "muvine/rng.hpp"
#include "muvine/regression.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <sstream>

using namespace muvine;
using namespace muvine::testing;

namespace {

std::vector<FeatureVector> random_points(Rng& rng, int n, int dim) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<FeatureVector> x(static_cast<std::size_t>(n));
    for (auto& p : x) {
        for (int k = 0; k < dim; ++k) p.push_back(u(rng));
    }
    return x;
}

std::vector<DerivedSample> samples(Rng& rng, int n) {
    std::uniform_int_distribution<Units> cpu(1, 4), mem(500, 4096);
    std::uniform_real_distribution<double> frac(0.3, 0.99), life(10.0, 900.0);
    std::vector<DerivedSample> out;
    for (int i = 0; i < n; ++i) {
        const auto vm = make_vm(0, cpu(rng), mem(rng), static_cast<VmClass>(1 + i % 3));
        DerivedSample s;
        s.core = extract_vm_core_features(vm);
        if (i % 7 != 0) s.lifetime = life(rng);
        s.cpu_demand = static_cast<double>(vm.cpu_demand);
        s.mem_demand = static_cast<double>(vm.mem_demand);
        s.actual_cpu = frac(rng) * s.cpu_demand;
        s.actual_mem = frac(rng) * s.mem_demand;
        out.push_back(s);
    }
    return out;
}

}  // namespace

TEST_SUITE("regression") {

TEST_CASE("single point interpolates its target") {
    const std::vector<FeatureVector> x{{1.0, 2.0}};
    const std::vector<double> y{3.5};
    const auto m = rbr_fit(x, y, 1.0);
    CHECK(m.weights(0) == doctest::Approx(3.5));
    CHECK(rbr_predict(m, x[0]) == doctest::Approx(3.5));
}

TEST_CASE("distant points give an identity system") {
    const std::vector<FeatureVector> x{{0.0}, {100.0}};
    const std::vector<double> y{2.0, -1.0};
    const auto m = rbr_fit(x, y, 1.0);
    CHECK(m.weights(0) == doctest::Approx(2.0));
    CHECK(m.weights(1) == doctest::Approx(-1.0));
}

TEST_CASE("hand evaluated kernel sum") {
    RbrModel m;
    m.gamma = 1.0;
    m.centers = Eigen::MatrixXd::Zero(1, 2);
    m.weights = Eigen::VectorXd::Constant(1, 2.0);
    CHECK(rbr_predict(m, std::vector<double>{1.0, 0.0}) == doctest::Approx(2.0 * std::exp(-1.0)));
    CHECK(rbr_predict(m, std::vector<double>{1e6, 0.0}) == 0.0);
    CHECK_THROWS_AS(rbr_predict(m, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("interpolation holds at every center") {
    Rng rng(12);
    const auto x = random_points(rng, 50, 3);
    std::vector<double> y;
    for (const auto& p : x) y.push_back(std::sin(p[0]) + p[1] * p[2]);
    const auto m = rbr_fit(x, y, median_heuristic_gamma(x));
    for (std::size_t n = 0; n < x.size(); ++n) CHECK(std::abs(rbr_predict(m, x[n]) - y[n]) <= 1e-6);

    Eigen::MatrixXd phi(m.size(), m.size());
    for (Eigen::Index i = 0; i < phi.rows(); ++i) {
        for (Eigen::Index j = 0; j < phi.cols(); ++j) {
            phi(i, j) = std::exp(-m.gamma * (m.centers.row(i) - m.centers.row(j)).squaredNorm());
        }
    }
    CHECK((phi - phi.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(phi);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("prediction ignores training order") {
    Rng rng(13);
    auto x = random_points(rng, 20, 2);
    std::vector<double> y;
    for (const auto& p : x) y.push_back(p[0] - p[1]);
    const auto a = rbr_fit(x, y, 0.7);
    std::reverse(x.begin(), x.end());
    std::reverse(y.begin(), y.end());
    const auto b = rbr_fit(x, y, 0.7);
    const std::vector<double> q{0.3, -0.4};
    CHECK(rbr_predict(a, q) == doctest::Approx(rbr_predict(b, q)).epsilon(1e-9));
}

TEST_CASE("duplicates and degenerate kernels") {
    const std::vector<FeatureVector> x{{1.0}, {1.0}, {2.0}};
    CHECK(rbr_fit(x, std::vector<double>{4.0, 4.0, 1.0}, 1.0).size() == 2);
    CHECK_THROWS_AS(rbr_fit(x, std::vector<double>{4.0, 5.0, 1.0}, 1.0), TrainingError);

    Rng rng(5);
    const auto pts = random_points(rng, 30, 2);
    std::vector<double> y(pts.size(), 1.0);
    const auto flat = rbr_fit(pts, y, 1e-10);
    CHECK(flat.ridge_used);
    for (Eigen::Index n = 0; n < flat.weights.size(); ++n) CHECK(std::isfinite(flat.weights(n)));

    CHECK_THROWS_AS(median_heuristic_gamma(std::vector<FeatureVector>{{1.0}}), std::invalid_argument);
}

TEST_CASE("derived features") {
    Rng rng(8);
    const auto data = samples(rng, 300);
    RbrParams p;
    p.max_centers = 150;
    const auto dm = fit_derived_models(data, p);
    REQUIRE(dm.models.size() == static_cast<std::size_t>(kDerivedTargetCount));

    const auto vm = make_vm(0, 3, 2000);
    CHECK(derive_features(vm, DerivedModels{}).size() == kVmCoreFeatureCount);
    CHECK(derive_features(vm, dm).size() == kVmCoreFeatureCount + 3);

    std::uniform_int_distribution<Units> cpu(1, 4), mem(500, 4096);
    for (int i = 0; i < 300; ++i) {
        const auto q = make_vm(0, cpu(rng), mem(rng), static_cast<VmClass>(1 + i % 3));
        const auto pred = dm.predict(q);
        CHECK(pred.actual_cpu > 0.0);
        CHECK(pred.actual_cpu <= static_cast<double>(q.cpu_demand));
        CHECK(pred.actual_mem > 0.0);
        CHECK(pred.actual_mem <= static_cast<double>(q.mem_demand));
        CHECK(pred.lifetime >= 0.0);
    }

    std::stringstream ss;
    dm.write(ss);
    const auto back = DerivedModels::read(ss);
    const auto a = dm.predict(vm), b = back.predict(vm);
    CHECK(a.lifetime == b.lifetime);
    CHECK(a.actual_cpu == b.actual_cpu);
    CHECK(a.actual_mem == b.actual_mem);
}

}  // TEST_SUITE
