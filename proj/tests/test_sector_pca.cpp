#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "hpca/sector_pca.hpp"
#include "test_support.hpp"

using namespace hpca;
using hpca::testing::make_panel;

namespace {

double sample_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd x = a.array() - a.mean();
    const Eigen::ArrayXd y = b.array() - b.mean();
    return (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
}

} // namespace

TEST(SectorPartition, Validation) {
    EXPECT_THROW(SectorPartition({0, 2}, {"a", "b"}), InputError);
    EXPECT_THROW(SectorPartition({0, 0}, {"a", "b"}), InputError);
    const SectorPartition p({1, 0, 1}, {"x", "y"});
    EXPECT_EQ(p.size(1), 2u);
    EXPECT_EQ(p.members(1), (std::vector<std::size_t>{0, 2}));
    EXPECT_FALSE(p.parent(0).has_value());
    const SectorPartition q({0, 1}, {"x", "y"}, {std::string("World"), std::nullopt});
    EXPECT_EQ(*q.parent(0), "World");
}

TEST(SectorMap, LoadsAndWarns) {
    std::istringstream in("asset,sector\nB,Energy\nA,Tech\nZZZ,Tech\nC,Energy\n");
    const auto r = load_sector_map(in, {"A", "B", "C"});
    EXPECT_EQ(r.partition.sector_count(), 2u);
    EXPECT_EQ(r.partition.label(0), "Energy");
    EXPECT_EQ(r.partition.sector_of(0), 1u);
    EXPECT_EQ(r.partition.members(0), (std::vector<std::size_t>{1, 2}));
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_NE(r.warnings[0].find("ZZZ"), std::string::npos);
}

TEST(SectorMap, Errors) {
    std::istringstream missing("asset,sector\nA,Tech\n");
    EXPECT_THROW(load_sector_map(missing, {"A", "B"}), InputError);
    std::istringstream no_header("A,Tech\nB,Tech\n");
    EXPECT_THROW(load_sector_map(no_header, {"A", "B"}), InputError);
    std::istringstream conflict("asset,sector\nA,Tech\nA,Energy\n");
    EXPECT_THROW(load_sector_map(conflict, {"A"}), InputError);
}

TEST(FitSector, Singleton) {
    std::mt19937_64 rng(1);
    const auto panel = standardize(make_panel(hpca::testing::gaussian(rng, 40, 3)));
    const SectorPartition p({0, 1, 0}, {"pair", "single"});
    const auto m = fit_sector(panel, p, 1);
    EXPECT_NEAR(m.leading_eigenvalue(), 1.0, 1e-15);
    EXPECT_NEAR(m.spectrum.vectors(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(m.betas(0), 1.0, 1e-15);
    EXPECT_TRUE(m.factor == panel.values().col(1));
}

TEST(FitSector, PerfectPair) {
    Eigen::MatrixXd x(5, 2);
    x.col(0) << 0.1, -0.2, 0.3, 0.05, -0.1;
    x.col(1) = 3.0 * x.col(0);
    const auto panel = standardize(make_panel(x));
    const auto m = fit_sector(panel, SectorPartition({0, 0}, {"s"}), 0);
    EXPECT_NEAR(m.spectrum.values(0), 2.0, 1e-12);
    EXPECT_NEAR(m.spectrum.values(1), 0.0, 1e-12);
    EXPECT_NEAR(m.betas(0), 1.0, 1e-12);
    EXPECT_NEAR(m.betas(1), 1.0, 1e-12);
    EXPECT_LE((m.factor - panel.values().col(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FitSector, PairWithCorrelationSixTenths) {
    // u, v orthogonal, zero-mean, equal norm: corr(u, 0.6u + 0.8v) = 0.6.
    Eigen::VectorXd u(4), v(4);
    u << 1, 1, -1, -1;
    v << 1, -1, 1, -1;
    Eigen::MatrixXd x(4, 2);
    x.col(0) = u;
    x.col(1) = 0.6 * u + 0.8 * v;
    const auto m = fit_sector(standardize(make_panel(x)), SectorPartition({0, 0}, {"s"}), 0);
    EXPECT_NEAR(m.correlation(0, 1), 0.6, 1e-15);
    EXPECT_NEAR(m.leading_eigenvalue(), 1.6, 1e-14);
    EXPECT_NEAR(m.spectrum.values(1), 0.4, 1e-14);
    const double beta = std::sqrt(1.6) / std::sqrt(2.0); // 0.894427...
    EXPECT_NEAR(m.betas(0), beta, 1e-14);
    EXPECT_NEAR(m.betas(1), beta, 1e-14);
    EXPECT_NEAR(beta, 0.8944, 1e-4);
}

TEST(FitSector, PartitionSizeMismatch) {
    std::mt19937_64 rng(2);
    const auto panel = standardize(make_panel(hpca::testing::gaussian(rng, 10, 3)));
    EXPECT_THROW(fit_sector(panel, SectorPartition({0, 0}, {"s"}), 0), InputError);
    EXPECT_THROW(fit_sector(panel, SectorPartition({0, 0, 0}, {"s"}), 1), InputError);
}

TEST(FitSector, RegressionInvariants) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const auto sizes = hpca::testing::random_sizes(rng, 25, 5);
        const auto p = hpca::testing::shuffled_partition(rng, sizes);
        const auto n = static_cast<Eigen::Index>(p.asset_count());
        const auto panel = standardize(make_panel(hpca::testing::correlated_returns(rng, 5 * n + 10, n)));
        const double denom = double(panel.rows() - 1);
        for (std::size_t k = 0; k < p.sector_count(); ++k) {
            const auto m = fit_sector(panel, p, k);
            EXPECT_NEAR(m.spectrum.values.sum(), double(p.size(k)), 1e-8);
            EXPECT_LE(std::abs(m.factor.mean()), 1e-10);
            EXPECT_NEAR(m.factor.squaredNorm() / denom, 1.0, 1e-8);
            for (std::size_t i = 0; i < m.members.size(); ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                const Eigen::VectorXd xj = panel.values().col(static_cast<Eigen::Index>(m.members[i]));
                const double beta = m.betas(ii);
                EXPECT_EQ(beta, std::sqrt(m.leading_eigenvalue()) * m.spectrum.vectors(ii, 0));
                EXPECT_LE(std::abs(beta), 1.0 + 1e-10);
                EXPECT_NEAR(sample_corr(xj, m.factor), beta, 1e-10);
                const Eigen::VectorXd eps = xj - beta * m.factor;
                EXPECT_LE(std::abs(eps.dot(m.factor) / denom), 1e-10);
            }
        }
    }
}

TEST(Embed, PaddingAndIdentity) {
    const SectorPartition one({0, 0, 0}, {"all"});
    Eigen::Vector3d v(0.6, 0.0, 0.8);
    EXPECT_TRUE(embed(v, one, 0) == Eigen::VectorXd(v));

    const SectorPartition p({1, 0, 1, 0}, {"a", "b"});
    Eigen::Vector2d u(0.6, 0.8);
    const auto w = embed(u, p, 1);
    EXPECT_EQ(w.size(), 4);
    EXPECT_EQ(w(1), 0.0);
    EXPECT_EQ(w(3), 0.0);
    EXPECT_EQ(w(0), 0.6);
    EXPECT_EQ(w(2), 0.8);
    EXPECT_NEAR(w.norm(), 1.0, 1e-15);
    EXPECT_THROW(embed(Eigen::Vector3d::Ones(), p, 0), InputError);
}

TEST(Embed, AllSectorVectorsFormOrthonormalBasis) {
    std::mt19937_64 rng(8);
    const auto p = hpca::testing::shuffled_partition(rng, {4, 1, 3, 5});
    const auto n = static_cast<Eigen::Index>(p.asset_count());
    const auto panel = standardize(make_panel(hpca::testing::correlated_returns(rng, 100, n)));
    Eigen::MatrixXd basis(n, n);
    Eigen::Index col = 0;
    for (const auto& m : fit_sectors(panel, p))
        for (Eigen::Index i = 0; i < m.spectrum.size(); ++i)
            basis.col(col++) = embed(m.spectrum.vectors.col(i), p, m.sector);
    EXPECT_EQ(col, n);
    EXPECT_LE((basis.transpose() * basis - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FactorPanel, Shapes) {
    std::mt19937_64 rng(9);
    const auto panel = standardize(make_panel(hpca::testing::gaussian(rng, 30, 2)));
    const auto one = factor_panel(fit_sectors(panel, SectorPartition({0, 0}, {"s"})));
    EXPECT_EQ(one.cols(), 1);
    EXPECT_NEAR(one.col(0).squaredNorm() / 29.0, 1.0, 1e-12);

    const auto two = factor_panel(fit_sectors(panel, SectorPartition({0, 1}, {"a", "b"})));
    EXPECT_TRUE(two == panel.values());

    auto models = fit_sectors(panel, SectorPartition({0, 1}, {"a", "b"}));
    models[1].factor.conservativeResize(10);
    EXPECT_THROW(factor_panel(models), InputError);
}

TEST(FactorPanel, ElevenSectorShape) {
    auto spec = gics_market(1508, 4);
    const auto market = generate(spec);
    const auto models = fit_sectors(standardize(market.panel), market.truth.partition);
    const auto f = factor_panel(models);
    EXPECT_EQ(f.rows(), 1508);
    EXPECT_EQ(f.cols(), 11);
}
