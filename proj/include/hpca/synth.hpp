#pragma once

// Synthetic return panels with a known hierarchical correlation structure.
//
// Returns are drawn as X_j = beta*_j F*_{I(j)} + eps_j with Gaussian sector
// factors F* ~ N(0, rho*) and sector-local noise eps_k ~ N(0, C_k - beta*_k beta*_k^T),
// so the population correlation is exactly the hierarchical matrix built
// from the blocks C_k and rho*.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hpca/eigen.hpp"
#include "hpca/error.hpp"
#include "hpca/hpca_core.hpp"
#include "hpca/panel.hpp"
#include "hpca/sector_pca.hpp"

namespace hpca {

struct SectorSpec {
    std::string name;
    std::size_t size = 0;
    /// Either a one-parameter equicorrelation or a full size x size matrix.
    std::optional<double> equicorrelation;
    Eigen::MatrixXd correlation;

    /// The intra-block population correlation matrix.
    Eigen::MatrixXd block() const {
        if (correlation.size() > 0) return correlation;
        const double rho = equicorrelation.value_or(0.0);
        const auto n = static_cast<Eigen::Index>(size);
        Eigen::MatrixXd c = Eigen::MatrixXd::Constant(n, n, rho);
        c.diagonal().setOnes();
        return c;
    }
};

struct MarketSpec {
    std::vector<SectorSpec> sectors;
    /// True b x b correlation of the sector factors.
    Eigen::MatrixXd factor_correlation;
    std::size_t t = 0;
    std::uint64_t seed = 0;
    /// Per-period return scale applied to every asset (correlations are unaffected).
    double volatility = 1.0;
    /// First date label (ISO-8601); subsequent dates skip weekends.
    std::string start_date = "2012-02-22";

    std::size_t asset_count() const {
        std::size_t n = 0;
        for (const auto& s : sectors) n += s.size;
        return n;
    }

    std::vector<std::size_t> sizes() const {
        std::vector<std::size_t> out;
        for (const auto& s : sectors) out.push_back(s.size);
        return out;
    }
};

/// One-factor inter-sector correlation: rho(k,k') = l_k l_k' off the diagonal.
inline Eigen::MatrixXd one_factor_correlation(const std::vector<double>& loadings) {
    const Eigen::Map<const Eigen::VectorXd> l(loadings.data(), static_cast<Eigen::Index>(loadings.size()));
    Eigen::MatrixXd c = l * l.transpose();
    c.diagonal().setOnes();
    return c;
}

/// Eleven sectors sized like the GIC breakdown of the S&P 500 sample
/// (n = 462), with moderate intra-sector equicorrelations and a one-factor
/// inter-sector structure.
inline MarketSpec gics_market(std::size_t t = 1508, std::uint64_t seed = 1) {
    struct Row {
        const char* name;
        std::size_t size;
        double rho;
        double loading;
    };
    static constexpr Row rows[] = {
        {"Consumer Discretionary", 73, 0.30, 0.85}, {"Consumer Staples", 56, 0.30, 0.70},
        {"Energy", 27, 0.55, 0.65},                 {"Financials", 59, 0.50, 0.85},
        {"Health Care", 51, 0.30, 0.80},            {"Industrials", 57, 0.40, 0.90},
        {"Information Technology", 58, 0.35, 0.85}, {"Materials", 23, 0.40, 0.80},
        {"Real Estate", 27, 0.55, 0.60},            {"Telecommunication Services", 3, 0.45, 0.65},
        {"Utilities", 28, 0.60, 0.45},
    };
    MarketSpec spec;
    std::vector<double> loadings;
    for (const auto& r : rows) {
        spec.sectors.push_back({r.name, r.size, r.rho, {}});
        loadings.push_back(r.loading);
    }
    spec.factor_correlation = one_factor_correlation(loadings);
    spec.t = t;
    spec.seed = seed;
    spec.volatility = 0.01;
    return spec;
}

/// Population quantities implied by a MarketSpec.
struct GroundTruth {
    SectorPartition partition;
    /// Population sector fits (factor series left empty).
    std::vector<SectorModel> sectors;
    Eigen::MatrixXd factor_correlation;
    /// Population hierarchical correlation matrix (n x n).
    Eigen::MatrixXd correlation;
};

struct SyntheticMarket {
    ReturnsPanel panel;
    GroundTruth truth;
};

namespace detail {

/// Square root L with L L^T = c for a PSD matrix (eigenvalues clipped at 0).
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& c, const std::string& what) {
    const Spectrum s = sym_eig_sorted(c);
    if (s.values.size() > 0 && s.values(s.size() - 1) < -1e-10)
        throw InputError(what + " is not positive semi-definite (min eigenvalue " +
                         std::to_string(s.values(s.size() - 1)) + ")");
    return s.vectors * s.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

inline void check_correlation(const Eigen::MatrixXd& c, const std::string& what) {
    if (c.rows() != c.cols()) throw InputError(what + " is not square");
    if (!c.allFinite()) throw InputError(what + " has non-finite entries");
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InputError(what + " is not symmetric");
    if ((c.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) throw InputError(what + " lacks a unit diagonal");
}

/// Weekday dates (ISO-8601) starting at `start`.
inline std::vector<std::string> business_days(const std::string& start, std::size_t count) {
    using namespace std::chrono;
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(start.c_str(), "%d-%u-%u", &y, &m, &d) != 3) throw InputError("bad start date '" + start + "'");
    year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw InputError("bad start date '" + start + "'");
    sys_days day_point{ymd};
    std::vector<std::string> out;
    out.reserve(count);
    while (out.size() < count) {
        const weekday wd{day_point};
        if (wd != Saturday && wd != Sunday) {
            const year_month_day cur{day_point};
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(cur.year()),
                          static_cast<unsigned>(cur.month()), static_cast<unsigned>(cur.day()));
            out.emplace_back(buf);
        }
        day_point += days{1};
    }
    return out;
}

} // namespace detail

/// Population structure of a spec; validates every correlation input.
inline GroundTruth ground_truth(const MarketSpec& spec) {
    const std::size_t b = spec.sectors.size();
    if (b == 0) throw InputError("market spec: no sectors");
    if (spec.factor_correlation.rows() != static_cast<Eigen::Index>(b))
        throw InputError("market spec: factor correlation must be " + std::to_string(b) + " x " + std::to_string(b));
    detail::check_correlation(spec.factor_correlation, "factor correlation");
    (void)detail::psd_sqrt(spec.factor_correlation, "factor correlation");

    std::vector<std::size_t> sector_of;
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < b; ++k) {
        const auto& s = spec.sectors[k];
        if (s.size == 0) throw InputError("market spec: sector '" + s.name + "' is empty");
        sector_of.insert(sector_of.end(), s.size, k);
        labels.push_back(s.name);
    }
    SectorPartition partition(std::move(sector_of), std::move(labels));

    std::vector<SectorModel> sectors;
    for (std::size_t k = 0; k < b; ++k) {
        const auto& s = spec.sectors[k];
        SectorModel model;
        model.sector = k;
        model.members = partition.members(k);
        model.correlation = s.block();
        if (model.correlation.rows() != static_cast<Eigen::Index>(s.size))
            throw InputError("market spec: sector '" + s.name + "' correlation has wrong size");
        detail::check_correlation(model.correlation, "sector '" + s.name + "' correlation");
        model.spectrum = sym_eig_sorted(model.correlation);
        if (model.spectrum.values(model.spectrum.size() - 1) < -1e-10)
            throw InputError("sector '" + s.name + "' correlation is not positive semi-definite");
        model.betas = std::sqrt(model.leading_eigenvalue()) * model.spectrum.vectors.col(0);
        sectors.push_back(std::move(model));
    }
    InterSectorCorrelation rho{spec.factor_correlation};
    Eigen::MatrixXd corr = build_hpca_matrix(sectors, rho, partition);
    return {std::move(partition), std::move(sectors), spec.factor_correlation, std::move(corr)};
}

/// Draws spec.t jointly Gaussian observations; identical output for identical
/// (spec, seed).
inline SyntheticMarket generate(const MarketSpec& spec) {
    if (spec.t < 2) throw InputError("market spec: T must be at least 2");
    if (!(spec.volatility > 0.0)) throw InputError("market spec: volatility must be positive");
    GroundTruth truth = ground_truth(spec);
    const std::size_t b = spec.sectors.size();
    const auto n = static_cast<Eigen::Index>(spec.asset_count());
    const auto t = static_cast<Eigen::Index>(spec.t);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd z(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) z(i, j) = normal(rng);
        return z;
    };

    const Eigen::MatrixXd factor_root = detail::psd_sqrt(spec.factor_correlation, "factor correlation");
    const Eigen::MatrixXd factors = draw(t, static_cast<Eigen::Index>(b)) * factor_root.transpose();

    Eigen::MatrixXd x(t, n);
    for (std::size_t k = 0; k < b; ++k) {
        const auto& model = truth.sectors[k];
        const auto nk = static_cast<Eigen::Index>(model.members.size());
        const Eigen::MatrixXd residual_cov = model.correlation - model.betas * model.betas.transpose();
        const Eigen::MatrixXd noise = draw(t, nk) * detail::psd_sqrt(residual_cov, "sector residual").transpose();
        const Eigen::MatrixXd block = factors.col(static_cast<Eigen::Index>(k)) * model.betas.transpose() + noise;
        for (Eigen::Index i = 0; i < nk; ++i)
            x.col(static_cast<Eigen::Index>(model.members[static_cast<std::size_t>(i)])) = block.col(i);
    }
    x *= spec.volatility;

    std::vector<std::string> assets;
    for (const auto& s : spec.sectors) {
        std::string stem;
        for (char c : s.name)
            if (std::isalnum(static_cast<unsigned char>(c))) stem += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        stem = stem.substr(0, 4);
        for (std::size_t i = 0; i < s.size; ++i) assets.push_back(stem + "_" + std::to_string(i + 1));
    }
    // Names built from truncated sector stems can collide; disambiguate.
    {
        std::unordered_set<std::string> seen;
        for (auto& asset : assets) {
            std::string name = asset;
            for (int suffix = 2; seen.count(name); ++suffix) name = asset + "_" + std::to_string(suffix);
            asset = name;
            seen.insert(name);
        }
    }
    return {ReturnsPanel(detail::business_days(spec.start_date, spec.t), std::move(assets), std::move(x)),
            std::move(truth)};
}

} // namespace hpca
