#pragma once

// Hierarchical PCA: the modified correlation matrix built from sector blocks
// and inter-sector factor correlations, and its spectrum assembled in closed
// form from the sector spectra and the b x b matrix M.
//
// With sector spectra (lambda^(i,k), V^(i,k)) and W^(i,k) the embedding of
// V^(i,k) into R^n:
//   - span{W^(1,k)} is invariant under R~, and R~ acts on it as M in the
//     W^(1,k) basis, where M(k,k') = sqrt(lambda^(1,k) lambda^(1,k')) rho(k,k').
//   - every W^(j,k), j >= 2, is an eigenvector of R~ with eigenvalue lambda^(j,k).
// No dense n x n eigensolve is needed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hpca/eigen.hpp"
#include "hpca/error.hpp"
#include "hpca/panel.hpp"
#include "hpca/sector_pca.hpp"

namespace hpca {

/// b x b empirical correlation of the sector factor series; exact unit
/// diagonal, exactly symmetric.
struct InterSectorCorrelation {
    Eigen::MatrixXd values;
};

/// M(k,k') = sqrt(lambda^(1,k)) sqrt(lambda^(1,k')) rho(k,k') and its spectrum
/// (mu descending, alpha as columns).
struct MMatrix {
    Eigen::MatrixXd values;
    Spectrum spectrum;
};

enum class EigenKind { MultiSector, Sector };

/// Provenance of one HPCA eigenpair.
struct SpectrumLabel {
    EigenKind kind = EigenKind::MultiSector;
    /// MultiSector: 0-based rank r of mu^(r+1) among the eigenvalues of M.
    std::size_t rank = 0;
    /// Sector: 0-based sector index and 1-based order j >= 2 within it.
    std::size_t sector = 0;
    std::size_t order = 0;

    bool multi_sector() const { return kind == EigenKind::MultiSector; }
};

struct LabeledEigenpair {
    double value = 0.0;
    Eigen::VectorXd vector;
    SpectrumLabel label;
};

/// All n eigenpairs of R~ sorted descending; at equal values multi-sector
/// entries come first.
struct LabeledSpectrum {
    std::vector<LabeledEigenpair> entries;

    std::size_t size() const { return entries.size(); }

    Eigen::VectorXd values() const {
        Eigen::VectorXd v(static_cast<Eigen::Index>(entries.size()));
        for (std::size_t i = 0; i < entries.size(); ++i) v(static_cast<Eigen::Index>(i)) = entries[i].value;
        return v;
    }

    Eigen::MatrixXd vectors() const {
        if (entries.empty()) return {};
        Eigen::MatrixXd m(entries.front().vector.size(), static_cast<Eigen::Index>(entries.size()));
        for (std::size_t i = 0; i < entries.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = entries[i].vector;
        return m;
    }
};

/// A fitted two-level HPCA model.
struct HpcaModel {
    SectorPartition partition;
    std::vector<SectorModel> sectors;
    InterSectorCorrelation rho;
    MMatrix m;
    /// Dense R~ (n x n).
    Eigen::MatrixXd r_tilde;
};

/// Empirical correlation of the T x b factor matrix.
inline InterSectorCorrelation inter_sector_corr(const Eigen::MatrixXd& factors) {
    if (factors.cols() < 1) throw InputError("inter_sector_corr: no factor columns");
    return {detail::column_correlation(factors, "inter_sector_corr")};
}

/// R~(i,j) = R(i,j) within a sector, beta_i beta_j rho(I(i),I(j)) across sectors.
inline Eigen::MatrixXd build_hpca_matrix(const std::vector<SectorModel>& models, const InterSectorCorrelation& rho,
                                         const SectorPartition& partition) {
    const std::size_t b = partition.sector_count();
    if (models.size() != b) throw InputError("build_hpca_matrix: model count does not match sector count");
    if (rho.values.rows() != static_cast<Eigen::Index>(b) || rho.values.cols() != static_cast<Eigen::Index>(b))
        throw InputError("build_hpca_matrix: rho has wrong dimension");

    const auto n = static_cast<Eigen::Index>(partition.asset_count());
    Eigen::VectorXd beta(n);
    for (const auto& m : models) {
        if (m.members != partition.members(m.sector)) throw InputError("build_hpca_matrix: model/partition mismatch");
        for (std::size_t i = 0; i < m.members.size(); ++i)
            beta(static_cast<Eigen::Index>(m.members[i])) = m.betas(static_cast<Eigen::Index>(i));
    }

    Eigen::MatrixXd r(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t si = partition.sector_of(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < n; ++j) {
            const std::size_t sj = partition.sector_of(static_cast<std::size_t>(j));
            if (si != sj)
                r(i, j) = beta(i) * beta(j) * rho.values(static_cast<Eigen::Index>(si), static_cast<Eigen::Index>(sj));
        }
    }
    for (const auto& m : models) {
        const auto& mem = m.members;
        for (std::size_t a = 0; a < mem.size(); ++a)
            for (std::size_t c = 0; c < mem.size(); ++c)
                r(static_cast<Eigen::Index>(mem[a]), static_cast<Eigen::Index>(mem[c])) =
                    m.correlation(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
    }
    return r;
}

inline MMatrix build_M(const std::vector<SectorModel>& models, const InterSectorCorrelation& rho) {
    const auto b = static_cast<Eigen::Index>(models.size());
    if (b == 0) throw InputError("build_M: no sector models");
    if (rho.values.rows() != b || rho.values.cols() != b) throw InputError("build_M: rho has wrong dimension");
    Eigen::VectorXd root(b);
    for (Eigen::Index k = 0; k < b; ++k) {
        const double lead = models[static_cast<std::size_t>(k)].leading_eigenvalue();
        if (!(lead > 0.0)) throw NumericalError("build_M: non-positive leading sector eigenvalue");
        root(k) = std::sqrt(lead);
    }
    Eigen::MatrixXd m(b, b);
    for (Eigen::Index k = 0; k < b; ++k) {
        m(k, k) = models[static_cast<std::size_t>(k)].leading_eigenvalue();
        for (Eigen::Index p = k + 1; p < b; ++p) {
            m(k, p) = root(k) * root(p) * rho.values(k, p);
            m(p, k) = m(k, p);
        }
    }
    Spectrum spec = sym_eig_sorted(m);
    return {std::move(m), std::move(spec)};
}

/// Standardize, fit every sector, then assemble rho, M and R~.
inline HpcaModel fit_hpca(const StandardizedPanel& panel, const SectorPartition& partition) {
    auto sectors = fit_sectors(panel, partition);
    auto rho = inter_sector_corr(factor_panel(sectors));
    auto m = build_M(sectors, rho);
    auto r = build_hpca_matrix(sectors, rho, partition);
    return {partition, std::move(sectors), std::move(rho), std::move(m), std::move(r)};
}

/// Closed-form spectrum of R~: b multi-sector eigenpairs
/// (mu^(k), sum_p alpha^(k)_p W^(1,p)) and, per sector, (lambda^(j,k), W^(j,k))
/// for j >= 2, merged in descending order.
inline LabeledSpectrum hpca_spectrum(const SectorPartition& partition, const std::vector<SectorModel>& sectors,
                                     const MMatrix& m) {
    const std::size_t b = partition.sector_count();
    if (sectors.size() != b || m.spectrum.size() != static_cast<Eigen::Index>(b))
        throw InputError("hpca_spectrum: inconsistent sector count");

    std::vector<Eigen::VectorXd> leading;
    leading.reserve(b);
    for (std::size_t p = 0; p < b; ++p) leading.push_back(embed(sectors[p].leading_vector(), partition, p));

    LabeledSpectrum out;
    out.entries.reserve(partition.asset_count());
    for (std::size_t r = 0; r < b; ++r) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(partition.asset_count()));
        for (std::size_t p = 0; p < b; ++p)
            w += m.spectrum.vectors(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(r)) * leading[p];
        detail::canonicalize_sign(w);
        out.entries.push_back({m.spectrum.values(static_cast<Eigen::Index>(r)), std::move(w),
                               {EigenKind::MultiSector, r, 0, 0}});
    }
    for (std::size_t k = 0; k < b; ++k) {
        const auto& spec = sectors[k].spectrum;
        for (Eigen::Index j = 1; j < spec.size(); ++j)
            out.entries.push_back({spec.values(j), embed(spec.vectors.col(j), partition, k),
                                   {EigenKind::Sector, 0, k, static_cast<std::size_t>(j) + 1}});
    }
    std::stable_sort(out.entries.begin(), out.entries.end(), [](const auto& x, const auto& y) {
        if (x.value != y.value) return x.value > y.value;
        return x.label.multi_sector() && !y.label.multi_sector();
    });
    return out;
}

inline LabeledSpectrum hpca_spectrum(const HpcaModel& model) {
    return hpca_spectrum(model.partition, model.sectors, model.m);
}

/// Human-readable provenance: "Multi-sector" or the sector label.
inline std::string describe(const SpectrumLabel& label, const SectorPartition& partition) {
    return label.multi_sector() ? std::string("Multi-sector") : partition.label(label.sector);
}

/// Partial sums of a descending spectrum divided by n.
inline std::vector<double> cumulative_variance(const Eigen::VectorXd& values, std::size_t n) {
    if (n == 0) throw InputError("cumulative_variance: n must be positive");
    for (Eigen::Index i = 1; i < values.size(); ++i)
        if (values(i) > values(i - 1)) throw InputError("cumulative_variance: eigenvalues not sorted descending");
    std::vector<double> curve;
    curve.reserve(static_cast<std::size_t>(values.size()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        acc += values(i);
        curve.push_back(acc / static_cast<double>(n));
    }
    return curve;
}

struct EigenvectorComparison {
    /// Population standard deviation of the entrywise difference a - b.
    double rms_distance = 0.0;
    /// Mean of the entrywise difference a - b.
    double mean_difference = 0.0;
    /// Average of mean|a_i| and mean|b_i|.
    double mean_abs_entry = 0.0;
};

/// Entrywise comparison after flipping b when a.b < 0.
inline EigenvectorComparison compare_eigenvectors(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw InputError("compare_eigenvectors: dimension mismatch");
    if (a.size() == 0) throw InputError("compare_eigenvectors: empty vectors");
    const Eigen::VectorXd aligned = a.dot(b) < 0.0 ? Eigen::VectorXd(-b) : b;
    const Eigen::ArrayXd diff = (a - aligned).array();
    const double n = static_cast<double>(a.size());
    EigenvectorComparison out;
    out.mean_difference = diff.mean();
    out.rms_distance = std::sqrt((diff - out.mean_difference).square().sum() / n);
    out.mean_abs_entry = 0.5 * (a.cwiseAbs().mean() + aligned.cwiseAbs().mean());
    return out;
}

} // namespace hpca
