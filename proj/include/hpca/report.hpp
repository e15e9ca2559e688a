#pragma once

// Side-by-side comparison of the empirical (PCA) spectrum and the HPCA
// spectrum: ranked eigenvalues with HPCA provenance labels, per-rank
// eigenvector statistics and cumulative explained-variance curves.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hpca/eigen.hpp"
#include "hpca/error.hpp"
#include "hpca/hpca_core.hpp"

namespace hpca {

struct ComparisonRow {
    std::size_t rank = 0; // 1-based
    double pca = 0.0;
    double hpca = 0.0;
    SpectrumLabel label;
    std::string label_text;
    EigenvectorComparison vectors;
};

struct ComparisonReport {
    std::size_t n = 0;
    std::size_t sectors = 0;
    Eigen::VectorXd pca_values;
    Eigen::VectorXd hpca_values;
    std::vector<ComparisonRow> rows;
    std::vector<double> pca_cumulative;
    std::vector<double> hpca_cumulative;
    /// (lambda_1^PCA - mu^(1)) / n.
    double rank1_delta = 0.0;
    double pca_min = 0.0;
    double hpca_min = 0.0;
    /// Smallest eigenvalue over all sector sub-spectra.
    double sector_min = 0.0;
};

inline ComparisonReport build_comparison(const Spectrum& pca, const LabeledSpectrum& hpca, const HpcaModel& model,
                                         std::size_t top_k) {
    const std::size_t n = model.partition.asset_count();
    if (static_cast<std::size_t>(pca.size()) != n || hpca.size() != n)
        throw InputError("build_comparison: spectra cover different asset universes (" + std::to_string(pca.size()) +
                         " vs " + std::to_string(hpca.size()) + " vs " + std::to_string(n) + ")");

    ComparisonReport rep;
    rep.n = n;
    rep.sectors = model.partition.sector_count();
    rep.pca_values = pca.values;
    rep.hpca_values = hpca.values();
    rep.pca_cumulative = cumulative_variance(rep.pca_values, n);
    rep.hpca_cumulative = cumulative_variance(rep.hpca_values, n);
    rep.rank1_delta = (rep.pca_values(0) - rep.hpca_values(0)) / static_cast<double>(n);
    rep.pca_min = rep.pca_values(rep.pca_values.size() - 1);
    rep.hpca_min = rep.hpca_values(rep.hpca_values.size() - 1);
    rep.sector_min = model.sectors.front().spectrum.values.minCoeff();
    for (const auto& s : model.sectors) rep.sector_min = std::min(rep.sector_min, s.spectrum.values.minCoeff());

    const std::size_t k = std::min(top_k, n);
    for (std::size_t r = 0; r < k; ++r) {
        const auto& entry = hpca.entries[r];
        rep.rows.push_back({r + 1, pca.values(static_cast<Eigen::Index>(r)), entry.value, entry.label,
                            describe(entry.label, model.partition),
                            compare_eigenvectors(entry.vector, pca.vectors.col(static_cast<Eigen::Index>(r)))});
    }
    return rep;
}

} // namespace hpca
