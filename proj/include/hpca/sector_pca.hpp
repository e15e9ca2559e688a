#pragma once

// Per-sector one-factor PCA: sector spectra, betas and first-eigenportfolio
// factor series, plus the sector map that defines the partition.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hpca/eigen.hpp"
#include "hpca/error.hpp"
#include "hpca/panel.hpp"
#include "hpca/text.hpp"

namespace hpca {

/// Assignment of each asset (panel column) to exactly one sector. Sectors are
/// numbered 0..b-1 and all nonempty. Assets of a sector need not be
/// contiguous columns.
///
/// `parents` optionally names an enclosing group per sector; only two-level
/// hierarchies are modelled, the field is carried for callers that track a
/// deeper tree.
class SectorPartition {
public:
    SectorPartition(std::vector<std::size_t> sector_of, std::vector<std::string> labels,
                    std::vector<std::optional<std::string>> parents = {})
        : sector_of_(std::move(sector_of)), labels_(std::move(labels)), parents_(std::move(parents)) {
        if (labels_.empty()) throw InputError("partition: no sectors");
        if (parents_.empty()) parents_.resize(labels_.size());
        if (parents_.size() != labels_.size()) throw InputError("partition: parent count mismatch");
        members_.resize(labels_.size());
        for (std::size_t j = 0; j < sector_of_.size(); ++j) {
            if (sector_of_[j] >= labels_.size())
                throw InputError("partition: asset " + std::to_string(j) + " assigned to unknown sector " +
                                 std::to_string(sector_of_[j]));
            members_[sector_of_[j]].push_back(j);
        }
        for (std::size_t k = 0; k < members_.size(); ++k)
            if (members_[k].empty()) throw InputError("partition: sector '" + labels_[k] + "' is empty");
    }

    /// Contiguous blocks of the given sizes, labelled "S1".."Sb".
    static SectorPartition contiguous(const std::vector<std::size_t>& sizes) {
        std::vector<std::size_t> sector_of;
        std::vector<std::string> labels;
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            sector_of.insert(sector_of.end(), sizes[k], k);
            labels.push_back("S" + std::to_string(k + 1));
        }
        return SectorPartition(std::move(sector_of), std::move(labels));
    }

    std::size_t asset_count() const { return sector_of_.size(); }
    std::size_t sector_count() const { return labels_.size(); }
    std::size_t sector_of(std::size_t asset) const { return sector_of_.at(asset); }
    const std::vector<std::size_t>& assignment() const { return sector_of_; }
    const std::vector<std::size_t>& members(std::size_t k) const { return members_.at(k); }
    std::size_t size(std::size_t k) const { return members_.at(k).size(); }
    const std::string& label(std::size_t k) const { return labels_.at(k); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::optional<std::string>& parent(std::size_t k) const { return parents_.at(k); }

private:
    std::vector<std::size_t> sector_of_;
    std::vector<std::string> labels_;
    std::vector<std::optional<std::string>> parents_;
    std::vector<std::vector<std::size_t>> members_;
};

struct LoadedPartition {
    SectorPartition partition;
    /// One entry per map row naming an asset absent from the panel.
    std::vector<std::string> warnings;
};

/// Reads an `asset,sector` table (header required) and builds the partition
/// for `assets`. Sectors are numbered in order of first appearance in the
/// map. Map rows for unknown assets are skipped with a warning; panel assets
/// missing from the map are an error.
inline LoadedPartition load_sector_map(std::istream& in, const std::vector<std::string>& assets) {
    std::string line;
    while (std::getline(in, line) && text::trim(line).empty()) {}
    if (text::trim(line).empty()) throw InputError("sector map: empty input");
    const char delim = text::detect_delimiter(line);
    auto header = text::split(line, delim);
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        return s;
    };
    if (header.size() != 2 || lower(header[0]) != "asset" || lower(header[1]) != "sector")
        throw InputError("sector map: header must be 'asset,sector'");

    std::unordered_map<std::string, std::size_t> column_of;
    for (std::size_t j = 0; j < assets.size(); ++j) column_of.emplace(assets[j], j);

    constexpr std::size_t unassigned = static_cast<std::size_t>(-1);
    std::vector<std::size_t> sector_of(assets.size(), unassigned);
    std::vector<std::string> labels;
    std::map<std::string, std::size_t> sector_index;
    std::vector<std::string> warnings;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto cells = text::split(line, delim);
        if (cells.size() != 2 || cells[0].empty() || cells[1].empty())
            throw InputError("sector map: malformed line " + std::to_string(line_no));
        const auto it = column_of.find(cells[0]);
        if (it == column_of.end()) {
            warnings.push_back("sector map: asset '" + cells[0] + "' not in panel, ignored");
            continue;
        }
        auto [sit, inserted] = sector_index.emplace(cells[1], labels.size());
        if (inserted) labels.push_back(cells[1]);
        auto& slot = sector_of[it->second];
        if (slot != unassigned && slot != sit->second)
            throw InputError("sector map: asset '" + cells[0] + "' assigned to two sectors");
        slot = sit->second;
    }
    for (std::size_t j = 0; j < assets.size(); ++j)
        if (sector_of[j] == unassigned) throw InputError("sector map: asset '" + assets[j] + "' has no sector");
    return {SectorPartition(std::move(sector_of), std::move(labels)), std::move(warnings)};
}

/// One-factor PCA fit of a single sector.
struct SectorModel {
    std::size_t sector = 0;
    /// Panel column indices of the member assets, ascending.
    std::vector<std::size_t> members;
    /// Empirical sector correlation (n_k x n_k).
    Eigen::MatrixXd correlation;
    Spectrum spectrum;
    /// beta_j = sqrt(lambda_1) * V1_j, ordered like `members`.
    Eigen::VectorXd betas;
    /// First eigenportfolio return series, length T, unit in-sample variance.
    Eigen::VectorXd factor;

    double leading_eigenvalue() const { return spectrum.values(0); }
    Eigen::VectorXd leading_vector() const { return spectrum.vectors.col(0); }
};

inline SectorModel fit_sector(const StandardizedPanel& panel, const SectorPartition& partition, std::size_t k) {
    if (partition.asset_count() != static_cast<std::size_t>(panel.cols()))
        throw InputError("fit_sector: partition covers " + std::to_string(partition.asset_count()) +
                         " assets, panel has " + std::to_string(panel.cols()));
    if (k >= partition.sector_count()) throw InputError("fit_sector: no sector " + std::to_string(k));

    SectorModel model;
    model.sector = k;
    model.members = partition.members(k);
    const StandardizedPanel sub = panel.select(model.members);
    model.correlation = correlation(sub).values;
    model.spectrum = sym_eig_sorted(model.correlation);

    const double lead = model.leading_eigenvalue();
    if (!(lead > 0.0)) throw NumericalError("fit_sector: non-positive leading eigenvalue in sector " + partition.label(k));
    const double root = std::sqrt(lead);
    model.betas = root * model.spectrum.vectors.col(0);
    model.factor = (sub.values() * model.spectrum.vectors.col(0)) / root;
    return model;
}

/// Fits every sector of the partition.
inline std::vector<SectorModel> fit_sectors(const StandardizedPanel& panel, const SectorPartition& partition) {
    std::vector<SectorModel> models;
    models.reserve(partition.sector_count());
    for (std::size_t k = 0; k < partition.sector_count(); ++k) models.push_back(fit_sector(panel, partition, k));
    return models;
}

/// Embeds a sector-level vector into R^n: sector entries copied, zeros elsewhere.
inline Eigen::VectorXd embed(const Eigen::VectorXd& v, const SectorPartition& partition, std::size_t k) {
    const auto& members = partition.members(k);
    if (static_cast<std::size_t>(v.size()) != members.size())
        throw InputError("embed: vector length " + std::to_string(v.size()) + " does not match sector size " +
                         std::to_string(members.size()));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(partition.asset_count()));
    for (std::size_t i = 0; i < members.size(); ++i)
        w(static_cast<Eigen::Index>(members[i])) = v(static_cast<Eigen::Index>(i));
    return w;
}

/// T x b matrix whose column k is the first factor series of sector k.
inline Eigen::MatrixXd factor_panel(const std::vector<SectorModel>& models) {
    if (models.empty()) throw InputError("factor_panel: no sector models");
    const Eigen::Index t = models.front().factor.size();
    Eigen::MatrixXd f(t, static_cast<Eigen::Index>(models.size()));
    for (std::size_t k = 0; k < models.size(); ++k) {
        if (models[k].factor.size() != t) throw InputError("factor_panel: factor series lengths differ");
        f.col(static_cast<Eigen::Index>(k)) = models[k].factor;
    }
    return f;
}

} // namespace hpca
