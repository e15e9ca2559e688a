#pragma once

// Structured-text (JSON) and delimited-table serialization for models,
// market specs, comparison and residual reports.

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hpca/error.hpp"
#include "hpca/hpca_core.hpp"
#include "hpca/report.hpp"
#include "hpca/rmt.hpp"
#include "hpca/synth.hpp"
#include "hpca/text.hpp"

namespace hpca::io {

using Json = nlohmann::ordered_json;

inline Json to_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

/// Row-major nested arrays.
inline Json to_json(const Eigen::MatrixXd& m) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
    return a;
}

inline Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw InputError(what + ": expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw InputError(what + ": ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& cell = row[static_cast<std::size_t>(c)];
            if (!cell.is_number()) throw InputError(what + ": non-numeric entry");
            m(i, c) = cell.get<double>();
        }
    }
    return m;
}

inline Json label_json(const SpectrumLabel& label, const SectorPartition& partition) {
    Json j;
    if (label.multi_sector()) {
        j["label"] = "Multi-sector";
        j["rank"] = label.rank + 1;
    } else {
        j["label"] = partition.label(label.sector);
        j["sector"] = label.sector;
        j["order"] = label.order;
    }
    return j;
}

/// Model export: partition, per-sector spectra and betas, rho, M with its
/// spectrum, and the labeled HPCA eigenvalues; dense R~ on request.
inline Json model_to_json(const HpcaModel& model, const LabeledSpectrum& spectrum,
                          const std::vector<std::string>& assets, std::size_t t, bool include_dense) {
    Json j;
    j["n"] = model.partition.asset_count();
    j["T"] = t;
    j["assets"] = assets;
    Json sectors = Json::array();
    for (const auto& s : model.sectors) {
        Json sj;
        sj["name"] = model.partition.label(s.sector);
        std::vector<std::string> members;
        for (auto idx : s.members) members.push_back(assets.at(idx));
        sj["assets"] = members;
        sj["eigenvalues"] = to_json(s.spectrum.values);
        sj["eigenvectors"] = to_json(Eigen::MatrixXd(s.spectrum.vectors.transpose()));
        sj["betas"] = to_json(s.betas);
        sectors.push_back(std::move(sj));
    }
    j["sectors"] = std::move(sectors);
    j["rho_bar"] = to_json(model.rho.values);
    j["M"] = to_json(model.m.values);
    j["mu"] = to_json(model.m.spectrum.values);
    j["alpha"] = to_json(Eigen::MatrixXd(model.m.spectrum.vectors.transpose()));
    Json entries = Json::array();
    for (const auto& e : spectrum.entries) {
        Json ej;
        ej["eigenvalue"] = e.value;
        ej.update(label_json(e.label, model.partition));
        entries.push_back(std::move(ej));
    }
    j["spectrum"] = std::move(entries);
    if (include_dense) j["R_tilde"] = to_json(model.r_tilde);
    return j;
}

struct SpectrumTableRow {
    double eigenvalue = 0.0;
    std::string label;
};

/// Labeled eigenvalues recorded in a model export.
inline std::vector<SpectrumTableRow> spectrum_from_model(const Json& model) {
    if (!model.contains("spectrum") || !model["spectrum"].is_array())
        throw InputError("model: missing 'spectrum' array");
    std::vector<SpectrumTableRow> rows;
    for (const auto& e : model["spectrum"]) {
        if (!e.contains("eigenvalue") || !e.contains("label")) throw InputError("model: malformed spectrum entry");
        rows.push_back({e["eigenvalue"].get<double>(), e["label"].get<std::string>()});
    }
    return rows;
}

inline void write_spectrum_table(std::ostream& out, const std::vector<SpectrumTableRow>& rows, std::size_t top_k) {
    out << "rank,eigenvalue,eigenportfolio\n";
    for (std::size_t r = 0; r < rows.size() && r < top_k; ++r)
        out << r + 1 << ',' << text::format_double(rows[r].eigenvalue) << ',' << rows[r].label << '\n';
}

/// Asset-by-eigenvector table: one row per asset, one column per vector.
inline void write_eigenvector_table(std::ostream& out, const std::vector<std::string>& assets,
                                    const SectorPartition& partition, const Eigen::MatrixXd& vectors,
                                    const std::vector<std::string>& headers) {
    out << "asset,sector";
    for (const auto& h : headers) out << ',' << h;
    out << '\n';
    for (std::size_t i = 0; i < assets.size(); ++i) {
        out << assets[i] << ',' << partition.label(partition.sector_of(i));
        for (Eigen::Index c = 0; c < vectors.cols(); ++c)
            out << ',' << text::format_double(vectors(static_cast<Eigen::Index>(i), c));
        out << '\n';
    }
}

inline void write_factor_table(std::ostream& out, const std::vector<std::string>& dates,
                               const SectorPartition& partition, const Eigen::MatrixXd& factors) {
    out << "date";
    for (const auto& l : partition.labels()) out << ',' << l;
    out << '\n';
    for (Eigen::Index t = 0; t < factors.rows(); ++t) {
        out << dates.at(static_cast<std::size_t>(t));
        for (Eigen::Index k = 0; k < factors.cols(); ++k) out << ',' << text::format_double(factors(t, k));
        out << '\n';
    }
}

inline void write_sector_map(std::ostream& out, const std::vector<std::string>& assets,
                             const SectorPartition& partition) {
    out << "asset,sector\n";
    for (std::size_t i = 0; i < assets.size(); ++i) out << assets[i] << ',' << partition.label(partition.sector_of(i)) << '\n';
}

inline Json comparison_to_json(const ComparisonReport& rep) {
    Json j;
    j["n"] = rep.n;
    j["sectors"] = rep.sectors;
    j["rank1_explanatory_delta"] = rep.rank1_delta;
    j["pca_min_eigenvalue"] = rep.pca_min;
    j["hpca_min_eigenvalue"] = rep.hpca_min;
    j["sector_min_eigenvalue"] = rep.sector_min;
    j["pca_trace"] = rep.pca_values.sum();
    j["hpca_trace"] = rep.hpca_values.sum();
    Json rows = Json::array();
    for (const auto& r : rep.rows) {
        Json rj;
        rj["rank"] = r.rank;
        rj["pca"] = r.pca;
        rj["hpca"] = r.hpca;
        rj["eigenportfolio"] = r.label_text;
        rj["multi_sector"] = r.label.multi_sector();
        rj["rms_distance"] = r.vectors.rms_distance;
        rj["mean_difference"] = r.vectors.mean_difference;
        rj["mean_abs_entry"] = r.vectors.mean_abs_entry;
        rows.push_back(std::move(rj));
    }
    j["top"] = std::move(rows);
    j["pca_cumulative"] = rep.pca_cumulative;
    j["hpca_cumulative"] = rep.hpca_cumulative;
    return j;
}

inline void write_cumulative_table(std::ostream& out, const ComparisonReport& rep) {
    out << "rank,pca,hpca\n";
    for (std::size_t i = 0; i < rep.pca_cumulative.size(); ++i)
        out << i + 1 << ',' << text::format_double(rep.pca_cumulative[i]) << ','
            << text::format_double(rep.hpca_cumulative[i]) << '\n';
}

inline Json residual_to_json(const ResidualReport& rep) {
    Json j;
    j["model"] = rep.model;
    j["m"] = rep.m;
    j["n"] = rep.n;
    j["T"] = rep.t;
    j["degenerate_columns"] = rep.degenerate;
    j["lambda_plus"] = rep.lambda_plus;
    j["lambda_minus"] = rep.lambda_minus;
    j["leading_eigenvalue"] = rep.leading;
    j["leading_over_n"] = rep.leading_over_n;
    j["mean_offdiagonal_correlation"] = rep.mean_offdiagonal;
    j["count_above_lambda_plus"] = rep.count_above;
    j["in_support_fraction"] = rep.in_support_fraction;
    j["eigenvalues"] = to_json(rep.eigenvalues);
    j["histogram"] = {{"first_index", rep.histogram.first_index},
                      {"edges", rep.histogram.edges},
                      {"counts", rep.histogram.counts}};
    return j;
}

inline void write_histogram_table(std::ostream& out, const ResidualReport& rep, const MpReference& ref) {
    out << "grid_index,left,right,count,mp_expected_count\n";
    const auto& h = rep.histogram;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const long idx = h.first_index + static_cast<long>(i);
        double expected = 0.0;
        if (idx >= 0 && idx < static_cast<long>(ref.bins()))
            expected = ref.bin_mass[static_cast<std::size_t>(idx)] * static_cast<double>(rep.n);
        out << idx << ',' << text::format_double(h.edges[i]) << ',' << text::format_double(h.edges[i + 1]) << ','
            << h.counts[i] << ',' << text::format_double(expected) << '\n';
    }
}

inline void write_mp_table(std::ostream& out, const MpReference& ref) {
    out << "lambda,density\n";
    for (std::size_t i = 0; i < ref.edges.size(); ++i)
        out << text::format_double(ref.edges[i]) << ',' << text::format_double(ref.density[i]) << '\n';
}

/// Market spec document:
///   {"T": int, "seed": int?, "volatility": num?, "start_date": str?,
///    "sectors": [{"name": str, "size": int, "equicorrelation": num} |
///                {"name": str, "correlation": [[...]]}],
///    "inter_sector_correlation": [[...]] | "inter_sector_loadings": [...]}
inline MarketSpec market_spec_from_json(const Json& j) {
    try {
        MarketSpec spec;
        spec.t = j.at("T").get<std::size_t>();
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.volatility = j.value("volatility", 1.0);
        spec.start_date = j.value("start_date", spec.start_date);
        for (const auto& s : j.at("sectors")) {
            SectorSpec sec;
            sec.name = s.at("name").get<std::string>();
            if (s.contains("correlation")) {
                sec.correlation = matrix_from_json(s["correlation"], "sector '" + sec.name + "' correlation");
                sec.size = static_cast<std::size_t>(sec.correlation.rows());
                if (s.contains("size") && s["size"].get<std::size_t>() != sec.size)
                    throw InputError("sector '" + sec.name + "': size disagrees with correlation matrix");
            } else {
                sec.size = s.at("size").get<std::size_t>();
                sec.equicorrelation = s.value("equicorrelation", 0.0);
            }
            spec.sectors.push_back(std::move(sec));
        }
        if (j.contains("inter_sector_correlation")) {
            spec.factor_correlation = matrix_from_json(j["inter_sector_correlation"], "inter_sector_correlation");
        } else if (j.contains("inter_sector_loadings")) {
            spec.factor_correlation = one_factor_correlation(j["inter_sector_loadings"].get<std::vector<double>>());
        } else {
            spec.factor_correlation = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(spec.sectors.size()),
                                                                static_cast<Eigen::Index>(spec.sectors.size()));
        }
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("market spec: ") + e.what());
    }
}

inline Json market_spec_to_json(const MarketSpec& spec) {
    Json j;
    j["T"] = spec.t;
    j["seed"] = spec.seed;
    j["volatility"] = spec.volatility;
    j["start_date"] = spec.start_date;
    Json sectors = Json::array();
    for (const auto& s : spec.sectors) {
        Json sj;
        sj["name"] = s.name;
        sj["size"] = s.size;
        if (s.correlation.size() > 0)
            sj["correlation"] = to_json(s.correlation);
        else
            sj["equicorrelation"] = s.equicorrelation.value_or(0.0);
        sectors.push_back(std::move(sj));
    }
    j["sectors"] = std::move(sectors);
    j["inter_sector_correlation"] = to_json(spec.factor_correlation);
    return j;
}

inline Json parse_json(std::istream& in, const std::string& what) {
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(what + ": " + e.what());
    }
}

} // namespace hpca::io
