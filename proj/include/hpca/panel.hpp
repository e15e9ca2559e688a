#pragma once

// Return panels: loading, validation, standardization and empirical
// correlation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hpca/error.hpp"
#include "hpca/text.hpp"

namespace hpca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// T x n matrix of per-period returns with date and asset labels.
/// Complete (no NaN), T >= 2, n >= 1, unique asset names.
class ReturnsPanel {
public:
    ReturnsPanel(std::vector<std::string> dates, std::vector<std::string> assets, Matrix values)
        : dates_(std::move(dates)), assets_(std::move(assets)), values_(std::move(values)) {
        if (values_.rows() < 2)
            throw InputError("panel needs at least 2 complete rows, got " + std::to_string(values_.rows()));
        if (values_.cols() < 1) throw InputError("panel needs at least 1 asset");
        if (static_cast<Eigen::Index>(dates_.size()) != values_.rows())
            throw InputError("panel: date count does not match row count");
        if (static_cast<Eigen::Index>(assets_.size()) != values_.cols())
            throw InputError("panel: asset count does not match column count");
        std::unordered_set<std::string> seen;
        for (const auto& a : assets_)
            if (!seen.insert(a).second) throw InputError("duplicate asset name '" + a + "'");
        if (!values_.allFinite()) throw InputError("panel contains non-finite values");
    }

    const std::vector<std::string>& dates() const { return dates_; }
    const std::vector<std::string>& assets() const { return assets_; }
    const Matrix& values() const { return values_; }
    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }

private:
    std::vector<std::string> dates_;
    std::vector<std::string> assets_;
    Matrix values_;
};

/// A panel whose columns have sample mean 0 and sample standard deviation 1
/// (divisor T-1). Only `standardize` and `StandardizedPanel::adopt` create one.
class StandardizedPanel {
public:
    /// Wraps values that are already standardized; verifies the column moments.
    static StandardizedPanel adopt(std::vector<std::string> dates, std::vector<std::string> assets,
                                   Matrix values, double tol = 1e-10);

    const std::vector<std::string>& dates() const { return dates_; }
    const std::vector<std::string>& assets() const { return assets_; }
    const Matrix& values() const { return values_; }
    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }

    /// Sub-panel made of the given columns, in the given order.
    StandardizedPanel select(const std::vector<std::size_t>& columns) const {
        Matrix sub(values_.rows(), static_cast<Eigen::Index>(columns.size()));
        std::vector<std::string> names;
        names.reserve(columns.size());
        for (std::size_t c = 0; c < columns.size(); ++c) {
            sub.col(static_cast<Eigen::Index>(c)) = values_.col(static_cast<Eigen::Index>(columns[c]));
            names.push_back(assets_.at(columns[c]));
        }
        return StandardizedPanel(dates_, std::move(names), std::move(sub));
    }

private:
    friend StandardizedPanel standardize(const ReturnsPanel&);
    StandardizedPanel(std::vector<std::string> dates, std::vector<std::string> assets, Matrix values)
        : dates_(std::move(dates)), assets_(std::move(assets)), values_(std::move(values)) {}

    std::vector<std::string> dates_;
    std::vector<std::string> assets_;
    Matrix values_;
};

/// Symmetric n x n correlation matrix with exact unit diagonal.
struct CorrelationMatrix {
    Matrix values;
    std::vector<std::string> assets;
};

namespace detail {

/// In-place column standardization with divisor T-1. Returns the index of
/// the first constant column, if any (the matrix is then left partially
/// modified).
inline std::optional<Eigen::Index> standardize_columns(Matrix& x) {
    const double denom = static_cast<double>(x.rows() - 1);
    // Two passes: the second removes the rounding left by the first, which
    // matters when |mean| >> stdev.
    for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            auto col = x.col(j);
            const double mean = col.mean();
            col.array() -= mean;
            const double sd = std::sqrt(col.squaredNorm() / denom);
            if (!(sd > 0.0) || !std::isfinite(sd)) return j;
            col /= sd;
        }
    }
    return std::nullopt;
}

/// (1/(T-1)) X^T X for column-standardized X, symmetrized, unit diagonal,
/// clamped to [-1, 1].
inline Matrix gram_correlation(const Matrix& x) {
    const double denom = static_cast<double>(x.rows() - 1);
    Matrix c = (x.transpose() * x) / denom;
    Matrix sym = 0.5 * (c + c.transpose());
    sym = sym.cwiseMax(-1.0).cwiseMin(1.0);
    sym.diagonal().setOnes();
    return sym;
}

/// Empirical correlation of arbitrary columns: centers, scales (T-1), and
/// forms the Gram matrix. Throws NumericalError on a zero-variance column.
inline Matrix column_correlation(Matrix x, const char* what) {
    if (x.rows() < 2) throw NumericalError(std::string(what) + ": need at least 2 observations");
    if (const auto bad = standardize_columns(x))
        throw NumericalError(std::string(what) + ": column " + std::to_string(*bad) +
                             " has zero variance");
    return gram_correlation(x);
}

} // namespace detail

inline StandardizedPanel StandardizedPanel::adopt(std::vector<std::string> dates,
                                                  std::vector<std::string> assets, Matrix values,
                                                  double tol) {
    if (values.rows() < 2 || values.cols() < 1) throw InputError("standardized panel: empty shape");
    if (static_cast<Eigen::Index>(assets.size()) != values.cols() ||
        static_cast<Eigen::Index>(dates.size()) != values.rows())
        throw InputError("standardized panel: label count mismatch");
    const double denom = static_cast<double>(values.rows() - 1);
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        const double mean = values.col(j).mean();
        const double var = (values.col(j).array() - mean).square().sum() / denom;
        if (std::abs(mean) > tol || std::abs(std::sqrt(var) - 1.0) > tol)
            throw InputError("column '" + assets[static_cast<std::size_t>(j)] + "' is not standardized");
    }
    return StandardizedPanel(std::move(dates), std::move(assets), std::move(values));
}

/// Column-wise (x - mean) / stdev with divisor T-1.
inline StandardizedPanel standardize(const ReturnsPanel& panel) {
    Matrix x = panel.values();
    if (const auto bad = detail::standardize_columns(x))
        throw NumericalError("degenerate column: asset '" + panel.assets()[static_cast<std::size_t>(*bad)] +
                             "' has zero standard deviation");
    return StandardizedPanel(panel.dates(), panel.assets(), std::move(x));
}

/// Empirical correlation (1/(T-1)) X^T X of a standardized panel.
inline CorrelationMatrix correlation(const StandardizedPanel& panel) {
    return {detail::gram_correlation(panel.values()), panel.assets()};
}

struct PanelFormat {
    /// std::nullopt: detect from the header (comma unless the header is tab-only).
    std::optional<char> delimiter;
};

struct LoadedPanel {
    ReturnsPanel panel;
    std::size_t dropped_rows = 0;
};

/// Reads a header-bearing delimited table: first column a date label, then
/// one column per asset. Rows with any missing cell (empty, NA, NaN) are
/// dropped and counted.
inline LoadedPanel load_panel(std::istream& in, PanelFormat format = {}) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!text::trim(line).empty()) break;
    }
    if (text::trim(line).empty()) throw InputError("panel: empty input");
    const char delim = format.delimiter.value_or(text::detect_delimiter(line));
    auto header = text::split(line, delim);
    if (header.size() < 2) throw InputError("panel: header needs a date column and at least one asset");
    std::vector<std::string> assets(header.begin() + 1, header.end());
    {
        std::unordered_set<std::string> seen;
        for (const auto& a : assets) {
            if (a.empty()) throw InputError("panel: empty asset name in header");
            if (!seen.insert(a).second) throw InputError("duplicate asset name '" + a + "'");
        }
    }

    const std::size_t n = assets.size();
    std::vector<std::string> dates;
    std::vector<double> flat;
    std::size_t dropped = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto cells = text::split(line, delim);
        if (cells.size() != n + 1)
            throw InputError("panel: line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " + std::to_string(n + 1));
        bool missing = false;
        std::vector<double> row(n);
        for (std::size_t j = 0; j < n; ++j) {
            const auto& cell = cells[j + 1];
            if (text::is_missing(cell)) {
                missing = true;
                continue;
            }
            const auto v = text::parse_double(cell);
            if (!v || !std::isfinite(*v))
                throw InputError("panel: non-numeric value '" + cell + "' at line " + std::to_string(line_no) +
                                 ", column '" + assets[j] + "'");
            row[j] = *v;
        }
        if (missing) {
            ++dropped;
            continue;
        }
        dates.push_back(cells[0]);
        flat.insert(flat.end(), row.begin(), row.end());
    }
    const auto t = static_cast<Eigen::Index>(dates.size());
    if (t < 2) throw InputError("panel: fewer than 2 complete rows (" + std::to_string(t) + ")");
    Matrix values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), t, static_cast<Eigen::Index>(n));
    return {ReturnsPanel(std::move(dates), std::move(assets), std::move(values)), dropped};
}

/// Writes the panel in the format `load_panel` reads; values round-trip exactly.
inline void write_panel(std::ostream& out, const ReturnsPanel& panel, char delim = ',') {
    out << "date";
    for (const auto& a : panel.assets()) out << delim << a;
    out << '\n';
    for (Eigen::Index t = 0; t < panel.rows(); ++t) {
        out << panel.dates()[static_cast<std::size_t>(t)];
        for (Eigen::Index j = 0; j < panel.cols(); ++j) out << delim << text::format_double(panel.values()(t, j));
        out << '\n';
    }
}

} // namespace hpca
