#pragma once

// Residual diagnostics against the Marcenko-Pastur law: defactoring,
// residual correlation spectra, and the MP edge and density on a shared
// histogram grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hpca/eigen.hpp"
#include "hpca/error.hpp"
#include "hpca/hpca_core.hpp"
#include "hpca/panel.hpp"

namespace hpca {

/// Upper MP edge (1 + sqrt(n/T))^2.
inline double mp_threshold(double n, double t) {
    const double s = std::sqrt(n / t);
    return (1.0 + s) * (1.0 + s);
}

/// Lower MP edge (1 - sqrt(n/T))^2.
inline double mp_lower(double n, double t) {
    const double s = std::sqrt(n / t);
    return (1.0 - s) * (1.0 - s);
}

/// MP density for ratio gamma = n/T <= 1; zero outside [lambda-, lambda+].
inline double mp_pdf(double lambda, double gamma) {
    const double s = std::sqrt(gamma);
    const double lo = (1.0 - s) * (1.0 - s);
    const double hi = (1.0 + s) * (1.0 + s);
    if (lambda <= lo || lambda >= hi || lambda <= 0.0) return 0.0;
    return std::sqrt((hi - lambda) * (lambda - lo)) / (2.0 * std::numbers::pi * gamma * lambda);
}

/// MP law for a given (n, T), sampled on a grid of `bins` equal intervals
/// spanning [lambda-, lambda+]. Residual histograms reuse this grid, extended
/// by whole bins on either side when eigenvalues fall outside the support.
struct MpReference {
    std::size_t n = 0;
    std::size_t t = 0;
    double gamma = 0.0;
    double lambda_plus = 0.0;
    double lambda_minus = 0.0;
    double bin_width = 0.0;
    /// bins + 1 grid points lambda- + i * bin_width (last one is lambda+).
    std::vector<double> edges;
    /// Density at each grid point.
    std::vector<double> density;
    /// Probability mass of each grid interval.
    std::vector<double> bin_mass;

    std::size_t bins() const { return bin_mass.size(); }

    /// Edge i of the (possibly extended) grid; i may be negative or exceed bins().
    double edge(long i) const {
        if (i == static_cast<long>(bins())) return lambda_plus;
        return lambda_minus + static_cast<double>(i) * bin_width;
    }
};

namespace detail {

/// MP mass on [a, b] within the support, via lambda = c - r cos(theta), which
/// removes the square-root endpoint behaviour; composite midpoint in theta.
inline double mp_mass(double a, double b, double gamma, int points = 256) {
    const double s = std::sqrt(gamma);
    const double lo = (1.0 - s) * (1.0 - s);
    const double hi = (1.0 + s) * (1.0 + s);
    a = std::clamp(a, lo, hi);
    b = std::clamp(b, lo, hi);
    if (b <= a) return 0.0;
    const double c = 0.5 * (hi + lo);
    const double r = 0.5 * (hi - lo);
    const double ta = std::acos(std::clamp((c - a) / r, -1.0, 1.0));
    const double tb = std::acos(std::clamp((c - b) / r, -1.0, 1.0));
    const double h = (tb - ta) / points;
    double acc = 0.0;
    for (int i = 0; i < points; ++i) {
        const double theta = ta + (i + 0.5) * h;
        const double sn = std::sin(theta);
        acc += r * r * sn * sn / (c - r * std::cos(theta));
    }
    return acc * h / (2.0 * std::numbers::pi * gamma);
}

} // namespace detail

inline MpReference mp_density(std::size_t n, std::size_t t, std::size_t bins = 50) {
    if (n == 0 || t == 0) throw InputError("mp_density: n and T must be positive");
    if (bins < 2) throw InputError("mp_density: grid needs at least 2 intervals");
    const double gamma = static_cast<double>(n) / static_cast<double>(t);
    if (gamma > 1.0) throw InputError("mp_density: n/T > 1 is not supported");

    MpReference ref;
    ref.n = n;
    ref.t = t;
    ref.gamma = gamma;
    ref.lambda_plus = mp_threshold(static_cast<double>(n), static_cast<double>(t));
    ref.lambda_minus = mp_lower(static_cast<double>(n), static_cast<double>(t));
    ref.bin_width = (ref.lambda_plus - ref.lambda_minus) / static_cast<double>(bins);
    ref.bin_mass.resize(bins);
    for (std::size_t i = 0; i <= bins; ++i) {
        ref.edges.push_back(ref.edge(static_cast<long>(i)));
        ref.density.push_back(mp_pdf(ref.edges.back(), gamma));
    }
    for (std::size_t i = 0; i < bins; ++i) ref.bin_mass[i] = detail::mp_mass(ref.edges[i], ref.edges[i + 1], gamma);
    return ref;
}

/// Standardized residuals after regressing each asset on a factor set.
struct ResidualPanel {
    std::vector<std::string> dates;
    std::vector<std::string> assets;
    /// T x n; degenerate columns are zero, all others have mean 0 and stdev 1.
    Eigen::MatrixXd values;
    std::string model;
    std::size_t m = 0;
    /// Columns whose residual vanished (asset lies in the factor span).
    std::vector<std::size_t> degenerate;

    /// The non-degenerate columns as a standardized panel.
    StandardizedPanel as_panel() const {
        std::vector<std::size_t> keep;
        for (std::size_t j = 0; j < assets.size(); ++j)
            if (!std::binary_search(degenerate.begin(), degenerate.end(), j)) keep.push_back(j);
        if (keep.empty()) throw NumericalError("residual panel: every column is degenerate");
        Eigen::MatrixXd sub(values.rows(), static_cast<Eigen::Index>(keep.size()));
        std::vector<std::string> names;
        for (std::size_t c = 0; c < keep.size(); ++c) {
            sub.col(static_cast<Eigen::Index>(c)) = values.col(static_cast<Eigen::Index>(keep[c]));
            names.push_back(assets[keep[c]]);
        }
        return StandardizedPanel::adopt(dates, std::move(names), std::move(sub));
    }
};

/// Least-squares residual of every asset against the factor columns (with
/// intercept), re-standardized. Throws NumericalError naming the first factor
/// column that is linearly dependent on the preceding ones.
inline ResidualPanel defactor(const StandardizedPanel& panel, const Eigen::MatrixXd& factors,
                              std::string model = "custom") {
    const Eigen::Index t = panel.rows();
    if (factors.cols() > 0 && factors.rows() != t)
        throw InputError("defactor: factor series length " + std::to_string(factors.rows()) +
                         " does not match panel length " + std::to_string(t));

    // Orthonormal basis of the centered factor span; Gram-Schmidt with one
    // re-orthogonalization pass.
    Eigen::MatrixXd q(t, factors.cols());
    for (Eigen::Index c = 0; c < factors.cols(); ++c) {
        Eigen::VectorXd v = factors.col(c).array() - factors.col(c).mean();
        const double original = v.norm();
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index p = 0; p < c; ++p) v -= q.col(p).dot(v) * q.col(p);
        if (!(original > 0.0) || v.norm() <= 1e-10 * original)
            throw NumericalError("defactor: factor column " + std::to_string(c) +
                                 " is linearly dependent on the preceding factors");
        q.col(c) = v / v.norm();
    }

    Eigen::MatrixXd e = panel.values();
    if (q.cols() > 0) {
        e -= q * (q.transpose() * e);
        e -= q * (q.transpose() * e);
    }

    ResidualPanel out{panel.dates(), panel.assets(), Eigen::MatrixXd(t, panel.cols()), std::move(model),
                      static_cast<std::size_t>(factors.cols()), {}};
    const double denom = static_cast<double>(t - 1);
    for (Eigen::Index j = 0; j < panel.cols(); ++j) {
        Eigen::VectorXd col = e.col(j).array() - e.col(j).mean();
        if (col.norm() <= 1e-10 * panel.values().col(j).norm()) {
            out.values.col(j).setZero();
            out.degenerate.push_back(static_cast<std::size_t>(j));
            continue;
        }
        col /= std::sqrt(col.squaredNorm() / denom);
        out.values.col(j) = col;
    }
    return out;
}

/// Eigenportfolio return series X w / sqrt(lambda) for each column w of
/// `vectors` (unscaled when lambda is numerically zero).
inline Eigen::MatrixXd eigenportfolio_series(const StandardizedPanel& panel, const Eigen::MatrixXd& vectors,
                                             const Eigen::VectorXd& values) {
    if (vectors.rows() != panel.cols() || values.size() != vectors.cols())
        throw InputError("eigenportfolio_series: dimension mismatch");
    Eigen::MatrixXd f = panel.values() * vectors;
    for (Eigen::Index k = 0; k < f.cols(); ++k)
        if (values(k) > 1e-12) f.col(k) /= std::sqrt(values(k));
    return f;
}

/// Top-m ordinary PCA eigenportfolio series of the panel.
inline Eigen::MatrixXd pca_factors(const StandardizedPanel& panel, const Spectrum& spectrum, std::size_t m) {
    if (m > static_cast<std::size_t>(spectrum.size())) throw InputError("pca_factors: m exceeds asset count");
    const auto mm = static_cast<Eigen::Index>(m);
    return eigenportfolio_series(panel, spectrum.vectors.leftCols(mm), spectrum.values.head(mm));
}

/// Top-m labeled HPCA eigenportfolio series of the panel.
inline Eigen::MatrixXd hpca_factors(const StandardizedPanel& panel, const LabeledSpectrum& spectrum, std::size_t m) {
    if (m > spectrum.size()) throw InputError("hpca_factors: m exceeds asset count");
    const auto mm = static_cast<Eigen::Index>(m);
    return eigenportfolio_series(panel, spectrum.vectors().leftCols(mm), spectrum.values().head(mm));
}

/// Number of eigenvalues strictly above the MP edge for (n, T).
inline std::size_t count_above_mp(const Eigen::VectorXd& values, std::size_t n, std::size_t t) {
    const double edge = mp_threshold(static_cast<double>(n), static_cast<double>(t));
    return static_cast<std::size_t>((values.array() > edge).count());
}

struct Histogram {
    /// Grid index of the first edge; edge i equals MpReference::edge(i).
    long first_index = 0;
    std::vector<double> edges;
    std::vector<std::size_t> counts;
};

struct ResidualReport {
    std::size_t n = 0;
    std::size_t t = 0;
    std::size_t degenerate = 0;
    std::string model;
    std::size_t m = 0;
    double lambda_plus = 0.0;
    double lambda_minus = 0.0;
    /// Residual correlation eigenvalues, descending.
    Eigen::VectorXd eigenvalues;
    Histogram histogram;
    std::size_t count_above = 0;
    double leading = 0.0;
    /// leading / n: a rough average pairwise residual correlation.
    double leading_over_n = 0.0;
    double mean_offdiagonal = 0.0;
    /// Fraction of eigenvalues inside [lambda-, lambda+].
    double in_support_fraction = 0.0;
};

/// MP reference matched to the non-degenerate columns of a residual panel.
inline MpReference mp_reference_for(const ResidualPanel& residuals, std::size_t bins = 50) {
    return mp_density(residuals.assets.size() - residuals.degenerate.size(),
                      static_cast<std::size_t>(residuals.values.rows()), bins);
}

inline ResidualReport residual_spectrum(const ResidualPanel& residuals, const MpReference& ref) {
    const StandardizedPanel panel = residuals.as_panel();
    const CorrelationMatrix corr = correlation(panel);
    const Spectrum spec = sym_eig_sorted(corr.values);

    ResidualReport rep;
    rep.n = static_cast<std::size_t>(panel.cols());
    rep.t = static_cast<std::size_t>(panel.rows());
    rep.degenerate = residuals.degenerate.size();
    rep.model = residuals.model;
    rep.m = residuals.m;
    rep.lambda_plus = ref.lambda_plus;
    rep.lambda_minus = ref.lambda_minus;
    rep.eigenvalues = spec.values;
    rep.leading = spec.values(0);
    rep.leading_over_n = rep.leading / static_cast<double>(rep.n);
    rep.count_above = static_cast<std::size_t>((spec.values.array() > ref.lambda_plus).count());
    rep.in_support_fraction =
        static_cast<double>(((spec.values.array() >= ref.lambda_minus) && (spec.values.array() <= ref.lambda_plus)).count()) /
        static_cast<double>(rep.n);
    if (rep.n > 1) {
        const double off = corr.values.sum() - corr.values.trace();
        rep.mean_offdiagonal = off / static_cast<double>(rep.n * (rep.n - 1));
    }

    const double lo = spec.values.minCoeff();
    const double hi = spec.values.maxCoeff();
    const auto bins = static_cast<long>(ref.bins());
    long first = std::min(0L, static_cast<long>(std::floor((lo - ref.lambda_minus) / ref.bin_width)));
    long last = std::max(bins, static_cast<long>(std::ceil((hi - ref.lambda_minus) / ref.bin_width)));
    while (ref.edge(first) > lo) --first;
    while (ref.edge(last) < hi) ++last;

    Histogram& h = rep.histogram;
    h.first_index = first;
    for (long i = first; i <= last; ++i) h.edges.push_back(ref.edge(i));
    h.counts.assign(h.edges.size() - 1, 0);
    for (Eigen::Index k = 0; k < spec.values.size(); ++k) {
        const double v = spec.values(k);
        auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
        auto bin = static_cast<std::size_t>(std::distance(h.edges.begin(), it));
        bin = std::clamp<std::size_t>(bin, 1, h.counts.size()) - 1;
        ++h.counts[bin];
    }
    return rep;
}

} // namespace hpca
