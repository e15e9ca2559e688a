// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are fixed here and never adjusted to make a run pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hpca/hpca.hpp"
#include "hpca/io.hpp"
#include "test_support.hpp"

using namespace hpca;
namespace ht = hpca::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Random instance for the spectral criteria. Mixes generated hierarchical
/// markets with unstructured panels, and sometimes duplicates a column inside
/// every sector of size >= 2, which forces a repeated zero eigenvalue.
struct Instance {
    StandardizedPanel panel;
    SectorPartition partition;
};

Instance random_instance(std::mt19937_64& rng, std::size_t n_max, std::size_t b_max, bool allow_short) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto sizes = ht::random_sizes(rng, n_max, b_max);
    std::size_t n = 0;
    for (auto s : sizes) n += s;
    std::size_t t = 5 * n + static_cast<std::size_t>(u(rng) * 5.0 * double(n)) + 2;
    if (allow_short && u(rng) < 0.2) t = 2 + static_cast<std::size_t>(u(rng) * double(n));

    Eigen::MatrixXd x;
    SectorPartition partition = SectorPartition::contiguous(sizes);
    if (u(rng) < 0.5) {
        const auto market = generate(ht::random_market(rng, sizes, t));
        x = market.panel.values();
        partition = market.truth.partition;
    } else {
        x = ht::correlated_returns(rng, static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n));
        partition = ht::shuffled_partition(rng, sizes);
    }
    if (u(rng) < 0.25) {
        for (std::size_t k = 0; k < partition.sector_count(); ++k) {
            const auto& mem = partition.members(k);
            if (mem.size() >= 2)
                x.col(static_cast<Eigen::Index>(mem[1])) = 2.0 * x.col(static_cast<Eigen::Index>(mem[0]));
        }
    }
    return {standardize(ht::make_panel(x)), partition};
}

Outcome oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240101);
    double worst_value = 0.0, worst_vector = 0.0, worst_projector = 0.0;
    std::size_t degenerate = 0;
    for (int i = 0; i < 200; ++i) {
        const auto inst = random_instance(rng, 60, 6, false);
        const auto model = fit_hpca(inst.panel, inst.partition);
        const auto spec = hpca_spectrum(model);
        const auto m = ht::match_spectra(spec.values(), spec.vectors(), ht::dense_descending(model.r_tilde));
        worst_value = std::max(worst_value, m.max_value_error);
        worst_vector = std::max(worst_vector, m.max_vector_error);
        worst_projector = std::max(worst_projector, m.max_projector_error);
        degenerate += m.degenerate_clusters;
    }
    const double secs = seconds_since(t0);
    const bool ok = worst_value <= 1e-8 && worst_vector <= 1e-6 && worst_projector <= 1e-6 && secs < 30.0;
    return {ok, "200 instances; max rel eigenvalue err " + fmt(worst_value) + " (<=1e-8), vector err " +
                    fmt(worst_vector) + " (<=1e-6), projector err " + fmt(worst_projector) + " (<=1e-6) over " +
                    std::to_string(degenerate) + " degenerate clusters; " + fmt(secs) + " s (<30 s)"};
}

struct PsdTrace {
    double min_eigenvalue = 1e300;
    double worst_trace = 0.0;
};

PsdTrace psd_and_trace() {
    std::mt19937_64 rng(777);
    PsdTrace out;
    for (int i = 0; i < 500; ++i) {
        const auto inst = random_instance(rng, 60, 8, true);
        const auto model = fit_hpca(inst.panel, inst.partition);
        out.min_eigenvalue = std::min(out.min_eigenvalue, ht::dense_descending(model.r_tilde).values.minCoeff());
        const double n = double(inst.partition.asset_count());
        out.worst_trace = std::max(out.worst_trace, std::abs(hpca_spectrum(model).values().sum() - n));
    }
    return out;
}

Outcome mp_threshold_values() {
    const double v = mp_threshold(434, 1508);
    bool square_ok = true;
    for (double n : {1.0, 7.0, 100.0, 434.0, 5000.0}) square_ok = square_ok && mp_threshold(n, n) == 4.0;
    return {std::abs(v - 2.36) <= 0.01 && square_ok,
            "mp_threshold(434,1508) = " + fmt(v) + " (2.36 +- 0.01); mp_threshold(n,n) == 4: " +
                (square_ok ? "yes" : "no")};
}

Outcome pure_noise() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = 100, t = 1000;
    double worst_below = 1.0, worst_support = 1.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        const auto panel = standardize(ht::make_panel(ht::gaussian(rng, t, n)));
        const auto partition = ht::shuffled_partition(rng, {30, 25, 20, 15, 10});
        for (const std::string method : {"pca", "hpca"}) {
            Eigen::MatrixXd factors;
            if (method == "pca") {
                const auto spec = sym_eig_sorted(correlation(panel).values);
                factors = pca_factors(panel, spec, count_above_mp(spec.values, n, t));
            } else {
                const auto spec = hpca_spectrum(fit_hpca(panel, partition));
                factors = hpca_factors(panel, spec, count_above_mp(spec.values(), n, t));
            }
            const auto res = defactor(panel, factors, method);
            const auto rep = residual_spectrum(res, mp_reference_for(res));
            const double below =
                double((rep.eigenvalues.array() < rep.lambda_plus + 0.1).count()) / double(rep.eigenvalues.size());
            worst_below = std::min(worst_below, below);
            worst_support = std::min(worst_support, rep.in_support_fraction);
        }
    }
    const double secs = seconds_since(t0);
    return {worst_below >= 0.98 && worst_support >= 0.95 && secs < 60.0,
            "(100,1000) x 20 seeds x {pca,hpca}: worst fraction below lambda+ + 0.1 = " + fmt(worst_below) +
                " (>=0.98), worst mass in MP support = " + fmt(worst_support) + " (>=0.95); " + fmt(secs) + " s (<60 s)"};
}

Outcome hierarchy_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t t = 1508;
    const double bound = 4.0 / std::sqrt(double(t));
    std::size_t rho_total = 0, rho_ok = 0, pair_total = 0, pair_ok = 0;
    std::size_t n = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto market = generate(gics_market(t, seed));
        const auto panel = standardize(market.panel);
        const auto& p = market.truth.partition;
        n = p.asset_count();
        const auto model = fit_hpca(panel, p);
        const Eigen::MatrixXd& fitted = model.rho.values;
        const Eigen::MatrixXd& truth = market.truth.factor_correlation;
        for (Eigen::Index i = 0; i < fitted.rows(); ++i)
            for (Eigen::Index j = i + 1; j < fitted.cols(); ++j) {
                ++rho_total;
                if (std::abs(fitted(i, j) - truth(i, j)) <= 0.05) ++rho_ok;
            }

        Eigen::MatrixXd eps = panel.values();
        for (const auto& s : model.sectors)
            for (std::size_t i = 0; i < s.members.size(); ++i)
                eps.col(static_cast<Eigen::Index>(s.members[i])) -= s.betas(static_cast<Eigen::Index>(i)) * s.factor;
        const Eigen::MatrixXd c = detail::column_correlation(eps, "residuals");
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            for (Eigen::Index j = i + 1; j < c.cols(); ++j) {
                if (p.sector_of(static_cast<std::size_t>(i)) == p.sector_of(static_cast<std::size_t>(j))) continue;
                ++pair_total;
                if (std::abs(c(i, j)) <= bound) ++pair_ok;
            }
    }
    const double secs = seconds_since(t0);
    const double rho_frac = double(rho_ok) / double(rho_total);
    const double pair_frac = double(pair_ok) / double(pair_total);
    return {n == 462 && rho_frac >= 0.95 && pair_frac >= 0.95 && secs < 120.0,
            "n = " + std::to_string(n) + ", T = 1508, 10 seeds: rho within 0.05 for " + fmt(100 * rho_frac) +
                "% of " + std::to_string(rho_total) + " entries (>=95%), cross-sector residuals within 4/sqrt(T) for " +
                fmt(100 * pair_frac) + "% of pairs (>=95%); " + fmt(secs) + " s (<120 s)"};
}

Outcome conditioning() {
    std::mt19937_64 rng(4242);
    std::size_t instances = 0, violations = 0, above_pca = 0;
    double worst_margin = 1e300, pca_min_sum = 0.0, hpca_min_sum = 0.0;
    while (instances < 300) {
        const auto inst = random_instance(rng, 60, 6, false);
        const auto& p = inst.partition;
        bool has_block = false;
        for (std::size_t k = 0; k < p.sector_count(); ++k) has_block = has_block || p.size(k) >= 2;
        if (!has_block) continue;
        ++instances;
        const auto model = fit_hpca(inst.panel, p);
        const auto rep = build_comparison(sym_eig_sorted(correlation(inst.panel).values), hpca_spectrum(model), model, 1);
        const double margin = rep.hpca_min - rep.sector_min;
        worst_margin = std::min(worst_margin, margin);
        if (margin < -1e-8) ++violations;
        if (rep.hpca_min >= rep.pca_min) ++above_pca;
        pca_min_sum += rep.pca_min;
        hpca_min_sum += rep.hpca_min;
    }
    const double count = double(instances);
    return {violations == 0,
            std::to_string(instances) + " instances: " + std::to_string(violations) +
                " with HPCA min < sector min - 1e-8 (worst margin " + fmt(worst_margin) + "); mean HPCA min " +
                fmt(hpca_min_sum / count) + " vs mean PCA min " + fmt(pca_min_sum / count) + "; HPCA min >= PCA min in " +
                std::to_string(above_pca) + " of " + std::to_string(instances)};
}

std::string compare_render(const std::string& panel_csv, const std::string& map_csv) {
    std::istringstream pin(panel_csv);
    const auto loaded = load_panel(pin);
    const auto panel = standardize(loaded.panel);
    std::istringstream min(map_csv);
    const auto partition = load_sector_map(min, panel.assets()).partition;
    const auto model = fit_hpca(panel, partition);
    const auto pca = sym_eig_sorted(correlation(panel).values);
    return io::comparison_to_json(build_comparison(pca, hpca_spectrum(model), model, 25)).dump(2);
}

Outcome determinism() {
    const auto market = generate(gics_market(300, 9));
    std::ostringstream panel_csv, map_csv;
    write_panel(panel_csv, market.panel);
    io::write_sector_map(map_csv, market.panel.assets(), market.truth.partition);
    const auto a = compare_render(panel_csv.str(), map_csv.str());
    const auto b = compare_render(panel_csv.str(), map_csv.str());
    return {a == b && !a.empty(), "two compare renders of a 462-asset panel: " + std::to_string(a.size()) + " vs " +
                                      std::to_string(b.size()) + " bytes, identical: " + (a == b ? "yes" : "no")};
}

} // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] %d. %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    };

    report(1, "analytic spectrum matches dense eigensolve", oracle_equivalence);

    PsdTrace pt;
    bool pt_ok = true;
    std::string pt_error;
    try {
        pt = psd_and_trace();
    } catch (const std::exception& e) {
        pt_ok = false;
        pt_error = e.what();
    }
    report(2, "HPCA matrix is positive semidefinite", [&] {
        if (!pt_ok) return Outcome{false, "exception: " + pt_error};
        return Outcome{pt.min_eigenvalue >= -1e-8,
                       "500 instances; smallest eigenvalue " + fmt(pt.min_eigenvalue) + " (>= -1e-8)"};
    });
    report(3, "trace conservation", [&] {
        if (!pt_ok) return Outcome{false, "exception: " + pt_error};
        return Outcome{pt.worst_trace <= 1e-6, "500 instances; max |sum - n| = " + fmt(pt.worst_trace) + " (<=1e-6)"};
    });
    report(4, "Marcenko-Pastur threshold", mp_threshold_values);
    report(5, "pure-noise residual calibration", pure_noise);
    report(6, "hierarchy recovery on the 11-sector market", hierarchy_recovery);
    report(7, "HPCA conditioning versus sector spectra", conditioning);
    report(8, "deterministic compare report", determinism);

    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
