// hpca: fit hierarchical PCA models, compare them with plain PCA, and
// diagnose residual spectra against the Marcenko-Pastur law.
//
// Exit codes: 0 success, 1 input error, 2 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "hpca/hpca.hpp"
#include "hpca/io.hpp"

namespace fs = std::filesystem;
using hpca::io::Json;

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hpca::InputError("cannot open '" + path + "'");
    return in;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw hpca::InputError("cannot write '" + path.string() + "'");
    return out;
}

void make_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw hpca::InputError("cannot create directory '" + dir + "': " + ec.message());
}

struct Inputs {
    hpca::StandardizedPanel panel;
    hpca::SectorPartition partition;
};

Inputs load_inputs(const std::string& panel_path, const std::string& sectors_path) {
    auto panel_in = open_in(panel_path);
    auto loaded = hpca::load_panel(panel_in);
    if (loaded.dropped_rows > 0)
        std::cerr << "warning: dropped " << loaded.dropped_rows << " row(s) with missing values\n";
    auto sectors_in = open_in(sectors_path);
    auto map = hpca::load_sector_map(sectors_in, loaded.panel.assets());
    for (const auto& w : map.warnings) std::cerr << "warning: " << w << '\n';
    return {hpca::standardize(loaded.panel), std::move(map.partition)};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

int run_fit(const std::string& panel_path, const std::string& sectors_path, const std::string& out_dir, bool dense,
            std::size_t vectors) {
    const auto in = load_inputs(panel_path, sectors_path);
    const auto model = hpca::fit_hpca(in.panel, in.partition);
    const auto spectrum = hpca::hpca_spectrum(model);
    make_dir(out_dir);
    const fs::path dir(out_dir);

    open_out(dir / "model.json")
        << dump(hpca::io::model_to_json(model, spectrum, in.panel.assets(), static_cast<std::size_t>(in.panel.rows()), dense));

    std::vector<hpca::io::SpectrumTableRow> rows;
    for (const auto& e : spectrum.entries) rows.push_back({e.value, hpca::describe(e.label, model.partition)});
    auto spec_out = open_out(dir / "spectrum.csv");
    hpca::io::write_spectrum_table(spec_out, rows, rows.size());

    const auto k = static_cast<Eigen::Index>(std::min<std::size_t>(vectors, spectrum.size()));
    std::vector<std::string> headers;
    for (Eigen::Index i = 0; i < k; ++i) headers.push_back("ev" + std::to_string(i + 1));
    auto vec_out = open_out(dir / "eigenvectors.csv");
    hpca::io::write_eigenvector_table(vec_out, in.panel.assets(), model.partition, spectrum.vectors().leftCols(k),
                                      headers);

    auto fac_out = open_out(dir / "factors.csv");
    hpca::io::write_factor_table(fac_out, in.panel.dates(), model.partition, hpca::factor_panel(model.sectors));

    std::cout << "fitted " << model.partition.asset_count() << " assets in " << model.partition.sector_count()
              << " sectors over " << in.panel.rows() << " periods; wrote " << out_dir << '\n';
    return 0;
}

int run_spectrum(const std::string& model_path, std::size_t top) {
    fs::path path(model_path);
    if (fs::is_directory(path)) path /= "model.json";
    auto in = open_in(path.string());
    const auto rows = hpca::io::spectrum_from_model(hpca::io::parse_json(in, path.string()));
    hpca::io::write_spectrum_table(std::cout, rows, top);
    return 0;
}

int run_compare(const std::string& panel_path, const std::string& sectors_path, std::size_t top,
                const std::string& out_dir) {
    const auto in = load_inputs(panel_path, sectors_path);
    const auto model = hpca::fit_hpca(in.panel, in.partition);
    const auto labeled = hpca::hpca_spectrum(model);
    const auto pca = hpca::sym_eig_sorted(hpca::correlation(in.panel).values);
    const auto report = hpca::build_comparison(pca, labeled, model, top);
    std::cout << dump(hpca::io::comparison_to_json(report));

    if (!out_dir.empty()) {
        make_dir(out_dir);
        const fs::path dir(out_dir);
        auto cum = open_out(dir / "cumulative.csv");
        hpca::io::write_cumulative_table(cum, report);
        const auto k = static_cast<Eigen::Index>(report.rows.size());
        std::vector<std::string> headers;
        for (Eigen::Index i = 0; i < k; ++i) headers.push_back("ev" + std::to_string(i + 1));
        auto hv = open_out(dir / "hpca_eigenvectors.csv");
        hpca::io::write_eigenvector_table(hv, in.panel.assets(), model.partition, labeled.vectors().leftCols(k), headers);
        auto pv = open_out(dir / "pca_eigenvectors.csv");
        hpca::io::write_eigenvector_table(pv, in.panel.assets(), model.partition, pca.vectors.leftCols(k), headers);
    }
    return 0;
}

int run_residuals(const std::string& panel_path, const std::string& sectors_path, const std::string& method,
                  std::optional<std::size_t> m, std::size_t bins, const std::string& out_dir) {
    const auto in = load_inputs(panel_path, sectors_path);
    const auto n = static_cast<std::size_t>(in.panel.cols());
    const auto t = static_cast<std::size_t>(in.panel.rows());

    Eigen::MatrixXd factors;
    if (method == "pca") {
        const auto spec = hpca::sym_eig_sorted(hpca::correlation(in.panel).values);
        const std::size_t cut = m.value_or(hpca::count_above_mp(spec.values, n, t));
        factors = hpca::pca_factors(in.panel, spec, cut);
    } else {
        const auto model = hpca::fit_hpca(in.panel, in.partition);
        const auto labeled = hpca::hpca_spectrum(model);
        const std::size_t cut = m.value_or(hpca::count_above_mp(labeled.values(), n, t));
        factors = hpca::hpca_factors(in.panel, labeled, cut);
    }
    const auto residuals = hpca::defactor(in.panel, factors, method);
    const auto ref = hpca::mp_reference_for(residuals, bins);
    const auto report = hpca::residual_spectrum(residuals, ref);
    std::cout << dump(hpca::io::residual_to_json(report));

    if (!out_dir.empty()) {
        make_dir(out_dir);
        const fs::path dir(out_dir);
        auto ev = open_out(dir / "eigenvalues.csv");
        ev << "rank,eigenvalue\n";
        for (Eigen::Index i = 0; i < report.eigenvalues.size(); ++i)
            ev << i + 1 << ',' << hpca::text::format_double(report.eigenvalues(i)) << '\n';
        auto hist = open_out(dir / "histogram.csv");
        hpca::io::write_histogram_table(hist, report, ref);
        auto mp = open_out(dir / "mp_density.csv");
        hpca::io::write_mp_table(mp, ref);
    }
    return 0;
}

int run_simulate(const std::string& spec_path, const std::string& preset, std::optional<std::uint64_t> seed,
                 std::optional<std::size_t> t, const std::string& out_path, const std::string& sectors_out,
                 const std::string& truth_out) {
    hpca::MarketSpec spec;
    if (!spec_path.empty()) {
        auto in = open_in(spec_path);
        spec = hpca::io::market_spec_from_json(hpca::io::parse_json(in, spec_path));
    } else if (preset == "gics11") {
        spec = hpca::gics_market();
    } else {
        throw hpca::InputError("simulate: give --spec FILE or --preset gics11");
    }
    if (seed) spec.seed = *seed;
    if (t) spec.t = *t;
    const auto market = hpca::generate(spec);

    auto out = open_out(out_path);
    hpca::write_panel(out, market.panel);
    if (!sectors_out.empty()) {
        auto so = open_out(sectors_out);
        hpca::io::write_sector_map(so, market.panel.assets(), market.truth.partition);
    }
    if (!truth_out.empty()) {
        Json j = hpca::io::market_spec_to_json(spec);
        j["population_correlation"] = hpca::io::to_json(market.truth.correlation);
        open_out(truth_out) << dump(j);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical PCA factor models and residual diagnostics"};
    app.require_subcommand(1);

    std::string panel, sectors, out, model, method = "hpca", spec, preset, sectors_out, truth_out;
    std::size_t top = 25, vectors = 10, bins = 50;
    bool dense = false;
    std::optional<std::size_t> m, t;
    std::optional<std::uint64_t> seed;

    auto* fit = app.add_subcommand("fit", "Fit sector models and the HPCA model; export to a directory");
    fit->add_option("--panel", panel, "Returns table (date column + one column per asset)")->required();
    fit->add_option("--sectors", sectors, "asset,sector map")->required();
    fit->add_option("--out", out, "Output directory")->required();
    fit->add_flag("--dense", dense, "Include the dense HPCA correlation matrix in model.json");
    fit->add_option("--vectors", vectors, "Number of HPCA eigenvectors to tabulate")->capture_default_str();

    auto* spectrum = app.add_subcommand("spectrum", "Print the labeled HPCA eigenvalue table of a fitted model");
    spectrum->add_option("--model", model, "Model directory or model.json")->required();
    spectrum->add_option("--top", top, "Rows to print")->capture_default_str();

    auto* compare = app.add_subcommand("compare", "Compare PCA and HPCA spectra and eigenvectors");
    compare->add_option("--panel", panel)->required();
    compare->add_option("--sectors", sectors)->required();
    compare->add_option("--top", top, "Ranks to tabulate")->capture_default_str();
    compare->add_option("--out", out, "Optional directory for CSV tables");

    auto* residuals = app.add_subcommand("residuals", "Residual spectrum after removing m eigenportfolios");
    residuals->add_option("--panel", panel)->required();
    residuals->add_option("--sectors", sectors)->required();
    residuals->add_option("--method", method, "pca or hpca")
        ->check(CLI::IsMember({"pca", "hpca"}))
        ->capture_default_str();
    residuals->add_option("--m", m, "Eigenportfolios to remove (default: count above the MP edge)");
    residuals->add_option("--bins", bins, "Histogram intervals across the MP support")->capture_default_str();
    residuals->add_option("--out", out, "Optional directory for CSV tables");

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic hierarchical returns panel");
    simulate->add_option("--spec", spec, "Market spec (JSON)");
    simulate->add_option("--preset", preset, "Built-in market instead of --spec")->check(CLI::IsMember({"gics11"}));
    simulate->add_option("--seed", seed, "Overrides the market spec seed");
    simulate->add_option("--periods", t, "Overrides the market spec observation count");
    simulate->add_option("--out", out, "Output panel file")->required();
    simulate->add_option("--sectors-out", sectors_out, "Also write the asset,sector map");
    simulate->add_option("--truth-out", truth_out, "Also write the market spec and population correlation (JSON)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*fit) return run_fit(panel, sectors, out, dense, vectors);
        if (*spectrum) return run_spectrum(model, top);
        if (*compare) return run_compare(panel, sectors, top, out);
        if (*residuals) return run_residuals(panel, sectors, method, m, bins, out);
        if (*simulate) return run_simulate(spec, preset, seed, t, out, sectors_out, truth_out);
    } catch (const hpca::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const hpca::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
