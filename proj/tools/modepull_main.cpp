#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "modepull/bootstrap.hpp"
#include "modepull/csv.hpp"
#include "modepull/fit.hpp"
#include "modepull/report.hpp"
#include "modepull/rng.hpp"
#include "modepull/solver.hpp"
#include "modepull/version.hpp"

namespace {

using nlohmann::json;
using namespace modepull;

constexpr double kDefaultFm = 299792458.0 / 795e-9;  // 795 nm line

struct PhysicsOpts {
    double gamma_hz = 6e6;
    double epsilon = 0.0;
    double epsilon_rel = 0.0;
    bool epsilon_given = false;
    bool epsilon_rel_given = false;
    double fm_hz = kDefaultFm;
    double f0_hz = 0.0;  // 0: use fm_hz
    double p_tot_m = 0.80;
    double p_d_m = 0.022;
};

struct RangeOpts {
    double from_hz = -6e7;
    double to_hz = 6e7;
    int points = 1001;
    std::string direction = "up";
};

void add_physics_options(CLI::App* cmd, PhysicsOpts& o, bool need_epsilon) {
    cmd->add_option("--gamma-hz", o.gamma_hz, "Resonance half-width in Hz")
        ->capture_default_str();
    if (need_epsilon) {
        auto* eps = cmd->add_option("--epsilon", o.epsilon,
                                    "Resonance strength (absolute, dimensionless)");
        auto* rel = cmd->add_option("--epsilon-rel", o.epsilon_rel,
                                    "Resonance strength in units of the threshold");
        eps->excludes(rel);
        rel->excludes(eps);
    }
    cmd->add_option("--fm-hz", o.fm_hz, "Medium resonance frequency in Hz")
        ->capture_default_str();
    cmd->add_option("--f0-hz", o.f0_hz,
                    "Cavity reference frequency in Hz (default: --fm-hz)");
    cmd->add_option("--p-tot-m", o.p_tot_m, "Total round-trip path in m")
        ->capture_default_str();
    cmd->add_option("--p-d-m", o.p_d_m, "Dispersive element length in m")
        ->capture_default_str();
}

void add_range_options(CLI::App* cmd, RangeOpts& o) {
    cmd->add_option("--from-hz", o.from_hz, "Sweep start (empty-cavity detuning, Hz)")
        ->capture_default_str();
    cmd->add_option("--to-hz", o.to_hz, "Sweep stop (empty-cavity detuning, Hz)")
        ->capture_default_str();
    cmd->add_option("--points", o.points, "Sample count")->capture_default_str();
    cmd->add_option("--direction", o.direction, "Sweep direction: up | down")
        ->check(CLI::IsMember({"up", "down"}))
        ->capture_default_str();
}

CavityGeometry make_geometry(const PhysicsOpts& o) {
    const double f0 = o.f0_hz > 0.0 ? o.f0_hz : o.fm_hz;
    return CavityGeometry::from_total(o.p_tot_m, o.p_d_m, f0);
}

ResonanceLine make_line(const PhysicsOpts& o, const CavityGeometry& geometry) {
    if (o.epsilon_given == o.epsilon_rel_given) {
        throw InvalidArgumentError("give exactly one of --epsilon or --epsilon-rel");
    }
    ResonanceLine line{0.0, o.gamma_hz, o.fm_hz};
    if (o.epsilon_given) {
        line.epsilon = o.epsilon;
    } else {
        line.epsilon = o.epsilon_rel * epsilon_threshold(geometry, line);
    }
    validate(line);
    return line;
}

json physics_config(const PhysicsOpts& o) {
    json cfg{{"gamma_hz", o.gamma_hz}, {"fm_hz", o.fm_hz},
             {"f0_hz", o.f0_hz > 0.0 ? o.f0_hz : o.fm_hz},
             {"p_tot_m", o.p_tot_m},  {"p_d_m", o.p_d_m}};
    if (o.epsilon_given) {
        cfg["epsilon"] = o.epsilon;
    }
    if (o.epsilon_rel_given) {
        cfg["epsilon_rel"] = o.epsilon_rel;
    }
    return cfg;
}

json range_config(const RangeOpts& o) {
    return json{{"from_hz", o.from_hz},
                {"to_hz", o.to_hz},
                {"points", o.points},
                {"direction", o.direction}};
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw Error("cannot open output file: " + path);
    }
    os << content;
    if (!os) {
        throw Error("failed writing output file: " + path);
    }
}

MeasurementSeries read_input(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw CsvError("cannot open input file: " + path);
    }
    return read_measurement_csv(is, path);
}

double mhz(double hz) { return hz * 1e-6; }

// ---------------------------------------------------------------------------

struct ScanOpts {
    PhysicsOpts phys;
    RangeOpts range;
    double window_hz = 0.0;
    double radius_gammas = 3.0;
    std::string out;
};

int run_scan(const ScanOpts& o, const char* name) {
    const auto geometry = make_geometry(o.phys);
    const auto line = make_line(o.phys, geometry);
    const double ratio = line.epsilon / epsilon_threshold(geometry, line);
    const ResonanceEquation equation(geometry, MediumModel::single(line));

    SweepOptions sweep_options;
    sweep_options.continuation_radius_gammas = o.radius_gammas;
    if (o.window_hz > 0.0) {
        sweep_options.window_hz = o.window_hz;
    }
    const auto direction = sweep_direction_from_string(o.range.direction);
    const auto curve =
        sweep(equation, o.range.from_hz, o.range.to_hz, o.range.points, direction,
              sweep_options);

    json cfg = physics_config(o.phys);
    cfg.update(range_config(o.range));
    cfg["window_hz"] = o.window_hz;
    cfg["radius_gammas"] = o.radius_gammas;
    cfg["out"] = o.out;
    const json prov = make_provenance(name, cfg);

    std::ostringstream csv;
    write_response_csv(csv, curve,
                       {std::string("modepull ") + name + " v" + kVersion,
                        "provenance: " + prov.dump()});
    write_file(o.out, csv.str());
    write_file(o.out + ".meta.json",
               scan_metadata(curve, geometry, line, ratio, prov).dump(2) + "\n");

    std::cout << name << ": " << curve.samples.size() << " samples, "
              << curve.jumps.size() << " jump(s), epsilon/threshold = " << ratio
              << ", range " << mhz(o.range.from_hz) << " .. " << mhz(o.range.to_hz)
              << " MHz -> " << o.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct ExtremaOpts {
    PhysicsOpts phys;
    std::string out;
};

int run_extrema(const ExtremaOpts& o) {
    const auto geometry = make_geometry(o.phys);
    const auto line = make_line(o.phys, geometry);
    const double eps_th = epsilon_threshold(geometry, line);
    const PfExtrema extrema = pf_extrema(geometry, line);

    json cfg = physics_config(o.phys);
    cfg["out"] = o.out;
    const json prov = make_provenance("extrema", cfg);
    write_file(o.out, extrema_record(extrema, line.epsilon, eps_th,
                                     {std::string("modepull extrema v") + kVersion,
                                      "provenance: " + prov.dump()}));

    std::cout << "extrema: epsilon/threshold = " << extrema.epsilon_ratio;
    if (extrema.pf_max) {
        std::cout << ", pf_max = " << *extrema.pf_max << " at +-"
                  << mhz(extrema.detuning_at_max_hz) << " MHz";
    } else {
        std::cout << ", bifurcating (pf_max unbounded)";
    }
    std::cout << ", pf_min = " << extrema.pf_min << " -> " << o.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct SynthOpts {
    ScanOpts scan;
    double noise_sigma_hz = 0.0;
    std::uint64_t seed = 0;
};

int run_synth(const SynthOpts& o) {
    const auto geometry = make_geometry(o.scan.phys);
    const auto line = make_line(o.scan.phys, geometry);
    const ResonanceEquation equation(geometry, MediumModel::single(line));

    SweepOptions sweep_options;
    sweep_options.continuation_radius_gammas = o.scan.radius_gammas;
    if (o.scan.window_hz > 0.0) {
        sweep_options.window_hz = o.scan.window_hz;
    }
    const auto direction = sweep_direction_from_string(o.scan.range.direction);
    const auto curve = sweep(equation, o.scan.range.from_hz, o.scan.range.to_hz,
                             o.scan.range.points, direction, sweep_options);

    RandomSampler rng(stream_seed(o.seed, 0));
    std::vector<MeasurementPoint> points;
    points.reserve(curve.samples.size());
    for (const auto& s : curve.samples) {
        const double noise = o.noise_sigma_hz > 0.0 ? o.noise_sigma_hz * rng.gaussian() : 0.0;
        points.push_back(MeasurementPoint{s.delta_f_e_hz, s.delta_f_d_hz + noise, 1.0});
    }

    json cfg = physics_config(o.scan.phys);
    cfg.update(range_config(o.scan.range));
    cfg["noise_sigma_hz"] = o.noise_sigma_hz;
    cfg["seed"] = o.seed;
    cfg["out"] = o.scan.out;
    const json prov = make_provenance("synth", cfg);

    std::ostringstream csv;
    write_measurement_csv(csv, MeasurementSeries(std::move(points), "synth"),
                          {std::string("modepull synth v") + kVersion,
                           "provenance: " + prov.dump()});
    write_file(o.scan.out, csv.str());

    std::cout << "synth: " << curve.samples.size() << " points, noise sigma = "
              << mhz(o.noise_sigma_hz) << " MHz, seed = " << o.seed << " -> "
              << o.scan.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct FitCliOpts {
    PhysicsOpts phys;
    std::string input;
    std::string out;
    std::string model = "lorentzian";
    std::string direction = "up";
    int max_iterations = 500;
    double init_epsilon = -1.0;
    double init_gamma_hz = -1.0;
    double init_center_hz = 0.0;
    bool init_center_given = false;
    double init_baseline_hz = 0.0;
    bool init_baseline_given = false;
};

int run_fit(const FitCliOpts& o) {
    const auto series = read_input(o.input);

    json cfg{{"input", o.input}, {"out", o.out},       {"model", o.model},
             {"direction", o.direction}, {"max_iterations", o.max_iterations}};

    FitReport report;
    int exit_code = 0;
    if (o.model == "polynomial5") {
        report = fit_polynomial5(series);
    } else {
        const auto geometry = make_geometry(o.phys);
        cfg.update(physics_config(o.phys));

        FitOptions fit_options;
        fit_options.direction = sweep_direction_from_string(o.direction);
        fit_options.max_iterations = o.max_iterations;

        std::optional<LorentzianParams> init;
        if (o.init_epsilon >= 0.0 || o.init_gamma_hz > 0.0 || o.init_center_given ||
            o.init_baseline_given) {
            LorentzianParams params = auto_initialize(series, geometry);
            if (o.init_epsilon >= 0.0) {
                params.epsilon = o.init_epsilon;
            }
            if (o.init_gamma_hz > 0.0) {
                params.gamma_hz = o.init_gamma_hz;
            }
            if (o.init_center_given) {
                params.center_offset_hz = o.init_center_hz;
            }
            if (o.init_baseline_given) {
                params.baseline_offset_hz = o.init_baseline_hz;
            }
            init = params;
        }

        try {
            report = fit_lorentzian(series, geometry, init, fit_options);
        } catch (const ConvergenceError& error) {
            report = error.best();
            report.warning += std::string(report.warning.empty() ? "" : "; ") + error.what();
            exit_code = 4;
        }
    }

    json out = to_json(report);
    out["provenance"] = make_provenance("fit", cfg);
    write_file(o.out, out.dump(2) + "\n");

    std::cout << "fit(" << o.model << "): rss = " << report.rss << " Hz^2, converged = "
              << (report.converged ? "yes" : "no");
    if (report.lorentzian) {
        std::cout << ", gamma = " << mhz(report.lorentzian->gamma_hz)
                  << " MHz, epsilon/threshold = " << report.epsilon_ratio;
    }
    std::cout << " -> " << o.out << "\n";
    if (exit_code != 0) {
        std::cerr << "fit did not converge; report written with warning\n";
    }
    return exit_code;
}

// ---------------------------------------------------------------------------

struct BootstrapCliOpts {
    FitCliOpts fit;
    int replicates = 1000;
    double confidence = 0.90;
    double bandwidth_hz = -1.0;  // < 0: Silverman auto
    std::uint64_t seed = 0;
};

int run_bootstrap(const BootstrapCliOpts& o) {
    const auto series = read_input(o.fit.input);
    const auto geometry = make_geometry(o.fit.phys);

    FitOptions fit_options;
    fit_options.direction = sweep_direction_from_string(o.fit.direction);
    fit_options.max_iterations = o.fit.max_iterations;
    const FitReport base = fit_lorentzian(series, geometry, std::nullopt, fit_options);

    BootstrapConfig config;
    config.replicates = o.replicates;
    config.confidence = o.confidence;
    if (o.bandwidth_hz >= 0.0) {
        config.kernel_bandwidth_hz = o.bandwidth_hz;
    }
    config.seed = o.seed;

    json cfg = physics_config(o.fit.phys);
    cfg["input"] = o.fit.input;
    cfg["out"] = o.fit.out;
    cfg["direction"] = o.fit.direction;
    cfg["replicates"] = o.replicates;
    cfg["confidence"] = o.confidence;
    cfg["bandwidth_hz"] = o.bandwidth_hz;
    cfg["seed"] = o.seed;

    BootstrapReport report;
    int exit_code = 0;
    std::string warning;
    try {
        report = smoothed_bootstrap(series, geometry, base, config);
    } catch (const BootstrapUnstableError& error) {
        report = error.partial();
        warning = error.what();
        exit_code = 5;
    }

    json out = to_json(report);
    out["base_fit"] = to_json(base);
    const auto bound = pf_max_lower_bound(report);
    out["pf_max_lower_bound"] = json{{"value", std::isfinite(bound.value)
                                                   ? json(bound.value)
                                                   : json(nullptr)},
                                     {"unbounded", bound.unbounded},
                                     {"bifurcating_bound_only", bound.bifurcating_bound_only}};
    if (!warning.empty()) {
        out["warning"] = warning;
    }
    out["provenance"] = make_provenance("bootstrap", cfg);
    write_file(o.fit.out, out.dump(2) + "\n");

    std::cout << "bootstrap: " << report.replicate_success_count << "/"
              << report.replicates_requested << " replicates, bifurcation fraction = "
              << report.bifurcation_fraction << ", pf_max lower bound = " << bound.value
              << " -> " << o.fit.out << "\n";
    if (exit_code != 0) {
        std::cerr << warning << "; partial report written\n";
    }
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("modepull ") + kVersion +
                 " - dispersive-cavity laser frequency response toolkit"};
    app.require_subcommand(1);

    ScanOpts scan_opts;
    auto* scan_cmd = app.add_subcommand(
        "scan", "Sweep the empty-cavity detuning and emit the response curve");
    add_physics_options(scan_cmd, scan_opts.phys, true);
    add_range_options(scan_cmd, scan_opts.range);
    scan_cmd->add_option("--window-hz", scan_opts.window_hz,
                         "Explicit root-search window width (0 = automatic)");
    scan_cmd->add_option("--radius-gammas", scan_opts.radius_gammas,
                         "Branch continuation radius in units of gamma")
        ->capture_default_str();
    scan_cmd->add_option("--out", scan_opts.out, "Output CSV path")->required();
    scan_cmd->set_config("--config", "", "Key-value config file (flags take precedence)");

    ExtremaOpts extrema_opts;
    auto* extrema_cmd =
        app.add_subcommand("extrema", "Analytic pulling-factor extrema and threshold");
    add_physics_options(extrema_cmd, extrema_opts.phys, true);
    extrema_cmd->add_option("--out", extrema_opts.out, "Output record path")->required();
    extrema_cmd->set_config("--config", "", "Key-value config file (flags take precedence)");

    SynthOpts synth_opts;
    auto* synth_cmd =
        app.add_subcommand("synth", "Generate a synthetic measurement series");
    add_physics_options(synth_cmd, synth_opts.scan.phys, true);
    add_range_options(synth_cmd, synth_opts.scan.range);
    synth_cmd->add_option("--window-hz", synth_opts.scan.window_hz,
                          "Explicit root-search window width (0 = automatic)");
    synth_cmd->add_option("--noise-sigma-hz", synth_opts.noise_sigma_hz,
                          "Gaussian noise level on the lasing detuning, Hz")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth_opts.seed, "Noise seed")->capture_default_str();
    synth_cmd->add_option("--out", synth_opts.scan.out, "Output CSV path")->required();
    synth_cmd->set_config("--config", "", "Key-value config file (flags take precedence)");

    FitCliOpts fit_opts;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a measured response curve");
    add_physics_options(fit_cmd, fit_opts.phys, false);
    fit_cmd->add_option("--input", fit_opts.input, "Input measurement CSV")->required();
    fit_cmd->add_option("--model", fit_opts.model, "Model: lorentzian | polynomial5")
        ->check(CLI::IsMember({"lorentzian", "polynomial5"}))
        ->capture_default_str();
    fit_cmd->add_option("--direction", fit_opts.direction,
                        "Branch used for bifurcating data: up | down")
        ->check(CLI::IsMember({"up", "down"}))
        ->capture_default_str();
    fit_cmd->add_option("--max-iterations", fit_opts.max_iterations, "Iteration budget")
        ->capture_default_str();
    fit_cmd->add_option("--init-epsilon", fit_opts.init_epsilon,
                        "Starting resonance strength (default: automatic)");
    fit_cmd->add_option("--init-gamma-hz", fit_opts.init_gamma_hz,
                        "Starting half-width (default: automatic)");
    fit_cmd->add_option("--init-center-hz", fit_opts.init_center_hz,
                        "Starting line-center position (default: automatic)");
    fit_cmd->add_option("--init-baseline-hz", fit_opts.init_baseline_hz,
                        "Starting baseline offset (default: automatic)");
    fit_cmd->add_option("--out", fit_opts.out, "Output report path")->required();
    fit_cmd->set_config("--config", "", "Key-value config file (flags take precedence)");

    BootstrapCliOpts boot_opts;
    auto* boot_cmd = app.add_subcommand(
        "bootstrap", "Confidence intervals for the fitted pulling quantities");
    add_physics_options(boot_cmd, boot_opts.fit.phys, false);
    boot_cmd->add_option("--input", boot_opts.fit.input, "Input measurement CSV")
        ->required();
    boot_cmd->add_option("--direction", boot_opts.fit.direction,
                         "Branch used for bifurcating data: up | down")
        ->check(CLI::IsMember({"up", "down"}))
        ->capture_default_str();
    boot_cmd->add_option("--max-iterations", boot_opts.fit.max_iterations,
                         "Per-fit iteration budget")
        ->capture_default_str();
    boot_cmd->add_option("--replicates", boot_opts.replicates, "Replicate count")
        ->capture_default_str();
    boot_cmd->add_option("--confidence", boot_opts.confidence, "Interval confidence")
        ->capture_default_str();
    boot_cmd->add_option("--bandwidth-hz", boot_opts.bandwidth_hz,
                         "Kernel bandwidth in Hz (< 0 selects Silverman's rule)")
        ->capture_default_str();
    boot_cmd->add_option("--seed", boot_opts.seed, "Resampling seed")->capture_default_str();
    boot_cmd->add_option("--out", boot_opts.fit.out, "Output report path")->required();
    boot_cmd->set_config("--config", "", "Key-value config file (flags take precedence)");

    try {
        app.parse(argc, argv);
        scan_opts.phys.epsilon_given = scan_cmd->count("--epsilon") > 0;
        scan_opts.phys.epsilon_rel_given = scan_cmd->count("--epsilon-rel") > 0;
        extrema_opts.phys.epsilon_given = extrema_cmd->count("--epsilon") > 0;
        extrema_opts.phys.epsilon_rel_given = extrema_cmd->count("--epsilon-rel") > 0;
        synth_opts.scan.phys.epsilon_given = synth_cmd->count("--epsilon") > 0;
        synth_opts.scan.phys.epsilon_rel_given = synth_cmd->count("--epsilon-rel") > 0;
        fit_opts.init_center_given = fit_cmd->count("--init-center-hz") > 0;
        fit_opts.init_baseline_given = fit_cmd->count("--init-baseline-hz") > 0;
    } catch (const CLI::ParseError& error) {
        const int code = app.exit(error);
        return code == 0 ? 0 : 2;
    }

    try {
        if (scan_cmd->parsed()) {
            return run_scan(scan_opts, "scan");
        }
        if (extrema_cmd->parsed()) {
            return run_extrema(extrema_opts);
        }
        if (synth_cmd->parsed()) {
            return run_synth(synth_opts);
        }
        if (fit_cmd->parsed()) {
            return run_fit(fit_opts);
        }
        if (boot_cmd->parsed()) {
            return run_bootstrap(boot_opts);
        }
    } catch (const NoSolutionError& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 3;
    } catch (const ConvergenceError& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 4;
    } catch (const Error& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 2;
    } catch (const std::exception& error) {
        std::cerr << "unexpected error: " << error.what() << "\n";
        return 1;
    }
    return 2;
}
