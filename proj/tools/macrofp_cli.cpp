// Command line front end: scene, capture, noise, recon, eval, sweep, run,
// describe.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

#include "macrofp/dataset.hpp"
#include "macrofp/harness.hpp"
#include "macrofp/image_io.hpp"
#include "macrofp/version.hpp"

namespace fs = std::filesystem;
using namespace macrofp;

namespace {

enum ExitCode
{
    exit_ok = 0,
    exit_config = 2,
    exit_numerical = 3,
    exit_io = 4,
};

/// Config file plus per-key flag overrides shared by every subcommand.
struct ConfigFlags
{
    std::string config_path;
    bool paper_scale = false;
    std::map<std::string, std::string> values;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--config", config_path, "experiment config file (key = value lines)");
        cmd->add_flag("--paper-scale", paper_scale, "512 px chart, 21x21 grid, 1000 iterations");
        for (const auto& key : config_keys())
            cmd->add_option("--" + key.name, values[key.name], key.help);
    }

    ExperimentConfig resolve(CLI::App* cmd) const
    {
        ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        if (paper_scale)
            config = paper_scale_config(config);
        for (const auto& key : config_keys())
            if (cmd->count("--" + key.name) > 0)
                apply_setting(config, key.name, values.at(key.name), 0, fs::current_path());
        return config;
    }

    static ExperimentConfig paper_scale_config(const ExperimentConfig& c) { return macrofp::paper_scale(c); }
};

void print_run(const RunResult& r)
{
    std::printf("%s: SAR %.3f, step %g, rmse %.6g, mtf20 %s", r.experiment_id.c_str(), r.grid.sar, r.grid.step,
                r.rmse, r.mtf20 ? (std::to_string(*r.mtf20) + " px").c_str() : "unresolved");
    if (r.center_mtf20)
        std::printf(" (center capture %d px)", *r.center_mtf20);
    if (!r.ok)
        std::printf(" FAILED: %s", r.error.c_str());
    std::printf("\n");
}

int run_configured(const ExperimentConfig& config)
{
    const auto result = run_experiment(config, true);
    for (const auto& r : result.runs)
        print_run(r);
    return result.ok() ? exit_ok : exit_numerical;
}

SceneProducts loaded_scene(const fs::path& dir)
{
    auto loaded = load_object(dir);
    return {std::move(loaded.object), std::move(loaded.chart)};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Macroscopic Fourier ptychography simulation and reconstruction"};
    app.set_version_flag("--version", std::string("macrofp ") + version_string);
    app.require_subcommand(1);

    ConfigFlags flags;
    std::string in_dir, out_dir, object_dir, capture_dir, recon_dir, out_file;

    auto* scene = app.add_subcommand("scene", "generate an object dataset");
    flags.attach(scene);
    scene->add_option("--out", out_dir, "output dataset directory")->required();

    auto* capture = app.add_subcommand("capture", "simulate noiseless captures of an object dataset");
    flags.attach(capture);
    capture->add_option("--object", object_dir, "object dataset directory")->required();
    capture->add_option("--out", out_dir, "output capture dataset directory")->required();

    auto* noise = app.add_subcommand("noise", "add Gaussian sensor noise to a capture dataset");
    flags.attach(noise);
    noise->add_option("--in", in_dir, "input capture dataset")->required();
    noise->add_option("--out", out_dir, "output capture dataset")->required();

    auto* recon = app.add_subcommand("recon", "reconstruct a capture dataset");
    flags.attach(recon);
    recon->add_option("--in", in_dir, "capture dataset")->required();
    recon->add_option("--out", out_dir, "output directory")->required();

    auto* eval = app.add_subcommand("eval", "metrics of a reconstruction against its object");
    flags.attach(eval);
    eval->add_option("--recon", recon_dir, "directory written by 'recon'")->required();
    eval->add_option("--object", object_dir, "object dataset directory")->required();
    eval->add_option("--capture", capture_dir, "capture dataset for center-capture metrics");
    eval->add_option("--csv", out_file, "write metrics here instead of stdout");

    auto* sweep = app.add_subcommand("sweep", "run a configured parameter sweep");
    flags.attach(sweep);

    auto* run = app.add_subcommand("run", "run the full pipeline for a config");
    flags.attach(run);

    auto* describe = app.add_subcommand("describe", "summarize a dataset directory");
    describe->add_option("dir", in_dir, "dataset directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*describe) {
            std::cout << describe_dataset(in_dir);
            return exit_ok;
        }

        CLI::App* active = app.get_subcommands().front();
        ExperimentConfig config = flags.resolve(active);

        if (*run || *sweep) {
            if (*sweep && config.sweep_axis == SweepAxis::none)
                throw ConfigError("sweep needs sweep_axis and sweep_values");
            return run_configured(config);
        }

        if (*scene) {
            validate_config(config);
            const auto products = build_scene(config);
            DatasetOptions options;
            options.seeds = {{"master", config.seed}, {"phase", stage_seeds(config.seed).phase}};
            save_object(out_dir, products.object, products.chart, options);
            std::printf("wrote object dataset %s\n", out_dir.c_str());
            return exit_ok;
        }

        if (*capture) {
            const auto products = loaded_scene(object_dir);
            config.geometry.grid_size = products.object.field.side();
            const CaptureSet set = build_capture(config, products.object);
            DatasetOptions options;
            options.seeds = {{"master", config.seed}, {"pattern", stage_seeds(config.seed).pattern}};
            save_capture_set(out_dir, set, options);
            std::printf("wrote %zu images to %s\n", set.images.size(), out_dir.c_str());
            return exit_ok;
        }

        if (*noise) {
            if (!config.snr_db)
                throw ConfigError("noise needs a finite snr_db");
            const CaptureSet set = apply_noise(config, load_capture_set(in_dir));
            DatasetOptions options;
            options.seeds = {{"master", config.seed}, {"noise", stage_seeds(config.seed).noise}};
            save_capture_set(out_dir, set, options);
            std::printf("wrote noisy captures (%g dB) to %s\n", *config.snr_db, out_dir.c_str());
            return exit_ok;
        }

        if (*recon) {
            const CaptureSet set = load_capture_set(in_dir);
            ReconConfig rc = config.recon;
            rc.mode = set.multiplexed() ? ReconMode::multiplexed : ReconMode::sequential;
            const auto report = reconstruct(set, rc, [](int k, double change) {
                if (k % 25 == 0)
                    std::fprintf(stderr, "iteration %d: relative change %.3g\n", k, change);
            });
            write_recon_outputs(out_dir, report);
            std::printf("%d iterations, %s, final change %.3g\n", report.iterations_run,
                        report.converged ? "converged" : "iteration limit", 
                        report.residual_history.empty() ? 0.0 : report.residual_history.back());
            return exit_ok;
        }

        if (*eval) {
            const auto products = loaded_scene(object_dir);
            const std::size_t n = products.object.field.side();
            const RealImage magnitude = read_raw_f64(fs::path(recon_dir) / "recovered_magnitude.f64", n, n);
            ReconReport report;
            report.recovered_image = ComplexField::from_real(magnitude, Domain::object_plane);
            std::vector<MetricRow> rows;
            if (!capture_dir.empty()) {
                const auto center = evaluate_center_capture(config.experiment_id, products, load_capture_set(capture_dir));
                rows.insert(rows.end(), center.begin(), center.end());
            }
            for (auto& r : evaluate(config.experiment_id, products, report))
                if (r.metric != "iterations" && r.metric != "converged" && r.metric != "final_change" &&
                    r.metric != "tau")
                    rows.push_back(std::move(r));
            const std::string csv = format_metrics_csv(rows);
            if (out_file.empty())
                std::cout << csv;
            else
                write_file_atomic(out_file, csv);
            return exit_ok;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return exit_numerical;
    } catch (const IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return exit_io;
    } catch (const Error& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return exit_config;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return exit_io;
    }
    return exit_ok;
}
