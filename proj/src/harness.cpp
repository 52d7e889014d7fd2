#include "macrofp/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>

#include "json_codec.hpp"
#include "macrofp/dataset.hpp"
#include "macrofp/image_io.hpp"
#include "macrofp/version.hpp"
#include "seed.hpp"

namespace macrofp {

namespace fs = std::filesystem;
using detail::json;

StageSeeds stage_seeds(std::uint64_t master)
{
    return {detail::derive_seed(master, 1), detail::derive_seed(master, 2), detail::derive_seed(master, 3)};
}

double resolved_diameter(const ExperimentConfig& config)
{
    if (config.aperture_diameter_samples)
        return *config.aperture_diameter_samples;
    return std::round(aperture_samples(config.geometry));
}

namespace {

std::string number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

ResolutionChartSpec chart_spec(const ExperimentConfig& config)
{
    const std::size_t n = config.geometry.grid_size;
    ResolutionChartSpec spec;
    spec.grid_size = n;
    spec.orientation = config.chart_orientation;
    if (!config.chart_widths.empty()) {
        spec.group_widths = config.chart_widths;
        return spec;
    }
    for (int coarsest = static_cast<int>(std::min<std::size_t>(n / 8, 64)); coarsest >= 1; --coarsest) {
        spec.group_widths.clear();
        for (int w = coarsest; w >= 1; --w)
            spec.group_widths.push_back(w);
        try {
            chart_layout(spec);
            return spec;
        } catch (const LayoutError&) {
        }
    }
    throw LayoutError("no bar chart fits a " + std::to_string(n) + " px grid");
}

int grid_count(const ExperimentConfig& config)
{
    if (config.grid_count)
        return *config.grid_count;
    if (config.sar_target)
        return count_for_sar(config.overlap_pct, *config.sar_target);
    throw ConfigError("set grid_count or sar_target");
}

ReconConfig recon_config(const ExperimentConfig& config)
{
    ReconConfig rc = config.recon;
    rc.mode = config.capture_mode == CaptureMode::multiplexed ? ReconMode::multiplexed : ReconMode::sequential;
    return rc;
}

json seeds_json(const ExperimentConfig& config)
{
    const auto s = stage_seeds(config.seed);
    return {{"master", config.seed}, {"phase", s.phase}, {"noise", s.noise}, {"pattern", s.pattern}};
}

SeedLog seed_log(const ExperimentConfig& config)
{
    const auto s = stage_seeds(config.seed);
    return {{"master", config.seed}, {"phase", s.phase}, {"noise", s.noise}, {"pattern", s.pattern}};
}

json config_json(const ExperimentConfig& config)
{
    json out = json::object();
    const std::string text = render_config(config);
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        const std::string line = text.substr(pos, end - pos);
        const auto eq = line.find(" = ");
        out[line.substr(0, eq)] = line.substr(eq + 3);
        pos = end + 1;
    }
    return out;
}

std::string value_tag(const std::string& value)
{
    std::string out;
    for (char c : value)
        if (c != ' ')
            out.push_back(c == '.' ? 'p' : c);
    return out;
}

std::optional<int> parse_mtf(const std::vector<MetricRow>& rows, const std::string& metric)
{
    for (const auto& r : rows)
        if (r.metric == metric && r.value != "unresolved")
            return std::stoi(r.value);
    return std::nullopt;
}

double parse_metric(const std::vector<MetricRow>& rows, const std::string& metric)
{
    for (const auto& r : rows)
        if (r.metric == metric)
            return std::stod(r.value);
    return 0.0;
}

std::vector<MetricRow> image_metrics(const std::string& id, const std::string& prefix, const SceneProducts& scene,
                                     const RealImage& intensity)
{
    std::vector<MetricRow> rows;
    const auto rmse = intensity_rmse(intensity, scene.object.field.intensity());
    rows.push_back({id, prefix + "rmse", std::nullopt, number(rmse.rmse)});
    rows.push_back({id, prefix + "rmse_alpha", std::nullopt, number(rmse.alpha)});
    if (!scene.object.groups.empty()) {
        const auto records = group_contrasts(intensity, scene.object.groups);
        for (const auto& r : records)
            rows.push_back({id, prefix + "contrast", r.bar_width, number(r.contrast)});
        const auto limit = mtf20_limit(records);
        rows.push_back({id, prefix + "mtf20_px", std::nullopt, limit ? std::to_string(*limit) : "unresolved"});
    }
    return rows;
}

} // namespace

SceneProducts build_scene(const ExperimentConfig& config)
{
    SceneProducts out;
    const auto seeds = stage_seeds(config.seed);
    if (config.scene == SceneKind::chart) {
        out.chart = chart_spec(config);
        out.object = make_chart(*out.chart);
        if (config.phase_model != PhaseModel::flat)
            out.object = with_phase_model(out.object, config.phase_model, seeds.phase);
        return out;
    }
    const RealImage pixels = read_grayscale(config.image_path);
    if (pixels.width() != config.geometry.grid_size || pixels.height() != config.geometry.grid_size)
        throw DimensionError("image " + config.image_path.string() + " is " + std::to_string(pixels.width()) + "x" +
                             std::to_string(pixels.height()) + ", expected " +
                             std::to_string(config.geometry.grid_size) + " px square");
    out.object = make_object_from_image(pixels, config.phase_model, seeds.phase, config.image_path.filename().string());
    return out;
}

CaptureSet build_capture(const ExperimentConfig& config, const ObjectField& object)
{
    const std::size_t n = config.geometry.grid_size;
    const double d = resolved_diameter(config);
    if (config.capture_mode == CaptureMode::sequential)
        return capture(object, plan_grid(config.overlap_pct, grid_count(config), d, n), config.geometry);

    const auto& m = config.mux;
    const ApertureGrid cameras = plan_grid(0.0, m.cameras_per_side, d, n);
    const double step = std::round((1.0 - m.source_overlap_pct / 100.0) * d);
    const auto sources = source_lattice(m.sources_per_side, step);
    const auto patterns = random_patterns(sources.size(), m.active_sources, m.patterns, stage_seeds(config.seed).pattern);
    CaptureSet set = capture_multiplexed(object, cameras, sources, patterns, stage_seeds(config.seed).pattern,
                                         config.geometry);
    set.grid = GridSummary::of(cameras);
    return set;
}

CaptureSet apply_noise(const ExperimentConfig& config, CaptureSet set)
{
    if (!config.snr_db)
        return set;
    return add_noise(std::move(set), *config.snr_db, stage_seeds(config.seed).noise);
}

std::string format_metrics_csv(const std::vector<MetricRow>& rows)
{
    std::string out = "experiment_id,metric,group_width,value\n";
    for (const auto& r : rows)
        out += r.experiment_id + "," + r.metric + "," + (r.group_width ? std::to_string(*r.group_width) : "") + "," +
               r.value + "\n";
    return out;
}

std::vector<MetricRow> evaluate(const std::string& id, const SceneProducts& scene, const ReconReport& report)
{
    auto rows = image_metrics(id, "", scene, report.recovered_image.intensity());
    rows.push_back({id, "iterations", std::nullopt, std::to_string(report.iterations_run)});
    rows.push_back({id, "converged", std::nullopt, report.converged ? "1" : "0"});
    rows.push_back({id, "final_change", std::nullopt,
                    report.residual_history.empty() ? "0" : number(report.residual_history.back())});
    rows.push_back({id, "tau", std::nullopt, number(report.tau)});
    return rows;
}

std::vector<MetricRow> evaluate_center_capture(const std::string& id, const SceneProducts& scene,
                                               const CaptureSet& set)
{
    if (set.multiplexed() || !set.grid)
        throw InputError("center-capture metrics need a sequential grid capture");
    const auto& g = *set.grid;
    const std::size_t c = static_cast<std::size_t>(g.count / 2) * static_cast<std::size_t>(g.count + 1);
    return image_metrics(id, "center_", scene, capture_in_object_frame(set.images.at(c)));
}

RealImage fourier_log_magnitude(const ComplexField& psi_hat)
{
    RealImage mag = psi_hat.magnitude();
    double peak = 0.0;
    for (double v : mag.pixels())
        peak = std::max(peak, v);
    if (peak > 0.0)
        for (auto& v : mag.pixels())
            v = std::log10(1.0 + 1e4 * v / peak) / 4.0;
    return mag;
}

void write_recon_outputs(const fs::path& dir, const ReconReport& report)
{
    fs::create_directories(dir);
    const RealImage magnitude = report.recovered_image.magnitude();
    const RealImage phase = report.recovered_image.phase();
    write_png16(dir / "recovered_magnitude.png", magnitude);
    write_png16(dir / "recovered_phase.png", phase, -M_PI, M_PI);
    write_raw_f64(dir / "recovered_magnitude.f64", magnitude);
    write_raw_f64(dir / "recovered_phase.f64", phase);
    write_png16(dir / "fourier_log_magnitude.png", fourier_log_magnitude(report.psi_hat), 0.0, 1.0);
    std::string residuals = "iteration,relative_change\n";
    for (std::size_t k = 0; k < report.residual_history.size(); ++k)
        residuals += std::to_string(k + 1) + "," + number(report.residual_history[k]) + "\n";
    write_file_atomic(dir / "residuals.csv", residuals);
}

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& config)
{
    std::vector<ExperimentConfig> points;
    const auto base = [&config](const std::string& suffix) {
        ExperimentConfig p = config;
        p.sweep_axis = SweepAxis::none;
        p.sweep_values.clear();
        p.experiment_id = config.experiment_id + "_" + suffix;
        return p;
    };
    switch (config.sweep_axis) {
    case SweepAxis::none:
        points.push_back(config);
        break;
    case SweepAxis::overlap:
        for (const auto& v : config.sweep_values) {
            auto p = base("overlap" + value_tag(v));
            p.overlap_pct = std::stod(v);
            points.push_back(std::move(p));
        }
        break;
    case SweepAxis::sar:
        for (const auto& v : config.sweep_values) {
            auto p = base("n" + value_tag(v));
            p.grid_count = std::stoi(v);
            p.sar_target.reset();
            points.push_back(std::move(p));
        }
        break;
    case SweepAxis::snr:
        for (const auto& v : config.sweep_values)
            for (int count : config.snr_sar_counts) {
                auto p = base("snr" + value_tag(v) + "_n" + std::to_string(count));
                p.snr_db = std::stod(v);
                p.grid_count = count;
                p.sar_target.reset();
                points.push_back(std::move(p));
            }
        break;
    case SweepAxis::multiplex:
        for (const auto& v : config.sweep_values) {
            std::string l = v;
            for (auto& ch : l)
                ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            const auto x = l.find('x');
            auto p = base("mux" + value_tag(l));
            p.mux.active_sources = std::stoi(l.substr(0, x));
            p.mux.patterns = std::stoi(l.substr(x + 1));
            points.push_back(std::move(p));
        }
        break;
    }
    return points;
}

RunResult run_point(const ExperimentConfig& point, bool write_artifacts)
{
    RunResult result;
    result.experiment_id = point.experiment_id;
    const fs::path dir = point.output_dir / point.experiment_id;

    const SceneProducts scene = build_scene(point);
    const CaptureSet set = apply_noise(point, build_capture(point, scene.object));
    if (set.grid)
        result.grid = *set.grid;

    json manifest;
    manifest["experiment_id"] = point.experiment_id;
    manifest["created_by"] = std::string("macrofp ") + version_string;
    manifest["config"] = config_json(point);
    manifest["seeds"] = seeds_json(point);
    manifest["geometry"] = detail::to_json(point.geometry);
    manifest["aperture_diameter_samples"] = resolved_diameter(point);
    manifest["grid"] = set.grid ? detail::to_json(*set.grid) : json(nullptr);
    if (set.multiplexed()) {
        const double d = resolved_diameter(point);
        const double step = std::round((1.0 - point.mux.source_overlap_pct / 100.0) * d);
        const double span = (point.mux.cameras_per_side - 1) * d + (point.mux.sources_per_side - 1) * step;
        manifest["multiplex"] = {{"cameras_per_side", point.mux.cameras_per_side},
                                 {"sources_per_side", point.mux.sources_per_side},
                                 {"source_step_samples", step},
                                 {"realized_source_overlap", 1.0 - step / d},
                                 {"active_sources", point.mux.active_sources},
                                 {"patterns", point.mux.patterns},
                                 {"sar", (d + span) / d}};
    }
    manifest["image_count"] = set.images.size();
    manifest["snr_db"] = set.snr_db ? json(*set.snr_db) : json(nullptr);

    if (write_artifacts) {
        fs::create_directories(dir);
        DatasetOptions options;
        options.seeds = seed_log(point);
        save_object(dir / "object", scene.object, scene.chart, options);
        save_capture_set(dir / "capture", set, options);
    }

    if (!set.multiplexed()) {
        const auto center = evaluate_center_capture(point.experiment_id, scene, set);
        result.center_mtf20 = parse_mtf(center, "center_mtf20_px");
        result.center_rmse = parse_metric(center, "center_rmse");
        result.rows.insert(result.rows.end(), center.begin(), center.end());
    }

    ReconReport report;
    try {
        report = reconstruct(set, recon_config(point));
    } catch (const NumericalError& e) {
        result.ok = false;
        result.error = e.what();
        if (write_artifacts) {
            manifest["status"] = "numerical_failure";
            manifest["error"] = e.what();
            manifest["failed_iteration"] = e.iteration();
            write_file_atomic(dir / "run_manifest.json", manifest.dump(2) + "\n");
            write_file_atomic(dir / "metrics.csv", format_metrics_csv(result.rows));
        }
        return result;
    }

    const auto rows = evaluate(point.experiment_id, scene, report);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    result.rmse = parse_metric(rows, "rmse");
    result.mtf20 = parse_mtf(rows, "mtf20_px");
    result.iterations = report.iterations_run;

    if (write_artifacts) {
        write_recon_outputs(dir, report);
        write_file_atomic(dir / "metrics.csv", format_metrics_csv(result.rows));
        manifest["status"] = "ok";
        manifest["recon"] = {{"mode", to_string(recon_config(point).mode)},
                             {"tau", report.tau},
                             {"iterations_run", report.iterations_run},
                             {"converged", report.converged},
                             {"final_change", report.residual_history.empty() ? 0.0 : report.residual_history.back()}};
        manifest["metrics"] = {{"rmse", result.rmse},
                               {"mtf20_px", result.mtf20 ? json(*result.mtf20) : json("unresolved")}};
        manifest["outputs"] = {"object/",          "capture/",          "recovered_magnitude.png",
                               "recovered_phase.png", "recovered_magnitude.f64", "recovered_phase.f64",
                               "fourier_log_magnitude.png", "residuals.csv", "metrics.csv"};
        write_file_atomic(dir / "run_manifest.json", manifest.dump(2) + "\n");
    }
    return result;
}

bool ExperimentResult::ok() const
{
    for (const auto& r : runs)
        if (!r.ok)
            return false;
    return true;
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_artifacts)
{
    validate_config(config);
    const auto points = expand_sweep(config);
    ExperimentResult result;
    result.runs.resize(points.size());
    std::vector<std::exception_ptr> errors(points.size());

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                result.runs[i] = run_point(points[i], write_artifacts);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(config.workers, 1)), points.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    if (write_artifacts) {
        fs::create_directories(config.output_dir);
        std::vector<MetricRow> rows;
        json runs = json::array();
        for (const auto& r : result.runs) {
            rows.insert(rows.end(), r.rows.begin(), r.rows.end());
            runs.push_back({{"experiment_id", r.experiment_id},
                            {"status", r.ok ? "ok" : "numerical_failure"},
                            {"step_samples", r.grid.step},
                            {"sar", r.grid.sar},
                            {"rmse", r.rmse},
                            {"mtf20_px", r.mtf20 ? json(*r.mtf20) : json("unresolved")}});
        }
        const std::string stem = config.sweep_axis == SweepAxis::none ? config.experiment_id
                                                                      : config.experiment_id + "_sweep";
        write_file_atomic(config.output_dir / (stem + "_metrics.csv"), format_metrics_csv(rows));
        json manifest;
        manifest["experiment_id"] = config.experiment_id;
        manifest["created_by"] = std::string("macrofp ") + version_string;
        manifest["sweep_axis"] = to_string(config.sweep_axis);
        manifest["config"] = config_json(config);
        manifest["seeds"] = seeds_json(config);
        manifest["runs"] = runs;
        write_file_atomic(config.output_dir / (stem + "_manifest.json"), manifest.dump(2) + "\n");
    }
    return result;
}

} // namespace macrofp
