#pragma once

// Experiment configuration and orchestration: scene -> capture -> noise ->
// reconstruction -> metrics, single runs and parameter sweeps.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "macrofp/capture.hpp"
#include "macrofp/metrics.hpp"
#include "macrofp/recon.hpp"
#include "macrofp/scene.hpp"

namespace macrofp {

enum class SceneKind
{
    chart,
    image,
};

enum class CaptureMode
{
    sequential,
    multiplexed,
};

enum class SweepAxis
{
    none,
    overlap,   // values: overlap percentages, count chosen from sar_target
    sar,       // values: per-side aperture counts
    snr,       // values: SNR in dB, each run over snr_sar_counts
    multiplex, // values: "NxT" (active sources x patterns)
};

const char* to_string(SweepAxis axis);

struct MultiplexSettings
{
    int cameras_per_side = 7;
    int sources_per_side = 7;
    double source_overlap_pct = 66.0;
    int active_sources = 2; // N_mux
    int patterns = 3;       // T
};

struct ExperimentConfig
{
    std::string experiment_id = "experiment";
    OpticalGeometry geometry = OpticalGeometry::desk_chart();
    std::optional<double> aperture_diameter_samples; // overrides the geometry-derived value

    SceneKind scene = SceneKind::chart;
    std::vector<int> chart_widths;                 // empty: coarsest width that fits, down to 1
    BarOrientation chart_orientation = BarOrientation::both;
    std::filesystem::path image_path;
    PhaseModel phase_model = PhaseModel::flat;

    double overlap_pct = 61.0;
    std::optional<int> grid_count = 13;
    std::optional<double> sar_target;

    std::optional<double> snr_db = 30.0; // empty: noiseless

    CaptureMode capture_mode = CaptureMode::sequential;
    MultiplexSettings mux;

    ReconConfig recon;

    SweepAxis sweep_axis = SweepAxis::none;
    std::vector<std::string> sweep_values;
    std::vector<int> snr_sar_counts = {1, 3, 7, 9, 13};

    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "runs";
    int workers = 1;
};

/// Description of one configuration key, for help text and CLI flags.
struct ConfigKey
{
    std::string name;
    std::string help;
};

const std::vector<ConfigKey>& config_keys();

/// Sets one key from its text value. `base_dir` resolves relative paths.
/// Throws ConfigError carrying `line` (0: not from a file).
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value, int line = 0,
                   const std::filesystem::path& base_dir = {});

/// Parses "key = value" lines; '#' starts a comment.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Cross-key checks (referenced files exist, grid choice unambiguous, ...).
void validate_config(const ExperimentConfig& config);

/// Full-size protocol: 512 px chart with widths 20..1, long-range optics,
/// 21 x 21 grid and the full 1000-iteration budget.
ExperimentConfig paper_scale(ExperimentConfig config);

/// Canonical "key = value" rendering of every setting.
std::string render_config(const ExperimentConfig& config);

/// Seeds of the individual stages, derived from the master seed.
struct StageSeeds
{
    std::uint64_t phase = 0;
    std::uint64_t noise = 0;
    std::uint64_t pattern = 0;
};

StageSeeds stage_seeds(std::uint64_t master);

/// Aperture diameter in Fourier samples used by a configuration, rounded to a
/// whole number of samples.
double resolved_diameter(const ExperimentConfig& config);

struct SceneProducts
{
    ObjectField object;
    std::optional<ResolutionChartSpec> chart;
};

SceneProducts build_scene(const ExperimentConfig& config);

/// Sequential or multiplexed noiseless capture of the scene.
CaptureSet build_capture(const ExperimentConfig& config, const ObjectField& object);

/// Adds the configured noise; noiseless configurations pass through.
CaptureSet apply_noise(const ExperimentConfig& config, CaptureSet set);

struct MetricRow
{
    std::string experiment_id;
    std::string metric;
    std::optional<int> group_width;
    std::string value;
};

/// "experiment_id,metric,group_width,value" lines with a header.
std::string format_metrics_csv(const std::vector<MetricRow>& rows);

/// Quality metrics of a reconstruction against its scene: intensity RMSE and
/// scale factor, and for charts per-group contrast and MTF20 limit.
std::vector<MetricRow> evaluate(const std::string& experiment_id, const SceneProducts& scene,
                                const ReconReport& report);

/// Same metrics for the raw center capture of a sequential set.
std::vector<MetricRow> evaluate_center_capture(const std::string& experiment_id, const SceneProducts& scene,
                                               const CaptureSet& set);

struct RunResult
{
    std::string experiment_id;
    bool ok = true;
    std::string error; // numerical failure message when !ok
    GridSummary grid;
    double rmse = 0.0;
    std::optional<int> mtf20;
    std::optional<int> center_mtf20;
    double center_rmse = 0.0;
    int iterations = 0;
    std::vector<MetricRow> rows;
};

/// One sweep point per entry; single runs give a one-element list.
std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& config);

/// Runs one point. With `write_artifacts` the object and capture datasets,
/// recovered images, Fourier log-magnitude image, residual history, metrics
/// and a run manifest are written under output_dir / experiment_id.
RunResult run_point(const ExperimentConfig& point, bool write_artifacts);

struct ExperimentResult
{
    std::vector<RunResult> runs;
    bool ok() const;
};

/// Expands the sweep, runs the points on `config.workers` threads and, with
/// `write_artifacts`, writes the combined metrics.csv and sweep manifest.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_artifacts = true);

/// Writes the reconstruction outputs of `report` into `dir`.
void write_recon_outputs(const std::filesystem::path& dir, const ReconReport& report);

/// Log-compressed |psi_hat| for display.
RealImage fourier_log_magnitude(const ComplexField& psi_hat);

} // namespace macrofp
