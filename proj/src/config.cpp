#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "macrofp/harness.hpp"
#include "json_codec.hpp"
#include "macrofp/image_io.hpp"

namespace macrofp {

namespace fs = std::filesystem;

const char* to_string(SweepAxis axis)
{
    switch (axis) {
    case SweepAxis::overlap:
        return "overlap";
    case SweepAxis::sar:
        return "sar";
    case SweepAxis::snr:
        return "snr";
    case SweepAxis::multiplex:
        return "multiplex";
    case SweepAxis::none:
        break;
    }
    return "none";
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

struct Context
{
    const std::string& key;
    int line;

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(key + ": " + what, line); }
};

double to_double(const std::string& text, const Context& ctx)
{
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || p != end || !std::isfinite(v))
        ctx.fail("expected a number, got '" + text + "'");
    return v;
}

double positive(const std::string& text, const Context& ctx)
{
    const double v = to_double(text, ctx);
    if (!(v > 0.0))
        ctx.fail("must be positive");
    return v;
}

long long to_int(const std::string& text, const Context& ctx)
{
    long long v = 0;
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || p != end)
        ctx.fail("expected an integer, got '" + text + "'");
    return v;
}

int int_at_least(const std::string& text, long long lo, const Context& ctx)
{
    const long long v = to_int(text, ctx);
    if (v < lo || v > 1'000'000'000)
        ctx.fail("must be an integer >= " + std::to_string(lo));
    return static_cast<int>(v);
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, ','))
        if (auto t = trim(item); !t.empty())
            out.push_back(t);
    return out;
}

/// "12..1" or "12, 10, 8".
std::vector<int> int_list(const std::string& text, const Context& ctx)
{
    std::vector<int> out;
    for (const auto& item : split_list(text)) {
        if (const auto dots = item.find(".."); dots != std::string::npos) {
            const int a = int_at_least(trim(item.substr(0, dots)), 0, ctx);
            const int b = int_at_least(trim(item.substr(dots + 2)), 0, ctx);
            const int s = a >= b ? -1 : 1;
            for (int v = a;; v += s) {
                out.push_back(v);
                if (v == b)
                    break;
            }
        } else {
            out.push_back(int_at_least(item, 0, ctx));
        }
    }
    if (out.empty())
        ctx.fail("expected a list of integers");
    return out;
}

std::string format_number(double v)
{
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

// Shortest text t of v * scale with stod(t) / scale == v, so that values
// entered in display units parse back to the same SI value.
std::string format_scaled(double v, double scale)
{
    char buf[64];
    for (int precision = 1; precision <= 17; ++precision) {
        const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v * scale, std::chars_format::general, precision);
        const std::string text(buf, p);
        if (std::stod(text) / scale == v)
            return text;
    }
    return format_number(v * scale);
}

std::string join(const std::vector<int>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i)
        out += (i ? ", " : "") + std::to_string(values[i]);
    return out;
}

std::string join(const std::vector<std::string>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i)
        out += (i ? ", " : "") + values[i];
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const Context&, const fs::path&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct KeyDef
{
    ConfigKey info;
    Setter set;
    Getter get;
};

const std::vector<KeyDef>& key_table()
{
    static const std::vector<KeyDef> table = {
        {{"experiment_id", "name used for output directories and CSV rows"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             if (v.empty() || v.find_first_of("/\\,\"") != std::string::npos)
                 ctx.fail("must be non-empty without '/', '\\', ',' or quotes");
             c.experiment_id = v;
         },
         [](auto& c) { return c.experiment_id; }},
        {{"grid_size_px", "samples per side of the object and Fourier grids"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.geometry.grid_size = static_cast<std::size_t>(int_at_least(v, 8, ctx)); },
         [](auto& c) { return std::to_string(c.geometry.grid_size); }},
        {{"wavelength_nm", "illumination wavelength"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.geometry.wavelength = positive(v, ctx) / 1e9; },
         [](auto& c) { return format_scaled(c.geometry.wavelength, 1e9); }},
        {{"object_distance_m", "object to aperture distance"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.geometry.object_distance = positive(v, ctx); },
         [](auto& c) { return format_number(c.geometry.object_distance); }},
        {{"focal_length_mm", "lens focal length"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.geometry.focal_length = positive(v, ctx) / 1e3; },
         [](auto& c) { return format_scaled(c.geometry.focal_length, 1e3); }},
        {{"aperture_diameter_mm", "lens aperture diameter"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.geometry.aperture_diameter = positive(v, ctx) / 1e3; },
         [](auto& c) { return format_scaled(c.geometry.aperture_diameter, 1e3); }},
        {{"object_extent_mm", "side length of the imaged object region"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.geometry.object_extent = positive(v, ctx) / 1e3; },
         [](auto& c) { return format_scaled(c.geometry.object_extent, 1e3); }},
        {{"pixel_pitch_um", "sensor pixel pitch"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.geometry.pixel_pitch = positive(v, ctx) / 1e6; },
         [](auto& c) { return format_scaled(c.geometry.pixel_pitch, 1e6); }},
        {{"aperture_diameter_samples", "pupil diameter in Fourier samples; 'auto' derives it from the geometry"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             if (lower(v) == "auto")
                 c.aperture_diameter_samples.reset();
             else
                 c.aperture_diameter_samples = positive(v, ctx);
         },
         [](auto& c) { return c.aperture_diameter_samples ? format_number(*c.aperture_diameter_samples) : "auto"; }},
        {{"scene", "chart or image"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             if (v == "chart")
                 c.scene = SceneKind::chart;
             else if (v == "image")
                 c.scene = SceneKind::image;
             else
                 ctx.fail("expected 'chart' or 'image'");
         },
         [](auto& c) { return std::string(c.scene == SceneKind::chart ? "chart" : "image"); }},
        {{"chart_widths_px", "bar widths, e.g. '12..1' or '20, 16, 12'; 'auto' picks the widest that fits"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             if (lower(v) == "auto")
                 c.chart_widths.clear();
             else
                 c.chart_widths = int_list(v, ctx);
         },
         [](auto& c) { return c.chart_widths.empty() ? std::string("auto") : join(c.chart_widths); }},
        {{"chart_orientation", "both, vertical or horizontal"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             try {
                 c.chart_orientation = detail::parse_orientation(v);
             } catch (const InputError& e) {
                 ctx.fail(e.what());
             }
         },
         [](auto& c) { return std::string(detail::orientation_name(c.chart_orientation)); }},
        {{"image_path", "grayscale PGM or PNG used when scene = image"},
         [](auto& c, auto& v, auto&, auto& base) {
             const fs::path p(v);
             c.image_path = p.is_relative() && !base.empty() ? base / p : p;
         },
         [](auto& c) { return c.image_path.string(); }},
        {{"phase_model", "flat or random-uniform"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             if (v == "flat")
                 c.phase_model = PhaseModel::flat;
             else if (v == "random-uniform" || v == "random")
                 c.phase_model = PhaseModel::random_uniform;
             else
                 ctx.fail("expected 'flat' or 'random-uniform'");
         },
         [](auto& c) { return std::string(to_string(c.phase_model)); }},
        {{"overlap_pct", "overlap between adjacent apertures, percent"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             const double o = to_double(v, ctx);
             if (!(o >= 0.0 && o < 100.0))
                 ctx.fail("must lie in [0, 100)");
             c.overlap_pct = o;
         },
         [](auto& c) { return format_number(c.overlap_pct); }},
        {{"grid_count", "apertures per side (odd); clears sar_target"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             const int n = int_at_least(v, 1, ctx);
             if (n % 2 == 0)
                 ctx.fail("must be odd so the grid has a center aperture");
             c.grid_count = n;
             c.sar_target.reset();
         },
         [](auto& c) { return c.grid_count ? std::to_string(*c.grid_count) : "auto"; }},
        {{"sar_target", "synthetic aperture ratio used to choose grid_count"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             const double s = to_double(v, ctx);
             if (!(s >= 1.0))
                 ctx.fail("must be at least 1");
             c.sar_target = s;
             c.grid_count.reset();
         },
         [](auto& c) { return c.sar_target ? format_number(*c.sar_target) : "none"; }},
        {{"snr_db", "sensor SNR in dB; 'none' disables noise"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             const auto l = lower(v);
             if (l == "none" || l == "inf" || l == "off")
                 c.snr_db.reset();
             else
                 c.snr_db = to_double(v, ctx);
         },
         [](auto& c) { return c.snr_db ? format_number(*c.snr_db) : "none"; }},
        {{"capture_mode", "sequential or multiplexed"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             if (v == "sequential")
                 c.capture_mode = CaptureMode::sequential;
             else if (v == "multiplexed")
                 c.capture_mode = CaptureMode::multiplexed;
             else
                 ctx.fail("expected 'sequential' or 'multiplexed'");
         },
         [](auto& c) { return std::string(c.capture_mode == CaptureMode::sequential ? "sequential" : "multiplexed"); }},
        {{"mux_cameras_per_side", "camera array size (cameras abut: 0% overlap)"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.mux.cameras_per_side = int_at_least(v, 1, ctx); },
         [](auto& c) { return std::to_string(c.mux.cameras_per_side); }},
        {{"mux_sources_per_side", "illumination source array size"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.mux.sources_per_side = int_at_least(v, 1, ctx); },
         [](auto& c) { return std::to_string(c.mux.sources_per_side); }},
        {{"mux_source_overlap_pct", "overlap between apertures shifted by neighbouring sources, percent"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             const double o = to_double(v, ctx);
             if (!(o >= 0.0 && o < 100.0))
                 ctx.fail("must lie in [0, 100)");
             c.mux.source_overlap_pct = o;
         },
         [](auto& c) { return format_number(c.mux.source_overlap_pct); }},
        {{"mux_active_sources", "sources lit per exposure (N_mux)"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.mux.active_sources = int_at_least(v, 1, ctx); },
         [](auto& c) { return std::to_string(c.mux.active_sources); }},
        {{"mux_patterns", "exposures per camera (T)"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.mux.patterns = int_at_least(v, 1, ctx); },
         [](auto& c) { return std::to_string(c.mux.patterns); }},
        {{"tau", "ridge weight of the Fourier update; 'auto' uses 1e-6 x peak coverage"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             if (lower(v) == "auto") {
                 c.recon.tau.reset();
                 return;
             }
             const double t = to_double(v, ctx);
             if (t < 0.0)
                 ctx.fail("must be nonnegative");
             c.recon.tau = t;
         },
         [](auto& c) { return c.recon.tau ? format_number(*c.recon.tau) : "auto"; }},
        {{"max_iters", "iteration limit"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.recon.max_iters = int_at_least(v, 0, ctx); },
         [](auto& c) { return std::to_string(c.recon.max_iters); }},
        {{"rel_tol", "stop when the relative change of the estimate falls below this"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             const double t = to_double(v, ctx);
             if (t < 0.0)
                 ctx.fail("must be nonnegative");
             c.recon.rel_tol = t;
         },
         [](auto& c) { return format_number(c.recon.rel_tol); }},
        {{"sweep_axis", "none, overlap, sar, snr or multiplex"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             static const std::map<std::string, SweepAxis> names = {{"none", SweepAxis::none},
                                                                   {"overlap", SweepAxis::overlap},
                                                                   {"sar", SweepAxis::sar},
                                                                   {"snr", SweepAxis::snr},
                                                                   {"multiplex", SweepAxis::multiplex}};
             const auto it = names.find(v);
             if (it == names.end())
                 ctx.fail("expected none, overlap, sar, snr or multiplex");
             c.sweep_axis = it->second;
         },
         [](auto& c) { return std::string(to_string(c.sweep_axis)); }},
        {{"sweep_values", "comma separated sweep values (multiplex: NxT entries)"},
         [](auto& c, auto& v, auto&, auto&) { c.sweep_values = split_list(v); },
         [](auto& c) { return join(c.sweep_values); }},
        {{"snr_sar_counts", "per-side counts run at every SNR of an snr sweep"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             auto counts = int_list(v, ctx);
             for (int n : counts)
                 if (n < 1 || n % 2 == 0)
                     ctx.fail("counts must be odd and positive");
             c.snr_sar_counts = std::move(counts);
         },
         [](auto& c) { return join(c.snr_sar_counts); }},
        {{"seed", "master seed; stage seeds are derived from it"},
         [](auto& c, auto& v, auto& ctx, auto&) {
             std::uint64_t s = 0;
             const auto* end = v.data() + v.size();
             const auto [p, ec] = std::from_chars(v.data(), end, s);
             if (ec != std::errc{} || p != end)
                 ctx.fail("expected an unsigned integer");
             c.seed = s;
         },
         [](auto& c) { return std::to_string(c.seed); }},
        {{"output_dir", "directory receiving run artifacts"},
         [](auto& c, auto& v, auto& ctx, auto& base) {
             if (v.empty())
                 ctx.fail("must not be empty");
             const fs::path p(v);
             c.output_dir = p.is_relative() && !base.empty() ? base / p : p;
         },
         [](auto& c) { return c.output_dir.string(); }},
        {{"workers", "parallel sweep jobs"},
         [](auto& c, auto& v, auto& ctx, auto&) { c.workers = int_at_least(v, 1, ctx); },
         [](auto& c) { return std::to_string(c.workers); }},
    };
    return table;
}

} // namespace

const std::vector<ConfigKey>& config_keys()
{
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const auto& k : key_table())
            out.push_back(k.info);
        return out;
    }();
    return keys;
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value, int line,
                   const fs::path& base_dir)
{
    for (const auto& k : key_table()) {
        if (k.info.name == key) {
            k.set(config, trim(value), Context{key, line}, base_dir);
            return;
        }
    }
    throw ConfigError("unknown key '" + key + "'", line);
}

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir)
{
    ExperimentConfig config;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos)
            raw.erase(hash);
        const std::string content = trim(raw);
        if (content.empty())
            continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value'", line);
        const std::string key = trim(content.substr(0, eq));
        if (key.empty())
            throw ConfigError("missing key before '='", line);
        if (auto it = seen.find(key); it != seen.end())
            throw ConfigError("duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")",
                              line);
        if ((key == "grid_count" && seen.count("sar_target")) || (key == "sar_target" && seen.count("grid_count")))
            throw ConfigError("grid_count and sar_target are mutually exclusive", line);
        seen.emplace(key, line);
        apply_setting(config, key, content.substr(eq + 1), line, base_dir);
    }
    return config;
}

ExperimentConfig load_config(const fs::path& path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    try {
        return parse_config(text, path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void validate_config(const ExperimentConfig& c)
{
    try {
        c.geometry.validate();
    } catch (const GeometryError& e) {
        throw ConfigError(e.what());
    }
    if (c.scene == SceneKind::image) {
        if (c.image_path.empty())
            throw ConfigError("scene = image needs image_path");
        if (!fs::exists(c.image_path))
            throw ConfigError("image_path does not exist: " + c.image_path.string());
    }
    if (!c.grid_count && !c.sar_target)
        throw ConfigError("set grid_count or sar_target");
    if (c.sweep_axis == SweepAxis::none && !c.sweep_values.empty())
        throw ConfigError("sweep_values given without a sweep_axis");
    if (c.sweep_axis != SweepAxis::none && c.sweep_values.empty())
        throw ConfigError(std::string("sweep_axis = ") + to_string(c.sweep_axis) + " needs sweep_values");
    if (c.sweep_axis == SweepAxis::multiplex && c.capture_mode != CaptureMode::multiplexed)
        throw ConfigError("a multiplex sweep needs capture_mode = multiplexed");
    if (c.capture_mode == CaptureMode::multiplexed &&
        c.mux.active_sources > c.mux.sources_per_side * c.mux.sources_per_side)
        throw ConfigError("mux_active_sources exceeds the number of sources");

    // Sweep values must parse for their axis.
    for (const auto& v : c.sweep_values) {
        const std::string key = "sweep_values";
        const Context ctx{key, 0};
        switch (c.sweep_axis) {
        case SweepAxis::overlap: {
            const double o = to_double(v, ctx);
            if (!(o >= 0.0 && o < 100.0))
                ctx.fail("overlap values must lie in [0, 100)");
            break;
        }
        case SweepAxis::sar: {
            const int n = int_at_least(v, 1, ctx);
            if (n % 2 == 0)
                ctx.fail("per-side counts must be odd");
            break;
        }
        case SweepAxis::snr:
            to_double(v, ctx);
            break;
        case SweepAxis::multiplex: {
            const auto x = lower(v).find('x');
            if (x == std::string::npos)
                ctx.fail("multiplex values look like 2x3 (N_mux x T)");
            int_at_least(v.substr(0, x), 1, ctx);
            int_at_least(v.substr(x + 1), 1, ctx);
            break;
        }
        case SweepAxis::none:
            break;
        }
    }
}

ExperimentConfig paper_scale(ExperimentConfig config)
{
    config.geometry = OpticalGeometry::paper_chart();
    config.aperture_diameter_samples.reset();
    config.scene = SceneKind::chart;
    config.chart_widths.clear();
    for (int w = 20; w >= 1; --w)
        config.chart_widths.push_back(w);
    config.overlap_pct = 61.0;
    config.grid_count = 21;
    config.sar_target.reset();
    config.recon.max_iters = 1000;
    config.recon.rel_tol = 1e-5;
    return config;
}

std::string render_config(const ExperimentConfig& config)
{
    std::string out;
    for (const auto& k : key_table()) {
        // grid_count and sar_target are alternatives; only the active one is written.
        if ((k.info.name == "grid_count" && !config.grid_count) || (k.info.name == "sar_target" && !config.sar_target))
            continue;
        out += k.info.name + " = " + k.get(config) + "\n";
    }
    return out;
}

} // namespace macrofp
