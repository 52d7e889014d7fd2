#include "macrofp/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "json_codec.hpp"
#include "macrofp/image_io.hpp"
#include "macrofp/version.hpp"

namespace macrofp {

namespace fs = std::filesystem;
using detail::json;

namespace {

constexpr const char* manifest_name = "manifest.json";

std::string indexed_name(std::size_t k, const char* ext)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu.%s", k, ext);
    return buf;
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create directory " + dir.string());
}

json base_manifest(const char* kind, const DatasetOptions& options)
{
    json m;
    m["format"] = "macrofp-dataset";
    m["format_version"] = dataset_format_version;
    m["kind"] = kind;
    m["created_by"] = std::string("macrofp ") + version_string;
    json seeds = json::object();
    for (const auto& [k, v] : options.seeds)
        seeds[k] = v;
    m["seeds"] = seeds;
    return m;
}

json file_entry(const fs::path& dir, const std::string& relative, const std::string& bytes)
{
    write_file_atomic(dir / relative, bytes);
    return {{"file", relative}, {"sha256", sha256_hex(bytes)}};
}

void write_manifest(const fs::path& dir, const json& m) { write_file_atomic(dir / manifest_name, m.dump(2) + "\n"); }

json read_manifest(const fs::path& dir)
{
    const fs::path path = dir / manifest_name;
    if (!fs::exists(path))
        throw IoError("dataset manifest missing: " + path.string());
    json m;
    try {
        m = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": malformed manifest (" + e.what() + ")");
    }
    if (m.value("format", "") != "macrofp-dataset")
        throw IoError(path.string() + ": not a macrofp dataset manifest");
    if (m.value("format_version", 0) != dataset_format_version)
        throw IoError(path.string() + ": unsupported format version");
    return m;
}

/// Reads a listed file and checks it against the recorded digest.
std::string verified_file(const fs::path& dir, const json& entry)
{
    const std::string relative = entry.at("file").get<std::string>();
    const fs::path path = dir / relative;
    if (!fs::exists(path))
        throw IoError("dataset file missing: " + path.string());
    std::string bytes = read_file(path);
    if (sha256_hex(bytes) != entry.at("sha256").get<std::string>())
        throw ChecksumError("checksum mismatch: " + path.string());
    return bytes;
}

template <class T>
Image<T> image_from_bytes(const std::string& bytes, std::size_t n, const std::string& name)
{
    if (bytes.size() != n * n * sizeof(T))
        throw IoError(name + ": unexpected file size");
    Image<T> img(n, n);
    std::memcpy(img.pixels().data(), bytes.data(), bytes.size());
    return img;
}

template <class T>
std::string image_bytes(const Image<T>& img)
{
    std::string bytes(img.size() * sizeof(T), '\0');
    std::memcpy(bytes.data(), img.pixels().data(), bytes.size());
    return bytes;
}

template <class F>
auto with_manifest_errors(const fs::path& dir, F&& body)
{
    try {
        return body();
    } catch (const json::exception& e) {
        throw IoError((dir / manifest_name).string() + ": " + e.what());
    } catch (const InputError& e) {
        throw IoError((dir / manifest_name).string() + ": " + e.what());
    }
}

} // namespace

void save_capture_set(const fs::path& dir, const CaptureSet& set, const DatasetOptions& options)
{
    set.validate();
    const std::size_t n = set.grid_size();
    ensure_dir(dir / "images");
    if (options.previews)
        ensure_dir(dir / "previews");

    json m = base_manifest("capture", options);
    m["grid_size_px"] = n;
    m["geometry"] = set.geometry ? detail::to_json(*set.geometry) : json(nullptr);
    m["grid"] = set.grid ? detail::to_json(*set.grid) : json(nullptr);
    m["snr_db"] = set.snr_db ? json(*set.snr_db) : json(nullptr);
    m["noise_seed"] = set.seed;
    m["pattern_seed"] = set.pattern_seed;
    json aps = json::array();
    for (const auto& ap : set.apertures)
        aps.push_back(detail::to_json(ap));
    m["apertures"] = aps;
    if (set.multiplex_groups)
        m["multiplex_groups"] = *set.multiplex_groups;
    else
        m["multiplex_groups"] = nullptr;

    json images = json::array();
    json previews = json::array();
    for (std::size_t k = 0; k < set.images.size(); ++k) {
        images.push_back(file_entry(dir, "images/" + indexed_name(k, "f32"), image_bytes(set.images[k])));
        if (options.previews) {
            const std::string rel = "previews/" + indexed_name(k, "png");
            write_png16(dir / rel, to_real(set.images[k]));
            previews.push_back(rel);
        }
    }
    m["images"] = images;
    m["previews"] = previews;
    write_manifest(dir, m);
}

CaptureSet load_capture_set(const fs::path& dir)
{
    const json m = read_manifest(dir);
    return with_manifest_errors(dir, [&] {
        if (m.at("kind").get<std::string>() != "capture")
            throw IoError(dir.string() + " holds an object dataset, not captures");
        const auto n = m.at("grid_size_px").get<std::size_t>();
        CaptureSet set;
        if (!m.at("geometry").is_null())
            set.geometry = detail::geometry_from_json(m.at("geometry"));
        if (!m.at("grid").is_null())
            set.grid = detail::grid_from_json(m.at("grid"));
        if (!m.at("snr_db").is_null())
            set.snr_db = m.at("snr_db").get<double>();
        set.seed = m.at("noise_seed").get<std::uint64_t>();
        set.pattern_seed = m.at("pattern_seed").get<std::uint64_t>();
        for (const auto& a : m.at("apertures"))
            set.apertures.push_back(detail::aperture_from_json(a));
        if (!m.at("multiplex_groups").is_null())
            set.multiplex_groups = m.at("multiplex_groups").get<MultiplexGroups>();
        for (const auto& entry : m.at("images")) {
            const std::string bytes = verified_file(dir, entry);
            set.images.push_back(image_from_bytes<float>(bytes, n, entry.at("file").get<std::string>()));
        }
        try {
            set.validate();
        } catch (const Error& e) {
            throw IoError(dir.string() + ": inconsistent dataset (" + e.what() + ")");
        }
        return set;
    });
}

void save_object(const fs::path& dir, const ObjectField& object, const std::optional<ResolutionChartSpec>& chart,
                 const DatasetOptions& options)
{
    const std::size_t n = object.field.side();
    ensure_dir(dir);
    json m = base_manifest("object", options);
    m["grid_size_px"] = n;
    m["provenance"] = object.provenance;
    m["phase_model"] = to_string(object.phase_model);
    m["phase_seed"] = object.seed;
    m["chart"] = chart ? detail::to_json(*chart) : json(nullptr);

    RealImage re(n, n), im(n, n);
    for (std::size_t i = 0; i < re.size(); ++i) {
        re[i] = object.field.data()[i].real();
        im[i] = object.field.data()[i].imag();
    }
    m["real"] = file_entry(dir, "object_re.f64", image_bytes(re));
    m["imag"] = file_entry(dir, "object_im.f64", image_bytes(im));
    if (options.previews) {
        write_png16(dir / "object_amplitude.png", object.field.magnitude(), 0.0, 1.0);
        m["previews"] = json::array({"object_amplitude.png"});
    } else {
        m["previews"] = json::array();
    }
    write_manifest(dir, m);
}

LoadedObject load_object(const fs::path& dir)
{
    const json m = read_manifest(dir);
    return with_manifest_errors(dir, [&] {
        if (m.at("kind").get<std::string>() != "object")
            throw IoError(dir.string() + " holds a capture dataset, not an object");
        const auto n = m.at("grid_size_px").get<std::size_t>();
        const auto re = image_from_bytes<double>(verified_file(dir, m.at("real")), n, "object_re.f64");
        const auto im = image_from_bytes<double>(verified_file(dir, m.at("imag")), n, "object_im.f64");
        LoadedObject out;
        out.object.field = ComplexField(n, Domain::object_plane);
        for (std::size_t i = 0; i < re.size(); ++i)
            out.object.field.data()[i] = {re[i], im[i]};
        out.object.provenance = m.at("provenance").get<std::string>();
        out.object.phase_model = detail::parse_phase_model(m.at("phase_model").get<std::string>());
        out.object.seed = m.at("phase_seed").get<std::uint64_t>();
        if (!m.at("chart").is_null()) {
            out.chart = detail::chart_from_json(m.at("chart"));
            out.object.groups = chart_layout(*out.chart);
        }
        return out;
    });
}

std::string dataset_kind(const fs::path& dir)
{
    const json m = read_manifest(dir);
    return with_manifest_errors(dir, [&] { return m.at("kind").get<std::string>(); });
}

namespace {

std::string fmt(double v, int digits = 4)
{
    std::ostringstream ss;
    ss.precision(digits);
    ss << v;
    return ss.str();
}

} // namespace

std::string describe_dataset(const fs::path& dir)
{
    std::ostringstream out;
    const std::string kind = dataset_kind(dir);
    out << "dataset: " << dir.string() << "\n";
    if (kind == "object") {
        const auto loaded = load_object(dir);
        out << "kind: object\n";
        out << "grid: " << loaded.object.field.side() << " x " << loaded.object.field.side() << "\n";
        out << "provenance: " << loaded.object.provenance << "\n";
        out << "phase model: " << to_string(loaded.object.phase_model) << "\n";
        if (loaded.chart)
            out << "chart groups: " << loaded.chart->group_widths.size() << " (widths "
                << loaded.chart->group_widths.front() << " .. " << loaded.chart->group_widths.back() << " px)\n";
        return out.str();
    }

    const CaptureSet set = load_capture_set(dir);
    const std::size_t n = set.grid_size();
    out << "kind: " << (set.multiplexed() ? "multiplexed capture" : "capture") << "\n";
    out << "images: " << set.images.size() << " (" << n << " x " << n << ")\n";
    out << "apertures: " << set.apertures.size() << "\n";
    if (set.grid) {
        const auto& g = *set.grid;
        out << "grid: " << g.count << " x " << g.count << ", step " << fmt(g.step) << " samples, diameter "
            << fmt(g.diameter) << " samples\n";
        out << "overlap: " << fmt(g.nominal_overlap_pct) << "% nominal, " << fmt(100.0 * g.overlap) << "% realized\n";
        char sar[64];
        std::snprintf(sar, sizeof sar, "SAR: %.1f (%.4f realized)\n", g.sar, g.sar);
        out << sar;
    }
    if (set.snr_db)
        out << "noise: " << fmt(*set.snr_db) << " dB SNR, seed " << set.seed << "\n";
    else
        out << "noise: none\n";
    if (set.multiplexed())
        out << "multiplex groups: " << set.multiplex_groups->size() << ", pattern seed " << set.pattern_seed << "\n";
    if (set.geometry) {
        const auto& g = *set.geometry;
        out << "geometry: lambda " << fmt(g.wavelength * 1e9) << " nm, z " << fmt(g.object_distance) << " m, f "
            << fmt(g.focal_length * 1e3) << " mm, d " << fmt(g.aperture_diameter * 1e3) << " mm, L "
            << fmt(g.object_extent * 1e3) << " mm, pitch " << fmt(g.pixel_pitch * 1e6) << " um\n";
        out << "aperture: " << fmt(aperture_samples(g)) << " Fourier samples\n";
    }
    return out.str();
}

} // namespace macrofp
