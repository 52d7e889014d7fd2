#include "macrofp/capture.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "seed.hpp"

namespace macrofp {

// --- Aperture grids --------------------------------------------------------

double ApertureGrid::overlap() const { return diameter > 0.0 ? 1.0 - step / diameter : 0.0; }

double ApertureGrid::sar() const
{
    return diameter > 0.0 ? (diameter + (count - 1) * step) / diameter : 0.0;
}

std::size_t ApertureGrid::center_index() const
{
    const auto c = static_cast<std::size_t>(count / 2);
    return c * static_cast<std::size_t>(count) + c;
}

ApertureGrid plan_grid_unbounded(double overlap_pct, int count, double diameter)
{
    if (!(overlap_pct >= 0.0 && overlap_pct < 100.0))
        throw GeometryError("overlap must lie in [0, 100) percent");
    if (count < 1)
        throw GeometryError("aperture grid needs at least one aperture per side");
    if (!(diameter > 0.0) || !std::isfinite(diameter))
        throw GeometryError("aperture diameter must be positive");

    ApertureGrid grid;
    grid.count = count;
    grid.diameter = diameter;
    grid.nominal_overlap_pct = overlap_pct;
    grid.step = std::round((1.0 - overlap_pct / 100.0) * diameter);
    const double half = (count - 1) / 2.0;
    grid.apertures.reserve(static_cast<std::size_t>(count) * static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j)
        for (int i = 0; i < count; ++i)
            grid.apertures.push_back({(i - half) * grid.step, (j - half) * grid.step, diameter});
    return grid;
}

ApertureGrid plan_grid(double overlap_pct, int count, double diameter, std::size_t grid_size)
{
    ApertureGrid grid = plan_grid_unbounded(overlap_pct, count, diameter);
    for (const auto& ap : grid.apertures)
        if (!aperture_fits(ap, grid_size))
            throw GeometryError(std::to_string(count) + "x" + std::to_string(count) + " grid with step " +
                                std::to_string(grid.step) + " and diameter " + std::to_string(diameter) +
                                " exceeds the " + std::to_string(grid_size) + "-sample Fourier plane");
    return grid;
}

int count_for_sar(double overlap_pct, double sar_target)
{
    if (!(overlap_pct >= 0.0 && overlap_pct < 100.0))
        throw GeometryError("overlap must lie in [0, 100) percent");
    if (!(sar_target >= 1.0))
        throw GeometryError("SAR target must be at least 1");
    const double ratio = 1.0 - overlap_pct / 100.0;
    const auto nominal = [ratio](int count) { return 1.0 + (count - 1) * ratio; };
    const double exact = 1.0 + (sar_target - 1.0) / ratio;
    int lo = static_cast<int>(std::floor(exact));
    if (lo % 2 == 0)
        --lo;
    lo = std::max(lo, 1);
    const int hi = lo + 2;
    return std::abs(nominal(hi) - sar_target) < std::abs(nominal(lo) - sar_target) ? hi : lo;
}

GridSummary GridSummary::of(const ApertureGrid& grid)
{
    return {grid.count, grid.step, grid.diameter, grid.nominal_overlap_pct, grid.overlap(), grid.sar()};
}

// --- CaptureSet ------------------------------------------------------------

std::size_t CaptureSet::grid_size() const
{
    if (images.empty())
        throw InputError("capture set is empty");
    return images.front().width();
}

void CaptureSet::validate() const
{
    if (images.empty())
        throw InputError("capture set has no images");
    const std::size_t n = images.front().width();
    for (const auto& img : images)
        if (img.width() != n || img.height() != n)
            throw DimensionError("capture images must share one square size");
    for (const auto& ap : apertures)
        check_aperture(ap, n);
    if (multiplex_groups) {
        if (multiplex_groups->size() != images.size())
            throw InputError("multiplexed set needs one group per image");
        for (const auto& group : *multiplex_groups) {
            if (group.empty())
                throw InputError("multiplex group is empty");
            for (auto i : group)
                if (i >= apertures.size())
                    throw InputError("multiplex group references an unknown aperture");
        }
    } else if (images.size() != apertures.size()) {
        throw InputError("sequential set needs one aperture per image");
    }
}

// --- Capture ---------------------------------------------------------------

namespace {

ComplexField spectrum_of(const ObjectField& object)
{
    if (object.field.domain() != Domain::object_plane)
        throw InputError("capture expects an object-plane field");
    return forward_transform(object.field);
}

RealImage band_limited_intensity(const ComplexField& spectrum, const ApertureSpec& aperture)
{
    return propagate_to_sensor(apply_aperture(spectrum, aperture)).intensity();
}

} // namespace

CaptureSet capture(const ObjectField& object, const std::vector<ApertureSpec>& apertures,
                   std::optional<OpticalGeometry> geometry)
{
    const ComplexField spectrum = spectrum_of(object);
    const std::size_t n = spectrum.side();
    if (geometry && geometry->grid_size != n)
        throw DimensionError("object grid does not match the geometry's Fourier grid");
    for (const auto& ap : apertures)
        check_aperture(ap, n);

    CaptureSet set;
    set.apertures = apertures;
    set.geometry = geometry;
    set.images.reserve(apertures.size());
    for (const auto& ap : apertures)
        set.images.push_back(to_float(band_limited_intensity(spectrum, ap)));
    return set;
}

CaptureSet capture(const ObjectField& object, const ApertureGrid& grid, std::optional<OpticalGeometry> geometry)
{
    CaptureSet set = capture(object, grid.apertures, geometry);
    set.grid = GridSummary::of(grid);
    return set;
}

// --- Noise -----------------------------------------------------------------

double noise_sigma(const FloatImage& image, double snr_db)
{
    if (image.empty())
        return 0.0;
    double power = 0.0;
    for (float v : image.pixels())
        power += static_cast<double>(v) * static_cast<double>(v);
    power /= static_cast<double>(image.size());
    return std::sqrt(power * std::pow(10.0, -snr_db / 10.0));
}

std::uint64_t image_noise_seed(std::uint64_t seed, std::size_t index)
{
    return detail::derive_seed(seed, index);
}

std::vector<double> noise_realization(std::size_t count, double sigma, std::uint64_t seed)
{
    std::vector<double> out(count);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : out)
        v = sigma * normal(rng);
    return out;
}

CaptureSet add_noise(CaptureSet set, double snr_db, std::uint64_t seed)
{
    if (std::isnan(snr_db))
        throw InputError("SNR must not be NaN");
    if (std::isinf(snr_db) && snr_db > 0.0)
        return set;
    if (std::isinf(snr_db))
        throw InputError("SNR of -inf is not meaningful");

    for (std::size_t k = 0; k < set.images.size(); ++k) {
        auto& img = set.images[k];
        const double sigma = noise_sigma(img, snr_db);
        const auto noise = noise_realization(img.size(), sigma, image_noise_seed(seed, k));
        for (std::size_t i = 0; i < img.size(); ++i)
            img[i] = static_cast<float>(std::max(0.0, static_cast<double>(img[i]) + noise[i]));
    }
    set.snr_db = snr_db;
    set.seed = seed;
    return set;
}

// --- Multiplexed illumination ----------------------------------------------

std::vector<SourceOffset> source_lattice(int count, double step)
{
    if (count < 1)
        throw GeometryError("source lattice needs at least one source per side");
    std::vector<SourceOffset> sources;
    const double half = (count - 1) / 2.0;
    for (int j = 0; j < count; ++j)
        for (int i = 0; i < count; ++i)
            sources.push_back({(i - half) * step, (j - half) * step});
    return sources;
}

std::vector<std::vector<std::size_t>> random_patterns(std::size_t source_count, int active, int patterns,
                                                      std::uint64_t seed)
{
    if (active < 1 || static_cast<std::size_t>(active) > source_count)
        throw InputError("active source count must lie in [1, number of sources]");
    if (patterns < 1)
        throw InputError("need at least one illumination pattern");
    std::vector<std::vector<std::size_t>> out;
    for (int t = 0; t < patterns; ++t) {
        std::mt19937_64 rng(detail::derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> pool(source_count);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (int k = 0; k < active; ++k) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), source_count - 1);
            std::swap(pool[static_cast<std::size_t>(k)], pool[pick(rng)]);
        }
        pool.resize(static_cast<std::size_t>(active));
        out.push_back(std::move(pool));
    }
    return out;
}

CaptureSet capture_multiplexed(const ObjectField& object, const ApertureGrid& cameras,
                               const std::vector<SourceOffset>& sources,
                               const std::vector<std::vector<std::size_t>>& patterns, std::uint64_t seed,
                               std::optional<OpticalGeometry> geometry)
{
    if (patterns.empty())
        throw InputError("need at least one illumination pattern");
    const ComplexField spectrum = spectrum_of(object);
    const std::size_t n = spectrum.side();

    CaptureSet set;
    set.geometry = geometry;
    set.pattern_seed = seed;
    set.multiplex_groups.emplace();

    // Effective apertures are numbered in order of first use.
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> index_of;
    const auto aperture_id = [&](std::size_t p, std::size_t q) {
        const auto key = std::make_pair(p, q);
        if (auto it = index_of.find(key); it != index_of.end())
            return it->second;
        const auto& cam = cameras.apertures[p];
        ApertureSpec ap{cam.cx + sources[q].dx, cam.cy + sources[q].dy, cam.diameter};
        check_aperture(ap, n);
        const std::size_t id = set.apertures.size();
        set.apertures.push_back(ap);
        index_of.emplace(key, id);
        return id;
    };

    for (const auto& pattern : patterns) {
        if (pattern.empty())
            throw InputError("illumination pattern has no active source");
        for (std::size_t p = 0; p < cameras.apertures.size(); ++p) {
            std::vector<std::size_t> group;
            RealImage sum(n, n, 0.0);
            for (auto q : pattern) {
                if (q >= sources.size())
                    throw InputError("pattern references an unknown source");
                const std::size_t id = aperture_id(p, q);
                group.push_back(id);
                const RealImage img = band_limited_intensity(spectrum, set.apertures[id]);
                for (std::size_t i = 0; i < sum.size(); ++i)
                    sum[i] += img[i];
            }
            set.images.push_back(to_float(sum));
            set.multiplex_groups->push_back(std::move(group));
        }
    }
    return set;
}

} // namespace macrofp
