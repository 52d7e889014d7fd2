#pragma once

// Forward model: band-pass the object spectrum through a set of circular
// apertures and record |field|^2 on the sensor, optionally with additive
// Gaussian noise or multiplexed (incoherently summed) illumination.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "macrofp/field.hpp"
#include "macrofp/scene.hpp"

namespace macrofp {

/// Square lattice of equal apertures centered on DC.
struct ApertureGrid
{
    int count = 0;             // apertures per side
    double step = 0.0;         // center spacing, whole Fourier samples
    double diameter = 0.0;     // Fourier samples
    double nominal_overlap_pct = 0.0;
    std::vector<ApertureSpec> apertures; // row-major, y outer

    /// Realized overlap fraction 1 - step / diameter.
    double overlap() const;
    /// Synthetic aperture ratio (diameter + (count - 1) step) / diameter.
    double sar() const;
    std::size_t center_index() const;
};

/// Lattice with step round((1 - overlap_pct / 100) * diameter). Throws
/// GeometryError when any aperture leaves the n-sample Fourier grid.
ApertureGrid plan_grid(double overlap_pct, int count, double diameter, std::size_t grid_size);

/// Grid without a bounds check, for SAR bookkeeping on arbitrary layouts.
ApertureGrid plan_grid_unbounded(double overlap_pct, int count, double diameter);

/// Odd per-side count whose nominal SAR, 1 + (count - 1)(1 - overlap), is
/// closest to `sar_target`; ties go to the smaller grid.
int count_for_sar(double overlap_pct, double sar_target);

/// Metadata of the lattice a capture set came from.
struct GridSummary
{
    int count = 0;
    double step = 0.0;
    double diameter = 0.0;
    double nominal_overlap_pct = 0.0;
    double overlap = 0.0;
    double sar = 0.0;

    static GridSummary of(const ApertureGrid& grid);
    friend bool operator==(const GridSummary&, const GridSummary&) = default;
};

using MultiplexGroups = std::vector<std::vector<std::size_t>>;

struct CaptureSet
{
    std::vector<FloatImage> images;
    std::vector<ApertureSpec> apertures;
    std::optional<double> snr_db; // set once noise has been added
    std::uint64_t seed = 0;         // noise seed
    std::uint64_t pattern_seed = 0; // illumination pattern seed of multiplexed sets
    std::optional<OpticalGeometry> geometry;
    std::optional<GridSummary> grid;
    /// Image k sums the apertures listed in multiplex_groups[k].
    std::optional<MultiplexGroups> multiplex_groups;

    bool multiplexed() const noexcept { return multiplex_groups.has_value(); }
    std::size_t grid_size() const;
    /// Throws InputError when images, apertures and groups disagree.
    void validate() const;
};

/// Noiseless sequential capture, I_i = |F R_i F o|^2, in aperture order.
CaptureSet capture(const ObjectField& object, const ApertureGrid& grid,
                   std::optional<OpticalGeometry> geometry = std::nullopt);

/// Noiseless capture through an arbitrary aperture list.
CaptureSet capture(const ObjectField& object, const std::vector<ApertureSpec>& apertures,
                   std::optional<OpticalGeometry> geometry = std::nullopt);

/// Standard deviation giving mean(I^2) / sigma^2 = 10^(snr_db / 10).
double noise_sigma(const FloatImage& image, double snr_db);

/// Zero-mean Gaussian samples used by add_noise for one image.
std::vector<double> noise_realization(std::size_t count, double sigma, std::uint64_t seed);

/// Per-image seed derived from the set seed.
std::uint64_t image_noise_seed(std::uint64_t seed, std::size_t index);

/// Adds white Gaussian noise at the given SNR to every image and clamps at 0.
/// A non-finite positive snr_db disables noise and returns the set unchanged.
CaptureSet add_noise(CaptureSet set, double snr_db, std::uint64_t seed);

/// Offset of a source's spectrum copy in the Fourier plane.
struct SourceOffset
{
    double dx = 0.0;
    double dy = 0.0;
};

/// count x count centered source lattice with the given step in Fourier samples.
std::vector<SourceOffset> source_lattice(int count, double step);

/// T patterns of `active` distinct sources drawn uniformly from `source_count`.
/// Pattern t depends only on (seed, t), so a longer sequence extends a shorter one.
std::vector<std::vector<std::size_t>> random_patterns(std::size_t source_count, int active, int patterns,
                                                      std::uint64_t seed);

/// One image per (camera, pattern): I_{p,t} = sum over active sources q of
/// |F R_{c_p + s_q} F o|^2. Images are ordered pattern-major.
CaptureSet capture_multiplexed(const ObjectField& object, const ApertureGrid& cameras,
                               const std::vector<SourceOffset>& sources,
                               const std::vector<std::vector<std::size_t>>& patterns, std::uint64_t seed,
                               std::optional<OpticalGeometry> geometry = std::nullopt);

} // namespace macrofp
