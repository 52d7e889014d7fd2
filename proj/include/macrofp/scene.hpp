#pragma once

// Ground-truth objects: bar-group resolution charts and amplitude objects
// built from grayscale images, with optional diffuse (random) phase.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "macrofp/field.hpp"

namespace macrofp {

enum class BarOrientation
{
    both,
    vertical,   // bars run along y, the pattern varies along x
    horizontal, // bars run along x
};

/// Layout of a line-pair chart. Every group is a square block of
/// `bars_per_group` alternating bars starting and ending on white for odd
/// counts; groups are packed on shelves in the given order.
struct ResolutionChartSpec
{
    std::size_t grid_size = 512;
    std::vector<int> group_widths; // bar widths in pixels, strictly decreasing
    int bars_per_group = 5;        // white, black, white, ... along the pattern axis
    BarOrientation orientation = BarOrientation::both;
    double foreground = 1.0;
    double background = 0.0;
    std::size_t margin = 4; // empty border around the layout, in pixels

    /// 512 px, widths 20 down to 1.
    static ResolutionChartSpec paper();
    /// widths from `coarsest` down to 1 on an n-pixel grid.
    static ResolutionChartSpec descending(std::size_t n, int coarsest);

    friend bool operator==(const ResolutionChartSpec&, const ResolutionChartSpec&) = default;
};

/// One bar group with its pixel sets. Indices are y * n + x.
struct BarGroup
{
    int bar_width = 0;
    std::size_t x0 = 0, y0 = 0;         // top-left corner of the group footprint
    std::size_t width = 0, height = 0;  // footprint size
    std::vector<std::size_t> white;
    std::vector<std::size_t> black;

    double line_pairs_per_pixel() const { return 0.5 / bar_width; }
};

/// Computes the group placements and masks; throws LayoutError when the
/// groups do not fit on the grid.
std::vector<BarGroup> chart_layout(const ResolutionChartSpec& spec);

enum class PhaseModel
{
    flat,
    random_uniform, // i.i.d. uniform on [0, 2 pi)
};

const char* to_string(PhaseModel model);

struct ObjectField
{
    ComplexField field;
    PhaseModel phase_model = PhaseModel::flat;
    std::string provenance;
    std::uint64_t seed = 0;
    std::vector<BarGroup> groups; // empty for image objects
};

ObjectField make_chart(const ResolutionChartSpec& spec);

/// Amplitude object from a square grayscale image. Pixels are divided by the
/// image maximum; a random phase model draws one phase per pixel from `seed`.
ObjectField make_object_from_image(const RealImage& pixels, PhaseModel phase_model,
                                   std::uint64_t seed = 0, std::string provenance = {});

/// Replaces the phase of an existing object with the given model, keeping the
/// amplitude.
ObjectField with_phase_model(const ObjectField& object, PhaseModel phase_model, std::uint64_t seed);

} // namespace macrofp
