#pragma once

// Image quality measures for chart reconstructions and the diffraction
// calculators used to size experiments.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "macrofp/field.hpp"
#include "macrofp/scene.hpp"

namespace macrofp {

/// Contrast level that marks a bar group as resolved.
inline constexpr double mtf20_threshold = 0.2;

struct ContrastRecord
{
    int bar_width = 0;
    double line_pairs_per_pixel = 0.0;
    double contrast = 0.0;
};

/// (mean(white) - mean(black)) / (mean(white) + mean(black)) over the given
/// pixel indices; 0 when both means vanish. Throws InputError on an empty
/// mask or an index outside the image.
double contrast(const RealImage& intensity, std::span<const std::size_t> white,
                std::span<const std::size_t> black);

/// One record per chart group, in group order.
std::vector<ContrastRecord> group_contrasts(const RealImage& intensity, const std::vector<BarGroup>& groups);

/// Finest bar width reached by walking from the coarsest group while every
/// contrast stays >= 0.2 (to within 1e-12). Empty when the coarsest group already fails.
/// Throws InputError unless records are sorted by strictly decreasing width.
std::optional<int> mtf20_limit(const std::vector<ContrastRecord>& records);

struct RmseResult
{
    double rmse = 0.0;
    double alpha = 0.0; // least-squares brightness factor applied to `recovered`
};

/// RMSE between alpha * recovered and truth, alpha = <rec, truth> / <rec, rec>
/// (0 for an all-zero reconstruction).
RmseResult intensity_rmse(const RealImage& recovered, const RealImage& truth);

struct DiffractionBlur
{
    double object_blur = 0.0;     // lambda z / d, at the object
    double rayleigh_radius = 0.0; // 1.22 lambda f / d, at the sensor
    double sensor_spot = 0.0;     // Airy disk diameter, 2.44 lambda f / d
};

DiffractionBlur diffraction_calc(const OpticalGeometry& geometry);

/// Captured sensor images are point-reflected relative to the object; this
/// maps one back into object orientation so chart masks apply.
RealImage capture_in_object_frame(const FloatImage& captured);

} // namespace macrofp
