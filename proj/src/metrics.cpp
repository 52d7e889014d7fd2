#include "macrofp/metrics.hpp"

#include <cmath>

namespace macrofp {

namespace {

double masked_mean(const RealImage& intensity, std::span<const std::size_t> mask, const char* name)
{
    if (mask.empty())
        throw InputError(std::string("contrast: ") + name + " mask is empty");
    double sum = 0.0;
    for (auto i : mask) {
        if (i >= intensity.size())
            throw InputError(std::string("contrast: ") + name + " mask index outside the image");
        sum += intensity[i];
    }
    return sum / static_cast<double>(mask.size());
}

} // namespace

double contrast(const RealImage& intensity, std::span<const std::size_t> white,
                std::span<const std::size_t> black)
{
    const double w = masked_mean(intensity, white, "white");
    const double b = masked_mean(intensity, black, "black");
    const double sum = w + b;
    if (sum == 0.0)
        return 0.0;
    return (w - b) / sum;
}

std::vector<ContrastRecord> group_contrasts(const RealImage& intensity, const std::vector<BarGroup>& groups)
{
    std::vector<ContrastRecord> out;
    out.reserve(groups.size());
    for (const auto& g : groups)
        out.push_back({g.bar_width, g.line_pairs_per_pixel(), contrast(intensity, g.white, g.black)});
    return out;
}

std::optional<int> mtf20_limit(const std::vector<ContrastRecord>& records)
{
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].bar_width >= records[i - 1].bar_width)
            throw InputError("mtf20_limit needs records sorted by decreasing bar width");
    std::optional<int> limit;
    for (const auto& r : records) {
        // Slack for contrasts that equal the threshold up to rounding.
        if (!(r.contrast >= mtf20_threshold - 1e-12))
            break;
        limit = r.bar_width;
    }
    return limit;
}

RmseResult intensity_rmse(const RealImage& recovered, const RealImage& truth)
{
    if (recovered.width() != truth.width() || recovered.height() != truth.height())
        throw InputError("intensity_rmse: image sizes differ");
    if (truth.empty())
        throw InputError("intensity_rmse: images are empty");
    double rt = 0.0;
    double rr = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        rt += recovered[i] * truth[i];
        rr += recovered[i] * recovered[i];
    }
    RmseResult out;
    out.alpha = rr > 0.0 ? rt / rr : 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = out.alpha * recovered[i] - truth[i];
        err += d * d;
    }
    out.rmse = std::sqrt(err / static_cast<double>(truth.size()));
    return out;
}

DiffractionBlur diffraction_calc(const OpticalGeometry& geometry)
{
    geometry.validate();
    const double lambda_over_d = geometry.wavelength / geometry.aperture_diameter;
    DiffractionBlur out;
    out.object_blur = lambda_over_d * geometry.object_distance;
    out.rayleigh_radius = 1.22 * lambda_over_d * geometry.focal_length;
    out.sensor_spot = 2.0 * out.rayleigh_radius;
    return out;
}

RealImage capture_in_object_frame(const FloatImage& captured)
{
    return parity_flip(to_real(captured));
}

} // namespace macrofp
