#include "macrofp/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fft.hpp"

namespace macrofp {

using detail::wrap;

RealImage to_real(const FloatImage& image)
{
    RealImage out(image.width(), image.height());
    std::copy(image.pixels().begin(), image.pixels().end(), out.pixels().begin());
    return out;
}

FloatImage to_float(const RealImage& image)
{
    FloatImage out(image.width(), image.height());
    std::transform(image.pixels().begin(), image.pixels().end(), out.pixels().begin(),
                   [](double v) { return static_cast<float>(v); });
    return out;
}

const char* to_string(Domain domain)
{
    switch (domain) {
    case Domain::object_plane:
        return "object-plane";
    case Domain::fourier_plane:
        return "fourier-plane";
    case Domain::sensor_plane:
        return "sensor-plane";
    }
    return "unknown";
}

// --- OpticalGeometry -------------------------------------------------------

void OpticalGeometry::validate() const
{
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(wavelength))
        throw GeometryError("wavelength must be positive");
    if (!positive(object_distance))
        throw GeometryError("object distance must be positive");
    if (!positive(focal_length))
        throw GeometryError("focal length must be positive");
    if (!positive(aperture_diameter))
        throw GeometryError("aperture diameter must be positive");
    if (!positive(object_extent))
        throw GeometryError("object extent must be positive");
    if (!positive(pixel_pitch))
        throw GeometryError("pixel pitch must be positive");
    if (grid_size == 0)
        throw GeometryError("grid size must be positive");
}

double OpticalGeometry::sensor_fill_ratio() const
{
    return (focal_length / object_distance) * object_extent /
           (static_cast<double>(grid_size) * pixel_pitch);
}

bool OpticalGeometry::is_consistent(double tolerance) const
{
    return std::abs(sensor_fill_ratio() - 1.0) <= tolerance;
}

OpticalGeometry OpticalGeometry::paper_chart()
{
    return OpticalGeometry{};
}

OpticalGeometry OpticalGeometry::desk_chart()
{
    OpticalGeometry g;
    g.object_extent = 32e-3;
    g.grid_size = 256;
    g.aperture_diameter = 27.5e-3;
    return g;
}

double aperture_samples(const OpticalGeometry& geometry)
{
    geometry.validate();
    return geometry.aperture_diameter * geometry.object_extent /
           (geometry.wavelength * geometry.object_distance);
}

// --- ComplexField ----------------------------------------------------------

ComplexField::ComplexField(std::size_t n, Domain domain)
    : width_(n), height_(n), data_(n * n), domain_(domain)
{
}

ComplexField::ComplexField(std::size_t width, std::size_t height, std::vector<value_type> data,
                           Domain domain)
    : width_(width), height_(height), data_(std::move(data)), domain_(domain)
{
    if (data_.size() != width_ * height_)
        throw DimensionError("field sample count does not match its dimensions");
}

ComplexField ComplexField::from_real(const RealImage& values, Domain domain)
{
    std::vector<value_type> data(values.size());
    std::copy(values.pixels().begin(), values.pixels().end(), data.begin());
    return ComplexField(values.width(), values.height(), std::move(data), domain);
}

std::size_t ComplexField::side() const
{
    if (width_ != height_)
        throw DimensionError("field is not square");
    if (width_ == 0)
        throw DimensionError("field is empty");
    return width_;
}

ComplexField ComplexField::with_domain(Domain domain) const
{
    ComplexField out = *this;
    out.domain_ = domain;
    return out;
}

double ComplexField::squared_norm() const
{
    return std::accumulate(data_.begin(), data_.end(), 0.0,
                           [](double acc, const value_type& v) { return acc + std::norm(v); });
}

double ComplexField::norm() const { return std::sqrt(squared_norm()); }

RealImage ComplexField::intensity() const
{
    RealImage out(width_, height_);
    for (std::size_t i = 0; i < data_.size(); ++i)
        out[i] = std::norm(data_[i]);
    return out;
}

RealImage ComplexField::magnitude() const
{
    RealImage out(width_, height_);
    for (std::size_t i = 0; i < data_.size(); ++i)
        out[i] = std::abs(data_[i]);
    return out;
}

RealImage ComplexField::phase() const
{
    RealImage out(width_, height_);
    for (std::size_t i = 0; i < data_.size(); ++i)
        out[i] = std::arg(data_[i]);
    return out;
}

// --- Transforms ------------------------------------------------------------

namespace {

std::size_t checked_side(const ComplexField& field)
{
    if (field.width() == 0 || field.height() == 0)
        throw DimensionError("cannot transform an empty field");
    if (field.width() != field.height())
        throw DimensionError("transforms require a square grid");
    return field.width();
}

// Centered unitary DFT: ifftshift, FFT, fftshift, scale by 1/n.
ComplexField centered_dft(const ComplexField& field, detail::Direction direction, Domain result)
{
    const std::size_t n = checked_side(field);
    const auto c = grid_center(n);

    detail::AlignedBuffer buffer(n * n);
    for (std::size_t y = 0; y < n; ++y) {
        const std::size_t uy = wrap(static_cast<std::ptrdiff_t>(y) - c, n);
        for (std::size_t x = 0; x < n; ++x)
            buffer[uy * n + wrap(static_cast<std::ptrdiff_t>(x) - c, n)] = field(x, y);
    }

    detail::dft2d(buffer.data(), n, direction);

    const double scale = 1.0 / static_cast<double>(n);
    ComplexField out(n, result);
    for (std::size_t y = 0; y < n; ++y) {
        const std::size_t uy = wrap(static_cast<std::ptrdiff_t>(y) - c, n);
        for (std::size_t x = 0; x < n; ++x)
            out(x, y) = buffer[uy * n + wrap(static_cast<std::ptrdiff_t>(x) - c, n)] * scale;
    }
    return out;
}

void require_domain(const ComplexField& field, std::initializer_list<Domain> allowed, const char* op)
{
    if (std::find(allowed.begin(), allowed.end(), field.domain()) == allowed.end())
        throw InputError(std::string(op) + ": unexpected " + to_string(field.domain()) + " input");
}

} // namespace

ComplexField forward_transform(const ComplexField& field)
{
    require_domain(field, {Domain::object_plane, Domain::sensor_plane}, "forward_transform");
    return centered_dft(field, detail::Direction::forward, Domain::fourier_plane);
}

ComplexField inverse_transform(const ComplexField& field)
{
    require_domain(field, {Domain::fourier_plane}, "inverse_transform");
    return centered_dft(field, detail::Direction::backward, Domain::object_plane);
}

ComplexField propagate_to_sensor(const ComplexField& fourier)
{
    require_domain(fourier, {Domain::fourier_plane}, "propagate_to_sensor");
    return centered_dft(fourier, detail::Direction::forward, Domain::sensor_plane);
}

ComplexField propagate_from_sensor(const ComplexField& sensor)
{
    require_domain(sensor, {Domain::sensor_plane}, "propagate_from_sensor");
    return centered_dft(sensor, detail::Direction::backward, Domain::fourier_plane);
}

namespace {

template <class Grid>
Grid flipped(const Grid& in, std::size_t n)
{
    Grid out = in;
    const auto twice_c = 2 * grid_center(n);
    for (std::size_t y = 0; y < n; ++y) {
        const std::size_t fy = wrap(twice_c - static_cast<std::ptrdiff_t>(y), n);
        for (std::size_t x = 0; x < n; ++x)
            out(wrap(twice_c - static_cast<std::ptrdiff_t>(x), n), fy) = in(x, y);
    }
    return out;
}

} // namespace

ComplexField parity_flip(const ComplexField& field)
{
    return flipped(field, checked_side(field));
}

RealImage parity_flip(const RealImage& image)
{
    if (image.width() != image.height() || image.empty())
        throw DimensionError("parity_flip requires a non-empty square image");
    return flipped(image, image.width());
}

// --- Apertures -------------------------------------------------------------

std::ptrdiff_t ApertureSpec::center_x() const { return static_cast<std::ptrdiff_t>(std::lround(cx)); }

std::ptrdiff_t ApertureSpec::center_y() const { return static_cast<std::ptrdiff_t>(std::lround(cy)); }

std::ptrdiff_t ApertureSpec::reach() const
{
    if (!(diameter > 0.0))
        return -1;
    auto r = static_cast<std::ptrdiff_t>(std::floor(diameter / 2.0));
    while (contains_offset(r + 1, 0))
        ++r;
    while (r >= 0 && !contains_offset(r, 0))
        --r;
    return r;
}

bool ApertureSpec::contains_offset(std::ptrdiff_t dx, std::ptrdiff_t dy) const
{
    if (!(diameter > 0.0))
        return false;
    // 4 (dx^2 + dy^2) <= d^2 is the disk test with the radius squared cleared
    // of its factor 1/4, exact for integer offsets.
    const double r2 = static_cast<double>(dx * dx + dy * dy);
    return 4.0 * r2 <= diameter * diameter;
}

bool aperture_fits(const ApertureSpec& aperture, std::size_t n)
{
    const std::ptrdiff_t r = aperture.reach();
    if (r < 0)
        return true;
    const auto c = grid_center(n);
    const auto lo = -c;
    const auto hi = static_cast<std::ptrdiff_t>(n) - 1 - c;
    const auto px = aperture.center_x();
    const auto py = aperture.center_y();
    if (px - r >= lo && px + r <= hi && py - r >= lo && py + r <= hi)
        return true;
    // A disk larger than the whole plane passes every sample unclipped.
    for (auto x : {lo, hi})
        for (auto y : {lo, hi})
            if (!aperture.contains_offset(x - px, y - py))
                return false;
    return true;
}

void check_aperture(const ApertureSpec& aperture, std::size_t n)
{
    if (!aperture_fits(aperture, n))
        throw GeometryError("aperture at (" + std::to_string(aperture.center_x()) + ", " +
                            std::to_string(aperture.center_y()) + ") with diameter " +
                            std::to_string(aperture.diameter) + " extends beyond the " +
                            std::to_string(n) + "-sample Fourier grid");
}

std::vector<MaskRun> aperture_runs(const ApertureSpec& aperture, std::size_t n)
{
    std::vector<MaskRun> runs;
    const std::ptrdiff_t r = aperture.reach();
    if (r < 0)
        return runs;
    const auto c = grid_center(n);
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    const auto px = aperture.center_x();
    const auto py = aperture.center_y();
    const std::ptrdiff_t dy_lo = std::max(-r, -c - py);
    const std::ptrdiff_t dy_hi = std::min(r, last - c - py);
    for (std::ptrdiff_t dy = dy_lo; dy <= dy_hi; ++dy) {
        const std::ptrdiff_t y = py + dy + c;
        const double room = aperture.diameter * aperture.diameter / 4.0 - static_cast<double>(dy * dy);
        auto half = static_cast<std::ptrdiff_t>(std::floor(std::sqrt(std::max(room, 0.0))));
        while (aperture.contains_offset(half + 1, dy))
            ++half;
        while (half >= 0 && !aperture.contains_offset(half, dy))
            --half;
        if (half < 0)
            continue;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(px - half + c, 0);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(px + half + c, last);
        if (x0 <= x1)
            runs.push_back({static_cast<std::size_t>(y), static_cast<std::size_t>(x0),
                            static_cast<std::size_t>(x1 + 1)});
    }
    return runs;
}

Image<std::uint8_t> aperture_mask(const ApertureSpec& aperture, std::size_t n)
{
    check_aperture(aperture, n);
    Image<std::uint8_t> mask(n, n, 0);
    for (const auto& run : aperture_runs(aperture, n))
        for (std::size_t x = run.x_begin; x < run.x_end; ++x)
            mask(x, run.y) = 1;
    return mask;
}

ComplexField apply_aperture(const ComplexField& field, const ApertureSpec& aperture)
{
    require_domain(field, {Domain::fourier_plane}, "apply_aperture");
    const std::size_t n = checked_side(field);
    check_aperture(aperture, n);
    ComplexField out(n, Domain::fourier_plane);
    for (const auto& run : aperture_runs(aperture, n))
        for (std::size_t x = run.x_begin; x < run.x_end; ++x)
            out(x, run.y) = field(x, run.y);
    return out;
}

} // namespace macrofp
