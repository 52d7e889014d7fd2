#pragma once

// Complex fields on square sample grids, centered unitary Fourier transforms
// and binary circular aperture operators.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "macrofp/error.hpp"

namespace macrofp {

/// Row-major real-valued 2D map (intensities, amplitudes, masks).
template <class T>
class Image
{
public:
    using value_type = T;

    Image() = default;
    Image(std::size_t width, std::size_t height, T fill = T{})
        : width_(width), height_(height), pixels_(width * height, fill)
    {
    }
    Image(std::size_t width, std::size_t height, std::vector<T> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels))
    {
        if (pixels_.size() != width_ * height_)
            throw DimensionError("image pixel count does not match its dimensions");
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    T& operator()(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }
    const T& operator()(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
    T& operator[](std::size_t i) { return pixels_[i]; }
    const T& operator[](std::size_t i) const { return pixels_[i]; }

    std::span<T> pixels() noexcept { return pixels_; }
    std::span<const T> pixels() const noexcept { return pixels_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<T> pixels_;
};

using RealImage = Image<double>;
using FloatImage = Image<float>;

RealImage to_real(const FloatImage& image);
FloatImage to_float(const RealImage& image);

/// Which plane a field lives in. The object plane and the sensor plane are
/// both "spatial"; the Fourier plane is the camera's aperture plane.
enum class Domain
{
    object_plane,
    fourier_plane,
    sensor_plane,
};

const char* to_string(Domain domain);

/// Physical imaging configuration. All lengths are in meters.
struct OpticalGeometry
{
    double wavelength = 550e-9;
    double object_distance = 50.0;
    double focal_length = 0.8;
    double aperture_diameter = 18e-3;
    double object_extent = 64e-3;
    double pixel_pitch = 2e-6;
    std::size_t grid_size = 512;

    /// Throws GeometryError unless every length is strictly positive and the
    /// grid is non-empty.
    void validate() const;

    /// Image-side size of the object, f/z * L, divided by the sensor extent
    /// n * pitch. The stock long-range configurations sit at 1.
    double sensor_fill_ratio() const;
    bool is_consistent(double tolerance = 0.01) const;

    /// 512 px chart imaged from 50 m with an 800 mm f/44 lens.
    static OpticalGeometry paper_chart();
    /// Same lens and pixel scale on a 256 px, 32 mm field of view, stopped
    /// to 27.5 mm so the pupil spans 32 Fourier samples.
    static OpticalGeometry desk_chart();

    friend bool operator==(const OpticalGeometry&, const OpticalGeometry&) = default;
};

/// Aperture diameter expressed in Fourier samples, d * L / (lambda * z).
/// Not quantized.
double aperture_samples(const OpticalGeometry& geometry);

/// Complex amplitude on an n x n grid, tagged with the plane it lives in.
class ComplexField
{
public:
    using value_type = std::complex<double>;

    ComplexField() = default;
    ComplexField(std::size_t n, Domain domain);
    ComplexField(std::size_t width, std::size_t height, std::vector<value_type> data, Domain domain);

    static ComplexField from_real(const RealImage& values, Domain domain);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    /// Side length of a square field; throws DimensionError otherwise.
    std::size_t side() const;
    std::size_t samples() const noexcept { return data_.size(); }
    Domain domain() const noexcept { return domain_; }

    value_type& operator()(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
    const value_type& operator()(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }

    std::span<value_type> data() noexcept { return data_; }
    std::span<const value_type> data() const noexcept { return data_; }

    ComplexField with_domain(Domain domain) const;

    double norm() const;
    double squared_norm() const;

    RealImage intensity() const;
    RealImage magnitude() const;
    RealImage phase() const;

    friend bool operator==(const ComplexField&, const ComplexField&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<value_type> data_;
    Domain domain_ = Domain::object_plane;
};

/// Index of the DC sample along one axis of a centered n-point spectrum.
constexpr std::ptrdiff_t grid_center(std::size_t n) noexcept
{
    return static_cast<std::ptrdiff_t>(n / 2);
}

/// Centered (DC at n/2), unitary 2D DFT. Accepts object- or sensor-plane
/// fields and returns a Fourier-plane field.
ComplexField forward_transform(const ComplexField& field);

/// Inverse of forward_transform: Fourier plane to object plane.
ComplexField inverse_transform(const ComplexField& field);

/// Second Fraunhofer propagation, aperture plane to sensor, modelled as a
/// forward DFT. Composing it with forward_transform mirrors the object about
/// the grid center (see parity_flip).
ComplexField propagate_to_sensor(const ComplexField& fourier);

/// Adjoint of propagate_to_sensor: sensor plane back to Fourier plane.
ComplexField propagate_from_sensor(const ComplexField& sensor);

/// Point reflection (x, y) -> (-x, -y) about the grid center, with periodic
/// wrap of the unpaired edge row/column on even grids.
ComplexField parity_flip(const ComplexField& field);
RealImage parity_flip(const RealImage& image);

/// Circular pupil in the Fourier plane. The center is an offset from DC in
/// Fourier samples and is rounded to the nearest sample when rasterized.
struct ApertureSpec
{
    double cx = 0.0;
    double cy = 0.0;
    double diameter = 0.0;

    std::ptrdiff_t center_x() const;
    std::ptrdiff_t center_y() const;
    /// Largest integer offset r with r^2 <= (diameter/2)^2.
    std::ptrdiff_t reach() const;
    /// Rasterization rule: boundary samples belong to the disk; a zero
    /// diameter selects nothing.
    bool contains_offset(std::ptrdiff_t dx, std::ptrdiff_t dy) const;

    friend bool operator==(const ApertureSpec&, const ApertureSpec&) = default;
};

/// True when the rasterized disk lies inside the n x n grid, or covers every
/// sample of it.
bool aperture_fits(const ApertureSpec& aperture, std::size_t n);

/// Throws GeometryError when !aperture_fits.
void check_aperture(const ApertureSpec& aperture, std::size_t n);

/// Binary mask (exactly 0 or 1) of the aperture on an n x n centered grid.
Image<std::uint8_t> aperture_mask(const ApertureSpec& aperture, std::size_t n);

/// Horizontal run of in-aperture samples on one grid row.
struct MaskRun
{
    std::size_t y;
    std::size_t x_begin;
    std::size_t x_end; // exclusive
};

/// Row-run encoding of the rasterized aperture, in grid indices.
std::vector<MaskRun> aperture_runs(const ApertureSpec& aperture, std::size_t n);

/// Multiplies a Fourier-plane field by the aperture's binary mask.
ComplexField apply_aperture(const ComplexField& field, const ApertureSpec& aperture);

} // namespace macrofp
