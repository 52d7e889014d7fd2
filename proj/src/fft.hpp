#pragma once

// Thin FFTW wrapper. Plans are created once per size with FFTW_ESTIMATE, which
// never inspects the data, so results are reproducible run to run.

#include <complex>
#include <cstddef>
#include <new>
#include <vector>

namespace macrofp::detail {

template <class T, std::size_t Alignment = 64>
struct AlignedAllocator
{
    using value_type = T;

    AlignedAllocator() noexcept = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U, Alignment>&) noexcept
    {
    }

    template <class U>
    struct rebind
    {
        using other = AlignedAllocator<U, Alignment>;
    };

    T* allocate(std::size_t n)
    {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{Alignment}));
    }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{Alignment}); }

    friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) noexcept { return true; }
};

using complex_t = std::complex<double>;
using AlignedBuffer = std::vector<complex_t, AlignedAllocator<complex_t>>;

enum class Direction
{
    forward,  // exp(-i ...)
    backward, // exp(+i ...)
};

/// Unnormalized in-place 2D DFT of an aligned n x n row-major buffer.
void dft2d(complex_t* data, std::size_t n, Direction direction);

/// Unnormalized in-place 1D DFTs of `count` consecutive rows of an n x n
/// buffer, starting at the row that begins at `first`.
void dft_rows(complex_t* first, std::size_t n, std::size_t count, Direction direction);

/// Unnormalized in-place 1D DFTs down `count` consecutive columns of an n x n
/// buffer, starting at the column whose top sample is `first`.
void dft_columns(complex_t* first, std::size_t n, std::size_t count, Direction direction);

/// Wraps a signed index into [0, n).
inline std::size_t wrap(std::ptrdiff_t i, std::size_t n) noexcept
{
    const auto m = static_cast<std::ptrdiff_t>(n);
    const std::ptrdiff_t r = i % m;
    return static_cast<std::size_t>(r < 0 ? r + m : r);
}

} // namespace macrofp::detail
