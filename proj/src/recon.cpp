#include "macrofp/recon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fft.hpp"

namespace macrofp {

using detail::AlignedBuffer;
using detail::complex_t;
using detail::Direction;
using detail::wrap;

const char* to_string(ReconMode mode)
{
    return mode == ReconMode::sequential ? "sequential" : "multiplexed";
}

// --- Building blocks --------------------------------------------------------

ComplexField magnitude_project(const ComplexField& psi, const RealImage& intensity)
{
    if (psi.width() != intensity.width() || psi.height() != intensity.height())
        throw DimensionError("magnitude_project: field and intensity sizes differ");
    ComplexField out = psi;
    auto data = out.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double target = std::sqrt(std::max(intensity[i], 0.0));
        const double mag = std::abs(data[i]);
        data[i] = mag > 0.0 ? data[i] * (target / mag) : complex_t(target, 0.0);
    }
    return out;
}

std::vector<ComplexField> multiplexed_project(const std::vector<ComplexField>& members, const RealImage& intensity)
{
    if (members.empty())
        throw InputError("multiplexed_project needs at least one member field");
    for (const auto& m : members)
        if (m.width() != intensity.width() || m.height() != intensity.height())
            throw DimensionError("multiplexed_project: field and intensity sizes differ");

    const double peak = *std::max_element(intensity.pixels().begin(), intensity.pixels().end());
    const double eps = 1e-12 * std::max(peak, 0.0);
    std::vector<ComplexField> out = members;
    for (std::size_t i = 0; i < intensity.size(); ++i) {
        double total = 0.0;
        for (const auto& m : members)
            total += std::norm(m.data()[i]);
        const double denom = total + eps;
        const double factor = denom > 0.0 ? std::sqrt(std::max(intensity[i], 0.0) / denom) : 0.0;
        for (auto& m : out)
            m.data()[i] *= factor;
    }
    return out;
}

Image<int> coverage_count(const std::vector<ApertureSpec>& apertures, std::size_t n)
{
    Image<int> count(n, n, 0);
    for (const auto& ap : apertures) {
        check_aperture(ap, n);
        for (const auto& run : aperture_runs(ap, n))
            for (std::size_t x = run.x_begin; x < run.x_end; ++x)
                ++count(x, run.y);
    }
    return count;
}

namespace {

/// Aperture of every least-squares term: one per image for sequential sets,
/// one per group member for multiplexed sets.
std::vector<ApertureSpec> term_apertures(const CaptureSet& set)
{
    if (!set.multiplexed())
        return set.apertures;
    std::vector<ApertureSpec> terms;
    for (const auto& group : *set.multiplex_groups)
        for (auto i : group)
            terms.push_back(set.apertures[i]);
    return terms;
}

} // namespace

double default_tau(const CaptureSet& set)
{
    const auto count = coverage_count(term_apertures(set), set.grid_size());
    const int peak = *std::max_element(count.pixels().begin(), count.pixels().end());
    return 1e-6 * peak;
}

ComplexField fourier_update(const std::vector<ComplexField>& projected,
                            const std::vector<ApertureSpec>& term_apertures, double tau)
{
    if (projected.empty())
        throw InputError("fourier_update needs at least one projected field");
    if (projected.size() != term_apertures.size())
        throw InputError("fourier_update needs one aperture per projected field");
    if (!(tau >= 0.0))
        throw InputError("tau must be nonnegative");
    const std::size_t n = projected.front().side();

    ComplexField numerator(n, Domain::fourier_plane);
    for (std::size_t k = 0; k < projected.size(); ++k) {
        if (projected[k].width() != n || projected[k].height() != n)
            throw DimensionError("fourier_update: projected fields differ in size");
        const ComplexField back = propagate_from_sensor(projected[k]);
        for (const auto& run : aperture_runs(term_apertures[k], n))
            for (std::size_t x = run.x_begin; x < run.x_end; ++x)
                numerator(x, run.y) += back(x, run.y);
    }
    const auto count = coverage_count(term_apertures, n);
    ComplexField out(n, Domain::fourier_plane);
    for (std::size_t i = 0; i < out.samples(); ++i) {
        const double denom = count[i] + tau;
        out.data()[i] = denom > 0.0 ? numerator.data()[i] / denom : complex_t{};
    }
    return out;
}

std::vector<ComplexField> sensor_fields(const ComplexField& psi_hat, const std::vector<ApertureSpec>& apertures)
{
    std::vector<ComplexField> out;
    out.reserve(apertures.size());
    for (const auto& ap : apertures)
        out.push_back(propagate_to_sensor(apply_aperture(psi_hat, ap)));
    return out;
}

double ls_objective(const std::vector<ComplexField>& projected, const std::vector<ApertureSpec>& term_apertures,
                    const ComplexField& psi_hat, double tau)
{
    if (projected.size() != term_apertures.size())
        throw InputError("ls_objective needs one aperture per projected field");
    const auto model = sensor_fields(psi_hat, term_apertures);
    double total = tau * psi_hat.squared_norm();
    for (std::size_t k = 0; k < projected.size(); ++k) {
        const auto a = projected[k].data();
        const auto b = model[k].data();
        for (std::size_t i = 0; i < a.size(); ++i)
            total += std::norm(a[i] - b[i]);
    }
    return total;
}

ComplexField initialize(const CaptureSet& set)
{
    set.validate();
    const std::size_t n = set.grid_size();
    RealImage mean(n, n, 0.0);
    double captured = 0.0;
    for (const auto& img : set.images)
        for (std::size_t i = 0; i < img.size(); ++i) {
            mean[i] += img[i];
            captured += img[i];
        }
    for (auto& v : mean.pixels())
        v = std::sqrt(std::max(v / static_cast<double>(set.images.size()), 0.0));

    ComplexField psi0 = propagate_from_sensor(ComplexField::from_real(mean, Domain::sensor_plane));
    if (!(captured > 0.0))
        return ComplexField(n, Domain::fourier_plane);

    double modelled = 0.0;
    for (const auto& ap : term_apertures(set))
        for (const auto& run : aperture_runs(ap, n))
            for (std::size_t x = run.x_begin; x < run.x_end; ++x)
                modelled += std::norm(psi0(x, run.y));
    if (modelled > 0.0) {
        const double scale = std::sqrt(captured / modelled);
        for (auto& v : psi0.data())
            v *= scale;
    }
    return psi0;
}

// --- Iteration engine -------------------------------------------------------
//
// The engine keeps every array in FFT-native (unshifted) order so that a
// centered transform is a plain DFT. Only the columns an aperture touches are
// transformed in the Fourier-side half of each 2D DFT.

namespace {

struct Segment
{
    std::size_t begin; // flat index into the unshifted grid
    std::size_t length;
};

struct ColumnRange
{
    std::size_t first;
    std::size_t count;
};

struct Support
{
    std::vector<Segment> segments;
    std::vector<ColumnRange> columns; // unshifted columns holding any sample
};

Support unshifted_support(const ApertureSpec& aperture, std::size_t n)
{
    const auto c = grid_center(n);
    Support s;
    std::vector<bool> used(n, false);
    for (const auto& run : aperture_runs(aperture, n)) {
        const std::size_t uy = wrap(static_cast<std::ptrdiff_t>(run.y) - c, n);
        std::size_t x = run.x_begin;
        while (x < run.x_end) {
            const std::size_t ux = wrap(static_cast<std::ptrdiff_t>(x) - c, n);
            const std::size_t len = std::min(run.x_end - x, n - ux);
            s.segments.push_back({uy * n + ux, len});
            std::fill_n(used.begin() + static_cast<std::ptrdiff_t>(ux), len, true);
            x += len;
        }
    }
    for (std::size_t x = 0; x < n;) {
        if (!used[x]) {
            ++x;
            continue;
        }
        std::size_t end = x;
        while (end < n && used[end])
            ++end;
        s.columns.push_back({x, end - x});
        x = end;
    }
    return s;
}

std::vector<double> unshifted_amplitude(const FloatImage& image, std::size_t n)
{
    const auto c = grid_center(n);
    std::vector<double> out(n * n);
    for (std::size_t y = 0; y < n; ++y) {
        const std::size_t uy = wrap(static_cast<std::ptrdiff_t>(y) - c, n);
        for (std::size_t x = 0; x < n; ++x)
            out[uy * n + wrap(static_cast<std::ptrdiff_t>(x) - c, n)] =
                std::sqrt(std::max(static_cast<double>(image(x, y)), 0.0));
    }
    return out;
}

class Engine
{
public:
    Engine(const CaptureSet& set, double tau)
        : n_(set.grid_size()), multiplexed_(set.multiplexed()), work_(n_ * n_)
    {
        for (const auto& ap : set.apertures)
            supports_.push_back(unshifted_support(ap, n_));
        amplitudes_.reserve(set.images.size());
        peaks_.reserve(set.images.size());
        for (const auto& img : set.images) {
            amplitudes_.push_back(unshifted_amplitude(img, n_));
            const float peak = *std::max_element(img.pixels().begin(), img.pixels().end());
            peaks_.push_back(std::max(static_cast<double>(peak), 0.0));
        }
        if (multiplexed_) {
            groups_ = *set.multiplex_groups;
        } else {
            groups_.resize(set.images.size());
            for (std::size_t k = 0; k < groups_.size(); ++k)
                groups_[k] = {k};
        }

        std::vector<double> count(n_ * n_, 0.0);
        std::size_t widest = 1;
        for (const auto& group : groups_) {
            widest = std::max(widest, group.size());
            for (auto a : group)
                for (const auto& seg : supports_[a].segments)
                    for (std::size_t i = seg.begin; i < seg.begin + seg.length; ++i)
                        count[i] += 1.0;
        }
        inverse_denominator_.resize(n_ * n_);
        for (std::size_t i = 0; i < count.size(); ++i) {
            const double d = count[i] + tau;
            inverse_denominator_[i] = d > 0.0 ? 1.0 / d : 0.0;
        }
        if (multiplexed_) {
            members_.resize(widest, AlignedBuffer(n_ * n_));
            total_.resize(n_ * n_);
        }
        numerator_.resize(n_ * n_);
    }

    /// One full iteration: new estimate written into `next`.
    void step(const AlignedBuffer& current, AlignedBuffer& next)
    {
        std::fill(numerator_.begin(), numerator_.end(), complex_t{});
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            if (multiplexed_)
                multiplexed_term(current, g);
            else
                sequential_term(current, g);
        }
        for (std::size_t i = 0; i < next.size(); ++i)
            next[i] = numerator_[i] * inverse_denominator_[i];
    }

    std::size_t side() const { return n_; }

private:
    void to_sensor(const AlignedBuffer& psi, const Support& support, AlignedBuffer& buffer) const
    {
        std::fill(buffer.begin(), buffer.end(), complex_t{});
        for (const auto& seg : support.segments)
            std::copy_n(psi.begin() + static_cast<std::ptrdiff_t>(seg.begin), seg.length,
                        buffer.begin() + static_cast<std::ptrdiff_t>(seg.begin));
        for (const auto& range : support.columns)
            detail::dft_columns(buffer.data() + range.first, n_, range.count, Direction::forward);
        detail::dft_rows(buffer.data(), n_, n_, Direction::forward);
    }

    void accumulate_from_sensor(AlignedBuffer& buffer, const Support& support, double scale)
    {
        detail::dft_rows(buffer.data(), n_, n_, Direction::backward);
        for (const auto& range : support.columns)
            detail::dft_columns(buffer.data() + range.first, n_, range.count, Direction::backward);
        for (const auto& seg : support.segments)
            for (std::size_t i = seg.begin; i < seg.begin + seg.length; ++i)
                numerator_[i] += buffer[i] * scale;
    }

    // The unnormalized DFT leaves the sensor field scaled by n. Magnitude
    // replacement does not depend on that scale; the return trip divides by n.
    void sequential_term(const AlignedBuffer& psi, std::size_t k)
    {
        const Support& support = supports_[groups_[k].front()];
        to_sensor(psi, support, work_);
        const auto& amplitude = amplitudes_[k];
        for (std::size_t i = 0; i < work_.size(); ++i) {
            const double re = work_[i].real();
            const double im = work_[i].imag();
            const double m2 = re * re + im * im;
            if (m2 > 0.0) {
                const double f = amplitude[i] / std::sqrt(m2);
                work_[i] = complex_t(re * f, im * f);
            } else {
                work_[i] = complex_t(amplitude[i], 0.0);
            }
        }
        accumulate_from_sensor(work_, support, 1.0 / static_cast<double>(n_));
    }

    void multiplexed_term(const AlignedBuffer& psi, std::size_t g)
    {
        const auto& group = groups_[g];
        for (std::size_t j = 0; j < group.size(); ++j)
            to_sensor(psi, supports_[group[j]], members_[j]);

        const double inv_n2 = 1.0 / static_cast<double>(n_ * n_);
        const double eps = 1e-12 * peaks_[g];
        const auto& amplitude = amplitudes_[g];
        std::fill(total_.begin(), total_.end(), 0.0);
        for (std::size_t j = 0; j < group.size(); ++j)
            for (std::size_t i = 0; i < total_.size(); ++i)
                total_[i] += std::norm(members_[j][i]);
        for (std::size_t i = 0; i < total_.size(); ++i) {
            const double denom = total_[i] * inv_n2 + eps;
            // Sensor fields are members / n, so sqrt(I / denom) applies to them
            // directly and the return trip needs another 1/n.
            total_[i] = denom > 0.0 ? amplitude[i] / std::sqrt(denom) : 0.0;
        }
        for (std::size_t j = 0; j < group.size(); ++j) {
            auto& buffer = members_[j];
            for (std::size_t i = 0; i < buffer.size(); ++i)
                buffer[i] *= total_[i];
            accumulate_from_sensor(buffer, supports_[group[j]], inv_n2);
        }
    }

    std::size_t n_;
    bool multiplexed_;
    std::vector<Support> supports_;
    std::vector<std::vector<double>> amplitudes_;
    std::vector<double> peaks_;
    MultiplexGroups groups_;
    std::vector<double> inverse_denominator_;
    AlignedBuffer work_;
    std::vector<AlignedBuffer> members_;
    std::vector<double> total_;
    std::vector<complex_t> numerator_;
};

AlignedBuffer to_unshifted(const ComplexField& field)
{
    const std::size_t n = field.side();
    const auto c = grid_center(n);
    AlignedBuffer out(n * n);
    for (std::size_t y = 0; y < n; ++y) {
        const std::size_t uy = wrap(static_cast<std::ptrdiff_t>(y) - c, n);
        for (std::size_t x = 0; x < n; ++x)
            out[uy * n + wrap(static_cast<std::ptrdiff_t>(x) - c, n)] = field(x, y);
    }
    return out;
}

ComplexField from_unshifted(const AlignedBuffer& buffer, std::size_t n)
{
    const auto c = grid_center(n);
    ComplexField out(n, Domain::fourier_plane);
    for (std::size_t y = 0; y < n; ++y) {
        const std::size_t uy = wrap(static_cast<std::ptrdiff_t>(y) - c, n);
        for (std::size_t x = 0; x < n; ++x)
            out(x, y) = buffer[uy * n + wrap(static_cast<std::ptrdiff_t>(x) - c, n)];
    }
    return out;
}

double squared_norm(const AlignedBuffer& b)
{
    double s = 0.0;
    for (const auto& v : b)
        s += std::norm(v);
    return s;
}

void check_config(const CaptureSet& set, const ReconConfig& config)
{
    set.validate();
    const bool want_mux = config.mode == ReconMode::multiplexed;
    if (want_mux != set.multiplexed())
        throw InputError(std::string("reconstruction mode '") + to_string(config.mode) +
                         "' does not match a " + (set.multiplexed() ? "multiplexed" : "sequential") +
                         " capture set");
    if (config.max_iters < 0)
        throw InputError("max_iters must be nonnegative");
    if (!(config.rel_tol >= 0.0))
        throw InputError("rel_tol must be nonnegative");
    if (config.tau && !(*config.tau >= 0.0 && std::isfinite(*config.tau)))
        throw InputError("tau must be finite and nonnegative");
}

} // namespace

ReconReport reconstruct_from(const CaptureSet& set, const ReconConfig& config, ComplexField start,
                             const ReconProgress& progress)
{
    check_config(set, config);
    const std::size_t n = set.grid_size();
    if (start.width() != n || start.height() != n)
        throw DimensionError("starting estimate does not match the capture grid");

    ReconReport report;
    report.tau = config.tau ? *config.tau : default_tau(set);

    Engine engine(set, report.tau);
    AlignedBuffer current = to_unshifted(start);
    AlignedBuffer next(current.size());

    for (int k = 1; k <= config.max_iters; ++k) {
        engine.step(current, next);

        double diff = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < next.size(); ++i) {
            finite = finite && std::isfinite(next[i].real()) && std::isfinite(next[i].imag());
            diff += std::norm(next[i] - current[i]);
        }
        if (!finite)
            throw NumericalError("non-finite Fourier estimate", k);
        const double base = squared_norm(current);
        double change = 0.0;
        if (base > 0.0)
            change = std::sqrt(diff / base);
        else if (diff > 0.0)
            change = 1.0;

        std::swap(current, next);
        report.residual_history.push_back(change);
        report.iterations_run = k;
        if (progress)
            progress(k, change);
        if (change < config.rel_tol) {
            report.converged = true;
            break;
        }
    }

    report.psi_hat = from_unshifted(current, n);
    report.recovered_image = inverse_transform(report.psi_hat);
    return report;
}

ReconReport reconstruct(const CaptureSet& set, const ReconConfig& config, const ReconProgress& progress)
{
    check_config(set, config);
    return reconstruct_from(set, config, initialize(set), progress);
}

} // namespace macrofp
