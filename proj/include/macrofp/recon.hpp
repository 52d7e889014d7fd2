#pragma once

// Alternating-minimization phase retrieval of the Fourier-plane field from a
// capture set. Each outer iteration forms the sensor fields of every aperture
// from the current estimate, replaces their magnitudes with the measured ones
// and solves a ridge-regularized least-squares problem for the new estimate.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "macrofp/capture.hpp"
#include "macrofp/field.hpp"

namespace macrofp {

enum class ReconMode
{
    sequential,
    multiplexed,
};

const char* to_string(ReconMode mode);

struct ReconConfig
{
    std::optional<double> tau; // default: 1e-6 * maximum aperture overlap count
    int max_iters = 1000;
    double rel_tol = 1e-5;
    ReconMode mode = ReconMode::sequential;
};

struct ReconReport
{
    ComplexField psi_hat;         // Fourier plane
    ComplexField recovered_image; // object plane, inverse_transform(psi_hat)
    std::vector<double> residual_history; // ||psi^{k+1} - psi^k|| / ||psi^k|| per iteration
    int iterations_run = 0;
    bool converged = false;
    double tau = 0.0;
};

/// psi_0 = s * F^-1 sqrt(mean_i I_i) mapped from the sensor plane, with s
/// chosen so that sum_i ||R_i psi_0||^2 equals the total captured energy.
ComplexField initialize(const CaptureSet& set);

/// Replaces magnitudes with sqrt(intensity), keeping phases. Zero samples take
/// phase 0.
ComplexField magnitude_project(const ComplexField& psi, const RealImage& intensity);

/// Joint magnitude replacement for the fields multiplexed into one image:
/// every member is scaled by sqrt(I / (sum_j |psi_j|^2 + eps)), eps = 1e-12 max(I).
std::vector<ComplexField> multiplexed_project(const std::vector<ComplexField>& members,
                                             const RealImage& intensity);

/// Closed-form minimizer of sum_i ||psi_i - F R_i x||^2 + tau ||x||^2 over the
/// Fourier-plane field x. `term_apertures[k]` is the aperture of `projected[k]`.
ComplexField fourier_update(const std::vector<ComplexField>& projected,
                            const std::vector<ApertureSpec>& term_apertures, double tau);

/// Sensor-plane fields F R_i psi_hat for every aperture.
std::vector<ComplexField> sensor_fields(const ComplexField& psi_hat, const std::vector<ApertureSpec>& apertures);

/// sum_k ||projected[k] - F R_k psi_hat||^2 + tau ||psi_hat||^2.
double ls_objective(const std::vector<ComplexField>& projected, const std::vector<ApertureSpec>& term_apertures,
                    const ComplexField& psi_hat, double tau);

/// Number of apertures covering each Fourier sample; its maximum sets the
/// default tau.
Image<int> coverage_count(const std::vector<ApertureSpec>& apertures, std::size_t n);
double default_tau(const CaptureSet& set);

/// Called after every iteration with (iteration, relative change).
using ReconProgress = std::function<void(int, double)>;

ReconReport reconstruct(const CaptureSet& set, const ReconConfig& config, const ReconProgress& progress = {});

/// Same iteration from a caller-supplied starting estimate.
ReconReport reconstruct_from(const CaptureSet& set, const ReconConfig& config, ComplexField start,
                             const ReconProgress& progress = {});

} // namespace macrofp
