// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails. `acceptance N...` runs only the listed ones.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/dense_oracle.hpp"
#include "macrofp/harness.hpp"

using namespace macrofp;
using oracle::cd;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

std::string mtf_text(const std::optional<int>& v) { return v ? std::to_string(*v) + " px" : "unresolved"; }

std::vector<int> widths(int coarsest)
{
    std::vector<int> w;
    for (int i = coarsest; i >= 1; --i)
        w.push_back(i);
    return w;
}

// Desk-scale chart experiment on a 256 px grid.
ExperimentConfig desk(double diameter_samples, int coarsest)
{
    ExperimentConfig c;
    c.experiment_id = "acceptance";
    c.aperture_diameter_samples = diameter_samples;
    c.chart_widths = widths(coarsest);
    c.workers = 1;
    return c;
}

std::vector<RunResult> runs_of(const ExperimentConfig& c) { return run_experiment(c, false).runs; }

// Center-capture MTF20 on the full-size chart with the long-range optics.
Outcome center_resolution()
{
    const ExperimentConfig c = paper_scale(ExperimentConfig{});
    const double d = resolved_diameter(c);
    const SceneProducts scene = build_scene(c);
    const CaptureSet set = capture(scene.object, std::vector<ApertureSpec>{{0.0, 0.0, d}}, c.geometry);
    const auto contrasts = group_contrasts(capture_in_object_frame(set.images[0]), scene.object.groups);
    const auto limit = mtf20_limit(contrasts);
    return {limit && std::abs(*limit - 12) <= 1,
            fmt("512 px chart, pupil %.0f samples: center MTF20 %s (want 12 +/- 1)", d, mtf_text(limit).c_str())};
}

// Full reconstruction at desk scale: improvement over the center capture
// must reach SAR / 1.5.
Outcome reconstruction_resolution()
{
    ExperimentConfig c = desk(32.0, 12);
    c.grid_count = 13;
    c.overlap_pct = 61.0;
    c.snr_db = 30.0;
    c.recon.max_iters = 60;
    const RunResult r = runs_of(c).front();
    if (!r.ok || !r.mtf20 || !r.center_mtf20)
        return {false, fmt("run failed or unresolved: recon %s, center %s", mtf_text(r.mtf20).c_str(),
                           mtf_text(r.center_mtf20).c_str())};
    const double gain = static_cast<double>(*r.center_mtf20) / *r.mtf20;
    const double need = r.grid.sar / 1.5;
    return {gain >= need,
            fmt("256 px, 13x13 at 61%%, 30 dB, SAR %.3f: center %d px -> recon %d px, gain %.2f (want >= %.2f)",
                r.grid.sar, *r.center_mtf20, *r.mtf20, gain, need)};
}

// Overlap sweep at SAR ~10: RMSE ratio and which runs beat the center capture.
Outcome overlap_watershed()
{
    ExperimentConfig c = desk(24.0, 12);
    c.grid_count.reset();
    c.sar_target = 10.0;
    c.sweep_axis = SweepAxis::overlap;
    c.sweep_values = {"0", "41", "50", "75"};
    c.recon.max_iters = 30;
    const auto runs = runs_of(c);

    std::ostringstream detail;
    bool pass = true;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        pass = pass && r.ok;
        const bool finer = r.mtf20 && r.center_mtf20 && *r.mtf20 < *r.center_mtf20;
        const bool high = i >= 2;
        pass = pass && finer == high;
        detail << c.sweep_values[i] << "%: " << r.grid.count << "x" << r.grid.count << " SAR "
               << fmt("%.2f", r.grid.sar) << " rmse " << fmt("%.4f", r.rmse) << " mtf " << mtf_text(r.mtf20)
               << " (center " << mtf_text(r.center_mtf20) << "); ";
    }
    const double low = std::min(runs[0].rmse, runs[1].rmse);
    const double high = std::max(runs[2].rmse, runs[3].rmse);
    const double ratio = low / high;
    pass = pass && ratio >= 3.0;
    detail << fmt("RMSE ratio %.2f (want >= 3)", ratio);
    return {pass, detail.str()};
}

// SAR sweep at 61% overlap: realized SARs and a non-increasing MTF20 limit.
Outcome sar_tracking()
{
    const std::vector<double> want = {1.77, 3.32, 4.09, 5.64, 11.8};
    ExperimentConfig c = desk(26.0, 14);
    c.geometry.grid_size = 320;
    c.overlap_pct = 61.0;
    c.sweep_axis = SweepAxis::sar;
    c.sweep_values = {"3", "7", "9", "13", "29"};
    c.recon.max_iters = 300;
    const auto runs = runs_of(c);

    std::ostringstream detail;
    bool pass = true;
    int previous = 1 << 30;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        pass = pass && r.ok && std::abs(r.grid.sar - want[i]) <= 0.05;
        const int limit = r.mtf20 ? *r.mtf20 : 1 << 29;
        pass = pass && limit <= previous;
        previous = limit;
        detail << r.grid.count << ": step " << r.grid.step << " SAR " << fmt("%.3f", r.grid.sar) << " (want "
               << want[i] << ") mtf " << mtf_text(r.mtf20) << "; ";
    }
    return {pass, detail.str()};
}

// SNR sweep: at every SNR the RMSE falls strictly as the grid grows.
Outcome noise_robustness()
{
    ExperimentConfig c = desk(32.0, 12);
    c.overlap_pct = 61.0;
    c.sweep_axis = SweepAxis::snr;
    c.sweep_values = {"10", "20", "30"};
    c.snr_sar_counts = {1, 3, 7, 9, 13};
    c.recon.max_iters = 90;
    const auto runs = runs_of(c);

    std::ostringstream detail;
    bool pass = true;
    const std::size_t per = c.snr_sar_counts.size();
    for (std::size_t s = 0; s < c.sweep_values.size(); ++s) {
        detail << c.sweep_values[s] << " dB:";
        for (std::size_t k = 0; k < per; ++k) {
            const auto& r = runs[s * per + k];
            pass = pass && r.ok;
            if (k > 0)
                pass = pass && r.rmse < runs[s * per + k - 1].rmse;
            detail << fmt(" %.4f", r.rmse);
        }
        detail << "; ";
    }
    detail << "RMSE per SAR step, counts 1,3,7,9,13";
    return {pass, detail.str()};
}

// Multiplexed illumination: N_mux x T sweep on 7x7 abutting cameras.
Outcome multiplexing()
{
    ExperimentConfig c = desk(24.0, 12);
    c.capture_mode = CaptureMode::multiplexed;
    c.mux = {7, 7, 66.0, 1, 1};
    c.sweep_axis = SweepAxis::multiplex;
    const std::vector<int> ns = {1, 2, 3};
    const std::vector<int> ts = {1, 2, 3};
    for (int n : ns)
        for (int t : ts)
            c.sweep_values.push_back(std::to_string(n) + "x" + std::to_string(t));
    c.recon.max_iters = 600;
    const auto runs = runs_of(c);

    const auto rmse = [&](std::size_t ni, std::size_t ti) { return runs[ni * ts.size() + ti].rmse; };
    std::ostringstream detail;
    bool pass = true;
    for (const auto& r : runs)
        pass = pass && r.ok;
    const double base = rmse(0, 0);
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        detail << "N=" << ns[ni] << ":";
        for (std::size_t ti = 0; ti < ts.size(); ++ti) {
            detail << fmt(" %.4f", rmse(ni, ti));
            if (ti > 0)
                pass = pass && rmse(ni, ti) <= rmse(ni, ti - 1);
        }
        if (ns[ni] >= 2) {
            const double ratio = base / rmse(ni, ts.size() - 1);
            pass = pass && ratio >= 2.0;
            detail << fmt(" (1x1 / %dx3 = %.2f, want >= 2)", ns[ni], ratio);
        }
        detail << "; ";
    }
    detail << "RMSE for T = 1,2,3";
    return {pass, detail.str()};
}

// fourier_update against a dense normal-equations solve.
Outcome oracle_equivalence()
{
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    int worst_n = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const std::size_t n = t % 25 == 24 ? 32 : 6 + static_cast<std::size_t>(rng() % 15);
        const int count = n == 32 ? 2 : 1 + static_cast<int>(rng() % 5);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<ApertureSpec> aps;
        std::vector<ComplexField> projected;
        std::vector<std::vector<cd>> dense_psi;
        std::vector<std::vector<int>> masks;
        const double c = static_cast<double>(n / 2);
        for (int k = 0; k < count; ++k) {
            const double d = 2.0 + unit(rng) * (static_cast<double>(n) / 2.0);
            const double room = (static_cast<double>(n) - d) / 2.0 - 1.0;
            ApertureSpec ap{std::round((unit(rng) * 2 - 1) * room), std::round((unit(rng) * 2 - 1) * room), d};
            if (!aperture_fits(ap, n))
                ap.cx = ap.cy = 0.0;
            aps.push_back(ap);
            projected.push_back(oracle::random_field(n, Domain::sensor_plane, rng));
            dense_psi.emplace_back(projected.back().data().begin(), projected.back().data().end());
            std::vector<int> m(n * n);
            for (std::size_t y = 0; y < n; ++y)
                for (std::size_t x = 0; x < n; ++x)
                    m[y * n + x] = oracle::in_disk(x - c, y - c, ap.cx, ap.cy, ap.diameter);
            masks.push_back(std::move(m));
        }
        const double tau = t % 2 == 0 ? 1e-3 : unit(rng);
        const auto fast = fourier_update(projected, aps, tau);
        const auto dense = oracle::dense_fourier_update(dense_psi, masks, n, tau);
        const double err = oracle::rel_diff(fast.data(), dense);
        if (err > worst) {
            worst = err;
            worst_n = static_cast<int>(n);
        }
    }
    return {worst <= 1e-8, fmt("%d random trials, worst relative error %.2e at n = %d (want <= 1e-8)", trials, worst,
                               worst_n)};
}

// Parseval, projections and rerun determinism.
Outcome numerical_invariants()
{
    std::mt19937_64 rng(77);
    double parseval = 0.0, round_trip = 0.0;
    for (std::size_t n : {7, 16, 31, 64, 256}) {
        const auto x = oracle::random_field(n, Domain::object_plane, rng);
        const auto fx = forward_transform(x);
        parseval = std::max(parseval, std::abs(fx.squared_norm() - x.squared_norm()) / x.squared_norm());
        round_trip = std::max(round_trip, oracle::rel_diff(inverse_transform(fx).data(), x.data()));
        const auto s = propagate_from_sensor(propagate_to_sensor(fx));
        round_trip = std::max(round_trip, oracle::rel_diff(s.data(), fx.data()));
    }

    double fixed_point = 0.0, exactness = 0.0;
    bool idempotent = true;
    for (std::size_t n : {8, 33, 64}) {
        const auto psi = oracle::random_field(n, Domain::sensor_plane, rng);
        fixed_point = std::max(fixed_point, oracle::rel_diff(magnitude_project(psi, psi.intensity()).data(), psi.data()));
        RealImage target(n, n);
        std::uniform_real_distribution<double> u(0.0, 4.0);
        for (auto& v : target.pixels())
            v = u(rng);
        const auto out = magnitude_project(psi, target);
        for (std::size_t i = 0; i < target.size(); ++i)
            exactness = std::max(exactness, std::abs(std::abs(out.data()[i]) - std::sqrt(target[i])) /
                                                std::max(std::sqrt(target[i]), 1e-300));
        const auto spectrum = oracle::random_field(n, Domain::fourier_plane, rng);
        const ApertureSpec ap{1.0, -2.0, static_cast<double>(n) / 3.0};
        const auto once = apply_aperture(spectrum, ap);
        const auto mask = aperture_mask(ap, n);
        idempotent = idempotent && apply_aperture(once, ap) == once;
        for (std::size_t i = 0; i < spectrum.samples(); ++i)
            idempotent = idempotent && once.data()[i] == (mask[i] ? spectrum.data()[i] : cd(0.0));
    }

    ExperimentConfig small = desk(12.0, 4);
    small.geometry.grid_size = 64;
    small.grid_count = 3;
    small.recon.max_iters = 10;
    const auto a = run_point(small, false);
    const auto b = run_point(small, false);
    const bool deterministic = format_metrics_csv(a.rows) == format_metrics_csv(b.rows);

    const bool pass = parseval <= 1e-12 && round_trip <= 1e-12 && fixed_point <= 1e-12 && exactness <= 1e-12 &&
                      idempotent && deterministic;
    return {pass, fmt("Parseval %.1e, round trip %.1e, fixed point %.1e, magnitude %.1e (want <= 1e-12); "
                      "aperture idempotent %s; reruns identical %s",
                      parseval, round_trip, fixed_point, exactness, idempotent ? "yes" : "no",
                      deterministic ? "yes" : "no")};
}

// Diffraction calculator against the quoted figures.
Outcome calculators()
{
    OpticalGeometry lab;
    lab.wavelength = 633e-9;
    lab.focal_length = 75e-3;
    lab.aperture_diameter = 2.3e-3;
    const auto spot = diffraction_calc(lab);

    OpticalGeometry far;
    far.wavelength = 550e-9;
    far.object_distance = 1000.0;
    far.aperture_diameter = 12.5e-3;
    const auto blur = diffraction_calc(far);

    const bool pass = std::abs(spot.sensor_spot - 49e-6) <= 2e-6 && std::abs(blur.object_blur - 0.044) <= 0.5e-3;
    return {pass, fmt("sensor spot %.1f um (want 49 +/- 2; Rayleigh radius %.1f um), object blur %.1f mm (want ~44)",
                      spot.sensor_spot * 1e6, spot.rayleigh_radius * 1e6, blur.object_blur * 1e3)};
}

struct Criterion
{
    int id;
    const char* name;
    std::function<Outcome()> check;
};

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> criteria = {
        {1, "center-capture resolution", center_resolution},
        {2, "reconstruction resolution", reconstruction_resolution},
        {3, "overlap watershed", overlap_watershed},
        {4, "SAR tracking", sar_tracking},
        {5, "noise robustness", noise_robustness},
        {6, "multiplexing", multiplexing},
        {7, "oracle equivalence", oracle_equivalence},
        {8, "numerical invariants", numerical_invariants},
        {9, "calculators", calculators},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id))
            continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
