#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "../support/dense_oracle.hpp"
#include "macrofp/metrics.hpp"
#include "macrofp/recon.hpp"

using namespace macrofp;
using oracle::cd;

namespace {

RealImage to_intensity(const ComplexField& f) { return f.intensity(); }

std::vector<RealImage> real_images(const CaptureSet& set)
{
    std::vector<RealImage> out;
    for (const auto& img : set.images)
        out.push_back(to_real(img));
    return out;
}

ObjectField small_chart(std::size_t n, int coarsest)
{
    auto spec = ResolutionChartSpec::descending(n, coarsest);
    spec.margin = 2;
    return make_chart(spec);
}

} // namespace

TEST_CASE("magnitude_project examples")
{
    std::mt19937_64 rng(1);
    const std::size_t n = 16;
    const auto psi = oracle::random_field(n, Domain::sensor_plane, rng);

    SUBCASE("consistent magnitudes are a fixed point")
    {
        const auto out = magnitude_project(psi, to_intensity(psi));
        CHECK(oracle::rel_diff(out.data(), psi.data()) < 1e-14);
    }
    SUBCASE("unit magnitudes with I = 4 become 2 with phases unchanged")
    {
        ComplexField unit = psi;
        for (auto& v : unit.data())
            v /= std::abs(v);
        const auto out = magnitude_project(unit, RealImage(n, n, 4.0));
        for (std::size_t i = 0; i < out.samples(); ++i) {
            CHECK(std::abs(out.data()[i]) == doctest::Approx(2.0).epsilon(1e-14));
            CHECK(std::abs(std::arg(out.data()[i]) - std::arg(unit.data()[i])) < 1e-12);
        }
    }
    SUBCASE("zero samples take phase 0")
    {
        ComplexField z(n, Domain::sensor_plane);
        const auto out = magnitude_project(z, RealImage(n, n, 9.0));
        for (auto v : out.data())
            CHECK(v == cd(3.0, 0.0));
    }
    SUBCASE("output intensity matches within 1e-9 max(I)")
    {
        RealImage target(n, n);
        std::uniform_real_distribution<double> u(0.0, 1e3);
        for (auto& v : target.pixels())
            v = u(rng);
        const auto out = magnitude_project(psi, target);
        double peak = 0;
        for (double v : target.pixels())
            peak = std::max(peak, v);
        for (std::size_t i = 0; i < target.size(); ++i) {
            CHECK(std::abs(std::norm(out.data()[i]) - target[i]) < 1e-9 * peak);
            CHECK(std::abs(std::arg(out.data()[i]) - std::arg(psi.data()[i])) < 1e-12);
        }
    }
    CHECK_THROWS_AS(magnitude_project(psi, RealImage(n, n + 1)), DimensionError);
}

TEST_CASE("multiplexed_project shares one intensity among the members")
{
    std::mt19937_64 rng(2);
    const std::size_t n = 12;
    std::vector<ComplexField> members = {oracle::random_field(n, Domain::sensor_plane, rng),
                                         oracle::random_field(n, Domain::sensor_plane, rng),
                                         oracle::random_field(n, Domain::sensor_plane, rng)};
    RealImage target(n, n);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (auto& v : target.pixels())
        v = u(rng);
    const auto out = multiplexed_project(members, target);
    for (std::size_t i = 0; i < target.size(); ++i) {
        double sum = 0;
        for (const auto& m : out)
            sum += std::norm(m.data()[i]);
        CHECK(sum == doctest::Approx(target[i]).epsilon(1e-10));
        // common real factor: ratios between members are preserved
        const cd r_in = members[0].data()[i] / members[1].data()[i];
        const cd r_out = out[0].data()[i] / out[1].data()[i];
        CHECK(std::abs(r_in - r_out) < 1e-10 * std::abs(r_in));
    }
    // one member reduces to plain magnitude replacement
    const auto single = multiplexed_project({members[0]}, target);
    const auto plain = magnitude_project(members[0], target);
    CHECK(oracle::rel_diff(single[0].data(), plain.data()) < 1e-10);
    // dark samples stay finite
    std::vector<ComplexField> dark = {ComplexField(n, Domain::sensor_plane)};
    const auto dark_out = multiplexed_project(dark, RealImage(n, n, 0.0));
    for (auto v : dark_out[0].data())
        CHECK(v == cd(0.0));
    CHECK_THROWS_AS(multiplexed_project({}, target), InputError);
}

TEST_CASE("fourier_update with one full-grid aperture and tau 0 inverts the sensor transform")
{
    std::mt19937_64 rng(3);
    const std::size_t n = 20;
    const auto psi = oracle::random_field(n, Domain::sensor_plane, rng);
    const auto out = fourier_update({psi}, {{0, 0, 100.0}}, 0.0);
    CHECK(out.domain() == Domain::fourier_plane);
    CHECK(oracle::rel_diff(out.data(), propagate_from_sensor(psi).data()) < 1e-14);
}

TEST_CASE("fourier_update leaves uncovered samples at zero")
{
    std::mt19937_64 rng(4);
    const std::size_t n = 20;
    const std::vector<ApertureSpec> aps = {{-3, 0, 6}, {3, 2, 6}};
    const auto out = fourier_update({oracle::random_field(n, Domain::sensor_plane, rng),
                                     oracle::random_field(n, Domain::sensor_plane, rng)},
                                    aps, 0.0);
    const auto cover = coverage_count(aps, n);
    std::size_t uncovered = 0;
    for (std::size_t i = 0; i < cover.size(); ++i)
        if (cover[i] == 0) {
            ++uncovered;
            CHECK(out.data()[i] == cd(0.0));
        }
    CHECK(uncovered > 0);
    CHECK_THROWS_AS(fourier_update({}, {}, 0.0), InputError);
    CHECK_THROWS_AS(fourier_update({ComplexField(n, Domain::sensor_plane)}, aps, 0.0), InputError);
    CHECK_THROWS_AS(fourier_update({ComplexField(n, Domain::sensor_plane)}, {aps[0]}, -1.0), InputError);
}

TEST_CASE("fourier_update matches a dense normal-equations solve on a 32 x 32 instance")
{
    std::mt19937_64 rng(5);
    const std::size_t n = 32;
    const std::vector<ApertureSpec> aps = {{-4, -2, 14}, {3, 1, 12}, {0, 5, 16}};
    std::vector<ComplexField> projected;
    std::vector<std::vector<cd>> dense_psi;
    std::vector<std::vector<int>> masks;
    for (const auto& ap : aps) {
        projected.push_back(oracle::random_field(n, Domain::sensor_plane, rng));
        dense_psi.emplace_back(projected.back().data().begin(), projected.back().data().end());
        std::vector<int> m(n * n);
        const double c = static_cast<double>(n / 2);
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t x = 0; x < n; ++x)
                m[y * n + x] = oracle::in_disk(x - c, y - c, ap.cx, ap.cy, ap.diameter);
        masks.push_back(std::move(m));
    }
    const double tau = 1e-3;
    const auto expect = oracle::dense_fourier_update(dense_psi, masks, n, tau);
    const auto got = fourier_update(projected, aps, tau);
    CHECK(oracle::rel_diff(got.data(), expect) < 1e-8);
}

TEST_CASE("one Fourier update never increases the least-squares objective")
{
    std::mt19937_64 rng(6);
    const auto obj = small_chart(64, 4);
    const auto grid = plan_grid(50.0, 5, 12.0, 64);
    const auto set = capture(obj, grid);
    const auto images = real_images(set);
    ComplexField psi = oracle::random_field(64, Domain::fourier_plane, rng);
    const double tau = 1e-3;
    for (int k = 0; k < 5; ++k) {
        std::vector<ComplexField> projected;
        const auto fields = sensor_fields(psi, set.apertures);
        for (std::size_t i = 0; i < fields.size(); ++i)
            projected.push_back(magnitude_project(fields[i], images[i]));
        const auto next = fourier_update(projected, set.apertures, tau);
        const double before = ls_objective(projected, set.apertures, psi, tau);
        const double after = ls_objective(projected, set.apertures, next, tau);
        CHECK(after <= before * (1 + 1e-12));
        psi = next;
    }
}

TEST_CASE("one engine iteration equals the composed building blocks")
{
    std::mt19937_64 rng(7);
    SUBCASE("sequential")
    {
        for (std::size_t n : {48u, 49u}) {
            const auto obj = make_object_from_image(RealImage(n, n, 1.0), PhaseModel::random_uniform, 3);
            const auto set = add_noise(capture(obj, plan_grid(40.0, 5, 11.0, n)), 25.0, 2);
            const auto start = oracle::random_field(n, Domain::fourier_plane, rng);
            ReconConfig cfg;
            cfg.max_iters = 1;
            cfg.tau = 0.05;
            const auto report = reconstruct_from(set, cfg, start);

            std::vector<ComplexField> projected;
            const auto fields = sensor_fields(start, set.apertures);
            for (std::size_t i = 0; i < fields.size(); ++i)
                projected.push_back(magnitude_project(fields[i], to_real(set.images[i])));
            const auto expect = fourier_update(projected, set.apertures, 0.05);
            CHECK(oracle::rel_diff(report.psi_hat.data(), expect.data()) < 1e-11);
            CHECK(oracle::rel_diff(report.recovered_image.data(), inverse_transform(expect).data()) < 1e-11);
        }
    }
    SUBCASE("multiplexed")
    {
        const std::size_t n = 64;
        const auto obj = make_object_from_image(RealImage(n, n, 1.0), PhaseModel::random_uniform, 4);
        const auto cameras = plan_grid(0.0, 3, 10.0, n);
        const auto sources = source_lattice(3, 4.0);
        const auto set = capture_multiplexed(obj, cameras, sources, random_patterns(9, 3, 2, 5), 5);
        const auto start = oracle::random_field(n, Domain::fourier_plane, rng);
        ReconConfig cfg;
        cfg.max_iters = 1;
        cfg.mode = ReconMode::multiplexed;
        const auto report = reconstruct_from(set, cfg, start);

        std::vector<ComplexField> projected;
        std::vector<ApertureSpec> terms;
        for (std::size_t k = 0; k < set.images.size(); ++k) {
            std::vector<ApertureSpec> members;
            for (auto a : (*set.multiplex_groups)[k])
                members.push_back(set.apertures[a]);
            const auto out = multiplexed_project(sensor_fields(start, members), to_real(set.images[k]));
            projected.insert(projected.end(), out.begin(), out.end());
            terms.insert(terms.end(), members.begin(), members.end());
        }
        CHECK(report.tau == doctest::Approx(default_tau(set)));
        const auto expect = fourier_update(projected, terms, report.tau);
        CHECK(oracle::rel_diff(report.psi_hat.data(), expect.data()) < 1e-11);
    }
}

TEST_CASE("initialize")
{
    SUBCASE("full-aperture capture of a flat object yields its spectrum")
    {
        auto spec = ResolutionChartSpec::descending(32, 2);
        spec.margin = 1;
        spec.background = 0.2;
        const auto obj = make_chart(spec);
        const auto set = capture(obj, std::vector<ApertureSpec>{{0, 0, 100.0}});
        const auto psi0 = initialize(set);
        CHECK(oracle::rel_diff(psi0.data(), forward_transform(obj.field).data()) < 1e-6);
    }
    SUBCASE("all-zero captures give a zero estimate")
    {
        CaptureSet set;
        set.images.assign(4, FloatImage(16, 16, 0.0f));
        set.apertures = plan_grid(50.0, 2, 4.0, 16).apertures;
        const auto start = initialize(set);
        for (auto v : start.data())
            CHECK(v == cd(0.0));
    }
    SUBCASE("the captured energy is matched")
    {
        const auto obj = small_chart(64, 4);
        const auto set = capture(obj, plan_grid(61.0, 5, 12.0, 64));
        const auto psi0 = initialize(set);
        double captured = 0, modelled = 0;
        for (const auto& img : set.images)
            for (float v : img.pixels())
                captured += v;
        for (const auto& ap : set.apertures)
            modelled += apply_aperture(psi0, ap).squared_norm();
        CHECK(modelled == doctest::Approx(captured).epsilon(1e-10));
    }
    SUBCASE("the mean-image start beats a random start on the center capture")
    {
        const std::size_t n = 128;
        const auto obj = small_chart(n, 6);
        const auto grid = plan_grid(61.0, 9, 16.0, n);
        const auto set = capture(obj, grid);
        const auto& center = set.apertures[grid.center_index()];
        const RealImage truth = to_real(set.images[grid.center_index()]);
        const auto psi0 = initialize(set);
        std::mt19937_64 rng(8);
        auto random = oracle::random_field(n, Domain::fourier_plane, rng);
        const double scale = psi0.norm() / random.norm();
        for (auto& v : random.data())
            v *= scale;
        const auto reproject = [&](const ComplexField& p) {
            return propagate_to_sensor(apply_aperture(p, center)).intensity();
        };
        const auto rmse = [&](const RealImage& a) {
            double s = 0;
            for (std::size_t i = 0; i < a.size(); ++i)
                s += (a[i] - truth[i]) * (a[i] - truth[i]);
            return std::sqrt(s / a.size());
        };
        CHECK(rmse(reproject(psi0)) < rmse(reproject(random)));
    }
    CHECK_THROWS_AS(initialize(CaptureSet{}), InputError);
}

TEST_CASE("reconstruction improves on the center capture and is deterministic")
{
    const std::size_t n = 128;
    const auto obj = small_chart(n, 6);
    const auto grid = plan_grid(61.0, 7, 16.0, n);
    const auto set = add_noise(capture(obj, grid), 30.0, 3);
    ReconConfig cfg;
    cfg.max_iters = 30;
    const auto a = reconstruct(set, cfg);
    const auto b = reconstruct(set, cfg);
    CHECK(a.psi_hat == b.psi_hat);
    CHECK(a.residual_history == b.residual_history);
    CHECK(a.iterations_run == 30);
    for (double r : a.residual_history)
        CHECK(std::isfinite(r));
    const auto truth = obj.field.intensity();
    const double center = intensity_rmse(capture_in_object_frame(set.images[grid.center_index()]), truth).rmse;
    const double recovered = intensity_rmse(a.recovered_image.intensity(), truth).rmse;
    CHECK(recovered < 0.8 * center);
}

TEST_CASE("convergence flag and stopping rule")
{
    const auto obj = small_chart(64, 4);
    const auto set = capture(obj, std::vector<ApertureSpec>{{0, 0, 200.0}});
    ReconConfig cfg;
    cfg.rel_tol = 1e-8;
    const auto report = reconstruct(set, cfg);
    CHECK(report.converged);
    CHECK(report.iterations_run < 10);
    CHECK(report.residual_history.back() < cfg.rel_tol);
    cfg.max_iters = 0;
    const auto none = reconstruct(set, cfg);
    CHECK(none.iterations_run == 0);
    CHECK_FALSE(none.converged);
    CHECK(none.psi_hat == initialize(set));
}

TEST_CASE("global phase of the object does not change intensity metrics")
{
    const std::size_t n = 64;
    const auto obj = small_chart(n, 4);
    ObjectField rotated = obj;
    for (auto& v : rotated.field.data())
        v *= std::polar(1.0, 1.1);
    const auto grid = plan_grid(61.0, 5, 12.0, n);
    ReconConfig cfg;
    cfg.max_iters = 15;
    const auto a = reconstruct(capture(obj, grid), cfg);
    const auto b = reconstruct(capture(rotated, grid), cfg);
    const auto truth = obj.field.intensity();
    CHECK(intensity_rmse(a.recovered_image.intensity(), truth).rmse ==
          doctest::Approx(intensity_rmse(b.recovered_image.intensity(), truth).rmse).epsilon(1e-6));
}

TEST_CASE("reconstruction errors")
{
    const auto obj = small_chart(64, 4);
    auto set = capture(obj, plan_grid(50.0, 3, 12.0, 64));
    ReconConfig cfg;
    cfg.mode = ReconMode::multiplexed;
    CHECK_THROWS_AS(reconstruct(set, cfg), InputError);
    cfg.mode = ReconMode::sequential;
    cfg.tau = -1.0;
    CHECK_THROWS_AS(reconstruct(set, cfg), InputError);
    cfg.tau.reset();
    set.images[2][100] = std::numeric_limits<float>::quiet_NaN();
    try {
        reconstruct(set, cfg);
        FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
        CHECK(e.iteration() == 1);
    }
    CHECK_THROWS_AS(reconstruct_from(capture(obj, plan_grid(50.0, 3, 12.0, 64)), cfg, ComplexField(32, Domain::fourier_plane)),
                    DimensionError);
}

TEST_CASE("default tau scales with the peak coverage count")
{
    std::vector<ApertureSpec> aps = {{0, 0, 10}, {2, 0, 10}, {4, 0, 10}};
    const auto cover = coverage_count(aps, 32);
    CHECK(cover(16 + 2, 16) == 3);
    CaptureSet set;
    set.images.assign(3, FloatImage(32, 32, 1.0f));
    set.apertures = aps;
    CHECK(default_tau(set) == doctest::Approx(3e-6));
}
