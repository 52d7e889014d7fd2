#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "../support/oracles.hpp"
#include "macrofp/capture.hpp"

using namespace macrofp;

namespace {

ObjectField random_object(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RealImage img(n, n);
    for (auto& v : img.pixels())
        v = u(rng);
    return make_object_from_image(img, PhaseModel::random_uniform, seed);
}

RealImage band_limited(const ObjectField& obj, const ApertureSpec& ap)
{
    return propagate_to_sensor(apply_aperture(forward_transform(obj.field), ap)).intensity();
}

} // namespace

TEST_CASE("plan_grid quantizes the step and reports SAR")
{
    const auto g = plan_grid(61.0, 21, 18.0, 256);
    CHECK(g.step == 7.0);
    CHECK(g.apertures.size() == 441);
    CHECK(g.sar() == doctest::Approx(8.8).epsilon(0.05 / 8.8));
    CHECK(g.sar() == doctest::Approx((18.0 + 20 * 7.0) / 18.0));
    CHECK(g.overlap() == doctest::Approx(1.0 - 7.0 / 18.0));
    // centered lattice, row-major, center aperture on DC
    const auto& c = g.apertures[g.center_index()];
    CHECK(c.cx == 0.0);
    CHECK(c.cy == 0.0);
    CHECK(g.apertures.front().cx == -70.0);
    CHECK(g.apertures.front().cy == -70.0);
    CHECK(g.apertures[1].cx == -63.0);
    CHECK(g.apertures[1].cy == -70.0);
}

TEST_CASE("count_for_sar picks the grid sizes quoted for SAR 10")
{
    CHECK(count_for_sar(0.0, 10.0) == 9);
    CHECK(count_for_sar(77.0, 10.0) == 41);
    CHECK(count_for_sar(61.0, 8.8) == 21);
    CHECK(count_for_sar(50.0, 10.0) == 19);
    CHECK(count_for_sar(75.0, 10.0) == 37);
    CHECK(count_for_sar(41.0, 10.0) == 17);
    CHECK(count_for_sar(50.0, 1.0) == 1);
    CHECK_THROWS_AS(count_for_sar(100.0, 10.0), GeometryError);
    CHECK_THROWS_AS(count_for_sar(10.0, 0.5), GeometryError);
}

TEST_CASE("SAR after quantization at 61 percent overlap")
{
    // d_s = 26 quantizes the step to 10 samples
    const std::vector<std::pair<int, double>> expect = {{3, 1.77}, {7, 3.32}, {9, 4.09}, {13, 5.64}, {29, 11.8}};
    for (auto [count, sar] : expect)
        CHECK(std::abs(plan_grid_unbounded(61.0, count, 26.0).sar() - sar) <= 0.05);
}

TEST_CASE("plan_grid rejects grids leaving the Fourier plane")
{
    CHECK_THROWS_AS(plan_grid(61.0, 31, 42.0, 512), GeometryError);
    CHECK_NOTHROW(plan_grid(61.0, 29, 42.0, 512));
    CHECK_NOTHROW(plan_grid(61.0, 21, 42.0, 512));
    CHECK_THROWS_AS(plan_grid(100.0, 3, 10.0, 64), GeometryError);
    CHECK_THROWS_AS(plan_grid(-1.0, 3, 10.0, 64), GeometryError);
    CHECK_THROWS_AS(plan_grid(50.0, 0, 10.0, 64), GeometryError);
}

TEST_CASE("full-plane aperture capture returns the mirrored object intensity")
{
    const auto obj = random_object(32, 1);
    const auto set = capture(obj, std::vector<ApertureSpec>{{0, 0, 200.0}});
    const RealImage expect = parity_flip(obj.field.intensity());
    for (std::size_t i = 0; i < expect.size(); ++i)
        REQUIRE(std::abs(set.images[0][i] - expect[i]) <= 1e-6 * (1.0 + expect[i]));
}

TEST_CASE("zero object gives zero captures")
{
    ObjectField zero;
    zero.field = ComplexField(40, Domain::object_plane);
    const auto set = capture(zero, plan_grid(50.0, 3, 8.0, 40));
    for (const auto& img : set.images)
        for (float v : img.pixels())
            CHECK(v == 0.0f);
}

TEST_CASE("capture checks sizes and planes")
{
    const auto obj = random_object(32, 2);
    OpticalGeometry g;
    g.grid_size = 64;
    CHECK_THROWS_AS(capture(obj, plan_grid(50.0, 3, 8.0, 32), g), DimensionError);
    ObjectField wrong = obj;
    wrong.field = obj.field.with_domain(Domain::fourier_plane);
    CHECK_THROWS_AS(capture(wrong, plan_grid(50.0, 3, 8.0, 32)), InputError);
}

TEST_CASE("captured energy is bounded by the object energy")
{
    const auto obj = random_object(48, 3);
    const double energy = obj.field.squared_norm();
    const auto set = capture(obj, plan_grid(40.0, 5, 10.0, 48));
    for (const auto& img : set.images) {
        double s = 0;
        for (float v : img.pixels())
            s += v;
        CHECK(s <= energy * (1 + 1e-6));
    }
    const auto full = capture(obj, std::vector<ApertureSpec>{{0, 0, 500.0}});
    double s = 0;
    for (float v : full.images[0].pixels())
        s += v;
    CHECK(s == doctest::Approx(energy).epsilon(1e-6));
}

TEST_CASE("scaling the object by alpha scales intensities by alpha squared")
{
    const auto obj = random_object(32, 4);
    ObjectField scaled = obj;
    for (auto& v : scaled.field.data())
        v *= 3.0;
    const auto grid = plan_grid(50.0, 3, 8.0, 32);
    const auto a = capture(obj, grid);
    const auto b = capture(scaled, grid);
    for (std::size_t k = 0; k < a.images.size(); ++k)
        for (std::size_t i = 0; i < a.images[k].size(); ++i)
            REQUIRE(std::abs(b.images[k][i] - 9.0 * a.images[k][i]) <= 1e-5 * (1.0 + 9.0 * a.images[k][i]));
}

TEST_CASE("add_noise")
{
    const auto obj = random_object(32, 5);
    const auto set = capture(obj, plan_grid(50.0, 3, 8.0, 32));

    SUBCASE("infinite SNR leaves images unchanged")
    {
        const auto out = add_noise(set, INFINITY, 1);
        CHECK(out.images == set.images);
        CHECK_FALSE(out.snr_db.has_value());
        CHECK_THROWS_AS(add_noise(set, NAN, 1), InputError);
    }
    SUBCASE("same seed gives the same realization, clamped and recorded")
    {
        const auto a = add_noise(set, 10.0, 77);
        const auto b = add_noise(set, 10.0, 77);
        const auto c = add_noise(set, 10.0, 78);
        CHECK(a.images == b.images);
        CHECK_FALSE(a.images == c.images);
        CHECK(*a.snr_db == 10.0);
        CHECK(a.seed == 77);
        for (const auto& img : a.images)
            for (float v : img.pixels())
                CHECK(v >= 0.0f);
    }
}

TEST_CASE("empirical SNR of the noise matches the request within 0.1 dB")
{
    const std::size_t n = 512;
    FloatImage img(n, n);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> u(0.0f, 2.0f);
    for (auto& v : img.pixels())
        v = u(rng);
    double power = 0;
    for (float v : img.pixels())
        power += double(v) * v;
    power /= img.size();
    for (double snr : {10.0, 20.0, 30.0}) {
        const double sigma = noise_sigma(img, snr);
        const auto noise = noise_realization(img.size(), sigma, image_noise_seed(123, 0));
        double mean = 0, var = 0;
        for (double e : noise)
            mean += e;
        mean /= noise.size();
        for (double e : noise)
            var += (e - mean) * (e - mean);
        var /= noise.size();
        CHECK(std::abs(10.0 * std::log10(power / var) - snr) < 0.1);
    }
}

TEST_CASE("added noise equals the documented per-image realization before clamping")
{
    const auto obj = random_object(32, 6);
    const auto set = capture(obj, plan_grid(50.0, 3, 8.0, 32));
    const auto noisy = add_noise(set, 20.0, 5);
    for (std::size_t k = 0; k < set.images.size(); ++k) {
        const auto e = noise_realization(set.images[k].size(), noise_sigma(set.images[k], 20.0), image_noise_seed(5, k));
        for (std::size_t i = 0; i < e.size(); ++i)
            REQUIRE(noisy.images[k][i] == static_cast<float>(std::max(0.0, double(set.images[k][i]) + e[i])));
    }
}

TEST_CASE("random patterns")
{
    const auto p = random_patterns(49, 4, 5, 99);
    REQUIRE(p.size() == 5);
    for (const auto& pat : p) {
        CHECK(pat.size() == 4);
        CHECK(std::set<std::size_t>(pat.begin(), pat.end()).size() == 4);
        for (auto q : pat)
            CHECK(q < 49);
    }
    CHECK(random_patterns(49, 4, 5, 99) == p);
    const auto shorter = random_patterns(49, 4, 3, 99);
    CHECK(std::equal(shorter.begin(), shorter.end(), p.begin()));
    CHECK_THROWS_AS(random_patterns(4, 5, 1, 0), InputError);
    CHECK_THROWS_AS(random_patterns(4, 1, 0, 0), InputError);
}

TEST_CASE("multiplexed capture with one aligned source reduces to 0 percent overlap capture")
{
    const auto obj = random_object(64, 7);
    const auto cameras = plan_grid(0.0, 3, 12.0, 64);
    const auto set = capture_multiplexed(obj, cameras, source_lattice(1, 0.0), {{0}}, 1);
    const auto seq = capture(obj, cameras);
    CHECK(set.images == seq.images);
    CHECK(set.apertures == seq.apertures);
    REQUIRE(set.multiplex_groups);
    for (std::size_t k = 0; k < set.multiplex_groups->size(); ++k)
        CHECK((*set.multiplex_groups)[k] == std::vector<std::size_t>{k});
}

TEST_CASE("multiplexed image of two disjoint apertures is the sum of the separate captures")
{
    // point-symmetric object: o(x, y) = o(-x, -y)
    const std::size_t n = 64;
    auto obj = random_object(n, 8);
    ComplexField sym(n, Domain::object_plane);
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
            const std::size_t mx = (n - x) % n, my = (n - y) % n;
            sym(x, y) = 0.5 * (obj.field(x, y) + obj.field(mx, my));
        }
    obj.field = sym;

    ApertureGrid camera = plan_grid(0.0, 1, 10.0, n);
    const std::vector<SourceOffset> sources = {{-12, 0}, {12, 0}};
    const auto mux = capture_multiplexed(obj, camera, sources, {{0, 1}}, 3);
    REQUIRE(mux.images.size() == 1);
    const RealImage a = band_limited(obj, {-12, 0, 10});
    const RealImage b = band_limited(obj, {12, 0, 10});
    for (std::size_t i = 0; i < a.size(); ++i)
        REQUIRE(mux.images[0][i] == static_cast<float>(a[i] + b[i]));
    CHECK(mux.apertures == std::vector<ApertureSpec>{{-12, 0, 10}, {12, 0, 10}});
}

TEST_CASE("multiplexed capture with singleton groups matches sequential capture image for image")
{
    const auto obj = random_object(64, 9);
    const auto cameras = plan_grid(0.0, 3, 12.0, 64);
    const auto sources = source_lattice(3, 4.0);
    const auto set = capture_multiplexed(obj, cameras, sources, random_patterns(9, 1, 2, 4), 4);
    const auto seq = capture(obj, set.apertures);
    for (std::size_t k = 0; k < set.images.size(); ++k) {
        REQUIRE((*set.multiplex_groups)[k].size() == 1);
        CHECK(set.images[k] == seq.images[(*set.multiplex_groups)[k][0]]);
    }
    CHECK(set.pattern_seed == 4);
    CHECK_NOTHROW(set.validate());
}

TEST_CASE("multiplexed capture rejects apertures pushed off the plane")
{
    const auto obj = random_object(32, 10);
    const auto cameras = plan_grid(0.0, 3, 8.0, 32);
    CHECK_THROWS_AS(capture_multiplexed(obj, cameras, source_lattice(3, 6.0), {{0}}, 1), GeometryError);
    CHECK_THROWS_AS(capture_multiplexed(obj, cameras, source_lattice(1, 0.0), {{3}}, 1), InputError);
    CHECK_THROWS_AS(capture_multiplexed(obj, cameras, source_lattice(1, 0.0), {}, 1), InputError);
}

TEST_CASE("capture set validation")
{
    CaptureSet set;
    CHECK_THROWS_AS(set.validate(), InputError);
    set.images.push_back(FloatImage(8, 8));
    CHECK_THROWS_AS(set.validate(), InputError); // no aperture
    set.apertures.push_back({0, 0, 4});
    CHECK_NOTHROW(set.validate());
    set.multiplex_groups = MultiplexGroups{{1}};
    CHECK_THROWS_AS(set.validate(), InputError);
    set.multiplex_groups = MultiplexGroups{{}};
    CHECK_THROWS_AS(set.validate(), InputError);
    set.multiplex_groups.reset();
    set.images.push_back(FloatImage(8, 9));
    set.apertures.push_back({0, 0, 4});
    CHECK_THROWS_AS(set.validate(), DimensionError);
}
