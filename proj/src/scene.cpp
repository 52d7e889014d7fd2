#include "macrofp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace macrofp {

ResolutionChartSpec ResolutionChartSpec::paper()
{
    return descending(512, 20);
}

ResolutionChartSpec ResolutionChartSpec::descending(std::size_t n, int coarsest)
{
    ResolutionChartSpec spec;
    spec.grid_size = n;
    for (int w = coarsest; w >= 1; --w)
        spec.group_widths.push_back(w);
    return spec;
}

const char* to_string(PhaseModel model)
{
    return model == PhaseModel::flat ? "flat" : "random-uniform";
}

namespace {

std::size_t group_padding(int w) { return static_cast<std::size_t>(std::max(2, (w + 1) / 2)); }

struct Shelf
{
    std::size_t x;
    std::size_t y;
    std::size_t height;
    int first_width;
};

void validate(const ResolutionChartSpec& spec)
{
    if (spec.grid_size == 0)
        throw DimensionError("chart grid size must be positive");
    if (spec.group_widths.empty())
        throw LayoutError("chart needs at least one bar group");
    if (spec.bars_per_group < 2)
        throw LayoutError("a bar group needs at least one white and one black bar");
    for (std::size_t i = 0; i < spec.group_widths.size(); ++i) {
        if (spec.group_widths[i] < 1)
            throw LayoutError("bar widths must be at least 1 pixel");
        if (i > 0 && spec.group_widths[i] >= spec.group_widths[i - 1])
            throw LayoutError("bar widths must be strictly decreasing");
    }
}

} // namespace

std::vector<BarGroup> chart_layout(const ResolutionChartSpec& spec)
{
    validate(spec);
    const std::size_t n = spec.grid_size;
    const std::size_t limit = n >= spec.margin ? n - spec.margin : 0;
    const bool both = spec.orientation == BarOrientation::both;

    std::vector<Shelf> shelves;
    std::vector<BarGroup> groups;
    for (const int w : spec.group_widths) {
        const auto uw = static_cast<std::size_t>(w);
        const std::size_t side = static_cast<std::size_t>(spec.bars_per_group) * uw;
        const std::size_t gap = both ? static_cast<std::size_t>(std::max(2, w)) : 0;
        const std::size_t fw = both ? 2 * side + gap : side;
        const std::size_t fh = side;

        BarGroup g;
        g.bar_width = w;
        g.width = fw;
        g.height = fh;

        bool placed = false;
        for (auto& shelf : shelves) {
            if (shelf.x + fw <= limit && fh <= shelf.height) {
                g.x0 = shelf.x;
                g.y0 = shelf.y;
                shelf.x += fw + group_padding(w);
                placed = true;
                break;
            }
        }
        if (!placed) {
            const std::size_t y = shelves.empty()
                                      ? spec.margin
                                      : shelves.back().y + shelves.back().height +
                                            group_padding(shelves.back().first_width);
            if (y + fh > limit || spec.margin + fw > limit)
                throw LayoutError("bar group of width " + std::to_string(w) +
                                  " px does not fit on a " + std::to_string(n) + " px chart");
            g.x0 = spec.margin;
            g.y0 = y;
            shelves.push_back({spec.margin + fw + group_padding(w), y, fh, w});
        }

        // Pattern bars: even index white, odd index black.
        const auto add = [&](std::size_t x0, std::size_t y0, std::size_t bw, std::size_t bh, bool white) {
            auto& set = white ? g.white : g.black;
            for (std::size_t y = y0; y < y0 + bh; ++y)
                for (std::size_t x = x0; x < x0 + bw; ++x)
                    set.push_back(y * n + x);
        };
        std::size_t block_x = g.x0;
        if (spec.orientation != BarOrientation::horizontal) {
            for (int b = 0; b < spec.bars_per_group; ++b)
                add(block_x + static_cast<std::size_t>(b) * uw, g.y0, uw, side, b % 2 == 0);
            block_x += side + gap;
        }
        if (spec.orientation != BarOrientation::vertical) {
            for (int b = 0; b < spec.bars_per_group; ++b)
                add(block_x, g.y0 + static_cast<std::size_t>(b) * uw, side, uw, b % 2 == 0);
        }
        std::sort(g.white.begin(), g.white.end());
        std::sort(g.black.begin(), g.black.end());
        groups.push_back(std::move(g));
    }
    return groups;
}

ObjectField make_chart(const ResolutionChartSpec& spec)
{
    ObjectField object;
    object.groups = chart_layout(spec);
    const std::size_t n = spec.grid_size;
    object.field = ComplexField(n, Domain::object_plane);
    auto data = object.field.data();
    std::fill(data.begin(), data.end(), spec.background);
    for (const auto& g : object.groups) {
        for (auto i : g.white)
            data[i] = spec.foreground;
        for (auto i : g.black)
            data[i] = spec.background;
    }
    object.phase_model = PhaseModel::flat;
    object.provenance = "chart";
    return object;
}

namespace {

void apply_phase(ComplexField& field, PhaseModel model, std::uint64_t seed)
{
    auto data = field.data();
    if (model == PhaseModel::flat) {
        for (auto& v : data)
            v = std::abs(v);
        return;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (auto& v : data)
        v = std::polar(std::abs(v), phase(rng));
}

} // namespace

ObjectField make_object_from_image(const RealImage& pixels, PhaseModel phase_model, std::uint64_t seed,
                                   std::string provenance)
{
    if (pixels.empty())
        throw DimensionError("image is empty");
    if (pixels.width() != pixels.height())
        throw DimensionError("object images must be square");
    double peak = 0.0;
    for (double v : pixels.pixels()) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InputError("image pixels must be finite and nonnegative");
        peak = std::max(peak, v);
    }

    RealImage amplitude = pixels;
    if (peak > 0.0)
        for (auto& v : amplitude.pixels())
            v /= peak;

    ObjectField object;
    object.field = ComplexField::from_real(amplitude, Domain::object_plane);
    apply_phase(object.field, phase_model, seed);
    object.phase_model = phase_model;
    object.seed = seed;
    object.provenance = std::move(provenance);
    return object;
}

ObjectField with_phase_model(const ObjectField& object, PhaseModel phase_model, std::uint64_t seed)
{
    ObjectField out = object;
    apply_phase(out.field, phase_model, seed);
    out.phase_model = phase_model;
    out.seed = seed;
    return out;
}

} // namespace macrofp
