#include "json_codec.hpp"

namespace macrofp::detail {

json to_json(const OpticalGeometry& g)
{
    return {{"wavelength_m", g.wavelength},         {"object_distance_m", g.object_distance},
            {"focal_length_m", g.focal_length},     {"aperture_diameter_m", g.aperture_diameter},
            {"object_extent_m", g.object_extent},   {"pixel_pitch_m", g.pixel_pitch},
            {"grid_size_px", g.grid_size}};
}

OpticalGeometry geometry_from_json(const json& j)
{
    OpticalGeometry g;
    g.wavelength = j.at("wavelength_m").get<double>();
    g.object_distance = j.at("object_distance_m").get<double>();
    g.focal_length = j.at("focal_length_m").get<double>();
    g.aperture_diameter = j.at("aperture_diameter_m").get<double>();
    g.object_extent = j.at("object_extent_m").get<double>();
    g.pixel_pitch = j.at("pixel_pitch_m").get<double>();
    g.grid_size = j.at("grid_size_px").get<std::size_t>();
    return g;
}

json to_json(const GridSummary& g)
{
    return {{"count_per_side", g.count},    {"step_samples", g.step},        {"diameter_samples", g.diameter},
            {"overlap_pct", g.nominal_overlap_pct}, {"realized_overlap", g.overlap}, {"sar", g.sar}};
}

GridSummary grid_from_json(const json& j)
{
    GridSummary g;
    g.count = j.at("count_per_side").get<int>();
    g.step = j.at("step_samples").get<double>();
    g.diameter = j.at("diameter_samples").get<double>();
    g.nominal_overlap_pct = j.at("overlap_pct").get<double>();
    g.overlap = j.at("realized_overlap").get<double>();
    g.sar = j.at("sar").get<double>();
    return g;
}

const char* orientation_name(BarOrientation o)
{
    switch (o) {
    case BarOrientation::vertical:
        return "vertical";
    case BarOrientation::horizontal:
        return "horizontal";
    case BarOrientation::both:
        break;
    }
    return "both";
}

BarOrientation parse_orientation(const std::string& name)
{
    if (name == "both")
        return BarOrientation::both;
    if (name == "vertical")
        return BarOrientation::vertical;
    if (name == "horizontal")
        return BarOrientation::horizontal;
    throw InputError("unknown bar orientation '" + name + "'");
}

PhaseModel parse_phase_model(const std::string& name)
{
    if (name == "flat")
        return PhaseModel::flat;
    if (name == "random-uniform" || name == "random")
        return PhaseModel::random_uniform;
    throw InputError("unknown phase model '" + name + "'");
}

json to_json(const ResolutionChartSpec& spec)
{
    return {{"grid_size_px", spec.grid_size},       {"group_widths_px", spec.group_widths},
            {"bars_per_group", spec.bars_per_group}, {"orientation", orientation_name(spec.orientation)},
            {"foreground", spec.foreground},         {"background", spec.background},
            {"margin_px", spec.margin}};
}

ResolutionChartSpec chart_from_json(const json& j)
{
    ResolutionChartSpec spec;
    spec.grid_size = j.at("grid_size_px").get<std::size_t>();
    spec.group_widths = j.at("group_widths_px").get<std::vector<int>>();
    spec.bars_per_group = j.at("bars_per_group").get<int>();
    spec.orientation = parse_orientation(j.at("orientation").get<std::string>());
    spec.foreground = j.at("foreground").get<double>();
    spec.background = j.at("background").get<double>();
    spec.margin = j.at("margin_px").get<std::size_t>();
    return spec;
}

json to_json(const ApertureSpec& ap) { return json::array({ap.cx, ap.cy, ap.diameter}); }

ApertureSpec aperture_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 3)
        throw InputError("aperture entries must be [cx, cy, diameter]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

} // namespace macrofp::detail
