#pragma once

// JSON encodings shared by dataset manifests and run manifests.

#include <json.hpp>

#include "macrofp/capture.hpp"
#include "macrofp/scene.hpp"

namespace macrofp::detail {

using json = nlohmann::ordered_json;

json to_json(const OpticalGeometry& g);
OpticalGeometry geometry_from_json(const json& j);

json to_json(const GridSummary& g);
GridSummary grid_from_json(const json& j);

json to_json(const ResolutionChartSpec& spec);
ResolutionChartSpec chart_from_json(const json& j);

json to_json(const ApertureSpec& ap);
ApertureSpec aperture_from_json(const json& j);

const char* orientation_name(BarOrientation o);
BarOrientation parse_orientation(const std::string& name);
PhaseModel parse_phase_model(const std::string& name);

} // namespace macrofp::detail
