#pragma once

// Dataset directories: a JSON manifest plus exact raw sample files, with
// 16-bit PNG previews for inspection.
//
//   <dir>/manifest.json
//   <dir>/images/NNNNN.f32     capture images (float32, little-endian)
//   <dir>/previews/NNNNN.png   capture previews
//   <dir>/object_re.f64, object_im.f64   object datasets

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "macrofp/capture.hpp"
#include "macrofp/scene.hpp"

namespace macrofp {

inline constexpr int dataset_format_version = 1;

/// Stage seeds and other labelled integers recorded alongside a dataset.
using SeedLog = std::map<std::string, std::uint64_t>;

struct DatasetOptions
{
    bool previews = true;
    SeedLog seeds;
};

void save_capture_set(const std::filesystem::path& dir, const CaptureSet& set, const DatasetOptions& options = {});

/// Loads and verifies every referenced file. Throws IoError when the
/// manifest is missing or malformed and ChecksumError naming the file whose
/// contents do not match.
CaptureSet load_capture_set(const std::filesystem::path& dir);

/// Saves an object field; chart objects also record their layout spec so
/// bar masks can be regenerated on load.
void save_object(const std::filesystem::path& dir, const ObjectField& object,
                 const std::optional<ResolutionChartSpec>& chart, const DatasetOptions& options = {});

struct LoadedObject
{
    ObjectField object;
    std::optional<ResolutionChartSpec> chart;
};

LoadedObject load_object(const std::filesystem::path& dir);

/// Human-readable summary of a verified dataset directory.
std::string describe_dataset(const std::filesystem::path& dir);

/// Kind recorded in a dataset manifest ("capture" or "object").
std::string dataset_kind(const std::filesystem::path& dir);

} // namespace macrofp
