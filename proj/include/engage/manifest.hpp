#ifndef ENGAGE_MANIFEST_HPP
#define ENGAGE_MANIFEST_HPP

#include <filesystem>
#include <string>

#include "engage/data.hpp"

namespace engage {

// On-disk dataset layout:
//   <dir>/manifest.json          {"videos": [{video_id, subject_id, label,
//                                             features: {gaze|head|pose|c3d: relpath}}]}
//   <dir>/features/<id>_<mod>.csv  header "seg,f0,...", then one row per segment
//
// Unknown JSON keys are rejected; labels must be exactly one of
// 0.0|0.33|0.66|1.0; feature paths are relative to the manifest's
// directory. read_manifest(write_manifest(d)) reproduces d exactly,
// including label values and segment ordering.
std::filesystem::path write_manifest(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_manifest(const std::filesystem::path& manifest_path);

// Single-column CSV helpers shared with the CLI.
std::string format_double(double v);              // shortest exact round-trip
std::string format_double_17(double v);           // >= 17 significant digits
double parse_double(const std::string& text, const std::string& context);

} // namespace engage

#endif
