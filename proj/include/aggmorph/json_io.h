#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aggmorph/marker_registration.h"
#include "aggmorph/masked_sfm.h"
#include "aggmorph/morphometry.h"

namespace aggmorph {

// Scene interchange:
// {"cameras": [{"focal", "principal": [cx, cy], "rotation": [3], "translation": [3]}],
//  "points": [[x, y, z]],
//  "observations": [{"camera", "point", "pixel": [u, v], "weight"}],
//  "ground_truth": {"cameras": [...], "points": [...]}}   (optional)
struct SceneDocument {
  SfmScene scene;
  std::optional<std::vector<CameraParams>> true_cameras;
  std::optional<std::vector<Vec3>> true_points;
};

std::string FormatSceneJson(const SceneDocument& doc);
SceneDocument ParseSceneJson(std::string_view text);

// {"object_markers": [{"label", "head": [3], "tail": [3]}],
//  "background_markers": [{"label", "position": [3]}],
//  "known_distances": [{"a_label", "b_label", "cm"}],
//  "views": [{"id", "projection": [[4], [4], [4]], "width", "height"}],
//  "annotations": [{"view", "marker", "role", "pixel": [u, v]}]}
// Every key is optional.
struct MarkerDocument {
  std::vector<ObjectMarker> object_markers;
  std::vector<BackgroundMarker> background_markers;
  std::vector<KnownDistance> known_distances;
  std::map<int, AnnotatedView> views;
  std::vector<MarkerAnnotation> annotations;
};

std::string FormatMarkerJson(const MarkerDocument& doc);
MarkerDocument ParseMarkerJson(std::string_view text);

// Stitching input: {"a": <marker document>, "b": <marker document>}.
struct StitchMarkers {
  MarkerDocument a;
  MarkerDocument b;
};
StitchMarkers ParseStitchMarkersJson(std::string_view text);

// Object markers stated directly, plus any that can be triangulated from
// head/tail annotations (stated ones win).
std::vector<ObjectMarker> ResolveObjectMarkers(const MarkerDocument& doc);

// Background markers stated directly, plus those triangulated from
// center-role annotations.
std::vector<BackgroundMarker> ResolveBackgroundMarkers(const MarkerDocument& doc);

// Per-sample record; the summaries are recomputed from the views on read.
std::string FormatRecordJson(const MorphologyRecord& record);
MorphologyRecord ParseRecordJson(std::string_view text);

std::string FormatShapeMetricsJson(const ShapeMetrics3d& metrics, std::string_view units);

}  // namespace aggmorph
