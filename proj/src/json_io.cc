#include "aggmorph/json_io.h"

#include <set>

#include <json.hpp>

#include "aggmorph/error.h"

namespace aggmorph {
namespace {

using Json = nlohmann::ordered_json;

Json Parse(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    Fail(ErrorCode::kMalformedRecord, "JSON syntax error at byte " + std::to_string(e.byte));
  }
}

[[noreturn]] void Bad(const std::string& where, const std::string& what) {
  Fail(ErrorCode::kMalformedRecord, where + ": " + what);
}

const Json& Member(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) Bad(where, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) Bad(where, std::string("missing '") + key + "'");
  return *it;
}

double Number(const Json& j, const std::string& where) {
  if (!j.is_number()) Bad(where, "expected a number");
  return j.get<double>();
}

int Integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) Bad(where, "expected an integer");
  return j.get<int>();
}

std::string String(const Json& j, const std::string& where) {
  if (!j.is_string()) Bad(where, "expected a string");
  return j.get<std::string>();
}

template <int N>
Eigen::Matrix<double, N, 1> Vector(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != N) Bad(where, "expected " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = Number(j[i], where);
  return v;
}

const Json& ArrayMember(const Json& j, const char* key, const std::string& where) {
  const Json& a = Member(j, key, where);
  if (!a.is_array()) Bad(where + "." + key, "expected an array");
  return a;
}

template <typename V>
Json ToArray(const V& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json CameraToJson(const CameraParams& c) {
  Json j;
  j["focal"] = c.focal;
  j["principal"] = ToArray(c.principal);
  j["rotation"] = ToArray(c.rotation);
  j["translation"] = ToArray(c.translation);
  return j;
}

CameraParams CameraFromJson(const Json& j, const std::string& where) {
  CameraParams c;
  c.focal = Number(Member(j, "focal", where), where + ".focal");
  c.principal = Vector<2>(Member(j, "principal", where), where + ".principal");
  c.rotation = Vector<3>(Member(j, "rotation", where), where + ".rotation");
  c.translation = Vector<3>(Member(j, "translation", where), where + ".translation");
  return c;
}

std::vector<CameraParams> CamerasFromJson(const Json& j, const std::string& where) {
  std::vector<CameraParams> out;
  const Json& arr = ArrayMember(j, "cameras", where);
  for (size_t i = 0; i < arr.size(); ++i) {
    out.push_back(CameraFromJson(arr[i], where + ".cameras[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<Vec3> PointsFromJson(const Json& j, const std::string& where) {
  std::vector<Vec3> out;
  const Json& arr = ArrayMember(j, "points", where);
  for (size_t i = 0; i < arr.size(); ++i) {
    out.push_back(Vector<3>(arr[i], where + ".points[" + std::to_string(i) + "]"));
  }
  return out;
}

Json ShapeToJson(const ShapeMetrics3d& m) {
  Json j;
  j["volume"] = m.volume;
  j["area"] = m.area;
  j["a"] = m.a;
  j["b"] = m.b;
  j["c"] = m.c;
  j["fer_3d"] = m.fer_3d;
  j["sphericity"] = m.sphericity;
  j["c_over_b"] = m.c_over_b;
  j["b_over_a"] = m.b_over_a;
  return j;
}

Json SummaryToJson(const IndicatorSummary& s) {
  Json j;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["min"] = s.min;
  j["max"] = s.max;
  j["std"] = s.std_dev ? Json(*s.std_dev) : Json(nullptr);
  j["cov"] = s.cov ? Json(*s.cov) : Json(nullptr);
  return j;
}

Json MarkerDocToJson(const MarkerDocument& doc) {
  Json j;
  Json om = Json::array();
  for (const auto& m : doc.object_markers) {
    Json e;
    e["label"] = m.label;
    e["head"] = ToArray(m.head);
    e["tail"] = ToArray(m.tail);
    om.push_back(e);
  }
  j["object_markers"] = om;
  Json bm = Json::array();
  for (const auto& m : doc.background_markers) {
    Json e;
    e["label"] = m.label;
    e["position"] = ToArray(m.position);
    bm.push_back(e);
  }
  j["background_markers"] = bm;
  Json kd = Json::array();
  for (const auto& d : doc.known_distances) {
    Json e;
    e["a_label"] = d.a_label;
    e["b_label"] = d.b_label;
    e["cm"] = d.cm;
    kd.push_back(e);
  }
  j["known_distances"] = kd;
  if (!doc.views.empty()) {
    Json views = Json::array();
    for (const auto& [id, v] : doc.views) {
      Json e;
      e["id"] = id;
      Json rows = Json::array();
      for (int r = 0; r < 3; ++r) rows.push_back(ToArray(Eigen::Vector4d(v.projection.row(r))));
      e["projection"] = rows;
      e["width"] = v.width;
      e["height"] = v.height;
      views.push_back(e);
    }
    j["views"] = views;
  }
  if (!doc.annotations.empty()) {
    Json anns = Json::array();
    for (const auto& a : doc.annotations) {
      Json e;
      e["view"] = a.view_id;
      e["marker"] = a.marker_label;
      e["role"] = std::string(MarkerRoleName(a.role));
      e["pixel"] = ToArray(a.pixel);
      anns.push_back(e);
    }
    j["annotations"] = anns;
  }
  return j;
}

MarkerDocument MarkerDocFromJson(const Json& j, const std::string& where) {
  if (!j.is_object()) Bad(where, "expected an object");
  MarkerDocument doc;
  if (j.contains("object_markers")) {
    const Json& arr = ArrayMember(j, "object_markers", where);
    for (size_t i = 0; i < arr.size(); ++i) {
      const std::string w = where + ".object_markers[" + std::to_string(i) + "]";
      ObjectMarker m;
      m.label = String(Member(arr[i], "label", w), w + ".label");
      m.head = Vector<3>(Member(arr[i], "head", w), w + ".head");
      m.tail = Vector<3>(Member(arr[i], "tail", w), w + ".tail");
      doc.object_markers.push_back(m);
    }
  }
  if (j.contains("background_markers")) {
    const Json& arr = ArrayMember(j, "background_markers", where);
    for (size_t i = 0; i < arr.size(); ++i) {
      const std::string w = where + ".background_markers[" + std::to_string(i) + "]";
      BackgroundMarker m;
      m.label = String(Member(arr[i], "label", w), w + ".label");
      m.position = Vector<3>(Member(arr[i], "position", w), w + ".position");
      doc.background_markers.push_back(m);
    }
  }
  if (j.contains("known_distances")) {
    const Json& arr = ArrayMember(j, "known_distances", where);
    for (size_t i = 0; i < arr.size(); ++i) {
      const std::string w = where + ".known_distances[" + std::to_string(i) + "]";
      KnownDistance d;
      d.a_label = String(Member(arr[i], "a_label", w), w + ".a_label");
      d.b_label = String(Member(arr[i], "b_label", w), w + ".b_label");
      d.cm = Number(Member(arr[i], "cm", w), w + ".cm");
      doc.known_distances.push_back(d);
    }
  }
  if (j.contains("views")) {
    const Json& arr = ArrayMember(j, "views", where);
    for (size_t i = 0; i < arr.size(); ++i) {
      const std::string w = where + ".views[" + std::to_string(i) + "]";
      AnnotatedView v;
      const int id = Integer(Member(arr[i], "id", w), w + ".id");
      const Json& rows = Member(arr[i], "projection", w);
      if (!rows.is_array() || rows.size() != 3) Bad(w + ".projection", "expected 3 rows");
      for (int r = 0; r < 3; ++r) v.projection.row(r) = Vector<4>(rows[r], w + ".projection").transpose();
      v.width = Integer(Member(arr[i], "width", w), w + ".width");
      v.height = Integer(Member(arr[i], "height", w), w + ".height");
      if (!doc.views.emplace(id, v).second) Bad(w, "duplicate view id " + std::to_string(id));
    }
  }
  if (j.contains("annotations")) {
    const Json& arr = ArrayMember(j, "annotations", where);
    for (size_t i = 0; i < arr.size(); ++i) {
      const std::string w = where + ".annotations[" + std::to_string(i) + "]";
      MarkerAnnotation a;
      a.view_id = Integer(Member(arr[i], "view", w), w + ".view");
      a.marker_label = String(Member(arr[i], "marker", w), w + ".marker");
      try {
        a.role = ParseMarkerRole(String(Member(arr[i], "role", w), w + ".role"));
      } catch (const Error& e) {
        Bad(w + ".role", e.detail());
      }
      a.pixel = Vector<2>(Member(arr[i], "pixel", w), w + ".pixel");
      doc.annotations.push_back(a);
    }
  }
  return doc;
}

// Groups annotations by (label, role) and triangulates each group.
std::map<std::pair<std::string, MarkerRole>, Vec3> Triangulate(const MarkerDocument& doc) {
  std::map<std::pair<std::string, MarkerRole>, std::vector<MarkerAnnotation>> groups;
  for (const auto& a : doc.annotations) groups[{a.marker_label, a.role}].push_back(a);
  std::map<std::pair<std::string, MarkerRole>, Vec3> out;
  for (const auto& [key, anns] : groups) {
    try {
      out[key] = LocalizeMarker(anns, doc.views).position;
    } catch (const Error& e) {
      Fail(e.code(), "marker '" + key.first + "' (" + std::string(MarkerRoleName(key.second)) +
                         "): " + e.detail());
    }
  }
  return out;
}

}  // namespace

std::string FormatSceneJson(const SceneDocument& doc) {
  Json j;
  Json cams = Json::array();
  for (const auto& c : doc.scene.cameras) cams.push_back(CameraToJson(c));
  j["cameras"] = cams;
  Json pts = Json::array();
  for (const auto& p : doc.scene.points) pts.push_back(ToArray(p));
  j["points"] = pts;
  Json obs = Json::array();
  for (const auto& o : doc.scene.observations) {
    Json e;
    e["camera"] = o.camera;
    e["point"] = o.point;
    e["pixel"] = ToArray(o.pixel);
    e["weight"] = o.weight;
    obs.push_back(e);
  }
  j["observations"] = obs;
  if (doc.true_cameras || doc.true_points) {
    Json gt;
    if (doc.true_cameras) {
      Json tc = Json::array();
      for (const auto& c : *doc.true_cameras) tc.push_back(CameraToJson(c));
      gt["cameras"] = tc;
    }
    if (doc.true_points) {
      Json tp = Json::array();
      for (const auto& p : *doc.true_points) tp.push_back(ToArray(p));
      gt["points"] = tp;
    }
    j["ground_truth"] = gt;
  }
  return j.dump(2) + "\n";
}

SceneDocument ParseSceneJson(std::string_view text) {
  const Json j = Parse(text);
  SceneDocument doc;
  doc.scene.cameras = CamerasFromJson(j, "scene");
  doc.scene.points = PointsFromJson(j, "scene");
  const Json& obs = ArrayMember(j, "observations", "scene");
  for (size_t i = 0; i < obs.size(); ++i) {
    const std::string w = "scene.observations[" + std::to_string(i) + "]";
    Observation o;
    o.camera = Integer(Member(obs[i], "camera", w), w + ".camera");
    o.point = Integer(Member(obs[i], "point", w), w + ".point");
    o.pixel = Vector<2>(Member(obs[i], "pixel", w), w + ".pixel");
    if (obs[i].contains("weight")) o.weight = Number(obs[i]["weight"], w + ".weight");
    doc.scene.observations.push_back(o);
  }
  if (j.contains("ground_truth")) {
    const Json& gt = j["ground_truth"];
    if (!gt.is_object()) Bad("scene.ground_truth", "expected an object");
    if (gt.contains("cameras")) doc.true_cameras = CamerasFromJson(gt, "scene.ground_truth");
    if (gt.contains("points")) doc.true_points = PointsFromJson(gt, "scene.ground_truth");
  }
  ValidateScene(doc.scene);
  return doc;
}

std::string FormatMarkerJson(const MarkerDocument& doc) { return MarkerDocToJson(doc).dump(2) + "\n"; }

MarkerDocument ParseMarkerJson(std::string_view text) { return MarkerDocFromJson(Parse(text), "markers"); }

StitchMarkers ParseStitchMarkersJson(std::string_view text) {
  const Json j = Parse(text);
  StitchMarkers out;
  out.a = MarkerDocFromJson(Member(j, "a", "markers"), "markers.a");
  out.b = MarkerDocFromJson(Member(j, "b", "markers"), "markers.b");
  return out;
}

std::vector<ObjectMarker> ResolveObjectMarkers(const MarkerDocument& doc) {
  std::vector<ObjectMarker> out = doc.object_markers;
  std::set<std::string> have;
  for (const auto& m : out) have.insert(m.label);
  const auto located = Triangulate(doc);
  std::set<std::string> labels;
  for (const auto& [key, pos] : located) {
    if (key.second != MarkerRole::kCenter) labels.insert(key.first);
  }
  for (const auto& label : labels) {
    if (have.count(label)) continue;
    const auto head = located.find({label, MarkerRole::kHead});
    const auto tail = located.find({label, MarkerRole::kTail});
    if (head == located.end() || tail == located.end()) {
      Fail(ErrorCode::kMissingLabel, "marker '" + label + "' needs both head and tail annotations");
    }
    out.push_back({label, head->second, tail->second});
  }
  return out;
}

std::vector<BackgroundMarker> ResolveBackgroundMarkers(const MarkerDocument& doc) {
  std::vector<BackgroundMarker> out = doc.background_markers;
  std::set<std::string> have;
  for (const auto& m : out) have.insert(m.label);
  for (const auto& [key, pos] : Triangulate(doc)) {
    if (key.second == MarkerRole::kCenter && !have.count(key.first)) out.push_back({key.first, pos});
  }
  return out;
}

std::string FormatRecordJson(const MorphologyRecord& record) {
  Json j;
  j["sample_id"] = record.sample_id;
  j["shape"] = ShapeToJson(record.shape);
  Json views = Json::array();
  for (const auto& v : record.views) {
    Json e;
    e["area"] = v.area;
    e["perimeter"] = v.perimeter;
    e["l_max"] = v.l_max;
    e["l_max_angle"] = v.l_max_angle;
    e["l_min"] = v.l_min;
    e["fer_2d"] = v.fer_2d;
    e["circularity"] = v.circularity;
    views.push_back(e);
  }
  j["views"] = views;
  j["fer_2d"] = SummaryToJson(record.fer_2d);
  j["circularity"] = SummaryToJson(record.circularity);
  return j.dump(2) + "\n";
}

MorphologyRecord ParseRecordJson(std::string_view text) {
  const Json j = Parse(text);
  const std::string id = String(Member(j, "sample_id", "record"), "record.sample_id");
  const Json& s = Member(j, "shape", "record");
  ShapeMetrics3d shape;
  auto num = [&](const char* key) { return Number(Member(s, key, "record.shape"), std::string("record.shape.") + key); };
  shape.volume = num("volume");
  shape.area = num("area");
  shape.a = num("a");
  shape.b = num("b");
  shape.c = num("c");
  shape.fer_3d = num("fer_3d");
  shape.sphericity = num("sphericity");
  shape.c_over_b = num("c_over_b");
  shape.b_over_a = num("b_over_a");
  std::vector<ViewMetrics> views;
  const Json& arr = ArrayMember(j, "views", "record");
  for (size_t i = 0; i < arr.size(); ++i) {
    const std::string w = "record.views[" + std::to_string(i) + "]";
    ViewMetrics v;
    v.area = Number(Member(arr[i], "area", w), w);
    v.perimeter = Number(Member(arr[i], "perimeter", w), w);
    v.l_max = Number(Member(arr[i], "l_max", w), w);
    v.l_max_angle = Number(Member(arr[i], "l_max_angle", w), w);
    v.l_min = Number(Member(arr[i], "l_min", w), w);
    v.fer_2d = Number(Member(arr[i], "fer_2d", w), w);
    v.circularity = Number(Member(arr[i], "circularity", w), w);
    views.push_back(v);
  }
  return SummarizeSample(id, views, shape);
}

std::string FormatShapeMetricsJson(const ShapeMetrics3d& metrics, std::string_view units) {
  Json j = ShapeToJson(metrics);
  j["units"] = std::string(units);
  return j.dump(2) + "\n";
}

}  // namespace aggmorph
