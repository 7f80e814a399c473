#include "aggmorph/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "aggmorph/error.h"
#include "aggmorph/json_io.h"
#include "aggmorph/marker_registration.h"
#include "aggmorph/mask_io.h"
#include "aggmorph/masked_sfm.h"
#include "aggmorph/mesh_io.h"
#include "aggmorph/morphometry.h"
#include "aggmorph/silhouette.h"
#include "aggmorph/text_format.h"

namespace aggmorph {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

UnitFactors ParseUnits(std::string_view units) {
  if (units == "cm") return {1.0, 1.0, 1.0};
  if (units == "mm") return {0.1, 0.01, 0.001};
  // Exact powers of 2.54 so no factor carries extra rounding.
  if (units == "in") return {2.54, 6.4516, 16.387064};
  Fail(ErrorCode::kInvalidInput, "unknown units '" + std::string(units) + "' (cm, mm, in)");
}

namespace {

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void Emit(const std::optional<fs::path>& path, const std::string& content, std::ostream& out) {
  if (path) {
    WriteFileAtomic(*path, content);
  } else {
    out << content;
  }
}

TriangleMesh ScaleMesh(TriangleMesh mesh, double factor) {
  if (factor != 1.0) {
    for (Vec3& v : mesh.vertices) v *= factor;
  }
  return mesh;
}

ShapeMetrics3d MeshMetricsCm(const TriangleMesh& mesh, const UnitFactors& u) {
  return ScaleShapeMetrics(AnalyzeMesh(mesh), u.length, u.area, u.volume);
}

CsvTable ViewTable(const std::vector<ViewMetrics>& views, int n_views, double elevation) {
  CsvTable t;
  t.header = {"view", "azimuth_deg", "elevation_deg", "area", "perimeter",
              "l_max", "l_min", "fer_2d", "circularity"};
  for (size_t k = 0; k < views.size(); ++k) {
    const ViewMetrics& v = views[k];
    t.rows.push_back({std::to_string(k), FormatDouble(360.0 * k / n_views), FormatDouble(elevation),
                      FormatDouble(v.area), FormatDouble(v.perimeter), FormatDouble(v.l_max),
                      FormatDouble(v.l_min), FormatDouble(v.fer_2d), FormatDouble(v.circularity)});
  }
  return t;
}

struct MaskViews {
  std::vector<std::string> names;
  std::vector<ViewMetrics> metrics;
};

MaskViews AnalyzeMaskDir(const fs::path& dir, std::optional<double> pitch) {
  if (!fs::is_directory(dir)) Fail(ErrorCode::kIoError, "'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && Lower(entry.path().extension().string()) == ".pgm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) Fail(ErrorCode::kEmptyInput, "no .pgm masks in '" + dir.string() + "'");
  MaskViews out;
  for (const fs::path& f : files) {
    RasterMask mask = ReadMask(f);
    mask.pixel_pitch = pitch;
    try {
      out.metrics.push_back(AnalyzeSilhouette(TraceBoundary(mask)));
    } catch (const Error& e) {
      Fail(e.code(), f.string() + ": " + e.detail());
    }
    out.names.push_back(f.filename().string());
  }
  return out;
}

CsvTable MaskTable(const MaskViews& views, bool cm) {
  CsvTable t;
  t.header = {"mask", "units", "area", "perimeter", "l_max", "l_min", "fer_2d", "circularity"};
  for (size_t k = 0; k < views.names.size(); ++k) {
    const ViewMetrics& v = views.metrics[k];
    t.rows.push_back({views.names[k], cm ? "cm" : "px", FormatDouble(v.area),
                      FormatDouble(v.perimeter), FormatDouble(v.l_max), FormatDouble(v.l_min),
                      FormatDouble(v.fer_2d), FormatDouble(v.circularity)});
  }
  return t;
}

Json MatrixJson(const Mat3& m) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(Json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}

Json Vec3Json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

struct StitchOutput {
  StitchResult result;
  MarkerDocument doc_a;
};

StitchOutput StitchClouds(const fs::path& a, const fs::path& b, const fs::path& markers) {
  const StitchMarkers m = ParseStitchMarkersJson(ReadFile(markers));
  const std::vector<Vec3> cloud_a = ReadPointCloud(a);
  const std::vector<Vec3> cloud_b = ReadPointCloud(b);
  const auto markers_a = ResolveObjectMarkers(m.a);
  const auto markers_b = ResolveObjectMarkers(m.b);
  StitchOutput out;
  out.result = Stitch(cloud_a, cloud_b, markers_a, markers_b);
  out.doc_a = m.a;
  return out;
}

std::string StitchReport(const StitchResult& r) {
  Json j;
  j["scale"] = r.b_to_a.scale;
  j["rotation"] = MatrixJson(r.b_to_a.rotation);
  j["translation"] = Vec3Json(r.b_to_a.translation);
  j["marker_rms"] = r.marker_rms;
  Json res = Json::array();
  for (const auto& x : r.residuals) {
    res.push_back({{"label", x.label}, {"role", std::string(MarkerRoleName(x.role))}, {"distance", x.distance}});
  }
  j["residuals"] = res;
  j["merged_points"] = r.merged.size();
  return j.dump(2) + "\n";
}

std::string CalibrationReport(const ScaleCalibration& c) {
  Json j;
  j["scale_cm_per_unit"] = c.scale;
  Json pairs = Json::array();
  for (const auto& p : c.residuals) {
    pairs.push_back({{"a_label", p.a_label}, {"b_label", p.b_label}, {"local_distance", p.local_distance},
                     {"known_cm", p.known_cm}, {"residual_cm", p.residual_cm}});
  }
  j["pairs"] = pairs;
  return j.dump(2) + "\n";
}

std::vector<KnownDistance> ReadDistances(const fs::path& path) {
  std::string text = ReadFile(path);
  const size_t first = text.find_first_not_of(" \t\r\n");
  // A bare array is accepted as shorthand for {"known_distances": [...]}.
  if (first != std::string::npos && text[first] == '[') text = "{\"known_distances\": " + text + "}";
  return ParseMarkerJson(text).known_distances;
}

Json BundleReportJson(const BundleResult& r, const SceneDocument& doc) {
  Json j;
  j["iterations"] = r.report.iterations;
  j["accepted_steps"] = r.report.accepted_steps;
  j["rejected_steps"] = r.report.rejected_steps;
  j["initial_objective"] = r.report.initial_objective;
  j["final_objective"] = r.report.final_objective;
  j["termination"] = std::string(TerminationName(r.report.termination));
  double weight = 0;
  for (const auto& o : r.scene.observations) weight += o.weight;
  j["final_rms_px"] = weight > 0 ? std::sqrt(r.report.final_objective / weight) : 0.0;
  Json acc = Json::array();
  for (double v : r.report.accepted_objectives) acc.push_back(v);
  j["accepted_objectives"] = acc;
  if (doc.true_points && doc.true_points->size() == r.scene.points.size() && r.scene.points.size() >= 3) {
    const SimilarityEstimate est = EstimateSimilarity(r.scene.points, *doc.true_points);
    j["point_rms_after_alignment"] = est.rms;
  }
  return j;
}

BundleResult RunBundle(const SceneDocument& doc, const BundleOptions& options) {
  return BundleAdjust(doc.scene, options);
}

// Manifest --------------------------------------------------------------

struct SampleEntry {
  std::string id;
  std::optional<fs::path> mesh;
  std::optional<double> measured_cm3;
  std::optional<fs::path> masks;
  std::optional<double> pixel_pitch;
  std::vector<fs::path> clouds;
  std::optional<fs::path> markers;
  std::optional<fs::path> scene;
};

struct Manifest {
  std::string units = "cm";
  int resolution = 512;
  int views = 12;
  double elevation = 35.0;
  fs::path output_dir;
  BundleOptions ba;
  std::vector<SampleEntry> samples;
};

Manifest ParseManifest(const fs::path& path) {
  const std::string text = ReadFile(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    Fail(ErrorCode::kMalformedRecord, path.string() + ": JSON syntax error at byte " + std::to_string(e.byte));
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  auto bad = [&](const std::string& what) -> void {
    Fail(ErrorCode::kMalformedRecord, path.string() + ": " + what);
  };

  Manifest m;
  m.output_dir = base / "aggmorph_out";
  try {
    if (!j.is_object()) bad("manifest must be an object");
    if (j.contains("settings")) {
      const Json& s = j["settings"];
      if (s.contains("units")) m.units = s["units"].get<std::string>();
      if (s.contains("resolution")) m.resolution = s["resolution"].get<int>();
      if (s.contains("views")) m.views = s["views"].get<int>();
      if (s.contains("elevation")) m.elevation = s["elevation"].get<double>();
      if (s.contains("output_dir")) m.output_dir = resolve(s["output_dir"].get<std::string>());
      if (s.contains("ba")) {
        const Json& b = s["ba"];
        if (b.contains("max_iterations")) m.ba.max_iterations = b["max_iterations"].get<int>();
        if (b.contains("optimize_intrinsics")) m.ba.optimize_intrinsics = b["optimize_intrinsics"].get<bool>();
      }
    }
    ParseUnits(m.units);
    if (!j.contains("samples") || !j["samples"].is_array()) bad("missing 'samples' array");
    std::set<std::string> ids;
    for (const Json& e : j["samples"]) {
      SampleEntry s;
      s.id = e.at("id").get<std::string>();
      if (s.id.empty()) bad("empty sample id");
      if (s.id.find_first_of("/\\") != std::string::npos || s.id == "." || s.id == "..") {
        bad("sample id '" + s.id + "' is not a valid directory name");
      }
      if (!ids.insert(s.id).second) bad("duplicate sample id '" + s.id + "'");
      if (e.contains("mesh")) s.mesh = resolve(e["mesh"].get<std::string>());
      if (e.contains("measured_cm3")) s.measured_cm3 = e["measured_cm3"].get<double>();
      if (e.contains("masks")) s.masks = resolve(e["masks"].get<std::string>());
      if (e.contains("pixel_pitch")) s.pixel_pitch = e["pixel_pitch"].get<double>();
      if (e.contains("clouds")) {
        for (const Json& c : e["clouds"]) s.clouds.push_back(resolve(c.get<std::string>()));
        if (s.clouds.size() != 2) bad("sample '" + s.id + "': 'clouds' needs exactly two paths");
      }
      if (e.contains("markers")) s.markers = resolve(e["markers"].get<std::string>());
      if (e.contains("scene")) s.scene = resolve(e["scene"].get<std::string>());
      if (!s.clouds.empty() && !s.markers) bad("sample '" + s.id + "': 'clouds' requires 'markers'");
      m.samples.push_back(std::move(s));
    }
  } catch (const Json::exception& e) {
    bad(std::string("invalid manifest field: ") + e.what());
  }
  return m;
}

struct SampleOutcome {
  std::optional<MorphologyRecord> record;
  std::optional<VolumePair> pair;
  std::vector<std::string> artifacts;
  std::string error;
};

int ThreadCount(size_t jobs) {
  int n = 0;
  if (const char* env = std::getenv("AGGMORPH_THREADS")) n = std::atoi(env);
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(std::min<size_t>(n, std::max<size_t>(jobs, 1)));
}

SampleOutcome ProcessSample(const SampleEntry& s, const Manifest& m, const fs::path& out_dir) {
  SampleOutcome o;
  const fs::path dir = out_dir / s.id;
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    WriteFileAtomic(dir / name, content);
    o.artifacts.push_back((fs::path(s.id) / name).generic_string());
  };
  const UnitFactors u = ParseUnits(m.units);

  std::optional<ShapeMetrics3d> shape;
  std::vector<ViewMetrics> views;
  if (s.mesh) {
    const TriangleMesh mesh = ReadMesh(*s.mesh);
    shape = MeshMetricsCm(mesh, u);
    write("metrics.json", FormatShapeMetricsJson(*shape, "cm"));
    if (!s.masks) {
      views = AnalyzeTurntableViews(ScaleMesh(mesh, u.length), m.views, m.elevation, m.resolution);
      write("views.csv", FormatCsv(ViewTable(views, m.views, m.elevation)));
    }
    if (s.measured_cm3) o.pair = VolumePair{s.id, *s.measured_cm3, shape->volume};
  }
  if (s.masks) {
    const MaskViews mv = AnalyzeMaskDir(*s.masks, s.pixel_pitch);
    write("views.csv", FormatCsv(MaskTable(mv, s.pixel_pitch.has_value())));
    views = mv.metrics;
  }
  if (shape && !views.empty()) {
    o.record = SummarizeSample(s.id, views, *shape);
    write("record.json", FormatRecordJson(*o.record));
  }
  if (!s.clouds.empty()) {
    StitchOutput st = StitchClouds(s.clouds[0], s.clouds[1], *s.markers);
    std::vector<Vec3> merged = st.result.merged;
    write("stitch.json", StitchReport(st.result));
    const auto background = ResolveBackgroundMarkers(st.doc_a);
    if (!background.empty() && !st.doc_a.known_distances.empty()) {
      const ScaleCalibration cal = CalibrateScale(background, st.doc_a.known_distances);
      for (Vec3& p : merged) p *= cal.scale;
      write("scale.json", CalibrationReport(cal));
    }
    WritePointCloud(dir / "merged.ply", merged);
    o.artifacts.push_back((fs::path(s.id) / "merged.ply").generic_string());
  }
  if (s.scene) {
    SceneDocument doc = ParseSceneJson(ReadFile(*s.scene));
    const BundleResult r = RunBundle(doc, m.ba);
    write("ba_report.json", BundleReportJson(r, doc).dump(2) + "\n");
    doc.scene = r.scene;
    write("ba_scene.json", FormatSceneJson(doc));
  }
  return o;
}

int RunManifest(const fs::path& manifest_path, const std::optional<fs::path>& out_override,
                std::ostream& out, std::ostream& err) {
  Manifest m = ParseManifest(manifest_path);
  if (out_override) m.output_dir = *out_override;
  for (const SampleEntry& s : m.samples) {
    std::vector<fs::path> refs;
    if (s.mesh) refs.push_back(*s.mesh);
    if (s.masks) refs.push_back(*s.masks);
    if (s.markers) refs.push_back(*s.markers);
    if (s.scene) refs.push_back(*s.scene);
    for (const auto& c : s.clouds) refs.push_back(c);
    for (const auto& p : refs) {
      if (!fs::exists(p)) {
        Fail(ErrorCode::kIoError, "sample '" + s.id + "': '" + p.string() + "' does not exist");
      }
    }
  }
  fs::create_directories(m.output_dir);

  std::vector<SampleOutcome> outcomes(m.samples.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= m.samples.size()) return;
      try {
        outcomes[i] = ProcessSample(m.samples[i], m, m.output_dir);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  const int threads = ThreadCount(m.samples.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Combined reports follow sample id order, never completion order.
  std::vector<size_t> order(m.samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return m.samples[a].id < m.samples[b].id; });

  bool failed = false;
  std::vector<MorphologyRecord> records;
  std::vector<VolumePair> pairs;
  Json summary;
  Json samples = Json::array();
  for (size_t i : order) {
    const SampleOutcome& o = outcomes[i];
    Json e;
    e["id"] = m.samples[i].id;
    if (!o.error.empty()) {
      failed = true;
      err << "error: sample '" << m.samples[i].id << "': " << o.error << "\n";
      e["status"] = "failed";
      e["error"] = o.error;
    } else {
      e["status"] = "ok";
      if (o.record) records.push_back(*o.record);
      if (o.pair) pairs.push_back(*o.pair);
    }
    Json arts = Json::array();
    for (const auto& a : o.artifacts) arts.push_back(a);
    e["artifacts"] = arts;
    samples.push_back(e);
  }
  summary["samples"] = samples;

  if (!records.empty()) {
    const fs::path rec_dir = m.output_dir / "records";
    fs::create_directories(rec_dir);
    for (const auto& r : records) WriteFileAtomic(rec_dir / (r.sample_id + ".json"), FormatRecordJson(r));
    const ComparisonTables t = BuildComparisonTables(records);
    WriteFileAtomic(m.output_dir / "fer_comparison.csv", FormatCsv(t.fer));
    WriteFileAtomic(m.output_dir / "roundness_comparison.csv", FormatCsv(t.roundness));
    WriteFileAtomic(m.output_dir / "envelope.csv", FormatCsv(t.envelope));
  }
  if (!pairs.empty()) {
    CsvTable pt;
    pt.header = {"sample_id", "measured_cm3", "reconstructed_cm3"};
    for (const auto& p : pairs) pt.rows.push_back({p.sample_id, FormatDouble(p.measured), FormatDouble(p.reconstructed)});
    WriteFileAtomic(m.output_dir / "pairs.csv", FormatCsv(pt));
    summary["mpe_percent"] = Mpe(pairs);
    summary["mape_percent"] = Mape(pairs);
  }
  const std::string summary_text = summary.dump(2) + "\n";
  WriteFileAtomic(m.output_dir / "summary.json", summary_text);
  out << summary_text;
  return failed ? kExitValidation : kExitOk;
}

}  // namespace

int RunCommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Aggregate morphology from reconstructed particles", "aggmorph"};
  app.require_subcommand(1);

  // analyze-mesh
  std::string am_mesh, am_units = "cm";
  std::optional<std::string> am_output;
  auto* am = app.add_subcommand("analyze-mesh", "3D metrics of a particle mesh");
  am->add_option("mesh", am_mesh, "OBJ or PLY mesh")->required();
  am->add_option("--units", am_units, "mesh length unit")->check(CLI::IsMember({"cm", "mm", "in"}));
  am->add_option("--output", am_output, "write JSON here instead of stdout");

  // silhouettes
  std::string sil_mesh, sil_units = "cm";
  int sil_views = 12, sil_resolution = 1024;
  double sil_elevation = 35.0;
  std::optional<std::string> sil_output, sil_record, sil_id;
  auto* sil = app.add_subcommand("silhouettes", "per-view 2D metrics of rendered turntable views");
  sil->add_option("mesh", sil_mesh, "OBJ or PLY mesh")->required();
  sil->add_option("--views", sil_views, "views per revolution")->check(CLI::Range(1, 3600));
  sil->add_option("--elevation", sil_elevation, "camera elevation in degrees")->check(CLI::Range(-89.0, 89.0));
  sil->add_option("--resolution", sil_resolution, "image size in pixels")->check(CLI::Range(16, 16384));
  sil->add_option("--units", sil_units, "mesh length unit")->check(CLI::IsMember({"cm", "mm", "in"}));
  sil->add_option("--output", sil_output, "write CSV here instead of stdout");
  sil->add_option("--record", sil_record, "also write a morphology record JSON");
  sil->add_option("--sample-id", sil_id, "record id (default: mesh file stem)");

  // analyze-masks
  std::string mask_dir;
  std::optional<double> mask_pitch;
  std::optional<std::string> mask_output;
  auto* masks = app.add_subcommand("analyze-masks", "per-mask 2D metrics of a directory of PGM masks");
  masks->add_option("dir", mask_dir, "directory of .pgm masks")->required();
  masks->add_option("--pixel-pitch", mask_pitch, "cm per pixel")->check(CLI::PositiveNumber);
  masks->add_option("--output", mask_output, "write CSV here instead of stdout");

  // stitch
  std::string st_a, st_b, st_markers, st_output;
  std::optional<std::string> st_report;
  auto* st = app.add_subcommand("stitch", "merge two partial clouds through shared object markers");
  st->add_option("cloud_a", st_a, "reference cloud")->required();
  st->add_option("cloud_b", st_b, "cloud mapped into the reference frame")->required();
  st->add_option("--markers", st_markers, "marker JSON {\"a\": ..., \"b\": ...}")->required();
  st->add_option("--output", st_output, "merged PLY")->required();
  st->add_option("--report", st_report, "write the residual report here instead of stdout");

  // calibrate
  std::string cal_markers;
  std::optional<std::string> cal_distances, cal_apply, cal_output;
  auto* cal = app.add_subcommand("calibrate", "scale factor from background markers");
  cal->add_option("--markers", cal_markers, "marker JSON")->required();
  cal->add_option("--distances", cal_distances, "known distances JSON (default: from --markers)");
  auto* apply_opt = cal->add_option("--apply", cal_apply, "cloud to rescale");
  cal->add_option("--output", cal_output, "rescaled cloud path")->needs(apply_opt);

  // ba
  std::string ba_scene, ba_output;
  int ba_iters = 100;
  bool ba_intrinsics = false;
  auto* ba = app.add_subcommand("ba", "masked bundle adjustment of a scene");
  ba->add_option("--scene", ba_scene, "scene JSON")->required();
  ba->add_option("--max-iters", ba_iters, "iteration cap")->check(CLI::Range(0, 1000000));
  ba->add_option("--output", ba_output, "refined scene JSON")->required();
  ba->add_flag("--intrinsics", ba_intrinsics, "also refine focal and principal point");

  // synth-scene
  int sy_views = 12, sy_points = 200;
  double sy_elevation = 35.0, sy_noise = 0.0, sy_distance = 10.0, sy_clutter = 0.0;
  uint64_t sy_seed = 0;
  std::vector<double> sy_axes{1.0, 1.5, 2.0};
  bool sy_perturb = false, sy_occlusion = false, sy_any_elevation = false;
  std::optional<std::string> sy_output;
  auto* sy = app.add_subcommand("synth-scene", "synthetic turntable scene with ground truth");
  sy->add_option("--views", sy_views, "views per revolution");
  sy->add_option("--elevation", sy_elevation, "camera elevation in degrees");
  sy->add_option("--noise", sy_noise, "pixel noise standard deviation");
  sy->add_option("--seed", sy_seed, "random seed");
  sy->add_option("--points", sy_points, "object point count")->check(CLI::Range(1, 10000000));
  sy->add_option("--distance", sy_distance, "camera distance");
  sy->add_option("--semi-axes", sy_axes, "object ellipsoid semi-axes a,b,c")->expected(3)->delimiter(',');
  sy->add_option("--clutter", sy_clutter, "zero-weight clutter as a fraction of observations");
  sy->add_flag("--perturb", sy_perturb, "perturb cameras and points for use as initialization");
  sy->add_flag("--occlusion", sy_occlusion, "drop back-facing observations");
  sy->add_flag("--any-elevation", sy_any_elevation, "allow elevations outside 30-45 degrees");
  sy->add_option("--output", sy_output, "write JSON here instead of stdout");

  // validate
  std::string va_pairs;
  std::optional<std::string> va_output;
  auto* va = app.add_subcommand("validate", "MPE and MAPE of reconstructed volumes");
  va->add_option("--pairs", va_pairs, "CSV sample_id,measured_cm3,reconstructed_cm3")->required();
  va->add_option("--output", va_output, "write JSON here instead of stdout");

  // compare
  std::string cmp_records;
  std::optional<std::string> cmp_output;
  auto* cmp = app.add_subcommand("compare", "2D-vs-3D comparison tables from record JSONs");
  cmp->add_option("--records", cmp_records, "directory of record JSON files")->required();
  cmp->add_option("--output-dir", cmp_output, "where to write the CSVs (default: records dir)");

  // run
  std::string run_manifest;
  std::optional<std::string> run_output;
  auto* run = app.add_subcommand("run", "full pipeline over a manifest");
  run->add_option("--manifest", run_manifest, "manifest JSON")->required();
  run->add_option("--output-dir", run_output, "override the manifest output directory");

  if (!args.empty() && !args[0].empty() && args[0][0] != '-') {
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == args[0];
    if (!known) {
      err << "error: unknown subcommand '" << args[0] << "'\n\n" << app.help();
      return kExitUsage;
    }
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    CLI::App* target = &app;
    for (auto* sub : app.get_subcommands()) target = sub;
    err << "error: " << e.what() << "\n\n" << target->help();
    return kExitUsage;
  }

  try {
    if (*am) {
      const UnitFactors u = ParseUnits(am_units);
      const ShapeMetrics3d m = MeshMetricsCm(ReadMesh(am_mesh), u);
      Emit(am_output, FormatShapeMetricsJson(m, "cm"), out);
    } else if (*sil) {
      const UnitFactors u = ParseUnits(sil_units);
      const TriangleMesh native = ReadMesh(sil_mesh);
      const std::vector<ViewMetrics> views =
          AnalyzeTurntableViews(ScaleMesh(native, u.length), sil_views, sil_elevation, sil_resolution);
      Emit(sil_output, FormatCsv(ViewTable(views, sil_views, sil_elevation)), out);
      if (sil_record) {
        const std::string id = sil_id ? *sil_id : fs::path(sil_mesh).stem().string();
        const MorphologyRecord rec = SummarizeSample(id, views, MeshMetricsCm(native, u));
        WriteFileAtomic(*sil_record, FormatRecordJson(rec));
      }
    } else if (*masks) {
      const MaskViews mv = AnalyzeMaskDir(mask_dir, mask_pitch);
      Emit(mask_output, FormatCsv(MaskTable(mv, mask_pitch.has_value())), out);
    } else if (*st) {
      const StitchOutput r = StitchClouds(st_a, st_b, st_markers);
      WritePointCloud(st_output, r.result.merged);
      Emit(st_report, StitchReport(r.result), out);
    } else if (*cal) {
      const MarkerDocument doc = ParseMarkerJson(ReadFile(cal_markers));
      const std::vector<KnownDistance> distances =
          cal_distances ? ReadDistances(*cal_distances) : doc.known_distances;
      const ScaleCalibration c = CalibrateScale(ResolveBackgroundMarkers(doc), distances);
      if (cal_apply) {
        if (!cal_output) Fail(ErrorCode::kInvalidInput, "--apply needs --output");
        std::vector<Vec3> cloud = ReadPointCloud(*cal_apply);
        for (Vec3& p : cloud) p *= c.scale;
        WritePointCloud(*cal_output, cloud);
      }
      out << CalibrationReport(c);
    } else if (*ba) {
      SceneDocument doc = ParseSceneJson(ReadFile(ba_scene));
      BundleOptions options;
      options.max_iterations = ba_iters;
      options.optimize_intrinsics = ba_intrinsics;
      const BundleResult r = RunBundle(doc, options);
      const Json report = BundleReportJson(r, doc);
      doc.scene = r.scene;
      WriteFileAtomic(ba_output, FormatSceneJson(doc));
      out << report.dump(2) << "\n";
    } else if (*sy) {
      TurntableConfig config;
      config.n_views = sy_views;
      config.elevation_deg = sy_elevation;
      config.pixel_noise_std = sy_noise;
      config.seed = sy_seed;
      config.camera_distance = sy_distance;
      config.occlusion = sy_occlusion;
      config.enforce_elevation_range = !sy_any_elevation;
      for (double a : sy_axes) {
        if (!(a > 0)) Fail(ErrorCode::kInvalidConfig, "semi-axes must be positive");
      }
      const std::vector<Vec3> pts =
          SampleEllipsoidPoints(sy_points, Vec3(sy_axes[0], sy_axes[1], sy_axes[2]), sy_seed);
      const TurntableScene ts = GenerateTurntableScene(config, pts);
      SceneDocument doc;
      doc.scene = ts.scene;
      if (sy_clutter > 0) {
        AddClutterObservations(doc.scene, sy_clutter, config.image_width, config.image_height, sy_seed + 2);
      }
      if (sy_perturb) {
        PerturbConfig pc;
        pc.seed = sy_seed + 1;
        doc.scene = PerturbScene(doc.scene, pc);
      }
      doc.true_cameras = ts.true_cameras;
      doc.true_points = ts.true_points;
      Emit(sy_output, FormatSceneJson(doc), out);
    } else if (*va) {
      const CsvTable t = ParseCsv(ReadFile(va_pairs));
      auto column = [&](const std::string& name) {
        const auto it = std::find(t.header.begin(), t.header.end(), name);
        if (it == t.header.end()) Fail(ErrorCode::kMalformedRecord, va_pairs + ": missing column '" + name + "'");
        return static_cast<size_t>(it - t.header.begin());
      };
      const size_t ci = column("sample_id"), cm = column("measured_cm3"), cr = column("reconstructed_cm3");
      std::vector<VolumePair> pairs;
      for (size_t r = 0; r < t.rows.size(); ++r) {
        const std::string ctx = va_pairs + ": record " + std::to_string(r + 2);
        pairs.push_back({t.rows[r][ci], ParseDouble(t.rows[r][cm], ctx), ParseDouble(t.rows[r][cr], ctx)});
      }
      Json j;
      j["count"] = pairs.size();
      j["mpe_percent"] = Mpe(pairs);
      j["mape_percent"] = Mape(pairs);
      Json samples = Json::array();
      for (const auto& p : pairs) {
        samples.push_back({{"sample_id", p.sample_id}, {"measured_cm3", p.measured},
                           {"reconstructed_cm3", p.reconstructed},
                           {"percent_error", 100.0 * (p.reconstructed - p.measured) / p.measured}});
      }
      j["samples"] = samples;
      Emit(va_output, j.dump(2) + "\n", out);
    } else if (*cmp) {
      const fs::path dir = cmp_records;
      if (!fs::is_directory(dir)) Fail(ErrorCode::kIoError, "'" + dir.string() + "' is not a directory");
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && Lower(entry.path().extension().string()) == ".json") {
          files.push_back(entry.path());
        }
      }
      std::sort(files.begin(), files.end());
      std::vector<MorphologyRecord> records;
      std::set<std::string> ids;
      for (const auto& f : files) {
        try {
          records.push_back(ParseRecordJson(ReadFile(f)));
        } catch (const Error& e) {
          Fail(e.code(), f.string() + ": " + e.detail());
        }
        if (!ids.insert(records.back().sample_id).second) {
          Fail(ErrorCode::kInvalidInput, f.string() + ": duplicate sample id '" + records.back().sample_id + "'");
        }
      }
      const ComparisonTables t = BuildComparisonTables(records);
      const fs::path out_dir = cmp_output ? fs::path(*cmp_output) : dir;
      fs::create_directories(out_dir);
      const std::pair<const char*, const CsvTable*> outputs[] = {
          {"fer_comparison.csv", &t.fer}, {"roundness_comparison.csv", &t.roundness}, {"envelope.csv", &t.envelope}};
      for (const auto& [name, table] : outputs) {
        WriteFileAtomic(out_dir / name, FormatCsv(*table));
        out << (out_dir / name).string() << "\n";
      }
    } else if (*run) {
      return RunManifest(run_manifest, run_output ? std::optional<fs::path>(*run_output) : std::nullopt, out, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace aggmorph
