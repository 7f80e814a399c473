#include "aggmorph/mesh_io.h"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "aggmorph/error.h"
#include "aggmorph/text_format.h"

namespace aggmorph {
namespace {

std::vector<std::string_view> SplitWs(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Iterates lines, tracking 1-based numbers; strips a trailing '\r'.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}
  bool Next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    const size_t end = text_.find('\n', pos_);
    const size_t stop = end == std::string_view::npos ? text_.size() : end;
    line = text_.substr(pos_, stop - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = stop == text_.size() ? stop : stop + 1;
    ++number_;
    return true;
  }
  int number() const { return number_; }
  size_t position() const { return pos_; }

 private:
  std::string_view text_;
  size_t pos_ = 0;
  int number_ = 0;
};

std::string LineContext(int line) { return "line " + std::to_string(line); }

long ParseInt(std::string_view s, const std::string& context) {
  long value = 0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    Fail(ErrorCode::kMalformedRecord, context + ": '" + std::string(s) + "' is not an integer");
  }
  return value;
}

}  // namespace

TriangleMesh ParseObj(std::string_view text) {
  TriangleMesh mesh;
  LineReader reader(text);
  std::string_view line;
  while (reader.Next(line)) {
    const auto tok = SplitWs(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    const std::string ctx = LineContext(reader.number());
    if (tok[0] == "v") {
      if (tok.size() < 4 || tok.size() > 5) {
        Fail(ErrorCode::kMalformedRecord, ctx + ": vertex needs 3 coordinates");
      }
      mesh.vertices.emplace_back(ParseDouble(tok[1], ctx), ParseDouble(tok[2], ctx),
                                 ParseDouble(tok[3], ctx));
    } else if (tok[0] == "f") {
      if (tok.size() < 4) Fail(ErrorCode::kMalformedRecord, ctx + ": face needs 3 vertices");
      if (tok.size() > 4) {
        Fail(ErrorCode::kNonTriangular,
             ctx + ": face with " + std::to_string(tok.size() - 1) + " vertices");
      }
      std::array<int, 3> f{};
      for (int k = 0; k < 3; ++k) {
        std::string_view ref = tok[k + 1];
        ref = ref.substr(0, ref.find('/'));
        long idx = ParseInt(ref, ctx);
        const long n = static_cast<long>(mesh.vertices.size());
        if (idx < 0) idx = n + idx + 1;
        if (idx < 1 || idx > n) {
          Fail(ErrorCode::kMalformedRecord, ctx + ": vertex reference " + std::string(tok[k + 1]) +
                                                " out of range");
        }
        f[k] = static_cast<int>(idx - 1);
      }
      mesh.faces.push_back(f);
    }
    // vn, vt, g, o, s, usemtl, mtllib: not geometry we need.
  }
  return mesh;
}

std::string FormatObj(const TriangleMesh& mesh) {
  std::string out;
  for (const Vec3& v : mesh.vertices) {
    out += "v " + FormatDouble(v.x()) + " " + FormatDouble(v.y()) + " " + FormatDouble(v.z()) + "\n";
  }
  for (const auto& f : mesh.faces) {
    out += "f " + std::to_string(f[0] + 1) + " " + std::to_string(f[1] + 1) + " " +
           std::to_string(f[2] + 1) + "\n";
  }
  return out;
}

namespace {

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

int TypeSize(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUint8: return 1;
    case PlyType::kInt16:
    case PlyType::kUint16: return 2;
    case PlyType::kInt32:
    case PlyType::kUint32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

PlyType ParsePlyType(std::string_view name, const std::string& ctx) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUint8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUint16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUint32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  Fail(ErrorCode::kMalformedRecord, ctx + ": unknown property type '" + std::string(name) + "'");
}

struct PlyProperty {
  std::string name;
  bool is_list = false;
  PlyType count_type = PlyType::kUint8;
  PlyType type = PlyType::kFloat32;
};

struct PlyElement {
  std::string name;
  long count = 0;
  std::vector<PlyProperty> properties;
};

double DecodeLE(const unsigned char* p, PlyType t) {
  uint64_t bits = 0;
  const int n = TypeSize(t);
  for (int i = 0; i < n; ++i) bits |= static_cast<uint64_t>(p[i]) << (8 * i);
  switch (t) {
    case PlyType::kInt8: return static_cast<int8_t>(bits);
    case PlyType::kUint8: return static_cast<uint8_t>(bits);
    case PlyType::kInt16: return static_cast<int16_t>(bits);
    case PlyType::kUint16: return static_cast<uint16_t>(bits);
    case PlyType::kInt32: return static_cast<int32_t>(bits);
    case PlyType::kUint32: return static_cast<uint32_t>(bits);
    case PlyType::kFloat32: return std::bit_cast<float>(static_cast<uint32_t>(bits));
    case PlyType::kFloat64: return std::bit_cast<double>(bits);
  }
  return 0;
}

void AppendLE(std::string& out, uint64_t bits, int n) {
  for (int i = 0; i < n; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xff);
}

}  // namespace

PlyData ParsePly(std::string_view bytes) {
  LineReader header(bytes);
  std::string_view line;
  if (!header.Next(line) || line != "ply") {
    Fail(ErrorCode::kUnsupportedFormat, "missing 'ply' magic");
  }
  bool binary = false;
  bool have_format = false;
  std::vector<PlyElement> elements;
  bool ended = false;
  while (header.Next(line)) {
    const std::string ctx = LineContext(header.number());
    const auto tok = SplitWs(line);
    if (tok.empty()) continue;
    if (tok[0] == "format") {
      if (tok.size() != 3) Fail(ErrorCode::kMalformedRecord, ctx + ": bad format line");
      if (tok[1] == "ascii") {
        binary = false;
      } else if (tok[1] == "binary_little_endian") {
        binary = true;
      } else {
        Fail(ErrorCode::kUnsupportedFormat, "PLY encoding '" + std::string(tok[1]) + "'");
      }
      have_format = true;
    } else if (tok[0] == "comment" || tok[0] == "obj_info") {
      continue;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) Fail(ErrorCode::kMalformedRecord, ctx + ": bad element line");
      PlyElement e;
      e.name = std::string(tok[1]);
      e.count = ParseInt(tok[2], ctx);
      if (e.count < 0) Fail(ErrorCode::kMalformedRecord, ctx + ": negative element count");
      elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (elements.empty()) Fail(ErrorCode::kMalformedRecord, ctx + ": property before element");
      PlyProperty p;
      if (tok.size() == 5 && tok[1] == "list") {
        p.is_list = true;
        p.count_type = ParsePlyType(tok[2], ctx);
        p.type = ParsePlyType(tok[3], ctx);
        p.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        p.type = ParsePlyType(tok[1], ctx);
        p.name = std::string(tok[2]);
      } else {
        Fail(ErrorCode::kMalformedRecord, ctx + ": bad property line");
      }
      elements.back().properties.push_back(std::move(p));
    } else if (tok[0] == "end_header") {
      ended = true;
      break;
    } else {
      Fail(ErrorCode::kMalformedRecord, ctx + ": unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!have_format) Fail(ErrorCode::kMalformedRecord, "PLY header has no format line");
  if (!ended) Fail(ErrorCode::kMalformedRecord, "PLY header has no end_header");

  PlyData data;
  const PlyElement* vertex = nullptr;
  int vx = -1, vy = -1, vz = -1;
  int face_prop = -1;
  for (const PlyElement& e : elements) {
    if (e.name == "vertex") {
      vertex = &e;
      for (size_t i = 0; i < e.properties.size(); ++i) {
        if (e.properties[i].is_list) continue;
        if (e.properties[i].name == "x") vx = static_cast<int>(i);
        if (e.properties[i].name == "y") vy = static_cast<int>(i);
        if (e.properties[i].name == "z") vz = static_cast<int>(i);
      }
    } else if (e.name == "face") {
      for (size_t i = 0; i < e.properties.size(); ++i) {
        if (e.properties[i].is_list &&
            (e.properties[i].name == "vertex_indices" || e.properties[i].name == "vertex_index")) {
          face_prop = static_cast<int>(i);
        }
      }
      if (e.count > 0 && face_prop < 0) {
        Fail(ErrorCode::kMalformedRecord, "face element has no vertex_indices list");
      }
    }
  }
  if (!vertex || vx < 0 || vy < 0 || vz < 0) {
    Fail(ErrorCode::kMalformedRecord, "PLY has no vertex element with x, y, z");
  }

  // One decoded element instance: a value list per property.
  auto consume = [&](const PlyElement& e, const std::vector<std::vector<double>>& props,
                     const std::string& ctx) {
    if (&e == vertex) {
      data.vertices.emplace_back(props[vx][0], props[vy][0], props[vz][0]);
    } else if (e.name == "face") {
      const auto& list = props[face_prop];
      if (list.size() != 3) {
        Fail(ErrorCode::kNonTriangular,
             ctx + ": face with " + std::to_string(list.size()) + " vertices");
      }
      std::array<int, 3> f{};
      for (int k = 0; k < 3; ++k) {
        if (list[k] != std::floor(list[k]) || list[k] < 0 || list[k] > 2147483647.0) {
          Fail(ErrorCode::kMalformedRecord, ctx + ": bad vertex index");
        }
        f[k] = static_cast<int>(list[k]);
      }
      data.faces.push_back(f);
    }
  };

  if (!binary) {
    LineReader body(bytes);
    std::string_view skip;
    for (int i = 0; i < header.number(); ++i) body.Next(skip);
    for (const PlyElement& e : elements) {
      for (long n = 0; n < e.count; ++n) {
        std::string_view row;
        do {
          if (!body.Next(row)) {
            Fail(ErrorCode::kMalformedRecord,
                 LineContext(body.number() + 1) + ": unexpected end of file in element '" + e.name + "'");
          }
        } while (SplitWs(row).empty());
        const std::string ctx = LineContext(body.number());
        const auto tok = SplitWs(row);
        size_t t = 0;
        std::vector<std::vector<double>> props;
        for (const PlyProperty& p : e.properties) {
          if (t >= tok.size()) Fail(ErrorCode::kMalformedRecord, ctx + ": too few values");
          if (p.is_list) {
            const long count = ParseInt(tok[t++], ctx);
            if (count < 0) Fail(ErrorCode::kMalformedRecord, ctx + ": negative list length");
            std::vector<double> list;
            for (long k = 0; k < count; ++k) {
              if (t >= tok.size()) Fail(ErrorCode::kMalformedRecord, ctx + ": list too short");
              list.push_back(ParseDouble(tok[t++], ctx));
            }
            props.push_back(std::move(list));
          } else {
            props.push_back({ParseDouble(tok[t++], ctx)});
          }
        }
        if (t != tok.size()) Fail(ErrorCode::kMalformedRecord, ctx + ": too many values");
        consume(e, props, ctx);
      }
    }
  } else {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    size_t pos = header.position();
    auto read = [&](PlyType t) {
      const size_t n = TypeSize(t);
      if (pos + n > bytes.size()) {
        Fail(ErrorCode::kMalformedRecord,
             "byte " + std::to_string(pos) + ": unexpected end of data");
      }
      const double v = DecodeLE(p + pos, t);
      pos += n;
      return v;
    };
    for (const PlyElement& e : elements) {
      for (long n = 0; n < e.count; ++n) {
        const std::string ctx = "byte " + std::to_string(pos);
        std::vector<std::vector<double>> props;
        for (const PlyProperty& prop : e.properties) {
          if (prop.is_list) {
            const double count = read(prop.count_type);
            if (count < 0) Fail(ErrorCode::kMalformedRecord, ctx + ": negative list length");
            std::vector<double> list;
            for (long k = 0; k < static_cast<long>(count); ++k) list.push_back(read(prop.type));
            props.push_back(std::move(list));
          } else {
            props.push_back({read(prop.type)});
          }
        }
        consume(e, props, ctx);
      }
    }
  }
  return data;
}

std::string FormatPly(std::span<const Vec3> vertices, std::span<const std::array<int, 3>> faces,
                      PlyEncoding encoding) {
  const bool binary = encoding == PlyEncoding::kBinaryLittleEndian;
  std::string out = "ply\n";
  out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  out += "element vertex " + std::to_string(vertices.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  if (!faces.empty()) {
    out += "element face " + std::to_string(faces.size()) + "\n";
    out += "property list uchar int vertex_indices\n";
  }
  out += "end_header\n";
  if (binary) {
    for (const Vec3& v : vertices) {
      for (int k = 0; k < 3; ++k) AppendLE(out, std::bit_cast<uint64_t>(v[k]), 8);
    }
    for (const auto& f : faces) {
      out += static_cast<char>(3);
      for (int k = 0; k < 3; ++k) AppendLE(out, static_cast<uint32_t>(f[k]), 4);
    }
  } else {
    for (const Vec3& v : vertices) {
      out += FormatDouble(v.x()) + " " + FormatDouble(v.y()) + " " + FormatDouble(v.z()) + "\n";
    }
    for (const auto& f : faces) {
      out += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " +
             std::to_string(f[2]) + "\n";
    }
  }
  return out;
}

namespace {

std::string Extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

template <typename F>
auto WithFileContext(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    Fail(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace

TriangleMesh ReadMesh(const std::filesystem::path& path) {
  const std::string ext = Extension(path);
  if (ext != ".obj" && ext != ".ply") {
    Fail(ErrorCode::kUnsupportedFormat, path.string() + ": expected .obj or .ply");
  }
  const std::string bytes = ReadFile(path);
  return WithFileContext(path, [&] {
    TriangleMesh mesh;
    if (ext == ".obj") {
      mesh = ParseObj(bytes);
    } else {
      PlyData ply = ParsePly(bytes);
      mesh.vertices = std::move(ply.vertices);
      mesh.faces = std::move(ply.faces);
    }
    ValidateMesh(mesh);
    return mesh;
  });
}

void WriteMesh(const std::filesystem::path& path, const TriangleMesh& mesh, PlyEncoding encoding) {
  const std::string ext = Extension(path);
  if (ext == ".obj") {
    WriteFileAtomic(path, FormatObj(mesh));
  } else if (ext == ".ply") {
    WriteFileAtomic(path, FormatPly(mesh.vertices, mesh.faces, encoding));
  } else {
    Fail(ErrorCode::kUnsupportedFormat, path.string() + ": expected .obj or .ply");
  }
}

std::vector<Vec3> ReadPointCloud(const std::filesystem::path& path) {
  const std::string ext = Extension(path);
  const std::string bytes = ReadFile(path);
  return WithFileContext(path, [&] {
    if (ext == ".ply") return ParsePly(bytes).vertices;
    if (ext == ".obj") return ParseObj(bytes).vertices;
    if (ext == ".xyz" || ext == ".txt") {
      std::vector<Vec3> pts;
      LineReader reader(bytes);
      std::string_view line;
      while (reader.Next(line)) {
        const auto tok = SplitWs(line);
        if (tok.empty() || tok[0].front() == '#') continue;
        const std::string ctx = LineContext(reader.number());
        if (tok.size() < 3) Fail(ErrorCode::kMalformedRecord, ctx + ": need x y z");
        pts.emplace_back(ParseDouble(tok[0], ctx), ParseDouble(tok[1], ctx),
                         ParseDouble(tok[2], ctx));
      }
      return pts;
    }
    Fail(ErrorCode::kUnsupportedFormat, "expected .ply, .obj or .xyz");
  });
}

void WritePointCloud(const std::filesystem::path& path, std::span<const Vec3> points,
                     PlyEncoding encoding) {
  const std::string ext = Extension(path);
  if (ext == ".ply") {
    WriteFileAtomic(path, FormatPly(points, {}, encoding));
  } else if (ext == ".xyz" || ext == ".txt") {
    std::string out;
    for (const Vec3& v : points) {
      out += FormatDouble(v.x()) + " " + FormatDouble(v.y()) + " " + FormatDouble(v.z()) + "\n";
    }
    WriteFileAtomic(path, out);
  } else {
    Fail(ErrorCode::kUnsupportedFormat, path.string() + ": expected .ply or .xyz");
  }
}

}  // namespace aggmorph
