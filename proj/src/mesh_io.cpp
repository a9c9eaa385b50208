#include "tubekin/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tubekin {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, long line, const std::string& what) {
  std::string where = path.string();
  if (line > 0) where += ":" + std::to_string(line);
  throw InputError(where + ": " + what);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

// ---------------------------------------------------------------- PLY

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<Scalar> scalar_type(const std::string& name) {
  if (name == "char" || name == "int8") return Scalar::i8;
  if (name == "uchar" || name == "uint8") return Scalar::u8;
  if (name == "short" || name == "int16") return Scalar::i16;
  if (name == "ushort" || name == "uint16") return Scalar::u16;
  if (name == "int" || name == "int32") return Scalar::i32;
  if (name == "uint" || name == "uint32") return Scalar::u32;
  if (name == "float" || name == "float32") return Scalar::f32;
  if (name == "double" || name == "float64") return Scalar::f64;
  return std::nullopt;
}

int scalar_size(Scalar s) {
  switch (s) {
    case Scalar::i8: case Scalar::u8: return 1;
    case Scalar::i16: case Scalar::u16: return 2;
    case Scalar::i32: case Scalar::u32: case Scalar::f32: return 4;
    case Scalar::f64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::f64;
  bool is_list = false;
  Scalar count_type = Scalar::u8;
};

struct Element {
  std::string name;
  long count = 0;
  std::vector<Property> properties;
};

enum class PlyEncoding { ascii, little, big };

class BinaryReader {
 public:
  BinaryReader(std::istream& in, bool swap, const std::filesystem::path& path) : in_(in), swap_(swap), path_(path) {}

  double read(Scalar type) {
    unsigned char buf[8];
    const int size = scalar_size(type);
    in_.read(reinterpret_cast<char*>(buf), size);
    if (in_.gcount() != size) fail(path_, 0, "unexpected end of binary data at byte " + std::to_string(offset()));
    if (swap_) std::reverse(buf, buf + size);
    switch (type) {
      case Scalar::i8: return static_cast<double>(static_cast<std::int8_t>(buf[0]));
      case Scalar::u8: return static_cast<double>(buf[0]);
      case Scalar::i16: return static_cast<double>(load<std::int16_t>(buf));
      case Scalar::u16: return static_cast<double>(load<std::uint16_t>(buf));
      case Scalar::i32: return static_cast<double>(load<std::int32_t>(buf));
      case Scalar::u32: return static_cast<double>(load<std::uint32_t>(buf));
      case Scalar::f32: return static_cast<double>(load<float>(buf));
      case Scalar::f64: return load<double>(buf);
    }
    return 0.0;
  }

  long offset() { return static_cast<long>(in_.tellg()); }

 private:
  template <class T>
  static T load(const unsigned char* buf) {
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  std::istream& in_;
  bool swap_;
  const std::filesystem::path& path_;
};

void add_polygon(TriMesh& mesh, const std::vector<int>& poly, long vertex_count, const std::filesystem::path& path,
                 long line) {
  if (poly.size() < 3) fail(path, line, "face with fewer than 3 vertices");
  for (int v : poly)
    if (v < 0 || v >= vertex_count) fail(path, line, "vertex index " + std::to_string(v) + " out of range");
  for (size_t k = 1; k + 1 < poly.size(); ++k) mesh.triangles.push_back({poly[0], poly[k], poly[k + 1]});
}

TriMesh read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, 0, "cannot open file");

  std::string line;
  long line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || line != "ply") fail(path, 1, "missing 'ply' magic");
  std::optional<PlyEncoding> encoding;
  std::vector<Element> elements;
  bool ended = false;
  while (next_line()) {
    auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") {
      ended = true;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() < 2) fail(path, line_no, "malformed format line");
      if (tok[1] == "ascii") encoding = PlyEncoding::ascii;
      else if (tok[1] == "binary_little_endian") encoding = PlyEncoding::little;
      else if (tok[1] == "binary_big_endian") encoding = PlyEncoding::big;
      else fail(path, line_no, "unknown format '" + tok[1] + "'");
    } else if (tok[0] == "element") {
      Element e;
      if (tok.size() != 3 || !parse_number(tok[2], e.count) || e.count < 0) fail(path, line_no, "malformed element line");
      e.name = tok[1];
      elements.push_back(e);
    } else if (tok[0] == "property") {
      if (elements.empty()) fail(path, line_no, "property before any element");
      Property p;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = scalar_type(tok[2]);
        auto it = scalar_type(tok[3]);
        if (!ct || !it) fail(path, line_no, "unknown property type");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
        p.name = tok[4];
      } else if (tok.size() == 3) {
        auto t = scalar_type(tok[1]);
        if (!t) fail(path, line_no, "unknown property type '" + tok[1] + "'");
        p.type = *t;
        p.name = tok[2];
      } else {
        fail(path, line_no, "malformed property line");
      }
      elements.back().properties.push_back(p);
    } else {
      fail(path, line_no, "unexpected header keyword '" + tok[0] + "'");
    }
  }
  if (!ended) fail(path, line_no, "missing end_header");
  if (!encoding) fail(path, line_no, "missing format line");

  TriMesh mesh;
  long vertex_count = 0;
  for (const auto& e : elements)
    if (e.name == "vertex") vertex_count = e.count;

  const bool swap = (*encoding == PlyEncoding::little) != (std::endian::native == std::endian::little);
  BinaryReader reader(in, swap, path);
  std::vector<int> poly;

  for (const auto& e : elements) {
    int ix = -1, iy = -1, iz = -1, iface = -1;
    for (size_t k = 0; k < e.properties.size(); ++k) {
      const auto& n = e.properties[k].name;
      if (n == "x") ix = static_cast<int>(k);
      if (n == "y") iy = static_cast<int>(k);
      if (n == "z") iz = static_cast<int>(k);
      if (e.properties[k].is_list && (n == "vertex_indices" || n == "vertex_index")) iface = static_cast<int>(k);
    }
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) fail(path, 0, "vertex element lacks x, y or z");
    if (is_face && iface < 0) fail(path, 0, "face element lacks vertex_indices");
    if (is_vertex) mesh.vertices.reserve(static_cast<size_t>(e.count));

    for (long r = 0; r < e.count; ++r) {
      Vec3 p = Vec3::Zero();
      poly.clear();
      if (*encoding == PlyEncoding::ascii) {
        if (!next_line()) fail(path, line_no, "unexpected end of file in element '" + e.name + "'");
        auto tok = split_ws(line);
        size_t t = 0;
        auto take = [&]() -> double {
          double v = 0.0;
          if (t >= tok.size()) fail(path, line_no, "too few values");
          if (!parse_number(tok[t], v)) fail(path, line_no, "bad number '" + tok[t] + "'");
          ++t;
          return v;
        };
        for (size_t k = 0; k < e.properties.size(); ++k) {
          const auto& prop = e.properties[k];
          if (prop.is_list) {
            const double c = take();
            if (c < 0 || c != std::floor(c)) fail(path, line_no, "bad list length");
            for (long q = 0; q < static_cast<long>(c); ++q) {
              const double v = take();
              if (static_cast<int>(k) == iface) poly.push_back(static_cast<int>(v));
            }
          } else {
            const double v = take();
            if (static_cast<int>(k) == ix) p.x() = v;
            if (static_cast<int>(k) == iy) p.y() = v;
            if (static_cast<int>(k) == iz) p.z() = v;
          }
        }
        if (t != tok.size()) fail(path, line_no, "too many values");
      } else {
        for (size_t k = 0; k < e.properties.size(); ++k) {
          const auto& prop = e.properties[k];
          if (prop.is_list) {
            const double c = reader.read(prop.count_type);
            for (long q = 0; q < static_cast<long>(c); ++q) {
              const double v = reader.read(prop.type);
              if (static_cast<int>(k) == iface) poly.push_back(static_cast<int>(v));
            }
          } else {
            const double v = reader.read(prop.type);
            if (static_cast<int>(k) == ix) p.x() = v;
            if (static_cast<int>(k) == iy) p.y() = v;
            if (static_cast<int>(k) == iz) p.z() = v;
          }
        }
      }
      if (is_vertex) mesh.vertices.push_back(p);
      if (is_face) {
        add_polygon(mesh, poly, vertex_count, path, *encoding == PlyEncoding::ascii ? line_no : 0);
      }
    }
  }
  return mesh;
}

// ---------------------------------------------------------------- OBJ

TriMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, 0, "cannot open file");
  TriMesh mesh;
  std::string line;
  long line_no = 0;
  std::vector<int> poly;
  // Index range is checked once every vertex has been read.
  struct PendingFace {
    std::vector<int> poly;
    long line;
  };
  std::vector<PendingFace> faces;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tok = split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok[0] == "v") {
      if (tok.size() < 4) fail(path, line_no, "vertex needs three coordinates");
      Vec3 p;
      for (int k = 0; k < 3; ++k)
        if (!parse_number(tok[k + 1], p[k])) fail(path, line_no, "bad number '" + tok[k + 1] + "'");
      mesh.vertices.push_back(p);
    } else if (tok[0] == "f") {
      poly.clear();
      for (size_t k = 1; k < tok.size(); ++k) {
        const std::string index = tok[k].substr(0, tok[k].find('/'));
        long v = 0;
        if (!parse_number(index, v) || v == 0) fail(path, line_no, "bad face index '" + tok[k] + "'");
        // Negative indices count back from the last vertex read so far.
        const long resolved = v > 0 ? v - 1 : static_cast<long>(mesh.vertices.size()) + v;
        poly.push_back(static_cast<int>(resolved));
      }
      faces.push_back({poly, line_no});
    }
  }
  for (const auto& f : faces) add_polygon(mesh, f.poly, mesh.num_vertices(), path, f.line);
  return mesh;
}

std::string extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

MeshFormat format_for_path(const std::filesystem::path& path) {
  const std::string ext = extension(path);
  if (ext == ".ply") return MeshFormat::ply_binary;
  if (ext == ".obj") return MeshFormat::obj;
  throw InputError(path.string() + ": unsupported mesh extension '" + ext + "'");
}

const char* to_string(MeshFormat format) {
  switch (format) {
    case MeshFormat::ply_ascii: return "ply_ascii";
    case MeshFormat::ply_binary: return "ply_binary";
    case MeshFormat::obj: return "obj";
  }
  return "?";
}

MeshFormat parse_mesh_format(const std::string& name) {
  if (name == "ply_ascii") return MeshFormat::ply_ascii;
  if (name == "ply_binary" || name == "ply") return MeshFormat::ply_binary;
  if (name == "obj") return MeshFormat::obj;
  throw InputError("unknown mesh format '" + name + "' (ply_ascii, ply_binary, obj)");
}

TriMesh read_mesh(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError(path.string() + ": file not found");
  const std::string ext = extension(path);
  if (ext == ".ply") return read_ply(path);
  if (ext == ".obj") return read_obj(path);
  throw InputError(path.string() + ": unsupported mesh extension '" + ext + "'");
}

void write_mesh(const std::filesystem::path& path, const TriMesh& mesh, MeshFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  char buf[96];
  const int n = mesh.num_vertices();

  if (format == MeshFormat::obj) {
    for (const auto& p : mesh.vertices) {
      std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
      out << buf;
    }
    for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  } else {
    const bool ascii = format == MeshFormat::ply_ascii;
    out << "ply\nformat " << (ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
        << "element vertex " << n << "\n"
        << "property double x\nproperty double y\nproperty double z\n"
        << "element face " << mesh.num_triangles() << "\n"
        << "property list uchar int vertex_indices\nend_header\n";
    if (ascii) {
      for (const auto& p : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        out << buf;
      }
      for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    } else {
      auto put = [&](const void* data, size_t size) {
        unsigned char tmp[8];
        std::memcpy(tmp, data, size);
        if constexpr (std::endian::native == std::endian::big) std::reverse(tmp, tmp + size);
        out.write(reinterpret_cast<const char*>(tmp), static_cast<std::streamsize>(size));
      };
      for (const auto& p : mesh.vertices)
        for (int k = 0; k < 3; ++k) {
          const double v = p[k];
          put(&v, sizeof v);
        }
      for (const auto& t : mesh.triangles) {
        const unsigned char three = 3;
        out.put(static_cast<char>(three));
        for (int k = 0; k < 3; ++k) {
          const std::int32_t v = t[k];
          put(&v, sizeof v);
        }
      }
    }
  }
  if (!out) throw InputError(path.string() + ": write failed");
}

}  // namespace tubekin
