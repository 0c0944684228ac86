#pragma once

// PLY ingestion and persistence for PointCloud.
//
// Reader: "ascii 1.0" and "binary_little_endian 1.0". The vertex element must
// carry x, y, z (float/double). Optional red, green, blue (uchar) and label
// (any unsigned integer type whose values fit uint16). Other elements and
// properties are skipped, list properties included.
//
// Writer: always binary little endian with
//   double x, y, z; [uchar red, green, blue;] ushort label

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lfseg/error.hpp"
#include "lfseg/label_set.hpp"
#include "lfseg/point_cloud.hpp"

namespace lfseg {

static_assert(std::endian::native == std::endian::little, "PLY binary I/O assumes a little-endian host");

namespace ply_detail {

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

inline Scalar parse_scalar(const std::string& name) {
  if (name == "char" || name == "int8") return Scalar::i8;
  if (name == "uchar" || name == "uint8") return Scalar::u8;
  if (name == "short" || name == "int16") return Scalar::i16;
  if (name == "ushort" || name == "uint16") return Scalar::u16;
  if (name == "int" || name == "int32") return Scalar::i32;
  if (name == "uint" || name == "uint32") return Scalar::u32;
  if (name == "float" || name == "float32") return Scalar::f32;
  if (name == "double" || name == "float64") return Scalar::f64;
  throw FormatError("unknown PLY scalar type: " + name);
}

inline std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::i8:
    case Scalar::u8: return 1;
    case Scalar::i16:
    case Scalar::u16: return 2;
    case Scalar::i32:
    case Scalar::u32:
    case Scalar::f32: return 4;
    case Scalar::f64: return 8;
  }
  return 0;
}

inline bool is_float(Scalar s) { return s == Scalar::f32 || s == Scalar::f64; }

struct Property {
  std::string name;
  Scalar type = Scalar::f32;
  bool is_list = false;
  Scalar count_type = Scalar::u8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  bool binary = false;
  std::vector<Element> elements;
};

template <typename T>
T read_raw(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError("unexpected end of PLY binary data");
  return value;
}

inline double read_binary(std::istream& in, Scalar s) {
  switch (s) {
    case Scalar::i8: return read_raw<std::int8_t>(in);
    case Scalar::u8: return read_raw<std::uint8_t>(in);
    case Scalar::i16: return read_raw<std::int16_t>(in);
    case Scalar::u16: return read_raw<std::uint16_t>(in);
    case Scalar::i32: return read_raw<std::int32_t>(in);
    case Scalar::u32: return read_raw<std::uint32_t>(in);
    case Scalar::f32: return read_raw<float>(in);
    case Scalar::f64: return read_raw<double>(in);
  }
  return 0.0;
}

inline double read_ascii(std::istream& in, Scalar s) {
  std::string token;
  if (!(in >> token)) throw FormatError("unexpected end of PLY ascii data");
  try {
    std::size_t used = 0;
    double value = 0.0;
    if (is_float(s)) {
      // strtod accepts "nan"/"inf", which the caller reports as a data error.
      value = std::stod(token, &used);
      if (s == Scalar::f32) value = static_cast<float>(value);
    } else {
      value = static_cast<double>(std::stoll(token, &used));
    }
    if (used != token.size()) throw FormatError("malformed PLY ascii value: " + token);
    return value;
  } catch (const std::logic_error&) {
    throw FormatError("malformed PLY ascii value: " + token);
  }
}

inline Header parse_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") throw FormatError("missing PLY magic");
  Header header;
  bool have_format = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") {
      if (!have_format) throw FormatError("PLY header lacks a format line");
      return header;
    }
    if (keyword == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") {
        header.binary = false;
      } else if (fmt == "binary_little_endian") {
        header.binary = true;
      } else {
        throw FormatError("unsupported PLY format: " + fmt);
      }
      have_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      ls >> e.name >> count;
      if (!ls || count < 0) throw FormatError("malformed PLY element line: " + line);
      e.count = static_cast<std::size_t>(count);
      header.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (header.elements.empty()) throw FormatError("PLY property before any element");
      Property p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = parse_scalar(count_type);
        p.type = parse_scalar(item_type);
      } else {
        p.type = parse_scalar(type);
        ls >> p.name;
      }
      if (p.name.empty()) throw FormatError("malformed PLY property line: " + line);
      header.elements.back().properties.push_back(p);
    } else {
      throw FormatError("unknown PLY header keyword: " + keyword);
    }
  }
  throw FormatError("PLY header not terminated by end_header");
}

inline void skip_element(std::istream& in, const Header& header, const Element& e) {
  for (std::size_t i = 0; i < e.count; ++i) {
    for (const auto& p : e.properties) {
      if (p.is_list) {
        const double n = header.binary ? read_binary(in, p.count_type) : read_ascii(in, p.count_type);
        for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
          header.binary ? read_binary(in, p.type) : read_ascii(in, p.type);
        }
      } else {
        header.binary ? read_binary(in, p.type) : read_ascii(in, p.type);
      }
    }
  }
}

}  // namespace ply_detail

enum class PlyFormat { ascii, binary_le };

/// Reads a PLY point cloud. `format` is checked against the file's header
/// when given.
inline PointCloud load_cloud(const std::string& path, std::optional<PlyFormat> format = std::nullopt) {
  using namespace ply_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open PLY file: " + path);
  const Header header = parse_header(in);
  if (format && (*format == PlyFormat::binary_le) != header.binary) {
    throw FormatError("PLY file " + path + " does not match the declared format");
  }

  const Element* vertex = nullptr;
  for (const auto& e : header.elements) {
    if (e.name == "vertex") {
      vertex = &e;
      break;
    }
  }
  if (!vertex) throw FormatError("PLY file " + path + " has no vertex element");

  constexpr int kNone = -1;
  int ix = kNone, iy = kNone, iz = kNone, ir = kNone, ig = kNone, ib = kNone, il = kNone;
  for (int k = 0; k < static_cast<int>(vertex->properties.size()); ++k) {
    const auto& p = vertex->properties[k];
    if (p.is_list) continue;
    if (p.name == "x") ix = k;
    else if (p.name == "y") iy = k;
    else if (p.name == "z") iz = k;
    else if (p.name == "red") ir = k;
    else if (p.name == "green") ig = k;
    else if (p.name == "blue") ib = k;
    else if (p.name == "label") il = k;
  }
  for (auto [index, axis] : {std::pair{ix, "x"}, std::pair{iy, "y"}, std::pair{iz, "z"}}) {
    if (index == kNone) throw FormatError(std::string("PLY vertex element lacks property ") + axis);
    if (!is_float(vertex->properties[index].type)) {
      throw FormatError(std::string("PLY property ") + axis + " must be float or double");
    }
  }
  const bool has_color = ir != kNone && ig != kNone && ib != kNone;
  if (has_color) {
    for (int k : {ir, ig, ib}) {
      if (vertex->properties[k].type != Scalar::u8) throw FormatError("PLY color properties must be uchar");
    }
  }
  const bool has_label = il != kNone;
  if (has_label && is_float(vertex->properties[il].type)) throw FormatError("PLY label property must be integral");

  for (const auto& e : header.elements) {
    if (&e == vertex) break;
    skip_element(in, header, e);
  }

  const std::size_t n = vertex->count;
  std::vector<Vec3> positions(n);
  std::vector<Rgb> colors(has_color ? n : 0);
  std::vector<ClassId> labels(has_label ? n : 0);
  std::vector<double> row(vertex->properties.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < vertex->properties.size(); ++k) {
      const auto& p = vertex->properties[k];
      if (p.is_list) {
        const double count = header.binary ? read_binary(in, p.count_type) : read_ascii(in, p.count_type);
        for (std::size_t c = 0; c < static_cast<std::size_t>(count); ++c) {
          header.binary ? read_binary(in, p.type) : read_ascii(in, p.type);
        }
        continue;
      }
      row[k] = header.binary ? read_binary(in, p.type) : read_ascii(in, p.type);
    }
    positions[i] = Vec3(row[ix], row[iy], row[iz]);
    if (!is_finite(positions[i])) throw DataError("non-finite coordinate at point " + std::to_string(i));
    if (has_color) {
      colors[i] = Rgb{static_cast<std::uint8_t>(row[ir]), static_cast<std::uint8_t>(row[ig]),
                      static_cast<std::uint8_t>(row[ib])};
    }
    if (has_label) {
      if (row[il] < 0 || row[il] > std::numeric_limits<ClassId>::max()) {
        throw DataError("label out of uint16 range at point " + std::to_string(i));
      }
      labels[i] = static_cast<ClassId>(row[il]);
    }
  }

  return PointCloud(std::move(positions),
                    has_color ? std::optional(std::move(colors)) : std::nullopt,
                    has_label ? std::optional(std::move(labels)) : std::nullopt);
}

/// Writes `cloud` with per-point `labels` as binary little-endian PLY.
/// Labels must be valid ids of `label_set`.
inline void save_cloud(const PointCloud& cloud, const std::vector<ClassId>& labels, const LabelSet& label_set,
                       const std::string& path) {
  if (labels.size() != cloud.size()) {
    throw ArgumentError("label count " + std::to_string(labels.size()) + " != point count " +
                        std::to_string(cloud.size()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!label_set.valid(labels[i])) {
      throw ArgumentError("label id " + std::to_string(labels[i]) + " at point " + std::to_string(i) +
                          " outside label set");
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write PLY file: " + path);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_colors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "property ushort label\nend_header\n";

  const bool colored = cloud.has_colors();
  const std::size_t stride = 3 * sizeof(double) + (colored ? 3 : 0) + sizeof(ClassId);
  std::vector<char> buffer(stride * cloud.size());
  char* cursor = buffer.data();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.position(i);
    for (int axis = 0; axis < 3; ++axis) {
      const double v = p[axis];
      std::memcpy(cursor, &v, sizeof v);
      cursor += sizeof v;
    }
    if (colored) {
      const Rgb& c = (*cloud.colors())[i];
      *cursor++ = static_cast<char>(c.r);
      *cursor++ = static_cast<char>(c.g);
      *cursor++ = static_cast<char>(c.b);
    }
    std::memcpy(cursor, &labels[i], sizeof(ClassId));
    cursor += sizeof(ClassId);
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out) throw DataError("failed writing PLY file: " + path);
}

}  // namespace lfseg
