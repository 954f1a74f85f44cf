#include "shadowgrid/point_cloud_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace shadowgrid {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

std::string context(const std::filesystem::path& path, const std::string& what) {
  return path.string() + ": " + what;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

double parse_double(std::string_view token, const std::filesystem::path& path) {
  // from_chars rejects a leading '+', strip it
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw IoError(context(path, "malformed number '" + std::string(token) + "'"));
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<std::uint64_t> parse_seed(std::string_view text) {
  text = trim(text);
  std::uint64_t seed = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (ec != std::errc()) return std::nullopt;
  return seed;
}

struct PlyProperty {
  std::string name;
  std::size_t size = 0;
  bool is_float = false;
  bool is_double = false;
};

std::size_t ply_type_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
      type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  return 0;
}

}  // namespace

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(context(path, "cannot open for writing"));
  out << "ply\nformat binary_little_endian 1.0\n";
  if (cloud.seed) out << "comment seed " << *cloud.seed << "\n";
  out << "element vertex " << cloud.points.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\nend_header\n";
  for (const Vec3& p : cloud.points) {
    const std::array<double, 3> xyz{p.x(), p.y(), p.z()};
    out.write(reinterpret_cast<const char*>(xyz.data()), sizeof(xyz));
  }
  if (!out) throw IoError(context(path, "write failed"));
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(context(path, "cannot open for reading"));

  std::string line;
  std::getline(in, line);
  if (trim(line) != "ply") throw IoError(context(path, "missing 'ply' magic"));

  PointCloud cloud;
  bool binary = false;
  bool in_vertex = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> props;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian") binary = true;
      else if (fmt == "ascii") binary = false;
      else throw IoError(context(path, "unsupported PLY format '" + fmt + "'"));
    } else if (key == "comment") {
      std::string word;
      ls >> word;
      if (word == "seed") {
        std::string rest;
        std::getline(ls, rest);
        cloud.seed = parse_seed(rest);
      }
    } else if (key == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) vertex_count = count;
      else if (count > 0 && vertex_count == 0)
        throw IoError(context(path, "elements before 'vertex' are not supported"));
    } else if (key == "property" && in_vertex) {
      std::string type, name;
      ls >> type;
      if (type == "list") throw IoError(context(path, "list properties on vertices are not supported"));
      ls >> name;
      PlyProperty p;
      p.name = name;
      p.size = ply_type_size(type);
      p.is_float = type == "float" || type == "float32";
      p.is_double = type == "double" || type == "float64";
      if (p.size == 0) throw IoError(context(path, "unknown PLY type '" + type + "'"));
      props.push_back(p);
    } else if (key == "end_header") {
      break;
    }
  }

  std::array<int, 3> axis{-1, -1, -1};
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i].name == "x") axis[0] = static_cast<int>(i);
    if (props[i].name == "y") axis[1] = static_cast<int>(i);
    if (props[i].name == "z") axis[2] = static_cast<int>(i);
  }
  for (int a : axis) {
    if (a < 0) throw IoError(context(path, "vertex element lacks x/y/z"));
    if (!props[static_cast<std::size_t>(a)].is_float && !props[static_cast<std::size_t>(a)].is_double)
      throw IoError(context(path, "x/y/z must be float or double"));
  }

  cloud.points.reserve(vertex_count);
  if (binary) {
    std::size_t stride = 0;
    std::vector<std::size_t> offset(props.size());
    for (std::size_t i = 0; i < props.size(); ++i) {
      offset[i] = stride;
      stride += props[i].size;
    }
    std::vector<char> record(stride);
    for (std::size_t v = 0; v < vertex_count; ++v) {
      if (!in.read(record.data(), static_cast<std::streamsize>(stride)))
        throw IoError(context(path, "truncated vertex data"));
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        const auto i = static_cast<std::size_t>(axis[static_cast<std::size_t>(k)]);
        if (props[i].is_double) {
          double d;
          std::memcpy(&d, record.data() + offset[i], sizeof(d));
          p[k] = d;
        } else {
          float f;
          std::memcpy(&f, record.data() + offset[i], sizeof(f));
          p[k] = f;
        }
      }
      cloud.points.push_back(p);
    }
  } else {
    for (std::size_t v = 0; v < vertex_count; ++v) {
      if (!std::getline(in, line)) throw IoError(context(path, "truncated vertex data"));
      std::istringstream ls(line);
      std::vector<std::string> tokens;
      for (std::string t; ls >> t;) tokens.push_back(t);
      if (tokens.size() < props.size()) throw IoError(context(path, "short vertex line"));
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        p[k] = parse_double(tokens[static_cast<std::size_t>(axis[static_cast<std::size_t>(k)])], path);
      }
      cloud.points.push_back(p);
    }
  }
  return cloud;
}

void write_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw IoError(context(path, "cannot open for writing"));
  if (cloud.seed) out << "# seed: " << *cloud.seed << "\n";
  out << "x,y,z\n";
  for (const Vec3& p : cloud.points) {
    out << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(p.z()) << '\n';
  }
  if (!out) throw IoError(context(path, "write failed"));
}

PointCloud read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(context(path, "cannot open for reading"));
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      sv.remove_prefix(1);
      sv = trim(sv);
      if (sv.starts_with("seed:")) cloud.seed = parse_seed(sv.substr(5));
      continue;
    }
    if (sv.front() == 'x' || sv.front() == 'X') continue;  // column header
    std::array<double, 3> xyz{};
    std::size_t k = 0;
    while (k < 3) {
      const auto comma = sv.find(',');
      const std::string_view tok = trim(sv.substr(0, comma));
      xyz[k++] = parse_double(tok, path);
      if (comma == std::string_view::npos) break;
      sv.remove_prefix(comma + 1);
    }
    if (k != 3) throw IoError(context(path, "line " + std::to_string(line_no) + ": expected x,y,z"));
    cloud.points.emplace_back(xyz[0], xyz[1], xyz[2]);
  }
  return cloud;
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ply" || ext == ".PLY") return read_ply(path);
  if (ext == ".csv" || ext == ".CSV") return read_csv(path);
  throw IoError(context(path, "unknown point cloud extension (expected .ply or .csv)"));
}

void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  const auto ext = path.extension().string();
  if (ext == ".ply" || ext == ".PLY") return write_ply(path, cloud);
  if (ext == ".csv" || ext == ".CSV") return write_csv(path, cloud);
  throw IoError(context(path, "unknown point cloud extension (expected .ply or .csv)"));
}

}  // namespace shadowgrid
