#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "shadowgrid/point_cloud.hpp"

namespace shadowgrid {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary little-endian PLY with double x/y/z. The seed, when present, is
/// written as a `comment seed <n>` header line.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);

/// Reads PLY vertex positions (binary little-endian or ascii; float or
/// double x/y/z, other vertex properties skipped).
PointCloud read_ply(const std::filesystem::path& path);

/// `# seed: <n>` comment line, an `x,y,z` header, then one point per line.
void write_csv(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_csv(const std::filesystem::path& path);

/// Dispatches on the file extension (.ply or .csv).
PointCloud read_point_cloud(const std::filesystem::path& path);
void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace shadowgrid
