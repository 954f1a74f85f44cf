#include "shadowgrid/spherical_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace shadowgrid {

void WedgeGridConfig::validate() const {
  if (!(azimuth_bin > 0.0) || !(elevation_bin > 0.0)) {
    throw std::invalid_argument("WedgeGridConfig: bin widths must be positive");
  }
  const double bins = kTwoPi / azimuth_bin;
  if (std::abs(bins - std::round(bins)) > 1e-6) {
    throw std::invalid_argument("WedgeGridConfig: 2*pi must be an integer multiple of azimuth_bin");
  }
  if (!(elevation_max > elevation_min) || elevation_min < -kPi / 2 - 1e-12 ||
      elevation_max > kPi / 2 + 1e-12) {
    throw std::invalid_argument("WedgeGridConfig: elevation limits must satisfy -pi/2 <= min < max <= pi/2");
  }
  if (!(jump_threshold > 0.0)) throw std::invalid_argument("WedgeGridConfig: jump_threshold must be positive");
  if (min_cluster < 2) throw std::invalid_argument("WedgeGridConfig: min_cluster must be at least 2");
  if (!(max_pad >= 0.0)) throw std::invalid_argument("WedgeGridConfig: max_pad must be non-negative");
}

int WedgeGridConfig::azimuth_bins() const {
  return static_cast<int>(std::lround(kTwoPi / azimuth_bin));
}

int WedgeGridConfig::elevation_bins() const {
  return static_cast<int>(std::ceil((elevation_max - elevation_min) / elevation_bin - 1e-9));
}

std::optional<WedgeIndex> wedge_of(double azimuth, double elevation, const WedgeGridConfig& cfg) {
  if (!(elevation >= cfg.elevation_min) || !(elevation < cfg.elevation_max)) return std::nullopt;
  const int az_bins = cfg.azimuth_bins();
  const int el_bins = cfg.elevation_bins();
  if (azimuth >= kPi) azimuth -= kTwoPi;
  int i = static_cast<int>(std::floor((azimuth + kPi) / cfg.azimuth_bin));
  // rounding near +pi can produce az_bins
  i = std::clamp(i, 0, az_bins - 1);
  int j = static_cast<int>(std::floor((elevation - cfg.elevation_min) / cfg.elevation_bin));
  j = std::clamp(j, 0, el_bins - 1);
  return WedgeIndex{i, j};
}

namespace {

constexpr double kBoundaryTolerance = 1e-12;

constexpr int kAzimuthTableSize = 1024;

// Monotone stand-in for the azimuth measured from -pi: 0 at -pi, 2 at 0,
// approaching 4 at +pi. One division, no trigonometry.
double pseudo_azimuth(double x, double y) {
  const double d = std::abs(x) + std::abs(y);
  if (y < 0) return x < 0 ? -y / d : 1.0 + x / d;  // third and fourth quadrants
  return x >= 0 ? 2.0 + y / d : 3.0 - x / d;        // first and second
}

}  // namespace

WedgeLocator::WedgeLocator(const WedgeGridConfig& cfg)
    : cfg_(cfg), az_bins_(cfg.azimuth_bins()), el_bins_(cfg.elevation_bins()) {
  for (int i = 0; i <= az_bins_; ++i) {
    const double a = -kPi + i * cfg.azimuth_bin;
    az_edge_.push_back(i == 0 ? 0.0 : i == az_bins_ ? 4.0 : pseudo_azimuth(std::cos(a), std::sin(a)));
  }
  az_table_.resize(kAzimuthTableSize);
  for (int c = 0, i = 0; c < kAzimuthTableSize; ++c) {
    const double u = 4.0 * c / kAzimuthTableSize;
    while (i + 1 < az_bins_ && az_edge_[static_cast<std::size_t>(i + 1)] <= u) ++i;
    az_table_[static_cast<std::size_t>(c)] = i;
  }
  for (int j = 0; j < el_bins_; ++j) el_sin_.push_back(std::sin(cfg.elevation_min + j * cfg.elevation_bin));
  el_sin_.push_back(std::sin(cfg.elevation_max));
}

std::optional<WedgeIndex> WedgeLocator::exact(const Vec3& q) const {
  const double horizontal = std::hypot(q.x(), q.y());
  const double azimuth = horizontal == 0.0 ? 0.0 : std::atan2(q.y(), q.x());
  return wedge_of(azimuth, std::atan2(q.z(), horizontal), cfg_);
}

std::optional<WedgeIndex> WedgeLocator::operator()(const Vec3& q, double range) const {
  const double s = q.z() / range;
  if (s < el_sin_.front() - kBoundaryTolerance || s >= el_sin_.back() + kBoundaryTolerance) return std::nullopt;
  int j = 0;
  while (j + 1 < el_bins_ && s >= el_sin_[static_cast<std::size_t>(j + 1)]) ++j;
  if (std::abs(s - el_sin_[static_cast<std::size_t>(j)]) < kBoundaryTolerance ||
      std::abs(s - el_sin_[static_cast<std::size_t>(j + 1)]) < kBoundaryTolerance) {
    return exact(q);
  }

  const double x = q.x(), y = q.y();
  if (x == 0.0 && y == 0.0) return exact(q);
  const double u = pseudo_azimuth(x, y);
  const int cell = std::min(static_cast<int>(u * (kAzimuthTableSize / 4.0)), kAzimuthTableSize - 1);
  int i = az_table_[static_cast<std::size_t>(cell)];
  while (i + 1 < az_bins_ && u >= az_edge_[static_cast<std::size_t>(i + 1)]) ++i;
  if (u - az_edge_[static_cast<std::size_t>(i)] < kBoundaryTolerance ||
      az_edge_[static_cast<std::size_t>(i + 1)] - u < kBoundaryTolerance) {
    return exact(q);
  }
  return WedgeIndex{i, j};
}

WedgeAssignment assign_wedges(const PointCloud& cloud, const WedgeGridConfig& cfg) {
  cfg.validate();
  const int az_bins = cfg.azimuth_bins();
  const int el_bins = cfg.elevation_bins();
  std::vector<WedgeSet> dense(static_cast<std::size_t>(az_bins * el_bins));
  const WedgeLocator locate(cfg);
  WedgeAssignment out;

  for (std::size_t k = 0; k < cloud.points.size(); ++k) {
    const Vec3& q = cloud.points[k];
    if (!q.allFinite() || q.norm() < 1e-12) {
      ++out.dropped;
      continue;
    }
    const double range = q.norm();
    const auto w = locate(q, range);
    if (!w) {
      ++out.dropped;
      continue;
    }
    WedgeSet& set = dense[static_cast<std::size_t>(w->elevation * az_bins + w->azimuth)];
    set.index = *w;
    set.members.push_back(k);
    set.radii.push_back(range);
  }

  for (WedgeSet& set : dense) {
    if (set.members.empty()) continue;
    std::vector<std::size_t> order(set.members.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (set.radii[a] != set.radii[b]) return set.radii[a] < set.radii[b];
      return set.members[a] < set.members[b];
    });
    WedgeSet sorted;
    sorted.index = set.index;
    sorted.members.reserve(order.size());
    sorted.radii.reserve(order.size());
    for (std::size_t o : order) {
      sorted.members.push_back(set.members[o]);
      sorted.radii.push_back(set.radii[o]);
    }
    out.wedges.push_back(std::move(sorted));
  }
  return out;
}

std::optional<RadialRun> adaptive_radial_bounds(const std::vector<double>& r, double jump_threshold,
                                                std::size_t min_cluster) {
  if (r.empty()) return std::nullopt;
  std::size_t l_min = 0;
  for (std::size_t l = 1; l < r.size(); ++l) {
    if (r[l] - r[l - 1] > jump_threshold) {
      if (l - l_min > min_cluster) return RadialRun{l_min, l - 1};
      l_min = l;
    }
  }
  // no closing jump: the run extends to the farthest return
  const RadialRun tail{l_min, r.size() - 1};
  if (tail.count() > min_cluster) return tail;
  return std::nullopt;
}

RadialBounds pad_bounds(RadialBounds b, std::optional<double> inner, std::optional<double> outer,
                        double max_pad) {
  double lower_pad = max_pad;
  if (inner) lower_pad = std::min(max_pad, 0.5 * (b.lower - *inner));
  double upper_pad = max_pad;
  if (outer) upper_pad = std::min(max_pad, 0.5 * (*outer - b.upper));
  return {std::max(0.0, b.lower - std::max(0.0, lower_pad)), b.upper + std::max(0.0, upper_pad)};
}

SphericalGrid::SphericalGrid(WedgeGridConfig cfg, std::vector<RadialVoxel> voxels,
                             std::vector<bool> retained_mask, std::size_t dropped)
    : cfg_(cfg),
      az_bins_(cfg.azimuth_bins()),
      el_bins_(cfg.elevation_bins()),
      locator_(cfg),
      voxels_(std::move(voxels)),
      wedge_to_voxel_(static_cast<std::size_t>(az_bins_ * el_bins_), -1),
      retained_(std::move(retained_mask)),
      dropped_(dropped) {
  for (std::size_t v = 0; v < voxels_.size(); ++v) {
    const WedgeIndex w = voxels_[v].wedge;
    int& slot = wedge_to_voxel_[static_cast<std::size_t>(w.elevation * az_bins_ + w.azimuth)];
    if (slot >= 0) throw std::invalid_argument("SphericalGrid: two voxels in one wedge");
    slot = static_cast<int>(v);
  }
}

std::size_t SphericalGrid::retained_count() const {
  return static_cast<std::size_t>(std::count(retained_.begin(), retained_.end(), true));
}

std::size_t SphericalGrid::excluded_count() const {
  return retained_.size() - retained_count() - dropped_;
}

std::optional<std::size_t> SphericalGrid::voxel_at(WedgeIndex w) const {
  if (w.azimuth < 0 || w.azimuth >= az_bins_ || w.elevation < 0 || w.elevation >= el_bins_) {
    return std::nullopt;
  }
  const int v = wedge_to_voxel_[static_cast<std::size_t>(w.elevation * az_bins_ + w.azimuth)];
  if (v < 0) return std::nullopt;
  return static_cast<std::size_t>(v);
}

std::optional<std::size_t> SphericalGrid::locate(const Vec3& q) const {
  const double r = q.norm();
  if (!(r >= 1e-12) || !std::isfinite(r)) return std::nullopt;
  const auto w = locator_(q, r);
  if (!w) return std::nullopt;
  const auto v = voxel_at(*w);
  if (!v) return std::nullopt;
  const RadialVoxel& vox = voxels_[*v];
  if (r < vox.r_lower || r > vox.r_upper) return std::nullopt;
  return v;
}

bool SphericalGrid::contains(std::size_t voxel, const Vec3& q) const {
  const auto v = locate(q);
  return v && *v == voxel;
}

SphericalGrid build_shadow_filtered_grid(const PointCloud& primary, const WedgeGridConfig& cfg) {
  if (primary.empty()) throw std::invalid_argument("build_shadow_filtered_grid: empty primary cloud");
  const WedgeAssignment assignment = assign_wedges(primary, cfg);

  std::vector<RadialVoxel> voxels;
  std::vector<bool> retained(primary.size(), false);
  for (const WedgeSet& w : assignment.wedges) {
    const auto run = adaptive_radial_bounds(w, cfg);
    if (!run) continue;
    std::optional<double> inner, outer;
    if (run->first > 0) inner = w.radii[run->first - 1];
    if (run->last + 1 < w.radii.size()) outer = w.radii[run->last + 1];
    const RadialBounds padded =
        pad_bounds({w.radii[run->first], w.radii[run->last]}, inner, outer, cfg.max_pad);

    RadialVoxel vox;
    vox.wedge = w.index;
    vox.r_lower = padded.lower;
    vox.r_upper = padded.upper;
    vox.cluster_lower = w.radii[run->first];
    vox.cluster_upper = w.radii[run->last];
    vox.retained.assign(w.members.begin() + static_cast<std::ptrdiff_t>(run->first),
                        w.members.begin() + static_cast<std::ptrdiff_t>(run->last + 1));
    std::sort(vox.retained.begin(), vox.retained.end());
    for (std::size_t k : vox.retained) retained[k] = true;
    voxels.push_back(std::move(vox));
  }
  return SphericalGrid(cfg, std::move(voxels), std::move(retained), assignment.dropped);
}

std::vector<std::vector<std::size_t>> filter_secondary(const PointCloud& secondary, const VoxelGrid& grid,
                                                       const RigidTransform& t) {
  std::vector<std::vector<std::size_t>> members(grid.voxel_count());
  for (std::size_t k = 0; k < secondary.points.size(); ++k) {
    const auto v = grid.locate(t.apply(secondary.points[k]));
    if (v) members[*v].push_back(k);
  }
  return members;
}

void write_grid_dump(std::ostream& out, const SphericalGrid& grid) {
  out << "i,j,alpha_i,beta_j,r_lower,r_upper,count\n";
  for (const RadialVoxel& v : grid.voxels()) {
    out << v.wedge.azimuth << ',' << v.wedge.elevation << ',' << grid.azimuth_lower(v.wedge.azimuth) << ','
        << grid.elevation_lower(v.wedge.elevation) << ',' << v.r_lower << ',' << v.r_upper << ','
        << v.retained.size() << '\n';
  }
}

}  // namespace shadowgrid
