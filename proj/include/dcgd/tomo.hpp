#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "dcgd/objectives.hpp"
#include "dcgd/rng.hpp"

namespace dcgd {

// Pixel/voxel grid with unit cells; a 2D grid has nz = 1.
struct GridDims {
  int nx = 1;
  int ny = 1;
  int nz = 1;

  bool is3d() const { return nz > 1; }
  long cells() const { return static_cast<long>(nx) * ny * nz; }
  long index(int ix, int iy, int iz = 0) const {
    return (static_cast<long>(iz) * ny + iy) * nx + ix;
  }
};

enum class PhantomKind { Blobs, Layered };

// Slowness image with values in [0, radius]: either a flat background with
// Gaussian bumps or depth-wise constant layers.
inline Eigen::VectorXd make_phantom(const GridDims& dims, PhantomKind kind, int blob_count,
                                    double radius, std::uint64_t seed) {
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1)
    throw std::invalid_argument("phantom: dims must be positive");
  if (!(radius > 0.0)) throw std::invalid_argument("phantom: radius must be positive");
  const long n = dims.cells();
  Eigen::VectorXd img(n);

  if (kind == PhantomKind::Layered) {
    RngStream rng(stream_key(seed, "phantom.layers"));
    std::vector<double> level(static_cast<std::size_t>(dims.ny));
    for (auto& v : level) v = rng.next_uniform(0.1 * radius, 0.9 * radius);
    for (int iz = 0; iz < dims.nz; ++iz)
      for (int iy = 0; iy < dims.ny; ++iy)
        for (int ix = 0; ix < dims.nx; ++ix)
          img[dims.index(ix, iy, iz)] = level[static_cast<std::size_t>(iy)];
    return img;
  }

  img.setConstant(0.2 * radius);
  RngStream rng(stream_key(seed, "phantom.blobs"));
  for (int b = 0; b < blob_count; ++b) {
    const double cx = rng.next_uniform(0.0, dims.nx);
    const double cy = rng.next_uniform(0.0, dims.ny);
    const double cz = dims.is3d() ? rng.next_uniform(0.0, dims.nz) : 0.5;
    const double width =
        rng.next_uniform(0.08, 0.25) * std::max({dims.nx, dims.ny, dims.nz});
    const double amp = rng.next_uniform(0.2 * radius, 0.7 * radius);
    for (int iz = 0; iz < dims.nz; ++iz)
      for (int iy = 0; iy < dims.ny; ++iy)
        for (int ix = 0; ix < dims.nx; ++ix) {
          const double dx = ix + 0.5 - cx;
          const double dy = iy + 0.5 - cy;
          const double dz = dims.is3d() ? iz + 0.5 - cz : 0.0;
          img[dims.index(ix, iy, iz)] +=
              amp * std::exp(-(dx * dx + dy * dy + dz * dz) / (2.0 * width * width));
        }
  }
  for (long i = 0; i < n; ++i) img[i] = std::clamp(img[i], 0.0, radius);
  return img;
}

using Point3 = std::array<double, 3>;

// Per-cell intersection lengths of the segment from `from` to `to`, both
// inside (or on the boundary of) the grid box. Parametric traversal: split
// the segment at every axis-plane crossing and attribute each piece to the
// cell containing its midpoint. Row entries sum to the segment length.
inline Eigen::VectorXd trace_ray(const GridDims& dims, const Point3& from, const Point3& to) {
  const double len = std::sqrt((to[0] - from[0]) * (to[0] - from[0]) +
                               (to[1] - from[1]) * (to[1] - from[1]) +
                               (to[2] - from[2]) * (to[2] - from[2]));
  Eigen::VectorXd row = Eigen::VectorXd::Zero(dims.cells());
  if (len == 0.0) return row;

  std::vector<double> cuts;
  cuts.push_back(0.0);
  cuts.push_back(1.0);
  const std::array<int, 3> extent = {dims.nx, dims.ny, dims.nz};
  for (int axis = 0; axis < 3; ++axis) {
    const double d = to[axis] - from[axis];
    if (d == 0.0) continue;
    for (int plane = 0; plane <= extent[axis]; ++plane) {
      const double s = (plane - from[axis]) / d;
      if (s > 0.0 && s < 1.0) cuts.push_back(s);
    }
  }
  std::sort(cuts.begin(), cuts.end());

  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double ds = cuts[k + 1] - cuts[k];
    if (ds <= 1e-15) continue;
    const double s_mid = 0.5 * (cuts[k] + cuts[k + 1]);
    const double px = from[0] + s_mid * (to[0] - from[0]);
    const double py = from[1] + s_mid * (to[1] - from[1]);
    const double pz = from[2] + s_mid * (to[2] - from[2]);
    const int ix = static_cast<int>(std::floor(px));
    const int iy = static_cast<int>(std::floor(py));
    const int iz = static_cast<int>(std::floor(pz));
    if (ix < 0 || ix >= dims.nx || iy < 0 || iy >= dims.ny || iz < 0 || iz >= dims.nz) continue;
    row[dims.index(ix, iy, iz)] += ds * len;
  }
  return row;
}

// Ray geometry for one node: sensor location on the surface plus rays from
// random interior sources. Surface means y = 0 in 2D and z = 0 in 3D.
struct TomoProblem {
  GridDims dims;
  Eigen::VectorXd x_true;
  std::vector<Eigen::MatrixXd> ray_matrices;  // one p_i-by-n matrix per node
  std::vector<Eigen::VectorXd> travel_times;  // b_i = A_i x_true + noise
  double noise_std = 0.0;
  double radius = 1.0;

  int nodes() const { return static_cast<int>(ray_matrices.size()); }
};

inline Point3 sensor_position(const GridDims& dims, int node, int nodes) {
  if (!dims.is3d()) {
    const double sx = (node + 0.5) * static_cast<double>(dims.nx) / nodes;
    return Point3{sx, 0.0, 0.5};
  }
  // near-square layout on the z = 0 face
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(nodes))));
  const int rows = (nodes + cols - 1) / cols;
  const int r = node / cols;
  const int c = node % cols;
  return Point3{(c + 0.5) * static_cast<double>(dims.nx) / cols,
                (r + 0.5) * static_cast<double>(dims.ny) / rows, 0.0};
}

inline TomoProblem generate_tomo_problem(const GridDims& dims, int nodes, int rays_per_node,
                                         double noise_std, double radius, std::uint64_t seed,
                                         PhantomKind phantom = PhantomKind::Blobs,
                                         int blob_count = 4) {
  if (nodes < 1 || rays_per_node < 1)
    throw std::invalid_argument("tomo: nodes and rays_per_node must be >= 1");
  if (noise_std < 0.0) throw std::invalid_argument("tomo: noise_std must be nonnegative");

  TomoProblem tp;
  tp.dims = dims;
  tp.noise_std = noise_std;
  tp.radius = radius;
  tp.x_true = make_phantom(dims, phantom, blob_count, radius, seed);

  const int depth_axis = dims.is3d() ? 2 : 1;
  for (int node = 0; node < nodes; ++node) {
    const Point3 sensor = sensor_position(dims, node, nodes);
    Eigen::MatrixXd A(rays_per_node, dims.cells());
    RngStream rng(stream_key(seed, "tomo.sources", static_cast<std::uint64_t>(node)));
    for (int k = 0; k < rays_per_node; ++k) {
      // resample until the source is clear of the sensor (zero-length rays
      // carry no information)
      for (;;) {
        Point3 src{rng.next_uniform(0.0, dims.nx), rng.next_uniform(0.0, dims.ny),
                   dims.is3d() ? rng.next_uniform(0.0, dims.nz) : 0.5};
        // keep sources strictly below the surface
        if (depth_axis == 1)
          src[1] = rng.next_uniform(0.1 * dims.ny, static_cast<double>(dims.ny));
        else
          src[2] = rng.next_uniform(0.1 * dims.nz, static_cast<double>(dims.nz));
        const double d2 = (src[0] - sensor[0]) * (src[0] - sensor[0]) +
                          (src[1] - sensor[1]) * (src[1] - sensor[1]) +
                          (src[2] - sensor[2]) * (src[2] - sensor[2]);
        if (d2 < 1e-12) continue;
        A.row(k) = trace_ray(dims, src, sensor).transpose();
        break;
      }
    }
    Eigen::VectorXd b = A * tp.x_true;
    if (noise_std > 0.0) {
      Eigen::VectorXd noise(rays_per_node);
      RngStream rng_noise(stream_key(seed, "tomo.noise", static_cast<std::uint64_t>(node)));
      rng_noise.fill_gaussian(noise);
      b += noise_std * noise;
    }
    tp.ray_matrices.push_back(std::move(A));
    tp.travel_times.push_back(std::move(b));
  }
  return tp;
}

// Forward differences along every axis, truncated at the boundary (rows whose
// stencil would leave the grid are omitted). ||D'D||_2 <= 4 * (#axes).
inline Eigen::SparseMatrix<double> discrete_gradient_operator(const GridDims& dims) {
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1)
    throw std::invalid_argument("discrete_gradient_operator: dims must be positive");
  std::vector<Eigen::Triplet<double>> trip;
  long row = 0;
  auto add = [&](long from, long to) {
    trip.emplace_back(row, to, 1.0);
    trip.emplace_back(row, from, -1.0);
    ++row;
  };
  for (int iz = 0; iz < dims.nz; ++iz)
    for (int iy = 0; iy < dims.ny; ++iy)
      for (int ix = 0; ix < dims.nx; ++ix) {
        if (ix + 1 < dims.nx) add(dims.index(ix, iy, iz), dims.index(ix + 1, iy, iz));
        if (iy + 1 < dims.ny) add(dims.index(ix, iy, iz), dims.index(ix, iy + 1, iz));
        if (iz + 1 < dims.nz) add(dims.index(ix, iy, iz), dims.index(ix, iy, iz + 1));
      }
  Eigen::SparseMatrix<double> D(row, dims.cells());
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

enum class TomoRegularizer { None, Identity, Gradient };

// Assembles the decentralized objective set: plain least squares per node, or
// Tikhonov-regularized with identity or discrete-gradient operator.
inline Problem tomo_objectives(const TomoProblem& tp, TomoRegularizer reg, double mu,
                               double sigma) {
  Problem p;
  p.radius = tp.radius;
  p.x_hint = tp.x_true;
  const Eigen::SparseMatrix<double> D =
      reg == TomoRegularizer::Gradient ? discrete_gradient_operator(tp.dims)
                                       : Eigen::SparseMatrix<double>();
  for (int i = 0; i < tp.nodes(); ++i) {
    switch (reg) {
      case TomoRegularizer::None:
        p.locals.push_back(
            LocalObjective::least_squares(tp.ray_matrices[i], tp.travel_times[i], sigma));
        break;
      case TomoRegularizer::Identity:
        p.locals.push_back(
            LocalObjective::tikhonov(tp.ray_matrices[i], tp.travel_times[i], mu, sigma));
        break;
      case TomoRegularizer::Gradient:
        p.locals.push_back(
            LocalObjective::tikhonov(tp.ray_matrices[i], tp.travel_times[i], mu, D, sigma));
        break;
    }
  }
  return p;
}

// Flat CSV with a dims header line, for external visualization.
inline void write_image_csv(std::ostream& os, const GridDims& dims, const Eigen::VectorXd& img) {
  os << "# dims " << dims.nx << " " << dims.ny << " " << dims.nz << "\n";
  for (long i = 0; i < img.size(); ++i) os << img[i] << "\n";
}

}  // namespace dcgd
