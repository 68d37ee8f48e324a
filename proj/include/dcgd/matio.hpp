#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "dcgd/csv.hpp"
#include "dcgd/objectives.hpp"
#include "dcgd/tomo.hpp"

namespace dcgd {

// Plain-text container for numeric fixtures: a tagged header (kind, scalar
// parameters) followed by named row-major payloads. Values are written with
// round-trip precision, so load(save(x)) == x exactly.
//
//   container <kind>
//   scalar <name> <value>
//   matrix <name> <rows> <cols>
//   <rows lines of cols numbers>
//   vector <name> <size>
//   <size numbers on one line>
//   sparse <name> <rows> <cols> <nnz>
//   <nnz lines of "row col value">
//   end

namespace matio {

struct Container {
  std::string kind;
  std::map<std::string, double> scalars;
  std::map<std::string, Eigen::MatrixXd> matrices;
  std::map<std::string, Eigen::VectorXd> vectors;
  std::map<std::string, Eigen::SparseMatrix<double>> sparses;

  double scalar(const std::string& name) const {
    auto it = scalars.find(name);
    if (it == scalars.end()) throw std::runtime_error("container: missing scalar " + name);
    return it->second;
  }
  const Eigen::MatrixXd& matrix(const std::string& name) const {
    auto it = matrices.find(name);
    if (it == matrices.end()) throw std::runtime_error("container: missing matrix " + name);
    return it->second;
  }
  const Eigen::VectorXd& vector(const std::string& name) const {
    auto it = vectors.find(name);
    if (it == vectors.end()) throw std::runtime_error("container: missing vector " + name);
    return it->second;
  }
};

inline void write(std::ostream& os, const Container& c) {
  os << "container " << c.kind << "\n";
  for (const auto& [name, v] : c.scalars) os << "scalar " << name << " " << format_double(v) << "\n";
  for (const auto& [name, v] : c.vectors) {
    os << "vector " << name << " " << v.size() << "\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << format_double(v[i]);
    os << "\n";
  }
  for (const auto& [name, m] : c.matrices) {
    os << "matrix " << name << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index col = 0; col < m.cols(); ++col)
        os << (col ? " " : "") << format_double(m(r, col));
      os << "\n";
    }
  }
  for (const auto& [name, s] : c.sparses) {
    os << "sparse " << name << " " << s.rows() << " " << s.cols() << " " << s.nonZeros() << "\n";
    for (int k = 0; k < s.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(s, k); it; ++it)
        os << it.row() << " " << it.col() << " " << format_double(it.value()) << "\n";
  }
  os << "end\n";
}

inline Container read(std::istream& is) {
  Container c;
  std::string tok;
  if (!(is >> tok) || tok != "container")
    throw std::runtime_error("container: bad magic");
  is >> c.kind;
  while (is >> tok) {
    if (tok == "end") return c;
    std::string name;
    if (tok == "scalar") {
      double v;
      is >> name >> v;
      c.scalars[name] = v;
    } else if (tok == "vector") {
      Eigen::Index size;
      is >> name >> size;
      Eigen::VectorXd v(size);
      for (Eigen::Index i = 0; i < size; ++i) is >> v[i];
      c.vectors[name] = std::move(v);
    } else if (tok == "matrix") {
      Eigen::Index rows, cols;
      is >> name >> rows >> cols;
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index col = 0; col < cols; ++col) is >> m(r, col);
      c.matrices[name] = std::move(m);
    } else if (tok == "sparse") {
      Eigen::Index rows, cols;
      long nnz;
      is >> name >> rows >> cols >> nnz;
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(static_cast<std::size_t>(nnz));
      for (long k = 0; k < nnz; ++k) {
        Eigen::Index r, col;
        double v;
        is >> r >> col >> v;
        trip.emplace_back(r, col, v);
      }
      Eigen::SparseMatrix<double> s(rows, cols);
      s.setFromTriplets(trip.begin(), trip.end());
      c.sparses[name] = std::move(s);
    } else {
      throw std::runtime_error("container: unknown tag " + tok);
    }
    if (!is) throw std::runtime_error("container: truncated payload near " + tok);
  }
  throw std::runtime_error("container: missing end marker");
}

}  // namespace matio

inline void save_objective(std::ostream& os, const LocalObjective& f) {
  matio::Container c;
  c.kind = "objective";
  c.scalars["variant"] = static_cast<double>(f.kind());
  c.scalars["sigma"] = f.noise_level();
  c.scalars["delta"] = f.huber_delta();
  c.scalars["mu"] = f.tikhonov_weight();
  c.matrices["A"] = f.data_matrix();
  c.vectors["b"] = f.targets();
  if (f.kind() == ObjectiveKind::TikhonovGradient) c.sparses["D"] = f.regularizer();
  matio::write(os, c);
}

inline LocalObjective load_objective(std::istream& is) {
  const matio::Container c = matio::read(is);
  if (c.kind != "objective") throw std::runtime_error("container: expected objective");
  const auto kind = static_cast<ObjectiveKind>(static_cast<int>(c.scalar("variant")));
  Eigen::MatrixXd A = c.matrix("A");
  Eigen::VectorXd b = c.vector("b");
  const double sigma = c.scalar("sigma");
  switch (kind) {
    case ObjectiveKind::LeastSquares:
      return LocalObjective::least_squares(std::move(A), std::move(b), sigma);
    case ObjectiveKind::Huber:
      return LocalObjective::huber(std::move(A), std::move(b), c.scalar("delta"), sigma);
    case ObjectiveKind::Logistic:
      return LocalObjective::logistic(std::move(A), std::move(b), sigma);
    case ObjectiveKind::TikhonovIdentity:
      return LocalObjective::tikhonov(std::move(A), std::move(b), c.scalar("mu"), sigma);
    case ObjectiveKind::TikhonovGradient:
      return LocalObjective::tikhonov(std::move(A), std::move(b), c.scalar("mu"),
                                      c.sparses.at("D"), sigma);
  }
  throw std::runtime_error("container: unknown objective variant");
}

inline void save_tomo(std::ostream& os, const TomoProblem& tp) {
  matio::Container c;
  c.kind = "tomo";
  c.scalars["nx"] = tp.dims.nx;
  c.scalars["ny"] = tp.dims.ny;
  c.scalars["nz"] = tp.dims.nz;
  c.scalars["nodes"] = tp.nodes();
  c.scalars["noise_std"] = tp.noise_std;
  c.scalars["radius"] = tp.radius;
  c.vectors["x_true"] = tp.x_true;
  for (int i = 0; i < tp.nodes(); ++i) {
    c.matrices["A" + std::to_string(i)] = tp.ray_matrices[static_cast<std::size_t>(i)];
    c.vectors["b" + std::to_string(i)] = tp.travel_times[static_cast<std::size_t>(i)];
  }
  matio::write(os, c);
}

inline TomoProblem load_tomo(std::istream& is) {
  const matio::Container c = matio::read(is);
  if (c.kind != "tomo") throw std::runtime_error("container: expected tomo");
  TomoProblem tp;
  tp.dims = GridDims{static_cast<int>(c.scalar("nx")), static_cast<int>(c.scalar("ny")),
                     static_cast<int>(c.scalar("nz"))};
  tp.noise_std = c.scalar("noise_std");
  tp.radius = c.scalar("radius");
  tp.x_true = c.vector("x_true");
  const int nodes = static_cast<int>(c.scalar("nodes"));
  for (int i = 0; i < nodes; ++i) {
    tp.ray_matrices.push_back(c.matrix("A" + std::to_string(i)));
    tp.travel_times.push_back(c.vector("b" + std::to_string(i)));
  }
  return tp;
}

}  // namespace dcgd
