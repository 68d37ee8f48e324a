#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dcgd/rng.hpp"

namespace dcgd {

// Undirected simple connected graph over node_count nodes. Edges are stored
// as (i, j) with i < j, sorted and deduplicated.
struct NetworkTopology {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;

  std::vector<int> degrees() const {
    std::vector<int> deg(node_count, 0);
    for (const auto& [i, j] : edges) {
      ++deg[i];
      ++deg[j];
    }
    return deg;
  }

  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(node_count);
    for (const auto& [i, j] : edges) {
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
    return adj;
  }

  bool has_edge(int i, int j) const {
    if (i > j) std::swap(i, j);
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
  }

  bool is_connected() const {
    if (node_count <= 1) return true;
    const auto adj = adjacency();
    std::vector<char> seen(node_count, 0);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int v : adj[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          ++reached;
          frontier.push(v);
        }
      }
    }
    return reached == node_count;
  }

  bool is_complete() const {
    return static_cast<long>(edges.size()) ==
           static_cast<long>(node_count) * (node_count - 1) / 2;
  }
};

namespace detail {

inline void normalize_edges(NetworkTopology& g) {
  for (auto& e : g.edges) {
    if (e.first > e.second) std::swap(e.first, e.second);
    if (e.first == e.second) throw std::invalid_argument("self-loop in edge list");
    if (e.first < 0 || e.second >= g.node_count)
      throw std::invalid_argument("edge endpoint out of range");
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
}

}  // namespace detail

inline NetworkTopology make_lattice(int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("lattice2d: rows and cols must be >= 1");
  NetworkTopology g;
  g.node_count = rows * cols;
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) g.edges.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < rows) g.edges.emplace_back(id(r, c), id(r + 1, c));
    }
  detail::normalize_edges(g);
  return g;
}

inline NetworkTopology make_ring(int m) {
  if (m < 1) throw std::invalid_argument("ring: m must be >= 1");
  NetworkTopology g;
  g.node_count = m;
  for (int i = 0; i < m && m > 1; ++i) g.edges.emplace_back(i, (i + 1) % m);
  detail::normalize_edges(g);
  return g;
}

inline NetworkTopology make_complete(int m) {
  if (m < 1) throw std::invalid_argument("complete: m must be >= 1");
  NetworkTopology g;
  g.node_count = m;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) g.edges.emplace_back(i, j);
  return g;
}

// Random k-regular graph via the pairing model; rejects multigraphs and
// retries with an incremented substream until the result is simple and
// connected.
inline NetworkTopology make_random_regular(int m, int k, std::uint64_t seed,
                                           int max_attempts = 100) {
  if (m < 1 || k < 0 || k >= m) throw std::invalid_argument("kregular: need 0 <= k < m");
  if ((static_cast<long>(m) * k) % 2 != 0)
    throw std::invalid_argument("kregular: m*k must be even");
  if (k == 0 && m > 1) throw std::invalid_argument("kregular: k=0 is disconnected for m>1");

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    RngStream rng(stream_key(seed, "kregular", static_cast<std::uint64_t>(attempt)));
    std::vector<int> stubs;
    stubs.reserve(static_cast<std::size_t>(m) * k);
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < k; ++c) stubs.push_back(i);
    for (std::size_t i = stubs.size(); i > 1; --i)
      std::swap(stubs[i - 1], stubs[rng.next_int(0, static_cast<std::int64_t>(i) - 1)]);

    NetworkTopology g;
    g.node_count = m;
    bool simple = true;
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
      int a = stubs[i], b = stubs[i + 1];
      if (a == b) {
        simple = false;
        break;
      }
      if (a > b) std::swap(a, b);
      edges.emplace_back(a, b);
    }
    if (!simple) continue;
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) continue;
    g.edges = std::move(edges);
    if (g.is_connected()) return g;
  }
  throw std::runtime_error("kregular: no simple connected graph after retries");
}

// Symmetric doubly stochastic weight matrix with sparsity matching the graph,
// plus its deviation norm lambda = ||W - J||_2 (the contraction factor of the
// disagreement component under mixing).
struct MixingMatrix {
  Eigen::MatrixXd weights;
  double lambda = 0.0;

  int size() const { return static_cast<int>(weights.rows()); }
};

// lambda = ||W - J||_2 by symmetric eigendecomposition; for PSD doubly
// stochastic W this equals the second largest eigenvalue of W.
inline double spectral_gap(const Eigen::MatrixXd& W) {
  const Eigen::Index m = W.rows();
  Eigen::MatrixXd dev = W - Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dev, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(m - 1)));
}

enum class LazyShift { off, on, automatic };

// Metropolis-Hastings weights: w_ij = 1 / (1 + max(deg_i, deg_j)) on edges,
// w_ii absorbs the remainder. The lazy variant (I + W)/2 is positive
// semidefinite for any graph; the raw variant is rejected if it is not.
inline MixingMatrix metropolis_mixing(const NetworkTopology& g, LazyShift lazy = LazyShift::on) {
  const int m = g.node_count;
  const auto deg = g.degrees();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m, m);
  for (const auto& [i, j] : g.edges) {
    const double w = 1.0 / (1.0 + static_cast<double>(std::max(deg[i], deg[j])));
    W(i, j) = w;
    W(j, i) = w;
  }
  for (int i = 0; i < m; ++i) W(i, i) = 1.0 - W.row(i).sum();

  auto min_eigenvalue = [](const Eigen::MatrixXd& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  };

  bool shift = (lazy == LazyShift::on);
  if (lazy != LazyShift::on && min_eigenvalue(W) < -1e-10) {
    if (lazy == LazyShift::off)
      throw std::runtime_error(
          "metropolis_mixing: weight matrix has a negative eigenvalue; "
          "use the lazy (I+W)/2 variant");
    shift = true;
  }
  if (shift) W = 0.5 * (Eigen::MatrixXd::Identity(m, m) + W);

  return MixingMatrix{W, spectral_gap(W)};
}

// W = J: uniform averaging, only valid on a complete graph. lambda = 0.
inline MixingMatrix uniform_complete_mixing(int m) {
  if (m < 1) throw std::invalid_argument("uniform_complete_mixing: m must be >= 1");
  Eigen::MatrixXd W = Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
  return MixingMatrix{std::move(W), 0.0};
}

struct MixingValidation {
  struct Check {
    std::string name;
    bool pass;
    double value;  // measured quantity the check was decided on
  };
  std::vector<Check> checks;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  const Check& operator[](std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw std::out_of_range("no such check");
  }
};

// Checks the standing assumptions on W: symmetry, stochastic rows, sparsity
// confined to the edge set, positive semidefiniteness, and contraction of the
// disagreement component. Failures are reported, not thrown.
inline MixingValidation validate_mixing(const Eigen::MatrixXd& W, const NetworkTopology& g) {
  if (W.rows() != W.cols() || W.rows() != g.node_count)
    throw std::invalid_argument("validate_mixing: dimension mismatch");
  const int m = g.node_count;
  MixingValidation report;

  const double asym = (W - W.transpose()).cwiseAbs().maxCoeff();
  report.checks.push_back({"symmetry", asym <= 1e-12, asym});

  const double row_err = (W.rowwise().sum().array() - 1.0).abs().maxCoeff();
  report.checks.push_back({"row_sums", row_err <= 1e-12, row_err});

  double off_graph = 0.0;
  double min_entry = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      min_entry = std::min(min_entry, W(i, j));
      if (i != j && W(i, j) > 0.0 && !g.has_edge(i, j))
        off_graph = std::max(off_graph, W(i, j));
    }
  report.checks.push_back({"sparsity", off_graph == 0.0, off_graph});
  report.checks.push_back({"nonnegative", min_entry >= 0.0, min_entry});

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues()(0);
  report.checks.push_back({"psd", min_eig >= -1e-10, min_eig});

  const double lambda = spectral_gap(W);
  const bool lambda_ok = lambda < 1.0 - 1e-12 && (lambda > 1e-12 || g.is_complete());
  report.checks.push_back({"lambda_range", lambda_ok, lambda});

  return report;
}

// Edge-list text format: first line is the node count, then one "i j" pair
// per line.
inline void write_edge_list(std::ostream& os, const NetworkTopology& g) {
  os << g.node_count << "\n";
  for (const auto& [i, j] : g.edges) os << i << " " << j << "\n";
}

inline NetworkTopology read_edge_list(std::istream& is) {
  NetworkTopology g;
  if (!(is >> g.node_count) || g.node_count < 1)
    throw std::runtime_error("edge list: bad node count");
  int i, j;
  while (is >> i >> j) g.edges.emplace_back(i, j);
  detail::normalize_edges(g);
  return g;
}

}  // namespace dcgd
