#include "dcgd/network.hpp"

#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "dcgd/rng.hpp"

namespace {

using dcgd::LazyShift;

TEST(Topology, Lattice5x5) {
  const auto g = dcgd::make_lattice(5, 5);
  EXPECT_EQ(g.node_count, 25);
  EXPECT_EQ(g.edges.size(), 40u);  // 2 * 5 * 4 grid edges
  EXPECT_TRUE(g.is_connected());
  const auto deg = g.degrees();
  EXPECT_EQ(deg[12], 4);  // interior node
  EXPECT_EQ(deg[0], 2);   // corner
}

TEST(Topology, RingTriangle) {
  const auto g = dcgd::make_ring(3);
  EXPECT_EQ(g.node_count, 3);
  EXPECT_EQ(g.edges.size(), 3u);
  for (int d : g.degrees()) EXPECT_EQ(d, 2);
}

TEST(Topology, CompleteTwoNodes) {
  const auto g = dcgd::make_complete(2);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0], std::make_pair(0, 1));
}

TEST(Topology, KRegularParameterChecks) {
  EXPECT_THROW(dcgd::make_random_regular(5, 3, 1), std::invalid_argument);  // m*k odd
  EXPECT_THROW(dcgd::make_random_regular(4, 4, 1), std::invalid_argument);  // k >= m
  const auto g = dcgd::make_random_regular(8, 3, 7);
  EXPECT_TRUE(g.is_connected());
  for (int d : g.degrees()) EXPECT_EQ(d, 3);
}

TEST(Topology, EdgeListRoundTrip) {
  const auto g = dcgd::make_lattice(3, 4);
  std::stringstream ss;
  dcgd::write_edge_list(ss, g);
  const auto back = dcgd::read_edge_list(ss);
  EXPECT_EQ(back.node_count, g.node_count);
  EXPECT_EQ(back.edges, g.edges);
}

TEST(Mixing, RawMetropolisOnRing4IsIndefinite) {
  const auto g = dcgd::make_ring(4);
  // eigenvalues of the raw weight matrix are {1, 1/3, 1/3, -1/3}
  EXPECT_THROW(dcgd::metropolis_mixing(g, LazyShift::off), std::runtime_error);
}

TEST(Mixing, LazyMetropolisOnRing4) {
  const auto g = dcgd::make_ring(4);
  const auto mix = dcgd::metropolis_mixing(g, LazyShift::on);
  EXPECT_NEAR(mix.lambda, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(mix.weights(0, 1), 1.0 / 6.0, 1e-12);  // half the raw 1/3
  EXPECT_NEAR(mix.weights(0, 0), 2.0 / 3.0, 1e-12);
  EXPECT_TRUE(dcgd::validate_mixing(mix.weights, g).all_pass());
}

TEST(Mixing, AutomaticShiftKicksInOnlyWhenNeeded) {
  const auto ring = dcgd::make_ring(4);
  const auto shifted = dcgd::metropolis_mixing(ring, LazyShift::automatic);
  EXPECT_NEAR(shifted.lambda, 2.0 / 3.0, 1e-12);

  // complete graph Metropolis is W = J, already PSD, so no shift happens
  const auto complete = dcgd::make_complete(4);
  const auto plain = dcgd::metropolis_mixing(complete, LazyShift::automatic);
  EXPECT_NEAR(plain.lambda, 0.0, 1e-12);
  EXPECT_NEAR(plain.weights(0, 1), 0.25, 1e-12);
}

TEST(Mixing, UniformCompleteIsAveraging) {
  const auto mix = dcgd::uniform_complete_mixing(5);
  EXPECT_NEAR(mix.lambda, 0.0, 1e-12);
  EXPECT_NEAR(dcgd::spectral_gap(mix.weights), 0.0, 1e-10);
}

TEST(Mixing, SpectralGapMatchesSecondEigenvalue) {
  const auto g = dcgd::make_lattice(5, 5);
  const auto mix = dcgd::metropolis_mixing(g, LazyShift::on);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mix.weights, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  EXPECT_NEAR(ev(ev.size() - 1), 1.0, 1e-12);               // top eigenvalue
  EXPECT_NEAR(mix.lambda, ev(ev.size() - 2), 1e-10);        // second largest
  EXPECT_GT(mix.lambda, 0.0);
  EXPECT_LT(mix.lambda, 1.0);
  // regression fixture for the lattice contraction factor
  EXPECT_NEAR(mix.lambda, 0.958106469009701, 1e-9);
}

TEST(Mixing, ValidationCatchesScaledRow) {
  const auto g = dcgd::make_ring(4);
  auto mix = dcgd::metropolis_mixing(g, LazyShift::on);
  mix.weights.row(0) *= 1.01;
  const auto report = dcgd::validate_mixing(mix.weights, g);
  EXPECT_FALSE(report["row_sums"].pass);
  EXPECT_FALSE(report.all_pass());
}

TEST(Mixing, ValidationCatchesOffGraphWeight) {
  const auto g = dcgd::make_ring(5);
  auto mix = dcgd::metropolis_mixing(g, LazyShift::on);
  mix.weights(0, 2) = 0.1;  // not an edge
  mix.weights(2, 0) = 0.1;
  const auto report = dcgd::validate_mixing(mix.weights, g);
  EXPECT_FALSE(report["sparsity"].pass);
}

// doubly stochastic, symmetric, PSD across the generator suite; mixing
// contracts exactly the non-consensual component
TEST(Mixing, InvariantsAcrossGeneratorSuite) {
  std::vector<dcgd::NetworkTopology> suite;
  suite.push_back(dcgd::make_lattice(4, 6));
  suite.push_back(dcgd::make_ring(7));
  suite.push_back(dcgd::make_complete(6));
  suite.push_back(dcgd::make_random_regular(10, 3, 11));

  for (const auto& g : suite) {
    const auto mix = dcgd::metropolis_mixing(g, LazyShift::on);
    const auto& W = mix.weights;
    const int m = g.node_count;

    EXPECT_LE((W * Eigen::VectorXd::Ones(m) - Eigen::VectorXd::Ones(m)).cwiseAbs().maxCoeff(),
              1e-12);
    EXPECT_LE((W - W.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W, Eigen::EigenvaluesOnly);
    EXPECT_GE(es.eigenvalues()(0), -1e-10);
    EXPECT_LT(mix.lambda, 1.0);

    dcgd::RngStream rng(dcgd::stream_key(314, "mixing-prop", g.node_count));
    for (int rep = 0; rep < 100; ++rep) {
      // consensual vectors are fixed points
      Eigen::VectorXd consensual = Eigen::VectorXd::Constant(m, rng.next_gaussian());
      EXPECT_LE((W * consensual - consensual).norm(), 1e-12 * (1.0 + consensual.norm()));

      // zero-mean vectors contract by at least lambda
      Eigen::VectorXd v(m);
      for (int i = 0; i < m; ++i) v[i] = rng.next_gaussian();
      v.array() -= v.mean();
      EXPECT_LE((W * v).norm(), mix.lambda * v.norm() + 1e-10);
    }
  }
}

}  // namespace
