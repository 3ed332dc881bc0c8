#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gnest/diagnostics.hpp"
#include "gnest/equilibrium.hpp"
#include "support.hpp"

using Catch::Matchers::WithinAbs;
using gnest::Errc;
using gnest::Graphon;
namespace ts = testing_support;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const gnest::Error& e) {
    return e.code();
  }
  FAIL("expected gnest::Error");
  return Errc::config;
}

}  // namespace

TEST_CASE("two-community SBM equilibrium by hand") {
  Eigen::Matrix2d q;
  q << 0.8, 0.2, 0.2, 0.4;
  const Eigen::Vector2d pi(0.5, 0.5);
  // (I - 0.5 Q diag(pi)) s = 1 has det 0.7175, so s = (0.95, 0.85) / 0.7175.
  const auto eq = gnest::solve_lq_sbm(q, pi, 1.0, Eigen::Vector2d(0.5, 0.5));
  CHECK_THAT(eq.values[0], WithinAbs(0.95 / 0.7175, 1e-14));
  CHECK_THAT(eq.values[1], WithinAbs(0.85 / 0.7175, 1e-14));
  CHECK_THAT(eq.values[0], WithinAbs(1.324042, 1e-6));
  CHECK_THAT(eq.values[1], WithinAbs(1.184669, 1e-6));
  CHECK_THAT(eq.aggregates[0], WithinAbs(0.4 * eq.values[0] + 0.1 * eq.values[1], 1e-14));
}

TEST_CASE("four-community closed form matches Gaussian elimination") {
  const auto eq = gnest::solve_lq_sbm(ts::four_community_q(), ts::four_community_pi(), 1.0,
                                      Eigen::Vector4d(0.8, 0.6, 1.0, 0.8));
  const auto oracle =
      ts::sbm_equilibrium_oracle(ts::four_community_q(), ts::four_community_pi(), 1.0, ts::four_community_eta());
  for (int k = 0; k < 4; ++k) CHECK_THAT(eq.values[k], WithinAbs(oracle[k], 1e-14));
}

TEST_CASE("fixed-point iteration reproduces the closed forms") {
  const Graphon g = ts::four_community_graphon();
  const auto game = ts::four_community_game();
  const auto eta = ts::four_community_eta();
  const auto fp = gnest::solve_fixed_point(g, game, eta, {1e-13, 100000});
  const auto cf = gnest::solve_lq_sbm(ts::four_community_q(), ts::four_community_pi(), 1.0,
                                      Eigen::Vector4d(0.8, 0.6, 1.0, 0.8));
  CHECK(fp.interior);
  CHECK(fp.residual <= 1e-12);
  for (int k = 0; k < 4; ++k) CHECK_THAT(fp.strategy(0.125 + 0.25 * k), WithinAbs(cf.values[k], 1e-11));

  const Graphon c = Graphon::constant(0.5);
  const std::vector<double> e2{1.0, 0.5};
  const auto hom_fp = gnest::solve_fixed_point(c, ts::homogeneous_game(), e2, {1e-14, 100000});
  const auto hom_cf = gnest::solve_lq_homogeneous(c, e2);
  CHECK_THAT(hom_fp.strategy(0.5), WithinAbs(1.0 / 0.75, 1e-12));
  CHECK_THAT(hom_cf.strategy(0.5), WithinAbs(1.0 / 0.75, 1e-15));
  CHECK_THAT(hom_cf.aggregate(0.5), WithinAbs(0.5 / 0.75, 1e-15));
}

TEST_CASE("homogeneous derivatives agree with a truncated Neumann series") {
  // s = sum_k eta2^k W^k eta1 1, so ds/deta1 = sum eta2^k W^k 1 and
  // ds/deta2 = sum k eta2^(k-1) W^k eta1 1.
  const Graphon g = ts::four_community_graphon();
  const auto game = ts::homogeneous_game();
  const std::vector<double> eta{0.9, 0.7};
  const Eigen::Matrix4d w = ts::four_community_q() * 0.25;
  Eigen::Vector4d pw = Eigen::Vector4d::Ones();
  Eigen::Vector4d d1 = Eigen::Vector4d::Zero(), d2 = Eigen::Vector4d::Zero(), s = Eigen::Vector4d::Zero();
  for (int k = 0; k < 200; ++k) {
    s += std::pow(eta[1], k) * eta[0] * pw;
    d1 += std::pow(eta[1], k) * pw;
    if (k > 0) d2 += k * std::pow(eta[1], k - 1) * eta[0] * pw;
    pw = w * pw;
  }
  const auto sol = gnest::solve_lq_homogeneous(g, eta);
  const auto grad = gnest::equilibrium_gradient(g, game, eta);
  REQUIRE(grad.size() == 2);
  for (int c = 0; c < 4; ++c) {
    const double x = 0.125 + 0.25 * c;
    CHECK_THAT(sol.strategy(x), WithinAbs(s[c], 1e-13));
    CHECK_THAT(grad[0](x), WithinAbs(d1[c], 1e-13));
    CHECK_THAT(grad[1](x), WithinAbs(d2[c], 1e-12));
  }
  const auto hess = gnest::equilibrium_second_derivatives(g, game, eta);
  CHECK_THAT(gnest::l2_distance(hess[0][0], gnest::PiecewiseConstant::constant(0.0)), WithinAbs(0.0, 1e-15));
  CHECK_THAT(gnest::l2_distance(hess[0][1], hess[1][0]), WithinAbs(0.0, 0.0));
}

TEST_CASE("finite-difference checks of the analytic derivatives") {
  CHECK(gnest::fd_check(ts::four_community_graphon(), ts::four_community_game(), ts::four_community_eta(), 1) <= 1e-5);
  CHECK(gnest::fd_check(ts::four_community_graphon(), ts::four_community_game(), ts::four_community_eta(), 2) <= 1e-4);
  const std::vector<double> eta{0.9, 0.7};
  const Graphon grid = Graphon::rasterize([](double x, double y) { return 0.8 * std::exp(-3.0 * std::abs(x - y)); }, 50);
  CHECK(gnest::fd_check(grid, ts::homogeneous_game(), eta, 1) <= 1e-5);
  CHECK(gnest::fd_check(grid, ts::homogeneous_game(), eta, 2) <= 1e-4);
}

TEST_CASE("projection binds when the unconstrained optimum leaves S") {
  const auto game = gnest::GameSpec::lq_homogeneous(gnest::StrategySet::make(0.0, 1.0),
                                                    gnest::ParameterBox::make({0.1, 0.1}, {3.0, 1.5}));
  const std::vector<double> eta{2.0, 0.5};
  const auto eq = gnest::solve_fixed_point(Graphon::constant(0.5), game, eta);
  CHECK_FALSE(eq.interior);
  CHECK(eq.strategy(0.3) == 1.0);
  CHECK(code_of([&] { gnest::equilibrium_gradient(Graphon::constant(0.5), game, eta); }) == Errc::not_interior);
}

TEST_CASE("spectral and contraction errors") {
  const std::vector<double> eta{1.0, 1.4};
  CHECK(code_of([&] { gnest::solve_fixed_point(Graphon::constant(0.8), ts::homogeneous_game(), eta); }) ==
        Errc::not_a_contraction);
  CHECK(code_of([&] { gnest::solve_lq_homogeneous(Graphon::constant(0.8), eta); }) ==
        Errc::spectral_condition_violated);
  CHECK(code_of([&] {
          gnest::solve_lq_sbm(Eigen::Matrix2d::Constant(1.0), Eigen::Vector2d(0.5, 0.5), 1.0, Eigen::Vector2d(1.5, 1.5));
        }) == Errc::spectral_condition_violated);
  const std::vector<double> wrong{1.0};
  CHECK(code_of([&] { gnest::solve_fixed_point(Graphon::constant(0.5), ts::homogeneous_game(), wrong); }) ==
        Errc::parameter_out_of_box);
}

TEST_CASE("equilibrium is monotone in the aggregate coefficient") {
  const Graphon g = ts::four_community_graphon();
  const auto game = ts::four_community_game();
  auto eta = ts::four_community_eta();
  const auto base = gnest::solve_fixed_point(g, game, eta);
  eta[2] += 0.1;
  const auto up = gnest::solve_fixed_point(g, game, eta);
  for (double x : {0.1, 0.3, 0.6, 0.9}) CHECK(up.strategy(x) >= base.strategy(x));
  CHECK(up.strategy(0.6) > base.strategy(0.6));
}
