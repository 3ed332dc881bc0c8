#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "gnest/estimator.hpp"
#include "support.hpp"

using Catch::Matchers::WithinAbs;
using gnest::Errc;
using gnest::Graphon;
using gnest::PiecewiseConstant;
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

PiecewiseConstant noisy_observation(std::size_t n, std::uint64_t seed) {
  const auto truth = gnest::solve_lq_sbm(ts::four_community_q(), ts::four_community_pi(), 1.0,
                                         Eigen::Vector4d(0.8, 0.6, 1.0, 0.8));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    s[i] = truth.values[std::min<int>(3, static_cast<int>(x * 4))] + noise(rng);
  }
  return PiecewiseConstant::interpolate(s);
}

PiecewiseConstant exact_observation() {
  const auto eta = ts::four_community_eta();
  return gnest::solve_fixed_point(ts::four_community_graphon(), ts::four_community_game(), eta, {1e-15, 100000})
      .strategy;
}

}  // namespace

TEST_CASE("objective equals the squared L2 distance") {
  const Graphon g = ts::four_community_graphon();
  const auto game = ts::four_community_game();
  const auto obs = noisy_observation(37, 1);
  const gnest::Objective obj(obs, g, game);
  for (const std::vector<double>& eta :
       {std::vector<double>{0.8, 0.6, 1.0, 0.8}, {0.3, 1.1, 0.2, 0.9}, {1.2, 1.2, 1.2, 1.2}}) {
    const auto s = gnest::solve_fixed_point(g, game, eta, {1e-15, 100000}).strategy;
    const double d = gnest::l2_distance(obs, s);
    CHECK_THAT(obj.value(eta), WithinAbs(d * d, 1e-13));
    CHECK_THAT(gnest::objective(obs, g, game, eta), WithinAbs(d * d, 1e-13));
  }
  const std::vector<double> outside{0.8, 0.6, 1.0, 1.3};
  CHECK(code_of([&] { gnest::objective(obs, g, game, outside); }) == Errc::parameter_out_of_box);
}

TEST_CASE("gradient and Hessian agree with finite differences of the objective") {
  const Graphon g = ts::four_community_graphon();
  const auto game = ts::four_community_game();
  const auto obs = noisy_observation(101, 2);
  const gnest::Objective obj(obs, g, game);
  const std::vector<double> eta{0.7, 0.5, 0.9, 0.85};
  const Eigen::VectorXd grad = obj.gradient(eta);
  const auto hess = obj.hessian(eta);
  const double h = 1e-6;
  for (std::size_t i = 0; i < 4; ++i) {
    auto up = eta, dn = eta;
    up[i] += h;
    dn[i] -= h;
    const double fd = (obj.value(up) - obj.value(dn)) / (2 * h);
    CHECK(std::abs(fd - grad[i]) <= 1e-5 * std::max(1.0, std::abs(grad[i])));
    const Eigen::VectorXd dg = (obj.gradient(up) - obj.gradient(dn)) / (2 * h);
    for (Eigen::Index j = 0; j < 4; ++j)
      CHECK(std::abs(dg[j] - hess.matrix(static_cast<Eigen::Index>(i), j)) <= 1e-5);
  }
  CHECK(hess.matrix.isApprox(hess.matrix.transpose()));
}

TEST_CASE("at an exact observation the residual term vanishes") {
  const Graphon g = ts::four_community_graphon();
  const auto game = ts::four_community_game();
  const gnest::Objective obj(exact_observation(), g, game);
  const auto eta = ts::four_community_eta();
  CHECK(obj.value(eta) <= 1e-28);
  CHECK(obj.gradient(eta).norm() <= 1e-13);
  const auto h = obj.hessian(eta);
  CHECK(h.t2.norm() <= 1e-13);
  CHECK(h.min_eigenvalue > 0.0);
  CHECK(obj.within_cell_spread() == 0.0);
}

TEST_CASE("Halton multistart points") {
  CHECK(gnest::detail::radical_inverse(1, 2) == 0.5);
  CHECK(gnest::detail::radical_inverse(2, 2) == 0.25);
  CHECK(gnest::detail::radical_inverse(3, 2) == 0.75);
  CHECK_THAT(gnest::detail::radical_inverse(1, 3), WithinAbs(1.0 / 3.0, 1e-16));
  CHECK(gnest::detail::nth_prime(0) == 2);
  CHECK(gnest::detail::nth_prime(3) == 7);
  const Eigen::Vector3d lo(0.0, 1.0, -1.0), hi(1.0, 3.0, 1.0);
  const auto pts = gnest::multistart_points(lo, hi, 8);
  REQUIRE(pts.size() == 9);
  CHECK(pts[0].isApprox(Eigen::Vector3d(0.5, 2.0, 0.0)));
  CHECK(pts[1].isApprox(Eigen::Vector3d(0.5, 1.0 + 2.0 / 3.0, -1.0 + 0.4)));
  for (const auto& p : pts) CHECK(((p - lo).minCoeff() >= 0.0 && (hi - p).minCoeff() >= 0.0));
}

TEST_CASE("projected descent decreases the objective and stays in the box") {
  const Graphon g = ts::four_community_graphon();
  const auto game = ts::four_community_game();
  const gnest::Objective obj(noisy_observation(200, 4), g, game);
  const Eigen::Vector4d lo = Eigen::Vector4d::Constant(0.01), hi = Eigen::Vector4d::Constant(1.2);
  for (const Eigen::Vector4d& start : {Eigen::Vector4d(0.1, 1.1, 0.1, 1.1), Eigen::Vector4d(1.2, 0.05, 0.6, 0.3)}) {
    const double j0 = obj.value(gnest::detail::as_span(start));
    const auto run = gnest::projected_descent(obj, lo, hi, start, {});
    CHECK(run.converged);
    CHECK(run.value <= j0);
    CHECK((run.eta - lo).minCoeff() >= 0.0);
    CHECK((hi - run.eta).minCoeff() >= 0.0);
  }
}

TEST_CASE("plain Armijo steps reach the same minimizer as spectral steps") {
  const Graphon g = ts::four_community_graphon();
  const auto game = ts::four_community_game();
  const auto obs = noisy_observation(160, 5);
  gnest::OptimizerOptions plain;
  plain.spectral_step = false;
  plain.max_iter = 200000;
  plain.starts = 0;
  gnest::OptimizerOptions fast;
  fast.starts = 0;
  const auto a = gnest::estimate(obs, g, game, plain);
  const auto b = gnest::estimate(obs, g, game, fast);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK((a.eta_hat - b.eta_hat).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(b.iterations_total < a.iterations_total);
}

TEST_CASE("self-recovery on a grid graphon with the homogeneous game") {
  const Graphon g = Graphon::rasterize([](double x, double y) { return 0.9 * std::exp(-2.0 * (x + y)); }, 60);
  const auto game = ts::homogeneous_game();
  const std::vector<double> eta{0.9, 0.7};
  const auto obs = gnest::solve_fixed_point(g, game, eta, {1e-15, 100000}).strategy;
  const auto est = gnest::estimate(obs, g, game);
  CHECK(est.converged);
  CHECK(std::abs(est.eta_hat[0] - 0.9) <= 1e-6);
  CHECK(std::abs(est.eta_hat[1] - 0.7) <= 1e-6);
  CHECK(est.objective <= 1e-12);
  CHECK(est.starts == 9);
}

TEST_CASE("flat directions resolve to the lexicographically smallest minimizer") {
  const Graphon g = Graphon::constant(0.5);
  const auto game = ts::homogeneous_game(2.0, 1.5);
  const auto obs = PiecewiseConstant::constant(1.0 / 0.75);  // eta1 / (1 - 0.5 eta2) = 4/3
  const auto a = gnest::estimate(obs, g, game);
  const auto b = gnest::estimate(obs, g, game);
  CHECK(a.eta_hat == b.eta_hat);
  CHECK(a.objective <= 1e-12);
  CHECK_THAT(a.eta_hat[0] / (1.0 - 0.5 * a.eta_hat[1]), WithinAbs(4.0 / 3.0, 1e-5));
}

TEST_CASE("infeasible parameter boxes are rejected") {
  const auto obs = PiecewiseConstant::constant(1.0);
  CHECK(code_of([&] { gnest::estimate(obs, Graphon::constant(0.8), ts::homogeneous_game(2.0, 1.5)); }) ==
        Errc::infeasible_parameter_set);
}
