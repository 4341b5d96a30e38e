#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "prs3/errors.hpp"
#include "prs3/stiffness.hpp"

using namespace prs3;

namespace {

const ManipulatorConfig kDefault = ManipulatorConfig::defaults();

Matrix6d random_spd(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix6d A;
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) A(r, c) = n(rng);
  return A * A.transpose() + Matrix6d::Identity();
}

double min_eigenvalue(const Matrix6d& K) {
  return Eigen::SelfAdjointEigenSolver<Matrix6d>(K).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("series coefficients of the reference machine") {
  const double k_a = series_stiffness({3.8e7, 3.2e9, 976e6});
  CHECK(k_a == doctest::Approx(1.0 / (1 / 3.8e7 + 1 / 3.2e9 + 1 / 976e6)).epsilon(1e-15));
  CHECK(k_a == doctest::Approx(3.6163e7).epsilon(1e-3));
  const double k_c_deg = series_stiffness({8.9e5, 7.8e5});
  CHECK(k_c_deg == doctest::Approx(4.1569e5).epsilon(1e-3));

  const Pose home = solve_closure(0.0, 0.0, 0.39, kDefault);
  const ComponentStiffness cs = component_stiffness(home, kDefault);
  for (int i = 0; i < 3; ++i) {
    CHECK(cs.k_axial[i] == doctest::Approx(k_a).epsilon(1e-15));
    CHECK(cs.k_torsional[i] == doctest::Approx(k_c_deg * 180.0 / oracle::kPi).epsilon(1e-12));
    CHECK(cs.K_diag(i) == cs.k_axial[i]);
    CHECK(cs.K_diag(3 + i) == cs.k_torsional[i]);
  }
}

TEST_CASE("series combination properties") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(series_stiffness({5.0, inf, inf}) == 5.0);
  CHECK(series_stiffness({inf}) == inf);
  CHECK(series_stiffness({2.0, 2.0}) == 1.0);
  CHECK_THROWS_AS(series_stiffness({1.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(series_stiffness({-1.0}), ParameterError);
  CHECK_THROWS_AS(series_stiffness({std::nan("")}), ParameterError);

  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(1e3, 1e10);
  for (int k = 0; k < 1000; ++k) {
    const double a = u(rng), b = u(rng), c = u(rng);
    const double s = series_stiffness({a, b, c});
    CHECK(s < std::min({a, b, c}));
    CHECK(s > 0.0);
    CHECK(s == doctest::Approx(series_stiffness({c, a, b})).epsilon(1e-15));
  }
}

TEST_CASE("parametric carriage model") {
  ManipulatorConfig c = kDefault;
  c.compliance_model = ComplianceModel::parametric;
  c.parametric = ParametricCompliance{2e8, 8e8, 5e8, 7e8, 0.0};
  CHECK(carriage_stiffness(0.0, c) == doctest::Approx(1.0 / (1 / 5e8 + 1 / 7e8)).epsilon(1e-15));
  CHECK(carriage_stiffness(0.1, c) ==
        doctest::Approx(1.0 / (0.1 / 2e8 + 1 / 5e8 + 1 / 7e8)).epsilon(1e-15));
  // Lengthening the loaded screw softens the carriage.
  CHECK(carriage_stiffness(0.2, c) < carriage_stiffness(0.1, c));
  CHECK_THROWS_AS(carriage_stiffness(-0.01, c), ParameterError);
  c.parametric->screw_length_offset = 0.05;
  CHECK_NOTHROW(carriage_stiffness(-0.01, c));
  CHECK(limb_axial_stiffness(0.0, c) ==
        doctest::Approx(series_stiffness({carriage_stiffness(0.0, c), 3.2e9, 8e8 / 0.4})).epsilon(1e-15));
  // The lumped model ignores the carriage height.
  CHECK(carriage_stiffness(0.3, kDefault) == 3.8e7);
}

TEST_CASE("spherical joint stiffness") {
  SUBCASE("anisotropic axes in the identity frame") {
    const SphericalAxes axes{1.0, 2.0, 3.0};
    const Eigen::Matrix3d K = spherical_stiffness(Eigen::Matrix3d::Identity(), axes);
    const Eigen::Vector3d s2(0, 1, 0);
    CHECK(s2.dot(K * s2) == 2.0);
  }
  SUBCASE("spectrum is frame independent") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const SphericalAxes axes{1e6, 4e6, 9e6};
    for (int k = 0; k < 50; ++k) {
      const Eigen::Matrix3d R = oracle::rotvec(Eigen::Vector3d(u(rng), u(rng), u(rng)));
      const Eigen::Matrix3d K = spherical_stiffness(R, axes);
      CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-8);
      Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(K).eigenvalues();
      CHECK(ev(0) == doctest::Approx(1e6).epsilon(1e-10));
      CHECK(ev(1) == doctest::Approx(4e6).epsilon(1e-10));
      CHECK(ev(2) == doctest::Approx(9e6).epsilon(1e-10));
    }
  }
  SUBCASE("isotropic joints give a pose-independent torsional coefficient") {
    const Pose pose = solve_closure(oracle::deg(25), oracle::deg(-30), 0.39, kDefault);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(limb_torsional_stiffness(pose, i, kDefault) ==
            doctest::Approx(series_stiffness({8.9e5, 7.8e5}) * 180.0 / oracle::kPi).epsilon(1e-12));
    }
  }
}

TEST_CASE("Cartesian stiffness at home") {
  const Pose home = solve_closure(0.0, 0.0, 0.39, kDefault);
  const CartesianStiffness K = assemble_cartesian_stiffness(home, kDefault);
  CHECK((K.K - K.K.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * K.K.cwiseAbs().maxCoeff());
  CHECK(min_eigenvalue(K.K) > 0.0);
  CHECK(K.K(0, 0) == doctest::Approx(K.K(1, 1)).epsilon(1e-9));
  CHECK(K.K(3, 3) == doctest::Approx(K.K(4, 4)).epsilon(1e-9));

  // Three axial springs along the carriage direction: k_pz = sum k_a (dd/dz)^2.
  const oracle::Machine m;
  const double k_a = series_stiffness({3.8e7, 3.2e9, 976e6});
  double kpz = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double dd_dz = oracle::central(
        [&](double s) { return m.sphere_height(i, home.p + Eigen::Vector3d(0, 0, s), home.R); }, 1e-6);
    kpz += k_a * dd_dz * dd_dz;
  }
  CHECK(K.K(2, 2) == doctest::Approx(kpz).epsilon(1e-9));
  CHECK(K.K(2, 2) == doctest::Approx(3.0 * k_a).epsilon(1e-12));

  // Blocks partition K.
  CHECK((K.K_a_par() - K.K.topLeftCorner<3, 3>()).norm() == 0.0);
  CHECK((K.K_c_perp() - K.K.bottomRightCorner<3, 3>()).norm() == 0.0);
  CHECK((K.K_a_perp() - K.K_c_par().transpose()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("Cartesian stiffness is symmetric positive definite across the workspace") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(-oracle::deg(40), oracle::deg(40));
  for (int k = 0; k < 100; ++k) {
    const Pose pose = solve_closure(u(rng), u(rng), 0.39, kDefault);
    const Matrix6d K = assemble_cartesian_stiffness(pose, kDefault).K;
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * K.cwiseAbs().maxCoeff());
    CHECK(min_eigenvalue(K) > 0.0);
  }
}

TEST_CASE("component scaling") {
  const Pose pose = solve_closure(oracle::deg(20), oracle::deg(10), 0.39, kDefault);
  const JacobianBundle J = inverse_jacobian(pose, kDefault);
  ComponentStiffness cs = component_stiffness(pose, kDefault);
  const Matrix6d K1 = assemble_cartesian_stiffness(J, cs).K;
  cs.K_diag *= 2.0;
  CHECK((assemble_cartesian_stiffness(J, cs).K - 2.0 * K1).norm() == 0.0);
  cs.K_diag *= 3.7 / 2.0;
  CHECK((assemble_cartesian_stiffness(J, cs).K - 3.7 * K1).cwiseAbs().maxCoeff() <
        1e-14 * K1.cwiseAbs().maxCoeff());
}

TEST_CASE("reference shift") {
  const Pose pose = solve_closure(oracle::deg(15), oracle::deg(-5), 0.39, kDefault);
  const CartesianStiffness K = assemble_cartesian_stiffness(pose, kDefault);
  const double scale = K.K.cwiseAbs().maxCoeff();

  SUBCASE("zero offset") {
    CHECK((shift_reference(K, Eigen::Vector3d::Zero()).K - K.K).cwiseAbs().maxCoeff() <= 1e-15 * scale);
  }
  SUBCASE("closed form for a diagonal matrix") {
    CartesianStiffness D;
    Vector6d diag;
    diag << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
    D.K = diag.asDiagonal();
    const double h = 0.1;
    const Matrix6d S = shift_reference(D, Eigen::Vector3d(0, 0, h)).K;
    CHECK(S(3, 3) == doctest::Approx(4.0 + 2.0 * h * h).epsilon(1e-15));
    CHECK(S(4, 4) == doctest::Approx(5.0 + 1.0 * h * h).epsilon(1e-15));
    CHECK(S(5, 5) == 6.0);
    CHECK(S(0, 4) == doctest::Approx(-h).epsilon(1e-15));
    CHECK(S(1, 3) == doctest::Approx(2.0 * h).epsilon(1e-15));
    CHECK(S(0, 0) == 1.0);
    CHECK(S(2, 2) == 3.0);
  }
  SUBCASE("shifting out and back") {
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (int k = 0; k < 20; ++k) {
      const Eigen::Vector3d v(u(rng), u(rng), u(rng));
      const CartesianStiffness there = shift_reference(K, v);
      CHECK((there.K - there.K.transpose()).norm() == 0.0);
      CHECK(min_eigenvalue(there.K) > 0.0);
      CHECK((there.reference_offset - v).norm() == 0.0);
      const CartesianStiffness back = shift_reference(there, -v);
      CHECK((back.K - K.K).cwiseAbs().maxCoeff() < 1e-10 * scale);
      CHECK(back.reference_offset.norm() == 0.0);
    }
  }
  SUBCASE("translation block is invariant") {
    const Matrix6d S = shift_reference(K, Eigen::Vector3d(0.05, -0.02, 0.1)).K;
    CHECK((S.topLeftCorner<3, 3>() - K.K.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff() < 1e-12 * scale);
  }
  SUBCASE("adjoint inverse") {
    const Eigen::Vector3d v(0.1, 0.2, -0.3);
    CHECK((translation_adjoint(v) * translation_adjoint(-v) - Matrix6d::Identity()).norm() < 1e-15);
  }
}

TEST_CASE("characteristic length") {
  std::mt19937_64 rng(59);
  const Matrix6d K = random_spd(rng);
  const Matrix6d S = scale_characteristic_length(K, 0.5);
  CHECK((S.topLeftCorner<3, 3>() - K.topLeftCorner<3, 3>()).norm() == 0.0);
  CHECK((S.topRightCorner<3, 3>() - 2.0 * K.topRightCorner<3, 3>()).norm() == 0.0);
  CHECK((S.bottomRightCorner<3, 3>() - 4.0 * K.bottomRightCorner<3, 3>()).norm() == 0.0);
  CHECK_THROWS_AS(scale_characteristic_length(K, 0.0), ParameterError);

  ManipulatorConfig c = kDefault;
  c.characteristic_length = 0.25;
  const Pose pose = solve_closure(oracle::deg(5), oracle::deg(5), 0.39, c);
  const Matrix6d raw = assemble_cartesian_stiffness(pose, kDefault).K;
  CHECK((assemble_cartesian_stiffness(pose, c).K - scale_characteristic_length(raw, 0.25)).norm() == 0.0);
}

TEST_CASE("diagonal and parasitic reorganisation") {
  std::mt19937_64 rng(61);
  const Matrix6d K = random_spd(rng);
  const DiagonalStiffness d = diagonal_stiffness(K);
  for (int i = 0; i < 6; ++i) CHECK(d.values()[i] == K(i, i));
  const ReorganizedStiffness r = reorganize_by_parasitic(K);
  CHECK(r.K_dd(0, 0) == K(0, 0));
  CHECK(r.K_dd(2, 2) == K(5, 5));
  CHECK(r.K_dd(0, 2) == K(0, 5));
  CHECK(r.K_ff(0, 0) == K(2, 2));
  CHECK(r.K_ff(1, 2) == K(3, 4));
  CHECK(r.K_df(2, 0) == K(5, 2));
  CHECK((r.K_fd - r.K_df.transpose()).norm() == 0.0);
}
