// Copyright 2026 The diffmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <span>

#include "diffmpc/errors.hpp"
#include "diffmpc/stage_function.hpp"
#include "oracles.hpp"

namespace diffmpc {
namespace {

// out = [theta_0 sin(z_0) + z_1^2 theta_1;  exp(z_0 z_1) + theta_0 theta_1 z_2]
struct Sample {
  int rows(int) const { return 2; }
  template <class T>
  void operator()(int, std::span<const T> z, std::span<const T> th,
                  std::span<T> out) const {
    using std::exp;
    using std::sin;
    out[0] = th[0] * sin(z[0]) + z[1] * z[1] * th[1];
    out[1] = exp(z[0] * z[1]) + th[0] * th[1] * z[2];
  }
};

const Vector kZ = (Vector(3) << 0.3, -0.7, 1.2).finished();
const Vector kTheta = (Vector(2) << 1.5, -0.4).finished();

TEST(Dual, ArithmeticMatchesHandDerivatives) {
  using D = Dual<double>;
  const D x(2.0, 1.0);
  const D f = x * x * 3.0 + 1.0 / x - sqrt(x);
  // d/dx (3x^2 + 1/x - sqrt x) = 6x - 1/x^2 - 1/(2 sqrt x)
  EXPECT_NEAR(f.v, 12.0 + 0.5 - std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(f.d, 12.0 - 0.25 - 0.5 / std::sqrt(2.0), 1e-15);
  const D g = log(exp(x)) + tanh(x) * cos(x);
  const double th = std::tanh(2.0);
  EXPECT_NEAR(g.d, 1.0 + (1 - th * th) * std::cos(2.0) - th * std::sin(2.0),
              1e-14);
  const D p = pow(x, 1.5);
  EXPECT_NEAR(p.d, 1.5 * std::sqrt(2.0), 1e-14);
}

TEST(Dual, NestedDualGivesSecondDerivative) {
  using D2 = Dual<Dual<double>>;
  D2 x;
  x.v = Dual<double>(0.8, 1.0);
  x.d = Dual<double>(1.0, 0.0);
  const D2 f = sin(x) * x;
  // (x sin x)'' = 2 cos x - x sin x
  EXPECT_NEAR(f.d.d, 2 * std::cos(0.8) - 0.8 * std::sin(0.8), 1e-14);
}

TEST(AutoDiffFunction, JacobiansMatchClosedForm) {
  const auto fn = make_autodiff(Sample{});
  Matrix J(2, 3), Jt(2, 2);
  fn->jacobian(0, kZ, kTheta, J);
  fn->theta_jacobian(0, kZ, kTheta, Jt);
  const double z0 = kZ(0), z1 = kZ(1), z2 = kZ(2);
  const double t0 = kTheta(0), t1 = kTheta(1);
  const double e = std::exp(z0 * z1);
  Matrix Jref(2, 3), Jtref(2, 2);
  Jref << t0 * std::cos(z0), 2 * z1 * t1, 0, z1 * e, z0 * e, t0 * t1;
  Jtref << std::sin(z0), z1 * z1, t1 * z2, t0 * z2;
  EXPECT_LE((J - Jref).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((Jt - Jtref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AutoDiffFunction, WeightedHessianAndCrossMatchFiniteDifferences) {
  const auto fn = make_autodiff(Sample{});
  const Vector w = (Vector(2) << 0.7, -1.3).finished();
  Matrix H = Matrix::Zero(3, 3), C = Matrix::Zero(3, 2);
  fn->add_weighted_hessian(0, kZ, kTheta, w, H);
  fn->add_weighted_cross(0, kZ, kTheta, w, C);
  auto grad_z = [&](const Vector& z) {
    Matrix J(2, 3);
    fn->jacobian(0, z, kTheta, J);
    return Vector(J.transpose() * w);
  };
  auto grad_z_theta = [&](const Vector& th) {
    Matrix J(2, 3);
    fn->jacobian(0, kZ, th, J);
    return Vector(J.transpose() * w);
  };
  const Matrix Hfd = oracle::central_jacobian(grad_z, kZ, 1e-6);
  const Matrix Cfd = oracle::central_jacobian(grad_z_theta, kTheta, 1e-6);
  EXPECT_LE((H - Hfd).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((C - Cfd).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((H - H.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(AutoDiffFunction, ThetaGradientIsWeightedJacobian) {
  const auto fn = make_autodiff(Sample{});
  const Vector w = (Vector(2) << 2.0, 0.5).finished();
  Vector g = Vector::Zero(2);
  fn->add_weighted_theta_gradient(0, kZ, kTheta, w, g);
  Matrix Jt(2, 2);
  fn->theta_jacobian(0, kZ, kTheta, Jt);
  EXPECT_LE((g - Jt.transpose() * w).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FiniteDifferenceFunction, AgreesWithAutoDiff) {
  const auto ad = make_autodiff(Sample{});
  const auto fd = FiniteDifferenceFunction::of(ad);
  Matrix J1(2, 3), J2(2, 3);
  ad->jacobian(0, kZ, kTheta, J1);
  fd->jacobian(0, kZ, kTheta, J2);
  EXPECT_LE((J1 - J2).cwiseAbs().maxCoeff(), 1e-6);
  const Vector w = Vector::Ones(2);
  Matrix H1 = Matrix::Zero(3, 3), H2 = Matrix::Zero(3, 3);
  ad->add_weighted_hessian(0, kZ, kTheta, w, H1);
  fd->add_weighted_hessian(0, kZ, kTheta, w, H2);
  EXPECT_LE((H1 - H2).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(FirstOrderOnly, RefusesSecondDerivatives) {
  const FirstOrderOnly fn(make_autodiff(Sample{}));
  EXPECT_FALSE(fn.has_second_derivatives());
  Matrix H = Matrix::Zero(3, 3);
  EXPECT_THROW(fn.add_weighted_hessian(0, kZ, kTheta, Vector::Ones(2), H),
               CapabilityError);
}

}  // namespace
}  // namespace diffmpc
