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

#include "diffmpc/stage_function.hpp"

#include <algorithm>
#include <cmath>

namespace diffmpc {

namespace {

double step_for(double h, double x) { return h * std::max(1.0, std::abs(x)); }

}  // namespace

std::shared_ptr<FiniteDifferenceFunction> FiniteDifferenceFunction::of(
    StageFunctionPtr fn) {
  return std::make_shared<FiniteDifferenceFunction>(
      [fn](int k) { return fn->rows(k); },
      [fn](int k, const Vector& z, const Vector& th, Eigen::Ref<Vector> out) {
        fn->eval(k, z, th, out);
      });
}

void FiniteDifferenceFunction::jacobian(int stage, const Vector& z,
                                        const Vector& theta,
                                        Eigen::Ref<Matrix> jac) const {
  const int m = rows(stage);
  Vector zp = z, zm = z, fp(m), fm(m);
  for (int j = 0; j < z.size(); ++j) {
    const double h = step_for(h1_, z[j]);
    zp[j] = z[j] + h;
    zm[j] = z[j] - h;
    f_(stage, zp, theta, fp);
    f_(stage, zm, theta, fm);
    jac.col(j) = (fp - fm) / (2.0 * h);
    zp[j] = zm[j] = z[j];
  }
}

void FiniteDifferenceFunction::theta_jacobian(int stage, const Vector& z,
                                              const Vector& theta,
                                              Eigen::Ref<Matrix> jac) const {
  const int m = rows(stage);
  Vector tp = theta, tm = theta, fp(m), fm(m);
  for (int j = 0; j < theta.size(); ++j) {
    const double h = step_for(h1_, theta[j]);
    tp[j] = theta[j] + h;
    tm[j] = theta[j] - h;
    f_(stage, z, tp, fp);
    f_(stage, z, tm, fm);
    jac.col(j) = (fp - fm) / (2.0 * h);
    tp[j] = tm[j] = theta[j];
  }
}

double FiniteDifferenceFunction::weighted(int stage, const Vector& z,
                                          const Vector& theta,
                                          const Vector& w) const {
  Vector out(rows(stage));
  f_(stage, z, theta, out);
  return w.dot(out);
}

void FiniteDifferenceFunction::add_weighted_hessian(
    int stage, const Vector& z, const Vector& theta, const Vector& w,
    Eigen::Ref<Matrix> hess) const {
  const int n = static_cast<int>(z.size());
  Vector p = z;
  for (int i = 0; i < n; ++i) {
    const double hi = step_for(h2_, z[i]);
    for (int j = 0; j <= i; ++j) {
      const double hj = step_for(h2_, z[j]);
      auto at = [&](double si, double sj) {
        p = z;
        p[i] += si * hi;
        p[j] += sj * hj;
        return weighted(stage, p, theta, w);
      };
      const double v =
          (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
      hess(i, j) += v;
      if (i != j) hess(j, i) += v;
    }
  }
}

void FiniteDifferenceFunction::add_weighted_cross(
    int stage, const Vector& z, const Vector& theta, const Vector& w,
    Eigen::Ref<Matrix> cross) const {
  Vector zp, tp;
  for (int i = 0; i < z.size(); ++i) {
    const double hi = step_for(h2_, z[i]);
    for (int j = 0; j < theta.size(); ++j) {
      const double hj = step_for(h2_, theta[j]);
      auto at = [&](double si, double sj) {
        zp = z;
        tp = theta;
        zp[i] += si * hi;
        tp[j] += sj * hj;
        return weighted(stage, zp, tp, w);
      };
      cross(i, j) +=
          (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
    }
  }
}

}  // namespace diffmpc
