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

#include "diffmpc/functions.hpp"

namespace diffmpc {

QuadraticFunction::QuadraticFunction(std::vector<Matrix> H,
                                     std::vector<Vector> q)
    : H_(std::move(H)), q_(std::move(q)) {
  if (H_.empty() || q_.empty()) {
    throw DimensionError("QuadraticFunction needs at least one stage");
  }
}

void QuadraticFunction::eval(int k, const Vector& z, const Vector&,
                             Eigen::Ref<Vector> out) const {
  out[0] = 0.5 * z.dot(H(k) * z) + q(k).dot(z);
}

void QuadraticFunction::jacobian(int k, const Vector& z, const Vector&,
                                 Eigen::Ref<Matrix> jac) const {
  jac.row(0) = (0.5 * (H(k) + H(k).transpose()) * z + q(k)).transpose();
}

void QuadraticFunction::add_weighted_hessian(int k, const Vector&,
                                             const Vector&, const Vector& w,
                                             Eigen::Ref<Matrix> hess) const {
  hess += w[0] * 0.5 * (H(k) + H(k).transpose());
}

AffineFunction::AffineFunction(std::vector<Matrix> M, std::vector<Vector> c)
    : M_(std::move(M)), c_(std::move(c)) {
  if (M_.empty() || c_.empty()) {
    throw DimensionError("AffineFunction needs at least one stage");
  }
}

void AffineFunction::eval(int k, const Vector& z, const Vector&,
                          Eigen::Ref<Vector> out) const {
  out = M(k) * z + c(k);
}

void AffineFunction::jacobian(int k, const Vector&, const Vector&,
                              Eigen::Ref<Matrix> jac) const {
  jac = M(k);
}

DenseQuadraticCost::DenseQuadraticCost(Vector xref, int nu, int q_offset,
                                       int r_offset)
    : xref_(std::move(xref)),
      nx_(static_cast<int>(xref_.size())),
      nu_(nu),
      q_offset_(q_offset),
      r_offset_(r_offset) {}

Eigen::Map<const Matrix> DenseQuadraticCost::Q(const Vector& theta) const {
  return {theta.data() + q_offset_, nx_, nx_};
}

Eigen::Map<const Matrix> DenseQuadraticCost::R(const Vector& theta) const {
  return {theta.data() + r_offset_, nu_, nu_};
}

void DenseQuadraticCost::eval(int, const Vector& z, const Vector& theta,
                              Eigen::Ref<Vector> out) const {
  const Vector d = z.head(nx_) - xref_;
  double v = 0.5 * d.dot(Q(theta) * d);
  if (nu_ > 0) {
    const Vector u = z.segment(nx_, nu_);
    v += 0.5 * u.dot(R(theta) * u);
  }
  out[0] = v;
}

void DenseQuadraticCost::jacobian(int, const Vector& z, const Vector& theta,
                                  Eigen::Ref<Matrix> jac) const {
  jac.setZero();
  const Vector d = z.head(nx_) - xref_;
  const auto Q = this->Q(theta);
  jac.block(0, 0, 1, nx_) = (0.5 * (Q + Q.transpose()) * d).transpose();
  if (nu_ > 0) {
    const Vector u = z.segment(nx_, nu_);
    const auto R = this->R(theta);
    jac.block(0, nx_, 1, nu_) = (0.5 * (R + R.transpose()) * u).transpose();
  }
}

void DenseQuadraticCost::theta_jacobian(int k, const Vector& z,
                                        const Vector& theta,
                                        Eigen::Ref<Matrix> jac) const {
  jac.setZero();
  Vector g = Vector::Zero(theta.size());
  add_weighted_theta_gradient(k, z, theta, Vector::Ones(1), g);
  jac.row(0) = g.transpose();
}

void DenseQuadraticCost::add_weighted_hessian(int, const Vector&,
                                              const Vector& theta,
                                              const Vector& w,
                                              Eigen::Ref<Matrix> hess) const {
  const auto Q = this->Q(theta);
  hess.block(0, 0, nx_, nx_) += w[0] * 0.5 * (Q + Q.transpose());
  if (nu_ > 0) {
    const auto R = this->R(theta);
    hess.block(nx_, nx_, nu_, nu_) += w[0] * 0.5 * (R + R.transpose());
  }
}

// d/dQ_ij of 0.5 d'Qd is 0.5 d_i d_j; differentiating once more in x_m
// gives 0.5 (delta_mi d_j + d_i delta_mj).
void DenseQuadraticCost::add_weighted_cross(int, const Vector& z,
                                            const Vector&, const Vector& w,
                                            Eigen::Ref<Matrix> cross) const {
  const Vector d = z.head(nx_) - xref_;
  const double s = 0.5 * w[0];
  for (int j = 0; j < nx_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      const int col = q_offset_ + i + j * nx_;
      cross(i, col) += s * d[j];
      cross(j, col) += s * d[i];
    }
  }
  if (nu_ > 0) {
    const Vector u = z.segment(nx_, nu_);
    for (int j = 0; j < nu_; ++j) {
      for (int i = 0; i < nu_; ++i) {
        const int col = r_offset_ + i + j * nu_;
        cross(nx_ + i, col) += s * u[j];
        cross(nx_ + j, col) += s * u[i];
      }
    }
  }
}

void DenseQuadraticCost::add_weighted_theta_gradient(
    int, const Vector& z, const Vector&, const Vector& w,
    Eigen::Ref<Vector> grad) const {
  const Vector d = z.head(nx_) - xref_;
  const Matrix dd = 0.5 * w[0] * d * d.transpose();
  grad.segment(q_offset_, nx_ * nx_) +=
      Eigen::Map<const Vector>(dd.data(), nx_ * nx_);
  if (nu_ > 0) {
    const Vector u = z.segment(nx_, nu_);
    const Matrix uu = 0.5 * w[0] * u * u.transpose();
    grad.segment(r_offset_, nu_ * nu_) +=
        Eigen::Map<const Vector>(uu.data(), nu_ * nu_);
  }
}

}  // namespace diffmpc
