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

// Stage functions with closed-form derivatives.

#pragma once

#include <functional>
#include <vector>

#include "diffmpc/stage_function.hpp"

namespace diffmpc {

// Identically zero output with a fixed number of rows per stage.
class ZeroFunction final : public StageFunction {
 public:
  explicit ZeroFunction(std::function<int(int)> rows) : rows_(std::move(rows)) {}
  explicit ZeroFunction(int rows) : rows_([rows](int) { return rows; }) {}

  int rows(int k) const override { return rows_(k); }
  void eval(int, const Vector&, const Vector&,
            Eigen::Ref<Vector> out) const override {
    out.setZero();
  }
  void jacobian(int, const Vector&, const Vector&,
                Eigen::Ref<Matrix> jac) const override {
    jac.setZero();
  }
  bool depends_on_theta() const override { return false; }
  void theta_jacobian(int, const Vector&, const Vector&,
                      Eigen::Ref<Matrix> jac) const override {
    jac.setZero();
  }
  void add_weighted_hessian(int, const Vector&, const Vector&, const Vector&,
                            Eigen::Ref<Matrix>) const override {}
  void add_weighted_cross(int, const Vector&, const Vector&, const Vector&,
                          Eigen::Ref<Matrix>) const override {}

 private:
  std::function<int(int)> rows_;
};

// 0.5 z'H_k z + q_k'z, theta-free. One (H, q) per stage; a single entry is
// shared by all stages.
class QuadraticFunction final : public StageFunction {
 public:
  QuadraticFunction(std::vector<Matrix> H, std::vector<Vector> q);

  int rows(int) const override { return 1; }
  void eval(int k, const Vector& z, const Vector& theta,
            Eigen::Ref<Vector> out) const override;
  void jacobian(int k, const Vector& z, const Vector& theta,
                Eigen::Ref<Matrix> jac) const override;
  bool depends_on_theta() const override { return false; }
  void theta_jacobian(int, const Vector&, const Vector&,
                      Eigen::Ref<Matrix> jac) const override {
    jac.setZero();
  }
  void add_weighted_hessian(int k, const Vector& z, const Vector& theta,
                            const Vector& w,
                            Eigen::Ref<Matrix> hess) const override;
  void add_weighted_cross(int, const Vector&, const Vector&, const Vector&,
                          Eigen::Ref<Matrix>) const override {}

 private:
  const Matrix& H(int k) const { return H_.size() == 1 ? H_[0] : H_[k]; }
  const Vector& q(int k) const { return q_.size() == 1 ? q_[0] : q_[k]; }
  std::vector<Matrix> H_;
  std::vector<Vector> q_;
};

// M_k z + c_k, theta-free. One (M, c) per stage or a single shared entry.
class AffineFunction final : public StageFunction {
 public:
  AffineFunction(std::vector<Matrix> M, std::vector<Vector> c);

  int rows(int k) const override { return static_cast<int>(M(k).rows()); }
  void eval(int k, const Vector& z, const Vector& theta,
            Eigen::Ref<Vector> out) const override;
  void jacobian(int k, const Vector& z, const Vector& theta,
                Eigen::Ref<Matrix> jac) const override;
  bool depends_on_theta() const override { return false; }
  void theta_jacobian(int, const Vector&, const Vector&,
                      Eigen::Ref<Matrix> jac) const override {
    jac.setZero();
  }
  void add_weighted_hessian(int, const Vector&, const Vector&, const Vector&,
                            Eigen::Ref<Matrix>) const override {}
  void add_weighted_cross(int, const Vector&, const Vector&, const Vector&,
                          Eigen::Ref<Matrix>) const override {}

 private:
  const Matrix& M(int k) const { return M_.size() == 1 ? M_[0] : M_[k]; }
  const Vector& c(int k) const { return c_.size() == 1 ? c_[0] : c_[k]; }
  std::vector<Matrix> M_;
  std::vector<Vector> c_;
};

// Tracking cost with fully parameterized weights
//
//   0.5 (x - xref)' Q (x - xref) + 0.5 u' R u,
//
// Q = reshape(theta[q_offset : q_offset + nx^2]) and
// R = reshape(theta[r_offset : r_offset + nu^2]), both column-major. The
// terminal variant (nu = 0) omits the input term. Entries of z past
// nx + nu (slacks) are ignored.
class DenseQuadraticCost final : public StageFunction {
 public:
  DenseQuadraticCost(Vector xref, int nu, int q_offset, int r_offset);

  int rows(int) const override { return 1; }
  void eval(int k, const Vector& z, const Vector& theta,
            Eigen::Ref<Vector> out) const override;
  void jacobian(int k, const Vector& z, const Vector& theta,
                Eigen::Ref<Matrix> jac) const override;
  void theta_jacobian(int k, const Vector& z, const Vector& theta,
                      Eigen::Ref<Matrix> jac) const override;
  void add_weighted_hessian(int k, const Vector& z, const Vector& theta,
                            const Vector& w,
                            Eigen::Ref<Matrix> hess) const override;
  void add_weighted_cross(int k, const Vector& z, const Vector& theta,
                          const Vector& w,
                          Eigen::Ref<Matrix> cross) const override;
  void add_weighted_theta_gradient(int k, const Vector& z, const Vector& theta,
                                   const Vector& w,
                                   Eigen::Ref<Vector> grad) const override;

 private:
  Eigen::Map<const Matrix> Q(const Vector& theta) const;
  Eigen::Map<const Matrix> R(const Vector& theta) const;

  Vector xref_;
  int nx_;
  int nu_;
  int q_offset_;
  int r_offset_;
};

}  // namespace diffmpc
