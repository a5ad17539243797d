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

// Differentiable per-stage callbacks.
//
// Every OCP ingredient (cost, dynamics, constraints) is a map
//   F_k : (z_k, theta) -> R^{m_k}
// where z_k is the stage vector [x_k; u_k; sigma_k] (terminal: [x_N; sigma_N]).
// Implementations supply values, first derivatives and multiplier-weighted
// second derivatives. AutoDiffFunction derives all of them from a single
// templated functor; FiniteDifferenceFunction does so numerically.

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "diffmpc/autodiff.hpp"
#include "diffmpc/errors.hpp"

namespace diffmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class StageFunction {
 public:
  virtual ~StageFunction() = default;

  // Output dimension at stage k.
  virtual int rows(int stage) const = 0;

  virtual void eval(int stage, const Vector& z, const Vector& theta,
                    Eigen::Ref<Vector> out) const = 0;

  // d out / d z, rows(stage) x z.size().
  virtual void jacobian(int stage, const Vector& z, const Vector& theta,
                        Eigen::Ref<Matrix> jac) const = 0;

  // Functions that never read theta report false and may skip the theta
  // derivatives below (callers treat them as zero).
  virtual bool depends_on_theta() const { return true; }

  // d out / d theta, rows(stage) x theta.size().
  virtual void theta_jacobian(int stage, const Vector& z, const Vector& theta,
                              Eigen::Ref<Matrix> jac) const = 0;

  virtual bool has_second_derivatives() const { return true; }

  // hess += sum_i w_i * d^2 out_i / dz^2.
  virtual void add_weighted_hessian(int stage, const Vector& z,
                                    const Vector& theta, const Vector& weights,
                                    Eigen::Ref<Matrix> hess) const = 0;

  // cross += sum_i w_i * d^2 out_i / (dz dtheta), z.size() x theta.size().
  virtual void add_weighted_cross(int stage, const Vector& z,
                                  const Vector& theta, const Vector& weights,
                                  Eigen::Ref<Matrix> cross) const = 0;

  // grad += sum_i w_i * d out_i / d theta.
  virtual void add_weighted_theta_gradient(int stage, const Vector& z,
                                           const Vector& theta,
                                           const Vector& weights,
                                           Eigen::Ref<Vector> grad) const {
    if (!depends_on_theta()) return;
    Matrix jac(rows(stage), theta.size());
    theta_jacobian(stage, z, theta, jac);
    grad.noalias() += jac.transpose() * weights;
  }

  double eval_scalar(int stage, const Vector& z, const Vector& theta) const {
    Vector out(rows(stage));
    eval(stage, z, theta, out);
    return out.size() > 0 ? out[0] : 0.0;
  }
};

using StageFunctionPtr = std::shared_ptr<const StageFunction>;

namespace detail {

template <class F>
concept DeclaresThetaDependence = requires { F::kDependsOnTheta; };

}  // namespace detail

// Adapts a templated functor
//
//   struct F {
//     int rows(int k) const;
//     template <class T>
//     void operator()(int k, std::span<const T> z, std::span<const T> theta,
//                     std::span<T> out) const;
//     static constexpr bool kDependsOnTheta = ...;  // optional, default true
//   };
//
// into a StageFunction with forward-mode derivatives of first and second
// order.
template <class F>
class AutoDiffFunction final : public StageFunction {
 public:
  using D1 = Dual<double>;
  using D2 = Dual<Dual<double>>;

  explicit AutoDiffFunction(F functor) : f_(std::move(functor)) {}

  const F& functor() const { return f_; }

  int rows(int stage) const override { return f_.rows(stage); }

  bool depends_on_theta() const override {
    if constexpr (detail::DeclaresThetaDependence<F>) {
      return F::kDependsOnTheta;
    } else {
      return true;
    }
  }

  void eval(int stage, const Vector& z, const Vector& theta,
            Eigen::Ref<Vector> out) const override {
    std::vector<double> o(rows(stage));
    f_.template operator()<double>(stage, {z.data(), size_t(z.size())},
                                   {theta.data(), size_t(theta.size())}, o);
    for (int i = 0; i < out.size(); ++i) out[i] = o[i];
  }

  void jacobian(int stage, const Vector& z, const Vector& theta,
                Eigen::Ref<Matrix> jac) const override {
    const int m = rows(stage);
    const int n = static_cast<int>(z.size());
    std::vector<D1> zd(n), th = lift<D1>(theta), out(m);
    for (int i = 0; i < n; ++i) zd[i] = D1(z[i]);
    for (int j = 0; j < n; ++j) {
      zd[j].d = 1.0;
      f_.template operator()<D1>(stage, zd, th, out);
      for (int i = 0; i < m; ++i) jac(i, j) = out[i].d;
      zd[j].d = 0.0;
    }
  }

  void theta_jacobian(int stage, const Vector& z, const Vector& theta,
                      Eigen::Ref<Matrix> jac) const override {
    jac.setZero();
    if (!depends_on_theta()) return;
    const int m = rows(stage);
    std::vector<D1> zd = lift<D1>(z), th = lift<D1>(theta), out(m);
    for (int j = 0; j < theta.size(); ++j) {
      th[j].d = 1.0;
      f_.template operator()<D1>(stage, zd, th, out);
      for (int i = 0; i < m; ++i) jac(i, j) = out[i].d;
      th[j].d = 0.0;
    }
  }

  void add_weighted_hessian(int stage, const Vector& z, const Vector& theta,
                            const Vector& weights,
                            Eigen::Ref<Matrix> hess) const override {
    const int m = rows(stage);
    if (m == 0) return;
    const int n = static_cast<int>(z.size());
    std::vector<D2> zd = lift<D2>(z), th = lift<D2>(theta), out(m);
    for (int i = 0; i < n; ++i) {
      zd[i].d.v = 1.0;
      for (int j = 0; j <= i; ++j) {
        zd[j].v.d = 1.0;
        f_.template operator()<D2>(stage, zd, th, out);
        double s = 0.0;
        for (int r = 0; r < m; ++r) s += weights[r] * out[r].d.d;
        hess(i, j) += s;
        if (i != j) hess(j, i) += s;
        zd[j].v.d = 0.0;
      }
      zd[i].d.v = 0.0;
    }
  }

  void add_weighted_cross(int stage, const Vector& z, const Vector& theta,
                          const Vector& weights,
                          Eigen::Ref<Matrix> cross) const override {
    if (!depends_on_theta()) return;
    const int m = rows(stage);
    if (m == 0) return;
    std::vector<D2> zd = lift<D2>(z), th = lift<D2>(theta), out(m);
    for (int i = 0; i < z.size(); ++i) {
      zd[i].d.v = 1.0;
      for (int j = 0; j < theta.size(); ++j) {
        th[j].v.d = 1.0;
        f_.template operator()<D2>(stage, zd, th, out);
        double s = 0.0;
        for (int r = 0; r < m; ++r) s += weights[r] * out[r].d.d;
        cross(i, j) += s;
        th[j].v.d = 0.0;
      }
      zd[i].d.v = 0.0;
    }
  }

 private:
  template <class T>
  static std::vector<T> lift(const Vector& x) {
    std::vector<T> r(x.size());
    for (int i = 0; i < x.size(); ++i) r[i] = T(x[i]);
    return r;
  }

  F f_;
};

template <class F>
StageFunctionPtr make_autodiff(F functor) {
  return std::make_shared<AutoDiffFunction<F>>(std::move(functor));
}

// Derivatives by central differences of a value-only callback. Intended for
// cross-checking hand-written or AD derivatives, not for production solves.
class FiniteDifferenceFunction final : public StageFunction {
 public:
  using Callback = std::function<void(int, const Vector&, const Vector&,
                                      Eigen::Ref<Vector>)>;

  FiniteDifferenceFunction(std::function<int(int)> rows, Callback f,
                           double step = 1e-6, double second_step = 1e-4)
      : rows_(std::move(rows)),
        f_(std::move(f)),
        h1_(step),
        h2_(second_step) {}

  // Wraps the value path of another function.
  static std::shared_ptr<FiniteDifferenceFunction> of(StageFunctionPtr fn);

  int rows(int stage) const override { return rows_(stage); }
  void eval(int stage, const Vector& z, const Vector& theta,
            Eigen::Ref<Vector> out) const override {
    f_(stage, z, theta, out);
  }
  void jacobian(int stage, const Vector& z, const Vector& theta,
                Eigen::Ref<Matrix> jac) const override;
  void theta_jacobian(int stage, const Vector& z, const Vector& theta,
                      Eigen::Ref<Matrix> jac) const override;
  void add_weighted_hessian(int stage, const Vector& z, const Vector& theta,
                            const Vector& weights,
                            Eigen::Ref<Matrix> hess) const override;
  void add_weighted_cross(int stage, const Vector& z, const Vector& theta,
                          const Vector& weights,
                          Eigen::Ref<Matrix> cross) const override;

 private:
  double weighted(int stage, const Vector& z, const Vector& theta,
                  const Vector& w) const;

  std::function<int(int)> rows_;
  Callback f_;
  double h1_;
  double h2_;
};

// Wraps a function and hides its second derivatives; used to exercise the
// capability checks of exact-Hessian consumers.
class FirstOrderOnly final : public StageFunction {
 public:
  explicit FirstOrderOnly(StageFunctionPtr inner) : inner_(std::move(inner)) {}
  int rows(int k) const override { return inner_->rows(k); }
  void eval(int k, const Vector& z, const Vector& th,
            Eigen::Ref<Vector> out) const override {
    inner_->eval(k, z, th, out);
  }
  void jacobian(int k, const Vector& z, const Vector& th,
                Eigen::Ref<Matrix> jac) const override {
    inner_->jacobian(k, z, th, jac);
  }
  bool depends_on_theta() const override { return inner_->depends_on_theta(); }
  void theta_jacobian(int k, const Vector& z, const Vector& th,
                      Eigen::Ref<Matrix> jac) const override {
    inner_->theta_jacobian(k, z, th, jac);
  }
  bool has_second_derivatives() const override { return false; }
  void add_weighted_hessian(int, const Vector&, const Vector&, const Vector&,
                            Eigen::Ref<Matrix>) const override {
    throw CapabilityError(
        "second derivatives unavailable; wrap the model with AutoDiffFunction");
  }
  void add_weighted_cross(int, const Vector&, const Vector&, const Vector&,
                          Eigen::Ref<Matrix>) const override {
    throw CapabilityError(
        "second derivatives unavailable; wrap the model with AutoDiffFunction");
  }

 private:
  StageFunctionPtr inner_;
};

}  // namespace diffmpc
