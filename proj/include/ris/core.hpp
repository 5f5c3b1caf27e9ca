#pragma once

// Problem abstraction for finite-dimensional rate-independent systems
//
//     0 ∈ ∂R(ż) + D_z I(t, z)
//
// State vectors, SPD metrics, weighted-L1 dissipation and energy models,
// together with the convex-analysis primitives (distance of a dual vector to
// the stable set ∂R(0), conjugates of the viscously regularised dissipation)
// that every scheme and every diagnostic builds on.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace ris {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};
class TimeDomainError : public Error {
 public:
  using Error::Error;
};
class ParameterError : public Error {
 public:
  using Error::Error;
};
class NumericalError : public Error {
 public:
  using Error::Error;
};
class ModelError : public Error {
 public:
  using Error::Error;
};
class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};
class TraceError : public Error {
 public:
  using Error::Error;
};
class KindError : public Error {
 public:
  using Error::Error;
};
class IncompleteRunError : public Error {
 public:
  using Error::Error;
};

/// Inner iteration ran out of budget; carries the best iterate found.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, Vec best, double stationarity)
      : Error(what), best_(std::move(best)), stationarity_(stationarity) {}
  const Vec& best() const { return best_; }
  double stationarity() const { return stationarity_; }

 private:
  Vec best_;
  double stationarity_;
};

namespace detail {

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Metric
// ---------------------------------------------------------------------------

enum class MetricKind { V, Z, U };

inline const char* to_string(MetricKind k) {
  switch (k) {
    case MetricKind::V: return "V";
    case MetricKind::Z: return "Z";
    case MetricKind::U: return "U";
  }
  return "?";
}

/// SPD bilinear form defining ‖v‖ = sqrt(vᵀ M v) and the dual norm
/// ‖ξ‖_* = sqrt(ξᵀ M⁻¹ ξ). Immutable after construction.
class Metric {
 public:
  explicit Metric(Eigen::Index dim, MetricKind kind = MetricKind::V)
      : Metric(Mat::Identity(dim, dim), kind) {}

  explicit Metric(Mat matrix, MetricKind kind = MetricKind::V)
      : matrix_(std::move(matrix)), kind_(kind) {
    if (matrix_.rows() < 1 || matrix_.rows() != matrix_.cols()) {
      throw DimensionError("Metric: matrix must be square and non-empty");
    }
    if (!matrix_.allFinite()) throw ParameterError("Metric: non-finite entries");
    const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
    if ((matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw ParameterError("Metric: matrix is not symmetric");
    }
    matrix_ = 0.5 * (matrix_ + matrix_.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(matrix_);
    if (eig.eigenvalues().minCoeff() <= 0.0) {
      throw ParameterError("Metric: matrix is not positive definite");
    }
    lambda_min_ = eig.eigenvalues().minCoeff();
    lambda_max_ = eig.eigenvalues().maxCoeff();
    diagonal_ = (matrix_ - Mat(matrix_.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
    llt_.compute(matrix_);
  }

  static Metric diagonal(const Vec& weights, MetricKind kind = MetricKind::V) {
    return Metric(Mat(weights.asDiagonal()), kind);
  }

  Eigen::Index dim() const { return matrix_.rows(); }
  MetricKind kind() const { return kind_; }
  const Mat& matrix() const { return matrix_; }
  bool is_diagonal() const { return diagonal_; }
  double min_eigenvalue() const { return lambda_min_; }
  double max_eigenvalue() const { return lambda_max_; }

  double norm(const Vec& v) const {
    detail::require_dim(v.size(), dim(), "Metric::norm");
    return std::sqrt(std::max(0.0, v.dot(matrix_ * v)));
  }

  /// M v (the Riesz map from primal to dual).
  Vec apply(const Vec& v) const { return matrix_ * v; }

  /// M⁻¹ ξ.
  Vec solve(const Vec& xi) const {
    if (diagonal_) return xi.cwiseQuotient(matrix_.diagonal());
    return llt_.solve(xi);
  }

  double dual_norm(const Vec& xi) const {
    detail::require_dim(xi.size(), dim(), "Metric::dual_norm");
    return std::sqrt(std::max(0.0, xi.dot(solve(xi))));
  }

 private:
  Mat matrix_;
  MetricKind kind_;
  double lambda_min_ = 1.0;
  double lambda_max_ = 1.0;
  bool diagonal_ = true;
  Eigen::LLT<Mat> llt_;
};

// ---------------------------------------------------------------------------
// Dissipation
// ---------------------------------------------------------------------------

/// Weighted-L1 dissipation R(v) = Σ κ_i |v_i| with stable set ∂R(0) = Π[-κ_i, κ_i].
class Dissipation {
 public:
  explicit Dissipation(Vec weights) : weights_(std::move(weights)) {
    if (weights_.size() < 1) throw DimensionError("Dissipation: empty weight vector");
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
        throw ParameterError("Dissipation: weights must be positive and finite");
      }
    }
  }

  static Dissipation uniform(Eigen::Index dim, double kappa) {
    return Dissipation(Vec::Constant(dim, kappa));
  }

  Eigen::Index dim() const { return weights_.size(); }
  const Vec& weights() const { return weights_; }

  /// Euclidean projection of ξ onto the box ∂R(0).
  Vec project_stable(const Vec& xi) const {
    detail::require_dim(xi.size(), dim(), "Dissipation::project_stable");
    return xi.cwiseMax(-weights_).cwiseMin(weights_);
  }

  bool in_stable_set(const Vec& xi) const {
    detail::require_dim(xi.size(), dim(), "Dissipation::in_stable_set");
    return (xi.cwiseAbs() - weights_).maxCoeff() <= 0.0;
  }

 private:
  Vec weights_;
};

/// R(v) = Σ κ_i |v_i|.
inline double eval_R(const Dissipation& d, const Vec& v) {
  detail::require_dim(v.size(), d.dim(), "eval_R");
  return d.weights().dot(v.cwiseAbs());
}

namespace detail {

/// Minimises (ξ-σ)ᵀ M⁻¹ (ξ-σ) over the box |σ_i| ≤ κ_i by accelerated
/// projected gradient. Returns the minimising σ.
inline Vec project_box_dual_metric(const Dissipation& d, const Metric& m, const Vec& xi,
                                   double tol = 1e-10, int max_iter = 10000) {
  const Vec sigma0 = d.project_stable(xi);
  if ((sigma0 - xi).lpNorm<Eigen::Infinity>() == 0.0) return sigma0;
  // gradient of ½(σ-ξ)ᵀM⁻¹(σ-ξ) is M⁻¹(σ-ξ); Lipschitz constant 1/λ_min(M)
  const double step = m.min_eigenvalue();
  Vec sigma = sigma0;
  Vec y = sigma;
  double theta = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vec grad = m.solve(y - xi);
    const Vec next = d.project_stable(y - step * grad);
    const double move = (next - sigma).lpNorm<Eigen::Infinity>();
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    y = next + ((theta - 1.0) / theta_next) * (next - sigma);
    sigma = next;
    theta = theta_next;
    if (move <= tol * (1.0 + sigma.lpNorm<Eigen::Infinity>())) {
      // polish with a plain projected-gradient pass from the accelerated iterate
      for (int k = 0; k < 50; ++k) {
        const Vec plain = d.project_stable(sigma - step * m.solve(sigma - xi));
        const double dm = (plain - sigma).lpNorm<Eigen::Infinity>();
        sigma = plain;
        if (dm <= 1e-15 * (1.0 + sigma.lpNorm<Eigen::Infinity>())) break;
      }
      return sigma;
    }
  }
  return sigma;
}

}  // namespace detail

/// dist_{V*}(ξ, ∂R(0)) = min_{σ ∈ ∂R(0)} ‖ξ - σ‖_{M⁻¹}.
/// Closed form for diagonal metrics, accelerated projected gradient otherwise.
inline double dist_to_stable(const Dissipation& d, const Metric& m, const Vec& xi) {
  detail::require_dim(xi.size(), d.dim(), "dist_to_stable");
  detail::require_dim(m.dim(), d.dim(), "dist_to_stable(metric)");
  if (m.is_diagonal()) {
    const Vec excess = (xi.cwiseAbs() - d.weights()).cwiseMax(0.0);
    return std::sqrt(excess.cwiseProduct(excess).cwiseQuotient(m.matrix().diagonal()).sum());
  }
  if (d.in_stable_set(xi)) return 0.0;
  const Vec sigma = detail::project_box_dual_metric(d, m, xi);
  return m.dual_norm(xi - sigma);
}

/// Conjugate of R_μ(v) = R(v) + (μ/2)‖v‖²: R*_μ(ξ) = dist(ξ, ∂R(0))² / (2μ).
/// For μ = 0 this is the indicator of ∂R(0) (+∞ outside).
inline double conj_R_mu(const Dissipation& d, const Metric& m, double mu, const Vec& xi) {
  if (mu < 0.0 || !std::isfinite(mu)) throw ParameterError("conj_R_mu: mu must be >= 0");
  const double dist = dist_to_stable(d, m, xi);
  if (mu == 0.0) return dist == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return dist * dist / (2.0 * mu);
}

// ---------------------------------------------------------------------------
// Energy models
// ---------------------------------------------------------------------------

/// Smooth nonlinearity F with gradient and optional Hessian.
struct Nonlinearity {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;  // may be empty

  static Nonlinearity zero() {
    return {[](const Vec&) { return 0.0; }, [](const Vec& z) { return Vec(Vec::Zero(z.size())); },
            [](const Vec& z) { return Mat(Mat::Zero(z.size(), z.size())); }};
  }
};

/// Time-dependent load ℓ(t) with its time derivative.
struct Load {
  std::function<Vec(double)> value;
  std::function<Vec(double)> rate;

  static Load zero(Eigen::Index dim) {
    return {[dim](double) { return Vec(Vec::Zero(dim)); },
            [dim](double) { return Vec(Vec::Zero(dim)); }};
  }
  /// ℓ(t) = t·direction
  static Load linear(Vec direction) {
    return {[direction](double t) { return Vec(t * direction); },
            [direction](double) { return direction; }};
  }
};

struct EnergyTriplet {
  double value = 0.0;
  double dt = 0.0;
  Vec grad;
};

/// I(t, z) on ℝⁿ, either semilinear ½zᵀAz + F(z) - ℓ(t)ᵀz or given directly.
class EnergyModel {
 public:
  using ValueFn = std::function<double(double, const Vec&)>;
  using GradFn = std::function<Vec(double, const Vec&)>;
  using HessFn = std::function<Mat(double, const Vec&)>;

  static EnergyModel semilinear(Mat A, Nonlinearity F, Load ell, double t_final) {
    if (A.rows() < 1 || A.rows() != A.cols()) throw DimensionError("EnergyModel: A must be square");
    Metric check(A);  // throws unless symmetric positive definite
    EnergyModel e;
    e.dim_ = A.rows();
    e.t_final_ = t_final;
    e.semilinear_ = true;
    e.A_ = check.matrix();
    auto Ap = e.A_;
    e.value_ = [Ap, F, ell](double t, const Vec& z) {
      return 0.5 * z.dot(Ap * z) + F.value(z) - ell.value(t).dot(z);
    };
    e.dt_ = [ell](double t, const Vec& z) { return -ell.rate(t).dot(z); };
    e.grad_ = [Ap, F, ell](double t, const Vec& z) -> Vec {
      return Ap * z + F.gradient(z) - ell.value(t);
    };
    if (F.hessian) {
      e.hess_ = [Ap, F](double, const Vec& z) -> Mat { return Ap + F.hessian(z); };
    }
    e.validate();
    return e;
  }

  static EnergyModel custom(Eigen::Index dim, double t_final, ValueFn value, ValueFn dt,
                            GradFn grad, HessFn hess = {}) {
    EnergyModel e;
    e.dim_ = dim;
    e.t_final_ = t_final;
    e.value_ = std::move(value);
    e.dt_ = std::move(dt);
    e.grad_ = std::move(grad);
    e.hess_ = std::move(hess);
    e.validate();
    return e;
  }

  Eigen::Index dim() const { return dim_; }
  double t_final() const { return t_final_; }
  bool is_semilinear() const { return semilinear_; }
  const Mat& A() const { return A_; }
  bool has_hessian() const { return static_cast<bool>(hess_); }

  double value(double t, const Vec& z) const { return value_(check_t(t), check_z(z)); }
  double dt(double t, const Vec& z) const { return dt_(check_t(t), check_z(z)); }
  Vec grad(double t, const Vec& z) const { return grad_(check_t(t), check_z(z)); }
  Mat hessian(double t, const Vec& z) const {
    if (!hess_) throw ModelError("EnergyModel: no Hessian available");
    return hess_(check_t(t), check_z(z));
  }

  /// Times within this slack of [0, T] are clamped rather than rejected.
  static constexpr double kTimeSlack = 1e-12;

 private:
  EnergyModel() = default;

  void validate() const {
    if (dim_ < 1) throw DimensionError("EnergyModel: dimension must be positive");
    if (!(t_final_ > 0.0) || !std::isfinite(t_final_)) throw ParameterError("EnergyModel: T must be > 0");
    if (!value_ || !dt_ || !grad_) throw ModelError("EnergyModel: missing callbacks");
  }

  double check_t(double t) const {
    const double slack = kTimeSlack * std::max(1.0, t_final_);
    if (!(t >= -slack && t <= t_final_ + slack)) {
      throw TimeDomainError("time " + std::to_string(t) + " outside [0, " + std::to_string(t_final_) + "]");
    }
    return std::clamp(t, 0.0, t_final_);
  }
  const Vec& check_z(const Vec& z) const {
    detail::require_dim(z.size(), dim_, "EnergyModel");
    return z;
  }

  Eigen::Index dim_ = 0;
  double t_final_ = 1.0;
  bool semilinear_ = false;
  Mat A_;
  ValueFn value_;
  ValueFn dt_;
  GradFn grad_;
  HessFn hess_;
};

/// Value, partial time derivative and spatial gradient of I at (t, z).
inline EnergyTriplet energy_triplet(const EnergyModel& e, double t, const Vec& z) {
  return {e.value(t, z), e.dt(t, z), e.grad(t, z)};
}

/// E(t,u,z) = ½⟨𝒜(u,z),(u,z)⟩ + F(z) - ⟨ℓ(t),(u,z)⟩ with 𝒜 = [[C,B],[Bᵀ,A]].
class CoupledEnergyModel {
 public:
  CoupledEnergyModel(Mat C, Mat B, Mat A, Nonlinearity F, Load ell_u, Load ell_z, double t_final)
      : C_(std::move(C)), B_(std::move(B)), A_(std::move(A)), F_(std::move(F)),
        ell_u_(std::move(ell_u)), ell_z_(std::move(ell_z)), t_final_(t_final) {
    const auto nu = C_.rows();
    const auto nz = A_.rows();
    if (nu < 1 || nz < 1 || C_.cols() != nu || A_.cols() != nz) {
      throw DimensionError("CoupledEnergyModel: C and A must be square and non-empty");
    }
    if (B_.rows() != nu || B_.cols() != nz) throw DimensionError("CoupledEnergyModel: B must be dimU x dimZ");
    if (!(t_final_ > 0.0)) throw ParameterError("CoupledEnergyModel: T must be > 0");
    Mat block(nu + nz, nu + nz);
    block << C_, B_, B_.transpose(), A_;
    try {
      Metric spd(block);
    } catch (const ParameterError& err) {
      throw ModelError(std::string("CoupledEnergyModel: block operator not SPD: ") + err.what());
    }
    c_llt_.compute(C_);
  }

  Eigen::Index dim_u() const { return C_.rows(); }
  Eigen::Index dim_z() const { return A_.rows(); }
  double t_final() const { return t_final_; }
  const Mat& C() const { return C_; }
  const Mat& B() const { return B_; }
  const Mat& A() const { return A_; }

  double value(double t, const Vec& u, const Vec& z) const {
    check(t, u, z);
    return 0.5 * u.dot(C_ * u) + u.dot(B_ * z) + 0.5 * z.dot(A_ * z) + F_.value(z) -
           ell_u_.value(t).dot(u) - ell_z_.value(t).dot(z);
  }
  double dt(double t, const Vec& u, const Vec& z) const {
    check(t, u, z);
    return -ell_u_.rate(t).dot(u) - ell_z_.rate(t).dot(z);
  }
  Vec grad_u(double t, const Vec& u, const Vec& z) const {
    check(t, u, z);
    return C_ * u + B_ * z - ell_u_.value(t);
  }
  Vec grad_z(double t, const Vec& u, const Vec& z) const {
    check(t, u, z);
    return B_.transpose() * u + A_ * z + F_.gradient(z) - ell_z_.value(t);
  }

  /// argmin_u E(t,u,z): solves C u = ℓ_u(t) - B z.
  Vec solve_u(double t, const Vec& z) const {
    detail::require_dim(z.size(), dim_z(), "CoupledEnergyModel::solve_u");
    return c_llt_.solve(ell_u_.value(t) - B_ * z);
  }

  /// E(t, ·, z) for fixed u, as a model in z alone.
  EnergyModel z_slice(const Vec& u) const {
    detail::require_dim(u.size(), dim_u(), "CoupledEnergyModel::z_slice");
    const CoupledEnergyModel self = *this;
    return EnergyModel::custom(
        dim_z(), t_final_, [self, u](double t, const Vec& z) { return self.value(t, u, z); },
        [self, u](double t, const Vec& z) { return self.dt(t, u, z); },
        [self, u](double t, const Vec& z) { return self.grad_z(t, u, z); },
        self.F_.hessian ? EnergyModel::HessFn([self](double, const Vec& z) -> Mat {
          return self.A_ + self.F_.hessian(z);
        })
                        : EnergyModel::HessFn{});
  }

  /// Energy with u eliminated: A - BᵀC⁻¹B, load ℓ_z - BᵀC⁻¹ℓ_u, up to a
  /// z-independent term that keeps the values equal to min_u E.
  EnergyModel reduced() const {
    const Mat CinvB = c_llt_.solve(B_);
    const Mat Ared = A_ - B_.transpose() * CinvB;
    const CoupledEnergyModel self = *this;
    auto value = [self](double t, const Vec& z) {
      const Vec u = self.solve_u(t, z);
      return self.value(t, u, z);
    };
    auto dt = [self](double t, const Vec& z) {
      const Vec u = self.solve_u(t, z);
      return self.dt(t, u, z);
    };
    auto grad = [self](double t, const Vec& z) -> Vec {
      const Vec u = self.solve_u(t, z);
      return self.grad_z(t, u, z);
    };
    EnergyModel::HessFn hess;
    if (F_.hessian) {
      hess = [self, Ared](double, const Vec& z) -> Mat { return Ared + self.F_.hessian(z); };
    }
    return EnergyModel::custom(dim_z(), t_final_, value, dt, grad, hess);
  }

 private:
  void check(double t, const Vec& u, const Vec& z) const {
    const double slack = EnergyModel::kTimeSlack * std::max(1.0, t_final_);
    if (!(t >= -slack && t <= t_final_ + slack)) {
      throw TimeDomainError("time " + std::to_string(t) + " outside [0, T]");
    }
    detail::require_dim(u.size(), dim_u(), "CoupledEnergyModel(u)");
    detail::require_dim(z.size(), dim_z(), "CoupledEnergyModel(z)");
  }

  Mat C_, B_, A_;
  Nonlinearity F_;
  Load ell_u_, ell_z_;
  double t_final_;
  Eigen::LLT<Mat> c_llt_;
};

}  // namespace ris
