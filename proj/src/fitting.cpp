#include "robustpulse/fitting.hpp"

#include <algorithm>
#include <cmath>

namespace robustpulse {

LeastSquaresResult levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd x0,
                                       const Eigen::VectorXd& lower,
                                       const Eigen::VectorXd& upper,
                                       const LeastSquaresOptions& options) {
  const Eigen::Index n = x0.size();
  auto project = [&](Eigen::VectorXd x) {
    for (Eigen::Index i = 0; i < n; ++i) x(i) = std::clamp(x(i), lower(i), upper(i));
    return x;
  };
  LeastSquaresResult res;
  res.x = project(std::move(x0));
  f(res.x, res.residual, res.jacobian);
  res.cost = res.residual.squaredNorm();
  double lambda = 1e-3;
  Eigen::VectorXd r_new;
  Eigen::MatrixXd j_new;
  for (int it = 0; it < options.max_iterations; ++it) {
    res.iterations = it + 1;
    if (!std::isfinite(res.cost)) break;
    if (res.cost <= options.cost_tolerance) {
      res.converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = res.jacobian.transpose() * res.jacobian;
    const Eigen::VectorXd g = res.jacobian.transpose() * res.residual;
    if (g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-12 * std::max(1.0, jtj.diagonal().maxCoeff()));
    bool accepted = false;
    bool tiny_step = false;
    for (int inner = 0; inner < 40; ++inner) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      const Eigen::VectorXd x_new = project(res.x + step);
      const Eigen::VectorXd actual = x_new - res.x;
      if (actual.norm() <= options.step_tolerance * (res.x.norm() + options.step_tolerance)) {
        tiny_step = true;
        break;
      }
      f(x_new, r_new, j_new);
      const double c_new = r_new.squaredNorm();
      if (std::isfinite(c_new) && c_new < res.cost) {
        const double rel = (res.cost - c_new) / std::max(res.cost, 1e-300);
        res.x = x_new;
        res.residual = r_new;
        res.jacobian = j_new;
        res.cost = c_new;
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = true;
        if (rel < 1e-15) tiny_step = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e30) break;
    }
    if (tiny_step) {
      res.converged = true;
      break;
    }
    if (!accepted) {
      res.converged = true;  // no descent direction left at machine precision
      break;
    }
  }
  return res;
}

Eigen::MatrixXd normal_inverse(const Eigen::MatrixXd& jac) {
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jtj);
  const auto& ev = es.eigenvalues();
  const double cut = 1e-14 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd inv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) inv(i) = ev(i) > cut ? 1.0 / ev(i) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace robustpulse
