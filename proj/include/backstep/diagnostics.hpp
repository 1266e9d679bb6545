#pragma once

#include <utility>
#include <vector>

#include "backstep/core.hpp"

namespace backstep {

/// Weights of the quadratic form V1 = int gamma^T D(x) gamma dx with
/// D = diag(A e^{-mu x}/eps1, B e^{mu x}/eps2).
struct LyapunovWeights {
    double A = 1.0;
    double B = 1.0;
    double mu = 0.0;
    double lambda1 = 1.0;
    double lambda2 = 1.0;

    /// Builds consistent weights from requested rates: mu = lambda1 * eps_bar,
    /// A = lambda2 e^mu, B = q^2 A + lambda2, with eps_bar = sup 1/eps.
    static LyapunovWeights from_rates(const LinearSystemSpec& sys, double lambda1,
                                      double lambda2, int samples = 257);
};

/// D(x) evaluated at one point.
Mat2 weight_D(const LyapunovWeights& w, const LinearSystemSpec& sys, double x);

/// Trapezoid of the quadratic form over the field's grid.
double lyapunov_V1(const LyapunovWeights& w, const LinearSystemSpec& sys, const StateField& g);

/// R = D + Theta with the antidiagonal Theta chosen so that
/// R (Sigma - F1) - (Sigma - F1)^T R = 0 pointwise. `f1` holds the
/// state-dependent speed perturbation at each node of an m-point grid.
/// Throws SmallDenominator when eps1+eps2+(F1)11-(F1)22 < K1/2.
std::vector<Mat2> build_R(const LinearSystemSpec& sys, const std::vector<Mat2>& f1,
                          const LyapunovWeights& w);

/// sup over nodes of max-abs-entry of R M - M^T R with M = Sigma - F1.
double check_symmetry_identity(const std::vector<Mat2>& R,
                               const std::vector<Mat2>& sigma_minus_f1);

/// Sigma(x) - F1 at the nodes of an m-point grid, Sigma = diag(-eps1, eps2).
std::vector<Mat2> sigma_minus_f1(const LinearSystemSpec& sys, const std::vector<Mat2>& f1);

/// State sup-norm radius within which R stays positive definite, from the
/// measured minimum of eps1+eps2 and a sampled Lipschitz bound `k2` of the
/// speed perturbation with respect to the state.
double r_positivity_radius(const LinearSystemSpec& sys, const LyapunovWeights& w, double k2,
                           int samples = 257);

/// Least-squares exponential rate of a norm time series over [t_start, t_end]:
/// returns (negated slope of log-norm, r^2). Throws NonPositiveNorm when a
/// sample in the window is not positive.
std::pair<double, double> fit_decay_rate(const std::vector<double>& times,
                                         const std::vector<double>& norms, double t_start,
                                         double t_end);

}  // namespace backstep
