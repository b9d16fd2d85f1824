#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "viability/field.hpp"

namespace viability {

/// Raised when the regularized kernel matrix cannot be factorized.
class GpError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matern smoothness nu in {1/2, 3/2, 5/2}.
enum class Smoothness { Half, ThreeHalves, FiveHalves };

std::string to_string(Smoothness nu);
Smoothness smoothness_from_string(const std::string& name);

struct KernelParams {
    std::vector<double> lengthscales;  // one per input dimension of Q
    double signal_variance = 1.0;
    Smoothness smoothness = Smoothness::FiveHalves;

    void validate() const;
};

/// Matern covariance with anisotropic scaled distance.
double kernel_eval(std::span<const double> q1, std::span<const double> q2,
                   const KernelParams& params);

/// Matern correlation as a function of the scaled distance r >= 0.
double matern_correlation(double r, Smoothness nu);

/// Prior mean over Q: constant, or a constant offset plus a Gaussian bump.
struct PriorMean {
    enum class Kind { Constant, Bump };

    Kind kind = Kind::Constant;
    double offset = 0.0;
    double peak = 0.0;
    std::vector<double> center;
    std::vector<double> widths;

    static PriorMean constant(double value);
    static PriorMean bump(double offset, double peak, std::vector<double> center,
                          std::vector<double> widths);

    double operator()(std::span<const double> q) const;
    void validate(std::size_t dims) const;

    friend bool operator==(const PriorMean&, const PriorMean&) = default;
};

struct Sample {
    std::vector<double> q;
    double target = 0.0;
};

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
    bool clamped = false;  // a small negative round-off variance was set to zero
};

/// P[X > lambda] for X ~ N(mean, variance). With zero variance the result
/// is 1 if mean > lambda and 0 otherwise.
double prob_exceeds(double mean, double variance, double lambda);

/// Exact GP regression conditioned on a data set. Immutable once fitted.
class GpPosterior {
public:
    /// Factorizes K + noise I, escalating diagonal jitter up to 1e-6 times
    /// the signal variance. An empty data set yields the prior.
    static GpPosterior fit(std::vector<Sample> data, KernelParams kernel, double noise_variance,
                           PriorMean prior);

    Prediction predict(std::span<const double> q) const;
    double prob_exceeds(std::span<const double> q, double lambda) const;

    /// Mean and variance at every row of `points`. Returns the number of
    /// variances clamped at zero.
    std::size_t predict_batch(const Eigen::MatrixXd& points, Eigen::VectorXd& mean,
                              Eigen::VectorXd& variance) const;

    const std::vector<Sample>& data() const { return data_; }
    const KernelParams& kernel() const { return kernel_; }
    const PriorMean& prior() const { return prior_; }
    double noise_variance() const { return noise_variance_; }
    double jitter() const { return jitter_; }
    std::size_t dims() const { return kernel_.lengthscales.size(); }

private:
    GpPosterior() = default;

    std::vector<Sample> data_;
    KernelParams kernel_;
    double noise_variance_ = 0.0;
    PriorMean prior_;
    double jitter_ = 0.0;
    Eigen::MatrixXd inputs_;  // n x d
    Eigen::LLT<Eigen::MatrixXd> factor_;
    Eigen::VectorXd weights_;  // (K + noise I)^-1 (y - m(X))
};

/// Kernel hyperparameters from a reference Lambda_Q field (e.g. an oracle run
/// on a low-fidelity model): the signal variance is the field's variance and
/// each lengthscale is the least-squares fit of the Matern correlation to the
/// empirical correlogram along that grid axis.
KernelParams estimate_kernel_params(const ScalarField& lambda_q, Smoothness nu);

}  // namespace viability
