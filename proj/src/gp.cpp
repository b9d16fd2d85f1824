#include "viability/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace viability {

std::string to_string(Smoothness nu) {
    switch (nu) {
        case Smoothness::Half: return "1/2";
        case Smoothness::ThreeHalves: return "3/2";
        case Smoothness::FiveHalves: return "5/2";
    }
    return "?";
}

Smoothness smoothness_from_string(const std::string& name) {
    if (name == "1/2") return Smoothness::Half;
    if (name == "3/2") return Smoothness::ThreeHalves;
    if (name == "5/2") return Smoothness::FiveHalves;
    throw std::invalid_argument("Matern smoothness must be one of 1/2, 3/2, 5/2");
}

void KernelParams::validate() const {
    if (lengthscales.empty()) {
        throw std::invalid_argument("kernel needs at least one lengthscale");
    }
    for (double l : lengthscales) {
        if (!std::isfinite(l) || l <= 0.0) {
            throw std::invalid_argument("kernel lengthscales must be positive");
        }
    }
    if (!std::isfinite(signal_variance) || signal_variance <= 0.0) {
        throw std::invalid_argument("kernel signal variance must be positive");
    }
}

double matern_correlation(double r, Smoothness nu) {
    switch (nu) {
        case Smoothness::Half:
            return std::exp(-r);
        case Smoothness::ThreeHalves: {
            const double z = std::sqrt(3.0) * r;
            return (1.0 + z) * std::exp(-z);
        }
        case Smoothness::FiveHalves: {
            const double z = std::sqrt(5.0) * r;
            return (1.0 + z + z * z / 3.0) * std::exp(-z);
        }
    }
    return 0.0;
}

double kernel_eval(std::span<const double> q1, std::span<const double> q2,
                   const KernelParams& params) {
    params.validate();
    if (q1.size() != params.lengthscales.size() || q2.size() != params.lengthscales.size()) {
        throw std::invalid_argument("kernel input dimension does not match the lengthscales");
    }
    double r2 = 0.0;
    for (std::size_t d = 0; d < q1.size(); ++d) {
        const double z = (q1[d] - q2[d]) / params.lengthscales[d];
        r2 += z * z;
    }
    return params.signal_variance * matern_correlation(std::sqrt(r2), params.smoothness);
}

PriorMean PriorMean::constant(double value) {
    PriorMean p;
    p.kind = Kind::Constant;
    p.offset = value;
    return p;
}

PriorMean PriorMean::bump(double offset, double peak, std::vector<double> center,
                          std::vector<double> widths) {
    PriorMean p;
    p.kind = Kind::Bump;
    p.offset = offset;
    p.peak = peak;
    p.center = std::move(center);
    p.widths = std::move(widths);
    return p;
}

double PriorMean::operator()(std::span<const double> q) const {
    if (kind == Kind::Constant) {
        return offset;
    }
    double r2 = 0.0;
    for (std::size_t d = 0; d < center.size(); ++d) {
        const double z = (q[d] - center[d]) / widths[d];
        r2 += z * z;
    }
    return offset + peak * std::exp(-0.5 * r2);
}

void PriorMean::validate(std::size_t dims) const {
    if (!std::isfinite(offset) || !std::isfinite(peak)) {
        throw std::invalid_argument("prior mean values must be finite");
    }
    if (kind == Kind::Bump) {
        if (center.size() != dims || widths.size() != dims) {
            throw std::invalid_argument("prior bump center and widths must match the Q dimension");
        }
        for (double w : widths) {
            if (!std::isfinite(w) || w <= 0.0) {
                throw std::invalid_argument("prior bump widths must be positive");
            }
        }
    }
}

double prob_exceeds(double mean, double variance, double lambda) {
    if (std::isnan(lambda)) {
        throw std::invalid_argument("threshold must not be NaN");
    }
    if (variance <= 0.0) {
        return mean > lambda ? 1.0 : 0.0;
    }
    // 1 - Phi((lambda - mean) / sigma)
    return 0.5 * std::erfc((lambda - mean) / std::sqrt(2.0 * variance));
}

GpPosterior GpPosterior::fit(std::vector<Sample> data, KernelParams kernel, double noise_variance,
                             PriorMean prior) {
    kernel.validate();
    const auto dims = kernel.lengthscales.size();
    prior.validate(dims);
    if (!std::isfinite(noise_variance) || noise_variance <= 0.0) {
        throw std::invalid_argument("noise variance must be positive");
    }

    GpPosterior post;
    post.kernel_ = std::move(kernel);
    post.noise_variance_ = noise_variance;
    post.prior_ = std::move(prior);
    post.data_ = std::move(data);

    const auto n = static_cast<Eigen::Index>(post.data_.size());
    post.inputs_.resize(n, static_cast<Eigen::Index>(dims));
    Eigen::VectorXd residual(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& sample = post.data_[static_cast<std::size_t>(i)];
        if (sample.q.size() != dims) {
            throw std::invalid_argument("sample dimension does not match the kernel");
        }
        if (!std::isfinite(sample.target)) {
            throw std::invalid_argument("sample targets must be finite");
        }
        for (std::size_t d = 0; d < dims; ++d) {
            post.inputs_(i, static_cast<Eigen::Index>(d)) = sample.q[d];
        }
        residual(i) = sample.target - post.prior_(sample.q);
    }
    if (n == 0) {
        return post;
    }

    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        gram(i, i) = post.kernel_.signal_variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double k = kernel_eval(post.data_[static_cast<std::size_t>(i)].q,
                                         post.data_[static_cast<std::size_t>(j)].q, post.kernel_);
            gram(i, j) = k;
            gram(j, i) = k;
        }
    }

    const double sf2 = post.kernel_.signal_variance;
    constexpr double kJitterSteps[] = {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
    for (double rel : kJitterSteps) {
        Eigen::MatrixXd regularized = gram;
        regularized.diagonal().array() += noise_variance + rel * sf2;
        post.factor_.compute(regularized);
        if (post.factor_.info() == Eigen::Success) {
            post.jitter_ = rel * sf2;
            post.weights_ = post.factor_.solve(residual);
            return post;
        }
    }
    throw GpError("kernel matrix is not positive definite even with jitter 1e-6 * signal variance (" +
                  std::to_string(n) + " samples); the data set is badly conditioned");
}

Prediction GpPosterior::predict(std::span<const double> q) const {
    if (q.size() != dims()) {
        throw std::invalid_argument("query dimension does not match the GP");
    }
    Prediction p;
    p.mean = prior_(q);
    p.variance = kernel_.signal_variance;
    if (data_.empty()) {
        return p;
    }
    const auto n = static_cast<Eigen::Index>(data_.size());
    Eigen::VectorXd kstar(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        kstar(i) = kernel_eval(data_[static_cast<std::size_t>(i)].q, q, kernel_);
    }
    p.mean += kstar.dot(weights_);
    const Eigen::VectorXd v = factor_.matrixL().solve(kstar);
    p.variance -= v.squaredNorm();
    if (p.variance < 0.0) {
        p.variance = 0.0;
        p.clamped = true;
    }
    return p;
}

double GpPosterior::prob_exceeds(std::span<const double> q, double lambda) const {
    const auto p = predict(q);
    return viability::prob_exceeds(p.mean, p.variance, lambda);
}

std::size_t GpPosterior::predict_batch(const Eigen::MatrixXd& points, Eigen::VectorXd& mean,
                                       Eigen::VectorXd& variance) const {
    if (static_cast<std::size_t>(points.cols()) != dims()) {
        throw std::invalid_argument("query dimension does not match the GP");
    }
    const auto m = points.rows();
    mean.resize(m);
    variance.setConstant(m, kernel_.signal_variance);
    std::vector<double> q(dims());
    for (Eigen::Index j = 0; j < m; ++j) {
        for (std::size_t d = 0; d < q.size(); ++d) q[d] = points(j, static_cast<Eigen::Index>(d));
        mean(j) = prior_(q);
    }
    if (data_.empty()) {
        return 0;
    }

    const auto n = static_cast<Eigen::Index>(data_.size());
    const auto d = static_cast<Eigen::Index>(dims());
    Eigen::VectorXd inv_l(d);
    for (Eigen::Index k = 0; k < d; ++k) inv_l(k) = 1.0 / kernel_.lengthscales[static_cast<std::size_t>(k)];
    const Eigen::MatrixXd xs = inputs_ * inv_l.asDiagonal();
    const Eigen::MatrixXd ps = points * inv_l.asDiagonal();

    Eigen::MatrixXd cross(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = (xs.row(i) - ps.row(j)).norm();
            cross(i, j) = kernel_.signal_variance * matern_correlation(r, kernel_.smoothness);
        }
    }
    mean.noalias() += cross.transpose() * weights_;
    factor_.matrixL().solveInPlace(cross);
    variance.noalias() -= cross.colwise().squaredNorm().transpose();

    std::size_t clamped = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
        if (variance(j) < 0.0) {
            variance(j) = 0.0;
            ++clamped;
        }
    }
    return clamped;
}

KernelParams estimate_kernel_params(const ScalarField& lambda_q, Smoothness nu) {
    if (lambda_q.domain() != Domain::StateActions) {
        throw std::invalid_argument("hyperparameter estimation needs a field over Q");
    }
    const auto& grid = *lambda_q.grid();
    std::vector<AxisGrid> axes = grid.state_axes();
    axes.insert(axes.end(), grid.action_axes().begin(), grid.action_axes().end());

    const auto values = lambda_q.values();
    const auto count = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= count;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= count;
    if (!(var > 0.0)) {
        throw std::invalid_argument("reference field is constant; cannot estimate hyperparameters");
    }

    // Row-major strides over the combined axes.
    std::vector<std::size_t> stride(axes.size(), 1);
    for (std::size_t d = axes.size(); d-- > 1;) {
        stride[d - 1] = stride[d] * axes[d].num_cells();
    }

    KernelParams params;
    params.signal_variance = var;
    params.smoothness = nu;
    for (std::size_t d = 0; d < axes.size(); ++d) {
        const auto n_d = axes[d].num_cells();
        const double width = axes[d].cell_width();
        const double extent = axes[d].upper() - axes[d].lower();
        const std::size_t max_lag = std::max<std::size_t>(1, n_d / 2);

        std::vector<double> rho;
        for (std::size_t lag = 1; lag <= max_lag && lag < n_d; ++lag) {
            double acc = 0.0;
            std::size_t pairs = 0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                const auto idx_d = (i / stride[d]) % n_d;
                if (idx_d + lag >= n_d) continue;
                acc += (values[i] - mean) * (values[i + lag * stride[d]] - mean);
                ++pairs;
            }
            rho.push_back(pairs ? acc / (static_cast<double>(pairs) * var) : 0.0);
        }

        double best_l = extent;
        double best_err = std::numeric_limits<double>::infinity();
        constexpr int kCandidates = 400;
        const double lo = std::log(0.5 * width);
        const double hi = std::log(10.0 * extent);
        for (int c = 0; c <= kCandidates; ++c) {
            const double l = std::exp(lo + (hi - lo) * c / kCandidates);
            double err = 0.0;
            for (std::size_t k = 0; k < rho.size(); ++k) {
                const double r = static_cast<double>(k + 1) * width / l;
                const double diff = rho[k] - matern_correlation(r, nu);
                err += diff * diff;
            }
            if (err < best_err) {
                best_err = err;
                best_l = l;
            }
        }
        params.lengthscales.push_back(best_l);
    }
    return params;
}

}  // namespace viability
