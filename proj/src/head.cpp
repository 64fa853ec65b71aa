#include "spectra/head.hpp"

#include "spectra/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace spectra {

namespace {

template <typename Real>
std::vector<double> logits_of(const LinearHead& head, std::span<const Real> f)
{
    const std::size_t t = head.num_classes();
    const std::size_t d = head.dim();
    std::vector<double> z(t);
    for (std::size_t k = 0; k < t; ++k) {
        double acc = head.bias(k);
        const auto w = head.row(k);
        for (std::size_t j = 0; j < d; ++j)
            acc += w[j] * static_cast<double>(f[j]);
        z[k] = acc;
    }
    return z;
}

void softmax_inplace(std::vector<double>& z)
{
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (auto& v : z)
        v /= sum;
}

double log_sum_exp(std::span<const double> z)
{
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z)
        sum += std::exp(v - m);
    return m + std::log(sum);
}

void check_dim(const LinearHead& head, std::size_t got)
{
    if (got != head.dim())
        throw Error(ErrorCode::DimensionMismatch,
                    "feature vector has dimension " + std::to_string(got) + ", head expects " +
                        std::to_string(head.dim()));
}

void check_class(const LinearHead& head, ClassId y)
{
    if (y >= head.num_classes())
        throw Error(ErrorCode::ClassOutOfRange,
                    "class " + std::to_string(y) + " out of range for T=" +
                        std::to_string(head.num_classes()));
}

/// Adds scale * (p - onehot(y)) (x) [f; 1] into grad.
template <typename Real>
void accumulate_point_grad(const LinearHead& head, std::span<const Real> f, ClassId y,
                           double scale, GradVector& grad)
{
    const std::size_t t = head.num_classes();
    const std::size_t d = head.dim();
    auto p = logits_of(head, f);
    softmax_inplace(p);
    p[y] -= 1.0;
    for (std::size_t k = 0; k < t; ++k) {
        const double r = scale * p[k];
        double* gw = grad.data() + k * d;
        for (std::size_t j = 0; j < d; ++j)
            gw[j] += r * static_cast<double>(f[j]);
        grad[t * d + k] += r;
    }
}

} // namespace

void validate(const TrainConfig& cfg)
{
    if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda))
        throw Error(ErrorCode::InvalidArgument, "training lambda must be > 0");
    if (!(cfg.grad_tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "grad_tol must be > 0");
    if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
        throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
    if (cfg.max_iters == 0)
        throw Error(ErrorCode::InvalidArgument, "max_iters must be positive");
}

double safe_learning_rate(const FeatureSet& fs, double lambda)
{
    double max_sq = 0.0;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        double sq = 1.0;
        for (float v : fs.row(i))
            sq += static_cast<double>(v) * v;
        max_sq = std::max(max_sq, sq);
    }
    return 1.0 / (0.5 * max_sq + 2.0 * lambda);
}

namespace {

class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

    /// Standard normal pair via Box-Muller.
    std::array<double, 2> pair()
    {
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

    double next()
    {
        if (cached_) {
            cached_ = false;
            return spare_;
        }
        const auto p = pair();
        spare_ = p[1];
        cached_ = true;
        return p[0];
    }

private:
    // 53 random bits -> uniform in (0, 1].
    double uniform() { return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53; }

    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool cached_ = false;
};

} // namespace

Blobs make_gaussian_classes(std::uint64_t seed, std::size_t n_per_class, std::size_t dim,
                            std::size_t num_classes, double separation, double stddev)
{
    if (num_classes < 2 || dim == 0 || n_per_class == 0)
        throw Error(ErrorCode::InvalidArgument,
                    "make_gaussian_classes needs T >= 2, d >= 1, n_per_class >= 1");
    if (!(stddev > 0.0))
        throw Error(ErrorCode::InvalidArgument, "make_gaussian_classes needs stddev > 0");
    GaussianSampler gauss(seed);
    const std::size_t n = n_per_class * num_classes;
    std::vector<float> data;
    data.reserve(n * dim);
    std::vector<ClassId> labels;
    labels.reserve(n);
    for (std::size_t k = 0; k < num_classes; ++k)
        for (std::size_t i = 0; i < n_per_class; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                const double center = (j == k % dim) ? separation : 0.0;
                data.push_back(static_cast<float>(center + stddev * gauss.next()));
            }
            labels.push_back(static_cast<ClassId>(k));
        }
    return Blobs{FeatureSet(n, dim, std::move(data)), LabelVector(num_classes, std::move(labels))};
}

Blobs make_blobs(std::uint64_t seed, std::size_t n_per_class,
                 std::span<const std::array<double, 2>> centers, double stddev)
{
    if (centers.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "make_blobs needs at least 2 centers");
    if (!(stddev > 0.0))
        throw Error(ErrorCode::InvalidArgument, "make_blobs needs stddev > 0");
    if (n_per_class == 0)
        throw Error(ErrorCode::InvalidArgument, "make_blobs needs n_per_class >= 1");

    GaussianSampler gauss(seed);
    const std::size_t n = n_per_class * centers.size();
    std::vector<float> data;
    data.reserve(2 * n);
    std::vector<ClassId> labels;
    labels.reserve(n);
    for (std::size_t k = 0; k < centers.size(); ++k) {
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const auto z = gauss.pair();
            data.push_back(static_cast<float>(centers[k][0] + stddev * z[0]));
            data.push_back(static_cast<float>(centers[k][1] + stddev * z[1]));
            labels.push_back(static_cast<ClassId>(k));
        }
    }
    return Blobs{FeatureSet(n, 2, std::move(data)), LabelVector(centers.size(), std::move(labels))};
}

std::size_t param_count(const LinearHead& head)
{
    return head.num_classes() * (head.dim() + 1);
}

GradVector params_of(const LinearHead& head)
{
    GradVector theta(head.weights().begin(), head.weights().end());
    theta.insert(theta.end(), head.bias().begin(), head.bias().end());
    return theta;
}

LinearHead head_from_params(std::size_t num_classes, std::size_t dim,
                            std::span<const double> params, double lambda)
{
    if (params.size() != num_classes * (dim + 1))
        throw Error(ErrorCode::DimensionMismatch, "parameter vector length does not match T*(d+1)");
    const auto split = params.begin() + static_cast<std::ptrdiff_t>(num_classes * dim);
    return LinearHead(num_classes, dim, std::vector<double>(params.begin(), split),
                      std::vector<double>(split, params.end()), lambda);
}

std::vector<double> softmax(std::span<const double> logits)
{
    std::vector<double> p(logits.begin(), logits.end());
    softmax_inplace(p);
    return p;
}

Prediction predict(const LinearHead& head, std::span<const double> f)
{
    check_dim(head, f.size());
    auto z = logits_of(head, f);
    ClassId best = 0;
    for (std::size_t k = 1; k < z.size(); ++k)
        if (z[k] > z[best])
            best = static_cast<ClassId>(k);
    softmax_inplace(z);
    return Prediction{best, std::move(z)};
}

double point_loss(const LinearHead& head, std::span<const double> f, ClassId y)
{
    check_dim(head, f.size());
    check_class(head, y);
    const auto z = logits_of(head, f);
    return log_sum_exp(z) - z[y];
}

GradVector grad_point(const LinearHead& head, std::span<const double> f, ClassId y, double lambda,
                      bool include_reg)
{
    check_dim(head, f.size());
    check_class(head, y);
    GradVector grad(param_count(head), 0.0);
    accumulate_point_grad(head, f, y, 1.0, grad);
    if (include_reg) {
        const auto theta = params_of(head);
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad[i] += 2.0 * lambda * theta[i];
    }
    return grad;
}

double objective(const LinearHead& head, const FeatureSet& fs, const LabelVector& lv,
                 double lambda)
{
    check_consistent(fs, lv, head);
    double loss = 0.0;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const auto z = logits_of(head, fs.row(i));
        loss += log_sum_exp(z) - z[lv[i]];
    }
    double sq = 0.0;
    for (double v : head.weights())
        sq += v * v;
    for (double v : head.bias())
        sq += v * v;
    return loss / static_cast<double>(fs.size()) + lambda * sq;
}

GradVector objective_gradient(const LinearHead& head, const FeatureSet& fs, const LabelVector& lv,
                              double lambda)
{
    check_consistent(fs, lv, head);
    GradVector grad(param_count(head), 0.0);
    const double inv_n = 1.0 / static_cast<double>(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i)
        accumulate_point_grad(head, fs.row(i), lv[i], inv_n, grad);
    const auto theta = params_of(head);
    for (std::size_t i = 0; i < grad.size(); ++i)
        grad[i] += 2.0 * lambda * theta[i];
    return grad;
}

GradVector hessian_vector_product(const LinearHead& head, const FeatureSet& fs,
                                  const LabelVector& lv, std::span<const double> v, double lambda,
                                  double damping)
{
    check_consistent(fs, lv, head);
    const std::size_t t = head.num_classes();
    const std::size_t d = head.dim();
    if (v.size() != param_count(head))
        throw Error(ErrorCode::DimensionMismatch,
                    "HVP direction has length " + std::to_string(v.size()) + ", expected " +
                        std::to_string(param_count(head)));

    GradVector out(v.size(), 0.0);
    std::vector<double> u(t);
    const double inv_n = 1.0 / static_cast<double>(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const auto f = fs.row(i);
        auto p = logits_of(head, f);
        softmax_inplace(p);

        // u = V f + v_b: the logit perturbation along v.
        for (std::size_t k = 0; k < t; ++k) {
            double acc = v[t * d + k];
            for (std::size_t j = 0; j < d; ++j)
                acc += v[k * d + j] * static_cast<double>(f[j]);
            u[k] = acc;
        }
        // (diag(p) - p p^T) u
        double pu = 0.0;
        for (std::size_t k = 0; k < t; ++k)
            pu += p[k] * u[k];
        for (std::size_t k = 0; k < t; ++k) {
            const double a = inv_n * p[k] * (u[k] - pu);
            double* ow = out.data() + k * d;
            for (std::size_t j = 0; j < d; ++j)
                ow[j] += a * static_cast<double>(f[j]);
            out[t * d + k] += a;
        }
    }
    const double shift = 2.0 * lambda + damping;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] += shift * v[i];
    return out;
}

LinearHead train_head(const FeatureSet& fs, const LabelVector& lv, const TrainConfig& cfg)
{
    validate(cfg);
    check_consistent(fs, lv);
    const std::size_t t = lv.num_classes();
    const std::size_t d = fs.dim();

    std::mt19937_64 rng(cfg.seed);
    GradVector theta(t * (d + 1));
    for (auto& w : theta)
        w = 1e-3 * (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5);

    double grad_norm = 0.0;
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        const auto head = head_from_params(t, d, theta, cfg.lambda);
        const auto grad = objective_gradient(head, fs, lv, cfg.lambda);
        grad_norm = 0.0;
        for (double g : grad)
            grad_norm = std::max(grad_norm, std::abs(g));
        if (!std::isfinite(grad_norm))
            break;
        if (grad_norm < cfg.grad_tol)
            return head;
        for (std::size_t i = 0; i < theta.size(); ++i)
            theta[i] -= cfg.learning_rate * grad[i];
    }
    std::ostringstream msg;
    msg << "gradient descent stopped after " << cfg.max_iters
        << " iterations with gradient inf-norm " << grad_norm << " (tolerance " << cfg.grad_tol
        << ")";
    throw Error(ErrorCode::DidNotConverge, msg.str());
}

} // namespace spectra
