#include "spectra/attribution.hpp"

#include "spectra/conjugate_gradient.hpp"
#include "spectra/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace spectra {

std::vector<ScoredPoint> representer_scores(const FeatureSet& fs, const LabelVector& lv,
                                            const LinearHead& head, const Query& q,
                                            bool relative_g)
{
    check_consistent(fs, lv, head);
    const auto query = resolve(head, q);
    const ClassId c = query.predicted;
    const ClassId k = query.relative;
    const bool use_relative = relative_g && k != c;

    std::vector<double> w(head.row(c).begin(), head.row(c).end());
    double b = head.bias(c);
    if (use_relative) {
        const auto wk = head.row(k);
        for (std::size_t j = 0; j < w.size(); ++j)
            w[j] -= wk[j];
        b -= head.bias(k);
    }

    std::vector<ScoredPoint> out;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (lv[i] != c)
            continue;
        const auto f = fs.row(i);
        double disc = 0.0;
        double local = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            disc += w[j] * static_cast<double>(f[j]);
            local += static_cast<double>(f[j]) * query.features[j];
        }
        out.push_back({i, -(disc + b), local});
    }
    return out;
}

std::vector<double> representer_reconstruct(const FeatureSet& fs, const LabelVector& lv,
                                            const LinearHead& head, std::span<const double> f_t)
{
    check_consistent(fs, lv, head);
    if (head.lambda() == 0.0)
        throw Error(ErrorCode::LambdaZero,
                    "representer reconstruction needs the head's training lambda > 0");
    if (f_t.size() != head.dim())
        throw Error(ErrorCode::DimensionMismatch, "test feature dimension does not match head");

    const std::size_t t = head.num_classes();
    const double scale = 1.0 / (2.0 * head.lambda() * static_cast<double>(fs.size()));
    std::vector<double> out(t, 0.0);
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const auto f = fs.row(i);
        double kernel = 1.0;  // augmented coordinate
        for (std::size_t j = 0; j < f.size(); ++j)
            kernel += static_cast<double>(f[j]) * f_t[j];
        const auto p = predict(head, widen(f)).probs;
        for (std::size_t k = 0; k < t; ++k) {
            const double residual = (lv[i] == k ? 1.0 : 0.0) - p[k];
            out[k] += scale * residual * kernel;
        }
    }
    return out;
}

void validate(const InfluenceConfig& cfg)
{
    if (!(cfg.damping >= 0.0) || !std::isfinite(cfg.damping))
        throw Error(ErrorCode::InvalidArgument, "damping must be >= 0");
    if (!(cfg.cg_tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "cg_tol must be > 0");
}

struct HessianInverse::Impl {
    const FeatureSet* fs;
    const LabelVector* lv;
    LinearHead head;
    double lambda;
    InfluenceConfig cfg;
    bool dense = false;
    Eigen::LLT<Eigen::MatrixXd> factor;

    std::vector<double> hvp(std::span<const double> v) const
    {
        return hessian_vector_product(head, *fs, *lv, v, lambda, cfg.damping);
    }
};

HessianInverse::HessianInverse(const FeatureSet& fs, const LabelVector& lv, const LinearHead& head,
                               double lambda, const InfluenceConfig& cfg)
    : impl_(std::make_unique<Impl>(Impl{&fs, &lv, head, lambda, cfg, false, {}}))
{
    validate(cfg);
    check_consistent(fs, lv, head);
    if (!(lambda >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");

    const std::size_t p = param_count(head);
    impl_->dense = cfg.method == SolveMethod::Dense ||
                   (cfg.method == SolveMethod::Auto && p < cfg.explicit_solve_threshold);
    if (!impl_->dense)
        return;

    if (lambda == 0.0 && cfg.damping == 0.0)
        throw Error(ErrorCode::SingularSystem,
                    "Hessian is singular without regularization or damping (softmax shift "
                    "invariance)");
    Eigen::MatrixXd h(p, p);
    std::vector<double> e(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        e[j] = 1.0;
        const auto col = impl_->hvp(e);
        for (std::size_t i = 0; i < p; ++i)
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
        e[j] = 0.0;
    }
    // Symmetrize away summation-order asymmetry before factoring.
    const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
    impl_->factor.compute(sym);
    if (impl_->factor.info() != Eigen::Success)
        throw Error(ErrorCode::SingularSystem, "Hessian is not positive definite");
}

HessianInverse::~HessianInverse() = default;
HessianInverse::HessianInverse(HessianInverse&&) noexcept = default;
HessianInverse& HessianInverse::operator=(HessianInverse&&) noexcept = default;

bool HessianInverse::dense() const noexcept
{
    return impl_->dense;
}

std::vector<double> HessianInverse::solve(std::span<const double> rhs) const
{
    if (rhs.size() != param_count(impl_->head))
        throw Error(ErrorCode::DimensionMismatch, "right-hand side length does not match T*(d+1)");
    if (impl_->dense) {
        const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
        const Eigen::VectorXd x = impl_->factor.solve(b);
        return {x.data(), x.data() + x.size()};
    }
    auto result = conjugate_gradient([this](std::span<const double> v) { return impl_->hvp(v); },
                                     rhs, impl_->cfg.cg_tol, impl_->cfg.cg_max_iters);
    if (!result.converged) {
        std::ostringstream msg;
        msg << "conjugate gradient stopped after " << result.iterations
            << " iterations with relative residual " << result.relative_residual;
        throw Error(ErrorCode::CgDidNotConverge, msg.str());
    }
    return std::move(result.x);
}

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a)
{
    return std::sqrt(dot(a, a));
}

template <typename Keep>
std::vector<ScoredPoint> influence_impl(const FeatureSet& fs, const LabelVector& lv,
                                        const LinearHead& head, std::span<const double> f_t,
                                        ClassId y_t, double lambda, const InfluenceConfig& cfg,
                                        Keep keep)
{
    const HessianInverse inverse(fs, lv, head, lambda, cfg);
    const auto grad_t = grad_point(head, f_t, y_t, lambda, false);
    const auto s_t = inverse.solve(grad_t);

    std::vector<ScoredPoint> out;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (!keep(i))
            continue;
        const auto grad_i = grad_point(head, widen(fs.row(i)), lv[i], lambda, false);
        const double local = -dot(s_t, grad_i);
        const double global = cfg.compute_global ? norm2(inverse.solve(grad_i)) : 0.0;
        out.push_back({i, global, local});
    }
    return out;
}

} // namespace

std::vector<ScoredPoint> influence_scores(const FeatureSet& fs, const LabelVector& lv,
                                          const LinearHead& head, const Query& q, double lambda,
                                          const InfluenceConfig& cfg)
{
    check_consistent(fs, lv, head);
    const auto query = resolve(head, q);
    const ClassId c = query.predicted;
    return influence_impl(fs, lv, head, query.features, c, lambda, cfg,
                          [&](std::size_t i) { return lv[i] == c; });
}

std::vector<ScoredPoint> influence_scores_all(const FeatureSet& fs, const LabelVector& lv,
                                              const LinearHead& head, std::span<const double> f_t,
                                              ClassId y_t, double lambda,
                                              const InfluenceConfig& cfg)
{
    check_consistent(fs, lv, head);
    return influence_impl(fs, lv, head, f_t, y_t, lambda, cfg, [](std::size_t) { return true; });
}

double loo_oracle(const FeatureSet& fs, const LabelVector& lv, const TrainConfig& cfg,
                  std::size_t drop_index, std::span<const double> f_t, ClassId y_t)
{
    const auto full = train_head(fs, lv, cfg);
    return loo_oracle(fs, lv, cfg, drop_index, f_t, y_t, full);
}

double loo_oracle(const FeatureSet& fs, const LabelVector& lv, const TrainConfig& cfg,
                  std::size_t drop_index, std::span<const double> f_t, ClassId y_t,
                  const LinearHead& full)
{
    check_consistent(fs, lv, full);
    if (fs.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "leave-one-out needs at least 2 training points");
    if (drop_index >= fs.size())
        throw Error(ErrorCode::InvalidArgument,
                    "drop index " + std::to_string(drop_index) + " out of range", drop_index);

    const std::size_t d = fs.dim();
    std::vector<float> data;
    data.reserve((fs.size() - 1) * d);
    std::vector<ClassId> labels;
    labels.reserve(fs.size() - 1);
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (i == drop_index)
            continue;
        const auto row = fs.row(i);
        data.insert(data.end(), row.begin(), row.end());
        labels.push_back(lv[i]);
    }
    const FeatureSet reduced_fs(fs.size() - 1, d, std::move(data));
    const LabelVector reduced_lv(lv.num_classes(), std::move(labels));
    const auto reduced = train_head(reduced_fs, reduced_lv, cfg);
    return point_loss(reduced, f_t, y_t) - point_loss(full, f_t, y_t);
}

std::vector<ScoredPoint> restrict_to_support(std::span<const ScoredPoint> scored,
                                             const SupportSet& support)
{
    std::vector<ScoredPoint> out;
    for (const auto& s : scored)
        if (std::binary_search(support.indices.begin(), support.indices.end(), s.index))
            out.push_back(s);
    std::sort(out.begin(), out.end(),
              [](const ScoredPoint& a, const ScoredPoint& b) { return a.index < b.index; });
    return out;
}

double pearson(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw Error(ErrorCode::DimensionMismatch, "pearson needs two equal-length series (n >= 2)");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

} // namespace spectra
