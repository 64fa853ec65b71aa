#pragma once

// Global/local decompositions of two sample-importance measures.
//
// Representer points (closed form, class-c training points only):
//   g(i)    = -(W_c f_i + b_c)                 or, relative to k,
//   g(i)    = -((W_c - W_k) f_i + (b_c - b_k))
//   l(i, t) = f_i . f_t                        (raw, unaugmented features)
//
// Influence functions over the head parameters:
//   g(i)    = | H^-1 grad L(z_i) |_2
//   l(i, t) = -grad L(z_t)^T H^-1 grad L(z_i)
// where H is the regularized, damped Hessian of hessian_vector_product.

#include "spectra/core_data.hpp"
#include "spectra/head.hpp"

#include <memory>
#include <span>
#include <vector>

namespace spectra {

struct ScoredPoint {
    std::size_t index;
    double g;
    double l;
};

std::vector<ScoredPoint> representer_scores(const FeatureSet& fs, const LabelVector& lv,
                                            const LinearHead& head, const Query& q,
                                            bool relative_g);

/// sum_i (1/(2 lambda n)) (y_i - p_i) [f_i; 1].[f_t; 1], one value per class.
/// Equals W f_t + b when the head sits at a stationary point of its training
/// objective. Throws LambdaZero for heads without a training lambda.
std::vector<double> representer_reconstruct(const FeatureSet& fs, const LabelVector& lv,
                                            const LinearHead& head, std::span<const double> f_t);

enum class SolveMethod { Auto, Dense, ConjugateGradient };

struct InfluenceConfig {
    double damping = 1e-3;
    double cg_tol = 1e-8;
    std::size_t cg_max_iters = 1000;
    std::size_t explicit_solve_threshold = 2000;  // dense solve when T*(d+1) < this
    SolveMethod method = SolveMethod::Auto;
    bool compute_global = true;  // false: l only, g reported as 0
};

void validate(const InfluenceConfig& cfg);

/// Applies H^-1 for one (data, head, lambda, damping) system. The dense path
/// assembles H column by column from Hessian-vector products and factors it
/// once; the CG path runs one solve per right-hand side.
class HessianInverse {
public:
    HessianInverse(const FeatureSet& fs, const LabelVector& lv, const LinearHead& head,
                   double lambda, const InfluenceConfig& cfg);
    ~HessianInverse();
    HessianInverse(HessianInverse&&) noexcept;
    HessianInverse& operator=(HessianInverse&&) noexcept;

    /// Throws CgDidNotConverge on the iterative path.
    std::vector<double> solve(std::span<const double> rhs) const;

    bool dense() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Scores for the class-c training points, with z_t labelled by the query's
/// predicted class.
std::vector<ScoredPoint> influence_scores(const FeatureSet& fs, const LabelVector& lv,
                                          const LinearHead& head, const Query& q, double lambda,
                                          const InfluenceConfig& cfg);

/// Scores for every training point against a test point with label y_t.
std::vector<ScoredPoint> influence_scores_all(const FeatureSet& fs, const LabelVector& lv,
                                              const LinearHead& head, std::span<const double> f_t,
                                              ClassId y_t, double lambda,
                                              const InfluenceConfig& cfg);

/// Exact test-loss change L(z_t; theta_-i) - L(z_t; theta) from retraining
/// without point drop_index under the same config.
double loo_oracle(const FeatureSet& fs, const LabelVector& lv, const TrainConfig& cfg,
                  std::size_t drop_index, std::span<const double> f_t, ClassId y_t);

/// Same, reusing an already trained full-data head.
double loo_oracle(const FeatureSet& fs, const LabelVector& lv, const TrainConfig& cfg,
                  std::size_t drop_index, std::span<const double> f_t, ClassId y_t,
                  const LinearHead& full);

/// Keeps the scored points whose index is in the support set, in index order.
std::vector<ScoredPoint> restrict_to_support(std::span<const ScoredPoint> scored,
                                             const SupportSet& support);

/// Sample Pearson correlation. NaN when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

} // namespace spectra
