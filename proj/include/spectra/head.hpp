#pragma once

// L2-regularized softmax regression on precomputed features.
//
// Objective:  F(W, b) = (1/n) sum_i CE(softmax(W f_i + b), y_i) + lambda * (|W|^2 + |b|^2)
//
// The bias is regularized like the weights, i.e. the head is a plain linear
// map on augmented features [f; 1]. At a stationary point this makes
//   W~ = (1/(2 lambda n)) sum_i (y_i - p_i) [f_i; 1]^T
// hold exactly, which is what representer reconstruction relies on.
//
// Parameter vectors (GradVector) are flat with length T*(d+1): the T*d
// weights in row-major order, followed by the T biases.

#include "spectra/core_data.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace spectra {

using GradVector = std::vector<double>;

struct TrainConfig {
    double lambda = 0.01;
    double learning_rate = 0.1;
    std::size_t max_iters = 200000;
    double grad_tol = 1e-8;  // on the infinity norm of the full objective gradient
    std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

/// Step size 1/L for the objective's gradient Lipschitz bound
/// L = max_i |[f_i; 1]|^2 / 2 + 2 lambda, which keeps fixed-step descent monotone.
double safe_learning_rate(const FeatureSet& fs, double lambda);

struct Blobs {
    FeatureSet features;
    LabelVector labels;
};

/// Isotropic Gaussian clusters in 2D, n_per_class points per center, class k
/// around centers[k]. Box-Muller over mt19937_64 so output is identical on
/// every standard library.
Blobs make_blobs(std::uint64_t seed, std::size_t n_per_class,
                 std::span<const std::array<double, 2>> centers, double stddev);

/// Gaussian classes in `dim` dimensions: class k is centered at
/// separation * e_(k mod dim) with isotropic noise. Same sampler as make_blobs.
Blobs make_gaussian_classes(std::uint64_t seed, std::size_t n_per_class, std::size_t dim,
                            std::size_t num_classes, double separation, double stddev);

/// Full-batch gradient descent with a fixed step. Throws DidNotConverge with
/// the final gradient norm when max_iters is exhausted.
LinearHead train_head(const FeatureSet& fs, const LabelVector& lv, const TrainConfig& cfg);

struct Prediction {
    ClassId label;
    std::vector<double> probs;
};

/// argmax of the logits (lowest id on ties) and their softmax.
Prediction predict(const LinearHead& head, std::span<const double> f);

std::vector<double> softmax(std::span<const double> logits);

/// Cross-entropy of one example.
double point_loss(const LinearHead& head, std::span<const double> f, ClassId y);

/// Gradient of the point loss w.r.t. (W, b), plus 2*lambda*theta when include_reg.
GradVector grad_point(const LinearHead& head, std::span<const double> f, ClassId y, double lambda,
                      bool include_reg);

double objective(const LinearHead& head, const FeatureSet& fs, const LabelVector& lv,
                 double lambda);

GradVector objective_gradient(const LinearHead& head, const FeatureSet& fs, const LabelVector& lv,
                              double lambda);

/// (H + 2 lambda I + damping I) v, with H the mean cross-entropy Hessian over
/// head parameters. Per-point terms are accumulated sequentially in index order.
GradVector hessian_vector_product(const LinearHead& head, const FeatureSet& fs,
                                  const LabelVector& lv, std::span<const double> v, double lambda,
                                  double damping);

std::size_t param_count(const LinearHead& head);
GradVector params_of(const LinearHead& head);
LinearHead head_from_params(std::size_t num_classes, std::size_t dim,
                            std::span<const double> params, double lambda);

} // namespace spectra
