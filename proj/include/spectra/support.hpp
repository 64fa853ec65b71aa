#pragma once

// Support sets: the training points of the predicted class c that lie on
// the test point's side of a hyperplane through them,
//
//   R(t; k) = { i : y_i = c  and  w_k . (f_t - f_i) > 0 }
//
// with w_k = W_c for the general set (k = c) and W_c - W_k for the set
// relative to another class k.

#include "spectra/core_data.hpp"

#include <span>
#include <vector>

namespace spectra {

/// W_c when k == c, W_c - W_k otherwise. Throws ClassOutOfRange.
std::vector<double> boundary_normal(const LinearHead& head, ClassId c, ClassId k);

/// w . (f_t - f_i) > 0, evaluated term by term in index order.
bool supports(std::span<const double> normal, std::span<const double> test,
              std::span<const float> train);

/// Full scan; indices come back sorted. An empty set is a valid answer.
SupportSet support_set(const FeatureSet& fs, const LabelVector& lv, const LinearHead& head,
                       const Query& q);

} // namespace spectra
