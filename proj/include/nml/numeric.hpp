#pragma once

#include <span>
#include <vector>

#include "nml/matrix.hpp"

namespace nml {

inline constexpr double kNormEps = 1e-12;

// max-subtraction log-sum-exp; input nonempty and finite
double logsumexp(std::span<const double> x);

// log of softmax, overflow-safe; exp of the result sums to 1 within 1e-12
std::vector<double> log_softmax(std::span<const double> logits);

double l2_norm(std::span<const double> v);

// v / max(||v||, eps); the eps floor maps the zero vector to itself
std::vector<double> l2_normalize(std::span<const double> v, double eps = kNormEps);
void l2_normalize_inplace(double* v, index_t n, double eps = kNormEps);

// Every row L2-normalized with the same eps floor.
Matrix l2_normalize_rows(const Matrix& m, double eps = kNormEps);

// Index of the row maximum; ties go to the lowest index.
index_t argmax_row(const Matrix& m, index_t row);

} // namespace nml
