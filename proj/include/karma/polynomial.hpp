// Copyright 2026 The KARMA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Helpers for monic polynomials in z^-1, stored as their trailing
// coefficients: {c1, ..., cn} represents 1 + c1 z^-1 + ... + cn z^-n.

#ifndef KARMA_POLYNOMIAL_HPP_
#define KARMA_POLYNOMIAL_HPP_

#include <complex>
#include <span>
#include <vector>

namespace karma::poly {

// Roots in the z-plane of 1 + c1 z^-1 + ... + cn z^-n.
std::vector<std::complex<double>> roots(std::span<const double> coeffs);

// Trailing coefficients of prod_k (1 - r_k z^-1). Roots must come in
// conjugate pairs; imaginary residue is discarded.
std::vector<double> from_roots(std::span<const std::complex<double>> roots);

// Step-down (Schur-Cohn) test: true iff every root is strictly inside the
// unit circle.
bool is_minimum_phase(std::span<const double> coeffs);

// Value of 1 + sum c_k z^-k at z = exp(j*omega).
std::complex<double> evaluate(std::span<const double> coeffs, double omega);

}  // namespace karma::poly

#endif  // KARMA_POLYNOMIAL_HPP_
