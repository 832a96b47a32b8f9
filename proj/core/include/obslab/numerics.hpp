#pragma once

#include <cstddef>
#include <vector>

#include "obslab/tensor.hpp"

namespace obslab {

// ---------------------------------------------------------------------------
// Probability transforms
// ---------------------------------------------------------------------------

/// Stable softmax of a 1-D logits vector (max-subtraction, sequential sums).
Tensor softmax(const Tensor& logits);

/// Index of the largest entry; exact ties break toward the lowest index.
std::size_t argmax_index(const Tensor& v);

/// Softmax restricted to the m largest logits: the rest are masked to -inf
/// before normalizing, so the result sums to 1 over at most m entries. Ties
/// at the cutoff keep the lower index, so the surviving support is the
/// lexicographically-first top-m index set.
Tensor topm_softmax(const Tensor& logits, std::size_t m);

/// The indices that topm_softmax keeps, in increasing order.
std::vector<std::size_t> topm_support(const Tensor& logits, std::size_t m);

/// KL(p || q) with the 0*ln(0) = 0 convention. Both arguments must sum to 1
/// within 1e-9; q_i = 0 with p_i > 0 raises divergence_undefined.
double kl_div(const Tensor& p, const Tensor& q);

// ---------------------------------------------------------------------------
// Spectral bound
// ---------------------------------------------------------------------------

/// Largest singular value of a square matrix, via power iteration on M^T M
/// (200 iterations or relative change below 1e-10). This upper-bounds the
/// spectral radius, which is all the stability certificates need.
double spectral_radius(const Tensor& m);

// ---------------------------------------------------------------------------
// Dense kernels
//
// Shared by the direct forward pass and the autodiff graph so both produce
// bit-identical values. All loops are sequential with a fixed accumulation
// order.
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_bias_rows(const Tensor& m, const Tensor& bias);  // bias shape {cols}
Tensor exp_map(const Tensor& a);
Tensor tanh_map(const Tensor& a);
Tensor gelu_map(const Tensor& a);
double gelu_derivative(double x);

Tensor softmax_rows(const Tensor& m);
Tensor log_softmax_rows(const Tensor& m);
/// Row i is a softmax over columns 0..i; later columns are exactly zero.
Tensor causal_softmax_rows(const Tensor& scores);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

Tensor gather_rows(const Tensor& m, const std::vector<int>& ids);
Tensor concat_rows(const std::vector<const Tensor*>& parts);
Tensor slice_cols(const Tensor& m, std::size_t start, std::size_t count);
Tensor concat_cols(const std::vector<const Tensor*>& parts);
Tensor pick_rows(const Tensor& m, const std::vector<int>& ids);  // out shape {rows}
double sum_all(const Tensor& a);

}  // namespace obslab
