#include "obslab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace obslab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_vector(const Tensor& v, const char* who) {
    if (v.rank() != 1 || v.numel() == 0)
        raise(ErrorCode::invalid_input, std::string(who) + ": expected non-empty 1-D tensor, got " + shape_str(v));
}

void require_matrix(const Tensor& m, const char* who) {
    if (m.rank() != 2)
        raise(ErrorCode::invalid_input, std::string(who) + ": expected matrix, got " + shape_str(m));
}

// Softmax of one contiguous row, writing into out. Skips -inf entries so the
// masked top-m variant can reuse it.
void softmax_row_inplace(const double* in, double* out, std::size_t n) {
    double mx = kNegInf;
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, in[i]);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = (in[i] == kNegInf) ? 0.0 : std::exp(in[i] - mx);
        out[i] = e;
        denom += e;
    }
    for (std::size_t i = 0; i < n; ++i) out[i] /= denom;
}

}  // namespace

Tensor softmax(const Tensor& logits) {
    require_vector(logits, "softmax");
    ensure_finite(logits, "softmax input");
    Tensor out = Tensor::zeros({logits.numel()});
    softmax_row_inplace(logits.data(), out.data(), logits.numel());
    return out;
}

std::size_t argmax_index(const Tensor& v) {
    require_vector(v, "argmax");
    ensure_finite(v, "argmax input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.numel(); ++i)
        if (v.values[i] > v.values[best]) best = i;
    return best;
}

std::vector<std::size_t> topm_support(const Tensor& logits, std::size_t m) {
    const std::size_t n = logits.numel();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Stable sort by value descending; equal values keep index order, so the
    // cutoff tie goes to the lower index.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return logits.values[a] > logits.values[b]; });
    order.resize(std::min(m, n));
    std::sort(order.begin(), order.end());
    return order;
}

Tensor topm_softmax(const Tensor& logits, std::size_t m) {
    require_vector(logits, "topm_softmax");
    ensure_finite(logits, "topm_softmax input");
    if (m < 1) raise(ErrorCode::invalid_parameter, "topm_softmax: m must be >= 1");
    const std::size_t n = logits.numel();
    if (m >= n) return softmax(logits);

    const std::vector<std::size_t> keep = topm_support(logits, m);
    Tensor masked = Tensor::full({n}, kNegInf);
    for (std::size_t i : keep) masked.values[i] = logits.values[i];
    Tensor out = Tensor::zeros({n});
    softmax_row_inplace(masked.data(), out.data(), n);
    return out;
}

double kl_div(const Tensor& p, const Tensor& q) {
    require_vector(p, "kl_div");
    require_vector(q, "kl_div");
    if (!p.same_shape(q)) raise(ErrorCode::invalid_input, "kl_div: shape mismatch");
    ensure_finite(p, "kl_div p");
    ensure_finite(q, "kl_div q");
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < p.numel(); ++i) {
        if (p.values[i] < 0.0 || q.values[i] < 0.0)
            raise(ErrorCode::invalid_input, "kl_div: negative probability");
        sp += p.values[i];
        sq += q.values[i];
    }
    if (std::fabs(sp - 1.0) > 1e-9 || std::fabs(sq - 1.0) > 1e-9)
        raise(ErrorCode::invalid_input, "kl_div: arguments must sum to 1 within 1e-9");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.numel(); ++i) {
        const double pi = p.values[i];
        if (pi == 0.0) continue;  // 0 * ln 0 = 0
        if (q.values[i] == 0.0)
            raise(ErrorCode::divergence_undefined, "kl_div: p puts mass where q is zero");
        kl += pi * std::log(pi / q.values[i]);
    }
    return std::max(kl, 0.0);
}

double spectral_radius(const Tensor& m) {
    require_matrix(m, "spectral_radius");
    if (m.rows() != m.cols()) raise(ErrorCode::invalid_input, "spectral_radius: matrix must be square");
    ensure_finite(m, "spectral_radius input");
    const std::size_t n = m.rows();

    // Deterministic pseudo-random start vector (fixed internal seed).
    Tensor v = Tensor::zeros({n});
    std::uint64_t s = 0x9E3779B97F4A7C15ULL;
    for (std::size_t i = 0; i < n; ++i) {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        v.values[i] = 0.5 + static_cast<double>(s >> 11) * 0x1.0p-53;
    }

    double sigma = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        // w = M v, u = M^T w; sigma estimate = ||w|| after normalizing v.
        double norm_v = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm_v += v.values[i] * v.values[i];
        norm_v = std::sqrt(norm_v);
        if (norm_v == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) v.values[i] /= norm_v;

        Tensor w = Tensor::zeros({n});
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += m.at(i, j) * v.values[j];
            w.values[i] = acc;
        }
        double norm_w = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm_w += w.values[i] * w.values[i];
        norm_w = std::sqrt(norm_w);

        const double prev = sigma;
        sigma = norm_w;
        if (iter > 0 && std::fabs(sigma - prev) <= 1e-10 * std::max(sigma, 1e-300)) break;

        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += m.at(j, i) * w.values[j];
            v.values[i] = acc;
        }
    }
    return sigma;
}

// ---------------------------------------------------------------------------
// Dense kernels
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t ar = trans_a ? a.cols() : a.rows();
    const std::size_t ac = trans_a ? a.rows() : a.cols();
    const std::size_t br = trans_b ? b.cols() : b.rows();
    const std::size_t bc = trans_b ? b.rows() : b.cols();
    if (ac != br)
        raise(ErrorCode::invalid_input,
              "matmul: inner dimension mismatch " + shape_str(a) + " x " + shape_str(b));
    Tensor out = Tensor::zeros({ar, bc});
    for (std::size_t i = 0; i < ar; ++i) {
        for (std::size_t j = 0; j < bc; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < ac; ++k) {
                const double av = trans_a ? a.at(k, i) : a.at(i, k);
                const double bv = trans_b ? b.at(j, k) : b.at(k, j);
                acc += av * bv;
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (!a.same_shape(b))
        raise(ErrorCode::invalid_input,
              std::string(who) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out.values[i] += b.values[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out.values[i] -= b.values[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out.values[i] *= b.values[i];
    return out;
}

Tensor scale(const Tensor& a, double c) {
    Tensor out = a;
    for (double& v : out.values) v *= c;
    return out;
}

Tensor add_bias_rows(const Tensor& m, const Tensor& bias) {
    require_matrix(m, "add_bias_rows");
    if (bias.rank() != 1 || bias.numel() != m.cols())
        raise(ErrorCode::invalid_input, "add_bias_rows: bias must have shape {cols}");
    Tensor out = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out.at(i, j) += bias.values[j];
    return out;
}

Tensor exp_map(const Tensor& a) {
    Tensor out = a;
    for (double& v : out.values) v = std::exp(v);
    return out;
}

Tensor tanh_map(const Tensor& a) {
    Tensor out = a;
    for (double& v : out.values) v = std::tanh(v);
    return out;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
}

Tensor gelu_map(const Tensor& a) {
    Tensor out = a;
    for (double& v : out.values) {
        const double inner = kGeluC * (v + 0.044715 * v * v * v);
        v = 0.5 * v * (1.0 + std::tanh(inner));
    }
    return out;
}

double gelu_derivative(double x) {
    const double inner = kGeluC * (x + 0.044715 * x * x * x);
    const double t = std::tanh(inner);
    const double dinner = kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

Tensor softmax_rows(const Tensor& m) {
    require_matrix(m, "softmax_rows");
    Tensor out = Tensor::zeros(m.shape);
    for (std::size_t i = 0; i < m.rows(); ++i)
        softmax_row_inplace(m.data() + i * m.cols(), out.data() + i * m.cols(), m.cols());
    return out;
}

Tensor log_softmax_rows(const Tensor& m) {
    require_matrix(m, "log_softmax_rows");
    Tensor out = m;
    const std::size_t c = m.cols();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* row = out.data() + i * c;
        double mx = kNegInf;
        for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(row[j] - mx);
        const double lse = mx + std::log(denom);
        for (std::size_t j = 0; j < c; ++j) row[j] -= lse;
    }
    return out;
}

Tensor causal_softmax_rows(const Tensor& scores) {
    require_matrix(scores, "causal_softmax_rows");
    if (scores.rows() != scores.cols())
        raise(ErrorCode::invalid_input, "causal_softmax_rows: scores must be square");
    const std::size_t n = scores.rows();
    Tensor out = Tensor::zeros(scores.shape);
    for (std::size_t i = 0; i < n; ++i)
        softmax_row_inplace(scores.data() + i * n, out.data() + i * n, i + 1);
    return out;
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    require_matrix(x, "layer_norm_rows");
    const std::size_t c = x.cols();
    if (gain.numel() != c || bias.numel() != c)
        raise(ErrorCode::invalid_input, "layer_norm_rows: gain/bias must have shape {cols}");
    Tensor out = Tensor::zeros(x.shape);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* row = x.data() + i * c;
        double mean = 0.0;
        for (std::size_t j = 0; j < c; ++j) mean += row[j];
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<double>(c);
        const double rstd = 1.0 / std::sqrt(var + eps);
        double* orow = out.data() + i * c;
        for (std::size_t j = 0; j < c; ++j)
            orow[j] = (row[j] - mean) * rstd * gain.values[j] + bias.values[j];
    }
    return out;
}

Tensor gather_rows(const Tensor& m, const std::vector<int>& ids) {
    require_matrix(m, "gather_rows");
    Tensor out = Tensor::zeros({ids.size(), m.cols()});
    for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= m.rows())
            raise(ErrorCode::invalid_input, "gather_rows: index out of range");
        for (std::size_t j = 0; j < m.cols(); ++j) out.at(t, j) = m.at(static_cast<std::size_t>(ids[t]), j);
    }
    return out;
}

Tensor concat_rows(const std::vector<const Tensor*>& parts) {
    if (parts.empty()) raise(ErrorCode::invalid_input, "concat_rows: no inputs");
    const std::size_t c = parts[0]->cols();
    std::size_t total = 0;
    for (const Tensor* p : parts) {
        require_matrix(*p, "concat_rows");
        if (p->cols() != c) raise(ErrorCode::invalid_input, "concat_rows: column mismatch");
        total += p->rows();
    }
    Tensor out = Tensor::zeros({total, c});
    std::size_t r = 0;
    for (const Tensor* p : parts) {
        std::copy(p->values.begin(), p->values.end(), out.values.begin() + r * c);
        r += p->rows();
    }
    return out;
}

Tensor slice_cols(const Tensor& m, std::size_t start, std::size_t count) {
    require_matrix(m, "slice_cols");
    if (start + count > m.cols()) raise(ErrorCode::invalid_input, "slice_cols: out of range");
    Tensor out = Tensor::zeros({m.rows(), count});
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < count; ++j) out.at(i, j) = m.at(i, start + j);
    return out;
}

Tensor concat_cols(const std::vector<const Tensor*>& parts) {
    if (parts.empty()) raise(ErrorCode::invalid_input, "concat_cols: no inputs");
    const std::size_t r = parts[0]->rows();
    std::size_t total = 0;
    for (const Tensor* p : parts) {
        require_matrix(*p, "concat_cols");
        if (p->rows() != r) raise(ErrorCode::invalid_input, "concat_cols: row mismatch");
        total += p->cols();
    }
    Tensor out = Tensor::zeros({r, total});
    std::size_t off = 0;
    for (const Tensor* p : parts) {
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < p->cols(); ++j) out.at(i, off + j) = p->at(i, j);
        off += p->cols();
    }
    return out;
}

Tensor pick_rows(const Tensor& m, const std::vector<int>& ids) {
    require_matrix(m, "pick_rows");
    if (ids.size() != m.rows()) raise(ErrorCode::invalid_input, "pick_rows: one index per row required");
    Tensor out = Tensor::zeros({m.rows()});
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= m.cols())
            raise(ErrorCode::invalid_input, "pick_rows: column index out of range");
        out.values[i] = m.at(i, static_cast<std::size_t>(ids[i]));
    }
    return out;
}

double sum_all(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.values) acc += v;
    return acc;
}

}  // namespace obslab
