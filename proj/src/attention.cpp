#include "mip/attention.hpp"

#include <cmath>

#include "mip/error.hpp"

namespace mip {

void ModelConfig::validate() const {
    if (d < 1 || heads < 1 || d_model < 1 || ffn_hidden < 1 || weight_hidden < 1 ||
        lambda_train < 1 || l_max < 1)
        fail("config_invalid", "model: dimensions and counts must be positive");
    if (dropout < 0.0 || dropout >= 1.0)
        fail("config_invalid", "model: dropout must be in [0, 1)");
}

Matrix attention_scores(const Matrix& e, const Matrix& wq, const Matrix& bq, const Matrix& wk,
                        const Matrix& bk) {
    const int l = e.rows;
    const int dm = wq.rows;
    Matrix q = matmul(e, transpose(wq)); // l x d_model
    Matrix k = matmul(e, transpose(wk));
    for (int i = 0; i < l; ++i)
        for (int c = 0; c < dm; ++c) {
            q(i, c) += bq(0, c);
            k(i, c) += bk(0, c);
        }
    const double scale = 1.0 / std::sqrt(static_cast<double>(dm));
    Matrix s = matmul(k, transpose(q)); // s(i,j) = key_i . query_j
    scale_inplace(s, scale);
    return s;
}

Matrix attention_weights(const Matrix& scores) {
    const int l = scores.rows;
    Matrix a(l, l);
    std::vector<double> col(static_cast<size_t>(l));
    for (int j = 0; j < l; ++j) {
        for (int i = 0; i < l; ++i) col[static_cast<size_t>(i)] = scores(i, j);
        const auto sm = softmax_row(col);
        for (int i = 0; i < l; ++i) a(i, j) = sm[static_cast<size_t>(i)];
    }
    return a;
}

Matrix context_vectors(const Matrix& weights, const Matrix& mask, const Matrix& p) {
    const int l = p.rows;
    const int d = p.cols;
    Matrix phi(l, d);
    for (int j = 0; j < l; ++j) {
        double* out = phi.row(j);
        for (int i = 0; i < l; ++i) {
            const double w = weights(i, j) * mask(i, j);
            if (w == 0.0) continue;
            const double* pi = p.row(i);
            for (int c = 0; c < d; ++c) out[c] += w * pi[c];
        }
    }
    return phi;
}

Matrix fuse_heads(const std::vector<Matrix>& head_contexts, const Matrix& w1, const Matrix& b1,
                  const Matrix& w2, const Matrix& b2, const Matrix* drop_mask) {
    const int l = head_contexts.front().rows;
    const int d = head_contexts.front().cols;
    const int h = static_cast<int>(head_contexts.size());
    Matrix x(l, h * d);
    for (int hh = 0; hh < h; ++hh)
        for (int j = 0; j < l; ++j)
            for (int c = 0; c < d; ++c) x(j, hh * d + c) = head_contexts[static_cast<size_t>(hh)](j, c);
    if (drop_mask != nullptr)
        for (size_t i = 0; i < x.data.size(); ++i) x.data[i] *= drop_mask->data[i];

    Matrix u = matmul(x, transpose(w1));
    for (int j = 0; j < l; ++j)
        for (int c = 0; c < w1.rows; ++c) u(j, c) = std::tanh(u(j, c) + b1(0, c));
    Matrix phi = matmul(u, transpose(w2));
    for (int j = 0; j < l; ++j)
        for (int c = 0; c < w2.rows; ++c) phi(j, c) += b2(0, c);
    return phi;
}

} // namespace mip
