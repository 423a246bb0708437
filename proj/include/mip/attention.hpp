#pragma once

#include <string>
#include <vector>

#include "mip/clustering.hpp"
#include "mip/encoding.hpp"
#include "mip/matrix.hpp"
#include "mip/param.hpp"

namespace mip {

struct ModelConfig {
    int d = 32;              // item embedding dimension
    int heads = 8;           // attention heads H
    int d_model = 32;        // projected key/query dimension
    int ffn_hidden = 32;     // fusion FFN hidden size
    int weight_hidden = 32;  // cluster-weight FFN hidden size
    int lambda_train = 5;    // training cluster count
    double dropout = 0.1;
    int l_max = 50;
    bool metadata_present = false;

    void validate() const;
};

/// Scaled query/key scores. Layout: S(i, j) = key(i) . query(j) / sqrt(d_model),
/// i.e. columns index the query position.
/// wq, wk: d_model x d_e; bq, bk: 1 x d_model.
Matrix attention_scores(const Matrix& e, const Matrix& wq, const Matrix& bq, const Matrix& wk,
                        const Matrix& bk);

/// Softmax over the key index: each query column sums to 1.
Matrix attention_weights(const Matrix& scores);

/// phi_j = sum_i A(i,j) M(i,j) p_i, i.e. (A .* M)^T P. Values are the raw
/// item embeddings; masking is applied after the softmax, without
/// renormalization.
Matrix context_vectors(const Matrix& weights, const Matrix& mask, const Matrix& p);

/// FFN(Dropout([phi^1_j; ...; phi^H_j])) with FFN(x) = w2 tanh(w1 x + b1) + b2.
/// drop_mask is an elementwise multiplier (inverted dropout) or null for eval.
Matrix fuse_heads(const std::vector<Matrix>& head_contexts, const Matrix& w1, const Matrix& b1,
                  const Matrix& w2, const Matrix& b2, const Matrix* drop_mask);

/// Everything the backward pass needs from one encoder forward.
struct EncodeCache {
    int l = 0;
    std::vector<int> items;
    std::vector<double> times;
    Matrix p;    // l x d item embeddings used as values
    Matrix e;    // l x d_e interaction embeddings
    Matrix tau;  // l x dt temporal encodings (cluster-weight input)
    Matrix mask; // l x l
    std::vector<Matrix> q, k, s, a, b; // per head
    Matrix x;          // l x H*d concatenated contexts
    Matrix drop_mask;  // empty in eval mode
    Matrix x_dropped;  // l x H*d
    Matrix u;          // l x ffn_hidden (tanh outputs)
    Matrix phi;        // l x d fused contexts
    ClusterAssignment clusters;
    std::vector<int> mu; // last in-cluster positions
    Matrix z;            // num_clusters x d
    bool training = false;
};

} // namespace mip
