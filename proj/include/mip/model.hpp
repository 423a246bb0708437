#pragma once

#include <string>
#include <vector>

#include "mip/attention.hpp"
#include "mip/clustering.hpp"
#include "mip/data.hpp"
#include "mip/encoding.hpp"
#include "mip/param.hpp"
#include "mip/preference.hpp"

namespace mip {

/// Everything needed to reconstruct a model: architecture, encodings,
/// training clusterer, weight mode, loss. Serialized into checkpoints.
struct ModelSpec {
    ModelConfig model;
    EncodingConfig temporal;
    EncodingConfig positional;
    ClusteringConfig clusterer;
    WeightConfig weights;
    LossConfig loss;
    int vocab_size = 0; // learned item table rows (metadata absent)

    int embed_dim() const { return model.d + temporal.out_dim() + positional.out_dim(); }
    int weight_input_dim() const { return model.d + model.l_max * temporal.out_dim(); }

    std::string to_json() const;
    static ModelSpec from_json(const std::string& text);
    void validate() const;
};

/// The spec'd user view: multi-interest embeddings with their provenance.
struct MultiInterestUser {
    Matrix z;
    ClusterAssignment clusters;
    Matrix phi;
};

class MipModel {
public:
    MipModel(ModelSpec spec, uint64_t init_seed);

    const ModelSpec& spec() const { return spec_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    /// Attach the dense feature table (metadata-present mode).
    void set_item_features(const Matrix& features);
    const double* item_vector(int id) const;

    struct EncodeOptions {
        bool training = false;
        Rng* dropout_rng = nullptr;                        // needed when training with dropout > 0
        const ClusteringConfig* clusterer = nullptr;       // inference override
        const ClusterAssignment* fixed_clusters = nullptr; // cache or gradient-check freeze
        double* clustering_ms = nullptr;                   // latency probe
    };

    EncodeCache encode(const std::vector<int>& items, const std::vector<double>& times,
                       const EncodeOptions& opts) const;

    MultiInterestUser encode_user(const std::vector<int>& items, const std::vector<double>& times,
                                  const EncodeOptions& opts) const;
    MultiInterestUser encode_user(const std::vector<int>& items,
                                  const std::vector<double>& times) const {
        return encode_user(items, times, EncodeOptions{});
    }

    /// Cluster weights under the given mode (stage 1 bypasses to equal).
    WeightCache compute_weights(const EncodeCache& cache, WeightMode mode) const;

    std::vector<ScoredPair> score_candidates(const EncodeCache& cache,
                                             const std::vector<double>& w,
                                             const std::vector<int>& candidates) const;

    double beta() const;

    /// Forward + backward over a batch; gradients accumulate into params()
    /// (caller zeroes). Returns the pooled batch loss.
    double train_batch(const std::vector<const SequenceExample*>& batch, WeightMode mode,
                       uint64_t dropout_seed);

    /// Deterministic loss+grad for one example with dropout off (the
    /// gradient-check entry point).
    double example_loss_and_grad(const SequenceExample& ex, WeightMode mode,
                                 const ClusterAssignment* fixed_clusters);

    void save(const std::string& path) const;
    static MipModel load(const std::string& path);

private:
    struct CandidateGrad {
        int id;
        std::vector<double> grad; // d entries
    };

    void backward_example(const EncodeCache& cache, const WeightCache& wcache, WeightMode mode,
                          const std::vector<int>& candidates,
                          const std::vector<ScoredPair>& scored, const std::vector<double>& dy);
    void encode_backward(const EncodeCache& cache, const Matrix& dphi);

    ModelSpec spec_;
    ParamStore params_;
    Matrix features_; // metadata-present item table (not a parameter)

    // cached handles
    std::vector<Param*> wq_, bq_, wk_, bk_;
    Param* fuse_w1_ = nullptr;
    Param* fuse_b1_ = nullptr;
    Param* fuse_w2_ = nullptr;
    Param* fuse_b2_ = nullptr;
    Param* weight_w1_ = nullptr;
    Param* weight_b1_ = nullptr;
    Param* weight_w2_ = nullptr;
    Param* weight_b2_ = nullptr;
    Param* beta_ = nullptr;
    Param* items_ = nullptr;
};

} // namespace mip
