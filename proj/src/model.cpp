#include "mip/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "mip/checkpoint.hpp"
#include "mip/error.hpp"
#include "mip/log.hpp"

namespace mip {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ModelSpec serialization
// ---------------------------------------------------------------------------

static json encoding_to_json(const EncodingConfig& c) {
    return json{{"kind", to_string(c.kind)},
                {"dim", c.dim},
                {"max_scale", c.max_scale},
                {"bucket_base", c.bucket_base},
                {"bucket_count", c.bucket_count}};
}

static EncodingConfig encoding_from_json(const json& j) {
    EncodingConfig c;
    c.kind = encoding_kind_from_string(j.at("kind").get<std::string>());
    c.dim = j.at("dim").get<int>();
    c.max_scale = j.at("max_scale").get<double>();
    c.bucket_base = j.at("bucket_base").get<double>();
    c.bucket_count = j.at("bucket_count").get<int>();
    return c;
}

std::string ModelSpec::to_json() const {
    json j;
    j["model"] = {{"d", model.d},
                  {"heads", model.heads},
                  {"d_model", model.d_model},
                  {"ffn_hidden", model.ffn_hidden},
                  {"weight_hidden", model.weight_hidden},
                  {"lambda_train", model.lambda_train},
                  {"dropout", model.dropout},
                  {"l_max", model.l_max},
                  {"metadata_present", model.metadata_present}};
    j["temporal"] = encoding_to_json(temporal);
    j["positional"] = encoding_to_json(positional);
    j["clustering"] = {{"method", to_string(clusterer.method)}, {"k", clusterer.k},
                       {"eps", clusterer.eps},                  {"min_pts", clusterer.min_pts},
                       {"threshold", clusterer.threshold},      {"branching", clusterer.branching},
                       {"gamma", clusterer.gamma},              {"seed", clusterer.seed}};
    j["weights"] = {{"mode", to_string(weights.mode)}, {"epsilon", weights.epsilon}};
    j["loss"] = {{"kind", to_string(loss.kind)},
                 {"alpha", loss.alpha},
                 {"learned_beta", loss.learned_beta}};
    j["vocab_size"] = vocab_size;
    return j.dump();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        fail("malformed_checkpoint", std::string("bad model spec json: ") + e.what());
    }
    ModelSpec s;
    const json& m = j.at("model");
    s.model.d = m.at("d").get<int>();
    s.model.heads = m.at("heads").get<int>();
    s.model.d_model = m.at("d_model").get<int>();
    s.model.ffn_hidden = m.at("ffn_hidden").get<int>();
    s.model.weight_hidden = m.at("weight_hidden").get<int>();
    s.model.lambda_train = m.at("lambda_train").get<int>();
    s.model.dropout = m.at("dropout").get<double>();
    s.model.l_max = m.at("l_max").get<int>();
    s.model.metadata_present = m.at("metadata_present").get<bool>();
    s.temporal = encoding_from_json(j.at("temporal"));
    s.positional = encoding_from_json(j.at("positional"));
    const json& c = j.at("clustering");
    s.clusterer.method = cluster_method_from_string(c.at("method").get<std::string>());
    s.clusterer.k = c.at("k").get<int>();
    s.clusterer.eps = c.at("eps").get<double>();
    s.clusterer.min_pts = c.at("min_pts").get<int>();
    s.clusterer.threshold = c.at("threshold").get<double>();
    s.clusterer.branching = c.at("branching").get<int>();
    s.clusterer.gamma = c.at("gamma").get<double>();
    s.clusterer.seed = c.at("seed").get<uint64_t>();
    s.weights.mode = weight_mode_from_string(j.at("weights").at("mode").get<std::string>());
    s.weights.epsilon = j.at("weights").at("epsilon").get<double>();
    s.loss.kind = loss_kind_from_string(j.at("loss").at("kind").get<std::string>());
    s.loss.alpha = j.at("loss").at("alpha").get<double>();
    s.loss.learned_beta = j.at("loss").at("learned_beta").get<bool>();
    s.vocab_size = j.at("vocab_size").get<int>();
    return s;
}

void ModelSpec::validate() const {
    model.validate();
    temporal.validate("temporal");
    positional.validate("positional");
    clusterer.validate();
    if (!model.metadata_present && vocab_size < 1)
        fail("config_invalid", "learned item table requires vocab_size >= 1");
    if (loss.kind == LossKind::triplet && loss.alpha <= 0.0)
        MIP_WARN("triplet alpha %g is not positive", loss.alpha);
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

MipModel::MipModel(ModelSpec spec, uint64_t init_seed) : spec_(std::move(spec)) {
    spec_.validate();
    const int de = spec_.embed_dim();
    const int dm = spec_.model.d_model;
    const int d = spec_.model.d;
    const int hd = spec_.model.heads * d;
    const int hidden = spec_.model.ffn_hidden;
    const int wh = spec_.model.weight_hidden;
    const int win = spec_.weight_input_dim();

    Rng rng(init_seed);
    for (int h = 0; h < spec_.model.heads; ++h) {
        Param& wq = params_.add("wq." + std::to_string(h), dm, de);
        init_xavier_uniform(wq.value, de, dm, rng);
        bq_.push_back(&params_.add("bq." + std::to_string(h), 1, dm));
        Param& wk = params_.add("wk." + std::to_string(h), dm, de);
        init_xavier_uniform(wk.value, de, dm, rng);
        bk_.push_back(&params_.add("bk." + std::to_string(h), 1, dm));
        wq_.push_back(&wq);
        wk_.push_back(&wk);
    }
    fuse_w1_ = &params_.add("fuse.w1", hidden, hd);
    init_xavier_uniform(fuse_w1_->value, hd, hidden, rng);
    fuse_b1_ = &params_.add("fuse.b1", 1, hidden);
    fuse_w2_ = &params_.add("fuse.w2", d, hidden);
    init_xavier_uniform(fuse_w2_->value, hidden, d, rng);
    fuse_b2_ = &params_.add("fuse.b2", 1, d);

    weight_w1_ = &params_.add("wffn.w1", wh, win);
    init_xavier_uniform(weight_w1_->value, win, wh, rng);
    weight_b1_ = &params_.add("wffn.b1", 1, wh);
    // Output layer starts at zero with bias 1 so the learned weights are
    // exactly 1 before any training step; stage-1 (equal-weight) scores and
    // the stage-2 starting point then agree bit for bit.
    weight_w2_ = &params_.add("wffn.w2", 1, wh);
    weight_b2_ = &params_.add("wffn.b2", 1, 1);
    weight_b2_->value(0, 0) = 1.0;

    if (spec_.loss.kind == LossKind::triplet) {
        beta_ = &params_.add("beta", 1, 1, spec_.loss.learned_beta);
        beta_->value(0, 0) = 1.0;
    }

    if (!spec_.model.metadata_present) {
        items_ = &params_.add("items", spec_.vocab_size, d);
        for (double& v : items_->value.data) v = 0.1 * rng.normal();
    }
}

void MipModel::set_item_features(const Matrix& features) {
    if (!spec_.model.metadata_present)
        fail("config_invalid", "model was built for a learned item table");
    if (features.cols != spec_.model.d)
        fail("config_invalid", "feature dim " + std::to_string(features.cols) +
                                   " does not match model d=" + std::to_string(spec_.model.d));
    features_ = features;
}

const double* MipModel::item_vector(int id) const {
    if (spec_.model.metadata_present) {
        if (id < 0 || id >= features_.rows)
            fail("unknown_item", "item id " + std::to_string(id) + " outside feature table");
        return features_.row(id);
    }
    if (id < 0 || id >= items_->value.rows)
        fail("unknown_item", "item id " + std::to_string(id) + " outside item table");
    return items_->value.row(id);
}

double MipModel::beta() const { return beta_ != nullptr ? beta_->value(0, 0) : 1.0; }

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

EncodeCache MipModel::encode(const std::vector<int>& items, const std::vector<double>& times,
                             const EncodeOptions& opts) const {
    const int l = static_cast<int>(items.size());
    if (l == 0) fail("empty_sequence", "cannot encode an empty sequence");
    if (l > spec_.model.l_max)
        fail("sequence_too_long", "sequence length " + std::to_string(l) + " exceeds l_max=" +
                                      std::to_string(spec_.model.l_max));
    if (times.size() != items.size())
        fail("config_invalid", "items/timestamps length mismatch");

    const ClusteringConfig& clu = opts.clusterer != nullptr ? *opts.clusterer : spec_.clusterer;
    const int d = spec_.model.d;

    EncodeCache cache;
    cache.l = l;
    cache.items = items;
    cache.times = times;
    cache.training = opts.training;

    cache.p = Matrix(l, d);
    for (int j = 0; j < l; ++j) {
        const double* src = item_vector(items[static_cast<size_t>(j)]);
        for (int c = 0; c < d; ++c) cache.p(j, c) = src[c];
    }

    auto timed_clustering = [&](const Matrix& points) {
        const auto t0 = std::chrono::steady_clock::now();
        ClusterAssignment a = run_clustering(points, clu);
        const auto t1 = std::chrono::steady_clock::now();
        if (opts.clustering_ms != nullptr)
            *opts.clustering_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
        return a;
    };

    // Metadata-present mode masks attention by the item-feature clusters;
    // otherwise the mask is all-ones and clusters are found on phi afterwards.
    const bool mask_from_items = spec_.model.metadata_present && clu.method != ClusterMethod::none;
    bool clusters_ready = false;
    if (opts.fixed_clusters != nullptr) {
        cache.clusters = *opts.fixed_clusters;
        clusters_ready = true;
    } else if (mask_from_items) {
        cache.clusters = timed_clustering(cache.p);
        clusters_ready = true;
    } else if (clu.method == ClusterMethod::none) {
        cache.clusters.labels.resize(static_cast<size_t>(l));
        for (int j = 0; j < l; ++j) cache.clusters.labels[static_cast<size_t>(j)] = j;
        cache.clusters.num_clusters = l;
        clusters_ready = true;
    }
    if (mask_from_items && clusters_ready) {
        cache.mask = assignment_to_mask(cache.clusters).m;
    } else {
        cache.mask = Matrix(l, l, 1.0);
    }

    cache.tau = temporal_rows(times, spec_.temporal);
    const Matrix rho = positional_rows(l, spec_.positional);
    const int de = spec_.embed_dim();
    cache.e = Matrix(l, de);
    for (int j = 0; j < l; ++j) {
        for (int c = 0; c < d; ++c) cache.e(j, c) = cache.p(j, c);
        for (int c = 0; c < cache.tau.cols; ++c) cache.e(j, d + c) = cache.tau(j, c);
        for (int c = 0; c < rho.cols; ++c) cache.e(j, d + cache.tau.cols + c) = rho(j, c);
    }

    const int heads = spec_.model.heads;
    cache.q.resize(static_cast<size_t>(heads));
    cache.k.resize(static_cast<size_t>(heads));
    cache.s.resize(static_cast<size_t>(heads));
    cache.a.resize(static_cast<size_t>(heads));
    cache.b.resize(static_cast<size_t>(heads));
    const int dm = spec_.model.d_model;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dm));
    for (int h = 0; h < heads; ++h) {
        Matrix q = matmul(cache.e, transpose(wq_[static_cast<size_t>(h)]->value));
        Matrix k = matmul(cache.e, transpose(wk_[static_cast<size_t>(h)]->value));
        for (int j = 0; j < l; ++j)
            for (int c = 0; c < dm; ++c) {
                q(j, c) += bq_[static_cast<size_t>(h)]->value(0, c);
                k(j, c) += bk_[static_cast<size_t>(h)]->value(0, c);
            }
        Matrix s = matmul(k, transpose(q));
        scale_inplace(s, scale);
        Matrix a = attention_weights(s);
        Matrix b = a;
        for (size_t i = 0; i < b.data.size(); ++i) b.data[i] *= cache.mask.data[i];
        cache.q[static_cast<size_t>(h)] = std::move(q);
        cache.k[static_cast<size_t>(h)] = std::move(k);
        cache.s[static_cast<size_t>(h)] = std::move(s);
        cache.a[static_cast<size_t>(h)] = std::move(a);
        cache.b[static_cast<size_t>(h)] = std::move(b);
    }

    const int hd = heads * d;
    cache.x = Matrix(l, hd);
    for (int h = 0; h < heads; ++h) {
        const Matrix phi_h = matmul(transpose(cache.b[static_cast<size_t>(h)]), cache.p);
        for (int j = 0; j < l; ++j)
            for (int c = 0; c < d; ++c) cache.x(j, h * d + c) = phi_h(j, c);
    }

    if (opts.training && spec_.model.dropout > 0.0) {
        if (opts.dropout_rng == nullptr)
            fail("usage_error", "training-mode encode needs a dropout rng");
        const double keep = 1.0 - spec_.model.dropout;
        cache.drop_mask = Matrix(l, hd);
        for (double& v : cache.drop_mask.data)
            v = opts.dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
        cache.x_dropped = cache.x;
        for (size_t i = 0; i < cache.x_dropped.data.size(); ++i)
            cache.x_dropped.data[i] *= cache.drop_mask.data[i];
    } else {
        cache.x_dropped = cache.x;
    }

    const int hidden = spec_.model.ffn_hidden;
    cache.u = matmul(cache.x_dropped, transpose(fuse_w1_->value));
    for (int j = 0; j < l; ++j)
        for (int c = 0; c < hidden; ++c)
            cache.u(j, c) = std::tanh(cache.u(j, c) + fuse_b1_->value(0, c));
    cache.phi = matmul(cache.u, transpose(fuse_w2_->value));
    for (int j = 0; j < l; ++j)
        for (int c = 0; c < d; ++c) cache.phi(j, c) += fuse_b2_->value(0, c);

    if (!clusters_ready) {
        // Metadata absent: interests are found on the fused contexts.
        cache.clusters = timed_clustering(cache.phi);
    }

    cache.mu = last_indices(cache.clusters);
    cache.z = Matrix(cache.clusters.num_clusters, d);
    for (int lam = 0; lam < cache.clusters.num_clusters; ++lam)
        for (int c = 0; c < d; ++c) cache.z(lam, c) = cache.phi(cache.mu[static_cast<size_t>(lam)], c);
    return cache;
}

MultiInterestUser MipModel::encode_user(const std::vector<int>& items,
                                        const std::vector<double>& times,
                                        const EncodeOptions& opts) const {
    EncodeCache cache = encode(items, times, opts);
    MultiInterestUser user;
    user.z = std::move(cache.z);
    user.clusters = std::move(cache.clusters);
    user.phi = std::move(cache.phi);
    return user;
}

WeightCache MipModel::compute_weights(const EncodeCache& cache, WeightMode mode) const {
    WeightCache wc;
    switch (mode) {
        case WeightMode::equal:
            wc.w = equal_weights(cache.clusters.num_clusters);
            return wc;
        case WeightMode::exp_decay:
            wc.w = exp_decay_weights(cache.clusters, cache.times, spec_.weights.epsilon);
            return wc;
        case WeightMode::learned:
            return learned_weights(cache.z, cache.clusters, cache.tau, spec_.model.l_max,
                                   weight_w1_->value, weight_b1_->value, weight_w2_->value,
                                   weight_b2_->value);
    }
    return wc;
}

std::vector<ScoredPair> MipModel::score_candidates(const EncodeCache& cache,
                                                   const std::vector<double>& w,
                                                   const std::vector<int>& candidates) const {
    std::vector<ScoredPair> out;
    out.reserve(candidates.size());
    const double scale = beta();
    for (int id : candidates) out.push_back(score(cache.z, w, item_vector(id), scale));
    return out;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

void MipModel::encode_backward(const EncodeCache& cache, const Matrix& dphi) {
    const int l = cache.l;
    const int d = spec_.model.d;
    const int heads = spec_.model.heads;
    const int hidden = spec_.model.ffn_hidden;
    const int dm = spec_.model.d_model;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dm));

    // Fusion FFN: phi = u w2^T + b2, u = tanh(x_dropped w1^T + b1)
    Matrix du = matmul(dphi, fuse_w2_->value); // l x hidden
    add_inplace(fuse_w2_->grad, matmul(transpose(dphi), cache.u));
    for (int j = 0; j < l; ++j)
        for (int c = 0; c < d; ++c) fuse_b2_->grad(0, c) += dphi(j, c);
    Matrix dpre = du;
    for (int j = 0; j < l; ++j)
        for (int c = 0; c < hidden; ++c) dpre(j, c) *= 1.0 - cache.u(j, c) * cache.u(j, c);
    add_inplace(fuse_w1_->grad, matmul(transpose(dpre), cache.x_dropped));
    for (int j = 0; j < l; ++j)
        for (int c = 0; c < hidden; ++c) fuse_b1_->grad(0, c) += dpre(j, c);
    Matrix dx = matmul(dpre, fuse_w1_->value); // l x H*d
    if (cache.drop_mask.rows > 0)
        for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= cache.drop_mask.data[i];

    Matrix dp(l, d);
    Matrix de_total(l, spec_.embed_dim());
    for (int h = 0; h < heads; ++h) {
        Matrix dphi_h(l, d);
        for (int j = 0; j < l; ++j)
            for (int c = 0; c < d; ++c) dphi_h(j, c) = dx(j, h * d + c);

        const Matrix& b = cache.b[static_cast<size_t>(h)];
        const Matrix& a = cache.a[static_cast<size_t>(h)];
        add_inplace(dp, matmul(b, dphi_h));
        Matrix db = matmul(cache.p, transpose(dphi_h)); // l x l
        // Through the mask (applied post-softmax, no renormalization).
        Matrix da = db;
        for (size_t i = 0; i < da.data.size(); ++i) da.data[i] *= cache.mask.data[i];

        // Column softmax backward.
        Matrix ds(l, l);
        for (int j = 0; j < l; ++j) {
            double inner = 0.0;
            for (int i = 0; i < l; ++i) inner += da(i, j) * a(i, j);
            for (int i = 0; i < l; ++i) ds(i, j) = a(i, j) * (da(i, j) - inner);
        }

        Matrix dk = matmul(ds, cache.q[static_cast<size_t>(h)]);
        scale_inplace(dk, scale);
        Matrix dq = matmul(transpose(ds), cache.k[static_cast<size_t>(h)]);
        scale_inplace(dq, scale);

        add_inplace(wq_[static_cast<size_t>(h)]->grad, matmul(transpose(dq), cache.e));
        add_inplace(wk_[static_cast<size_t>(h)]->grad, matmul(transpose(dk), cache.e));
        for (int j = 0; j < l; ++j)
            for (int c = 0; c < dm; ++c) {
                bq_[static_cast<size_t>(h)]->grad(0, c) += dq(j, c);
                bk_[static_cast<size_t>(h)]->grad(0, c) += dk(j, c);
            }
        add_inplace(de_total, matmul(dq, wq_[static_cast<size_t>(h)]->value));
        add_inplace(de_total, matmul(dk, wk_[static_cast<size_t>(h)]->value));
    }

    // Item columns of e feed back into p; encoding columns are inputs.
    for (int j = 0; j < l; ++j)
        for (int c = 0; c < d; ++c) dp(j, c) += de_total(j, c);

    if (items_ != nullptr) {
        for (int j = 0; j < l; ++j) {
            double* row = items_->grad.row(cache.items[static_cast<size_t>(j)]);
            for (int c = 0; c < d; ++c) row[c] += dp(j, c);
        }
    }
}

void MipModel::backward_example(const EncodeCache& cache, const WeightCache& wcache,
                                WeightMode mode, const std::vector<int>& candidates,
                                const std::vector<ScoredPair>& scored,
                                const std::vector<double>& dy) {
    const int d = spec_.model.d;
    const int lambda_count = cache.clusters.num_clusters;
    const double scale = beta();
    const std::vector<double>& w = wcache.w; // filled for every mode

    Matrix dz(lambda_count, d);
    std::vector<double> dw(static_cast<size_t>(lambda_count), 0.0);
    double dbeta = 0.0;

    for (size_t c = 0; c < candidates.size(); ++c) {
        if (dy[c] == 0.0) continue;
        const int lam = scored[c].argmax;
        const double* p = item_vector(candidates[c]);
        const double g = dot(cache.z.row(lam), p, d);
        dbeta += dy[c] * w[static_cast<size_t>(lam)] * g;
        dw[static_cast<size_t>(lam)] += dy[c] * scale * g;
        const double coeff = dy[c] * scale * w[static_cast<size_t>(lam)];
        double* dz_row = dz.row(lam);
        for (int cc = 0; cc < d; ++cc) dz_row[cc] += coeff * p[cc];
        if (items_ != nullptr) {
            double* item_grad = items_->grad.row(candidates[c]);
            const double* z_row = cache.z.row(lam);
            for (int cc = 0; cc < d; ++cc) item_grad[cc] += coeff * z_row[cc];
        }
    }

    if (beta_ != nullptr && beta_->trainable) beta_->grad(0, 0) += dbeta;

    if (mode == WeightMode::learned) {
        const int wh = spec_.model.weight_hidden;
        const int win = spec_.weight_input_dim();
        for (int lam = 0; lam < lambda_count; ++lam) {
            const double dout = dw[static_cast<size_t>(lam)];
            if (dout == 0.0) continue;
            const auto& u = wcache.input[static_cast<size_t>(lam)];
            const auto& h = wcache.hidden[static_cast<size_t>(lam)];
            weight_b2_->grad(0, 0) += dout;
            for (int r = 0; r < wh; ++r) {
                weight_w2_->grad(0, r) += dout * h[static_cast<size_t>(r)];
                const double dpre = dout * weight_w2_->value(0, r) *
                                    (1.0 - h[static_cast<size_t>(r)] * h[static_cast<size_t>(r)]);
                if (dpre == 0.0) continue;
                weight_b1_->grad(0, r) += dpre;
                double* w1_grad = weight_w1_->grad.row(r);
                const double* w1_row = weight_w1_->value.row(r);
                for (int c = 0; c < win; ++c) w1_grad[c] += dpre * u[static_cast<size_t>(c)];
                // First d input entries are z_lambda.
                double* dz_row = dz.row(lam);
                for (int c = 0; c < d; ++c) dz_row[c] += dpre * w1_row[c];
            }
        }
    }

    Matrix dphi(cache.l, d);
    for (int lam = 0; lam < lambda_count; ++lam) {
        double* row = dphi.row(cache.mu[static_cast<size_t>(lam)]);
        const double* src = dz.row(lam);
        for (int c = 0; c < d; ++c) row[c] += src[c];
    }
    encode_backward(cache, dphi);
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

double MipModel::train_batch(const std::vector<const SequenceExample*>& batch, WeightMode mode,
                             uint64_t dropout_seed) {
    if (batch.empty()) fail("empty_batch", "train_batch: empty batch");

    if (spec_.loss.kind == LossKind::nll) {
        long total = 0;
        for (const auto* ex : batch)
            total += static_cast<long>(ex->positives.size() + ex->negatives.size());
        double loss_sum = 0.0;
        for (size_t bi = 0; bi < batch.size(); ++bi) {
            const SequenceExample& ex = *batch[bi];
            Rng drop_rng(Rng::mix(dropout_seed, bi));
            EncodeOptions opts;
            opts.training = true;
            opts.dropout_rng = &drop_rng;
            opts.fixed_clusters =
                ex.cached_clusters.has_value() ? &ex.cached_clusters.value() : nullptr;
            EncodeCache cache = encode(ex.items, ex.times, opts);
            WeightCache wc = compute_weights(cache, mode);

            std::vector<int> candidates = ex.positives;
            candidates.insert(candidates.end(), ex.negatives.begin(), ex.negatives.end());
            const auto scored = score_candidates(cache, wc.w, candidates);
            std::vector<double> dy(candidates.size());
            for (size_t c = 0; c < candidates.size(); ++c) {
                const bool positive = c < ex.positives.size();
                const double p = std::clamp(scored[c].probability, 1e-12, 1.0 - 1e-12);
                loss_sum += positive ? -std::log(p) : -std::log(1.0 - p);
                dy[c] = (scored[c].probability - (positive ? 1.0 : 0.0)) / static_cast<double>(total);
            }
            backward_example(cache, wc, mode, candidates, scored, dy);
        }
        return loss_sum / static_cast<double>(total);
    }

    // Triplet: index-paired positives/negatives, pooled over the batch.
    long total_pairs = 0;
    for (const auto* ex : batch)
        total_pairs += static_cast<long>(std::min(ex->positives.size(), ex->negatives.size()));
    if (total_pairs == 0) fail("empty_batch", "triplet loss needs positive/negative pairs");
    double loss_sum = 0.0;
    const double alpha = spec_.loss.alpha;
    for (size_t bi = 0; bi < batch.size(); ++bi) {
        const SequenceExample& ex = *batch[bi];
        Rng drop_rng(Rng::mix(dropout_seed, bi));
        EncodeOptions opts;
        opts.training = true;
        opts.dropout_rng = &drop_rng;
        opts.fixed_clusters =
            ex.cached_clusters.has_value() ? &ex.cached_clusters.value() : nullptr;
        EncodeCache cache = encode(ex.items, ex.times, opts);
        WeightCache wc = compute_weights(cache, mode);

        std::vector<int> candidates = ex.positives;
        candidates.insert(candidates.end(), ex.negatives.begin(), ex.negatives.end());
        const auto scored = score_candidates(cache, wc.w, candidates);
        std::vector<double> dy(candidates.size(), 0.0);
        const size_t pairs = std::min(ex.positives.size(), ex.negatives.size());
        for (size_t i = 0; i < pairs; ++i) {
            const double y_pos = scored[i].y;
            const double y_neg = scored[ex.positives.size() + i].y;
            const double hinge = alpha + y_neg - y_pos;
            if (hinge > 0.0) {
                loss_sum += hinge;
                dy[i] -= 1.0 / static_cast<double>(total_pairs);
                dy[ex.positives.size() + i] += 1.0 / static_cast<double>(total_pairs);
            }
        }
        backward_example(cache, wc, mode, candidates, scored, dy);
    }
    return loss_sum / static_cast<double>(total_pairs);
}

double MipModel::example_loss_and_grad(const SequenceExample& ex, WeightMode mode,
                                       const ClusterAssignment* fixed_clusters) {
    EncodeOptions opts;
    opts.training = false; // dropout off: deterministic for gradient checks
    opts.fixed_clusters = fixed_clusters;
    EncodeCache cache = encode(ex.items, ex.times, opts);
    WeightCache wc = compute_weights(cache, mode);

    std::vector<int> candidates = ex.positives;
    candidates.insert(candidates.end(), ex.negatives.begin(), ex.negatives.end());
    const auto scored = score_candidates(cache, wc.w, candidates);
    std::vector<double> dy(candidates.size(), 0.0);
    double loss = 0.0;

    if (spec_.loss.kind == LossKind::nll) {
        const auto total = static_cast<double>(candidates.size());
        for (size_t c = 0; c < candidates.size(); ++c) {
            const bool positive = c < ex.positives.size();
            const double p = std::clamp(scored[c].probability, 1e-12, 1.0 - 1e-12);
            loss += positive ? -std::log(p) : -std::log(1.0 - p);
            dy[c] = (scored[c].probability - (positive ? 1.0 : 0.0)) / total;
        }
        loss /= total;
    } else {
        const size_t pairs = std::min(ex.positives.size(), ex.negatives.size());
        for (size_t i = 0; i < pairs; ++i) {
            const double hinge = spec_.loss.alpha + scored[ex.positives.size() + i].y - scored[i].y;
            if (hinge > 0.0) {
                loss += hinge;
                dy[i] -= 1.0 / static_cast<double>(pairs);
                dy[ex.positives.size() + i] += 1.0 / static_cast<double>(pairs);
            }
        }
        loss /= static_cast<double>(pairs);
    }

    backward_example(cache, wc, mode, candidates, scored, dy);
    return loss;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void MipModel::save(const std::string& path) const {
    save_checkpoint(path, spec_.to_json(), params_);
}

MipModel MipModel::load(const std::string& path) {
    LoadedCheckpoint ck = load_checkpoint(path);
    MipModel model(ModelSpec::from_json(ck.config_json), /*init_seed=*/0);
    if (ck.names.size() != model.params_.count())
        fail("malformed_checkpoint", "checkpoint parameter count mismatch");
    for (size_t i = 0; i < ck.names.size(); ++i) {
        Param& p = model.params_.at(ck.names[i]);
        if (!p.value.same_shape(ck.values[i]))
            fail("malformed_checkpoint", "checkpoint shape mismatch for " + ck.names[i]);
        p.value = ck.values[i];
    }
    return model;
}

} // namespace mip
