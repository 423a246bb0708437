#include <doctest.h>

#include <cmath>

#include "mip/model.hpp"
#include "mip/param.hpp"
#include "support/test_util.hpp"

using namespace mip;

namespace {

// d=8, H=2, l=12, Lambda=3. Encoding scales are small so every feature
// actually varies across the window; the candidate sets are large and
// disjoint so the example is separable and per-candidate rounding noise
// averages out of the central differences.
ModelSpec grad_spec(bool metadata, LossKind loss) {
    ModelSpec s;
    s.model.d = 8;
    s.model.heads = 2;
    s.model.d_model = 8;
    s.model.ffn_hidden = 16;
    s.model.weight_hidden = 16;
    s.model.lambda_train = 3;
    s.model.dropout = 0.0;
    s.model.l_max = 12;
    s.model.metadata_present = metadata;
    s.temporal.kind = EncodingKind::sinusoid;
    s.temporal.dim = 4;
    s.temporal.max_scale = 20.0;
    s.positional.kind = EncodingKind::sinusoid;
    s.positional.dim = 4;
    s.positional.max_scale = 20.0;
    s.clusterer.method = ClusterMethod::ward;
    s.clusterer.k = 3;
    s.weights.mode = WeightMode::learned;
    s.loss.kind = loss;
    s.loss.alpha = loss == LossKind::triplet ? 1.0 : 0.5;
    s.loss.learned_beta = true;
    s.vocab_size = metadata ? 0 : 512;
    return s;
}

SequenceExample grad_example(Rng& rng, int vocab, int candidates_per_side) {
    SequenceExample ex;
    double t = 0.0;
    for (int j = 0; j < 12; ++j) {
        ex.items.push_back(static_cast<int>(rng.uniform_int(static_cast<uint64_t>(vocab))));
        ex.times.push_back(t);
        t += rng.uniform(0.2, 1.2);
    }
    for (int i = 0; i < candidates_per_side; ++i) {
        ex.positives.push_back(i);
        ex.negatives.push_back(vocab / 2 + i);
    }
    return ex;
}

// Gap between the best and second-best cluster term for one candidate.
double argmax_gap(const EncodeCache& cache, const WeightCache& wc, double scale,
                  const double* p) {
    double best = -1e300, second = -1e300;
    for (int lam = 0; lam < cache.z.rows; ++lam) {
        const double v =
            scale * wc.w[static_cast<size_t>(lam)] * dot(cache.z.row(lam), p, cache.z.cols);
        if (v > best) {
            second = best;
            best = v;
        } else if (v > second) {
            second = v;
        }
    }
    return best - second;
}

// Candidates whose scoring argmax sits near a decision boundary would put
// theta +- h into different smooth pieces; drop them (pairwise, so the
// triplet pairing stays aligned) and verify the rest are clear of kinks.
void drop_near_ties(const MipModel& model, SequenceExample& ex, const ClusterAssignment& frozen,
                    WeightMode mode) {
    MipModel::EncodeOptions opts;
    opts.fixed_clusters = &frozen;
    EncodeCache cache = model.encode(ex.items, ex.times, opts);
    if (cache.z.rows < 2) return;
    WeightCache wc = model.compute_weights(cache, mode);
    const double scale = model.beta();
    std::vector<int> pos, neg;
    const size_t pairs = std::min(ex.positives.size(), ex.negatives.size());
    for (size_t i = 0; i < pairs; ++i) {
        const double gp = argmax_gap(cache, wc, scale, model.item_vector(ex.positives[i]));
        const double gn = argmax_gap(cache, wc, scale, model.item_vector(ex.negatives[i]));
        if (gp > 1e-3 && gn > 1e-3) {
            pos.push_back(ex.positives[i]);
            neg.push_back(ex.negatives[i]);
        }
    }
    REQUIRE(pos.size() >= pairs / 2); // the fixture must stay well populated
    ex.positives = std::move(pos);
    ex.negatives = std::move(neg);
}

void require_no_kinks(const MipModel& model, const SequenceExample& ex,
                      const ClusterAssignment& frozen, WeightMode mode) {
    MipModel::EncodeOptions opts;
    opts.fixed_clusters = &frozen;
    EncodeCache cache = model.encode(ex.items, ex.times, opts);
    if (cache.z.rows < 2) return;
    WeightCache wc = model.compute_weights(cache, mode);
    const double scale = model.beta();
    std::vector<int> candidates = ex.positives;
    candidates.insert(candidates.end(), ex.negatives.begin(), ex.negatives.end());
    for (int id : candidates)
        REQUIRE(argmax_gap(cache, wc, scale, model.item_vector(id)) > 1e-4);
}

// Overfit the single example a little so the loss (and with it the
// finite-difference rounding noise) is small at the checked point.
void pretrain(MipModel& model, const SequenceExample& ex, WeightMode mode,
              const ClusterAssignment& frozen, int steps) {
    Adam adam(AdamConfig{0.01, 0.9, 0.999, 1e-8});
    for (int step = 0; step < steps; ++step) {
        model.params().zero_grads();
        model.example_loss_and_grad(ex, mode, &frozen);
        adam.step(model.params());
    }
}

double run_check(MipModel& model, const SequenceExample& ex, WeightMode mode,
                 const ClusterAssignment& frozen) {
    require_no_kinks(model, ex, frozen, mode);
    auto loss_fn = [&]() {
        model.params().zero_grads();
        return model.example_loss_and_grad(ex, mode, &frozen);
    };
    return finite_diff_check(loss_fn, model.params(), 1e-5);
}

} // namespace

TEST_CASE("full pipeline gradients: NLL, learned weights, learned item table") {
    MipModel model(grad_spec(false, LossKind::nll), 101);
    Rng rng(42);
    SequenceExample ex = grad_example(rng, 512, 256);
    const ClusterAssignment frozen = model.encode_user(ex.items, ex.times).clusters;
    pretrain(model, ex, WeightMode::learned, frozen, 15);
    drop_near_ties(model, ex, frozen, WeightMode::learned);
    const double loss = [&] {
        model.params().zero_grads();
        return model.example_loss_and_grad(ex, WeightMode::learned, &frozen);
    }();
    CHECK(loss < 0.1);
    CHECK(loss > 1e-4); // still a meaningful gradient signal
    CHECK(run_check(model, ex, WeightMode::learned, frozen) < 1e-4);
}

TEST_CASE("full pipeline gradients: NLL with metadata features") {
    MipModel model(grad_spec(true, LossKind::nll), 102);
    Rng rng(43);
    Matrix features = test::random_matrix(512, 8, rng);
    model.set_item_features(features);
    SequenceExample ex = grad_example(rng, 512, 256);
    const ClusterAssignment frozen = model.encode_user(ex.items, ex.times).clusters;
    pretrain(model, ex, WeightMode::learned, frozen, 15);
    drop_near_ties(model, ex, frozen, WeightMode::learned);
    CHECK(run_check(model, ex, WeightMode::learned, frozen) < 1e-4);
}

TEST_CASE("full pipeline gradients: equal and exp-decay weight modes") {
    for (WeightMode mode : {WeightMode::equal, WeightMode::exp_decay}) {
        MipModel model(grad_spec(false, LossKind::nll), 103);
        Rng rng(44);
        SequenceExample ex = grad_example(rng, 512, 256);
        const ClusterAssignment frozen = model.encode_user(ex.items, ex.times).clusters;
        pretrain(model, ex, mode, frozen, mode == WeightMode::equal ? 30 : 20);
        drop_near_ties(model, ex, frozen, mode);
        CHECK(run_check(model, ex, mode, frozen) < 1e-4);
    }
}

TEST_CASE("full pipeline gradients: triplet loss with learned beta") {
    MipModel model(grad_spec(true, LossKind::triplet), 104);
    Rng rng(45);
    Matrix features = test::random_matrix(1024, 8, rng, -0.6, 0.6);
    model.set_item_features(features);
    // Stretch beta away from 1 so its gradient path is exercised.
    model.params().at("beta").value(0, 0) = 1.3;
    SequenceExample ex = grad_example(rng, 1024, 512);
    const ClusterAssignment frozen = model.encode_user(ex.items, ex.times).clusters;
    drop_near_ties(model, ex, frozen, WeightMode::learned);

    // At init every margin is decisively violated: far from the hinge kink
    // and with a live gradient through every pair.
    {
        MipModel::EncodeOptions opts;
        opts.fixed_clusters = &frozen;
        EncodeCache cache = model.encode(ex.items, ex.times, opts);
        WeightCache wc = model.compute_weights(cache, WeightMode::learned);
        auto pos = model.score_candidates(cache, wc.w, ex.positives);
        auto neg = model.score_candidates(cache, wc.w, ex.negatives);
        for (size_t i = 0; i < pos.size(); ++i) {
            const double hinge = model.spec().loss.alpha + neg[i].y - pos[i].y;
            REQUIRE(hinge > 0.4);
            REQUIRE(hinge < 1.6);
        }
    }
    CHECK(run_check(model, ex, WeightMode::learned, frozen) < 1e-4);
}

TEST_CASE("a head that is zeroed downstream receives zero gradients") {
    MipModel model(grad_spec(false, LossKind::nll), 105);
    // Cut head 1 out of the fusion layer.
    Param& w1 = model.params().at("fuse.w1");
    const int d = model.spec().model.d;
    for (int r = 0; r < w1.value.rows; ++r)
        for (int c = d; c < 2 * d; ++c) w1.value(r, c) = 0.0;

    Rng rng(46);
    SequenceExample ex = grad_example(rng, 512, 32);
    const ClusterAssignment frozen = model.encode_user(ex.items, ex.times).clusters;
    model.params().zero_grads();
    model.example_loss_and_grad(ex, WeightMode::learned, &frozen);

    for (const std::string& name : {"wq.1", "bq.1", "wk.1", "bk.1"})
        for (double g : model.params().at(name).grad.data) CHECK(g == 0.0);
    // Head 0 still learns.
    double head0 = 0.0;
    for (double g : model.params().at("wq.0").grad.data) head0 += std::abs(g);
    CHECK(head0 > 0.0);
}

TEST_CASE("duplicating an example leaves pooled gradients unchanged") {
    ModelSpec spec = grad_spec(false, LossKind::nll);
    spec.model.dropout = 0.0;
    MipModel model(spec, 106);
    Rng rng(47);
    SequenceExample ex = grad_example(rng, 512, 32);
    ex.cached_clusters = model.encode_user(ex.items, ex.times).clusters;

    model.params().zero_grads();
    model.train_batch({&ex}, WeightMode::learned, 7);
    std::vector<Matrix> single;
    for (auto* p : model.params().all()) single.push_back(p->grad);

    model.params().zero_grads();
    model.train_batch({&ex, &ex}, WeightMode::learned, 7);
    auto all = model.params().all();
    for (size_t i = 0; i < all.size(); ++i)
        for (size_t k = 0; k < all[i]->grad.data.size(); ++k)
            CHECK(all[i]->grad.data[k] == doctest::Approx(single[i].data[k]).epsilon(1e-12));
}

TEST_CASE("learned weights are exactly one at init, matching equal mode") {
    MipModel model(grad_spec(false, LossKind::nll), 107);
    Rng rng(48);
    SequenceExample ex = grad_example(rng, 512, 32);
    auto cache = model.encode(ex.items, ex.times, {});
    auto learned = model.compute_weights(cache, WeightMode::learned);
    auto equal = model.compute_weights(cache, WeightMode::equal);
    REQUIRE(learned.w.size() == equal.w.size());
    for (size_t i = 0; i < learned.w.size(); ++i) CHECK(learned.w[i] == 1.0);

    auto s1 = model.score_candidates(cache, learned.w, ex.positives);
    auto s2 = model.score_candidates(cache, equal.w, ex.positives);
    for (size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].y == s2[i].y);
}
