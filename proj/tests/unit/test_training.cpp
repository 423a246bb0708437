#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "mip/checkpoint.hpp"
#include "mip/error.hpp"
#include "mip/training.hpp"
#include "support/test_util.hpp"

using namespace mip;

TEST_CASE("early stop contract") {
    // Monotone improvement never stops.
    std::vector<double> rising;
    for (int i = 0; i < 50; ++i) {
        rising.push_back(0.5 + 0.01 * i);
        CHECK(!early_stop(rising, 20).stop);
    }

    // Best at epoch 1, then 20 non-improving epochs: stop at epoch 21.
    std::vector<double> history{0.7};
    for (int i = 0; i < 20; ++i) {
        history.push_back(0.6);
        const auto d = early_stop(history, 20);
        CHECK(d.best_index == 0);
        CHECK(d.stop == (static_cast<int>(history.size()) == 21));
    }

    // A plateau equal to the best counts as non-improving.
    std::vector<double> plateau{0.8, 0.8, 0.8};
    CHECK(early_stop(plateau, 2).stop);
    CHECK(early_stop(plateau, 2).best_index == 0);
}

namespace {

DatasetSplit small_split(uint64_t seed) {
    SynthConfig cfg;
    cfg.num_users = 24;
    cfg.num_interests = 2;
    cfg.items_per_interest = 52;
    cfg.vocab_per_interest = 80;
    cfg.embed_dim = 6;
    cfg.noise_sigma = 0.05;
    cfg.skew = 0.5;
    cfg.seed = seed;
    cfg.train_fraction = 0.7;
    cfg.valid_fraction = 0.15;
    return synth_generate(cfg);
}

ModelSpec small_model_spec() {
    ModelSpec s;
    s.model.d = 6;
    s.model.heads = 2;
    s.model.d_model = 6;
    s.model.ffn_hidden = 8;
    s.model.weight_hidden = 8;
    s.model.lambda_train = 2;
    s.model.dropout = 0.1;
    s.model.l_max = 50;
    s.model.metadata_present = true;
    s.temporal.kind = EncodingKind::sinusoid;
    s.temporal.dim = 4;
    s.positional.kind = EncodingKind::sinusoid;
    s.positional.dim = 4;
    s.clusterer.method = ClusterMethod::ward;
    s.clusterer.k = 2;
    s.weights.mode = WeightMode::learned;
    return s;
}

TrainConfig small_train_cfg() {
    TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.patience = 2;
    cfg.batch_size = 8;
    cfg.seed = 99;
    return cfg;
}

} // namespace

TEST_CASE("two runs with the same seed produce bit-identical reports") {
    auto split = small_split(51);

    auto run = [&]() {
        MipModel model(small_model_spec(), 52);
        model.set_item_features(split.features);
        DatasetSplit data = split;
        precompute_train_clusters(data, model);
        return train_report_json(train_two_stage(model, data, small_train_cfg()), true);
    };
    CHECK(run() == run());
}

TEST_CASE("stage 2 starts from the stage-1 best validation AUC") {
    auto split = small_split(53);
    MipModel model(small_model_spec(), 54);
    model.set_item_features(split.features);
    precompute_train_clusters(split, model);
    auto report = train_two_stage(model, split, small_train_cfg());
    REQUIRE(report.stages.size() == 2);
    CHECK(report.stages[1].initial_val_auc == report.stages[0].best_val_auc);
}

TEST_CASE("stage 1 matches equal-weight joint training step for step") {
    auto split = small_split(55);

    MipModel two_stage_model(small_model_spec(), 56);
    two_stage_model.set_item_features(split.features);
    DatasetSplit d1 = split;
    precompute_train_clusters(d1, two_stage_model);
    auto two_stage = train_two_stage(two_stage_model, d1, small_train_cfg());

    ModelSpec equal_spec = small_model_spec();
    equal_spec.weights.mode = WeightMode::equal;
    MipModel equal_model(equal_spec, 56);
    equal_model.set_item_features(split.features);
    DatasetSplit d2 = split;
    precompute_train_clusters(d2, equal_model);
    auto joint = train_joint(equal_model, d2, small_train_cfg());

    REQUIRE(two_stage.stages[0].epochs.size() == joint.stages[0].epochs.size());
    for (size_t e = 0; e < joint.stages[0].epochs.size(); ++e) {
        CHECK(two_stage.stages[0].epochs[e].train_loss == joint.stages[0].epochs[e].train_loss);
        CHECK(two_stage.stages[0].epochs[e].val_auc == joint.stages[0].epochs[e].val_auc);
    }
}

TEST_CASE("two-stage training requires learned weights") {
    auto split = small_split(57);
    ModelSpec spec = small_model_spec();
    spec.weights.mode = WeightMode::equal;
    MipModel model(spec, 58);
    model.set_item_features(split.features);
    CHECK_THROWS_AS(train_two_stage(model, split, small_train_cfg()), MipError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    MipModel model(small_model_spec(), 60);
    const std::string path = "/tmp/mip_ckpt_test.bin";
    model.save(path);
    MipModel loaded = MipModel::load(path);
    auto a = model.params().all();
    auto b = loaded.params().all();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i]->name == b[i]->name);
        CHECK(a[i]->value.data == b[i]->value.data);
    }
    CHECK(loaded.spec().to_json() == model.spec().to_json());
    std::remove(path.c_str());
}

TEST_CASE("checkpoint version mismatch is an explicit error") {
    MipModel model(small_model_spec(), 61);
    const std::string path = "/tmp/mip_ckpt_version.bin";
    model.save(path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(8); // version field follows the magic
        const char bogus[4] = {(char)0xfe, 0, 0, 0};
        f.write(bogus, 4);
    }
    CHECK_THROWS_WITH_AS(MipModel::load(path), doctest::Contains("version"), MipError);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint with a truncated body is rejected") {
    MipModel model(small_model_spec(), 62);
    const std::string path = "/tmp/mip_ckpt_trunc.bin";
    model.save(path);
    {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), static_cast<long>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(MipModel::load(path), MipError);
    std::remove(path.c_str());
}
