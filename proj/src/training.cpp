#include "mip/training.hpp"

#include <chrono>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mip/error.hpp"
#include "mip/log.hpp"

namespace mip {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

TrainStage train_stage_from_string(const std::string& s) {
    if (s == "two_stage") return TrainStage::two_stage;
    if (s == "joint") return TrainStage::joint;
    fail("config_invalid", "unknown training stage: " + s);
}

std::string to_string(TrainStage s) {
    return s == TrainStage::two_stage ? "two_stage" : "joint";
}

void TrainConfig::validate() const {
    if (max_epochs < 1) fail("config_invalid", "training.max_epochs must be >= 1");
    if (patience < 1 || patience >= max_epochs)
        fail("config_invalid", "training.patience must be in [1, max_epochs)");
    if (batch_size < 1) fail("config_invalid", "training.batch_size must be >= 1");
}

EarlyStopDecision early_stop(const std::vector<double>& val_history, int patience) {
    EarlyStopDecision d;
    if (val_history.empty()) return d;
    double best = val_history[0];
    d.best_index = 0;
    for (size_t i = 1; i < val_history.size(); ++i) {
        if (val_history[i] > best) { // strict: a plateau does not improve
            best = val_history[i];
            d.best_index = static_cast<int>(i);
        }
    }
    d.stop = static_cast<int>(val_history.size()) - 1 - d.best_index >= patience;
    return d;
}

void precompute_train_clusters(DatasetSplit& data, const MipModel& model) {
    if (!model.spec().model.metadata_present ||
        model.spec().clusterer.method == ClusterMethod::none)
        return;
    const int d = model.spec().model.d;
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(data.train.size()); ++i) {
        SequenceExample& ex = data.train[static_cast<size_t>(i)];
        if (ex.cached_clusters.has_value()) continue;
        Matrix points(static_cast<int>(ex.items.size()), d);
        for (size_t j = 0; j < ex.items.size(); ++j) {
            const double* src = model.item_vector(ex.items[j]);
            for (int c = 0; c < d; ++c) points(static_cast<int>(j), c) = src[c];
        }
        ex.cached_clusters = run_clustering(points, model.spec().clusterer);
    }
}

namespace {

StageReport run_stage(MipModel& model, const DatasetSplit& data, const TrainConfig& cfg,
                      WeightMode mode, int stage_index, const std::string& name, Adam& adam,
                      std::vector<Matrix>& best_values) {
    StageReport report;
    report.name = name;

    std::vector<size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);

    EvalOptions val_opts;
    val_opts.mode = mode;
    val_opts.k_values = {50};

    std::vector<double> history;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = Clock::now();
        Rng shuffle_rng(Rng::mix(cfg.seed, static_cast<uint64_t>(stage_index) * 100000 +
                                               static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_weighted = 0.0;
        long pair_total = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            std::vector<const SequenceExample*> batch;
            batch.reserve(end - start);
            long pairs = 0;
            for (size_t i = start; i < end; ++i) {
                const SequenceExample& ex = data.train[order[i]];
                batch.push_back(&ex);
                pairs += static_cast<long>(ex.positives.size() + ex.negatives.size());
            }
            model.params().zero_grads();
            const uint64_t drop_seed =
                Rng::mix(cfg.seed, (static_cast<uint64_t>(stage_index) << 40) ^
                                       (static_cast<uint64_t>(epoch) << 20) ^ start);
            const double batch_loss = model.train_batch(batch, mode, drop_seed);
            adam.step(model.params());
            loss_weighted += batch_loss * static_cast<double>(pairs);
            pair_total += pairs;
        }

        EpochRecord rec;
        rec.stage = stage_index;
        rec.epoch = epoch;
        rec.train_loss = loss_weighted / static_cast<double>(pair_total);
        rec.val_auc = evaluate(model, data.valid, val_opts).auc;
        rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        report.epochs.push_back(rec);
        history.push_back(rec.val_auc);

        const EarlyStopDecision decision = early_stop(history, cfg.patience);
        if (decision.best_index == epoch - 1) {
            best_values = model.params().snapshot_values();
            report.best_epoch = epoch;
            report.best_val_auc = rec.val_auc;
        }
        MIP_INFO("%s epoch %d: loss=%.6f val_auc=%.6f (%.0f ms)", name.c_str(), epoch,
                 rec.train_loss, rec.val_auc, rec.wall_ms);
        if (decision.stop) break;
    }
    model.params().restore_values(best_values);
    return report;
}

} // namespace

TrainReport train_two_stage(MipModel& model, const DatasetSplit& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.train.empty() || data.valid.empty())
        fail("empty_dataset", "two-stage training needs train and validation sequences");
    if (model.spec().weights.mode != WeightMode::learned)
        fail("config_invalid", "two-stage training requires weight mode 'learned'");

    const auto t0 = Clock::now();
    TrainReport report;
    report.seed = cfg.seed;

    // Stage 1: cluster weights bypassed entirely (scored as equal weights).
    Adam adam1(cfg.opt);
    std::vector<Matrix> best = model.params().snapshot_values();
    report.stages.push_back(run_stage(model, data, cfg, WeightMode::equal, 1, "stage1", adam1, best));

    // Stage 2: resume from the stage-1 best; everything trainable.
    EvalOptions val_opts;
    val_opts.mode = WeightMode::learned;
    StageReport stage2_seed_report;
    stage2_seed_report.initial_val_auc = evaluate(model, data.valid, val_opts).auc;

    Adam adam2(cfg.opt);
    std::vector<Matrix> best2 = model.params().snapshot_values();
    StageReport stage2 =
        run_stage(model, data, cfg, WeightMode::learned, 2, "stage2", adam2, best2);
    stage2.initial_val_auc = stage2_seed_report.initial_val_auc;
    report.stages.push_back(std::move(stage2));

    report.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    return report;
}

TrainReport train_joint(MipModel& model, const DatasetSplit& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.train.empty() || data.valid.empty())
        fail("empty_dataset", "training needs train and validation sequences");

    const auto t0 = Clock::now();
    TrainReport report;
    report.seed = cfg.seed;
    Adam adam(cfg.opt);
    std::vector<Matrix> best = model.params().snapshot_values();
    report.stages.push_back(
        run_stage(model, data, cfg, model.spec().weights.mode, 1, "joint", adam, best));
    report.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    return report;
}

std::string train_report_json(const TrainReport& report, bool stable) {
    json j;
    j["seed"] = report.seed;
    if (!stable) j["total_ms"] = report.total_ms;
    j["stages"] = json::array();
    for (const auto& stage : report.stages) {
        json s;
        s["name"] = stage.name;
        s["best_epoch"] = stage.best_epoch;
        s["best_val_auc"] = stage.best_val_auc;
        if (stage.name == "stage2") s["initial_val_auc"] = stage.initial_val_auc;
        s["epochs"] = json::array();
        for (const auto& e : stage.epochs) {
            json ej;
            ej["epoch"] = e.epoch;
            ej["train_loss"] = e.train_loss;
            ej["val_auc"] = e.val_auc;
            if (!stable) ej["wall_ms"] = e.wall_ms;
            s["epochs"].push_back(ej);
        }
        j["stages"].push_back(s);
    }
    return j.dump(2);
}

std::string train_report_markdown(const TrainReport& report) {
    std::ostringstream out;
    out << "| stage | epoch | train loss | val AUC |\n|---|---|---|---|\n";
    for (const auto& stage : report.stages)
        for (const auto& e : stage.epochs)
            out << "| " << stage.name << " | " << e.epoch << " | " << e.train_loss << " | "
                << e.val_auc << " |\n";
    for (const auto& stage : report.stages)
        out << "\nBest " << stage.name << " epoch: " << stage.best_epoch
            << " (val AUC " << stage.best_val_auc << ")";
    out << "\n";
    return out.str();
}

} // namespace mip
