#pragma once

#include <string>
#include <vector>

#include "mip/data.hpp"
#include "mip/metrics.hpp"
#include "mip/model.hpp"
#include "mip/param.hpp"

namespace mip {

enum class TrainStage { two_stage, joint };
TrainStage train_stage_from_string(const std::string& s);
std::string to_string(TrainStage s);

struct TrainConfig {
    TrainStage stage = TrainStage::two_stage;
    int max_epochs = 100;
    int patience = 20;
    int batch_size = 128;
    uint64_t seed = 42;
    AdamConfig opt;

    void validate() const;
};

struct EpochRecord {
    int stage = 0; // 1-based stage index
    int epoch = 0; // 1-based within the stage
    double train_loss = 0.0;
    double val_auc = 0.0;
    double wall_ms = 0.0;
};

struct StageReport {
    std::string name;
    std::vector<EpochRecord> epochs;
    int best_epoch = 0; // 1-based; 0 = none
    double best_val_auc = 0.0;
    double initial_val_auc = 0.0; // stage 2: AUC of the resumed checkpoint before any update
};

struct TrainReport {
    std::vector<StageReport> stages;
    uint64_t seed = 0;
    double total_ms = 0.0;

    const StageReport& final_stage() const { return stages.back(); }
};

/// {stop now, index of the running best}. Stops exactly when the last
/// `patience` entries each fail to exceed the best (strict >).
struct EarlyStopDecision {
    bool stop = false;
    int best_index = -1;
};
EarlyStopDecision early_stop(const std::vector<double>& val_history, int patience);

/// Two-stage: stage 1 trains with cluster weights bypassed (equal mode),
/// stage 2 resumes from the stage-1 best and trains everything. Requires
/// weight mode = learned. The model ends at the final best parameters.
TrainReport train_two_stage(MipModel& model, const DatasetSplit& data, const TrainConfig& cfg);

/// Single stage with the model's configured weight mode from scratch.
TrainReport train_joint(MipModel& model, const DatasetSplit& data, const TrainConfig& cfg);

/// Cache training-clusterer assignments on metadata-present train sequences.
void precompute_train_clusters(DatasetSplit& data, const MipModel& model);

std::string train_report_json(const TrainReport& report, bool stable);
std::string train_report_markdown(const TrainReport& report);

} // namespace mip
