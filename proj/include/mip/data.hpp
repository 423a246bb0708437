#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mip/clustering.hpp"
#include "mip/matrix.hpp"
#include "mip/rng.hpp"

namespace mip {

/// Engagement label for the Pinterest-style observed-negative pipeline.
/// Plain datasets leave it as positive.
enum class Engagement { positive = 0, hide = 1, impression = 2 };

struct RawInteraction {
    int user = 0;
    int item = 0;
    double time = 0.0; // days
    Engagement label = Engagement::positive;
};

struct IngestResult {
    std::vector<RawInteraction> interactions; // sorted by (user, time, file order)
    std::vector<std::string> user_names;      // dense id -> original token
    std::vector<std::string> item_names;
};

/// One training/evaluation example: an input window plus label candidates.
struct SequenceExample {
    int user = 0;
    std::vector<int> items;     // input window, chronological
    std::vector<double> times;  // shifted so the window starts at day 0
    std::vector<int> positives; // label items
    std::vector<int> negatives;
    std::optional<ClusterAssignment> cached_clusters; // metadata-present training cache
};

struct DatasetSplit {
    std::vector<SequenceExample> train, valid, test;
    std::vector<std::string> item_names;
    Matrix features;                // vocab x d when metadata present, else empty
    std::vector<int> item_interest; // synthetic ground truth (empty otherwise)
    bool metadata_present = false;
    int input_len = 50;
    int label_len = 50;

    int vocab_size() const { return static_cast<int>(item_names.size()); }
};

/// Parse `user,item,timestamp[,label]` (comma or tab separated; optional
/// header). Timestamps are divided by time_divisor to express days.
/// Out-of-order rows within a user are sorted with a warning.
IngestResult ingest(const std::string& path, double time_divisor = 1.0);

/// Drop items with fewer than min_count occurrences (single pass). The
/// iterated variant alternates item and user filtering to a fixpoint.
std::vector<RawInteraction> ten_core_filter(const std::vector<RawInteraction>& interactions,
                                            int min_count = 10, bool iterated = false);

/// Split each user's history into consecutive non-overlapping windows of
/// input_len + label_len items; shorter remainders are discarded.
std::vector<SequenceExample> build_sequences(const std::vector<RawInteraction>& interactions,
                                             int input_len = 50, int label_len = 50);

/// Same, but label items must be at least gap_days after the last input item.
std::vector<SequenceExample> build_gap_split(const std::vector<RawInteraction>& interactions,
                                             double gap_days = 1.0, int input_len = 50,
                                             int label_len = 50);

/// n distinct items outside the user's full interaction history.
std::vector<int> sample_negatives(const std::vector<int>& user_history, int vocab_size, int n,
                                  Rng& rng);

/// Exact 50/50 observed/random mix; odd counts round toward observed. Tops
/// up from random with a warning when observed negatives run short.
std::vector<int> mix_negatives(const std::vector<int>& observed, const std::vector<int>& random_negs,
                               int n);

struct SynthConfig {
    int num_users = 2000;
    int num_interests = 3;       // K well-separated interest centroids
    int items_per_interest = 34; // draws per user = K * items_per_interest
    int vocab_per_interest = 200;
    int embed_dim = 16;
    double noise_sigma = 0.05;
    double skew = 0.5; // 0 = exactly uniform proportions; ->1 = concentrated
    double train_fraction = 0.9;
    double valid_fraction = 0.05;
    int input_len = 50;
    int label_len = 50;
    int negatives = 50;
    uint64_t seed = 42;
};

/// Multi-interest synthetic corpus with dense item features and ground-truth
/// interest labels. Users draw distinct items; the group of each draw follows
/// per-user Dirichlet mixing proportions controlled by skew.
DatasetSplit synth_generate(const SynthConfig& cfg);

/// Per-user split of sequence examples into train/valid/test.
void split_by_user(std::vector<SequenceExample> all, double train_frac, double valid_frac,
                   Rng& rng, DatasetSplit& out);

void save_split(const DatasetSplit& split, const std::string& dir, uint64_t seed,
                const std::string& config_hash);
DatasetSplit load_split(const std::string& dir);

} // namespace mip
