#include "mip/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "mip/error.hpp"
#include "mip/log.hpp"

namespace mip {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

static std::vector<std::string> split_fields(const std::string& line) {
    const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == delim) {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

static bool parse_double(const std::string& s, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

IngestResult ingest(const std::string& path, double time_divisor) {
    std::ifstream in(path);
    if (!in) fail("missing_file", "cannot open interactions file: " + path);
    if (time_divisor <= 0.0) fail("config_invalid", "time divisor must be > 0");

    IngestResult result;
    std::unordered_map<std::string, int> user_ids, item_ids;
    std::string line;
    long line_no = 0;
    long order = 0;
    std::vector<long> file_order;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() < 3)
            fail("malformed_line",
                 "line " + std::to_string(line_no) + ": expected user,item,timestamp[,label]");
        double t;
        if (!parse_double(fields[2], t)) {
            if (line_no == 1) continue; // header row
            fail("malformed_line",
                 "line " + std::to_string(line_no) + ": bad timestamp '" + fields[2] + "'");
        }
        RawInteraction r;
        auto intern = [](std::unordered_map<std::string, int>& ids, std::vector<std::string>& names,
                         const std::string& tok) {
            auto it = ids.find(tok);
            if (it != ids.end()) return it->second;
            const int id = static_cast<int>(names.size());
            ids.emplace(tok, id);
            names.push_back(tok);
            return id;
        };
        r.user = intern(user_ids, result.user_names, fields[0]);
        r.item = intern(item_ids, result.item_names, fields[1]);
        r.time = t / time_divisor;
        if (fields.size() >= 4 && !fields[3].empty()) {
            if (fields[3] == "hide") r.label = Engagement::hide;
            else if (fields[3] == "impression") r.label = Engagement::impression;
            else r.label = Engagement::positive;
        }
        result.interactions.push_back(r);
        file_order.push_back(order++);
    }

    // Stable per-user chronological order; timestamp ties keep file order.
    std::vector<size_t> idx(result.interactions.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    bool reordered = false;
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        const auto& x = result.interactions[a];
        const auto& y = result.interactions[b];
        if (x.user != y.user) return x.user < y.user;
        if (x.time != y.time) return x.time < y.time;
        return file_order[a] < file_order[b];
    });
    for (size_t i = 0; i + 1 < idx.size(); ++i)
        if (idx[i] > idx[i + 1] &&
            result.interactions[idx[i]].user == result.interactions[idx[i + 1]].user)
            reordered = true;
    if (reordered) MIP_WARN("ingest: out-of-order timestamps within a user; sorted");
    std::vector<RawInteraction> sorted;
    sorted.reserve(idx.size());
    for (size_t i : idx) sorted.push_back(result.interactions[i]);
    result.interactions = std::move(sorted);
    return result;
}

// ---------------------------------------------------------------------------
// Filtering and sequence construction
// ---------------------------------------------------------------------------

std::vector<RawInteraction> ten_core_filter(const std::vector<RawInteraction>& interactions,
                                            int min_count, bool iterated) {
    std::vector<RawInteraction> cur = interactions;
    for (;;) {
        std::unordered_map<int, int> item_count;
        for (const auto& r : cur) ++item_count[r.item];
        std::vector<RawInteraction> next;
        next.reserve(cur.size());
        for (const auto& r : cur)
            if (item_count[r.item] >= min_count) next.push_back(r);
        bool changed = next.size() != cur.size();
        cur = std::move(next);
        if (!iterated) return cur;

        std::unordered_map<int, int> user_count;
        for (const auto& r : cur) ++user_count[r.user];
        std::vector<RawInteraction> next2;
        next2.reserve(cur.size());
        for (const auto& r : cur)
            if (user_count[r.user] >= min_count) next2.push_back(r);
        changed = changed || next2.size() != cur.size();
        cur = std::move(next2);
        if (!changed) return cur;
    }
}

static std::map<int, std::vector<RawInteraction>> group_by_user(
    const std::vector<RawInteraction>& interactions) {
    std::map<int, std::vector<RawInteraction>> users;
    for (const auto& r : interactions) users[r.user].push_back(r);
    return users;
}

static SequenceExample make_example(const std::vector<RawInteraction>& window_input,
                                    const std::vector<RawInteraction>& window_labels) {
    SequenceExample ex;
    ex.user = window_input.front().user;
    const double t0 = window_input.front().time;
    for (const auto& r : window_input) {
        ex.items.push_back(r.item);
        ex.times.push_back(r.time - t0);
    }
    for (const auto& r : window_labels) ex.positives.push_back(r.item);
    return ex;
}

std::vector<SequenceExample> build_sequences(const std::vector<RawInteraction>& interactions,
                                             int input_len, int label_len) {
    std::vector<SequenceExample> out;
    const size_t window = static_cast<size_t>(input_len) + static_cast<size_t>(label_len);
    for (auto& [user, rows] : group_by_user(interactions)) {
        (void)user;
        for (size_t start = 0; start + window <= rows.size(); start += window) {
            std::vector<RawInteraction> inp(rows.begin() + static_cast<long>(start),
                                            rows.begin() + static_cast<long>(start + static_cast<size_t>(input_len)));
            std::vector<RawInteraction> lab(
                rows.begin() + static_cast<long>(start + static_cast<size_t>(input_len)),
                rows.begin() + static_cast<long>(start + window));
            out.push_back(make_example(inp, lab));
        }
    }
    return out;
}

std::vector<SequenceExample> build_gap_split(const std::vector<RawInteraction>& interactions,
                                             double gap_days, int input_len, int label_len) {
    std::vector<SequenceExample> out;
    for (auto& [user, rows] : group_by_user(interactions)) {
        (void)user;
        size_t cursor = 0;
        while (cursor + static_cast<size_t>(input_len) <= rows.size()) {
            const size_t input_end = cursor + static_cast<size_t>(input_len);
            const double last_t = rows[input_end - 1].time;
            size_t label_start = input_end;
            while (label_start < rows.size() && rows[label_start].time < last_t + gap_days)
                ++label_start;
            if (label_start + static_cast<size_t>(label_len) > rows.size()) break;
            std::vector<RawInteraction> inp(rows.begin() + static_cast<long>(cursor),
                                            rows.begin() + static_cast<long>(input_end));
            std::vector<RawInteraction> lab(
                rows.begin() + static_cast<long>(label_start),
                rows.begin() + static_cast<long>(label_start + static_cast<size_t>(label_len)));
            out.push_back(make_example(inp, lab));
            cursor = label_start + static_cast<size_t>(label_len);
        }
    }
    return out;
}

std::vector<int> sample_negatives(const std::vector<int>& user_history, int vocab_size, int n,
                                  Rng& rng) {
    std::unordered_set<int> excluded(user_history.begin(), user_history.end());
    if (vocab_size - static_cast<int>(excluded.size()) < n)
        fail("vocab_too_small", "cannot sample " + std::to_string(n) +
                                    " negatives from a vocabulary of " + std::to_string(vocab_size) +
                                    " with " + std::to_string(excluded.size()) + " items excluded");
    std::unordered_set<int> chosen;
    std::vector<int> out;
    out.reserve(static_cast<size_t>(n));
    while (static_cast<int>(out.size()) < n) {
        const int cand = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(vocab_size)));
        if (excluded.count(cand) != 0 || chosen.count(cand) != 0) continue;
        chosen.insert(cand);
        out.push_back(cand);
    }
    return out;
}

std::vector<int> mix_negatives(const std::vector<int>& observed, const std::vector<int>& random_negs,
                               int n) {
    const int want_observed = (n + 1) / 2; // odd counts round toward observed
    int take_observed = std::min<int>(want_observed, static_cast<int>(observed.size()));
    if (take_observed < want_observed)
        MIP_WARN("mix_negatives: only %d observed negatives for a target of %d; topping up with random",
                 take_observed, want_observed);
    std::vector<int> out(observed.begin(), observed.begin() + take_observed);
    for (int i = 0; static_cast<int>(out.size()) < n && i < static_cast<int>(random_negs.size()); ++i)
        out.push_back(random_negs[static_cast<size_t>(i)]);
    if (static_cast<int>(out.size()) < n)
        fail("vocab_too_small", "not enough negatives to mix");
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic multi-interest generator
// ---------------------------------------------------------------------------

void split_by_user(std::vector<SequenceExample> all, double train_frac, double valid_frac,
                   Rng& rng, DatasetSplit& out) {
    std::set<int> user_set;
    for (const auto& ex : all) user_set.insert(ex.user);
    std::vector<int> users(user_set.begin(), user_set.end());
    rng.shuffle(users);
    const size_t n_train = static_cast<size_t>(std::llround(train_frac * users.size()));
    const size_t n_valid = static_cast<size_t>(std::llround(valid_frac * users.size()));
    std::unordered_map<int, int> bucket; // 0 train, 1 valid, 2 test
    for (size_t i = 0; i < users.size(); ++i)
        bucket[users[i]] = i < n_train ? 0 : (i < n_train + n_valid ? 1 : 2);
    for (auto& ex : all) {
        switch (bucket[ex.user]) {
            case 0: out.train.push_back(std::move(ex)); break;
            case 1: out.valid.push_back(std::move(ex)); break;
            default: out.test.push_back(std::move(ex)); break;
        }
    }
}

DatasetSplit synth_generate(const SynthConfig& cfg) {
    if (cfg.num_interests < 1 || cfg.vocab_per_interest < 1 || cfg.num_users < 1)
        fail("config_invalid", "synth: counts must be positive");
    if (cfg.skew < 0.0 || cfg.skew >= 1.0)
        fail("config_invalid", "synth: skew must be in [0, 1)");
    Rng rng(cfg.seed);

    const int k = cfg.num_interests;
    const int vocab = k * cfg.vocab_per_interest;
    const int dim = cfg.embed_dim;

    // Well-separated centroids: random unit directions rescaled so that the
    // minimum pairwise distance is at least 10 * noise_sigma.
    Matrix centroids(k, dim);
    for (int g = 0; g < k; ++g) {
        double norm = 0.0;
        for (int c = 0; c < dim; ++c) {
            centroids(g, c) = rng.normal();
            norm += centroids(g, c) * centroids(g, c);
        }
        norm = std::sqrt(norm);
        for (int c = 0; c < dim; ++c) centroids(g, c) /= norm;
    }
    if (k > 1) {
        double min_dist = std::numeric_limits<double>::infinity();
        for (int a = 0; a < k; ++a)
            for (int b = a + 1; b < k; ++b) {
                double s = 0.0;
                for (int c = 0; c < dim; ++c) {
                    const double diff = centroids(a, c) - centroids(b, c);
                    s += diff * diff;
                }
                min_dist = std::min(min_dist, std::sqrt(s));
            }
        const double needed = std::max(10.0 * cfg.noise_sigma, 1e-6);
        if (min_dist < needed) scale_inplace(centroids, needed / min_dist);
    }

    DatasetSplit split;
    split.metadata_present = true;
    split.input_len = cfg.input_len;
    split.label_len = cfg.label_len;
    split.features = Matrix(vocab, dim);
    split.item_interest.resize(static_cast<size_t>(vocab));
    split.item_names.resize(static_cast<size_t>(vocab));
    for (int item = 0; item < vocab; ++item) {
        const int g = item / cfg.vocab_per_interest;
        split.item_interest[static_cast<size_t>(item)] = g;
        split.item_names[static_cast<size_t>(item)] = "i" + std::to_string(item);
        for (int c = 0; c < dim; ++c)
            split.features(item, c) = centroids(g, c) + cfg.noise_sigma * rng.normal();
    }

    const int draws = k * cfg.items_per_interest;
    std::vector<SequenceExample> all;
    for (int user = 0; user < cfg.num_users; ++user) {
        std::vector<double> pi;
        if (cfg.skew == 0.0) {
            pi.assign(static_cast<size_t>(k), 1.0 / k);
        } else {
            pi = rng.dirichlet(k, (1.0 - cfg.skew) / cfg.skew);
        }
        // Distinct draws: group by proportions, item uniform among unused.
        std::vector<std::vector<int>> unused(static_cast<size_t>(k));
        for (int g = 0; g < k; ++g) {
            auto& pool = unused[static_cast<size_t>(g)];
            pool.resize(static_cast<size_t>(cfg.vocab_per_interest));
            for (int i = 0; i < cfg.vocab_per_interest; ++i) pool[static_cast<size_t>(i)] = g * cfg.vocab_per_interest + i;
            rng.shuffle(pool);
        }
        std::vector<RawInteraction> rows;
        double t = 0.0;
        for (int i = 0; i < draws; ++i) {
            double total = 0.0;
            for (int g = 0; g < k; ++g)
                if (!unused[static_cast<size_t>(g)].empty()) total += pi[static_cast<size_t>(g)];
            if (total <= 0.0) {
                // Preferred groups exhausted; fall back to any remaining.
                int g = -1;
                for (int gg = 0; gg < k; ++gg)
                    if (!unused[static_cast<size_t>(gg)].empty()) g = gg;
                if (g < 0) break;
                RawInteraction r{user, unused[static_cast<size_t>(g)].back(), t, Engagement::positive};
                unused[static_cast<size_t>(g)].pop_back();
                rows.push_back(r);
            } else {
                const double u = rng.uniform() * total;
                double acc = 0.0;
                int g = -1;
                for (int gg = 0; gg < k; ++gg) {
                    if (unused[static_cast<size_t>(gg)].empty()) continue;
                    acc += pi[static_cast<size_t>(gg)];
                    if (u < acc) {
                        g = gg;
                        break;
                    }
                }
                if (g < 0)
                    for (int gg = k - 1; gg >= 0; --gg)
                        if (!unused[static_cast<size_t>(gg)].empty()) {
                            g = gg;
                            break;
                        }
                RawInteraction r{user, unused[static_cast<size_t>(g)].back(), t, Engagement::positive};
                unused[static_cast<size_t>(g)].pop_back();
                rows.push_back(r);
            }
            t += rng.uniform(0.5, 1.5);
        }

        const size_t window = static_cast<size_t>(cfg.input_len + cfg.label_len);
        std::unordered_set<int> history;
        for (const auto& r : rows) history.insert(r.item);
        for (size_t start = 0; start + window <= rows.size(); start += window) {
            std::vector<RawInteraction> inp(rows.begin() + static_cast<long>(start),
                                            rows.begin() + static_cast<long>(start) + cfg.input_len);
            std::vector<RawInteraction> lab(rows.begin() + static_cast<long>(start) + cfg.input_len,
                                            rows.begin() + static_cast<long>(start + window));
            SequenceExample ex = make_example(inp, lab);
            std::vector<int> hist(history.begin(), history.end());
            std::sort(hist.begin(), hist.end());
            ex.negatives = sample_negatives(hist, vocab, cfg.negatives, rng);
            all.push_back(std::move(ex));
        }
    }

    Rng split_rng(Rng::mix(cfg.seed, 0x9d1e7));
    split_by_user(std::move(all), cfg.train_fraction, cfg.valid_fraction, split_rng, split);
    return split;
}

// ---------------------------------------------------------------------------
// Split directory serialization
// ---------------------------------------------------------------------------

static void write_sequences(const std::string& path, const std::vector<SequenceExample>& seqs) {
    std::ofstream out(path);
    if (!out) fail("io_error", "cannot write " + path);
    out.precision(17);
    for (const auto& ex : seqs) {
        out << ex.user << '|';
        for (size_t i = 0; i < ex.items.size(); ++i) {
            if (i) out << ' ';
            out << ex.items[i] << ':' << ex.times[i];
        }
        out << '|';
        for (size_t i = 0; i < ex.positives.size(); ++i) {
            if (i) out << ' ';
            out << ex.positives[i];
        }
        out << '|';
        for (size_t i = 0; i < ex.negatives.size(); ++i) {
            if (i) out << ' ';
            out << ex.negatives[i];
        }
        out << '\n';
    }
}

static std::vector<SequenceExample> read_sequences(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("missing_file", "cannot open " + path);
    std::vector<SequenceExample> seqs;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> parts;
        std::string cur;
        for (char ch : line) {
            if (ch == '|') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        parts.push_back(cur);
        if (parts.size() != 4)
            fail("malformed_line", path + ":" + std::to_string(line_no) + ": expected 4 fields");
        SequenceExample ex;
        ex.user = std::stoi(parts[0]);
        std::istringstream items(parts[1]);
        std::string tok;
        while (items >> tok) {
            const auto colon = tok.find(':');
            ex.items.push_back(std::stoi(tok.substr(0, colon)));
            ex.times.push_back(std::stod(tok.substr(colon + 1)));
        }
        std::istringstream pos(parts[2]);
        int v;
        while (pos >> v) ex.positives.push_back(v);
        std::istringstream neg(parts[3]);
        while (neg >> v) ex.negatives.push_back(v);
        seqs.push_back(std::move(ex));
    }
    return seqs;
}

void save_split(const DatasetSplit& split, const std::string& dir, uint64_t seed,
                const std::string& config_hash) {
    fs::create_directories(dir);
    write_sequences(dir + "/train.txt", split.train);
    write_sequences(dir + "/valid.txt", split.valid);
    write_sequences(dir + "/test.txt", split.test);
    {
        std::ofstream vocab(dir + "/vocab.txt");
        for (const auto& name : split.item_names) vocab << name << '\n';
    }
    if (split.metadata_present) {
        std::ofstream feat(dir + "/features.txt");
        feat.precision(17);
        for (int i = 0; i < split.features.rows; ++i) {
            feat << split.item_names[static_cast<size_t>(i)];
            for (int c = 0; c < split.features.cols; ++c) feat << ',' << split.features(i, c);
            feat << '\n';
        }
    }
    if (!split.item_interest.empty()) {
        std::ofstream gi(dir + "/interests.txt");
        for (int g : split.item_interest) gi << g << '\n';
    }
    json manifest;
    manifest["version"] = 1;
    manifest["seed"] = seed;
    manifest["config_hash"] = config_hash;
    manifest["metadata_present"] = split.metadata_present;
    manifest["input_len"] = split.input_len;
    manifest["label_len"] = split.label_len;
    manifest["vocab_size"] = split.vocab_size();
    manifest["feature_dim"] = split.features.cols;
    manifest["counts"] = {{"train", split.train.size()},
                          {"valid", split.valid.size()},
                          {"test", split.test.size()}};
    std::ofstream mf(dir + "/manifest.json");
    mf << manifest.dump(2) << '\n';
}

DatasetSplit load_split(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) fail("missing_file", "cannot open " + dir + "/manifest.json");
    json manifest;
    try {
        mf >> manifest;
    } catch (const std::exception& e) {
        fail("malformed_manifest", std::string("bad manifest: ") + e.what());
    }
    if (!manifest.contains("version") || manifest["version"].get<int>() != 1)
        fail("version_mismatch", "split manifest version is not 1");

    DatasetSplit split;
    split.metadata_present = manifest["metadata_present"].get<bool>();
    split.input_len = manifest["input_len"].get<int>();
    split.label_len = manifest["label_len"].get<int>();

    std::ifstream vocab(dir + "/vocab.txt");
    if (!vocab) fail("missing_file", "cannot open " + dir + "/vocab.txt");
    std::string line;
    while (std::getline(vocab, line))
        if (!line.empty()) split.item_names.push_back(line);

    if (split.metadata_present) {
        std::ifstream feat(dir + "/features.txt");
        if (!feat) fail("missing_file", "cannot open " + dir + "/features.txt");
        std::vector<std::vector<double>> rows;
        while (std::getline(feat, line)) {
            if (line.empty()) continue;
            auto fields = split_fields(line);
            std::vector<double> vals;
            for (size_t i = 1; i < fields.size(); ++i) vals.push_back(std::stod(fields[i]));
            rows.push_back(std::move(vals));
        }
        if (rows.size() != split.item_names.size())
            fail("malformed_manifest", "features.txt row count does not match vocabulary");
        split.features = Matrix(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
        for (size_t i = 0; i < rows.size(); ++i)
            for (size_t c = 0; c < rows[i].size(); ++c)
                split.features(static_cast<int>(i), static_cast<int>(c)) = rows[i][c];
    }

    std::ifstream gi(dir + "/interests.txt");
    if (gi)
        while (std::getline(gi, line))
            if (!line.empty()) split.item_interest.push_back(std::stoi(line));

    split.train = read_sequences(dir + "/train.txt");
    split.valid = read_sequences(dir + "/valid.txt");
    split.test = read_sequences(dir + "/test.txt");
    return split;
}

} // namespace mip
