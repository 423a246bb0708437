#include "mip/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mip/error.hpp"

namespace mip {

using nlohmann::json;

uint64_t fnv1a64(const std::string& text) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

RunConfig RunConfig::defaults() { return RunConfig{}; }

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (known.find(it.key()) == known.end())
            fail("config_schema", "unknown key '" + where + it.key() + "'");
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            fail("config_schema", std::string("bad value type for '") + key + "'");
        }
    }
}

void parse_encoding(const json& j, const std::string& where, EncodingConfig& cfg) {
    reject_unknown(j, {"kind", "dim", "max_scale", "bucket_base", "bucket_count"}, where);
    if (j.contains("kind")) cfg.kind = encoding_kind_from_string(j.at("kind").get<std::string>());
    get_if(j, "dim", cfg.dim);
    get_if(j, "max_scale", cfg.max_scale);
    get_if(j, "bucket_base", cfg.bucket_base);
    get_if(j, "bucket_count", cfg.bucket_count);
}

} // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        fail("config_schema", std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    reject_unknown(j, {"model", "temporal", "positional", "clustering", "weights", "loss",
                       "training", "vocab_size"},
                   "");

    if (j.contains("model")) {
        const json& m = j.at("model");
        reject_unknown(m,
                       {"d", "heads", "d_model", "ffn_hidden", "weight_hidden", "lambda_train",
                        "dropout", "l_max", "metadata_present"},
                       "model.");
        get_if(m, "d", cfg.spec.model.d);
        get_if(m, "heads", cfg.spec.model.heads);
        get_if(m, "d_model", cfg.spec.model.d_model);
        get_if(m, "ffn_hidden", cfg.spec.model.ffn_hidden);
        get_if(m, "weight_hidden", cfg.spec.model.weight_hidden);
        get_if(m, "lambda_train", cfg.spec.model.lambda_train);
        get_if(m, "dropout", cfg.spec.model.dropout);
        get_if(m, "l_max", cfg.spec.model.l_max);
        get_if(m, "metadata_present", cfg.spec.model.metadata_present);
    }
    if (j.contains("temporal")) parse_encoding(j.at("temporal"), "temporal.", cfg.spec.temporal);
    if (j.contains("positional"))
        parse_encoding(j.at("positional"), "positional.", cfg.spec.positional);
    if (j.contains("clustering")) {
        const json& c = j.at("clustering");
        reject_unknown(c, {"method", "k", "eps", "min_pts", "threshold", "branching", "gamma",
                           "seed"},
                       "clustering.");
        if (c.contains("method"))
            cfg.spec.clusterer.method = cluster_method_from_string(c.at("method").get<std::string>());
        get_if(c, "k", cfg.spec.clusterer.k);
        get_if(c, "eps", cfg.spec.clusterer.eps);
        get_if(c, "min_pts", cfg.spec.clusterer.min_pts);
        get_if(c, "threshold", cfg.spec.clusterer.threshold);
        get_if(c, "branching", cfg.spec.clusterer.branching);
        get_if(c, "gamma", cfg.spec.clusterer.gamma);
        get_if(c, "seed", cfg.spec.clusterer.seed);
    }
    if (j.contains("weights")) {
        const json& w = j.at("weights");
        reject_unknown(w, {"mode", "epsilon"}, "weights.");
        if (w.contains("mode"))
            cfg.spec.weights.mode = weight_mode_from_string(w.at("mode").get<std::string>());
        get_if(w, "epsilon", cfg.spec.weights.epsilon);
    }
    if (j.contains("loss")) {
        const json& lo = j.at("loss");
        reject_unknown(lo, {"kind", "alpha", "learned_beta"}, "loss.");
        if (lo.contains("kind"))
            cfg.spec.loss.kind = loss_kind_from_string(lo.at("kind").get<std::string>());
        get_if(lo, "alpha", cfg.spec.loss.alpha);
        get_if(lo, "learned_beta", cfg.spec.loss.learned_beta);
    }
    if (j.contains("training")) {
        const json& t = j.at("training");
        reject_unknown(t,
                       {"stage", "max_epochs", "patience", "batch_size", "seed", "lr", "beta1",
                        "beta2", "eps"},
                       "training.");
        if (t.contains("stage"))
            cfg.train.stage = train_stage_from_string(t.at("stage").get<std::string>());
        get_if(t, "max_epochs", cfg.train.max_epochs);
        get_if(t, "patience", cfg.train.patience);
        get_if(t, "batch_size", cfg.train.batch_size);
        get_if(t, "seed", cfg.train.seed);
        get_if(t, "lr", cfg.train.opt.lr);
        get_if(t, "beta1", cfg.train.opt.beta1);
        get_if(t, "beta2", cfg.train.opt.beta2);
        get_if(t, "eps", cfg.train.opt.eps);
    }
    get_if(j, "vocab_size", cfg.spec.vocab_size);
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("missing_file", "cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string RunConfig::to_json_text() const {
    json j = json::parse(spec.to_json());
    j["training"] = {{"stage", to_string(train.stage)},
                     {"max_epochs", train.max_epochs},
                     {"patience", train.patience},
                     {"batch_size", train.batch_size},
                     {"seed", train.seed},
                     {"lr", train.opt.lr},
                     {"beta1", train.opt.beta1},
                     {"beta2", train.opt.beta2},
                     {"eps", train.opt.eps}};
    return j.dump(2);
}

std::string RunConfig::hash() const {
    const uint64_t h = fnv1a64(to_json_text());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace mip
