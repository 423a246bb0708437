#include "mip/encoding.hpp"

#include <cmath>

#include "mip/error.hpp"

namespace mip {

EncodingKind encoding_kind_from_string(const std::string& s) {
    if (s == "none") return EncodingKind::none;
    if (s == "sinusoid") return EncodingKind::sinusoid;
    if (s == "onehot") return EncodingKind::onehot;
    if (s == "twohot") return EncodingKind::twohot;
    fail("config_invalid", "unknown encoding kind: " + s);
}

std::string to_string(EncodingKind k) {
    switch (k) {
        case EncodingKind::none: return "none";
        case EncodingKind::sinusoid: return "sinusoid";
        case EncodingKind::onehot: return "onehot";
        case EncodingKind::twohot: return "twohot";
    }
    return "?";
}

void EncodingConfig::validate(const std::string& where) const {
    if (kind == EncodingKind::sinusoid) {
        if (dim < 2 || dim % 2 != 0)
            fail("config_invalid", where + ": sinusoid dim must be even and >= 2, got " +
                                       std::to_string(dim));
        if (max_scale <= 0.0) fail("config_invalid", where + ": max_scale must be > 0");
    }
    if (kind == EncodingKind::onehot || kind == EncodingKind::twohot) {
        if (bucket_base <= 1.0) fail("config_invalid", where + ": bucket_base must be > 1");
        if (bucket_count < 2) fail("config_invalid", where + ": bucket_count must be >= 2");
    }
}

std::vector<double> sinusoid_encode(double t, const EncodingConfig& cfg) {
    cfg.validate("sinusoid_encode");
    std::vector<double> out(static_cast<size_t>(cfg.dim));
    for (int m = 0; 2 * m < cfg.dim; ++m) {
        const double freq = std::pow(cfg.max_scale, (2.0 * m) / cfg.dim);
        out[static_cast<size_t>(2 * m)] = std::sin(t / freq);
        out[static_cast<size_t>(2 * m + 1)] = std::cos(t / freq);
    }
    return out;
}

std::vector<double> onehot_encode(double t, const EncodingConfig& cfg) {
    cfg.validate("onehot_encode");
    std::vector<double> out(static_cast<size_t>(cfg.bucket_count), 0.0);
    // Walk the boundaries with an exact cumulative product so exact powers
    // of the base land in the right bucket.
    double upper = cfg.bucket_base;
    int idx = 0;
    while (idx < cfg.bucket_count - 1 && t >= upper) {
        upper *= cfg.bucket_base;
        ++idx;
    }
    out[static_cast<size_t>(idx)] = 1.0;
    return out;
}

std::vector<double> twohot_encode(double t, const EncodingConfig& cfg) {
    cfg.validate("twohot_encode");
    if (t < 0.0) fail("invalid_timestamp", "twohot_encode: negative timestamp");
    const int k = cfg.bucket_count;
    std::vector<double> out(static_cast<size_t>(k), 0.0);
    if (t == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const double x = std::log(t) / std::log(cfg.bucket_base);
    const double fl = std::floor(x);
    const int i = static_cast<int>(fl);
    const double frac = x - fl;
    auto clamp_idx = [k](int idx) { return idx < 0 ? 0 : (idx >= k ? k - 1 : idx); };
    // Weight frac goes on index i and 1-frac on index i+1; out-of-range mass
    // collapses onto the nearest valid bucket.
    out[static_cast<size_t>(clamp_idx(i))] += frac;
    out[static_cast<size_t>(clamp_idx(i + 1))] += 1.0 - frac;
    return out;
}

std::vector<double> encode_scalar(double t, const EncodingConfig& cfg) {
    switch (cfg.kind) {
        case EncodingKind::none: return {};
        case EncodingKind::sinusoid: return sinusoid_encode(t, cfg);
        case EncodingKind::onehot: return onehot_encode(t, cfg);
        case EncodingKind::twohot: return twohot_encode(t, cfg);
    }
    return {};
}

std::vector<double> build_interaction_embedding(const std::vector<double>& item, double t,
                                                int position, const EncodingConfig& temporal,
                                                const EncodingConfig& positional) {
    std::vector<double> e = item;
    const auto tau = encode_scalar(t, temporal);
    const auto rho = encode_scalar(static_cast<double>(position), positional);
    e.insert(e.end(), tau.begin(), tau.end());
    e.insert(e.end(), rho.begin(), rho.end());
    return e;
}

Matrix temporal_rows(const std::vector<double>& times, const EncodingConfig& temporal) {
    const int l = static_cast<int>(times.size());
    const int d = temporal.out_dim();
    Matrix m(l, d);
    for (int j = 0; j < l; ++j) {
        const auto row = encode_scalar(times[static_cast<size_t>(j)], temporal);
        for (int c = 0; c < d; ++c) m(j, c) = row[static_cast<size_t>(c)];
    }
    return m;
}

Matrix positional_rows(int l, const EncodingConfig& positional) {
    const int d = positional.out_dim();
    Matrix m(l, d);
    for (int j = 0; j < l; ++j) {
        const auto row = encode_scalar(static_cast<double>(j), positional);
        for (int c = 0; c < d; ++c) m(j, c) = row[static_cast<size_t>(c)];
    }
    return m;
}

} // namespace mip
