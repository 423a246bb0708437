#pragma once

#include <string>
#include <vector>

#include "mip/matrix.hpp"

namespace mip {

enum class EncodingKind { none, sinusoid, onehot, twohot };

EncodingKind encoding_kind_from_string(const std::string& s);
std::string to_string(EncodingKind k);

struct EncodingConfig {
    EncodingKind kind = EncodingKind::sinusoid;
    int dim = 8;              // vector length; even for sinusoid
    double max_scale = 1e4;   // sinusoid frequency scale
    double bucket_base = 2.0; // one-hot / two-hot exponential base
    int bucket_count = 16;    // k buckets, covering up to base^(k-1)

    int out_dim() const { return kind == EncodingKind::none ? 0 : dim_for_kind(); }
    void validate(const std::string& where) const;

private:
    int dim_for_kind() const {
        return (kind == EncodingKind::onehot || kind == EncodingKind::twohot) ? bucket_count
                                                                              : dim;
    }
};

/// Sinusoid encoding of a scalar (timestamp in days, or a position index):
/// out[2m] = sin(t / max_scale^(2m/dim)), out[2m+1] = cos(...).
std::vector<double> sinusoid_encode(double t, const EncodingConfig& cfg);

/// Exponential buckets [0,b), [b,b^2), ..., [b^(k-1), inf); one hot entry.
std::vector<double> onehot_encode(double t, const EncodingConfig& cfg);

/// Two adjacent bucket entries interpolated on the log_b scale; entries are
/// nonnegative and sum to 1. t=0 maps to the first bucket fully hot.
std::vector<double> twohot_encode(double t, const EncodingConfig& cfg);

std::vector<double> encode_scalar(double t, const EncodingConfig& cfg);

/// Interaction embedding e_j = [item ; temporal(t_j) ; positional(j)].
/// kind=none contributes zero length for that block.
std::vector<double> build_interaction_embedding(const std::vector<double>& item, double t,
                                                int position, const EncodingConfig& temporal,
                                                const EncodingConfig& positional);

/// Temporal encodings for a whole sequence, one row per interaction.
/// Returns an l x temporal.out_dim() matrix (0 cols when kind=none).
Matrix temporal_rows(const std::vector<double>& times, const EncodingConfig& temporal);

/// Positional encodings for positions 0..l-1.
Matrix positional_rows(int l, const EncodingConfig& positional);

} // namespace mip
