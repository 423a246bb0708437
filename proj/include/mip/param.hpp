#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mip/matrix.hpp"
#include "mip/rng.hpp"

namespace mip {

/// A named tensor with its gradient buffer.
struct Param {
    std::string name;
    Matrix value;
    Matrix grad;
    bool trainable = true;

    Param(std::string n, int rows, int cols, bool train)
        : name(std::move(n)), value(rows, cols), grad(rows, cols), trainable(train) {}
};

/// Registry of parameters in registration order. Addresses are stable.
class ParamStore {
public:
    Param& add(const std::string& name, int rows, int cols, bool trainable = true);
    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    Param* find(const std::string& name);
    const Param* find(const std::string& name) const;

    void zero_grads();
    std::vector<Param*> all();
    std::vector<const Param*> all() const;

    /// Deep copy of the values only (same names/shapes expected).
    std::vector<Matrix> snapshot_values() const;
    void restore_values(const std::vector<Matrix>& snap);

    size_t count() const { return params_.size(); }

private:
    std::vector<std::unique_ptr<Param>> params_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are created lazily per
/// parameter and persist across steps; reset() starts a fresh run.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(ParamStore& params);
    void reset();
    int steps_taken() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    int t_ = 0;
    std::vector<Matrix> m_, v_; // indexed by registration order
};

/// Central-difference gradient check. `loss_fn` must run a deterministic
/// forward+backward (dropout off) leaving analytic grads in the store, and
/// return the loss. Returns the max relative error over every trainable
/// scalar: |a - n| / max(|a|, |n|, 1e-8).
double finite_diff_check(const std::function<double()>& loss_fn, ParamStore& params,
                         double h = 1e-5);

void init_xavier_uniform(Matrix& w, int fan_in, int fan_out, Rng& rng);

} // namespace mip
