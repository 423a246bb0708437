#include "mip/param.hpp"

#include <cmath>

#include "mip/error.hpp"

namespace mip {

Param& ParamStore::add(const std::string& name, int rows, int cols, bool trainable) {
    if (find(name) != nullptr) fail("duplicate_param", "parameter already registered: " + name);
    params_.push_back(std::make_unique<Param>(name, rows, cols, trainable));
    return *params_.back();
}

Param& ParamStore::at(const std::string& name) {
    Param* p = find(name);
    if (p == nullptr) fail("unknown_param", "no such parameter: " + name);
    return *p;
}

const Param& ParamStore::at(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return *p;
    fail("unknown_param", "no such parameter: " + name);
}

Param* ParamStore::find(const std::string& name) {
    for (auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

const Param* ParamStore::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

void ParamStore::zero_grads() {
    for (auto& p : params_) p->grad.fill(0.0);
}

std::vector<Param*> ParamStore::all() {
    std::vector<Param*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Param*> ParamStore::all() const {
    std::vector<const Param*> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<Matrix> ParamStore::snapshot_values() const {
    std::vector<Matrix> snap;
    snap.reserve(params_.size());
    for (const auto& p : params_) snap.push_back(p->value);
    return snap;
}

void ParamStore::restore_values(const std::vector<Matrix>& snap) {
    if (snap.size() != params_.size())
        fail("snapshot_mismatch", "snapshot has wrong parameter count");
    for (size_t i = 0; i < snap.size(); ++i) {
        if (!snap[i].same_shape(params_[i]->value))
            fail("snapshot_mismatch", "snapshot shape mismatch for " + params_[i]->name);
        params_[i]->value = snap[i];
    }
}

void Adam::step(ParamStore& params) {
    auto all = params.all();
    if (m_.empty()) {
        m_.resize(all.size());
        v_.resize(all.size());
        for (size_t i = 0; i < all.size(); ++i) {
            m_[i] = Matrix(all[i]->value.rows, all[i]->value.cols);
            v_[i] = Matrix(all[i]->value.rows, all[i]->value.cols);
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (size_t i = 0; i < all.size(); ++i) {
        Param& p = *all[i];
        if (!p.trainable) continue;
        if (!p.grad.all_finite())
            fail("non_finite_grad", "non-finite gradient in parameter: " + p.name);
        for (size_t k = 0; k < p.value.data.size(); ++k) {
            const double g = p.grad.data[k];
            m_[i].data[k] = cfg_.beta1 * m_[i].data[k] + (1.0 - cfg_.beta1) * g;
            v_[i].data[k] = cfg_.beta2 * v_[i].data[k] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m_[i].data[k] / bc1;
            const double vhat = v_[i].data[k] / bc2;
            p.value.data[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void Adam::reset() {
    t_ = 0;
    m_.clear();
    v_.clear();
}

double finite_diff_check(const std::function<double()>& loss_fn, ParamStore& params, double h) {
    loss_fn(); // fills analytic grads
    std::vector<Matrix> analytic;
    for (auto* p : params.all()) analytic.push_back(p->grad);

    double max_rel = 0.0;
    auto all = params.all();
    for (size_t i = 0; i < all.size(); ++i) {
        Param& p = *all[i];
        if (!p.trainable) continue;
        for (size_t k = 0; k < p.value.data.size(); ++k) {
            const double orig = p.value.data[k];
            p.value.data[k] = orig + h;
            const double fp = loss_fn();
            p.value.data[k] = orig - h;
            const double fm = loss_fn();
            p.value.data[k] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[i].data[k];
            const double rel = std::abs(a - numeric) /
                               std::max({std::abs(a), std::abs(numeric), 1e-8});
            if (rel > max_rel) max_rel = rel;
        }
    }
    return max_rel;
}

void init_xavier_uniform(Matrix& w, int fan_in, int fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : w.data) v = rng.uniform(-bound, bound);
}

} // namespace mip
