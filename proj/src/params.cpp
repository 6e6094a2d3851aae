#include "afd/params.hpp"

#include <cmath>

#include "afd/errors.hpp"

namespace afd {

Tensor& ParamStore::create(const std::string& name, int rows, int cols) {
    return create(name, Tensor(rows, cols));
}

Tensor& ParamStore::create(const std::string& name, Tensor init) {
    if (arrays_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    if (!init.all_finite()) throw NumericalError("non-finite init for parameter " + name);
    auto [it, ok] = arrays_.emplace(name, std::move(init));
    (void)ok;
    return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
}

size_t ParamStore::scalar_count() const {
    size_t n = 0;
    for (const auto& [name, t] : arrays_) n += t.size();
    return n;
}

bool ParamStore::all_finite() const {
    for (const auto& [name, t] : arrays_) {
        if (!t.all_finite()) return false;
    }
    return true;
}

bool ParamStore::same_geometry(const ParamStore& other) const {
    if (arrays_.size() != other.arrays_.size()) return false;
    auto it = other.arrays_.begin();
    for (const auto& [name, t] : arrays_) {
        if (it->first != name || it->second.rows != t.rows || it->second.cols != t.cols) return false;
        ++it;
    }
    return true;
}

double AdamW::step(ParamStore& params, const std::unordered_map<std::string, Tensor>& grads) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) sq += squared_norm(g);
    const double gnorm = std::sqrt(sq);

    // lr 0 freezes parameters and moments alike
    if (opt_.lr == 0.0) return gnorm;

    if (m_.count() == 0) {
        for (const auto& [name, t] : params.arrays()) {
            m_.create(name, t.rows, t.cols);
            v_.create(name, t.rows, t.cols);
        }
    }

    double clip_factor = 1.0;
    if (opt_.clip_norm > 0.0 && gnorm > opt_.clip_norm) clip_factor = opt_.clip_norm / gnorm;

    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));

    for (auto& [name, theta] : params.arrays()) {
        auto git = grads.find(name);
        Tensor& m = m_.get(name);
        Tensor& v = v_.get(name);
        for (size_t i = 0; i < theta.data.size(); ++i) {
            const double g = (git == grads.end()) ? 0.0 : git->second.data[i] * clip_factor;
            m.data[i] = opt_.beta1 * m.data[i] + (1.0 - opt_.beta1) * g;
            v.data[i] = opt_.beta2 * v.data[i] + (1.0 - opt_.beta2) * g * g;
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            theta.data[i] -= opt_.lr * (mhat / (std::sqrt(vhat) + opt_.eps) + opt_.weight_decay * theta.data[i]);
        }
    }
    return gnorm;
}

void AdamW::restore(long long t, ParamStore m, ParamStore v) {
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace afd
