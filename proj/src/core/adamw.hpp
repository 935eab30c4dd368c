#pragma once

#include <cmath>
#include <cstdint>

#include "core/mat.hpp"

namespace ttapt {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

struct AdamWState {
    Vec m, v;
    int64_t step = 0;

    void init(size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        step = 0;
    }
};

// Decoupled-weight-decay Adam with bias correction:
//   w -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * w)
inline void adamw_step(double* w, const double* g, size_t n, AdamWState& st, double lr,
                       const AdamWConfig& cfg) {
    if (st.m.size() != n) raise(ErrorCode::Shape, "optimizer state size mismatch");
    ++st.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    for (size_t i = 0; i < n; ++i) {
        st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g[i];
        st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double m_hat = st.m[i] / bc1;
        const double v_hat = st.v[i] / bc2;
        w[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * w[i]);
    }
}

} // namespace ttapt
