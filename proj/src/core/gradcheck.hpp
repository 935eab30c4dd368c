#pragma once

#include <cstdint>

#include "core/tta_engine.hpp"

namespace ttapt {

// Central finite differences of the full adaptation loss against the
// analytic backward pass over every theta1/theta2 parameter. The forward
// path is shared; the analytic chain rule is the thing under test.

struct GradCheckConfig {
    int instances = 20;
    double h = 1e-5;
    double tolerance = 1e-4;
    uint64_t seed = 1;

    // small-instance shape
    int n_classes = 3;
    int n_views = 3;
    int batch_size = 2;
    int prompt_len = 2;
    int domain_tokens = 1;
    int mlp_depth = 3;
    bool condition_on_mean = false;
};

struct GradCheckResult {
    double max_rel_err = 0.0;
    int instances_run = 0;
    int params_checked = 0;
    bool ok = false;
};

GradCheckResult check_gradients(const GradCheckConfig& cfg);

} // namespace ttapt
