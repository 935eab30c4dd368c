#pragma once

#include <string>

#include <json.hpp>

#include "core/eval_harness.hpp"
#include "core/gradcheck.hpp"

namespace ttapt {

// Flat key-value configuration. Every knob of the pipeline lives here;
// unknown keys are rejected, defaults are merged, and the effective
// document is echoed (and hashed) into every report.
struct Config {
    nlohmann::json effective; // defaults merged with file + overrides

    static Config defaults();
    // path may be empty (defaults only); overrides is a flat JSON object
    static Config load(const std::string& path, const nlohmann::json& overrides);

    std::string dump() const { return effective.dump(); }
    std::string hash_hex() const;

    uint64_t seed() const;
    std::string expected_model_hash() const; // empty when not pinned

    MelConfig mel() const;
    SyntheticDatasetSpec dataset(const std::string& role) const;
    DomainShiftSpec shift() const;
    std::vector<DomainShiftSpec> crossdomain_shifts() const;
    AdaptConfig adapt() const;
    PromptNetConfig prompt() const;
    ModelDims model_dims() const;
    double tau() const;
    PretrainPipelineConfig pretrain_pipeline_config() const;
    GradCheckConfig gradcheck() const;
    int jobs() const;
};

} // namespace ttapt
