#include "core/config.hpp"

#include <fstream>
#include <sstream>

namespace ttapt {

using nlohmann::json;

Config Config::defaults() {
    Config c;
    c.effective = {
        {"seed", 1},
        // synthetic dataset
        {"n_classes", 8},
        {"pretrain_clips_per_class", 24},
        {"val_clips_per_class", 8},
        {"test_clips_per_class", 40},
        {"clip_seconds", 1.0},
        {"base_snr_db", 30.0},
        {"snr_jitter_db", 0.0},
        {"sample_rate", 44100},
        {"prompt_prefix_len", 3},
        // domain shift (snr frozen at 6 dB after pilot calibration)
        {"shift_kind", "none"},
        {"shift_snr_db", 6.0},
        {"shift_tilt_db_per_oct", -3.0},
        {"shift_gain_db", 0.0},
        {"crossdomain_shifts", "additive_noise,spectral_tilt,combined"},
        // mel frontend
        {"n_mels", 64},
        {"hop", 320},
        {"window", 1024},
        {"f_min", 50.0},
        {"f_max", 8000.0},
        {"log_floor", 1e-10},
        // augmentation
        {"n_views", 8},
        {"max_time_mask", 8},
        {"max_freq_mask", 4},
        // frozen model
        {"embed_dim", 64},
        {"text_dim", 64},
        {"audio_hidden", 128},
        {"text_hidden", 64},
        {"max_tokens", 16},
        {"tau", 0.07},
        // prompt nets
        {"domain_tokens", 4},
        {"mlp_depth", 3},
        {"mlp_hidden", 64},
        {"width_mult", 1},
        {"condition_on_mean", false},
        // pretraining
        {"pretrain_epochs", 300},
        {"pretrain_lr", 2e-3},
        {"pretrain_target_acc", 0.6},
        {"pretrain_snr_jitter_db", 10.0},
        {"pretrain_augmented_copies", 2},
        // adaptation
        {"lr", 1e-3},
        {"use_reference_lr", false}, // 1e-6, the scale used with large frozen backbones
        {"steps_per_batch", 1},
        {"batch_size", 5},
        {"lambda_contrastive", 1.0},
        {"mode", "episodic"},
        {"disable_cnet", false},
        {"disable_dnet", false},
        {"disable_contrastive", false},
        {"disable_entropy", false},
        // gradient check
        {"gradcheck_instances", 20},
        {"gradcheck_h", 1e-5},
        {"gradcheck_tol", 1e-4},
        // runtime
        {"jobs", 1},
        {"model_hash", ""},
    };
    return c;
}

static void merge_strict(json& dst, const json& src, const std::string& origin) {
    if (!src.is_object()) raise(ErrorCode::Config, origin + ": config must be a flat JSON object");
    for (const auto& [key, value] : src.items()) {
        auto it = dst.find(key);
        if (it == dst.end()) raise(ErrorCode::Config, origin + ": unknown config key '" + key + "'");
        if (value.is_object() || value.is_array())
            raise(ErrorCode::Config, origin + ": key '" + key + "' must be a scalar");
        // integer-valued keys accept integers only; floats accept both
        if (it->is_number_integer() && !value.is_number_integer())
            raise(ErrorCode::Config, origin + ": key '" + key + "' must be an integer");
        if (it->is_number_float() && !value.is_number())
            raise(ErrorCode::Config, origin + ": key '" + key + "' must be a number");
        if (it->is_boolean() && !value.is_boolean())
            raise(ErrorCode::Config, origin + ": key '" + key + "' must be a boolean");
        if (it->is_string() && !value.is_string())
            raise(ErrorCode::Config, origin + ": key '" + key + "' must be a string");
        if (it->is_number_float() && value.is_number_integer())
            *it = value.get<double>();
        else
            *it = value;
    }
}

Config Config::load(const std::string& path, const json& overrides) {
    Config c = defaults();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) raise(ErrorCode::Config, "cannot open config file '" + path + "'");
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded()) raise(ErrorCode::Config, "config file is not valid JSON: " + path);
        merge_strict(c.effective, doc, path);
    }
    if (!overrides.is_null() && !overrides.empty())
        merge_strict(c.effective, overrides, "override");

    // cross-field validation up front, before any work starts
    if (!c.effective.at("seed").is_number_unsigned() &&
        c.effective.at("seed").get<int64_t>() < 0)
        raise(ErrorCode::Config, "seed must be non-negative");
    if (c.effective.at("pretrain_epochs").get<int>() < 1)
        raise(ErrorCode::Config, "pretrain_epochs must be >= 1");
    if (c.effective.at("gradcheck_instances").get<int>() < 1)
        raise(ErrorCode::Config, "gradcheck_instances must be >= 1");
    if (c.effective.at("jobs").get<int>() < 1)
        raise(ErrorCode::Config, "jobs must be >= 1");
    c.mel().validate(c.effective.at("sample_rate").get<int>());
    c.dataset("test").validate();
    c.adapt().validate();
    c.model_dims().validate();
    if (c.dataset("test").clip_seconds * c.effective.at("sample_rate").get<int>() <
        c.mel().window)
        raise(ErrorCode::Config, "clip_seconds too short for the analysis window");
    const int l_c = c.effective.at("prompt_prefix_len").get<int>() + 1;
    const int l_d = c.adapt().disable_dnet ? 0 : c.effective.at("domain_tokens").get<int>();
    if (l_c + l_d > c.effective.at("max_tokens").get<int>())
        raise(ErrorCode::Config, "prompt_prefix_len + domain_tokens exceed max_tokens");
    if (c.effective.at("domain_tokens").get<int>() < 1)
        raise(ErrorCode::Config, "domain_tokens must be >= 1");
    (void)c.shift();
    (void)c.crossdomain_shifts();
    return c;
}

std::string Config::hash_hex() const {
    // the hash identifies a configuration across seeds: the seed travels in
    // its own report column, so it is excluded here
    nlohmann::json doc = effective;
    doc.erase("seed");
    const std::string s = doc.dump(); // nlohmann orders keys, so this is canonical
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

uint64_t Config::seed() const { return effective.at("seed").get<uint64_t>(); }

std::string Config::expected_model_hash() const {
    return effective.at("model_hash").get<std::string>();
}

MelConfig Config::mel() const {
    MelConfig m;
    m.n_mels = effective.at("n_mels");
    m.hop = effective.at("hop");
    m.window = effective.at("window");
    m.f_min = effective.at("f_min");
    m.f_max = effective.at("f_max");
    m.log_floor = effective.at("log_floor");
    return m;
}

SyntheticDatasetSpec Config::dataset(const std::string& role) const {
    SyntheticDatasetSpec s;
    s.n_classes = effective.at("n_classes");
    if (role == "pretrain")
        s.clips_per_class = effective.at("pretrain_clips_per_class");
    else if (role == "val")
        s.clips_per_class = effective.at("val_clips_per_class");
    else
        s.clips_per_class = effective.at("test_clips_per_class");
    s.clip_seconds = effective.at("clip_seconds");
    s.base_snr_db = effective.at("base_snr_db");
    s.snr_jitter_db = effective.at("snr_jitter_db");
    s.sample_rate = effective.at("sample_rate");
    s.prompt_prefix_len = effective.at("prompt_prefix_len");
    s.seed = stream_key(seed(), "data");
    s.role = role;
    return s;
}

DomainShiftSpec Config::shift() const {
    DomainShiftSpec s;
    s.kind = shift_kind_from_string(effective.at("shift_kind"));
    s.snr_db = effective.at("shift_snr_db");
    s.tilt_db_per_oct = effective.at("shift_tilt_db_per_oct");
    s.gain_db = effective.at("shift_gain_db");
    s.seed = stream_key(seed(), "shift");
    return s;
}

std::vector<DomainShiftSpec> Config::crossdomain_shifts() const {
    std::vector<DomainShiftSpec> out;
    std::stringstream ss(effective.at("crossdomain_shifts").get<std::string>());
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        DomainShiftSpec s = shift();
        s.kind = shift_kind_from_string(item);
        out.push_back(s);
    }
    if (out.empty()) raise(ErrorCode::Config, "crossdomain_shifts must name at least one shift");
    return out;
}

AdaptConfig Config::adapt() const {
    AdaptConfig a;
    a.lr = effective.at("use_reference_lr").get<bool>() ? 1e-6
                                                        : effective.at("lr").get<double>();
    a.steps_per_batch = effective.at("steps_per_batch");
    a.batch_size = effective.at("batch_size");
    a.lambda_contrastive = effective.at("lambda_contrastive");
    const std::string mode = effective.at("mode");
    if (mode == "episodic")
        a.mode = AdaptConfig::Mode::Episodic;
    else if (mode == "online")
        a.mode = AdaptConfig::Mode::Online;
    else
        raise(ErrorCode::Config, "mode must be 'episodic' or 'online'");
    a.disable_cnet = effective.at("disable_cnet");
    a.disable_dnet = effective.at("disable_dnet");
    a.disable_contrastive = effective.at("disable_contrastive");
    a.disable_entropy = effective.at("disable_entropy");
    a.condition_on_mean = effective.at("condition_on_mean");
    a.n_views = effective.at("n_views");
    a.max_time_mask = effective.at("max_time_mask");
    a.max_freq_mask = effective.at("max_freq_mask");
    a.seed = stream_key(seed(), "adapt");
    return a;
}

PromptNetConfig Config::prompt() const {
    PromptNetConfig p;
    p.mlp_depth = effective.at("mlp_depth");
    p.mlp_hidden = effective.at("mlp_hidden");
    p.width_mult = effective.at("width_mult");
    p.domain_tokens = effective.at("domain_tokens");
    p.seed = stream_key(seed(), "prompt_init");
    return p;
}

ModelDims Config::model_dims() const {
    ModelDims d;
    d.embed_dim = effective.at("embed_dim");
    d.text_dim = effective.at("text_dim");
    d.audio_hidden = effective.at("audio_hidden");
    d.text_hidden = effective.at("text_hidden");
    d.max_tokens = effective.at("max_tokens");
    d.n_mels = effective.at("n_mels");
    d.vocab = effective.at("prompt_prefix_len").get<int>() + effective.at("n_classes").get<int>();
    return d;
}

double Config::tau() const { return effective.at("tau"); }

PretrainPipelineConfig Config::pretrain_pipeline_config() const {
    PretrainPipelineConfig p;
    p.data = dataset("pretrain");
    p.data.snr_jitter_db = effective.at("pretrain_snr_jitter_db");
    p.mel = mel();
    p.dims = model_dims();
    p.tau = tau();
    p.pretrain.epochs = effective.at("pretrain_epochs");
    p.pretrain.lr = effective.at("pretrain_lr");
    p.pretrain.target_acc = effective.at("pretrain_target_acc");
    p.pretrain.seed = stream_key(seed(), "pretrain");
    p.val_clips_per_class = effective.at("val_clips_per_class");
    p.augmented_copies = effective.at("pretrain_augmented_copies");
    // pretraining masks stay at their own (wider) defaults, independent of
    // the adapt-time mask keys
    return p;
}

GradCheckConfig Config::gradcheck() const {
    GradCheckConfig g;
    g.instances = effective.at("gradcheck_instances");
    g.h = effective.at("gradcheck_h");
    g.tolerance = effective.at("gradcheck_tol");
    g.seed = stream_key(seed(), "gradcheck");
    return g;
}

int Config::jobs() const { return effective.at("jobs"); }

} // namespace ttapt
