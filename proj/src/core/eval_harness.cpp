#include "core/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

namespace ttapt {

namespace fs = std::filesystem;
using nlohmann::json;

static constexpr double kPi = 3.14159265358979323846264338327950288;

void SyntheticDatasetSpec::validate() const {
    if (n_classes < 2) raise(ErrorCode::Config, "n_classes must be >= 2");
    if (clips_per_class < 1) raise(ErrorCode::Config, "clips_per_class must be >= 1");
    if (clip_seconds <= 0.0) raise(ErrorCode::Config, "clip_seconds must be positive");
    if (snr_jitter_db < 0.0) raise(ErrorCode::Config, "snr_jitter_db must be >= 0");
    if (sample_rate <= 0) raise(ErrorCode::Config, "sample_rate must be positive");
    if (prompt_prefix_len < 1) raise(ErrorCode::Config, "prompt_prefix_len must be >= 1");
}

std::vector<ClassSignature> class_signatures(const SyntheticDatasetSpec& spec) {
    spec.validate();
    // log-spaced slots in [300, 5500] Hz keep signatures pairwise distinct
    // and inside the 50-8000 Hz analysis band
    const double lo = 300.0, hi = 5500.0;
    std::vector<ClassSignature> sigs(spec.n_classes);
    Rng rng(spec.seed, "class_signatures");
    for (int c = 0; c < spec.n_classes; ++c) {
        const double frac = (c + 0.5) / spec.n_classes;
        const double base = lo * std::pow(hi / lo, frac);
        sigs[c].f1 = base * rng.uniform(0.95, 1.05);
        sigs[c].f2 = std::min(sigs[c].f1 * rng.uniform(1.4, 1.8), 7500.0);
        sigs[c].am_rate = 2.0 + c * 1.5 + rng.uniform(0.0, 0.5);
    }
    for (int a = 0; a < spec.n_classes; ++a)
        for (int b = a + 1; b < spec.n_classes; ++b)
            if (std::abs(sigs[a].f1 - sigs[b].f1) < 1.0)
                raise(ErrorCode::Config, "class signatures collide; pick another seed");
    return sigs;
}

static double rms(const std::vector<float>& x) {
    double s = 0.0;
    for (float v : x) s += static_cast<double>(v) * v;
    return std::sqrt(s / std::max<size_t>(1, x.size()));
}

Dataset gen_dataset(const SyntheticDatasetSpec& spec) {
    const auto sigs = class_signatures(spec);
    const int n_samples = static_cast<int>(spec.clip_seconds * spec.sample_rate);

    Dataset ds;
    ds.sample_rate = spec.sample_rate;
    ds.n_classes = spec.n_classes;
    for (int c = 0; c < spec.n_classes; ++c) {
        char name[32];
        std::snprintf(name, sizeof(name), "class_%02d", c);
        ds.class_names.emplace_back(name);
        std::vector<int> ids;
        for (int p = 0; p < spec.prompt_prefix_len; ++p) ids.push_back(p);
        ids.push_back(spec.prompt_prefix_len + c); // class identity token
        ds.class_tokens.push_back(std::move(ids));
    }

    const uint64_t clip_key = stream_key(stream_key(spec.seed, "clip"), spec.role);
    for (int c = 0; c < spec.n_classes; ++c) {
        for (int j = 0; j < spec.clips_per_class; ++j) {
            Rng rng(hash_combine(clip_key,
                                 hash_combine(static_cast<uint64_t>(c), static_cast<uint64_t>(j))));
            const double snr_db =
                spec.base_snr_db + rng.uniform(-spec.snr_jitter_db, spec.snr_jitter_db);
            const double noise_gain = std::pow(10.0, -snr_db / 20.0);
            const double p1 = rng.uniform(0.0, 2.0 * kPi);
            const double p2 = rng.uniform(0.0, 2.0 * kPi);
            const double pa = rng.uniform(0.0, 2.0 * kPi);

            LabeledClip clip;
            clip.label = c;
            clip.samples.resize(n_samples);
            const double w1 = 2.0 * kPi * sigs[c].f1 / spec.sample_rate;
            const double w2 = 2.0 * kPi * sigs[c].f2 / spec.sample_rate;
            const double wa = 2.0 * kPi * sigs[c].am_rate / spec.sample_rate;
            double sig_pow = 0.0;
            for (int t = 0; t < n_samples; ++t) {
                const double am = 0.65 + 0.35 * std::sin(wa * t + pa);
                const double s = 0.4 * (std::sin(w1 * t + p1) + 0.6 * std::sin(w2 * t + p2)) * am;
                clip.samples[t] = static_cast<float>(s);
                sig_pow += s * s;
            }
            const double noise_std = std::sqrt(sig_pow / n_samples) * noise_gain;
            for (int t = 0; t < n_samples; ++t) {
                double v = clip.samples[t] + noise_std * rng.gaussian();
                clip.samples[t] = static_cast<float>(std::clamp(v, -1.0, 1.0));
            }
            ds.clips.push_back(std::move(clip));
        }
    }

    // manifest order is a seeded shuffle; adaptation batches are consecutive
    Rng order_rng(stream_key(stream_key(spec.seed, "order"), spec.role));
    for (size_t i = ds.clips.size(); i > 1; --i)
        std::swap(ds.clips[i - 1], ds.clips[order_rng.below(i)]);
    return ds;
}

ShiftKind shift_kind_from_string(const std::string& s) {
    if (s == "none") return ShiftKind::None;
    if (s == "additive_noise") return ShiftKind::AdditiveNoise;
    if (s == "spectral_tilt") return ShiftKind::SpectralTilt;
    if (s == "gain") return ShiftKind::Gain;
    if (s == "combined") return ShiftKind::Combined;
    raise(ErrorCode::Config, "unknown shift kind: " + s);
}

std::string shift_kind_name(ShiftKind k) {
    switch (k) {
        case ShiftKind::None: return "none";
        case ShiftKind::AdditiveNoise: return "additive_noise";
        case ShiftKind::SpectralTilt: return "spectral_tilt";
        case ShiftKind::Gain: return "gain";
        case ShiftKind::Combined: return "combined";
    }
    return "none";
}

json DomainShiftSpec::echo() const {
    if (kind == ShiftKind::None) return "none";
    json j = {{"kind", shift_kind_name(kind)}};
    if (kind == ShiftKind::AdditiveNoise || kind == ShiftKind::Combined) j["snr_db"] = snr_db;
    if (kind == ShiftKind::SpectralTilt || kind == ShiftKind::Combined)
        j["tilt_db_per_oct"] = tilt_db_per_oct;
    if (kind == ShiftKind::Gain || kind == ShiftKind::Combined) j["gain_db"] = gain_db;
    return j;
}

static void shift_gain(std::vector<float>& x, double gain_db) {
    const double g = std::pow(10.0, gain_db / 20.0);
    for (auto& v : x) v = static_cast<float>(std::clamp(static_cast<double>(v) * g, -1.0, 1.0));
}

static void shift_noise(std::vector<float>& x, double snr_db, Rng& rng) {
    const double noise_std = rms(x) * std::pow(10.0, -snr_db / 20.0);
    for (auto& v : x)
        v = static_cast<float>(std::clamp(static_cast<double>(v) + noise_std * rng.gaussian(),
                                          -1.0, 1.0));
}

// first-order spectral tilt around 1 kHz applied in the frequency domain
static void shift_tilt(std::vector<float>& x, double tilt_db_per_oct, int sample_rate) {
    size_t n = 1;
    while (n < x.size()) n <<= 1;
    std::vector<double> re(n, 0.0), im(n, 0.0);
    for (size_t i = 0; i < x.size(); ++i) re[i] = x[i];
    fft_radix2(re, im);

    for (size_t k = 0; k <= n / 2; ++k) {
        const double f = std::max(20.0, static_cast<double>(k) * sample_rate / n);
        const double g = std::pow(10.0, tilt_db_per_oct * std::log2(f / 1000.0) / 20.0);
        re[k] *= g;
        im[k] *= g;
        if (k > 0 && k < n / 2) { // keep conjugate symmetry
            re[n - k] *= g;
            im[n - k] *= g;
        }
    }

    // inverse transform: conjugate, forward FFT, conjugate, scale
    for (auto& v : im) v = -v;
    fft_radix2(re, im);
    const double inv = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < x.size(); ++i)
        x[i] = static_cast<float>(std::clamp(re[i] * inv, -1.0, 1.0));
}

Dataset apply_shift(const Dataset& ds, const DomainShiftSpec& shift) {
    Dataset out = ds;
    out.shift_echo = shift.echo();
    if (shift.kind == ShiftKind::None) return out;

    for (size_t i = 0; i < out.clips.size(); ++i) {
        auto& x = out.clips[i].samples;
        Rng rng(hash_combine(stream_key(shift.seed, "shift"), static_cast<uint64_t>(i)));
        switch (shift.kind) {
            case ShiftKind::Gain:
                shift_gain(x, shift.gain_db);
                break;
            case ShiftKind::AdditiveNoise:
                shift_noise(x, shift.snr_db, rng);
                break;
            case ShiftKind::SpectralTilt:
                shift_tilt(x, shift.tilt_db_per_oct, out.sample_rate);
                break;
            case ShiftKind::Combined:
                if (shift.gain_db != 0.0) shift_gain(x, shift.gain_db);
                shift_tilt(x, shift.tilt_db_per_oct, out.sample_rate);
                shift_noise(x, shift.snr_db, rng);
                break;
            case ShiftKind::None:
                break;
        }
    }
    return out;
}

// ---- dataset directory -------------------------------------------------------

bool Dataset::has_labels() const {
    for (const auto& c : clips)
        if (c.label < 0) return false;
    return !clips.empty();
}

void write_dataset(const std::string& dir, const Dataset& ds, bool include_labels) {
    fs::create_directories(fs::path(dir) / "wavs");

    json manifest = {
        {"schema_version", kManifestSchemaVersion},
        {"kind", "dataset"},
        {"sample_rate", ds.sample_rate},
        {"n_classes", ds.n_classes},
        {"class_names", ds.class_names},
        {"prompt_tokens", ds.class_tokens},
        {"shift", ds.shift_echo},
    };
    json clips = json::array();
    for (size_t i = 0; i < ds.clips.size(); ++i) {
        char rel[64];
        std::snprintf(rel, sizeof(rel), "wavs/clip_%05zu.f32", i);
        write_f32_file((fs::path(dir) / rel).string(), ds.clips[i].samples);
        json entry = {{"path", rel}, {"sample_rate", ds.sample_rate}};
        if (include_labels && ds.clips[i].label >= 0) entry["label"] = ds.clips[i].label;
        clips.push_back(entry);
    }
    manifest["clips"] = clips;

    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) raise(ErrorCode::Config, "cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) raise(ErrorCode::Config, "cannot open manifest in " + dir);
    json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded()) raise(ErrorCode::Schema, "corrupt manifest in " + dir);
    if (manifest.value("schema_version", -1) != kManifestSchemaVersion)
        raise(ErrorCode::Schema, "unsupported manifest schema_version in " + dir);

    Dataset ds;
    try {
        ds.sample_rate = manifest.at("sample_rate");
        ds.n_classes = manifest.at("n_classes");
        ds.class_names = manifest.at("class_names").get<std::vector<std::string>>();
        ds.class_tokens = manifest.at("prompt_tokens").get<std::vector<std::vector<int>>>();
        ds.shift_echo = manifest.value("shift", json("none"));
        for (const auto& entry : manifest.at("clips")) {
            if (entry.value("sample_rate", ds.sample_rate) != ds.sample_rate)
                raise(ErrorCode::Schema, "mixed sample rates in manifest: " + dir);
            LabeledClip clip;
            clip.samples =
                read_f32_file((fs::path(dir) / entry.at("path").get<std::string>()).string());
            clip.label = entry.value("label", -1);
            if (clip.label >= ds.n_classes)
                raise(ErrorCode::Schema, "label out of range in manifest");
            ds.clips.push_back(std::move(clip));
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::Schema, "malformed manifest in " + dir + ": " + e.what());
    }
    if (ds.clips.empty()) raise(ErrorCode::Config, "dataset has no clips: " + dir);
    return ds;
}

// ---- evaluation ---------------------------------------------------------------

Metrics compute_metrics(const std::vector<Prediction>& preds, const Dataset& ds) {
    Metrics m;
    std::vector<int> class_correct(ds.n_classes, 0), class_total(ds.n_classes, 0);
    for (const auto& p : preds) {
        const int label = ds.clips.at(p.clip_id).label;
        if (label < 0) raise(ErrorCode::Config, "cannot score an unlabeled dataset");
        ++m.n_total;
        ++class_total[label];
        if (p.predicted == label) {
            ++m.n_correct;
            ++class_correct[label];
        }
    }
    m.per_class_accuracy.resize(ds.n_classes);
    for (int c = 0; c < ds.n_classes; ++c)
        m.per_class_accuracy[c] =
            class_total[c] ? static_cast<double>(class_correct[c]) / class_total[c] : 0.0;
    return m;
}

std::vector<EngineSample> engine_samples(const Dataset& ds, const ToyModel& model,
                                         const MelConfig& mel_cfg) {
    std::vector<EngineSample> out;
    out.reserve(ds.clips.size());
    for (size_t i = 0; i < ds.clips.size(); ++i) {
        Waveform w{ds.clips[i].samples, ds.sample_rate};
        EngineSample s;
        s.clip_id = static_cast<int>(i);
        s.mel = normalize(compute_mel(w, mel_cfg), model.norm);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Prediction> zero_shot_predictions(const Dataset& ds, const ToyModel& model,
                                              const MelConfig& mel_cfg) {
    std::vector<Prediction> preds;
    preds.reserve(ds.clips.size());
    for (size_t i = 0; i < ds.clips.size(); ++i) {
        Waveform w{ds.clips[i].samples, ds.sample_rate};
        const MelSpectrogram mel = normalize(compute_mel(w, mel_cfg), model.norm);
        const Vec v = encode_audio(model, mel);
        const Vec dist = zero_shot_distribution(model, v, ds.class_tokens);
        preds.push_back({static_cast<int>(i), argmax_lowest_tie(dist)});
    }
    return preds;
}

Metrics evaluate_zero_shot(const Dataset& ds, const ToyModel& model, const MelConfig& mel_cfg) {
    return compute_metrics(zero_shot_predictions(ds, model, mel_cfg), ds);
}

RunReport evaluate_tta(const Dataset& ds, const ToyModel& model, const EvalContext& ctx,
                       TraceWriter* trace, PromptState* out_state, AdaptRun* out_run) {
    ctx.adapt.validate();
    PromptState state = init_prompt_state(model, ds.class_tokens, ctx.prompt);
    const auto samples = engine_samples(ds, model, ctx.mel);

    AdaptRun run = run_adaptation(model, state, samples, ctx.adapt, trace);

    RunReport r;
    r.seed = ctx.master_seed;
    r.config_hash = ctx.config_hash;
    r.mlp_depth = ctx.prompt.mlp_depth;
    r.width_mult = ctx.prompt.width_mult;
    r.adapt_echo = ctx.adapt;
    if (!run.trace.empty()) {
        r.loss_first = run.trace.front().loss.final_loss;
        r.loss_final = run.trace.back().loss.final_loss;
    }
    if (ds.has_labels()) {
        r.zero_shot_acc = evaluate_zero_shot(ds, model, ctx.mel).accuracy();
        r.adapted_acc = compute_metrics(run.predictions, ds).accuracy();
    }
    if (out_state) *out_state = std::move(state);
    if (out_run) *out_run = std::move(run);
    return r;
}

// ---- matrices -----------------------------------------------------------------

namespace {

template <typename F>
void run_cells(int n_cells, int jobs, F&& body) {
    if (jobs <= 1) {
        for (int i = 0; i < n_cells; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int i = next.fetch_add(1); i < n_cells; i = next.fetch_add(1)) body(i);
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min(jobs, n_cells);
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

} // namespace

std::vector<RunReport> ablation_matrix(const Dataset& ds, const ToyModel& model,
                                       const EvalContext& base, int jobs) {
    static const char* variants[5] = {"full", "no_cnet", "no_dnet", "no_contrastive",
                                      "no_entropy"};
    struct Cell {
        int variant, depth, width;
    };
    std::vector<Cell> cells;
    for (int v = 0; v < 5; ++v)
        for (int depth = 1; depth <= 4; ++depth)
            for (int width = 1; width <= 2; ++width) cells.push_back({v, depth, width});

    std::vector<RunReport> rows(cells.size());
    run_cells(static_cast<int>(cells.size()), jobs, [&](int i) {
        const Cell& cell = cells[i];
        EvalContext ctx = base;
        ctx.prompt.mlp_depth = cell.depth;
        ctx.prompt.width_mult = cell.width;
        ctx.adapt.disable_cnet = (std::string(variants[cell.variant]) == "no_cnet");
        ctx.adapt.disable_dnet = (std::string(variants[cell.variant]) == "no_dnet");
        ctx.adapt.disable_contrastive = (std::string(variants[cell.variant]) == "no_contrastive");
        ctx.adapt.disable_entropy = (std::string(variants[cell.variant]) == "no_entropy");
        RunReport r = evaluate_tta(ds, model, ctx);
        r.kind = "ablate";
        r.variant = variants[cell.variant];
        rows[i] = std::move(r);
    });
    return rows;
}

std::vector<CrossDomainCell> cross_domain_matrix(const Dataset& clean,
                                                 const std::vector<DomainShiftSpec>& shifts,
                                                 const ToyModel& model, const EvalContext& ctx,
                                                 int jobs) {
    if (shifts.size() < 2) raise(ErrorCode::Config, "cross-domain matrix needs >= 2 shifts");
    const int n = static_cast<int>(shifts.size());

    // shared per-shift artifacts: datasets, engine samples, zero-shot metrics
    std::vector<Dataset> shifted;
    shifted.reserve(n);
    for (const auto& s : shifts) shifted.push_back(apply_shift(clean, s));

    std::vector<std::vector<EngineSample>> samples(n);
    std::vector<double> zero_shot(n);
    run_cells(n, jobs, [&](int b) {
        samples[b] = engine_samples(shifted[b], model, ctx.mel);
        zero_shot[b] = evaluate_zero_shot(shifted[b], model, ctx.mel).accuracy();
    });

    std::vector<std::vector<CrossDomainCell>> per_row(n);
    run_cells(n, jobs, [&](int a) {
        // adapt online over shift a's unlabeled stream, then freeze
        EvalContext row_ctx = ctx;
        row_ctx.adapt.mode = AdaptConfig::Mode::Online;
        PromptState adapted;
        evaluate_tta(shifted[a], model, row_ctx, nullptr, &adapted);

        for (int b = 0; b < n; ++b) {
            CrossDomainCell cell;
            cell.adapt_shift = shift_kind_name(shifts[a].kind);
            cell.test_shift = shift_kind_name(shifts[b].kind);
            const auto preds = predict_all(model, adapted, samples[b], row_ctx.adapt);
            cell.adapted_acc = compute_metrics(preds, shifted[b]).accuracy();
            cell.zero_shot_acc = zero_shot[b];
            per_row[a].push_back(std::move(cell));
        }
    });

    std::vector<CrossDomainCell> cells;
    for (auto& row : per_row)
        for (auto& c : row) cells.push_back(std::move(c));
    return cells;
}

// ---- CSV ------------------------------------------------------------------------

static std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

static std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

std::string run_csv_header() {
    return "schema_version,kind,config_hash,seed,variant,mlp_depth,width_mult,mode,"
           "batch_size,steps_per_batch,lr,lambda_contrastive,n_views,zero_shot_acc,"
           "adapted_acc,delta,loss_first,loss_final";
}

std::string run_csv_row(const RunReport& r) {
    std::ostringstream os;
    os << kCsvSchemaVersion << ',' << r.kind << ',' << r.config_hash << ',' << r.seed << ','
       << r.variant << ',' << r.mlp_depth << ',' << r.width_mult << ','
       << (r.adapt_echo.mode == AdaptConfig::Mode::Episodic ? "episodic" : "online") << ','
       << r.adapt_echo.batch_size << ',' << r.adapt_echo.steps_per_batch << ','
       << fmt(r.adapt_echo.lr) << ',' << fmt(r.adapt_echo.lambda_contrastive) << ','
       << r.adapt_echo.n_views << ',' << fmt_opt(r.zero_shot_acc) << ','
       << fmt_opt(r.adapted_acc) << ',' << fmt_opt(r.delta()) << ',' << fmt_opt(r.loss_first)
       << ',' << fmt_opt(r.loss_final);
    return os.str();
}

void write_run_csv(const std::string& path, const std::vector<RunReport>& rows) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::Config, "cannot write: " + path);
    out << run_csv_header() << "\n";
    for (const auto& r : rows) out << run_csv_row(r) << "\n";
}

std::string crossdomain_csv_header() {
    return "schema_version,kind,config_hash,seed,adapt_shift,test_shift,zero_shot_acc,"
           "adapted_acc,delta";
}

void write_crossdomain_csv(const std::string& path, const std::string& config_hash,
                           uint64_t seed, const std::vector<CrossDomainCell>& cells) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::Config, "cannot write: " + path);
    out << crossdomain_csv_header() << "\n";

    std::string cur_row;
    double delta_sum = 0.0;
    int delta_n = 0;
    auto flush_avg = [&]() {
        if (delta_n == 0) return;
        out << kCsvSchemaVersion << ",crossdomain," << config_hash << ',' << seed << ','
            << cur_row << ",avg,,," << fmt(delta_sum / delta_n) << "\n";
        delta_sum = 0.0;
        delta_n = 0;
    };
    for (const auto& c : cells) {
        if (c.adapt_shift != cur_row) {
            flush_avg();
            cur_row = c.adapt_shift;
        }
        out << kCsvSchemaVersion << ",crossdomain," << config_hash << ',' << seed << ','
            << c.adapt_shift << ',' << c.test_shift << ',' << fmt(c.zero_shot_acc) << ','
            << fmt(c.adapted_acc) << ',' << fmt(c.adapted_acc - c.zero_shot_acc) << "\n";
        delta_sum += c.adapted_acc - c.zero_shot_acc;
        ++delta_n;
    }
    flush_avg();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

void merge_report_csvs(const std::vector<std::string>& inputs, const std::string& out_path) {
    if (inputs.empty()) raise(ErrorCode::Config, "report needs at least one input CSV");

    struct Key {
        std::string config_hash, variant;
        int depth = 0, width = 0;
        bool operator<(const Key& o) const {
            return std::tie(config_hash, variant, depth, width) <
                   std::tie(o.config_hash, o.variant, o.depth, o.width);
        }
    };
    struct Acc {
        int n = 0;
        double zs = 0.0, ad = 0.0;
        int n_scored = 0;
    };
    std::map<Key, Acc> groups;

    const auto expected_header = run_csv_header();
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) raise(ErrorCode::Config, "cannot open: " + path);
        std::string line;
        if (!std::getline(in, line) || line != expected_header)
            raise(ErrorCode::Schema, "unexpected CSV header in " + path);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto f = split_csv_line(line);
            if (f.size() != 18) raise(ErrorCode::Schema, "malformed CSV row in " + path);
            if (f[0] != std::to_string(kCsvSchemaVersion))
                raise(ErrorCode::Schema, "schema_version mismatch in " + path);
            try {
                Key k{f[2], f[4], std::stoi(f[5]), std::stoi(f[6])};
                Acc& a = groups[k];
                ++a.n;
                if (!f[13].empty() && !f[14].empty()) {
                    a.zs += std::stod(f[13]);
                    a.ad += std::stod(f[14]);
                    ++a.n_scored;
                }
            } catch (const std::logic_error&) {
                raise(ErrorCode::Schema, "malformed CSV row in " + path);
            }
        }
    }

    std::ofstream out(out_path);
    if (!out) raise(ErrorCode::Config, "cannot write: " + out_path);
    out << "schema_version,kind,config_hash,variant,mlp_depth,width_mult,n_seeds,"
           "mean_zero_shot,mean_adapted,mean_delta\n";
    for (const auto& [k, a] : groups) {
        out << kCsvSchemaVersion << ",report," << k.config_hash << ',' << k.variant << ','
            << k.depth << ',' << k.width << ',' << a.n << ',';
        if (a.n_scored > 0) {
            const double zs = a.zs / a.n_scored, ad = a.ad / a.n_scored;
            out << fmt(zs) << ',' << fmt(ad) << ',' << fmt(ad - zs);
        } else {
            out << ",,";
        }
        out << "\n";
    }
}

// ---- pretraining pipeline --------------------------------------------------------

PretrainPipelineResult pretrain_pipeline(const PretrainPipelineConfig& cfg) {
    // same seed -> same class signatures; the role keeps the clips disjoint
    SyntheticDatasetSpec train_spec = cfg.data;
    train_spec.role = "pretrain";
    SyntheticDatasetSpec val_spec = cfg.data;
    val_spec.role = "val";
    val_spec.clips_per_class = cfg.val_clips_per_class;

    const Dataset train_ds = gen_dataset(train_spec);
    const Dataset val_ds = gen_dataset(val_spec);

    std::vector<MelSpectrogram> train_mels;
    train_mels.reserve(train_ds.clips.size());
    for (const auto& c : train_ds.clips)
        train_mels.push_back(compute_mel(Waveform{c.samples, train_ds.sample_rate}, cfg.mel));

    const NormStats stats = compute_norm_stats(train_mels);

    ModelDims dims = cfg.dims;
    dims.n_mels = cfg.mel.n_mels;
    dims.vocab = cfg.data.prompt_prefix_len + cfg.data.n_classes;
    ToyModel model = init_model(dims, cfg.tau, cfg.pretrain.seed);
    model.norm = stats;

    std::vector<PretrainExample> train;
    train.reserve(train_ds.clips.size() * (1 + cfg.augmented_copies));
    for (size_t i = 0; i < train_ds.clips.size(); ++i) {
        const MelSpectrogram norm_mel = normalize(train_mels[i], stats);
        AugmentConfig acfg;
        acfg.n_views = 1 + cfg.augmented_copies;
        acfg.max_time_mask = cfg.max_time_mask;
        acfg.max_freq_mask = cfg.max_freq_mask;
        acfg.seed = hash_combine(stream_key(cfg.pretrain.seed, "pretrain_aug"),
                                 static_cast<uint64_t>(i));
        const ViewSet vs = make_views(norm_mel, acfg);
        for (const auto& view : vs.views)
            train.push_back({pooled_stats(view), train_ds.clips[i].label});
    }

    std::vector<PretrainExample> val;
    val.reserve(val_ds.clips.size());
    for (const auto& c : val_ds.clips) {
        const MelSpectrogram mel = compute_mel(Waveform{c.samples, val_ds.sample_rate}, cfg.mel);
        val.push_back({pooled_stats(normalize(mel, stats)), c.label});
    }

    PretrainPipelineResult res{std::move(model), {}};
    res.stats = pretrain_toy(res.model, train, val, train_ds.class_tokens, cfg.pretrain);
    return res;
}

} // namespace ttapt
