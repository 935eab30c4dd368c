#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/dsp_frontend.hpp"

namespace ttapt {

enum class AugOp : uint8_t { ID, TM, FM, TFM, TR };

const char* aug_op_name(AugOp op);

struct AugmentConfig {
    int n_views = 8;       // M; view 0 is always the unaugmented input
    int max_time_mask = 8; // frames
    int max_freq_mask = 4; // bins
    uint64_t seed = 0;
};

struct ViewProvenance {
    AugOp op = AugOp::ID;
    int t_start = 0, t_width = 0;
    int f_start = 0, f_width = 0;
};

struct ViewSet {
    std::vector<MelSpectrogram> views;
    std::vector<ViewProvenance> provenance;
    int size() const { return static_cast<int>(views.size()); }
};

// Masked rows/columns are filled with the input's global mean value.
MelSpectrogram time_mask(const MelSpectrogram& x, int start, int width);
MelSpectrogram freq_mask(const MelSpectrogram& x, int start, int width);

// Both fills use the ORIGINAL matrix's mean.
MelSpectrogram time_freq_mask(const MelSpectrogram& x, int t_start, int t_width,
                              int f_start, int f_width);

// Swap the two temporal halves; split at floor(T/2).
MelSpectrogram time_reorder(const MelSpectrogram& x);

// View 0 = x; views 1..M-1 cycle through TM, FM, TFM, TR in that order with
// parameters drawn from a counter-based RNG keyed by (seed, view index).
// M = 5 therefore produces exactly the tag list [ID, TM, FM, TFM, TR].
ViewSet make_views(const MelSpectrogram& x, const AugmentConfig& cfg);

} // namespace ttapt
