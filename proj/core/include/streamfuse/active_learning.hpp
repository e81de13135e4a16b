#pragma once

#include <cstdint>
#include <utility>

#include "streamfuse/rng.hpp"
#include "streamfuse/types.hpp"

namespace streamfuse {

struct ALConfig {
    /// Maximum fraction of the stream that may be admitted for training.
    double budget = 0.4;

    /// Multiplicative adaptation step for the conflict threshold.
    double step = 0.01;

    std::uint64_t seed = 0;

    /// Threshold direction. Default: admit shrinks theta, discard grows it
    /// (the variable-uncertainty feedback that keeps the admission rate at
    /// the budget). Setting this runs the opposite adaptation for
    /// experimentation; it is prone to threshold collapse on streams the
    /// model classifies confidently.
    bool grow_theta_on_admit = false;

    /// Disable the random threshold multiplier (used by degeneracy tests).
    bool randomize = true;
};

/// Budgeted certainty-based sample filter. One instance per learner; never
/// shared across partitions.
struct ALState {
    double budget = 0.4;
    double theta = 0.5;
    double step = 0.01;
    std::int64_t seen = 0;
    std::int64_t admitted = 0;
    bool grow_theta_on_admit = false;
    bool randomize = true;
    Rng rng{0};

    /// Decide the current sample. `seen` must already count it. Admits when
    /// either conflict measure is at or below theta * r with r ~ U[0,2),
    /// subject to the hard budget admitted/seen < budget, then adapts theta.
    bool decide(double out_conf, double in_conf);
};

/// theta_0 = 1/m + B(1 - 1/m), the uniform-prior initialization.
double init_threshold(long num_classes, double budget);

ALState make_al_state(long num_classes, const ALConfig& cfg);

/// Output-space conflict y1/(y1+y2) from the two largest scores, clamped to
/// [0,1]; 0.5 when the two largest scores cancel exactly. Needs >= 2 classes.
double output_conflict(const Vector& scores);

/// Input-space conflict: class purity of the winning rule, from the
/// per-class hit counts kept beside each rule during training. 1.0 for a
/// rule that has only seen one class.
double input_conflict(const Model& model, const Vector& x);

/// Functional form of ALState::decide: the caller increments seen, then this
/// returns the decision plus the advanced state.
std::pair<bool, ALState> admit(ALState state, double out_conf, double in_conf);

}  // namespace streamfuse
