#include "streamfuse/active_learning.hpp"

#include <algorithm>
#include <cmath>

#include "streamfuse/errors.hpp"
#include "streamfuse/inference.hpp"

namespace streamfuse {

double init_threshold(long num_classes, double budget) {
    if (num_classes < 2) {
        throw Error("init_threshold: need at least 2 classes, got " +
                    std::to_string(num_classes));
    }
    if (budget < 0.0 || budget > 1.0) {
        throw Error("init_threshold: budget must be in [0,1]");
    }
    const double m = static_cast<double>(num_classes);
    return 1.0 / m + budget * (1.0 - 1.0 / m);
}

ALState make_al_state(long num_classes, const ALConfig& cfg) {
    if (cfg.step <= 0.0) throw Error("active learning: step must be > 0");
    ALState state;
    state.budget = cfg.budget;
    state.theta = init_threshold(num_classes, cfg.budget);
    state.step = cfg.step;
    state.grow_theta_on_admit = cfg.grow_theta_on_admit;
    state.randomize = cfg.randomize;
    state.rng = Rng(cfg.seed);
    return state;
}

bool ALState::decide(double out_conf, double in_conf) {
    const double r = randomize ? rng.uniform(0.0, 2.0) : 1.0;
    const double theta_r = theta * r;
    const bool conflicted = out_conf <= theta_r || in_conf <= theta_r;
    // Hard cap: admitted/seen < budget with `seen` counting this sample, so
    // the running ratio can never exceed budget + 1/seen.
    const bool budget_open =
        static_cast<double>(admitted) < budget * static_cast<double>(seen);
    const bool take = conflicted && budget_open;

    const bool grow = take ? grow_theta_on_admit : !grow_theta_on_admit;
    if (step > 0.0) {
        if (grow) {
            theta = std::min(theta * (1.0 + step), 0.99);
        } else {
            theta = std::max(theta * (1.0 - step), 0.01);
        }
    }
    if (take) ++admitted;
    return take;
}

double output_conflict(const Vector& scores) {
    if (scores.size() < 2) {
        throw Error("output_conflict: need at least 2 class scores");
    }
    double top1 = -std::numeric_limits<double>::infinity();
    double top2 = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < scores.size(); ++i) {
        const double s = scores[i];
        if (s > top1) {
            top2 = top1;
            top1 = s;
        } else if (s > top2) {
            top2 = s;
        }
    }
    const double denom = top1 + top2;
    if (denom == 0.0) return 0.5;  // the two dominant outputs cancel: no signal
    return std::clamp(top1 / denom, 0.0, 1.0);
}

double input_conflict(const Model& model, const Vector& x) {
    if (model.empty()) throw Error("input_conflict: model has no rules");
    std::size_t winner = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < model.rules.size(); ++i) {
        const double d2 = mahalanobis_sq(model.rules[i], x);
        if (d2 < best) {
            best = d2;
            winner = i;
        }
    }
    const Vector& hits = model.rules[winner].class_hits;
    const double total = hits.size() > 0 ? hits.sum() : 0.0;
    if (total <= 0.0) return 1.0;  // no recorded history: treat as pure
    return hits.maxCoeff() / total;
}

std::pair<bool, ALState> admit(ALState state, double out_conf, double in_conf) {
    const bool take = state.decide(out_conf, in_conf);
    return {take, std::move(state)};
}

}  // namespace streamfuse
