#include "streamfuse/vote.hpp"

#include "streamfuse/errors.hpp"
#include "streamfuse/inference.hpp"

namespace streamfuse {

Ensemble make_ensemble(std::vector<Model> models) {
    if (models.empty()) throw Error("make_ensemble: no models");
    Ensemble ensemble;
    ensemble.input_dim = models.front().input_dim;
    ensemble.num_classes = models.front().num_classes;
    for (const Model& model : models) {
        if (model.input_dim != ensemble.input_dim ||
            model.num_classes != ensemble.num_classes) {
            throw Error("make_ensemble: model " + std::to_string(model.partition_id) +
                        " has incompatible dimensions");
        }
        if (model.empty()) {
            throw Error("make_ensemble: model " + std::to_string(model.partition_id) +
                        " has no rules");
        }
    }
    ensemble.models = std::move(models);
    return ensemble;
}

Prediction vote(const Ensemble& ensemble, const Vector& x) {
    if (ensemble.models.empty()) throw Error("vote: empty ensemble");
    const long m = ensemble.num_classes;
    Vector counts = Vector::Zero(m);
    Vector score_sums = Vector::Zero(m);
    for (const Model& model : ensemble.models) {
        const Vector scores = infer_scores(model, x);
        counts[argmax_class(scores)] += 1.0;
        score_sums += scores;
    }

    const double top = counts.maxCoeff();
    int winner = -1;
    double best_sum = 0.0;
    for (long c = 0; c < m; ++c) {
        if (counts[c] != top) continue;
        if (winner < 0 || score_sums[c] > best_sum) {
            winner = static_cast<int>(c);
            best_sum = score_sums[c];
        }
    }

    Prediction p;
    p.class_label = winner;
    p.scores = counts / static_cast<double>(ensemble.models.size());
    return p;
}

double vote_batch(const Ensemble& ensemble, const Eigen::Ref<const Matrix>& X,
                  std::span<const int> labels) {
    if (X.rows() == 0) throw Error("vote_batch: empty dataset");
    if (static_cast<std::size_t>(X.rows()) != labels.size()) {
        throw DimensionError("vote_batch labels", X.rows(), static_cast<long>(labels.size()));
    }
    std::int64_t correct = 0;
    Vector x(X.cols());
    for (long row = 0; row < X.rows(); ++row) {
        x = X.row(row);
        if (vote(ensemble, x).class_label == labels[static_cast<std::size_t>(row)]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(X.rows());
}

}  // namespace streamfuse
