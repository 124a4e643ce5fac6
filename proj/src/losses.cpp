#include "seagrid/losses.hpp"

#include "seagrid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seagrid {

void ClassWeights::validate(int num_classes) const {
    if (static_cast<int>(w.size()) != num_classes) {
        throw UsageError("expected " + std::to_string(num_classes) + " class weights, got " +
                         std::to_string(w.size()));
    }
    for (double x : w) {
        if (!(x > 0.0) || !std::isfinite(x)) throw UsageError("class weights must be positive");
    }
}

double log_sum_exp(const Eigen::VectorXd& values) {
    const double m = values.maxCoeff();
    return m + std::log((values.array() - m).exp().sum());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
    return e / e.sum();
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
    return logits.array() - log_sum_exp(logits);
}

LossGrad weighted_ce(const Eigen::VectorXd& logits, ClassId target, const ClassWeights& weights) {
    const int c = static_cast<int>(logits.size());
    if (target < 0 || target >= c) throw DataError("target class out of range");
    weights.validate(c);
    const double wt = weights.w[target];
    LossGrad out;
    out.loss = -wt * log_softmax(logits)[target];
    Eigen::VectorXd g = softmax(logits);
    g[target] -= 1.0;
    out.grad = wt * g;
    return out;
}

LossGrad weighted_ce_batch(const Matrix& logits, std::span<const ClassId> targets, const ClassWeights& weights) {
    if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) throw DataError("target count mismatch");
    LossGrad out;
    out.grad = Matrix::Zero(logits.rows(), logits.cols());
    double total_weight = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const LossGrad li = weighted_ce(logits.row(i).transpose(), targets[i], weights);
        out.loss += li.loss;
        out.grad.row(i) = li.grad.transpose();
        total_weight += weights.w[targets[i]];
    }
    if (total_weight > 0.0) {
        out.loss /= total_weight;
        out.grad /= total_weight;
    }
    return out;
}

LossGrad nt_xent(const Matrix& batch, double temperature) {
    const Eigen::Index n = batch.rows();
    if (n < 2 || n % 2 != 0) throw DataError("nt_xent needs an even number (>= 2) of rows");
    if (!(temperature > 0.0)) throw UsageError("temperature must be positive");

    Eigen::VectorXd norms = batch.rowwise().norm();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(norms[i] > 0.0)) throw NumericError("nt_xent: zero-norm feature in row " + std::to_string(i));
    }
    const Matrix unit = norms.cwiseInverse().asDiagonal() * batch;
    const Matrix scaled = unit * unit.transpose() / temperature;

    // dL/dS, where S is the temperature-scaled similarity matrix.
    Matrix d_scaled = Matrix::Zero(n, n);
    LossGrad out;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index pos = i ^ 1;
        double m = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != i) m = std::max(m, scaled(i, k));
        }
        double denom = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != i) denom += std::exp(scaled(i, k) - m);
        }
        const double lse = m + std::log(denom);
        out.loss += lse - scaled(i, pos);
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != i) d_scaled(i, k) = std::exp(scaled(i, k) - m) / denom;
        }
        d_scaled(i, pos) -= 1.0;
    }
    out.loss /= static_cast<double>(n);
    d_scaled /= static_cast<double>(n);

    const Matrix d_unit = (d_scaled + d_scaled.transpose()) * unit / temperature;
    // Back through row normalisation: (I - u u^T) g / |z|.
    Matrix d_batch(n, batch.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double along = unit.row(i).dot(d_unit.row(i));
        d_batch.row(i) = (d_unit.row(i) - along * unit.row(i)) / norms[i];
    }
    out.grad = std::move(d_batch);
    if (!std::isfinite(out.loss)) throw NumericError("nt_xent produced a non-finite loss");
    return out;
}

}  // namespace seagrid
