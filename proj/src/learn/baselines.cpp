#include "oppred/learn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oppred::learn {

void KnnClassifier::train(std::vector<feat::FeatureVector> X, std::vector<int> y,
                          int n_classes) {
    if (X.empty() || X.size() != y.size()) throw std::invalid_argument("knn: bad input");
    X_ = std::move(X);
    y_ = std::move(y);
    n_classes_ = n_classes;
    norms_.resize(X_.size());
    for (size_t i = 0; i < X_.size(); ++i) norms_[i] = feat::norm_squared(X_[i]);
}

int KnnClassifier::predict(const feat::FeatureVector& x) const {
    if (X_.empty()) throw std::runtime_error("knn: untrained model");
    double xn = feat::norm_squared(x);
    std::vector<std::pair<double, int>> dist;
    dist.reserve(X_.size());
    for (size_t i = 0; i < X_.size(); ++i) {
        double d2 = xn + norms_[i] - 2.0 * feat::dot(x, X_[i]);
        if (d2 < 0) d2 = 0; // rounding
        dist.emplace_back(d2, static_cast<int>(i));
    }
    int k = std::min<int>(k_, static_cast<int>(dist.size()));
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    std::vector<int> votes(n_classes_, 0);
    for (int i = 0; i < k; ++i) ++votes[y_[dist[i].second]];
    int best = 0;
    for (int c = 1; c < n_classes_; ++c)
        if (votes[c] > votes[best]) best = c;
    return best;
}

void MultinomialNB::train(const std::vector<feat::FeatureVector>& X, const std::vector<int>& y,
                          int n_classes, size_t n_features) {
    if (X.empty() || X.size() != y.size()) throw std::invalid_argument("mnb: bad input");
    n_classes_ = n_classes;
    n_features_ = n_features;
    std::vector<double> class_n(n_classes, 0.0);
    std::vector<std::vector<double>> counts(n_classes, std::vector<double>(n_features, 0.0));
    std::vector<double> totals(n_classes, 0.0);
    for (size_t i = 0; i < X.size(); ++i) {
        class_n[y[i]] += 1.0;
        for (const auto& [f, w] : X[i]) {
            counts[y[i]][f] += w;
            totals[y[i]] += w;
        }
    }
    log_prior_.resize(n_classes);
    log_prob_.assign(n_classes, std::vector<double>(n_features, 0.0));
    for (int c = 0; c < n_classes; ++c) {
        log_prior_[c] = std::log(std::max(class_n[c], 1e-12) / static_cast<double>(X.size()));
        double denom = totals[c] + alpha_ * static_cast<double>(n_features);
        for (size_t f = 0; f < n_features; ++f)
            log_prob_[c][f] = std::log((counts[c][f] + alpha_) / denom);
    }
}

int MultinomialNB::predict(const feat::FeatureVector& x) const {
    if (log_prior_.empty()) throw std::runtime_error("mnb: untrained model");
    int best = 0;
    double best_score = 0;
    for (int c = 0; c < n_classes_; ++c) {
        double s = log_prior_[c];
        for (const auto& [f, w] : x)
            if (f < n_features_) s += w * log_prob_[c][f];
        if (c == 0 || s > best_score) {
            best_score = s;
            best = c;
        }
    }
    return best;
}

} // namespace oppred::learn
