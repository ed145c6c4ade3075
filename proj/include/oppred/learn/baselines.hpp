#pragma once

#include <vector>

#include "oppred/feat/features.hpp"

namespace oppred::learn {

// k-nearest neighbors with Euclidean distance over sparse vectors. Neighbors
// are ordered by (distance, training index); vote ties go to the smallest
// class index.
class KnnClassifier {
public:
    explicit KnnClassifier(int k = 5) : k_(k) {}
    void train(std::vector<feat::FeatureVector> X, std::vector<int> y, int n_classes);
    int predict(const feat::FeatureVector& x) const;

private:
    int k_;
    int n_classes_ = 0;
    std::vector<feat::FeatureVector> X_;
    std::vector<int> y_;
    std::vector<double> norms_;
};

// Multinomial naive Bayes with Laplace smoothing; score ties go to the
// smallest class index.
class MultinomialNB {
public:
    explicit MultinomialNB(double alpha = 1.0) : alpha_(alpha) {}
    void train(const std::vector<feat::FeatureVector>& X, const std::vector<int>& y,
               int n_classes, size_t n_features);
    int predict(const feat::FeatureVector& x) const;

private:
    double alpha_;
    int n_classes_ = 0;
    size_t n_features_ = 0;
    std::vector<double> log_prior_;
    std::vector<std::vector<double>> log_prob_; // [class][feature]
};

} // namespace oppred::learn
