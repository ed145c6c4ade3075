#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "oppred/feat/features.hpp"

namespace oppred::learn {

struct TreeParams {
    int max_depth = -1;              // unlimited
    int min_samples_split = 2;
    double min_impurity_decrease = 0.0;
};

// gini = 1 - sum p_c^2 over the class counts
double gini_impurity(const std::vector<int>& class_counts);

// CART: greedy binary splits minimizing weighted Gini impurity, midpoint
// thresholds between consecutive distinct feature values, ties broken toward
// the lowest feature index then the lowest threshold.
class DecisionTree {
public:
    struct Node {
        int feature = -1;        // -1 for leaves
        double threshold = 0.0;  // left: value <= threshold
        int left = -1, right = -1;
        int label = -1;          // majority class (set for every node)
        std::vector<int> class_counts;
    };

    void train(const std::vector<feat::FeatureVector>& X, const std::vector<int>& y,
               int n_classes, const TreeParams& params = {});
    int predict(const feat::FeatureVector& x) const;
    bool trained() const { return !nodes_.empty(); }

    const std::vector<Node>& nodes() const { return nodes_; }
    int depth() const;

    // Node-per-line preorder dump (nodes are stored in preorder).
    void dump(std::ostream& os) const;
    static DecisionTree load(std::istream& is);

private:
    int build(const std::vector<feat::FeatureVector>& X, const std::vector<int>& y,
              std::vector<int>& samples, int n_classes, const TreeParams& params, int depth);
    std::vector<Node> nodes_;
};

// Exhaustive search over every (feature, midpoint-threshold) pair; the
// independent route used to cross-check the trained root split.
struct BruteSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double weighted_gini = 0.0;
};
BruteSplit brute_force_best_split(const std::vector<feat::FeatureVector>& X,
                                  const std::vector<int>& y, int n_classes);

} // namespace oppred::learn
