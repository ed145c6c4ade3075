#include "oppred/learn/tree.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace oppred::learn {

double gini_impurity(const std::vector<int>& class_counts) {
    long long n = 0;
    for (int c : class_counts) n += c;
    if (n == 0) return 0.0;
    double g = 1.0;
    for (int c : class_counts) {
        double p = static_cast<double>(c) / static_cast<double>(n);
        g -= p * p;
    }
    return g;
}

namespace {

double value_of(const feat::FeatureVector& x, uint32_t feature) {
    auto it = std::lower_bound(x.begin(), x.end(), feature,
                               [](const auto& p, uint32_t f) { return p.first < f; });
    return (it != x.end() && it->first == feature) ? it->second : 0.0;
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double weighted = 0.0;
};

// Best split of the given node samples. Features are visited in ascending
// index order and thresholds in ascending order; strict improvement is
// required to switch, which realizes the tie rule.
SplitChoice best_split(const std::vector<feat::FeatureVector>& X, const std::vector<int>& y,
                       const std::vector<int>& samples, int n_classes) {
    SplitChoice best;
    // features present in the node
    std::set<uint32_t> features;
    for (int s : samples)
        for (const auto& [f, w] : X[s]) features.insert(f);

    size_t n = samples.size();
    std::vector<std::pair<double, int>> vals; // (value, label)
    for (uint32_t f : features) {
        vals.clear();
        vals.reserve(n);
        for (int s : samples) vals.emplace_back(value_of(X[s], f), y[s]);
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (vals.front().first == vals.back().first) continue; // constant feature

        std::vector<int> left(n_classes, 0), right(n_classes, 0);
        for (const auto& [v, lbl] : vals) ++right[lbl];
        size_t i = 0;
        while (i < n) {
            double v = vals[i].first;
            while (i < n && vals[i].first == v) {
                --right[vals[i].second];
                ++left[vals[i].second];
                ++i;
            }
            if (i >= n) break;
            double threshold = v + (vals[i].first - v) / 2.0;
            double nl = static_cast<double>(i);
            double nr = static_cast<double>(n - i);
            double weighted =
                (nl * gini_impurity(left) + nr * gini_impurity(right)) / static_cast<double>(n);
            if (!best.found || weighted < best.weighted) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = threshold;
                best.weighted = weighted;
            }
        }
    }
    return best;
}

} // namespace

int DecisionTree::build(const std::vector<feat::FeatureVector>& X, const std::vector<int>& y,
                        std::vector<int>& samples, int n_classes, const TreeParams& params,
                        int depth) {
    Node node;
    node.class_counts.assign(n_classes, 0);
    for (int s : samples) ++node.class_counts[y[s]];
    int best_label = 0;
    for (int c = 1; c < n_classes; ++c)
        if (node.class_counts[c] > node.class_counts[best_label]) best_label = c;
    node.label = best_label;

    double impurity = gini_impurity(node.class_counts);
    bool stop = impurity == 0.0 ||
                static_cast<int>(samples.size()) < params.min_samples_split ||
                (params.max_depth >= 0 && depth >= params.max_depth);

    SplitChoice choice;
    if (!stop) {
        choice = best_split(X, y, samples, n_classes);
        double decrease = choice.found ? impurity - choice.weighted : 0.0;
        if (!choice.found || decrease < params.min_impurity_decrease) stop = true;
    }

    int index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (stop) return index;

    std::vector<int> left_samples, right_samples;
    for (int s : samples) {
        if (value_of(X[s], static_cast<uint32_t>(choice.feature)) <= choice.threshold)
            left_samples.push_back(s);
        else
            right_samples.push_back(s);
    }
    // Midpoint thresholds guarantee both sides are non-empty.
    nodes_[index].feature = choice.feature;
    nodes_[index].threshold = choice.threshold;
    int li = build(X, y, left_samples, n_classes, params, depth + 1);
    nodes_[index].left = li;
    int ri = build(X, y, right_samples, n_classes, params, depth + 1);
    nodes_[index].right = ri;
    return index;
}

void DecisionTree::train(const std::vector<feat::FeatureVector>& X, const std::vector<int>& y,
                         int n_classes, const TreeParams& params) {
    if (X.empty() || X.size() != y.size())
        throw std::invalid_argument("train_tree: empty or mismatched input");
    nodes_.clear();
    std::vector<int> samples(X.size());
    for (size_t i = 0; i < X.size(); ++i) samples[i] = static_cast<int>(i);
    build(X, y, samples, n_classes, params, 0);
}

int DecisionTree::predict(const feat::FeatureVector& x) const {
    if (nodes_.empty()) throw std::runtime_error("predict: untrained tree");
    int at = 0;
    while (nodes_[at].feature >= 0) {
        double v = value_of(x, static_cast<uint32_t>(nodes_[at].feature));
        at = v <= nodes_[at].threshold ? nodes_[at].left : nodes_[at].right;
    }
    return nodes_[at].label;
}

int DecisionTree::depth() const {
    // preorder: depth via recursion over indices
    struct Walk {
        const std::vector<Node>& nodes;
        int at(int i) const {
            if (nodes[i].feature < 0) return 0;
            return 1 + std::max(at(nodes[i].left), at(nodes[i].right));
        }
    };
    if (nodes_.empty()) return 0;
    return Walk{nodes_}.at(0);
}

void DecisionTree::dump(std::ostream& os) const {
    os << "tree " << nodes_.size() << "\n";
    std::ostringstream tmp;
    tmp.precision(17);
    for (const auto& n : nodes_) {
        tmp.str("");
        tmp << "node " << n.feature << " ";
        tmp << std::hexfloat << n.threshold << std::defaultfloat;
        tmp << " " << n.left << " " << n.right << " " << n.label;
        tmp << " " << n.class_counts.size();
        for (int c : n.class_counts) tmp << " " << c;
        os << tmp.str() << "\n";
    }
}

DecisionTree DecisionTree::load(std::istream& is) {
    DecisionTree t;
    std::string word;
    size_t count = 0;
    if (!(is >> word >> count) || word != "tree")
        throw std::runtime_error("model load: bad tree header");
    t.nodes_.resize(count);
    for (size_t i = 0; i < count; ++i) {
        Node& n = t.nodes_[i];
        std::string thr;
        size_t nc = 0;
        if (!(is >> word >> n.feature >> thr >> n.left >> n.right >> n.label >> nc) ||
            word != "node")
            throw std::runtime_error("model load: bad node line");
        n.threshold = std::strtod(thr.c_str(), nullptr);
        n.class_counts.resize(nc);
        for (size_t c = 0; c < nc; ++c) is >> n.class_counts[c];
    }
    return t;
}

BruteSplit brute_force_best_split(const std::vector<feat::FeatureVector>& X,
                                  const std::vector<int>& y, int n_classes) {
    BruteSplit best;
    std::set<uint32_t> features;
    for (const auto& x : X)
        for (const auto& [f, w] : x) features.insert(f);
    size_t n = X.size();
    for (uint32_t f : features) {
        std::vector<double> values;
        for (const auto& x : X) values.push_back(value_of(x, f));
        std::vector<double> distinct(values);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (size_t d = 0; d + 1 < distinct.size(); ++d) {
            double thr = distinct[d] + (distinct[d + 1] - distinct[d]) / 2.0;
            std::vector<int> left(n_classes, 0), right(n_classes, 0);
            for (size_t s = 0; s < n; ++s) {
                if (values[s] <= thr) ++left[y[s]];
                else ++right[y[s]];
            }
            long long nl = 0, nr = 0;
            for (int c : left) nl += c;
            for (int c : right) nr += c;
            double weighted = (static_cast<double>(nl) * gini_impurity(left) +
                               static_cast<double>(nr) * gini_impurity(right)) /
                              static_cast<double>(n);
            if (!best.found || weighted < best.weighted_gini) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = thr;
                best.weighted_gini = weighted;
            }
        }
    }
    return best;
}

} // namespace oppred::learn
