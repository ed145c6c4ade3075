#include "oppred/feat/features.hpp"

#include <cctype>
#include <cmath>

namespace oppred::feat {

const char* feature_kind_name(FeatureKind k) {
    return k == FeatureKind::Tf ? "tf" : "tfidf";
}

bool parse_feature_kind(const std::string& s, FeatureKind& out) {
    if (s == "tf") out = FeatureKind::Tf;
    else if (s == "tfidf" || s == "tf-idf") out = FeatureKind::TfIdf;
    else return false;
    return true;
}

std::vector<std::string> tokenize_text(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&]() {
        if (cur.empty()) return;
        bool alnum = true;
        for (char c : cur)
            if (!std::isalnum(static_cast<unsigned char>(c))) { alnum = false; break; }
        if (alnum) out.push_back(cur);
        cur.clear();
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ',' ||
            c == '=') {
            flush();
        } else {
            cur.push_back(c);
        }
    }
    flush();
    return out;
}

std::vector<std::string> tokenize(const rawdata::RawDocument& doc) {
    std::vector<std::string> out;
    for (const auto& line : doc.lines) {
        auto part = tokenize_text(line);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

Vocabulary Vocabulary::fit(const std::vector<std::vector<std::string>>& docs) {
    Vocabulary v;
    v.n_docs_ = docs.size();
    std::map<std::string, uint32_t> df;
    for (const auto& doc : docs) {
        std::map<std::string, bool> seen;
        for (const auto& t : doc)
            if (!seen.count(t)) {
                seen[t] = true;
                ++df[t];
            }
    }
    uint32_t idx = 0;
    for (const auto& [token, count] : df) {
        v.index_[token] = idx++;
        v.tokens_.push_back(token);
        v.df_.push_back(count);
    }
    v.idf_.resize(v.df_.size());
    for (size_t i = 0; i < v.df_.size(); ++i)
        v.idf_[i] = std::log((1.0 + static_cast<double>(v.n_docs_)) /
                             (1.0 + static_cast<double>(v.df_[i]))) +
                    1.0;
    return v;
}

int Vocabulary::index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : static_cast<int>(it->second);
}

uint32_t Vocabulary::df(const std::string& token) const {
    int i = index_of(token);
    return i < 0 ? 0 : df_[i];
}

double Vocabulary::idf(const std::string& token) const {
    int i = index_of(token);
    if (i >= 0) return idf_[i];
    // unseen token: df = 0 under the same smoothing
    return std::log((1.0 + static_cast<double>(n_docs_)) / 1.0) + 1.0;
}

FeatureVector tf_vector(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    std::map<uint32_t, double> counts;
    for (const auto& t : tokens) {
        int i = vocab.index_of(t);
        if (i >= 0) counts[static_cast<uint32_t>(i)] += 1.0;
    }
    return FeatureVector(counts.begin(), counts.end());
}

FeatureVector tfidf_vector(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    FeatureVector v = tf_vector(tokens, vocab);
    for (auto& [idx, w] : v) w *= vocab.idf_by_index(idx);
    return v;
}

FeatureVector make_vector(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                          FeatureKind kind) {
    return kind == FeatureKind::Tf ? tf_vector(tokens, vocab) : tfidf_vector(tokens, vocab);
}

double dot(const FeatureVector& a, const FeatureVector& b) {
    double s = 0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first == b[j].first) s += a[i++].second * b[j++].second;
        else if (a[i].first < b[j].first) ++i;
        else ++j;
    }
    return s;
}

double norm_squared(const FeatureVector& a) {
    double s = 0;
    for (const auto& [i, w] : a) s += w * w;
    return s;
}

} // namespace oppred::feat
