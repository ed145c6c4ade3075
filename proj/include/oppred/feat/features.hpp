#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "oppred/rawdata/rawdata.hpp"

namespace oppred::feat {

enum class FeatureKind { Tf, TfIdf };

const char* feature_kind_name(FeatureKind k);
bool parse_feature_kind(const std::string& s, FeatureKind& out);

// Sparse vector, indices ascending.
using FeatureVector = std::vector<std::pair<uint32_t, double>>;

std::vector<std::string> tokenize(const rawdata::RawDocument& doc);
std::vector<std::string> tokenize_text(const std::string& text);

// Token -> feature index plus document frequencies. Built from training
// documents only; tokens are indexed in lexicographic order so the mapping
// is independent of corpus order.
class Vocabulary {
public:
    static Vocabulary fit(const std::vector<std::vector<std::string>>& docs);

    int index_of(const std::string& token) const; // -1 when unknown
    size_t size() const { return index_.size(); }
    size_t corpus_size() const { return n_docs_; }
    uint32_t df(const std::string& token) const;

    // idf(t) = ln((1+N)/(1+df(t))) + 1
    double idf(const std::string& token) const;
    double idf_by_index(uint32_t index) const { return idf_[index]; }
    const std::string& token_at(uint32_t index) const { return tokens_[index]; }
    uint32_t df_at(uint32_t index) const { return df_[index]; }

private:
    std::map<std::string, uint32_t> index_;
    std::vector<std::string> tokens_;
    std::vector<uint32_t> df_;
    std::vector<double> idf_;
    size_t n_docs_ = 0;
};

// weight(t) = raw count of t in the document; unknown tokens are dropped.
FeatureVector tf_vector(const std::vector<std::string>& tokens, const Vocabulary& vocab);

// weight(t) = tf(t) * idf(t)
FeatureVector tfidf_vector(const std::vector<std::string>& tokens, const Vocabulary& vocab);

FeatureVector make_vector(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                          FeatureKind kind);

double dot(const FeatureVector& a, const FeatureVector& b);
double norm_squared(const FeatureVector& a);

} // namespace oppred::feat
