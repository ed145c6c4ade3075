#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oppred/feat/features.hpp"

using namespace oppred;
using namespace oppred::feat;

namespace {

std::vector<std::string> toks(std::initializer_list<const char*> xs) {
    std::vector<std::string> out;
    for (const char* x : xs) out.emplace_back(x);
    return out;
}

} // namespace

TEST_CASE("tokenize splits on whitespace, parens, commas, equals") {
    CHECK(tokenize_text("ExprId(id1, size=64)") == toks({"ExprId", "id1", "size", "64"}));
    CHECK(tokenize_text("") == std::vector<std::string>{});
    CHECK(tokenize_text("a = b, (c) d") == toks({"a", "b", "c", "d"}));
}

TEST_CASE("tokenize keeps alphanumeric tokens only") {
    CHECK(tokenize_text("id1 r3_1 v2") == toks({"id1", "v2"}));
}

TEST_CASE("cond and mem constructors become distinguishing tokens") {
    rawdata::RawDocument folded;
    folded.lines = {"ExprId(id1, size=64) = ExprInt(v1, 64)"};
    rawdata::RawDocument memory;
    memory.lines = {"ExprId(id2, size=1) = ExprCond(ExprMem(ExprId(v3, size=64), size=8), "
                    "ExprInt(v4, 1), ExprInt(v3, 1))"};
    auto t1 = tokenize(folded);
    auto t2 = tokenize(memory);
    auto has = [](const std::vector<std::string>& ts, const char* w) {
        return std::count(ts.begin(), ts.end(), w) > 0;
    };
    CHECK(!has(t1, "ExprCond"));
    CHECK(!has(t1, "ExprMem"));
    CHECK(has(t2, "ExprCond"));
    CHECK(has(t2, "ExprMem"));
}

TEST_CASE("tf weights are raw counts") {
    Vocabulary v = Vocabulary::fit({toks({"a", "b"}), toks({"a"})});
    FeatureVector x = tf_vector(toks({"a", "a", "b"}), v);
    REQUIRE(x.size() == 2);
    CHECK(x[0] == std::pair<uint32_t, double>{0, 2.0});
    CHECK(x[1] == std::pair<uint32_t, double>{1, 1.0});
}

TEST_CASE("unknown tokens vanish; empty vectors are empty") {
    Vocabulary v = Vocabulary::fit({toks({"a"})});
    CHECK(tf_vector(toks({"x", "y"}), v).empty());
    CHECK(v.index_of("x") == -1); // no leakage of unseen tokens
}

TEST_CASE("duplicated document doubles the weights") {
    Vocabulary v = Vocabulary::fit({toks({"a", "b", "c"})});
    auto once = tf_vector(toks({"a", "b", "b"}), v);
    auto twice = tf_vector(toks({"a", "b", "b", "a", "b", "b"}), v);
    REQUIRE(once.size() == twice.size());
    for (size_t i = 0; i < once.size(); ++i) {
        CHECK(twice[i].first == once[i].first);
        CHECK(twice[i].second == 2.0 * once[i].second);
    }
}

TEST_CASE("idf follows ln((1+N)/(1+df)) + 1 exactly") {
    // token 'all' in every one of 4 docs; token 'rare' in exactly one
    std::vector<std::vector<std::string>> docs = {
        toks({"all", "rare"}), toks({"all"}), toks({"all"}), toks({"all"})};
    Vocabulary v = Vocabulary::fit(docs);
    CHECK(v.idf("all") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v.idf("rare") == doctest::Approx(std::log(5.0 / 2.0) + 1.0).epsilon(1e-12));
}

TEST_CASE("tfidf weight is tf times idf; zero tf stays zero") {
    std::vector<std::vector<std::string>> docs = {
        toks({"all", "rare"}), toks({"all"}), toks({"all"}), toks({"all"})};
    Vocabulary v = Vocabulary::fit(docs);
    auto x = tfidf_vector(toks({"rare", "rare", "all"}), v);
    double idf_rare = std::log(5.0 / 2.0) + 1.0;
    REQUIRE(x.size() == 2);
    CHECK(x[0].second == doctest::Approx(1.0).epsilon(1e-12));          // all: tf 1 * idf 1
    CHECK(x[1].second == doctest::Approx(2.0 * idf_rare).epsilon(1e-12));
    CHECK(tfidf_vector(toks({"zzz"}), v).empty());
}

TEST_CASE("vectors hold non-negative weights with ascending indices") {
    Vocabulary v = Vocabulary::fit({toks({"d", "c", "b", "a"}), toks({"b", "e"})});
    auto x = tfidf_vector(toks({"e", "a", "c", "e"}), v);
    for (size_t i = 1; i < x.size(); ++i) CHECK(x[i - 1].first < x[i].first);
    for (const auto& [f, w] : x) CHECK(w >= 0.0);
}

TEST_CASE("sparse dot agrees with dense evaluation") {
    FeatureVector a = {{0, 1.0}, {3, 2.0}, {7, 4.0}};
    FeatureVector b = {{1, 5.0}, {3, 3.0}, {7, 0.5}};
    CHECK(dot(a, b) == doctest::Approx(2.0 * 3.0 + 4.0 * 0.5));
    CHECK(norm_squared(a) == doctest::Approx(1 + 4 + 16));
}
