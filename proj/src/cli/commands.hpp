#pragma once

#include <string>
#include <vector>

namespace oppred::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitAnalysis = 2;

struct GenArgs {
    uint64_t seed = 1;
    int size = 5000;
    std::vector<std::string> recipes;
    int alpha_loop = 2;
    int alpha_paths = 8;
    std::string out;
    bool verify = true; // run the oracle soundness gate after generation
    bool serial = false;
};

struct TrainArgs {
    std::string corpus;
    std::string task = "detection";
    std::string features = "tf";
    std::string set = "set3";
    std::string out;
};

struct CvArgs {
    std::string corpus;
    std::string task = "detection";
    std::string model = "tree";
    std::string features = "tf";
    std::string set = "set3";
    int k = 20;
    uint64_t seed = 1;
    std::string split = "program";
    std::string out;
    bool serial = false;
};

struct StudyArgs {
    std::string corpus;
    std::string which = "set-compare"; // set-compare | model-compare | similarity
    std::string out;
    int cap = 2000; // model-compare subsample cap (k-NN cost)
    uint64_t seed = 1;
    int k = 20;
    bool serial = false;
};

struct DeobfArgs {
    std::string programs;
    std::string detector;
    std::string resolver;
    std::string mode = "model"; // model | oracle
    std::string out;
    uint64_t seed = 1;
    int alpha_loop = 2;
    int alpha_paths = 8;
    bool serial = false;
};

int cmd_gen(const GenArgs& args);
int cmd_train(const TrainArgs& args);
int cmd_cv(const CvArgs& args);
int cmd_study(const StudyArgs& args);
int cmd_deobf(const DeobfArgs& args);

} // namespace oppred::cli
