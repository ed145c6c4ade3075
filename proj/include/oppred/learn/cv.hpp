#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "oppred/learn/baselines.hpp"
#include "oppred/learn/tree.hpp"
#include "oppred/rawdata/rawdata.hpp"

namespace oppred::learn {

// Detection separates NORMAL from OPAQUE (OP_TRUE and OP_FALSE collapse);
// deobfuscation separates OP_TRUE from OP_FALSE and ignores NORMAL samples.
enum class Task { Detection, Deobfuscation };

const char* task_name(Task t);
bool parse_task(const std::string& s, Task& out);

// Class index for a sample label under the task, or -1 when the sample does
// not participate. Indices follow lexicographic label order so that model
// tie-breaks resolve toward the lexicographically smallest label.
int project_label(Task t, rawdata::Label l);
const std::vector<std::string>& class_names(Task t);

enum class ModelKind { Tree, Knn, Mnb };
const char* model_kind_name(ModelKind m);
bool parse_model_kind(const std::string& s, ModelKind& out);

enum class SplitMode { Program, Sample };

struct CvOptions {
    Task task = Task::Detection;
    ModelKind model = ModelKind::Tree;
    feat::FeatureKind features = feat::FeatureKind::Tf;
    int k = 20;
    uint64_t seed = 1;
    SplitMode split = SplitMode::Program;
    TreeParams tree_params;
    int knn_k = 5;
    double nb_alpha = 1.0;
    bool parallel = true;
};

struct CvReport {
    int k = 0;
    std::vector<double> fold_accuracy;
    std::vector<double> fold_f1;
    double mean_accuracy = 0.0;
    double mean_f1 = 0.0;
    double wall_seconds = 0.0;
};

struct Metrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};
Metrics score(const std::vector<int>& truth, const std::vector<int>& predicted, int n_classes);

// Stratified k-fold cross-validation over the given samples (all of one set
// kind). The vocabulary and model are fitted per fold on the training side
// only. Program-mode folds keep all samples of a program together.
CvReport kfold_cv(const std::vector<rawdata::Sample>& samples, const CvOptions& options);

// Majority vote over per-path predictions; ties resolve to `tie_class`.
int majority_vote(const std::vector<int>& votes, int n_classes, int tie_class);

// Vocabulary + decision tree + enough metadata to vectorize new documents.
struct TrainedModel {
    Task task = Task::Detection;
    feat::FeatureKind features = feat::FeatureKind::Tf;
    rawdata::SetKind set = rawdata::SetKind::Set3;
    feat::Vocabulary vocab;
    DecisionTree tree;
    std::vector<std::string> train_programs; // provenance for disjointness checks

    int predict_document(const rawdata::RawDocument& normalized_doc) const;
    void save(std::ostream& os) const;
    static TrainedModel load(std::istream& is);
};

TrainedModel train_model(const std::vector<rawdata::Sample>& samples, Task task,
                         feat::FeatureKind features, rawdata::SetKind set,
                         const TreeParams& params = {});

} // namespace oppred::learn
