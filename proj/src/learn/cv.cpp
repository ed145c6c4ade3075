#include "oppred/learn/cv.hpp"

#include <algorithm>
#include <chrono>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "oppred/parallel.hpp"
#include "oppred/rng.hpp"

namespace oppred::learn {

const char* task_name(Task t) { return t == Task::Detection ? "detection" : "deobfuscation"; }

bool parse_task(const std::string& s, Task& out) {
    if (s == "detection") out = Task::Detection;
    else if (s == "deobfuscation" || s == "deobf") out = Task::Deobfuscation;
    else return false;
    return true;
}

int project_label(Task t, rawdata::Label l) {
    if (t == Task::Detection) return l == rawdata::Label::Normal ? 0 : 1;
    if (l == rawdata::Label::OpFalse) return 0;
    if (l == rawdata::Label::OpTrue) return 1;
    return -1;
}

const std::vector<std::string>& class_names(Task t) {
    static const std::vector<std::string> detection = {"NORMAL", "OPAQUE"};
    static const std::vector<std::string> deobf = {"FALSE", "TRUE"};
    return t == Task::Detection ? detection : deobf;
}

const char* model_kind_name(ModelKind m) {
    switch (m) {
        case ModelKind::Tree: return "tree";
        case ModelKind::Knn: return "knn";
        case ModelKind::Mnb: return "mnb";
    }
    return "?";
}

bool parse_model_kind(const std::string& s, ModelKind& out) {
    if (s == "tree") out = ModelKind::Tree;
    else if (s == "knn") out = ModelKind::Knn;
    else if (s == "mnb") out = ModelKind::Mnb;
    else return false;
    return true;
}

Metrics score(const std::vector<int>& truth, const std::vector<int>& predicted, int n_classes) {
    Metrics m;
    if (truth.empty()) return m;
    size_t correct = 0;
    for (size_t i = 0; i < truth.size(); ++i)
        if (truth[i] == predicted[i]) ++correct;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

    double f1_sum = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        long long tp = 0, fp = 0, fn = 0;
        for (size_t i = 0; i < truth.size(); ++i) {
            if (predicted[i] == c && truth[i] == c) ++tp;
            else if (predicted[i] == c) ++fp;
            else if (truth[i] == c) ++fn;
        }
        double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        double f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        f1_sum += f1;
    }
    m.macro_f1 = f1_sum / n_classes;
    return m;
}

int majority_vote(const std::vector<int>& votes, int n_classes, int tie_class) {
    std::vector<int> counts(n_classes, 0);
    for (int v : votes)
        if (v >= 0 && v < n_classes) ++counts[v];
    int best = 0;
    bool tie = false;
    for (int c = 1; c < n_classes; ++c) {
        if (counts[c] > counts[best]) {
            best = c;
            tie = false;
        } else if (counts[c] == counts[best]) {
            tie = true;
        }
    }
    return tie ? tie_class : best;
}

namespace {

struct TaskView {
    std::vector<int> sample_index; // into the original samples vector
    std::vector<int> labels;
    std::vector<std::vector<std::string>> tokens;
};

TaskView project_samples(const std::vector<rawdata::Sample>& samples, Task task) {
    TaskView view;
    for (size_t i = 0; i < samples.size(); ++i) {
        int lbl = project_label(task, samples[i].label);
        if (lbl < 0) continue;
        view.sample_index.push_back(static_cast<int>(i));
        view.labels.push_back(lbl);
        view.tokens.push_back(feat::tokenize(samples[i].document));
    }
    return view;
}

// Stratified fold ids. Sample mode deals each class round-robin after a
// seeded shuffle. Program mode groups samples by program and greedily packs
// programs (largest first) into the lightest fold, which keeps folds of
// comparable size without splitting any program.
std::vector<int> assign_folds(const TaskView& view, const std::vector<rawdata::Sample>& samples,
                              int k, SplitMode mode, uint64_t seed) {
    std::vector<int> fold(view.labels.size(), -1);
    Rng rng(seed ^ 0xf01d5eedULL);
    if (mode == SplitMode::Sample) {
        for (int cls = 0; cls < 2; ++cls) {
            std::vector<int> idx;
            for (size_t i = 0; i < view.labels.size(); ++i)
                if (view.labels[i] == cls) idx.push_back(static_cast<int>(i));
            for (size_t i = idx.size(); i > 1; --i)
                std::swap(idx[i - 1], idx[rng.below(i)]);
            for (size_t i = 0; i < idx.size(); ++i) fold[idx[i]] = static_cast<int>(i % k);
        }
        return fold;
    }

    std::map<std::string, std::vector<int>> groups;
    for (size_t i = 0; i < view.labels.size(); ++i)
        groups[samples[view.sample_index[i]].document.meta.program].push_back(
            static_cast<int>(i));
    std::vector<std::pair<std::string, std::vector<int>>> ordered(groups.begin(), groups.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        return a.second.size() > b.second.size();
    });
    std::vector<size_t> load(k, 0);
    for (const auto& [prog, members] : ordered) {
        int lightest = 0;
        for (int f = 1; f < k; ++f)
            if (load[f] < load[lightest]) lightest = f;
        for (int i : members) fold[i] = lightest;
        load[lightest] += members.size();
    }
    return fold;
}

Metrics run_fold(const TaskView& view, const std::vector<int>& fold, int fold_id,
                 const CvOptions& opt) {
    std::vector<int> train_idx, test_idx;
    for (size_t i = 0; i < view.labels.size(); ++i)
        (fold[i] == fold_id ? test_idx : train_idx).push_back(static_cast<int>(i));
    if (train_idx.empty() || test_idx.empty()) return {};

    std::vector<std::vector<std::string>> train_tokens;
    train_tokens.reserve(train_idx.size());
    for (int i : train_idx) train_tokens.push_back(view.tokens[i]);
    feat::Vocabulary vocab = feat::Vocabulary::fit(train_tokens);

    std::vector<feat::FeatureVector> X;
    std::vector<int> y;
    X.reserve(train_idx.size());
    for (size_t t = 0; t < train_idx.size(); ++t) {
        X.push_back(feat::make_vector(train_tokens[t], vocab, opt.features));
        y.push_back(view.labels[train_idx[t]]);
    }

    std::vector<int> truth, predicted;
    truth.reserve(test_idx.size());
    auto predict_all = [&](auto&& model) {
        for (int i : test_idx) {
            feat::FeatureVector x = feat::make_vector(view.tokens[i], vocab, opt.features);
            truth.push_back(view.labels[i]);
            predicted.push_back(model.predict(x));
        }
    };

    switch (opt.model) {
        case ModelKind::Tree: {
            DecisionTree tree;
            tree.train(X, y, 2, opt.tree_params);
            predict_all(tree);
            break;
        }
        case ModelKind::Knn: {
            KnnClassifier knn(opt.knn_k);
            knn.train(std::move(X), std::move(y), 2);
            predict_all(knn);
            break;
        }
        case ModelKind::Mnb: {
            MultinomialNB nb(opt.nb_alpha);
            nb.train(X, y, 2, vocab.size());
            predict_all(nb);
            break;
        }
    }
    return score(truth, predicted, 2);
}

} // namespace

CvReport kfold_cv(const std::vector<rawdata::Sample>& samples, const CvOptions& opt) {
    auto start = std::chrono::steady_clock::now();
    TaskView view = project_samples(samples, opt.task);
    int per_class[2] = {0, 0};
    for (int l : view.labels) ++per_class[l];
    if (per_class[0] == 0 || per_class[1] == 0)
        throw std::invalid_argument("kfold_cv: a class is absent from the corpus");
    if (opt.k < 2 || opt.k > std::min(per_class[0], per_class[1]))
        throw std::invalid_argument("kfold_cv: k out of range for this corpus");

    std::vector<int> fold = assign_folds(view, samples, opt.k, opt.split, opt.seed);

    CvReport report;
    report.k = opt.k;
    report.fold_accuracy.resize(opt.k);
    report.fold_f1.resize(opt.k);
    parallel_for(
        static_cast<size_t>(opt.k),
        [&](size_t f) {
            Metrics m = run_fold(view, fold, static_cast<int>(f), opt);
            report.fold_accuracy[f] = m.accuracy;
            report.fold_f1[f] = m.macro_f1;
        },
        opt.parallel);

    for (int f = 0; f < opt.k; ++f) {
        report.mean_accuracy += report.fold_accuracy[f];
        report.mean_f1 += report.fold_f1[f];
    }
    report.mean_accuracy /= opt.k;
    report.mean_f1 /= opt.k;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

int TrainedModel::predict_document(const rawdata::RawDocument& normalized_doc) const {
    auto tokens = feat::tokenize(normalized_doc);
    feat::FeatureVector x = feat::make_vector(tokens, vocab, features);
    return tree.predict(x);
}

void TrainedModel::save(std::ostream& os) const {
    os << "oppred-model v1\n";
    os << "task " << task_name(task) << "\n";
    os << "features " << feat::feature_kind_name(features) << "\n";
    os << "set " << rawdata::set_name(set) << "\n";
    os << "labels";
    for (const auto& n : class_names(task)) os << " " << n;
    os << "\n";
    os << "train_programs " << train_programs.size();
    for (const auto& id : train_programs) os << " " << id;
    os << "\n";
    os << "corpus_size " << vocab.corpus_size() << "\n";
    os << "vocab " << vocab.size() << "\n";
    for (uint32_t i = 0; i < vocab.size(); ++i)
        os << vocab.token_at(i) << " " << i << " " << vocab.df_at(i) << "\n";
    tree.dump(os);
}

TrainedModel TrainedModel::load(std::istream& is) {
    TrainedModel m;
    std::string line, word;
    if (!std::getline(is, line) || line != "oppred-model v1")
        throw std::runtime_error("model load: bad header");
    std::string task_s, feat_s, set_s;
    is >> word >> task_s;
    if (word != "task" || !parse_task(task_s, m.task))
        throw std::runtime_error("model load: bad task");
    is >> word >> feat_s;
    if (word != "features" || !feat::parse_feature_kind(feat_s, m.features))
        throw std::runtime_error("model load: bad features");
    is >> word >> set_s;
    if (word != "set" || !rawdata::parse_set_kind(set_s, m.set))
        throw std::runtime_error("model load: bad set");
    is >> word; // labels
    std::string l1, l2;
    is >> l1 >> l2;
    size_t n_train = 0;
    is >> word >> n_train;
    if (word != "train_programs") throw std::runtime_error("model load: bad train_programs");
    m.train_programs.resize(n_train);
    for (auto& id : m.train_programs) is >> id;
    size_t corpus_size = 0, vocab_n = 0;
    is >> word >> corpus_size;
    is >> word >> vocab_n;
    // Vocabulary is rebuilt through fit on synthetic documents carrying the
    // stored df counts, which reproduces indices (lexicographic) and idf.
    std::vector<std::pair<std::string, uint32_t>> entries(vocab_n);
    for (size_t i = 0; i < vocab_n; ++i) {
        uint32_t idx, df;
        is >> entries[i].first >> idx >> df;
        entries[i].second = df;
    }
    std::vector<std::vector<std::string>> docs(corpus_size);
    for (const auto& [token, df] : entries)
        for (uint32_t d = 0; d < df; ++d) docs[d].push_back(token);
    m.vocab = feat::Vocabulary::fit(docs);
    m.tree = DecisionTree::load(is);
    return m;
}

TrainedModel train_model(const std::vector<rawdata::Sample>& samples, Task task,
                         feat::FeatureKind features, rawdata::SetKind set,
                         const TreeParams& params) {
    TrainedModel m;
    m.task = task;
    m.features = features;
    m.set = set;
    std::vector<std::vector<std::string>> docs;
    std::vector<int> labels;
    for (const auto& s : samples) {
        if (s.document.meta.set != set) continue;
        int lbl = project_label(task, s.label);
        if (lbl < 0) continue;
        docs.push_back(feat::tokenize(s.document));
        labels.push_back(lbl);
    }
    if (docs.empty()) throw std::invalid_argument("train_model: no samples for task/set");
    m.vocab = feat::Vocabulary::fit(docs);
    std::vector<feat::FeatureVector> X;
    X.reserve(docs.size());
    for (const auto& d : docs) X.push_back(feat::make_vector(d, m.vocab, features));
    m.tree.train(X, labels, 2, params);
    return m;
}

} // namespace oppred::learn
