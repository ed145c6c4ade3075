#include "cli/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>

#include "oppred/corpus/corpus.hpp"
#include "oppred/mir/asm_text.hpp"
#include "oppred/corpus/corpus_io.hpp"
#include "oppred/deobf/pipeline.hpp"
#include "oppred/learn/cv.hpp"
#include "oppred/rng.hpp"

namespace oppred::cli {

namespace fs = std::filesystem;

namespace {

std::vector<rawdata::Sample> filter_set(const std::vector<rawdata::Sample>& samples,
                                        rawdata::SetKind set) {
    std::vector<rawdata::Sample> out;
    for (const auto& s : samples)
        if (s.document.meta.set == set) out.push_back(s);
    return out;
}

// "Types of OP" / "Other transforms" columns derived from the corpus
// recipes, mirroring the evaluation tables.
std::pair<std::string, std::string> recipe_columns(const std::vector<rawdata::Sample>& samples) {
    std::set<std::string> kinds, others;
    std::set<std::string> recipes;
    for (const auto& s : samples) recipes.insert(s.recipe);
    for (const auto& r : recipes) {
        obf::Recipe recipe;
        try {
            recipe = obf::parse_recipe(r);
        } catch (...) {
            continue;
        }
        for (const auto& t : recipe.transforms) {
            if (const auto* a = std::get_if<obf::AddOpaque>(&t)) kinds.insert(obf::kind_name(a->kind));
            else if (std::holds_alternative<obf::EncodeArithmetic>(t)) others.insert("EncA");
            else if (std::holds_alternative<obf::EncodeLiterals>(t)) others.insert("EncL");
            else if (std::holds_alternative<obf::EncodeData>(t)) others.insert("EncD");
            else others.insert("Flat");
        }
    }
    auto join = [](const std::set<std::string>& xs) {
        std::string out;
        for (const auto& x : xs) out += (out.empty() ? "" : "+") + x;
        return out.empty() ? std::string("None") : out;
    };
    return {join(kinds), join(others)};
}

double pct(double x) { return 100.0 * x; }

} // namespace

int cmd_gen(const GenArgs& args) {
    if (args.out.empty() || args.recipes.empty()) {
        std::cerr << "gen: --out and at least one --recipe are required\n";
        return kExitConfig;
    }
    corpus::GenConfig cfg;
    cfg.seed = args.seed;
    cfg.size = args.size;
    cfg.recipes = args.recipes;
    cfg.budget.alpha_loop = args.alpha_loop;
    cfg.budget.alpha_paths = args.alpha_paths;
    cfg.parallel = !args.serial;
    if (cfg.budget.alpha_loop < 1 || cfg.budget.alpha_paths < 1) {
        std::cerr << "gen: alpha thresholds must be >= 1\n";
        return kExitConfig;
    }

    corpus::GeneratedCorpus corpus;
    try {
        corpus = corpus::generate_corpus(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "gen: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "gen: " << e.what() << "\n";
        return kExitAnalysis;
    }
    corpus::write_corpus(args.out, corpus, cfg);

    std::cout << "corpus: " << corpus.samples.size() << " records ("
              << corpus.samples.size() / 3 << " units per set) from "
              << corpus.stats.programs_used << " programs ("
              << corpus.stats.programs_failed << " rejected)\n";
    for (const auto& [label, n] : corpus.stats.label_counts)
        std::cout << "  " << label << ": " << n << "\n";

    if (args.verify) {
        std::vector<std::pair<const mir::Program*, const obf::InjectionLog*>> items;
        items.reserve(corpus.bundles.size());
        for (const auto& b : corpus.bundles) items.push_back({&b.obfuscated, &b.log});
        deobf::GateOptions gopt;
        gopt.env = corpus.env;
        gopt.parallel = !args.serial;
        deobf::GateResult gate = deobf::soundness_gate(items, gopt);
        std::cout << "soundness gate: " << gate.matched << "/" << gate.checked
                  << " injected predicates matched their oracle verdict in " << std::fixed
                  << std::setprecision(1) << gate.wall_seconds << "s\n";
        if (!gate.pass()) {
            for (const auto& m : gate.mismatches) std::cerr << "  MISMATCH " << m << "\n";
            return kExitAnalysis;
        }
    }
    return kExitOk;
}

int cmd_train(const TrainArgs& args) {
    learn::Task task;
    feat::FeatureKind features;
    rawdata::SetKind set;
    if (args.corpus.empty() || args.out.empty() || !learn::parse_task(args.task, task) ||
        !feat::parse_feature_kind(args.features, features) ||
        !rawdata::parse_set_kind(args.set, set)) {
        std::cerr << "train: bad or missing arguments\n";
        return kExitConfig;
    }
    try {
        corpus::LoadedCorpus corpus = corpus::load_corpus(args.corpus);
        learn::TrainedModel model =
            learn::train_model(corpus.samples, task, features, set);
        model.train_programs = corpus.program_ids;
        fs::path out(args.out);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        std::ofstream f(out);
        model.save(f);
        std::cout << "model: " << args.out << " (vocab " << model.vocab.size() << ", depth "
                  << model.tree.depth() << ")\n";
    } catch (const std::exception& e) {
        std::cerr << "train: " << e.what() << "\n";
        return kExitAnalysis;
    }
    return kExitOk;
}

namespace {

void write_cv_files(const fs::path& dir, const std::string& stem, const learn::CvReport& report,
                    const CvArgs& args, const std::string& types, const std::string& transforms) {
    fs::create_directories(dir);
    {
        std::ofstream f(dir / (stem + ".csv"));
        f << "task,model,features,set,k,split,types_of_op,other_transforms,accuracy_pct,f1_pct\n";
        f << args.task << "," << args.model << "," << args.features << "," << args.set << ","
          << report.k << "," << args.split << "," << types << "," << transforms << ","
          << std::fixed << std::setprecision(2) << pct(report.mean_accuracy) << ","
          << pct(report.mean_f1) << "\n";
    }
    {
        std::ofstream f(dir / (stem + "_folds.csv"));
        f << "fold,accuracy,f1\n";
        f << std::setprecision(6) << std::fixed;
        for (int i = 0; i < report.k; ++i)
            f << i << "," << report.fold_accuracy[i] << "," << report.fold_f1[i] << "\n";
    }
}

} // namespace

int cmd_cv(const CvArgs& args) {
    learn::CvOptions opt;
    rawdata::SetKind set;
    if (args.corpus.empty() || !learn::parse_task(args.task, opt.task) ||
        !learn::parse_model_kind(args.model, opt.model) ||
        !feat::parse_feature_kind(args.features, opt.features) ||
        !rawdata::parse_set_kind(args.set, set) ||
        (args.split != "program" && args.split != "sample")) {
        std::cerr << "cv: bad or missing arguments\n";
        return kExitConfig;
    }
    opt.k = args.k;
    opt.seed = args.seed;
    opt.split = args.split == "program" ? learn::SplitMode::Program : learn::SplitMode::Sample;
    opt.parallel = !args.serial;
    try {
        corpus::LoadedCorpus corpus = corpus::load_corpus(args.corpus);
        auto samples = filter_set(corpus.samples, set);
        learn::CvReport report = learn::kfold_cv(samples, opt);
        auto [types, transforms] = recipe_columns(samples);
        std::cout << "Types of OP, Other transforms, Analysis time, Accuracy %, F1 %\n";
        std::cout << types << ", " << transforms << ", " << std::fixed << std::setprecision(2)
                  << report.wall_seconds << "s, " << pct(report.mean_accuracy) << ", "
                  << pct(report.mean_f1) << "\n";
        if (!args.out.empty())
            write_cv_files(args.out, "cv_" + args.task + "_" + args.model + "_" + args.features +
                                         "_" + args.set,
                           report, args, types, transforms);
    } catch (const std::invalid_argument& e) {
        std::cerr << "cv: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "cv: " << e.what() << "\n";
        return kExitAnalysis;
    }
    return kExitOk;
}

namespace {

// Deterministic stratified subsample for the k-NN study: seeded shuffle per
// label, quota split evenly.
std::vector<rawdata::Sample> subsample(const std::vector<rawdata::Sample>& samples, int cap,
                                       uint64_t seed) {
    if (cap <= 0 || static_cast<int>(samples.size()) <= cap) return samples;
    std::map<std::string, std::vector<int>> by_label;
    for (size_t i = 0; i < samples.size(); ++i)
        by_label[rawdata::label_name(samples[i].label)].push_back(static_cast<int>(i));
    std::vector<int> chosen;
    int quota = cap / static_cast<int>(by_label.size());
    Rng rng(seed ^ 0x5ab5a3ULL);
    for (auto& [label, idx] : by_label) {
        for (size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
        for (int i = 0; i < quota && i < static_cast<int>(idx.size()); ++i)
            chosen.push_back(idx[i]);
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<rawdata::Sample> out;
    out.reserve(chosen.size());
    for (int i : chosen) out.push_back(samples[i]);
    return out;
}

} // namespace

int cmd_study(const StudyArgs& args) {
    if (args.corpus.empty() ||
        (args.which != "set-compare" && args.which != "model-compare" &&
         args.which != "similarity")) {
        std::cerr << "study: --corpus and --which in {set-compare, model-compare, similarity}\n";
        return kExitConfig;
    }
    try {
        corpus::LoadedCorpus corpus = corpus::load_corpus(args.corpus);
        fs::path outdir = args.out.empty() ? fs::path(args.corpus) : fs::path(args.out);
        fs::create_directories(outdir);

        if (args.which == "similarity") {
            std::ofstream f(outdir / "study_similarity.csv");
            f << "set,detection_similarity_pct,deobfuscation_similarity_pct\n";
            std::cout << "Raw data, Detection similarities, Deobfuscation similarities\n";
            for (auto set : {rawdata::SetKind::Set1, rawdata::SetKind::Set2,
                             rawdata::SetKind::Set3}) {
                auto samples = filter_set(corpus.samples, set);
                double det =
                    rawdata::cross_label_similarity(samples, rawdata::SimilarityTask::Detection);
                double deo = rawdata::cross_label_similarity(
                    samples, rawdata::SimilarityTask::Deobfuscation);
                f << rawdata::set_name(set) << "," << std::fixed << std::setprecision(2) << det
                  << "," << deo << "\n";
                std::cout << rawdata::set_name(set) << ", " << std::fixed << std::setprecision(2)
                          << det << "%, " << deo << "%\n";
            }
            return kExitOk;
        }

        if (args.which == "set-compare") {
            std::ofstream f(outdir / "study_set_compare.csv");
            f << "set,task,accuracy_pct,f1_pct\n";
            std::cout << "Set, Task, Accuracy %, F1 %\n";
            for (auto set : {rawdata::SetKind::Set1, rawdata::SetKind::Set2,
                             rawdata::SetKind::Set3}) {
                for (auto task : {learn::Task::Detection, learn::Task::Deobfuscation}) {
                    learn::CvOptions opt;
                    opt.task = task;
                    opt.k = args.k;
                    opt.seed = args.seed;
                    opt.parallel = !args.serial;
                    auto samples = filter_set(corpus.samples, set);
                    learn::CvReport r = learn::kfold_cv(samples, opt);
                    f << rawdata::set_name(set) << "," << learn::task_name(task) << ","
                      << std::fixed << std::setprecision(2) << pct(r.mean_accuracy) << ","
                      << pct(r.mean_f1) << "\n";
                    std::cout << rawdata::set_name(set) << ", " << learn::task_name(task) << ", "
                              << std::fixed << std::setprecision(2) << pct(r.mean_accuracy)
                              << ", " << pct(r.mean_f1) << "\n";
                }
            }
            return kExitOk;
        }

        // model-compare
        std::ofstream f(outdir / "study_model_compare.csv");
        f << "model,features,accuracy_pct,f1_pct\n";
        std::cout << "Classification algorithm, Features, Accuracy %, F1 %\n";
        auto set3 = filter_set(corpus.samples, rawdata::SetKind::Set3);
        auto capped = subsample(set3, args.cap, args.seed);
        for (auto model : {learn::ModelKind::Tree, learn::ModelKind::Knn, learn::ModelKind::Mnb}) {
            for (auto features : {feat::FeatureKind::Tf, feat::FeatureKind::TfIdf}) {
                learn::CvOptions opt;
                opt.task = learn::Task::Detection;
                opt.model = model;
                opt.features = features;
                opt.k = args.k;
                opt.seed = args.seed;
                opt.parallel = !args.serial;
                learn::CvReport r = learn::kfold_cv(capped, opt);
                f << learn::model_kind_name(model) << "," << feat::feature_kind_name(features)
                  << "," << std::fixed << std::setprecision(2) << pct(r.mean_accuracy) << ","
                  << pct(r.mean_f1) << "\n";
                std::cout << learn::model_kind_name(model) << ", "
                          << feat::feature_kind_name(features) << ", " << std::fixed
                          << std::setprecision(2) << pct(r.mean_accuracy) << ", "
                          << pct(r.mean_f1) << "\n";
            }
        }
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        std::cerr << "study: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "study: " << e.what() << "\n";
        return kExitAnalysis;
    }
}

int cmd_deobf(const DeobfArgs& args) {
    if (args.programs.empty() || (args.mode != "model" && args.mode != "oracle") ||
        (args.mode == "model" && (args.detector.empty() || args.resolver.empty()))) {
        std::cerr << "deobf: need --programs, --mode, and models in model mode\n";
        return kExitConfig;
    }
    try {
        auto programs = corpus::load_programs(args.programs);
        learn::TrainedModel detector, resolver;
        if (args.mode == "model") {
            std::ifstream df(args.detector), rf(args.resolver);
            if (!df || !rf) {
                std::cerr << "deobf: cannot open model files\n";
                return kExitConfig;
            }
            detector = learn::TrainedModel::load(df);
            resolver = learn::TrainedModel::load(rf);
            // Train/eval disjointness at program granularity.
            std::set<std::string> train_ids(detector.train_programs.begin(),
                                            detector.train_programs.end());
            for (const auto& p : programs) {
                if (train_ids.count(p.id)) {
                    std::cerr << "deobf: evaluation program " << p.id
                              << " appears in the training corpus\n";
                    return kExitConfig;
                }
            }
        }

        fs::path outdir = args.out.empty() ? fs::path(args.programs) / "deobf" : fs::path(args.out);
        fs::create_directories(outdir / "deobfuscated");

        deobf::PipelineOptions opt;
        opt.mode = args.mode == "model" ? deobf::PipelineMode::Model : deobf::PipelineMode::Oracle;
        opt.budget.alpha_loop = args.alpha_loop;
        opt.budget.alpha_paths = args.alpha_paths;
        opt.detector = &detector;
        opt.resolver = &resolver;
        opt.seed = args.seed;
        opt.parallel = !args.serial;

        struct RecipeAgg {
            int total = 0, removed = 0, fp = 0, fn = 0, errors = 0;
        };
        std::map<std::string, RecipeAgg> by_recipe;
        int equiv_fail = 0;
        double wall = 0.0;
        std::ofstream rows(outdir / "deobf_programs.csv");
        rows << "program,recipe,opaque_total,opaque_removed,false_positives,false_negatives,"
                "errors,equivalence\n";

        for (const auto& lp : programs) {
            deobf::PipelineResult res = deobf::run_pipeline(lp.obfuscated, lp.log, opt);
            wall += res.report.wall_seconds;
            RecipeAgg& agg = by_recipe[lp.recipe];
            agg.total += res.report.total_opaque;
            agg.removed += res.report.removed_opaque;
            agg.fp += res.report.false_positives;
            agg.fn += res.report.false_negatives;
            agg.errors += res.report.errors;
            if (!res.report.equivalence_pass) ++equiv_fail;
            rows << lp.id << "," << lp.recipe << "," << res.report.total_opaque << ","
                 << res.report.removed_opaque << "," << res.report.false_positives << ","
                 << res.report.false_negatives << "," << res.report.errors << ","
                 << (res.report.equivalence_pass ? "pass" : "FAIL") << "\n";
            std::ofstream pf(outdir / "deobfuscated" / (lp.id + ".asm"));
            pf << mir::emit_asm(res.program);
        }

        std::ofstream report(outdir / "deobf_report.csv");
        report << "tool,obfuscation,op_detection_rate_pct,fp,fn,errors\n";
        std::cout << "Tool, Obfuscation, OP detection rate %, #FP, #FN, Errors\n";
        RecipeAgg total;
        for (const auto& [recipe, agg] : by_recipe) {
            double rate = agg.total > 0 ? 100.0 * agg.removed / agg.total : 100.0;
            report << args.mode << "," << recipe << "," << std::fixed << std::setprecision(2)
                   << rate << "," << agg.fp << "," << agg.fn << "," << agg.errors << "\n";
            std::cout << args.mode << ", " << recipe << ", " << std::fixed
                      << std::setprecision(1) << rate << "%, " << agg.fp << ", " << agg.fn
                      << ", " << agg.errors << "\n";
            total.total += agg.total;
            total.removed += agg.removed;
            total.fp += agg.fp;
            total.fn += agg.fn;
            total.errors += agg.errors;
        }
        double rate = total.total > 0 ? 100.0 * total.removed / total.total : 100.0;
        report << args.mode << ",ALL," << std::fixed << std::setprecision(2) << rate << ","
               << total.fp << "," << total.fn << "," << total.errors << "\n";
        std::cout << args.mode << ", ALL, " << std::fixed << std::setprecision(1) << rate
                  << "%, " << total.fp << ", " << total.fn << ", " << total.errors << " ("
                  << std::setprecision(1) << wall << "s";
        if (equiv_fail) std::cout << ", " << equiv_fail << " equivalence FAILURES";
        std::cout << ")\n";
        if (equiv_fail > 0) return kExitAnalysis;
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        std::cerr << "deobf: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "deobf: " << e.what() << "\n";
        return kExitAnalysis;
    }
}

} // namespace oppred::cli
