#include <CLI11.hpp>

#include "cli/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"opaque predicate corpus generation, training and removal"};
    app.set_config("--config", "", "key=value config file");
    app.require_subcommand(1);

    oppred::cli::GenArgs gen;
    CLI::App* sgen = app.add_subcommand("gen", "generate a labeled corpus");
    sgen->add_option("--seed", gen.seed, "corpus seed");
    sgen->add_option("--size", gen.size, "sample units per set kind");
    sgen->add_option("--recipe", gen.recipes, "obfuscation recipe (repeatable)");
    sgen->add_option("--alpha-loop", gen.alpha_loop, "loop-iteration threshold");
    sgen->add_option("--alpha-paths", gen.alpha_paths, "path-count threshold");
    sgen->add_option("--out", gen.out, "output directory")->required();
    sgen->add_flag("!--no-verify", gen.verify, "skip the oracle soundness gate");
    sgen->add_flag("--serial", gen.serial, "disable parallel workers");

    oppred::cli::TrainArgs train;
    CLI::App* strain = app.add_subcommand("train", "train and persist a decision-tree model");
    strain->add_option("--corpus", train.corpus, "corpus directory")->required();
    strain->add_option("--task", train.task, "detection | deobfuscation");
    strain->add_option("--features", train.features, "tf | tfidf");
    strain->add_option("--set", train.set, "set1 | set2 | set3");
    strain->add_option("--out", train.out, "model file")->required();

    oppred::cli::CvArgs cv;
    CLI::App* scv = app.add_subcommand("cv", "k-fold cross-validation");
    scv->add_option("--corpus", cv.corpus, "corpus directory")->required();
    scv->add_option("--task", cv.task, "detection | deobfuscation");
    scv->add_option("--model", cv.model, "tree | knn | mnb");
    scv->add_option("--features", cv.features, "tf | tfidf");
    scv->add_option("--set", cv.set, "set1 | set2 | set3");
    scv->add_option("--k", cv.k, "number of folds");
    scv->add_option("--seed", cv.seed, "fold-assignment seed");
    scv->add_option("--split", cv.split, "program | sample");
    scv->add_option("--out", cv.out, "report directory");
    scv->add_flag("--serial", cv.serial, "disable parallel folds");

    oppred::cli::StudyArgs study;
    CLI::App* sstudy = app.add_subcommand("study", "raw-data and model studies");
    sstudy->add_option("--corpus", study.corpus, "corpus directory")->required();
    sstudy->add_option("--which", study.which, "set-compare | model-compare | similarity");
    sstudy->add_option("--out", study.out, "report directory");
    sstudy->add_option("--cap", study.cap, "model-compare subsample cap");
    sstudy->add_option("--seed", study.seed, "seed");
    sstudy->add_option("--k", study.k, "folds");
    sstudy->add_flag("--serial", study.serial, "disable parallel folds");

    oppred::cli::DeobfArgs deobf;
    CLI::App* sdeobf = app.add_subcommand("deobf", "detect and strip opaque predicates");
    sdeobf->add_option("--programs", deobf.programs, "corpus directory with programs")->required();
    sdeobf->add_option("--detector", deobf.detector, "detection model file");
    sdeobf->add_option("--deobf-model", deobf.resolver, "TRUE/FALSE model file");
    sdeobf->add_option("--mode", deobf.mode, "model | oracle");
    sdeobf->add_option("--out", deobf.out, "output directory");
    sdeobf->add_option("--seed", deobf.seed, "seed");
    sdeobf->add_option("--alpha-loop", deobf.alpha_loop, "loop-iteration threshold");
    sdeobf->add_option("--alpha-paths", deobf.alpha_paths, "path-count threshold");
    sdeobf->add_flag("--serial", deobf.serial, "disable parallel analysis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : oppred::cli::kExitConfig;
    }

    if (sgen->parsed()) return oppred::cli::cmd_gen(gen);
    if (strain->parsed()) return oppred::cli::cmd_train(train);
    if (scv->parsed()) return oppred::cli::cmd_cv(cv);
    if (sstudy->parsed()) return oppred::cli::cmd_study(study);
    if (sdeobf->parsed()) return oppred::cli::cmd_deobf(deobf);
    return oppred::cli::kExitConfig;
}
