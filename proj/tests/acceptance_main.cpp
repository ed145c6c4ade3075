// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Thresholds are fixed here, not configurable.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "cli/commands.hpp"
#include "oppred/corpus/corpus.hpp"
#include "oppred/corpus/corpus_io.hpp"
#include "oppred/deobf/pipeline.hpp"
#include "oppred/learn/cv.hpp"
#include "oppred/mir/asm_text.hpp"
#include "oppred/parallel.hpp"
#include "support/expr_eval.hpp"

using namespace oppred;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << detail
              << std::endl;
    if (!pass) ++g_failures;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<rawdata::Sample> of_set(const std::vector<rawdata::Sample>& samples,
                                    rawdata::SetKind set) {
    std::vector<rawdata::Sample> out;
    for (const auto& s : samples)
        if (s.document.meta.set == set) out.push_back(s);
    return out;
}

learn::CvReport cv_run(const std::vector<rawdata::Sample>& samples, learn::Task task,
                       learn::ModelKind model, rawdata::SetKind set) {
    learn::CvOptions opt;
    opt.task = task;
    opt.model = model;
    opt.k = 20;
    opt.seed = 20;
    opt.split = learn::SplitMode::Program;
    return learn::kfold_cv(of_set(samples, set), opt);
}

double pct(double x) { return 100.0 * x; }

std::string fmt(double v, int prec = 2) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

} // namespace

int main() {
    fs::path work = fs::temp_directory_path() / "oppred_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    std::cout << "acceptance: generating the 5000-sample corpus (Arithmetic+MBA+Environment)"
              << std::endl;
    corpus::GenConfig cfg;
    cfg.seed = 1001;
    cfg.size = 5000;
    // the three opaque recipes named by the accuracy criterion plus two of
    // the clean combinations real datasets carry
    cfg.recipes = {"AddOpaque(Arithmetic,2)", "AddOpaque(MBA,2)", "AddOpaque(Environment,2)",
                   "EncodeArithmetic", "Flatten"};
    corpus::GeneratedCorpus corpusA = corpus::generate_corpus(cfg);

    // ---- 1. corpus soundness gate -------------------------------------------
    {
        std::vector<std::pair<const mir::Program*, const obf::InjectionLog*>> items;
        for (const auto& b : corpusA.bundles) items.push_back({&b.obfuscated, &b.log});
        deobf::GateOptions gopt;
        gopt.env = corpusA.env;
        deobf::GateResult gate = deobf::soundness_gate(items, gopt);
        bool pass = gate.pass() && gate.wall_seconds < 600.0;
        report(1, pass,
               "oracle verdicts matched " + std::to_string(gate.matched) + "/" +
                   std::to_string(gate.checked) + " injected predicates in " +
                   fmt(gate.wall_seconds, 1) + "s (< 600s required)");
        for (size_t i = 0; i < gate.mismatches.size() && i < 5; ++i)
            std::cout << "        " << gate.mismatches[i] << std::endl;
    }

    // ---- 2. pipeline accuracy trend -----------------------------------------
    learn::CvReport det3 = cv_run(corpusA.samples, learn::Task::Detection,
                                  learn::ModelKind::Tree, rawdata::SetKind::Set3);
    learn::CvReport deo3 = cv_run(corpusA.samples, learn::Task::Deobfuscation,
                                  learn::ModelKind::Tree, rawdata::SetKind::Set3);
    {
        bool pass = det3.mean_accuracy >= 0.90 && deo3.mean_accuracy >= 0.85;
        report(2, pass,
               "set3+tf+tree 20-fold program-split: detection " + fmt(pct(det3.mean_accuracy)) +
                   "% (>= 90%), deobfuscation " + fmt(pct(deo3.mean_accuracy)) + "% (>= 85%)");
    }

    // ---- 3. study-2 trend ----------------------------------------------------
    {
        learn::CvReport det1 = cv_run(corpusA.samples, learn::Task::Detection,
                                      learn::ModelKind::Tree, rawdata::SetKind::Set1);
        learn::CvReport deo1 = cv_run(corpusA.samples, learn::Task::Deobfuscation,
                                      learn::ModelKind::Tree, rawdata::SetKind::Set1);
        auto set1 = of_set(corpusA.samples, rawdata::SetKind::Set1);
        auto set3 = of_set(corpusA.samples, rawdata::SetKind::Set3);
        double sim1_det = rawdata::cross_label_similarity(set1, rawdata::SimilarityTask::Detection);
        double sim3_det = rawdata::cross_label_similarity(set3, rawdata::SimilarityTask::Detection);
        double sim1_deo =
            rawdata::cross_label_similarity(set1, rawdata::SimilarityTask::Deobfuscation);
        double sim3_deo =
            rawdata::cross_label_similarity(set3, rawdata::SimilarityTask::Deobfuscation);
        bool acc_trend = det3.mean_accuracy > det1.mean_accuracy &&
                         deo3.mean_accuracy > deo1.mean_accuracy;
        bool sim_trend = sim3_det < sim1_det && sim3_deo < sim1_deo;
        report(3, acc_trend && sim_trend,
               "set3 > set1 accuracy (det " + fmt(pct(det3.mean_accuracy)) + ">" +
                   fmt(pct(det1.mean_accuracy)) + ", deobf " + fmt(pct(deo3.mean_accuracy)) +
                   ">" + fmt(pct(deo1.mean_accuracy)) + "); set3 < set1 similarity (det " +
                   fmt(sim3_det) + "<" + fmt(sim1_det) + ", deobf " + fmt(sim3_deo) + "<" +
                   fmt(sim1_deo) + ")");
    }

    // ---- 4. study-3/4 trend --------------------------------------------------
    {
        learn::CvReport mnb = cv_run(corpusA.samples, learn::Task::Detection,
                                     learn::ModelKind::Mnb, rawdata::SetKind::Set3);
        double gap = pct(det3.mean_accuracy) - pct(mnb.mean_accuracy);
        report(4, gap >= 10.0,
               "detection tf: tree " + fmt(pct(det3.mean_accuracy)) + "% vs mnb " +
                   fmt(pct(mnb.mean_accuracy)) + "% (gap " + fmt(gap) + " >= 10 points)");
    }

    // ---- 5. deobfuscation safety ---------------------------------------------
    {
        learn::TrainedModel detector = learn::train_model(
            corpusA.samples, learn::Task::Detection, feat::FeatureKind::Tf,
            rawdata::SetKind::Set3);
        learn::TrainedModel resolver = learn::train_model(
            corpusA.samples, learn::Task::Deobfuscation, feat::FeatureKind::Tf,
            rawdata::SetKind::Set3);

        corpus::GenConfig evalcfg = cfg;
        evalcfg.seed = 2002;
        std::vector<corpus::ProgramBundle> eval_bundles;
        for (int i = 0; eval_bundles.size() < 100 && i < 1000; ++i) {
            auto b = corpus::make_bundle(evalcfg, i);
            if (b) eval_bundles.push_back(std::move(*b));
        }

        int model_total = 0, model_removed = 0, model_equiv_fail = 0;
        int oracle_fp = 0, oracle_fn = 0, oracle_total = 0, oracle_removed = 0,
            oracle_equiv_fail = 0;
        for (const auto& b : eval_bundles) {
            deobf::PipelineOptions mopt;
            mopt.detector = &detector;
            mopt.resolver = &resolver;
            mopt.seed = 5;
            deobf::PipelineResult mres = deobf::run_pipeline(b.obfuscated, b.log, mopt);
            model_total += mres.report.total_opaque;
            model_removed += mres.report.removed_opaque;
            if (!mres.report.equivalence_pass) ++model_equiv_fail;

            deobf::PipelineOptions oopt;
            oopt.mode = deobf::PipelineMode::Oracle;
            oopt.seed = 5;
            deobf::PipelineResult ores = deobf::run_pipeline(b.obfuscated, b.log, oopt);
            oracle_total += ores.report.total_opaque;
            oracle_removed += ores.report.removed_opaque;
            oracle_fp += ores.report.false_positives;
            oracle_fn += ores.report.false_negatives;
            if (!ores.report.equivalence_pass) ++oracle_equiv_fail;
        }
        double model_rate = model_total ? 100.0 * model_removed / model_total : 0.0;
        double oracle_rate = oracle_total ? 100.0 * oracle_removed / oracle_total : 0.0;
        bool pass = eval_bundles.size() == 100 && model_equiv_fail == 0 &&
                    oracle_equiv_fail == 0 && model_rate >= 80.0 && oracle_rate == 100.0 &&
                    oracle_fp == 0 && oracle_fn == 0;
        report(5, pass,
               "100 held-out programs: model removal " + fmt(model_rate, 1) +
                   "% (>= 80%), oracle removal " + fmt(oracle_rate, 1) +
                   "% (= 100%), oracle FP=" + std::to_string(oracle_fp) + " FN=" +
                   std::to_string(oracle_fn) + ", equivalence failures " +
                   std::to_string(model_equiv_fail + oracle_equiv_fail));
    }

    // ---- 6. symbolic-execution invariants -------------------------------------
    {
        bool budgets_ok = true;
        for (const auto& b : corpusA.bundles) {
            for (const auto& fn : b.obfuscated.functions) {
                auto backs = symex::back_edges(fn);
                for (const auto& pid : enumerate_predicates(fn)) {
                    symex::PathSet ps = symex::enumerate_paths(fn, pid, cfg.budget);
                    if (static_cast<int>(ps.paths.size()) > cfg.budget.alpha_paths)
                        budgets_ok = false;
                    for (const auto& path : ps.paths) {
                        std::map<std::pair<int, int>, int> uses;
                        for (size_t i = 0; i + 1 < path.size(); ++i) {
                            int u = fn.block_index(path[i]);
                            int v = fn.block_index(path[i + 1]);
                            if (backs.count({u, v}) && ++uses[{u, v}] > cfg.budget.alpha_loop)
                                budgets_ok = false;
                        }
                    }
                }
            }
        }

        // concrete consistency on 50 memory-free functions, exhaustive 8-bit
        int functions_checked = 0;
        long checks = 0;
        bool consistent = true;
        symex::PathBudget tiny_budget;
        tiny_budget.alpha_loop = 5;
        tiny_budget.alpha_paths = 32;
        for (uint64_t seed = 0; functions_checked < 50 && seed < 200; ++seed) {
            mir::Program p = corpus::make_tiny_program(seed, "main");
            const mir::Function& f = p.functions[0];
            auto preds = enumerate_predicates(f);
            if (preds.empty()) continue;
            ++functions_checked;
            int arity = f.arity;
            uint64_t limit = arity == 1 ? 256 : 65536;
            for (const auto& pid : preds) {
                auto states = symex::collect_states(p, f, pid, tiny_budget);
                for (uint64_t xi = 0; xi < limit; ++xi) {
                    std::vector<uint64_t> in;
                    in.push_back(xi & 0xff);
                    if (arity > 1) in.push_back((xi >> 8) & 0xff);
                    auto trace = testsupport::run_entry_trace(p, in, corpusA.env);
                    if (!trace.ok) { consistent = false; continue; }
                    std::vector<std::string> prefix;
                    for (const auto& lbl : trace.blocks) {
                        prefix.push_back(lbl);
                        if (lbl == pid.block) break;
                    }
                    if (prefix.empty() || prefix.back() != pid.block) continue;
                    for (const auto& st : states) {
                        if (st.path != prefix) continue;
                        testsupport::Valuation val;
                        val.env = corpusA.env;
                        for (int a = 0; a < arity; ++a)
                            val.free_ids["r" + std::to_string(a)] = in[a];
                        auto ssa = testsupport::eval_state(st, val);
                        uint64_t predicted =
                            testsupport::eval_expr(st.predicate_dst, ssa, val);
                        size_t pos = prefix.size();
                        if (pos >= trace.blocks.size() ||
                            predicted != mir::block_address(p, "main", trace.blocks[pos]))
                            consistent = false;
                        ++checks;
                    }
                }
            }
        }
        bool pass = budgets_ok && consistent && functions_checked == 50 && checks > 0;
        report(6, pass,
               "path/back-edge budgets hold on the corpus; symbolic vs concrete agreed on " +
                   std::to_string(checks) + " path evaluations across " +
                   std::to_string(functions_checked) + " small functions");
    }

    // ---- 7. normalization invariance -------------------------------------------
    {
        bool shift_ok = true;
        for (const auto& b : corpusA.bundles) {
            mir::Program shifted = b.obfuscated;
            shifted.base_address += 0x10000;
            for (const auto& fn : b.obfuscated.functions) {
                const mir::Function* sfn = shifted.find_function(fn.name);
                for (const auto& pid : enumerate_predicates(fn)) {
                    auto sa = symex::collect_states(b.obfuscated, fn, pid, cfg.budget);
                    auto sb = symex::collect_states(shifted, *sfn, pid, cfg.budget);
                    if (sa.size() != sb.size()) { shift_ok = false; continue; }
                    for (size_t i = 0; i < sa.size(); ++i) {
                        rawdata::DocMeta meta;
                        auto da = rawdata::normalize(
                            rawdata::render_state(b.obfuscated, sa[i], rawdata::SetKind::Set3, meta));
                        auto db = rawdata::normalize(
                            rawdata::render_state(shifted, sb[i], rawdata::SetKind::Set3, meta));
                        if (da.joined() != db.joined()) shift_ok = false;
                    }
                }
            }
        }

        int idempotent_checked = 0;
        bool idempotent = true;
        for (const auto& s : corpusA.samples) {
            if (idempotent_checked >= 10000) break;
            rawdata::RawDocument renorm = rawdata::normalize(s.document);
            if (renorm.joined() != s.document.joined()) idempotent = false;
            ++idempotent_checked;
        }
        report(7, shift_ok && idempotent && idempotent_checked == 10000,
               "base-address shift left all normalized set3 documents byte-identical; "
               "normalize idempotent on " + std::to_string(idempotent_checked) + " documents");
    }

    // ---- 8. numerical oracles ---------------------------------------------------
    {
        Rng rng(808);
        bool split_ok = true;
        for (int trial = 0; trial < 100; ++trial) {
            size_t n = 4 + rng.below(47);
            int n_feat = 1 + static_cast<int>(rng.below(6));
            std::vector<feat::FeatureVector> X;
            std::vector<int> y;
            for (size_t i = 0; i < n; ++i) {
                feat::FeatureVector x;
                for (int f = 0; f < n_feat; ++f)
                    if (rng.chance(75))
                        x.push_back({static_cast<uint32_t>(f),
                                     static_cast<double>(rng.below(12))});
                X.push_back(std::move(x));
                y.push_back(static_cast<int>(rng.below(2)));
            }
            bool has0 = false, has1 = false;
            for (int lbl : y) (lbl ? has1 : has0) = true;
            if (!has0 || !has1) y[0] = 1 - y[0];

            learn::BruteSplit brute = learn::brute_force_best_split(X, y, 2);
            learn::DecisionTree tree;
            tree.train(X, y, 2);
            const auto& root = tree.nodes()[0];
            if (!brute.found) {
                if (root.feature >= 0) split_ok = false;
                continue;
            }
            if (root.feature != brute.feature ||
                std::abs(root.threshold - brute.threshold) > 1e-12)
                split_ok = false;
        }

        // tf-idf against the formula, 1e-12 relative tolerance
        bool tfidf_ok = true;
        auto set3 = of_set(corpusA.samples, rawdata::SetKind::Set3);
        std::vector<std::vector<std::string>> docs;
        for (size_t i = 0; i < 500 && i < set3.size(); ++i)
            docs.push_back(feat::tokenize(set3[i].document));
        feat::Vocabulary vocab = feat::Vocabulary::fit(docs);
        double n_docs = static_cast<double>(docs.size());
        for (size_t i = 0; i < docs.size(); ++i) {
            std::map<std::string, int> counts;
            for (const auto& t : docs[i]) ++counts[t];
            feat::FeatureVector v = feat::tfidf_vector(docs[i], vocab);
            for (const auto& [idx, w] : v) {
                const std::string& token = vocab.token_at(idx);
                double expect = counts[token] *
                                (std::log((1.0 + n_docs) / (1.0 + vocab.df_at(idx))) + 1.0);
                if (std::abs(w - expect) > 1e-12 * std::max(1.0, std::abs(expect)))
                    tfidf_ok = false;
            }
        }
        report(8, split_ok && tfidf_ok,
               "gini splits matched brute force on 100 datasets; tf-idf matched the formula at "
               "1e-12 relative tolerance");
    }

    // ---- 9. reproducibility -------------------------------------------------------
    {
        auto run_stack = [&](const fs::path& dir) {
            cli::GenArgs g;
            g.seed = 303;
            g.size = 1000;
            g.recipes = {"AddOpaque(Arithmetic,1)", "AddOpaque(MBA,1)"};
            g.out = (dir / "corpus").string();
            g.verify = false;
            if (cli::cmd_gen(g) != 0) return false;
            cli::TrainArgs t;
            t.corpus = (dir / "corpus").string();
            t.out = (dir / "detector.model").string();
            if (cli::cmd_train(t) != 0) return false;
            cli::CvArgs c;
            c.corpus = (dir / "corpus").string();
            c.k = 10;
            c.out = (dir / "reports").string();
            return cli::cmd_cv(c) == 0;
        };
        fs::path d1 = work / "repro1";
        fs::path d2 = work / "repro2";
        bool ran = run_stack(d1) && run_stack(d2);
        bool same = ran;
        if (ran) {
            for (const char* rel :
                 {"corpus/corpus.jsonl", "corpus/manifest.json", "detector.model",
                  "reports/cv_detection_tree_tf_set3.csv",
                  "reports/cv_detection_tree_tf_set3_folds.csv"}) {
                if (slurp(d1 / rel) != slurp(d2 / rel)) {
                    same = false;
                    std::cout << "        differs: " << rel << std::endl;
                }
            }
            // and every program file
            for (const auto& entry : fs::directory_iterator(d1 / "corpus" / "programs")) {
                fs::path other = d2 / "corpus" / "programs" / entry.path().filename();
                if (slurp(entry.path()) != slurp(other)) same = false;
            }
        }
        report(9, same,
               "two identical (config, seed) runs produced byte-identical corpus, model dump "
               "and report files");
    }

    fs::remove_all(work);
    std::cout << (g_failures == 0 ? "acceptance: all criteria passed"
                                  : "acceptance: FAILURES: " + std::to_string(g_failures))
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
