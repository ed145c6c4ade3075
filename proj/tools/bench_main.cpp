// Benchmark comparing the serial reference implementations against the
// OpenMP-parallel kernels: oracle sweeps, corpus generation, CV folds.

#include <chrono>
#include <iomanip>
#include <iostream>

#include "oppred/corpus/corpus.hpp"
#include "oppred/deobf/pipeline.hpp"
#include "oppred/learn/cv.hpp"
#include "oppred/parallel.hpp"

using namespace oppred;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial_s, double parallel_s) {
    std::cout << std::left << std::setw(24) << name << std::right << std::fixed
              << std::setprecision(3) << std::setw(10) << serial_s << "s" << std::setw(10)
              << parallel_s << "s" << std::setw(9) << std::setprecision(2)
              << (parallel_s > 0 ? serial_s / parallel_s : 0.0) << "x\n";
}

} // namespace

int main() {
    std::cout << "threads available: " << max_threads() << "\n\n";
    std::cout << std::left << std::setw(24) << "kernel" << std::right << std::setw(11) << "serial"
              << std::setw(11) << "parallel" << std::setw(10) << "speedup" << "\n";

    // Corpus generation (programs, transforms, symex, rendering).
    corpus::GenConfig cfg;
    cfg.seed = 42;
    cfg.size = 1000;
    cfg.recipes = {"AddOpaque(Arithmetic,2)", "AddOpaque(MBA,2)", "AddOpaque(Environment,2)"};
    double gen_serial, gen_parallel;
    corpus::GeneratedCorpus corp;
    {
        auto t0 = std::chrono::steady_clock::now();
        cfg.parallel = false;
        corp = corpus::generate_corpus(cfg);
        gen_serial = seconds_since(t0);
    }
    {
        auto t0 = std::chrono::steady_clock::now();
        cfg.parallel = true;
        corp = corpus::generate_corpus(cfg);
        gen_parallel = seconds_since(t0);
    }
    report("corpus generation", gen_serial, gen_parallel);

    // Oracle sweep over one predicate of each bundle.
    {
        deobf::OracleDomain domain;
        std::vector<std::pair<mir::Machine, mir::PredicateId>> targets;
        for (size_t i = 0; i < corp.bundles.size() && targets.size() < 12; ++i) {
            for (const auto& [pid, entry] : corp.bundles[i].log) {
                if (entry.label != rawdata::Label::Normal) {
                    targets.emplace_back(mir::Machine(corp.bundles[i].obfuscated), pid);
                    break;
                }
            }
        }
        auto t0 = std::chrono::steady_clock::now();
        for (auto& [m, pid] : targets) deobf::oracle_serial(m, pid, domain, {});
        double s = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        for (auto& [m, pid] : targets) deobf::oracle(m, pid, domain, {}, true);
        double par = seconds_since(t0);
        report("oracle sweep (12 preds)", s, par);
    }

    // Cross-validation folds.
    {
        std::vector<rawdata::Sample> set3;
        for (const auto& s : corp.samples)
            if (s.document.meta.set == rawdata::SetKind::Set3) set3.push_back(s);
        learn::CvOptions opt;
        opt.k = 10;
        opt.parallel = false;
        auto t0 = std::chrono::steady_clock::now();
        learn::CvReport r1 = learn::kfold_cv(set3, opt);
        double s = seconds_since(t0);
        opt.parallel = true;
        t0 = std::chrono::steady_clock::now();
        learn::CvReport r2 = learn::kfold_cv(set3, opt);
        double par = seconds_since(t0);
        report("cv folds (k=10)", s, par);
        if (r1.mean_accuracy != r2.mean_accuracy)
            std::cout << "WARNING: serial/parallel CV disagree\n";
    }

    return 0;
}
