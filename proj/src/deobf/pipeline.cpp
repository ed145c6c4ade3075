#include "oppred/deobf/pipeline.hpp"

#include <chrono>
#include <memory>

#include "oppred/parallel.hpp"
#include "oppred/rng.hpp"

namespace oppred::deobf {

namespace {

struct Analysis {
    bool remove = false;
    bool direction = true; // true = always-taken
    std::string predicted;
    bool error = false;
    std::string note;
};

// Model-mode guard: a predicate about to be stripped must not contradict its
// predicted polarity on a handful of random runs. Half the draws come from
// the 8-bit sweep domain, half from the full 64-bit space, mirroring the
// oracle's domain.
bool polarity_contradicted(const mir::Machine& m, int site, bool predicted_taken,
                           const mir::Env& env, int n, uint64_t seed, int arity) {
    Rng rng(seed ^ 0x6a3dULL);
    bool contradicted = false;
    mir::Machine::BranchHook hook = [&](int s, bool taken) {
        if (s == site && taken != predicted_taken) contradicted = true;
    };
    mir::Machine::RunState st;
    for (int i = 0; i < n && !contradicted; ++i) {
        std::vector<uint64_t> in(arity);
        bool small = i % 2 == 0;
        for (auto& v : in) v = small ? rng.below(256) : rng.next();
        m.run_with_state(in, env, mir::kDefaultStepBudget, st, &hook);
    }
    return contradicted;
}

Analysis analyze_model(const mir::Program& p, const mir::Machine& m,
                       const mir::PredicateId& id, const PipelineOptions& opt) {
    Analysis a;
    const mir::Function* f = p.find_function(id.function);
    std::vector<symex::SymbolicState> states = symex::collect_states(p, *f, id, opt.budget);
    if (states.empty()) {
        a.error = true;
        a.note = "no path reached the predicate within budget";
        a.predicted = "UNREACHED";
        return a;
    }

    std::vector<int> det_votes, pol_votes;
    for (size_t pi = 0; pi < states.size(); ++pi) {
        rawdata::DocMeta meta;
        meta.function = id.function;
        meta.predicate = id;
        meta.path_index = static_cast<int>(pi);
        rawdata::RawDocument doc =
            rawdata::render_state(p, states[pi], opt.detector->set, meta);
        rawdata::RawDocument norm = rawdata::normalize(doc);
        det_votes.push_back(opt.detector->predict_document(norm));
        if (opt.resolver) {
            rawdata::RawDocument doc2 =
                rawdata::render_state(p, states[pi], opt.resolver->set, meta);
            pol_votes.push_back(opt.resolver->predict_document(rawdata::normalize(doc2)));
        }
    }
    // Detection classes: NORMAL=0, OPAQUE=1; ties resolve to NORMAL.
    int det = learn::majority_vote(det_votes, 2, 0);
    if (det == 0) {
        a.predicted = "NORMAL";
        return a;
    }
    // Polarity classes: FALSE=0, TRUE=1; ties resolve to TRUE.
    int pol = opt.resolver ? learn::majority_vote(pol_votes, 2, 1) : 1;
    bool taken = pol == 1;
    a.predicted = taken ? "OP_TRUE" : "OP_FALSE";

    int site = m.site_index(id);
    if (polarity_contradicted(m, site, taken, opt.env, opt.guard_inputs, opt.seed, f->arity)) {
        a.note = "polarity check contradicted the prediction; left in place";
        return a;
    }
    a.remove = true;
    a.direction = taken;
    return a;
}

Analysis analyze_oracle(const mir::Machine& m, const mir::PredicateId& id,
                        const PipelineOptions& opt) {
    Analysis a;
    OracleVerdict v = oracle(m, id, opt.oracle_domain, {opt.env}, /*parallel=*/false);
    a.predicted = verdict_name(v.kind);
    if (v.kind == VerdictKind::AlwaysTrue) {
        a.remove = true;
        a.direction = true;
    } else if (v.kind == VerdictKind::AlwaysFalse) {
        a.remove = true;
        a.direction = false;
    } else if (v.kind == VerdictKind::Unobserved) {
        a.error = true;
        a.note = "predicate unobserved in the oracle domain";
    }
    if (v.fault_runs > 0) {
        a.error = true;
        a.note = "faulting runs during the sweep";
    }
    return a;
}

} // namespace

PipelineResult run_pipeline(const mir::Program& p, const obf::InjectionLog& log,
                            const PipelineOptions& opt) {
    auto start = std::chrono::steady_clock::now();
    PipelineResult result;
    mir::Machine m(p);
    std::vector<mir::PredicateId> predicates = enumerate_predicates(p);

    std::vector<Analysis> analyses(predicates.size());
    parallel_for(
        predicates.size(),
        [&](size_t i) {
            try {
                analyses[i] = opt.mode == PipelineMode::Model
                                  ? analyze_model(p, m, predicates[i], opt)
                                  : analyze_oracle(m, predicates[i], opt);
            } catch (const std::exception& e) {
                analyses[i].error = true;
                analyses[i].note = e.what();
                analyses[i].predicted = "ERROR";
            }
        },
        opt.parallel);

    VerdictMap verdicts;
    DeobfReport& rep = result.report;
    for (size_t i = 0; i < predicates.size(); ++i) {
        PredicateRow row;
        row.id = predicates[i];
        auto it = log.find(predicates[i]);
        row.truth = it != log.end() ? it->second.label : rawdata::Label::Normal;
        row.predicted = analyses[i].predicted;
        row.error = analyses[i].error;
        row.note = analyses[i].note;
        bool opaque_truth = row.truth != rawdata::Label::Normal;
        if (opaque_truth) ++rep.total_opaque;
        if (analyses[i].remove) {
            row.action = Action::Removed;
            verdicts[predicates[i]] = analyses[i].direction;
            if (opaque_truth) ++rep.removed_opaque;
            else ++rep.false_positives;
        } else if (opaque_truth) {
            ++rep.false_negatives;
        }
        if (row.error) ++rep.errors;
        rep.rows.push_back(std::move(row));
    }

    result.program = strip(p, verdicts);
    rep.removal_rate = rep.total_opaque > 0
                           ? 100.0 * rep.removed_opaque / rep.total_opaque
                           : 100.0;

    const mir::Function* entry = p.find_function(p.entry_function);
    auto inputs = equivalence_inputs(entry ? entry->arity : 0, opt.seed, opt.equivalence_inputs);
    EquivalenceResult eq = verify_equivalence(p, result.program, inputs, opt.env);
    rep.equivalence_pass = eq.pass;
    rep.equivalence_witness = eq.witness;
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace oppred::deobf

namespace oppred::deobf {

GateResult soundness_gate(
    const std::vector<std::pair<const mir::Program*, const obf::InjectionLog*>>& items,
    const GateOptions& options) {
    auto start = std::chrono::steady_clock::now();
    GateResult result;

    struct Item {
        const mir::Machine* machine;
        mir::PredicateId id;
        rawdata::Label truth;
        std::string program_tag;
    };
    std::vector<std::unique_ptr<mir::Machine>> machines;
    std::vector<Item> work;
    for (size_t pi = 0; pi < items.size(); ++pi) {
        machines.push_back(std::make_unique<mir::Machine>(*items[pi].first));
        for (const auto& [pid, entry] : *items[pi].second) {
            if (entry.label == rawdata::Label::Normal) continue;
            work.push_back(
                {machines.back().get(), pid, entry.label, "program " + std::to_string(pi)});
        }
    }
    result.checked = static_cast<int>(work.size());

    std::vector<uint8_t> ok(work.size(), 0);
    std::vector<std::string> notes(work.size());
    parallel_for(
        work.size(),
        [&](size_t i) {
            const Item& item = work[i];
            OracleVerdict v =
                oracle_serial(*item.machine, item.id, options.domain, {options.env});
            VerdictKind want = item.truth == rawdata::Label::OpTrue ? VerdictKind::AlwaysTrue
                                                                    : VerdictKind::AlwaysFalse;
            if (v.kind == want && v.fault_runs == 0) {
                ok[i] = 1;
            } else {
                notes[i] = item.program_tag + " " + item.id.str() + ": expected " +
                           verdict_name(want) + ", got " + verdict_name(v.kind);
            }
        },
        options.parallel);

    for (size_t i = 0; i < work.size(); ++i) {
        if (ok[i]) ++result.matched;
        else result.mismatches.push_back(notes[i]);
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace oppred::deobf
