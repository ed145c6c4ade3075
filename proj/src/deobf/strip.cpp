#include "oppred/deobf/strip.hpp"

#include <set>

#include "oppred/rng.hpp"

namespace oppred::deobf {

using mir::BasicBlock;
using mir::Function;
using mir::Program;

mir::Program strip(const Program& p, const VerdictMap& verdicts) {
    Program out = p;
    for (auto& f : out.functions) {
        // Resolve sites against the pre-rewrite enumeration so that ordinal
        // shifts cannot retarget later verdicts.
        auto sites = enumerate_predicates(f);
        for (const auto& id : sites) {
            auto it = verdicts.find(id);
            if (it == verdicts.end()) continue;
            BasicBlock* b = f.find_block(id.block);
            auto* cj = std::get_if<mir::CondJump>(&b->terminator);
            if (!cj) continue;
            b->terminator = mir::Jump{it->second ? cj->taken : cj->fallthrough};
        }

        // Drop blocks no longer reachable from the function entry.
        std::set<std::string> reachable;
        std::vector<std::string> work{f.entry_block};
        while (!work.empty()) {
            std::string label = work.back();
            work.pop_back();
            if (!reachable.insert(label).second) continue;
            const BasicBlock* b = f.find_block(label);
            if (!b) continue;
            if (const auto* j = std::get_if<mir::Jump>(&b->terminator)) {
                work.push_back(j->target);
            } else if (const auto* cj = std::get_if<mir::CondJump>(&b->terminator)) {
                work.push_back(cj->taken);
                work.push_back(cj->fallthrough);
            } else if (const auto* c = std::get_if<mir::Call>(&b->terminator)) {
                work.push_back(c->then);
            }
        }
        std::vector<BasicBlock> kept;
        kept.reserve(f.blocks.size());
        for (auto& b : f.blocks)
            if (reachable.count(b.label)) kept.push_back(std::move(b));
        f.blocks = std::move(kept);
    }
    return out;
}

std::vector<std::vector<uint64_t>> equivalence_inputs(int arity, uint64_t seed, int n) {
    std::vector<std::vector<uint64_t>> out;
    Rng rng(seed ^ 0xe91a7e5ULL);
    for (int i = 0; i < n; ++i) {
        std::vector<uint64_t> v(arity);
        for (auto& x : v) x = rng.next();
        out.push_back(std::move(v));
    }
    return out;
}

EquivalenceResult verify_equivalence(const Program& p, const Program& q,
                                     const std::vector<std::vector<uint64_t>>& inputs,
                                     const mir::Env& env) {
    EquivalenceResult result;
    mir::Machine mp(p), mq(q);
    if (mp.entry_arity() != mq.entry_arity()) {
        result.pass = false;
        result.detail = "entry arity mismatch";
        return result;
    }
    mir::Machine::RunState sa, sb;
    for (const auto& in : inputs) {
        mir::Outcome a = mp.run_with_state(in, env, mir::kDefaultStepBudget, sa, nullptr);
        mir::Outcome b = mq.run_with_state(in, env, mir::kDefaultStepBudget, sb, nullptr);
        if (!a.observably_equal(b)) {
            result.pass = false;
            result.witness = in;
            result.detail = "observable divergence";
            return result;
        }
    }
    return result;
}

} // namespace oppred::deobf
