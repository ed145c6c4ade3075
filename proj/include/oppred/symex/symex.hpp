#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "oppred/mir/ir.hpp"
#include "oppred/symex/expr.hpp"

namespace oppred::symex {

// Block labels from the function entry to the block holding the target
// predicate (inclusive).
using Path = std::vector<std::string>;

struct PathBudget {
    int alpha_loop = 2;  // max traversals of any single back-edge per path
    int alpha_paths = 8; // max number of paths returned
};

struct PathSet {
    std::vector<Path> paths;
    bool truncated = false; // alpha_paths cut the enumeration short
};

// Back edges of the CFG relative to a DFS tree rooted at the entry block
// (children in taken-then-fallthrough order), as (from, to) block indices.
std::set<std::pair<int, int>> back_edges(const mir::Function& f);

// DFS path enumeration, taken edge explored before fallthrough, no
// feasibility reasoning. Unreachable targets yield an empty, non-truncated
// set.
PathSet enumerate_paths(const mir::Function& f, const mir::PredicateId& target,
                        const PathBudget& budget);

struct Assignment {
    ExprRef dest;  // Id (SSA-indexed) or Mem
    ExprRef value;
};

struct SymbolicState {
    std::vector<Assignment> assignments;
    ExprRef predicate_dst; // branch-target expression of the target CondJump
    Path path;
    bool truncated = false; // copied from the owning PathSet
};

// Symbolically interprets one path. Inputs are free Id terms named after
// their registers; every write lands in `assignments` in execution order.
SymbolicState exec_path(const mir::Program& p, const mir::Function& f, const Path& path);

std::vector<SymbolicState> collect_states(const mir::Program& p, const mir::Function& f,
                                          const mir::PredicateId& target,
                                          const PathBudget& budget);

} // namespace oppred::symex
