#pragma once

#include "xmln/logic.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace xmln {

// Bipartite constant/fact graph G_K. An edge (c, o, i) exists iff fact o uses
// constant c in its i-th argument position; its type is (value, position).
// The augmented variant G_Kbar adds one '?'-valued node per unobserved
// grounding.
struct FactorGraph {
    static constexpr int8_t kUnknown = 2;  // value '?' of latent fact nodes

    struct FactNode {
        int predicate;
        int8_t value;  // 0, 1 or kUnknown
        std::vector<int> args;
    };

    struct Incidence {
        int fact;
        int pos;
    };

    int n_constants = 0;
    std::vector<FactNode> facts;
    // Per constant, incident facts sorted by (fact value, position, fact id).
    // The fixed bucket order makes message aggregation deterministic and keeps
    // same-colored nodes bit-identical under the GNN.
    std::vector<std::vector<Incidence>> constant_adj;

    size_t edge_count() const;
    void dump_edges(std::ostream& out, const KnowledgeBase& kb) const;
};

FactorGraph build_graph(const KnowledgeBase& kb);

// Fact nodes for O ∪ H; unobserved groundings carry value '?'. Throws
// DataError when the total grounding count exceeds `budget`.
FactorGraph build_augmented_graph(const KnowledgeBase& kb, uint64_t budget = 1'000'000);

// Stable partition from 1-WL color refinement. Color ids are canonical: they
// depend only on the graph structure, not on node numbering.
struct Coloring {
    std::vector<int> constant_color;
    std::vector<int> fact_color;
    int rounds = 0;    // refinement rounds until stable (0 = init already stable)
    int n_colors = 0;
};

// Initializes node colors by type (constants uniform, facts by predicate) and
// iterates hashing of (own color, multiset of (edge type, neighbor color))
// until the partition stops refining.
Coloring color_refine(const FactorGraph& graph);

// True iff the two equal-length constant tuples are pairwise same-colored.
bool indistinguishable(const Coloring& coloring, std::span<const int> constants_a,
                       std::span<const int> constants_b);

// Constant partition as a canonical set of sorted classes (comparing two
// refinements of the same constant set is then plain equality).
std::vector<std::vector<int>> constant_partition(const Coloring& coloring);

} // namespace xmln
