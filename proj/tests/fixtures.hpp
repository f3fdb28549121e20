#pragma once

// Shared knowledge-base fixtures: the 0-1-0-1 loop and its variants, plus a
// random-KB generator for property tests.

#include "xmln/logic.hpp"
#include "xmln/rng.hpp"

#include <string>
#include <vector>

namespace xmln::fixtures {

// Friend/Like schema with entities A, B, E, F and the 0-1-0-1 loop:
// F(A,E)=1, F(B,E)=0, F(B,F)=1, F(A,F)=0. A and B are indistinguishable under
// color refinement although their relations to E are opposite.
inline KnowledgeBase loop_kb() {
    KnowledgeBase kb;
    kb.declare_schema("F", 2);
    kb.declare_schema("L", 2);
    const int a = kb.add_constant("A");
    const int b = kb.add_constant("B");
    const int e = kb.add_constant("E");
    const int f = kb.add_constant("F");
    const int fr = *kb.schema_id("F");
    kb.add_fact({fr, {a, e}}, 1);
    kb.add_fact({fr, {b, e}}, 0);
    kb.add_fact({fr, {b, f}}, 1);
    kb.add_fact({fr, {a, f}}, 0);
    return kb;
}

// Two disjoint observed edges: F(A,E)=1, F(B,F)=1. A and B are isomorphic,
// the pairs (A,E) and (B,E) are not.
inline KnowledgeBase two_edge_kb() {
    KnowledgeBase kb;
    kb.declare_schema("F", 2);
    kb.declare_schema("L", 2);
    const int a = kb.add_constant("A");
    const int b = kb.add_constant("B");
    const int e = kb.add_constant("E");
    const int f = kb.add_constant("F");
    const int fr = *kb.schema_id("F");
    kb.add_fact({fr, {a, e}}, 1);
    kb.add_fact({fr, {b, f}}, 1);
    return kb;
}

// A 0-1-0-1 loop of length 4 next to one of length 8. The tuples (A,E) and
// (C,H) get identical refinement colors but live in non-isomorphic loops.
inline KnowledgeBase two_loop_kb() {
    KnowledgeBase kb;
    kb.declare_schema("F", 2);
    kb.declare_schema("L", 2);
    const int fr = *kb.schema_id("F");
    auto c = [&](const std::string& name) { return kb.add_constant(name); };
    const int a = c("A"), b = c("B"), e = c("E"), f = c("F");
    kb.add_fact({fr, {a, e}}, 1);
    kb.add_fact({fr, {b, e}}, 0);
    kb.add_fact({fr, {b, f}}, 1);
    kb.add_fact({fr, {a, f}}, 0);
    const int cc = c("C"), d = c("D"), g = c("G"), h = c("H");
    const int c2 = c("C2"), d2 = c("D2"), g2 = c("G2"), h2 = c("H2");
    kb.add_fact({fr, {cc, h}}, 1);
    kb.add_fact({fr, {d, h}}, 0);
    kb.add_fact({fr, {d, g}}, 1);
    kb.add_fact({fr, {c2, g}}, 0);
    kb.add_fact({fr, {c2, h2}}, 1);
    kb.add_fact({fr, {d2, h2}}, 0);
    kb.add_fact({fr, {d2, g2}}, 1);
    kb.add_fact({fr, {cc, g2}}, 0);
    return kb;
}

// Random KB: up to `max_entities` constants, `n_preds` predicates of arity
// <= 2, a random set of 0/1 facts.
inline KnowledgeBase random_kb(Rng& rng, int max_entities = 30, int n_preds = 3,
                               double fact_density = 0.2) {
    KnowledgeBase kb;
    const int m = 1 + rng.uniform_int(max_entities);
    for (int i = 0; i < m; ++i) kb.add_constant("c" + std::to_string(i));
    const int np = 1 + rng.uniform_int(n_preds);
    for (int p = 0; p < np; ++p)
        kb.declare_schema("r" + std::to_string(p), 1 + rng.uniform_int(2));
    for (const PredicateSchema& s : kb.schemas()) {
        const uint64_t total = grounding_count(s, static_cast<uint64_t>(m)).count;
        const int n_facts = static_cast<int>(fact_density * static_cast<double>(total)) + 1;
        for (int i = 0; i < n_facts; ++i) {
            GroundAtom atom{s.id, {}};
            for (int a = 0; a < s.arity; ++a) atom.args.push_back(rng.uniform_int(m));
            if (!kb.is_observed(atom)) kb.add_fact(atom, rng.bernoulli(0.5) ? 1 : 0);
        }
    }
    return kb;
}

} // namespace xmln::fixtures
