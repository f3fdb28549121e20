#include "xmln/factor_graph.hpp"

#include "xmln/errors.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <ostream>
#include <tuple>

namespace xmln {

size_t FactorGraph::edge_count() const {
    size_t n = 0;
    for (const FactNode& f : facts) n += f.args.size();
    return n;
}

void FactorGraph::dump_edges(std::ostream& out, const KnowledgeBase& kb) const {
    for (size_t o = 0; o < facts.size(); ++o) {
        const FactNode& f = facts[o];
        for (size_t i = 0; i < f.args.size(); ++i) {
            out << kb.constants()[static_cast<size_t>(f.args[i])].name << '\t'
                << kb.schemas()[static_cast<size_t>(f.predicate)].name << ':' << o << '\t' << i
                << '\t' << (f.value == kUnknown ? std::string("?") : std::to_string(f.value))
                << '\n';
        }
    }
}

namespace {

void finish_adjacency(FactorGraph& g) {
    g.constant_adj.assign(static_cast<size_t>(g.n_constants), {});
    for (size_t o = 0; o < g.facts.size(); ++o) {
        const auto& args = g.facts[o].args;
        for (size_t i = 0; i < args.size(); ++i)
            g.constant_adj[static_cast<size_t>(args[i])].push_back(
                {static_cast<int>(o), static_cast<int>(i)});
    }
    for (auto& adj : g.constant_adj) {
        std::sort(adj.begin(), adj.end(), [&](const auto& a, const auto& b) {
            const auto key = [&](const FactorGraph::Incidence& e) {
                return std::make_tuple(g.facts[static_cast<size_t>(e.fact)].value, e.pos, e.fact);
            };
            return key(a) < key(b);
        });
    }
}

} // namespace

FactorGraph build_graph(const KnowledgeBase& kb) {
    FactorGraph g;
    g.n_constants = kb.n_constants();
    std::vector<GroundAtom> atoms;
    atoms.reserve(kb.facts().size());
    for (const auto& [atom, value] : kb.facts()) atoms.push_back(atom);
    std::sort(atoms.begin(), atoms.end());  // node order independent of hash layout
    for (const GroundAtom& atom : atoms)
        g.facts.push_back({atom.predicate, static_cast<int8_t>(*kb.fact_value(atom)), atom.args});
    finish_adjacency(g);
    return g;
}

FactorGraph build_augmented_graph(const KnowledgeBase& kb, uint64_t budget) {
    uint64_t total = 0;
    for (const PredicateSchema& s : kb.schemas()) {
        const GroundingCount gc = grounding_count(s, static_cast<uint64_t>(kb.n_constants()));
        if (gc.saturated || total + gc.count > budget)
            throw DataError("augmented graph exceeds budget of " + std::to_string(budget) +
                            " fact nodes");
        total += gc.count;
    }
    FactorGraph g;
    g.n_constants = kb.n_constants();
    for (const PredicateSchema& s : kb.schemas()) {
        for_each_arg_tuple(s.arity, kb.n_constants(), [&](const std::vector<int>& args) {
            const GroundAtom atom{s.id, args};
            const auto v = kb.fact_value(atom);
            g.facts.push_back(
                {s.id, v ? static_cast<int8_t>(*v) : FactorGraph::kUnknown, args});
        });
    }
    finish_adjacency(g);
    return g;
}

namespace {

// Signature of a node for one refinement round: (side, own color, sorted
// (value, position, neighbor color) triples), serialized as integers.
using Signature = std::vector<int64_t>;

int rerank(std::vector<Signature>& sigs, std::vector<int>& colors_out) {
    std::map<Signature, int> palette;
    for (const Signature& s : sigs) palette.emplace(s, 0);
    int next = 0;
    for (auto& [sig, id] : palette) id = next++;
    for (size_t i = 0; i < sigs.size(); ++i) colors_out[i] = palette[sigs[i]];
    return next;
}

} // namespace

Coloring color_refine(const FactorGraph& graph) {
    const size_t nc = static_cast<size_t>(graph.n_constants);
    const size_t nf = graph.facts.size();

    Coloring col;
    col.constant_color.assign(nc, 0);
    col.fact_color.assign(nf, 0);

    // initial palette by node type: all constants uniform, facts by predicate
    {
        std::vector<Signature> sigs(nc + nf);
        for (size_t c = 0; c < nc; ++c) sigs[c] = {0};
        for (size_t o = 0; o < nf; ++o) sigs[nc + o] = {1, graph.facts[o].predicate};
        std::vector<int> merged(nc + nf);
        col.n_colors = rerank(sigs, merged);
        for (size_t c = 0; c < nc; ++c) col.constant_color[c] = merged[c];
        for (size_t o = 0; o < nf; ++o) col.fact_color[o] = merged[nc + o];
    }

    while (true) {
        std::vector<Signature> sigs(nc + nf);
        for (size_t c = 0; c < nc; ++c) {
            Signature s{0, col.constant_color[c]};
            std::vector<std::array<int64_t, 3>> nb;
            for (const auto& e : graph.constant_adj[c]) {
                const auto& f = graph.facts[static_cast<size_t>(e.fact)];
                nb.push_back({f.value, e.pos, col.fact_color[static_cast<size_t>(e.fact)]});
            }
            std::sort(nb.begin(), nb.end());
            for (const auto& t : nb) s.insert(s.end(), t.begin(), t.end());
            sigs[c] = std::move(s);
        }
        for (size_t o = 0; o < nf; ++o) {
            const auto& f = graph.facts[o];
            Signature s{1, col.fact_color[o]};
            std::vector<std::array<int64_t, 3>> nb;
            for (size_t i = 0; i < f.args.size(); ++i)
                nb.push_back({f.value, static_cast<int64_t>(i),
                              col.constant_color[static_cast<size_t>(f.args[i])]});
            std::sort(nb.begin(), nb.end());
            for (const auto& t : nb) s.insert(s.end(), t.begin(), t.end());
            sigs[nc + o] = std::move(s);
        }

        std::vector<int> merged(nc + nf);
        const int n_colors = rerank(sigs, merged);
        if (n_colors == col.n_colors) break;  // partition stable
        col.n_colors = n_colors;
        for (size_t c = 0; c < nc; ++c) col.constant_color[c] = merged[c];
        for (size_t o = 0; o < nf; ++o) col.fact_color[o] = merged[nc + o];
        ++col.rounds;
    }
    return col;
}

bool indistinguishable(const Coloring& coloring, std::span<const int> constants_a,
                       std::span<const int> constants_b) {
    if (constants_a.size() != constants_b.size())
        throw DataError("indistinguishable: tuples of different length");
    for (size_t i = 0; i < constants_a.size(); ++i) {
        if (coloring.constant_color[static_cast<size_t>(constants_a[i])] !=
            coloring.constant_color[static_cast<size_t>(constants_b[i])])
            return false;
    }
    return true;
}

std::vector<std::vector<int>> constant_partition(const Coloring& coloring) {
    std::map<int, std::vector<int>> by_color;
    for (size_t c = 0; c < coloring.constant_color.size(); ++c)
        by_color[coloring.constant_color[c]].push_back(static_cast<int>(c));
    std::vector<std::vector<int>> classes;
    for (auto& [color, members] : by_color) classes.push_back(std::move(members));
    std::sort(classes.begin(), classes.end());
    return classes;
}

} // namespace xmln
