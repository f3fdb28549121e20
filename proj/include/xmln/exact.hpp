#pragma once

#include "xmln/logic.hpp"
#include "xmln/sampler.hpp"

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

namespace xmln {

// Fully grounded MLN small enough for joint enumeration.
struct EnumerableMln {
    std::vector<GroundAtom> latents;  // sorted; enumeration bit j <-> latents[j]
    std::unordered_map<GroundAtom, int, AtomHash> latent_index;
    std::vector<GroundFormula> formulas;
    std::vector<double> weights;  // per formula, from its clause

    static constexpr int kMaxLatents = 24;
};

// All bindings of all clauses against the KB's constants, deduplicated per
// clause (bindings differing only in variables unused by the literals
// collapse). Throws DataError when total bindings exceed `budget`.
std::vector<GroundFormula> enumerate_groundings(const KnowledgeBase& kb,
                                                const std::vector<Clause>& clauses,
                                                uint64_t budget = 1u << 20);

EnumerableMln build_enumerable(const KnowledgeBase& kb, const std::vector<Clause>& clauses,
                               uint64_t grounding_budget = 1u << 20,
                               int max_latents = EnumerableMln::kMaxLatents);

// Same, over an explicit grounding set (kept in sync with a mean-field
// full-batch objective, for example).
EnumerableMln make_enumerable(const KnowledgeBase& kb, const std::vector<Clause>& clauses,
                              std::vector<GroundFormula> groundings,
                              int max_latents = EnumerableMln::kMaxLatents);

// P(atom = 1 | O) for every latent atom, by summing exp(sum_f w_f phi_f) over
// all 2^|H| completions with log-sum-exp accumulation. Returned in latent
// order.
std::vector<std::pair<GroundAtom, double>> exact_marginals(const EnumerableMln& mln);

// log sum_H exp(sum_f w_f phi_f(O, H)): the log partition function of the
// conditional model, an exact upper bound for the mean-field objective.
double exact_log_evidence(const EnumerableMln& mln);

} // namespace xmln
