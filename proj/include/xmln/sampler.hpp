#pragma once

#include "xmln/logic.hpp"
#include "xmln/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace xmln {

struct SamplerConfig {
    double p_obs = 0.9;                 // chance a slot is instantiated from stored facts
    int batch_size = 16;
    bool reject_fully_observed = true;  // drop groundings without any latent atom
    bool query_anchored = false;
    int max_resample = 50;              // attempts per emitted formula
};

struct GroundLiteral {
    GroundAtom atom;
    bool negated;
    int8_t observed;  // -1 latent, else the observed value
};

// One sampled instantiation of a clause. Variable consistency holds by
// construction: the binding is shared by all literals.
struct GroundFormula {
    int clause_index = -1;
    std::vector<int> binding;  // by clause variable order
    std::vector<GroundLiteral> literals;

    bool has_latent() const {
        for (const GroundLiteral& l : literals)
            if (l.observed < 0) return true;
        return false;
    }
};

// Instantiates clause `clause_index` under `binding` and resolves per-atom
// observation status against the KB.
GroundFormula resolve_ground_formula(const KnowledgeBase& kb, const std::vector<Clause>& clauses,
                                     int clause_index, std::vector<int> binding);

struct SamplerStats {
    int64_t slots_total = 0;
    int64_t slots_with_facts = 0;     // slots whose predicate has stored facts
    int64_t slots_observed_path = 0;  // p_obs coin chose fact instantiation
    int64_t slots_fact_bound = 0;     // a compatible fact was actually used
    int64_t rejected = 0;
    int64_t short_batches = 0;

    double observed_slot_fraction() const {
        return slots_with_facts == 0
                   ? 0.0
                   : static_cast<double>(slots_observed_path) /
                         static_cast<double>(slots_with_facts);
    }
};

// Stochastic ground-formula sampler: uniform clause choice, shuffled slot
// order, per-slot fact instantiation with probability p_obs (falling back to
// uniform constants when no compatible fact exists), rejection of fully
// observed groundings.
class GroundSampler {
  public:
    GroundSampler(const KnowledgeBase& kb, const std::vector<Clause>& clauses,
                  SamplerConfig config, uint64_t seed);

    std::vector<GroundFormula> sample_batch();

    // Groundings that contain `query` as a positive literal. Empty batch when
    // no clause has the query predicate as a positive literal.
    std::vector<GroundFormula> sample_query_batch(const GroundAtom& query);

    const SamplerStats& stats() const { return stats_; }
    const SamplerConfig& config() const { return config_; }
    const std::vector<Clause>& clauses() const { return clauses_; }

  private:
    struct Anchor {
        int literal;
        const GroundAtom* query;
    };

    std::optional<GroundFormula> sample_one(int clause_index, const Anchor* anchor);

    const KnowledgeBase& kb_;
    const std::vector<Clause>& clauses_;
    SamplerConfig config_;
    Rng rng_;
    SamplerStats stats_;
    bool warned_short_ = false;
};

} // namespace xmln
