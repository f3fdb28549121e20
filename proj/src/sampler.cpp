#include "xmln/sampler.hpp"

#include "xmln/errors.hpp"

#include <cstdio>

namespace xmln {

GroundFormula resolve_ground_formula(const KnowledgeBase& kb, const std::vector<Clause>& clauses,
                                     int clause_index, std::vector<int> binding) {
    const Clause& clause = clauses[static_cast<size_t>(clause_index)];
    GroundFormula gf;
    gf.clause_index = clause_index;
    gf.binding = std::move(binding);
    for (auto& [atom, negated] : ground_clause(clause, gf.binding)) {
        const auto v = kb.fact_value(atom);
        gf.literals.push_back(
            {std::move(atom), negated, v ? static_cast<int8_t>(*v) : static_cast<int8_t>(-1)});
    }
    return gf;
}

GroundSampler::GroundSampler(const KnowledgeBase& kb, const std::vector<Clause>& clauses,
                             SamplerConfig config, uint64_t seed)
    : kb_(kb), clauses_(clauses), config_(config), rng_(seed) {
    if (config_.p_obs < 0.0 || config_.p_obs > 1.0)
        throw ConfigError("sampler.p_obs must be in [0,1]");
    if (config_.batch_size < 1) throw ConfigError("sampler.batch must be >= 1");
    if (clauses_.empty()) throw ConfigError("sampler: clause list is empty");
}

std::optional<GroundFormula> GroundSampler::sample_one(int clause_index, const Anchor* anchor) {
    const Clause& clause = clauses_[static_cast<size_t>(clause_index)];
    std::vector<int> binding(clause.variables.size(), -1);

    std::vector<int> order;
    for (int li = 0; li < static_cast<int>(clause.literals.size()); ++li) {
        if (anchor && anchor->literal == li) continue;
        order.push_back(li);
    }
    rng_.shuffle(order);

    if (anchor) {
        const Literal& lit = clause.literals[static_cast<size_t>(anchor->literal)];
        for (size_t i = 0; i < lit.vars.size(); ++i) {
            int& slot = binding[static_cast<size_t>(lit.vars[i])];
            const int want = anchor->query->args[i];
            if (slot >= 0 && slot != want) return std::nullopt;  // repeated-var conflict
            slot = want;
        }
    }

    for (int li : order) {
        const Literal& lit = clause.literals[static_cast<size_t>(li)];
        const std::vector<GroundAtom>& facts = kb_.facts_of_predicate(lit.predicate);
        ++stats_.slots_total;
        bool bound_from_fact = false;
        if (!facts.empty()) {
            ++stats_.slots_with_facts;
            if (rng_.bernoulli(config_.p_obs)) {
                ++stats_.slots_observed_path;
                // facts compatible with the current binding (and with repeated
                // variables inside the literal itself)
                std::vector<const GroundAtom*> compatible;
                for (const GroundAtom& f : facts) {
                    bool ok = true;
                    for (size_t i = 0; i < lit.vars.size() && ok; ++i) {
                        const int var = lit.vars[i];
                        const int cur = binding[static_cast<size_t>(var)];
                        if (cur >= 0 && cur != f.args[i]) ok = false;
                        for (size_t j = i + 1; j < lit.vars.size() && ok; ++j)
                            if (lit.vars[j] == var && f.args[j] != f.args[i]) ok = false;
                    }
                    if (ok) compatible.push_back(&f);
                }
                if (!compatible.empty()) {
                    const GroundAtom* f =
                        compatible[rng_.uniform_int(static_cast<int>(compatible.size()))];
                    for (size_t i = 0; i < lit.vars.size(); ++i)
                        binding[static_cast<size_t>(lit.vars[i])] = f->args[i];
                    bound_from_fact = true;
                    ++stats_.slots_fact_bound;
                }
            }
        }
        if (!bound_from_fact) {
            for (int var : lit.vars) {
                int& slot = binding[static_cast<size_t>(var)];
                if (slot < 0) slot = rng_.uniform_int(kb_.n_constants());
            }
        }
    }

    // clause variables not used by any literal (unusual, but legal)
    for (int& slot : binding)
        if (slot < 0) slot = rng_.uniform_int(kb_.n_constants());

    return resolve_ground_formula(kb_, clauses_, clause_index, std::move(binding));
}

std::vector<GroundFormula> GroundSampler::sample_batch() {
    if (kb_.n_constants() == 0) throw DataError("sampler: knowledge base has no constants");
    std::vector<GroundFormula> batch;
    for (int b = 0; b < config_.batch_size; ++b) {
        bool emitted = false;
        for (int attempt = 0; attempt < config_.max_resample; ++attempt) {
            const int ci = rng_.uniform_int(static_cast<int>(clauses_.size()));
            auto gf = sample_one(ci, nullptr);
            if (!gf) continue;
            if (config_.reject_fully_observed && !gf->has_latent()) {
                ++stats_.rejected;
                continue;
            }
            batch.push_back(std::move(*gf));
            emitted = true;
            break;
        }
        if (!emitted) {
            ++stats_.short_batches;
            if (!warned_short_) {
                std::fprintf(stderr,
                             "warning: sampler resample budget exhausted, emitting short batch\n");
                warned_short_ = true;
            }
            break;
        }
    }
    return batch;
}

std::vector<GroundFormula> GroundSampler::sample_query_batch(const GroundAtom& query) {
    std::vector<Anchor> anchors;
    std::vector<int> anchor_clause;
    for (int ci = 0; ci < static_cast<int>(clauses_.size()); ++ci) {
        const Clause& clause = clauses_[static_cast<size_t>(ci)];
        for (int li = 0; li < static_cast<int>(clause.literals.size()); ++li) {
            const Literal& lit = clause.literals[static_cast<size_t>(li)];
            if (lit.negated || lit.predicate != query.predicate) continue;
            anchors.push_back({li, &query});
            anchor_clause.push_back(ci);
        }
    }
    if (anchors.empty()) return {};  // formulae give no evidence for this query

    std::vector<GroundFormula> batch;
    for (int b = 0; b < config_.batch_size; ++b) {
        bool emitted = false;
        for (int attempt = 0; attempt < config_.max_resample; ++attempt) {
            const int a = rng_.uniform_int(static_cast<int>(anchors.size()));
            auto gf = sample_one(anchor_clause[static_cast<size_t>(a)],
                                 &anchors[static_cast<size_t>(a)]);
            if (!gf) continue;
            if (config_.reject_fully_observed && !gf->has_latent()) {
                ++stats_.rejected;
                continue;
            }
            batch.push_back(std::move(*gf));
            emitted = true;
            break;
        }
        if (!emitted) {
            ++stats_.short_batches;
            if (!warned_short_) {
                std::fprintf(stderr,
                             "warning: sampler resample budget exhausted, emitting short batch\n");
                warned_short_ = true;
            }
            break;
        }
    }
    return batch;
}

} // namespace xmln
