#include "xmln/exact.hpp"

#include "xmln/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace xmln {

std::vector<GroundFormula> enumerate_groundings(const KnowledgeBase& kb,
                                                const std::vector<Clause>& clauses,
                                                uint64_t budget) {
    const uint64_t m = static_cast<uint64_t>(kb.n_constants());
    uint64_t total = 0;
    for (const Clause& c : clauses) {
        uint64_t combos = 1;
        for (size_t v = 0; v < c.variables.size(); ++v) {
            if (m != 0 && combos > budget / m) {
                combos = UINT64_MAX;
                break;
            }
            combos *= m;
        }
        if (combos == UINT64_MAX || total + combos > budget)
            throw DataError("grounding enumeration exceeds budget of " + std::to_string(budget));
        total += combos;
    }

    std::vector<GroundFormula> out;
    for (int ci = 0; ci < static_cast<int>(clauses.size()); ++ci) {
        const Clause& clause = clauses[static_cast<size_t>(ci)];
        std::set<std::vector<std::pair<int, std::vector<int>>>> seen;  // per-clause dedup
        for_each_arg_tuple(static_cast<int>(clause.variables.size()),
                           static_cast<int>(m), [&](const std::vector<int>& binding) {
            std::vector<std::pair<int, std::vector<int>>> key;
            for (const Literal& lit : clause.literals) {
                std::vector<int> args;
                for (int v : lit.vars) args.push_back(binding[static_cast<size_t>(v)]);
                key.emplace_back(lit.predicate, std::move(args));
            }
            if (!seen.insert(std::move(key)).second) return;
            out.push_back(resolve_ground_formula(kb, clauses, ci, binding));
        });
    }
    return out;
}

EnumerableMln make_enumerable(const KnowledgeBase& kb, const std::vector<Clause>& clauses,
                              std::vector<GroundFormula> groundings, int max_latents) {
    (void)kb;
    EnumerableMln mln;
    mln.formulas = std::move(groundings);
    std::set<GroundAtom> latent_set;
    for (const GroundFormula& gf : mln.formulas) {
        mln.weights.push_back(clauses[static_cast<size_t>(gf.clause_index)].weight);
        for (const GroundLiteral& lit : gf.literals)
            if (lit.observed < 0) latent_set.insert(lit.atom);
    }
    if (static_cast<int>(latent_set.size()) > max_latents)
        throw DataError("enumerable MLN has " + std::to_string(latent_set.size()) +
                        " latent atoms, budget is " + std::to_string(max_latents));
    mln.latents.assign(latent_set.begin(), latent_set.end());
    for (size_t i = 0; i < mln.latents.size(); ++i)
        mln.latent_index[mln.latents[i]] = static_cast<int>(i);
    return mln;
}

EnumerableMln build_enumerable(const KnowledgeBase& kb, const std::vector<Clause>& clauses,
                               uint64_t grounding_budget, int max_latents) {
    return make_enumerable(kb, clauses, enumerate_groundings(kb, clauses, grounding_budget),
                           max_latents);
}

namespace {

// Numerically stable running log-sum-exp.
struct LogSumExp {
    double max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;

    void add(double x) {
        if (x <= max) {
            sum += std::exp(x - max);
        } else {
            sum = sum * std::exp(max - x) + 1.0;
            max = x;
        }
    }

    double value() const {
        return sum == 0.0 ? -std::numeric_limits<double>::infinity() : max + std::log(sum);
    }
};

// Literal pre-resolved for fast evaluation under a completion bitmask.
struct FastLiteral {
    int latent = -1;  // bit index, or -1 when observed
    int8_t value = 0;
    bool negated;
};

struct FastFormula {
    double weight;
    std::vector<FastLiteral> literals;
};

std::vector<FastFormula> compile(const EnumerableMln& mln) {
    std::vector<FastFormula> out;
    out.reserve(mln.formulas.size());
    for (size_t f = 0; f < mln.formulas.size(); ++f) {
        FastFormula ff;
        ff.weight = mln.weights[f];
        for (const GroundLiteral& lit : mln.formulas[f].literals) {
            FastLiteral fl;
            fl.negated = lit.negated;
            if (lit.observed >= 0) {
                fl.value = lit.observed;
            } else {
                fl.latent = mln.latent_index.at(lit.atom);
            }
            ff.literals.push_back(fl);
        }
        out.push_back(std::move(ff));
    }
    return out;
}

double completion_score(const std::vector<FastFormula>& formulas, uint32_t mask) {
    double score = 0.0;
    for (const FastFormula& ff : formulas) {
        for (const FastLiteral& fl : ff.literals) {
            const int v = fl.latent < 0 ? fl.value : static_cast<int>((mask >> fl.latent) & 1u);
            if ((v == 1) != fl.negated) {
                score += ff.weight;  // disjunction satisfied
                break;
            }
        }
    }
    return score;
}

} // namespace

std::vector<std::pair<GroundAtom, double>> exact_marginals(const EnumerableMln& mln) {
    const int k = static_cast<int>(mln.latents.size());
    if (k > EnumerableMln::kMaxLatents)
        throw DataError("exact_marginals: too many latent atoms");
    const std::vector<FastFormula> formulas = compile(mln);

    std::vector<LogSumExp> pos(static_cast<size_t>(k)), neg(static_cast<size_t>(k));
    const uint64_t states = 1ull << k;
    for (uint64_t mask = 0; mask < states; ++mask) {
        const double s = completion_score(formulas, static_cast<uint32_t>(mask));
        for (int j = 0; j < k; ++j) {
            ((mask >> j) & 1u ? pos[static_cast<size_t>(j)] : neg[static_cast<size_t>(j)]).add(s);
        }
    }

    std::vector<std::pair<GroundAtom, double>> out;
    for (int j = 0; j < k; ++j) {
        // logistic of the log-odds gives exactly 0.5 for symmetric sums
        const double lo = pos[static_cast<size_t>(j)].value() - neg[static_cast<size_t>(j)].value();
        out.emplace_back(mln.latents[static_cast<size_t>(j)], 1.0 / (1.0 + std::exp(-lo)));
    }
    return out;
}

double exact_log_evidence(const EnumerableMln& mln) {
    const int k = static_cast<int>(mln.latents.size());
    if (k > EnumerableMln::kMaxLatents)
        throw DataError("exact_log_evidence: too many latent atoms");
    const std::vector<FastFormula> formulas = compile(mln);
    LogSumExp total;
    const uint64_t states = 1ull << k;
    for (uint64_t mask = 0; mask < states; ++mask)
        total.add(completion_score(formulas, static_cast<uint32_t>(mask)));
    return total.value();
}

} // namespace xmln
