#include "xmln/mean_field.hpp"

#include "xmln/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace xmln {

Value expected_clause_truth(PosteriorModel& model, PosteriorModel::TapeContext& ctx,
                            const GroundFormula& gf) {
    Tape& tape = *ctx.tape;
    // a satisfied observed literal makes the disjunction certainly true
    for (const GroundLiteral& lit : gf.literals)
        if (lit.observed >= 0 && (lit.observed == 1) != lit.negated)
            return tape.constant_scalar(1.0);

    // signs per distinct latent atom (first-encounter order)
    struct AtomSigns {
        GroundAtom atom;
        bool pos = false;
        bool neg = false;
    };
    std::vector<AtomSigns> latents;
    for (const GroundLiteral& lit : gf.literals) {
        if (lit.observed >= 0) continue;
        AtomSigns* entry = nullptr;
        for (AtomSigns& a : latents)
            if (a.atom == lit.atom) {
                entry = &a;
                break;
            }
        if (entry == nullptr) {
            latents.push_back({lit.atom, false, false});
            entry = &latents.back();
        }
        (lit.negated ? entry->neg : entry->pos) = true;
    }

    if (latents.empty()) return tape.constant_scalar(0.0);  // all observed literals false
    if (latents.size() > 20)
        throw DataError("expected_clause_truth: " + std::to_string(latents.size()) +
                        " distinct latent atoms exceeds the enumeration budget of 20");

    // P(all literals false) factorizes over distinct atoms; an atom appearing
    // with both signs makes the clause a tautology
    const Value one = tape.constant_scalar(1.0);
    Value prod_false;
    for (const AtomSigns& a : latents) {
        if (a.pos && a.neg) return tape.constant_scalar(1.0);
        const Value q = model.q_on_tape(ctx, a.atom);
        const Value factor = a.pos ? tape.sub(one, q) : q;
        prod_false = prod_false.valid() ? tape.mul(prod_false, factor) : factor;
    }
    return tape.sub(one, prod_false);
}

ElboTerms elbo_batch(PosteriorModel& model, PosteriorModel::TapeContext& ctx,
                     std::span<const GroundFormula> batch, const std::vector<Clause>& clauses,
                     const ObjectiveWeights& weights) {
    if (batch.empty()) throw DataError("elbo_batch: empty batch");
    Tape& tape = *ctx.tape;
    const Value one = tape.constant_scalar(1.0);

    Value formula_score;
    for (const GroundFormula& gf : batch) {
        const double w = clauses[static_cast<size_t>(gf.clause_index)].weight;
        Value term = tape.scale(expected_clause_truth(model, ctx, gf), w);
        formula_score = formula_score.valid() ? tape.add(formula_score, term) : term;
    }

    // distinct latent atoms across the whole batch, deterministic order
    std::vector<GroundAtom> latent_atoms;
    std::vector<GroundAtom> observed_pos_atoms;
    {
        std::unordered_map<GroundAtom, char, AtomHash> seen;
        for (const GroundFormula& gf : batch) {
            for (const GroundLiteral& lit : gf.literals) {
                if (!seen.emplace(lit.atom, 1).second) continue;
                if (lit.observed < 0) {
                    latent_atoms.push_back(lit.atom);
                } else if (lit.observed == 1) {
                    observed_pos_atoms.push_back(lit.atom);
                }
            }
        }
    }

    Value entropy;
    for (const GroundAtom& atom : latent_atoms) {
        const Value q = model.q_on_tape(ctx, atom);
        const Value h = tape.scale(
            tape.add(tape.mul(q, tape.log(q)), tape.mul(tape.sub(one, q), tape.log(tape.sub(one, q)))),
            -1.0);
        entropy = entropy.valid() ? tape.add(entropy, h) : h;
    }
    if (!entropy.valid()) entropy = tape.constant_scalar(0.0);

    Value disc;
    if (weights.discriminative != 0.0) {
        for (const GroundAtom& atom : observed_pos_atoms) {
            const Value lq = tape.log(model.q_on_tape(ctx, atom));
            disc = disc.valid() ? tape.add(disc, lq) : lq;
        }
    }
    if (!disc.valid()) disc = tape.constant_scalar(0.0);

    ElboTerms terms;
    terms.formula_score = formula_score;
    terms.entropy = entropy;
    terms.discriminative = disc;
    terms.n_latent_atoms = static_cast<int>(latent_atoms.size());
    terms.objective = tape.add(
        tape.add(tape.scale(formula_score, weights.formula), tape.scale(entropy, weights.entropy)),
        tape.scale(disc, weights.discriminative));
    return terms;
}

namespace {

double validation_loss(PosteriorModel& model, const DatasetSplit& split) {
    if (split.valid.empty()) return std::numeric_limits<double>::quiet_NaN();
    double nll = 0.0;
    for (const LabeledAtom& q : split.valid) {
        const double p = model.q_prob(q.atom);
        nll -= std::log(q.label ? p : 1.0 - p);
    }
    return nll / static_cast<double>(split.valid.size());
}

} // namespace

TrainHistory train(const KnowledgeBase& kb, PosteriorModel& model, GroundSampler& sampler,
                   Adam& optimizer, const TrainConfig& config, const DatasetSplit* split) {
    (void)kb;
    TrainHistory history;
    PlateauScheduler plateau{config.plateau_patience};
    double val_metric = std::numeric_limits<double>::quiet_NaN();
    double epoch_objective = 0.0;
    int64_t step = 0;

    // anchor rotation for query-driven sampling
    size_t anchor_cursor = 0;
    const std::vector<LabeledAtom>* anchors = nullptr;
    if (config.query_anchored && split != nullptr && !split->train.empty())
        anchors = &split->train;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        epoch_objective = 0.0;
        int epoch_steps = 0;
        for (int s = 0; s < config.steps_per_epoch; ++s, ++step) {
            Tape tape;
            auto ctx = model.begin_step(tape);
            std::vector<GroundFormula> batch;
            if (anchors != nullptr) {
                const GroundAtom& anchor =
                    (*anchors)[anchor_cursor++ % anchors->size()].atom;
                batch = sampler.sample_query_batch(anchor);
                if (batch.empty()) batch = sampler.sample_batch();
            } else {
                batch = sampler.sample_batch();
            }
            if (batch.empty()) continue;

            double objective;
            try {
                const ElboTerms terms =
                    elbo_batch(model, ctx, batch, sampler.clauses(), config.weights);
                objective = terms.objective.scalar();
                const Value loss = tape.scale(terms.objective, -1.0);
                tape.backward(loss);
            } catch (const NumericError& e) {
                throw NumericError("training aborted at step " + std::to_string(step) + ": " +
                                   e.what());
            }
            optimizer.step(model.params());
            model.invalidate_cache();

            epoch_objective += objective;
            ++epoch_steps;
            history.rows.push_back({step, objective, val_metric, optimizer.lr()});
        }

        double val_loss;
        if (split != nullptr && !split->valid.empty()) {
            val_loss = validation_loss(model, *split);
        } else {
            val_loss = epoch_steps > 0 ? -epoch_objective / epoch_steps
                                       : std::numeric_limits<double>::infinity();
        }
        val_metric = val_loss;
        if (!history.rows.empty()) history.rows.back().val_metric = val_metric;
        if (plateau.update(val_loss)) optimizer.set_lr(optimizer.lr() * config.lr_decay);
    }
    return history;
}

std::vector<double> train_full_batch(PosteriorModel& model,
                                     std::span<const GroundFormula> groundings,
                                     const std::vector<Clause>& clauses, Adam& optimizer,
                                     const ObjectiveWeights& weights, int steps) {
    std::vector<double> objectives;
    for (int s = 0; s < steps; ++s) {
        Tape tape;
        auto ctx = model.begin_step(tape);
        const ElboTerms terms = elbo_batch(model, ctx, groundings, clauses, weights);
        objectives.push_back(terms.objective.scalar());
        tape.backward(tape.scale(terms.objective, -1.0));
        optimizer.step(model.params());
        model.invalidate_cache();
    }
    return objectives;
}

double evaluate_elbo(PosteriorModel& model, std::span<const GroundFormula> groundings,
                     const std::vector<Clause>& clauses, const ObjectiveWeights& weights) {
    Tape tape;
    auto ctx = model.begin_step(tape);
    return elbo_batch(model, ctx, groundings, clauses, weights).objective.scalar();
}

std::vector<std::pair<GroundAtom, double>> infer_marginals(const KnowledgeBase& kb,
                                                           PosteriorModel& model,
                                                           std::span<const GroundAtom> queries) {
    std::vector<std::pair<GroundAtom, double>> out;
    out.reserve(queries.size());
    for (const GroundAtom& atom : queries) {
        if (kb.is_observed(atom))
            throw DataError("infer_marginals: " + kb.atom_to_string(atom) +
                            " is observed, not latent");
        out.emplace_back(atom, model.q_prob(atom));
    }
    return out;
}

void TrainHistory::save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path);
    out << "step,objective,val_metric,lr\n";
    char buf[128];
    for (const Row& r : rows) {
        std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(r.step), r.objective, r.val_metric, r.lr);
        out << buf;
    }
}

} // namespace xmln
