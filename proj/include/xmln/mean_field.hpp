#pragma once

#include "xmln/kb_io.hpp"
#include "xmln/model.hpp"
#include "xmln/sampler.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace xmln {

struct ObjectiveWeights {
    double formula = 1.0;
    double entropy = 1.0;
    double discriminative = 0.0;  // 1.0 for KB-completion runs
};

// The three pieces of the (maximized) variational objective for one batch.
struct ElboTerms {
    Value formula_score;   // sum_f w_f E[phi_f | O]
    Value entropy;         // sum H(q) over the batch's distinct latent atoms
    Value discriminative;  // sum log q over the batch's observed-positive atoms
    Value objective;       // weighted combination
    int n_latent_atoms = 0;
};

// E[phi_f(a_f) | O]: expectation of the disjunction's truth value under the
// product posterior, observed atoms fixed. Exact over the distinct latent
// atoms (closed product form, equal to the 2^k enumeration). Differentiable
// w.r.t. the model parameters. Throws DataError past 20 distinct latents.
Value expected_clause_truth(PosteriorModel& model, PosteriorModel::TapeContext& ctx,
                            const GroundFormula& gf);

ElboTerms elbo_batch(PosteriorModel& model, PosteriorModel::TapeContext& ctx,
                     std::span<const GroundFormula> batch, const std::vector<Clause>& clauses,
                     const ObjectiveWeights& weights);

// Halves the learning rate after `patience` epochs without improvement.
struct PlateauScheduler {
    int patience = 10;
    double best = std::numeric_limits<double>::infinity();
    int epochs_since_best = 0;

    // feed one validation loss per epoch; true => caller should decay the lr
    bool update(double loss) {
        if (loss < best) {
            best = loss;
            epochs_since_best = 0;
            return false;
        }
        if (++epochs_since_best >= patience) {
            epochs_since_best = 0;
            return true;
        }
        return false;
    }
};

struct TrainConfig {
    int epochs = 10;
    int steps_per_epoch = 100;
    ObjectiveWeights weights;
    int plateau_patience = 10;
    double lr_decay = 0.5;
    bool query_anchored = false;  // anchor batches on training query atoms
};

struct TrainHistory {
    struct Row {
        int64_t step;
        double objective;
        double val_metric;
        double lr;
    };
    std::vector<Row> rows;

    void save_csv(const std::string& path) const;
};

// Stochastic training: sample batch, build objective, backward, Adam step,
// invalidate the embedding cache. Validation loss (negative mean
// log-likelihood of the valid queries, when present, else the negative epoch
// objective) drives the lr plateau schedule.
TrainHistory train(const KnowledgeBase& kb, PosteriorModel& model, GroundSampler& sampler,
                   Adam& optimizer, const TrainConfig& config,
                   const DatasetSplit* split = nullptr);

// Deterministic full-gradient ascent on a fixed grounding set (oracle and
// property tests). Returns the objective value per step.
std::vector<double> train_full_batch(PosteriorModel& model,
                                     std::span<const GroundFormula> groundings,
                                     const std::vector<Clause>& clauses, Adam& optimizer,
                                     const ObjectiveWeights& weights, int steps);

// Objective evaluated once without touching parameters.
double evaluate_elbo(PosteriorModel& model, std::span<const GroundFormula> groundings,
                     const std::vector<Clause>& clauses, const ObjectiveWeights& weights);

// q_prob per query atom. Passing an observed atom is a DataError: observed
// atoms are not latent variables.
std::vector<std::pair<GroundAtom, double>> infer_marginals(const KnowledgeBase& kb,
                                                           PosteriorModel& model,
                                                           std::span<const GroundAtom> queries);

} // namespace xmln
