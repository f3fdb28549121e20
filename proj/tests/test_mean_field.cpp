#include "fixtures.hpp"
#include "xmln/errors.hpp"
#include "xmln/exact.hpp"
#include "xmln/mean_field.hpp"

#include <doctest.h>

#include <cmath>

using namespace xmln;

namespace {

ModelConfig tiny(ModelVariant v, uint64_t seed = 21) {
    ModelConfig mc;
    mc.variant = v;
    mc.gnn_dim = 4;
    mc.tune_dim = 2;
    mc.rounds = 1;
    mc.seed = seed;
    return mc;
}

double objective_value(PosteriorModel& model, std::span<const GroundFormula> batch,
                       const std::vector<Clause>& clauses, const ObjectiveWeights& w) {
    Tape tape;
    auto ctx = model.begin_step(tape);
    return elbo_batch(model, ctx, batch, clauses, w).objective.scalar();
}

// brute-force oracle for E[phi | O]: enumerate all assignments of the
// grounding's distinct latent atoms
double expected_truth_oracle(PosteriorModel& model, const GroundFormula& gf) {
    std::vector<GroundAtom> latents;
    for (const GroundLiteral& lit : gf.literals) {
        if (lit.observed >= 0) continue;
        bool seen = false;
        for (const GroundAtom& a : latents) seen |= (a == lit.atom);
        if (!seen) latents.push_back(lit.atom);
    }
    double expectation = 0.0;
    for (uint64_t mask = 0; mask < (1ull << latents.size()); ++mask) {
        double prob = 1.0;
        bool clause_true = false;
        auto value_of = [&](const GroundLiteral& lit) {
            if (lit.observed >= 0) return static_cast<int>(lit.observed);
            for (size_t j = 0; j < latents.size(); ++j)
                if (latents[j] == lit.atom) return static_cast<int>((mask >> j) & 1u);
            return -1;
        };
        for (size_t j = 0; j < latents.size(); ++j) {
            const double q = model.q_prob(latents[j]);
            prob *= ((mask >> j) & 1u) ? q : 1.0 - q;
        }
        for (const GroundLiteral& lit : gf.literals)
            clause_true |= ((value_of(lit) == 1) != lit.negated);
        expectation += prob * (clause_true ? 1.0 : 0.0);
    }
    return expectation;
}

} // namespace

TEST_SUITE("mean_field") {

TEST_CASE("observed premises reduce the expectation to q of the conclusion") {
    // !S(A) | !F(A,B) | S(B) with S(A)=1 and F(A,B)=1 observed
    KnowledgeBase kb;
    kb.declare_schema("S", 1);
    kb.declare_schema("F", 2);
    const int a = kb.add_constant("A");
    const int b = kb.add_constant("B");
    kb.add_fact({0, {a}}, 1);
    kb.add_fact({1, {a, b}}, 1);
    auto clauses = parse_rules("S(x) & F(x,y) => S(y)", kb);

    PosteriorModel model(kb, tiny(ModelVariant::Naive));
    const GroundFormula gf = resolve_ground_formula(kb, clauses, 0, {a, b});

    Tape tape;
    auto ctx = model.begin_step(tape);
    const double e = expected_clause_truth(model, ctx, gf).scalar();
    CHECK(e == model.q_prob({0, {b}}));
}

TEST_CASE("an observed-true positive literal makes the clause certain") {
    KnowledgeBase kb;
    kb.declare_schema("S", 1);
    kb.declare_schema("T", 1);
    const int a = kb.add_constant("A");
    kb.add_fact({0, {a}}, 1);
    auto clauses = parse_rules("S(x) | T(x)", kb);
    PosteriorModel model(kb, tiny(ModelVariant::Naive));
    const GroundFormula gf = resolve_ground_formula(kb, clauses, 0, {a});

    Tape tape;
    auto ctx = model.begin_step(tape);
    CHECK(expected_clause_truth(model, ctx, gf).scalar() == 1.0);
}

TEST_CASE("two fresh latents at one half give three quarters") {
    KnowledgeBase kb;
    kb.declare_schema("X", 1);
    kb.declare_schema("Y", 1);
    const int a = kb.add_constant("A");
    auto clauses = parse_rules("X(v) => Y(v)", kb);
    PosteriorModel model(kb, tiny(ModelVariant::Naive));
    const GroundFormula gf = resolve_ground_formula(kb, clauses, 0, {a});

    Tape tape;
    auto ctx = model.begin_step(tape);
    CHECK(expected_clause_truth(model, ctx, gf).scalar() == 0.75);
}

TEST_CASE("tautological groundings evaluate to one") {
    KnowledgeBase kb;
    kb.declare_schema("X", 1);
    const int a = kb.add_constant("A");
    kb.add_constant("B");
    auto clauses = parse_rules("X(u) => X(v)", kb);  // u = v makes !X(A) | X(A)
    PosteriorModel model(kb, tiny(ModelVariant::Naive));
    const GroundFormula gf = resolve_ground_formula(kb, clauses, 0, {a, a});
    Tape tape;
    auto ctx = model.begin_step(tape);
    CHECK(expected_clause_truth(model, ctx, gf).scalar() == 1.0);
}

TEST_CASE("closed product form equals the enumeration oracle") {
    Rng rng(404);
    KnowledgeBase kb;
    kb.declare_schema("F", 2);
    kb.declare_schema("S", 1);
    for (int i = 0; i < 4; ++i) kb.add_constant("c" + std::to_string(i));
    for (int i = 0; i < 5; ++i) {
        const GroundAtom atom{0, {rng.uniform_int(4), rng.uniform_int(4)}};
        if (!kb.is_observed(atom)) kb.add_fact(atom, rng.bernoulli(0.6) ? 1 : 0);
    }
    auto clauses =
        parse_rules("F(x,y) & F(y,z) => S(x)\nS(x) & F(x,y) => S(y)\nF(x,y) => F(y,x)", kb);

    PosteriorModel model(kb, tiny(ModelVariant::Naive));
    // spread the naive logits so q values are not all one half
    {
        Tape tape;
        auto ctx = model.begin_step(tape);
        for (const GroundFormula& gf : enumerate_groundings(kb, clauses))
            for (const GroundLiteral& lit : gf.literals)
                if (lit.observed < 0) model.q_on_tape(ctx, lit.atom);
    }
    for (Param* p : model.params().all()) p->value[0] = Rng(p->value.size() + 7).normal() * 1.5;
    model.invalidate_cache();

    for (const GroundFormula& gf : enumerate_groundings(kb, clauses)) {
        Tape tape;
        auto ctx = model.begin_step(tape);
        const double fast = expected_clause_truth(model, ctx, gf).scalar();
        const double slow = expected_truth_oracle(model, gf);
        CHECK(std::fabs(fast - slow) < 1e-12);
    }
}

TEST_CASE("expectation is monotone in the posterior of a positive literal") {
    KnowledgeBase kb;
    kb.declare_schema("X", 1);
    kb.declare_schema("Y", 1);
    const int a = kb.add_constant("A");
    auto clauses = parse_rules("X(v) => Y(v)", kb);
    PosteriorModel model(kb, tiny(ModelVariant::Naive));
    const GroundFormula gf = resolve_ground_formula(kb, clauses, 0, {a});

    // materialize the two logits
    { Tape t; auto ctx = model.begin_step(t); expected_clause_truth(model, ctx, gf); }
    Param* y_logit = model.params().find("naive/Y(A)");
    Param* x_logit = model.params().find("naive/X(A)");
    REQUIRE(y_logit != nullptr);
    REQUIRE(x_logit != nullptr);

    double prev = -1.0;
    for (double logit : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        y_logit->value[0] = logit;  // raises q(Y(A)), positive literal
        Tape t;
        auto ctx = model.begin_step(t);
        const double e = expected_clause_truth(model, ctx, gf).scalar();
        CHECK(e > prev);
        prev = e;
    }
    prev = 2.0;
    y_logit->value[0] = 0.0;
    for (double logit : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        x_logit->value[0] = logit;  // raises q(X(A)), negated literal
        Tape t;
        auto ctx = model.begin_step(t);
        const double e = expected_clause_truth(model, ctx, gf).scalar();
        CHECK(e < prev);
        prev = e;
    }
}

TEST_CASE("elbo terms: satisfied formula and ln 2 entropy") {
    KnowledgeBase kb;
    kb.declare_schema("S", 1);
    kb.declare_schema("T", 1);
    const int a = kb.add_constant("A");
    kb.add_fact({0, {a}}, 1);
    auto clauses = parse_rules("weight: 2.5 S(x) | T(x)", kb);
    PosteriorModel model(kb, tiny(ModelVariant::Naive));
    std::vector<GroundFormula> batch{resolve_ground_formula(kb, clauses, 0, {a})};

    Tape tape;
    auto ctx = model.begin_step(tape);
    const ElboTerms terms = elbo_batch(model, ctx, batch, clauses, ObjectiveWeights{});
    CHECK(terms.formula_score.scalar() == 2.5);                  // w_f * 1
    CHECK(terms.entropy.scalar() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(terms.n_latent_atoms == 1);
}

TEST_CASE("full-batch ELBO never exceeds the exact log evidence") {
    Rng rng(31337);
    for (int trial = 0; trial < 5; ++trial) {
        KnowledgeBase kb;
        kb.declare_schema("F", 2);
        kb.declare_schema("S", 1);
        const int m = 2 + rng.uniform_int(2);
        for (int i = 0; i < m; ++i) kb.add_constant("c" + std::to_string(i));
        for (int i = 0; i < m; ++i) {
            const GroundAtom atom{0, {rng.uniform_int(m), rng.uniform_int(m)}};
            if (!kb.is_observed(atom)) kb.add_fact(atom, rng.bernoulli(0.5) ? 1 : 0);
        }
        auto clauses = parse_rules("weight: 1.5 F(x,y) => S(x)\nS(x) | S(y)", kb);
        auto groundings = enumerate_groundings(kb, clauses);
        const EnumerableMln mln = make_enumerable(kb, clauses, groundings);
        if (mln.latents.size() > 10) continue;
        const double log_z = exact_log_evidence(mln);

        PosteriorModel model(kb, tiny(ModelVariant::Naive, 50 + trial));
        Adam opt(0.05);
        const auto objectives =
            train_full_batch(model, groundings, clauses, opt, ObjectiveWeights{}, 400);
        for (double obj : objectives) CHECK(obj <= log_z + 1e-9);
        // trained variational bound should come close for such small worlds
        CHECK(objectives.back() > log_z - 1.0);
    }
}

TEST_CASE("full-batch ascent is monotone at a small learning rate") {
    KnowledgeBase kb;
    kb.declare_schema("S", 1);
    const int a = kb.add_constant("A");
    const int b = kb.add_constant("B");
    const int c = kb.add_constant("C");
    kb.add_fact({0, {a}}, 1);
    auto clauses = parse_rules("S(x) => S(y)", kb);
    std::vector<GroundFormula> chain{resolve_ground_formula(kb, clauses, 0, {a, b}),
                                     resolve_ground_formula(kb, clauses, 0, {b, c})};
    PosteriorModel model(kb, tiny(ModelVariant::Naive));
    Adam opt(0.001);
    const auto objectives =
        train_full_batch(model, chain, clauses, opt, ObjectiveWeights{}, 200);
    for (size_t i = 1; i < objectives.size(); ++i)
        CHECK(objectives[i] >= objectives[i - 1] - 1e-7);
}

TEST_CASE("with zero formula and discriminative weight training maximizes entropy") {
    KnowledgeBase kb;
    kb.declare_schema("S", 1);
    for (int i = 0; i < 3; ++i) kb.add_constant("c" + std::to_string(i));
    auto clauses = parse_rules("S(x) => S(y)", kb);
    auto groundings = enumerate_groundings(kb, clauses);

    PosteriorModel model(kb, tiny(ModelVariant::Naive));
    // skew the logits away from one half first
    {
        Tape tape;
        auto ctx = model.begin_step(tape);
        for (const GroundFormula& gf : groundings)
            for (const GroundLiteral& lit : gf.literals) model.q_on_tape(ctx, lit.atom);
    }
    for (Param* p : model.params().all()) p->value[0] = 2.0;
    model.invalidate_cache();

    ObjectiveWeights w;
    w.formula = 0.0;
    w.discriminative = 0.0;
    Adam opt(0.05);
    train_full_batch(model, groundings, clauses, opt, w, 500);
    for (int i = 0; i < 3; ++i)
        CHECK(std::fabs(model.q_prob({0, {i}}) - 0.5) < 1e-3);
}

TEST_CASE("elbo gradients match finite differences for all four variants") {
    const KnowledgeBase kb = fixtures::loop_kb();
    auto clauses = parse_rules("weight: 1.5 F(c,cp) => L(c,cp)\nL(c,cp) => L(cp,c)", kb);
    std::vector<GroundFormula> batch;
    batch.push_back(resolve_ground_formula(kb, clauses, 0, {0, 2}));
    batch.push_back(resolve_ground_formula(kb, clauses, 0, {1, 2}));
    batch.push_back(resolve_ground_formula(kb, clauses, 1, {0, 2}));

    ObjectiveWeights w;
    w.discriminative = 0.5;  // exercise every term

    for (ModelVariant v : {ModelVariant::Naive, ModelVariant::TunableOnly, ModelVariant::GnnOnly,
                           ModelVariant::Express}) {
        CAPTURE(to_string(v));
        PosteriorModel model(kb, tiny(v, 321));
        // materialize lazy params, then compute analytic gradients
        objective_value(model, batch, clauses, w);
        model.params().zero_grads();
        {
            Tape tape;
            auto ctx = model.begin_step(tape);
            const ElboTerms terms = elbo_batch(model, ctx, batch, clauses, w);
            tape.backward(tape.scale(terms.objective, -1.0));
        }

        const double h = 1e-5;
        Rng pick(9);
        for (Param* p : model.params().all()) {
            // spot-check a few coordinates per tensor
            for (int probe = 0; probe < 3; ++probe) {
                const int64_t j = static_cast<int64_t>(
                    pick.uniform_u64(static_cast<uint64_t>(p->value.size())));
                const double saved = p->value[j];
                p->value[j] = saved + h;
                model.invalidate_cache();
                const double up = objective_value(model, batch, clauses, w);
                p->value[j] = saved - h;
                model.invalidate_cache();
                const double down = objective_value(model, batch, clauses, w);
                p->value[j] = saved;
                model.invalidate_cache();

                const double numeric = (up - down) / (2 * h);
                const double analytic = -p->grad[j];  // backward ran on -objective
                const double scale = std::max({1e-6, std::fabs(numeric), std::fabs(analytic)});
                CAPTURE(p->name);
                CHECK(std::fabs(numeric - analytic) / scale < 1e-4);
            }
        }
    }
}

TEST_CASE("plateau scheduler halves the paper's learning rate") {
    Adam opt(0.0005);
    PlateauScheduler plateau{10};
    // epoch 0 improves, then 10 flat epochs
    plateau.update(1.0);
    for (int epoch = 0; epoch < 10; ++epoch) {
        if (plateau.update(1.0)) opt.halve_lr();
    }
    CHECK(opt.lr() == doctest::Approx(0.00025).epsilon(1e-12));
}

TEST_CASE("zero epochs leave the model untouched") {
    const KnowledgeBase kb = fixtures::loop_kb();
    auto clauses = parse_rules("F(c,cp) => L(c,cp)", kb);
    PosteriorModel model(kb, tiny(ModelVariant::Express));
    std::vector<Tensor> before;
    for (const Param* p : model.params().all()) before.push_back(p->value);

    GroundSampler sampler(kb, clauses, SamplerConfig{}, 1);
    Adam opt(0.01);
    TrainConfig tc;
    tc.epochs = 0;
    train(kb, model, sampler, opt, tc, nullptr);

    const auto after = model.params().all();
    for (size_t i = 0; i < after.size(); ++i) CHECK(after[i]->value.data == before[i].data);
}

TEST_CASE("training records history and reacts to non-finite objectives") {
    KnowledgeBase kb = fixtures::loop_kb();
    auto clauses = parse_rules("F(c,cp) => L(c,cp)", kb);
    for (Clause& c : clauses) kb.add_clause(c);
    PosteriorModel model(kb, tiny(ModelVariant::TunableOnly));
    GroundSampler sampler(kb, clauses, SamplerConfig{}, 2);
    Adam opt(0.01);
    TrainConfig tc;
    tc.epochs = 2;
    tc.steps_per_epoch = 5;
    const TrainHistory history = train(kb, model, sampler, opt, tc, nullptr);
    CHECK(history.rows.size() == 10);
    CHECK(history.rows.front().step == 0);
    CHECK(history.rows.back().lr == opt.lr());
}

TEST_CASE("infer_marginals rejects observed atoms") {
    const KnowledgeBase kb = fixtures::loop_kb();
    PosteriorModel model(kb, tiny(ModelVariant::Naive));
    const GroundAtom observed{*kb.schema_id("F"), {0, 2}};
    const GroundAtom latent{*kb.schema_id("L"), {0, 2}};
    std::vector<GroundAtom> bad{observed};
    CHECK_THROWS_AS(infer_marginals(kb, model, bad), DataError);

    std::vector<GroundAtom> good{latent};
    const auto marginals = infer_marginals(kb, model, good);
    REQUIRE(marginals.size() == 1);
    CHECK(marginals[0].second == 0.5);  // untrained naive
}

} // TEST_SUITE
