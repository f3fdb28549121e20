#include "xmln/model.hpp"

#include "xmln/errors.hpp"

#include <array>
#include <cmath>

namespace xmln {

ModelVariant variant_from_string(const std::string& s) {
    if (s == "naive") return ModelVariant::Naive;
    if (s == "tunable" || s == "tune") return ModelVariant::TunableOnly;
    if (s == "gnn") return ModelVariant::GnnOnly;
    if (s == "express") return ModelVariant::Express;
    throw ConfigError("unknown model variant: " + s +
                      " (expected naive|tunable|gnn|express)");
}

std::string to_string(ModelVariant v) {
    switch (v) {
    case ModelVariant::Naive: return "naive";
    case ModelVariant::TunableOnly: return "tunable";
    case ModelVariant::GnnOnly: return "gnn";
    case ModelVariant::Express: return "express";
    }
    return "?";
}

PosteriorModel::PosteriorModel(const KnowledgeBase& kb, ModelConfig config)
    : kb_(&kb), config_(config) {
    if (config_.gnn_dim < 1) throw ConfigError("model.gnn_dim must be >= 1");
    if (config_.tune_dim < 0) throw ConfigError("model.tune_dim must be >= 0");
    if (config_.rounds < 0) throw ConfigError("model.rounds must be >= 0");
    if (uses_tunable() && config_.tune_dim == 0 && config_.variant == ModelVariant::TunableOnly)
        throw ConfigError("tunable variant needs model.tune_dim >= 1");
    graph_ = build_graph(kb);
    build_parameters();
}

int PosteriorModel::entity_width() const {
    switch (config_.variant) {
    case ModelVariant::Naive: return 0;
    case ModelVariant::TunableOnly: return config_.tune_dim;
    case ModelVariant::GnnOnly: return config_.gnn_dim;
    case ModelVariant::Express: return config_.gnn_dim + config_.tune_dim;
    }
    return 0;
}

PosteriorModel::Mlp PosteriorModel::create_mlp(const std::string& prefix, int64_t in,
                                               int64_t hidden, int64_t out, Rng& rng) {
    Mlp mlp;
    mlp.w1 = &store_.create_normal(prefix + "/W1", {hidden, in}, rng,
                                   1.0 / std::sqrt(static_cast<double>(in)));
    mlp.b1 = &store_.create(prefix + "/b1", {hidden});
    mlp.w2 = &store_.create_normal(prefix + "/W2", {out, hidden}, rng,
                                   1.0 / std::sqrt(static_cast<double>(hidden)));
    mlp.b2 = &store_.create(prefix + "/b2", {out});
    return mlp;
}

void PosteriorModel::build_parameters() {
    Rng rng(config_.seed);
    const int d = config_.gnn_dim;
    const int hidden = config_.hidden_dim > 0 ? config_.hidden_dim : d;

    if (uses_gnn()) {
        mu_const_ = &store_.create_normal("gnn/mu_const", {d}, rng, 1.0);
        for (const PredicateSchema& s : kb_->schemas())
            mu_pred_.push_back(&store_.create_normal("gnn/mu_pred/" + s.name, {d}, rng, 1.0));
        const int max_arity = kb_->max_arity();
        msg_.resize(static_cast<size_t>(config_.rounds));
        for (int t = 0; t < config_.rounds; ++t) {
            const std::string tp = "gnn/t" + std::to_string(t);
            for (int dir = 0; dir < 2; ++dir) {
                auto& by_pos = msg_[static_cast<size_t>(t)][static_cast<size_t>(dir)];
                by_pos.resize(static_cast<size_t>(max_arity));
                for (int pos = 0; pos < max_arity; ++pos) {
                    for (int val = 0; val < 2; ++val) {
                        const std::string prefix = tp + "/msg/" +
                                                   (dir == 0 ? "f2c" : "c2f") + "/p" +
                                                   std::to_string(pos) + "/v" +
                                                   std::to_string(val);
                        by_pos[static_cast<size_t>(pos)][static_cast<size_t>(val)] =
                            create_mlp(prefix, 2 * d, hidden, d, rng);
                    }
                }
            }
            update_const_.push_back(create_mlp(tp + "/upd_const", 2 * d, hidden, d, rng));
            update_fact_.push_back(create_mlp(tp + "/upd_fact", 2 * d, hidden, d, rng));
        }
    }

    if (uses_tunable() && config_.tune_dim > 0) {
        // omega rows start near zero; spread comes from training
        table_ = &store_.create_normal("tune/table", {kb_->n_constants(), config_.tune_dim}, rng,
                                       0.1);
    }

    if (config_.variant != ModelVariant::Naive) {
        const int width = entity_width();
        for (const PredicateSchema& s : kb_->schemas()) {
            const int64_t in = static_cast<int64_t>(s.arity) * width;
            const int64_t hh = config_.hidden_dim > 0 ? config_.hidden_dim : width;
            heads_.push_back(create_mlp("head/" + s.name, in, hh, 1, rng));
        }
    }
}

Value PosteriorModel::apply_mlp(Tape& tape, const Mlp& mlp, Value input) const {
    Value h = tape.add(tape.matvec(tape.param(*mlp.w1), input), tape.param(*mlp.b1));
    h = tape.relu(h);
    return tape.add(tape.matvec(tape.param(*mlp.w2), h), tape.param(*mlp.b2));
}

std::vector<Value> PosteriorModel::gnn_on_tape(Tape& tape) const {
    const FactorGraph& g = graph_;
    const int d = config_.gnn_dim;

    // round 0: nodes of the same type share one tape node
    std::vector<Value> mu_c(static_cast<size_t>(g.n_constants), tape.param(*mu_const_));
    std::vector<Value> mu_o;
    mu_o.reserve(g.facts.size());
    std::vector<Value> pred_init;
    for (Param* p : mu_pred_) pred_init.push_back(tape.param(*p));
    for (const auto& f : g.facts) mu_o.push_back(pred_init[static_cast<size_t>(f.predicate)]);

    const Value zero = tape.constant(Tensor({d}));
    for (int t = 0; t < config_.rounds; ++t) {
        const auto& msgs = msg_[static_cast<size_t>(t)];

        // fact -> constant messages, aggregated in the adjacency's fixed
        // (value, position, fact) order
        std::vector<Value> agg_c(static_cast<size_t>(g.n_constants), zero);
        for (int c = 0; c < g.n_constants; ++c) {
            Value acc;
            for (const auto& e : g.constant_adj[static_cast<size_t>(c)]) {
                const auto& f = g.facts[static_cast<size_t>(e.fact)];
                const Mlp& mlp =
                    msgs[0][static_cast<size_t>(e.pos)][static_cast<size_t>(f.value)];
                Value m = apply_mlp(
                    tape, mlp,
                    tape.concat(mu_o[static_cast<size_t>(e.fact)], mu_c[static_cast<size_t>(c)]));
                acc = acc.valid() ? tape.add(acc, m) : m;
            }
            agg_c[static_cast<size_t>(c)] = acc.valid() ? acc : zero;
        }

        // constant -> fact messages, argument order
        std::vector<Value> agg_o(g.facts.size(), zero);
        for (size_t o = 0; o < g.facts.size(); ++o) {
            const auto& f = g.facts[o];
            Value acc;
            for (size_t pos = 0; pos < f.args.size(); ++pos) {
                const Mlp& mlp = msgs[1][pos][static_cast<size_t>(f.value)];
                Value m = apply_mlp(
                    tape, mlp,
                    tape.concat(mu_c[static_cast<size_t>(f.args[pos])], mu_o[o]));
                acc = acc.valid() ? tape.add(acc, m) : m;
            }
            agg_o[o] = acc.valid() ? acc : zero;
        }

        const Mlp& upd_c = update_const_[static_cast<size_t>(t)];
        const Mlp& upd_o = update_fact_[static_cast<size_t>(t)];
        for (int c = 0; c < g.n_constants; ++c) {
            mu_c[static_cast<size_t>(c)] = apply_mlp(
                tape, upd_c,
                tape.concat(mu_c[static_cast<size_t>(c)], agg_c[static_cast<size_t>(c)]));
        }
        for (size_t o = 0; o < g.facts.size(); ++o)
            mu_o[o] = apply_mlp(tape, upd_o, tape.concat(mu_o[o], agg_o[o]));
    }
    return mu_c;  // fact embeddings are not used by the posterior head
}

PosteriorModel::TapeContext PosteriorModel::begin_step(Tape& tape) {
    TapeContext ctx;
    ctx.tape = &tape;
    if (uses_gnn()) ctx.mu = gnn_on_tape(tape);
    if (table_ != nullptr) ctx.table = tape.param(*table_);
    return ctx;
}

Param& PosteriorModel::naive_param(const GroundAtom& atom) {
    const std::string name = "naive/" + kb_->atom_to_string(atom);
    Param* p = store_.find(name);
    if (p == nullptr) p = &store_.create(name, {1});  // logit 0 -> q = 0.5
    return *p;
}

Value PosteriorModel::head_on_tape(Tape& tape, TapeContext& ctx, const GroundAtom& atom) {
    if (config_.variant == ModelVariant::Naive)
        return tape.logistic(tape.param(naive_param(atom)));

    const int dt = config_.tune_dim;
    std::vector<Value> parts;
    for (int c : atom.args) {
        if (uses_gnn()) parts.push_back(ctx.mu[static_cast<size_t>(c)]);
        if (uses_tunable() && dt > 0) {
            const bool in_table = table_ != nullptr && c < table_->value.rows();
            if (zero_tunable_ || !in_table) {
                parts.push_back(tape.constant(Tensor({dt})));
            } else if (ctx.table.valid()) {
                parts.push_back(tape.row(ctx.table, c));
            } else {
                // evaluation path: materialize just this row
                Tensor row({dt});
                const int64_t k = table_->value.cols();
                for (int64_t j = 0; j < dt; ++j) row[j] = table_->value[c * k + j];
                parts.push_back(tape.constant(std::move(row)));
            }
        }
    }
    const Value input = tape.concat(parts);
    const Mlp& head = heads_[static_cast<size_t>(atom.predicate)];
    return tape.logistic(apply_mlp(tape, head, input));
}

Value PosteriorModel::q_on_tape(TapeContext& ctx, const GroundAtom& atom) {
    auto it = ctx.q_cache.find(atom);
    if (it != ctx.q_cache.end()) return it->second;
    const Value q = head_on_tape(*ctx.tape, ctx, atom);
    ctx.q_cache.emplace(atom, q);
    ctx.q_order.push_back(atom);
    return q;
}

void PosteriorModel::refresh_cache() {
    if (cache_valid_) return;
    cached_mu_.clear();
    if (uses_gnn()) {
        Tape tape;
        std::vector<Value> mu = gnn_on_tape(tape);
        cached_mu_.reserve(mu.size());
        for (const Value& v : mu) cached_mu_.push_back(v.tensor());
    }
    cache_valid_ = true;
}

double PosteriorModel::q_prob(const GroundAtom& atom) {
    kb_->validate_atom(atom);
    refresh_cache();
    Tape tape;
    TapeContext ctx;
    ctx.tape = &tape;
    if (uses_gnn()) {
        ctx.mu.resize(cached_mu_.size());
        for (int c : atom.args) {
            Value& slot = ctx.mu[static_cast<size_t>(c)];
            if (!slot.valid()) slot = tape.constant(cached_mu_[static_cast<size_t>(c)]);
        }
    }
    return head_on_tape(tape, ctx, atom).scalar();
}

std::vector<double> PosteriorModel::embed_entity(int constant) {
    if (config_.variant == ModelVariant::Naive)
        throw DataError("naive variant has no entity embeddings");
    if (constant < 0 || constant >= graph_.n_constants)
        throw DataError("embed_entity: constant id out of range");
    refresh_cache();
    std::vector<double> out;
    if (uses_gnn()) {
        const Tensor& mu = cached_mu_[static_cast<size_t>(constant)];
        out.insert(out.end(), mu.data.begin(), mu.data.end());
    }
    if (uses_tunable() && config_.tune_dim > 0) {
        const bool in_table = table_ != nullptr && constant < table_->value.rows();
        if (zero_tunable_ || !in_table) {
            out.insert(out.end(), static_cast<size_t>(config_.tune_dim), 0.0);
        } else {
            const int64_t k = table_->value.cols();
            for (int64_t j = 0; j < k; ++j) out.push_back(table_->value[constant * k + j]);
        }
    }
    return out;
}

void PosteriorModel::attach_kb(const KnowledgeBase& kb) {
    if (kb.n_schemas() != kb_->n_schemas())
        throw DataError("attach_kb: predicate schema mismatch");
    for (int i = 0; i < kb.n_schemas(); ++i) {
        const auto& a = kb.schemas()[static_cast<size_t>(i)];
        const auto& b = kb_->schemas()[static_cast<size_t>(i)];
        if (a.name != b.name || a.arity != b.arity)
            throw DataError("attach_kb: predicate schema mismatch at " + a.name);
    }
    kb_ = &kb;
    graph_ = build_graph(kb);
    invalidate_cache();
}

namespace {
constexpr const char* kMetaKeys[] = {"meta/variant",  "meta/gnn_dim", "meta/tune_dim",
                                     "meta/rounds",   "meta/hidden_dim", "meta/seed",
                                     "meta/n_entities", "meta/n_predicates"};
} // namespace

void PosteriorModel::save(const std::string& path) const {
    ParamStore meta;  // copy of params plus metadata scalars
    const double values[] = {static_cast<double>(static_cast<int>(config_.variant)),
                             static_cast<double>(config_.gnn_dim),
                             static_cast<double>(config_.tune_dim),
                             static_cast<double>(config_.rounds),
                             static_cast<double>(config_.hidden_dim),
                             static_cast<double>(config_.seed),
                             static_cast<double>(kb_->n_constants()),
                             static_cast<double>(kb_->n_schemas())};
    for (size_t i = 0; i < std::size(kMetaKeys); ++i)
        meta.create(kMetaKeys[i], {1}).value[0] = values[i];
    for (const Param* p : store_.all()) meta.create(p->name, p->value.shape).value = p->value;
    save_checkpoint(meta, path);
}

std::unique_ptr<PosteriorModel> PosteriorModel::load(const KnowledgeBase& kb,
                                                     const std::string& path,
                                                     bool allow_entity_mismatch) {
    ParamStore raw;
    load_checkpoint(raw, path);
    for (const char* key : kMetaKeys)
        if (!raw.has(key)) throw DataError("checkpoint missing " + std::string(key) + ": " + path);

    ModelConfig config;
    config.variant = static_cast<ModelVariant>(
        static_cast<int>(raw.find("meta/variant")->value[0]));
    config.gnn_dim = static_cast<int>(raw.find("meta/gnn_dim")->value[0]);
    config.tune_dim = static_cast<int>(raw.find("meta/tune_dim")->value[0]);
    config.rounds = static_cast<int>(raw.find("meta/rounds")->value[0]);
    config.hidden_dim = static_cast<int>(raw.find("meta/hidden_dim")->value[0]);
    config.seed = static_cast<uint64_t>(raw.find("meta/seed")->value[0]);

    const int ckpt_entities = static_cast<int>(raw.find("meta/n_entities")->value[0]);
    const int ckpt_predicates = static_cast<int>(raw.find("meta/n_predicates")->value[0]);
    if (ckpt_predicates != kb.n_schemas())
        throw DataError("checkpoint/KB mismatch: checkpoint has " +
                        std::to_string(ckpt_predicates) + " predicates, KB has " +
                        std::to_string(kb.n_schemas()));
    if (ckpt_entities != kb.n_constants() && !allow_entity_mismatch)
        throw DataError("checkpoint/KB mismatch: checkpoint has " +
                        std::to_string(ckpt_entities) + " entities, KB has " +
                        std::to_string(kb.n_constants()) +
                        " (pass the inductive flag to allow this)");

    auto model = std::make_unique<PosteriorModel>(kb, config);
    for (const Param* p : raw.all()) {
        if (p->name.rfind("meta/", 0) == 0) continue;
        Param* dst = model->store_.find(p->name);
        if (dst == nullptr) {
            // per-atom naive logits and, in inductive mode, a differently
            // sized tunable table
            if (p->name.rfind("naive/", 0) == 0) {
                dst = &model->store_.create(p->name, p->value.shape);
            } else if (allow_entity_mismatch && p->name == "tune/table") {
                continue;  // new entity set: keep the freshly sized table
            } else {
                throw DataError("checkpoint/KB mismatch: unexpected tensor " + p->name);
            }
        }
        if (dst->value.shape != p->value.shape) {
            if (allow_entity_mismatch && p->name == "tune/table") continue;
            throw DataError("checkpoint/KB mismatch: shape of " + p->name);
        }
        dst->value = p->value;
    }
    model->invalidate_cache();
    return model;
}

} // namespace xmln
