#pragma once

#include "xmln/factor_graph.hpp"
#include "xmln/logic.hpp"
#include "xmln/params.hpp"
#include "xmln/tape.hpp"

#include <array>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace xmln {

enum class ModelVariant { Naive, TunableOnly, GnnOnly, Express };

ModelVariant variant_from_string(const std::string& s);
std::string to_string(ModelVariant v);

struct ModelConfig {
    ModelVariant variant = ModelVariant::Express;
    int gnn_dim = 64;    // d
    int tune_dim = 4;    // d_t
    int rounds = 2;      // T message-passing rounds
    int hidden_dim = 0;  // MLP hidden width; 0 = embedding width
    uint64_t seed = 0;
};

// Posterior Q(r(a_r)) over ground atoms. Four parametrizations:
//   naive        one logit per atom
//   tunable-only logistic(MLP_r(omega_c1, ..., omega_cn))
//   gnn-only     logistic(MLP_r(mu_c1, ..., mu_cn)), mu from message passing
//   express      logistic(MLP_r([mu,omega]_c1, ...))
// GNN message passing runs over the plain factor graph (never the augmented
// one) with per-(round, direction, position, value) message MLPs and sum
// pooling; messages aggregate in a fixed (value, position, fact) order so
// color-equivalent nodes get bit-identical embeddings.
class PosteriorModel {
  public:
    PosteriorModel(const KnowledgeBase& kb, ModelConfig config);

    // Embeddings for one training step live on the caller's tape; q values
    // are memoized per atom so repeated atoms share one node.
    struct TapeContext {
        Tape* tape = nullptr;
        std::vector<Value> mu;     // per constant, empty for non-GNN variants
        Value table;               // tunable table leaf, invalid if unused
        std::unordered_map<GroundAtom, Value, AtomHash> q_cache;
        std::vector<GroundAtom> q_order;  // first-encounter order (deterministic)
    };

    TapeContext begin_step(Tape& tape);
    Value q_on_tape(TapeContext& ctx, const GroundAtom& atom);

    // Evaluation path; recomputes the embedding cache if stale. Safe for
    // concurrent calls once the cache is fresh.
    double q_prob(const GroundAtom& atom);
    void refresh_cache();
    void invalidate_cache() { cache_valid_ = false; }

    // [mu_c, omega_c]; omega is zeros for entities beyond the table and in
    // zero-tunable (inductive) mode.
    std::vector<double> embed_entity(int constant);

    // Rebinds the model to another KB's factor graph (inductive setting). The
    // schema must match the training schema.
    void attach_kb(const KnowledgeBase& kb);
    void set_zero_tunable(bool on) {
        zero_tunable_ = on;
        invalidate_cache();
    }

    void save(const std::string& path) const;
    static std::unique_ptr<PosteriorModel> load(const KnowledgeBase& kb, const std::string& path,
                                                bool allow_entity_mismatch = false);

    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    int64_t param_count() const { return store_.total_size(); }
    const ModelConfig& config() const { return config_; }
    const KnowledgeBase& kb() const { return *kb_; }

    bool uses_gnn() const {
        return config_.variant == ModelVariant::GnnOnly || config_.variant == ModelVariant::Express;
    }
    bool uses_tunable() const {
        return config_.variant == ModelVariant::TunableOnly ||
               config_.variant == ModelVariant::Express;
    }

    // width of one entity's representation as seen by the scoring heads
    int entity_width() const;

  private:
    struct Mlp {  // two-layer ReLU block
        Param* w1;
        Param* b1;
        Param* w2;
        Param* b2;
    };

    Mlp create_mlp(const std::string& prefix, int64_t in, int64_t hidden, int64_t out, Rng& rng);
    Value apply_mlp(Tape& tape, const Mlp& mlp, Value input) const;
    std::vector<Value> gnn_on_tape(Tape& tape) const;
    Value head_on_tape(Tape& tape, TapeContext& ctx, const GroundAtom& atom);
    Param& naive_param(const GroundAtom& atom);
    void build_parameters();

    const KnowledgeBase* kb_;
    ModelConfig config_;
    ParamStore store_;
    FactorGraph graph_;

    Param* mu_const_ = nullptr;
    std::vector<Param*> mu_pred_;
    // msg_[t][direction][position][value]; direction 0 = fact->const
    std::vector<std::array<std::vector<std::array<Mlp, 2>>, 2>> msg_;
    std::vector<Mlp> update_const_, update_fact_;
    Param* table_ = nullptr;
    std::vector<Mlp> heads_;

    std::vector<Tensor> cached_mu_;
    bool cache_valid_ = false;
    bool zero_tunable_ = false;
};

} // namespace xmln
