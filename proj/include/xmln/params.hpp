#pragma once

#include "xmln/rng.hpp"
#include "xmln/tensor.hpp"

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace xmln {

// Trainable tensor with an accumulated gradient buffer.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param(std::string name_, Tensor value_)
        : name(std::move(name_)), value(std::move(value_)), grad(value.shape) {}
};

// Owns all parameters of a model. Creation order is deterministic, so a fixed
// seed yields a bit-identical initialization.
class ParamStore {
  public:
    Param& create(const std::string& name, std::vector<int64_t> shape);
    Param& create_normal(const std::string& name, std::vector<int64_t> shape, Rng& rng,
                         double stddev);
    Param* find(const std::string& name);
    const Param* find(const std::string& name) const;
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    void zero_grads();
    int64_t total_size() const;
    size_t count() const { return params_.size(); }

    std::vector<Param*> all();
    std::vector<const Param*> all() const;

  private:
    std::vector<std::unique_ptr<Param>> params_;
    std::unordered_map<std::string, size_t> index_;
};

// Adam with bias correction. Moment buffers are created lazily so parameters
// added mid-training (naive-variant per-atom logits) just work. The learning
// rate is mutable; plateau-driven halving is owned by the training loop.
class Adam {
  public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // Applies one update from the accumulated grads, then zeroes them.
    void step(ParamStore& store);

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }
    void halve_lr() { lr_ *= 0.5; }

  private:
    struct Moments {
        Tensor m;
        Tensor v;
        int64_t t = 0;
    };

    double lr_, beta1_, beta2_, eps_;
    std::unordered_map<const Param*, Moments> moments_;
};

// Checkpoint blob: magic, version, then named tensors (shape + little-endian
// f64 payload). Model metadata travels as "meta/*" scalar tensors.
void save_checkpoint(const ParamStore& store, const std::string& path);
void load_checkpoint(ParamStore& store, const std::string& path);

} // namespace xmln
