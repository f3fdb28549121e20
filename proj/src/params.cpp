#include "xmln/params.hpp"

#include "xmln/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace xmln {

Param& ParamStore::create(const std::string& name, std::vector<int64_t> shape) {
    if (index_.count(name)) throw NumericError("duplicate parameter name: " + name);
    params_.push_back(std::make_unique<Param>(name, Tensor(std::move(shape))));
    index_[name] = params_.size() - 1;
    return *params_.back();
}

Param& ParamStore::create_normal(const std::string& name, std::vector<int64_t> shape, Rng& rng,
                                 double stddev) {
    Param& p = create(name, std::move(shape));
    for (double& v : p.value.data) v = rng.normal(0.0, stddev);
    return p;
}

Param* ParamStore::find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
}

const Param* ParamStore::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
}

void ParamStore::zero_grads() {
    for (auto& p : params_) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
}

int64_t ParamStore::total_size() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

std::vector<Param*> ParamStore::all() {
    std::vector<Param*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Param*> ParamStore::all() const {
    std::vector<const Param*> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.get());
    return out;
}

void Adam::step(ParamStore& store) {
    for (Param* p : store.all()) {
        Moments& mo = moments_[p];
        if (mo.m.size() == 0) {
            mo.m = Tensor(p->value.shape);
            mo.v = Tensor(p->value.shape);
        }
        mo.t += 1;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(mo.t));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(mo.t));
        for (int64_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad[i];
            mo.m[i] = beta1_ * mo.m[i] + (1.0 - beta1_) * g;
            mo.v[i] = beta2_ * mo.v[i] + (1.0 - beta2_) * g * g;
            const double mhat = mo.m[i] / bc1;
            const double vhat = mo.v[i] / bc2;
            p->value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
        std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
    }
}

namespace {

constexpr char kMagic[8] = {'X', 'M', 'L', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void write_u32(FILE* f, uint32_t v) { std::fwrite(&v, sizeof v, 1, f); }
void write_i64(FILE* f, int64_t v) { std::fwrite(&v, sizeof v, 1, f); }

uint32_t read_u32(FILE* f) {
    uint32_t v = 0;
    if (std::fread(&v, sizeof v, 1, f) != 1) throw DataError("checkpoint: truncated file");
    return v;
}

int64_t read_i64(FILE* f) {
    int64_t v = 0;
    if (std::fread(&v, sizeof v, 1, f) != 1) throw DataError("checkpoint: truncated file");
    return v;
}

} // namespace

void save_checkpoint(const ParamStore& store, const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DataError("checkpoint: cannot open for writing: " + path);
    std::fwrite(kMagic, 1, sizeof kMagic, f);
    write_u32(f, kVersion);
    write_u32(f, static_cast<uint32_t>(store.count()));
    for (const Param* p : store.all()) {
        write_u32(f, static_cast<uint32_t>(p->name.size()));
        std::fwrite(p->name.data(), 1, p->name.size(), f);
        write_u32(f, static_cast<uint32_t>(p->value.shape.size()));
        for (int64_t d : p->value.shape) write_i64(f, d);
        std::fwrite(p->value.data.data(), sizeof(double), p->value.data.size(), f);
    }
    if (std::fclose(f) != 0) throw DataError("checkpoint: write failed: " + path);
}

void load_checkpoint(ParamStore& store, const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw DataError("checkpoint: cannot open: " + path);
    char magic[8];
    if (std::fread(magic, 1, sizeof magic, f) != sizeof magic ||
        std::memcmp(magic, kMagic, sizeof magic) != 0) {
        std::fclose(f);
        throw DataError("checkpoint: bad magic in " + path);
    }
    const uint32_t version = read_u32(f);
    if (version != kVersion) {
        std::fclose(f);
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    }
    const uint32_t count = read_u32(f);
    try {
        for (uint32_t i = 0; i < count; ++i) {
            const uint32_t name_len = read_u32(f);
            std::string name(name_len, '\0');
            if (std::fread(name.data(), 1, name_len, f) != name_len)
                throw DataError("checkpoint: truncated name");
            const uint32_t ndim = read_u32(f);
            std::vector<int64_t> shape(ndim);
            for (uint32_t d = 0; d < ndim; ++d) shape[d] = read_i64(f);
            Param* p = store.find(name);
            if (p == nullptr) p = &store.create(name, shape);
            if (p->value.shape != shape)
                throw DataError("checkpoint: shape mismatch for " + name);
            if (std::fread(p->value.data.data(), sizeof(double), p->value.data.size(), f) !=
                p->value.data.size())
                throw DataError("checkpoint: truncated tensor " + name);
        }
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
}

} // namespace xmln
