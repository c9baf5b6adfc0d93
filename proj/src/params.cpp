#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "store_io.hpp"
#include "xlstance/common.hpp"
#include "xlstance/model.hpp"

namespace xlstance {

std::size_t ParameterStore::add(const std::string& name, std::vector<std::size_t> shape) {
    if (name.empty()) throw std::invalid_argument("tensor name must be non-empty");
    if (has(name)) throw std::invalid_argument("duplicate tensor name: " + name);
    std::size_t size = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("tensor dimension must be positive: " + name);
        size *= d;
    }
    TensorInfo info;
    info.name = name;
    info.offset = values_.size();
    info.size = size;
    info.shape = std::move(shape);
    tensors_.push_back(std::move(info));
    values_.resize(values_.size() + size, 0.0);
    grads_.resize(values_.size(), 0.0);
    return tensors_.size() - 1;
}

std::size_t ParameterStore::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        if (tensors_[i].name == name) return i;
    }
    throw std::out_of_range("unknown tensor: " + name);
}

bool ParameterStore::has(const std::string& name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) return true;
    }
    return false;
}

const TensorInfo& ParameterStore::info(const std::string& name) const {
    return tensors_[index_of(name)];
}

double* ParameterStore::values(const std::string& name) {
    return values_.data() + info(name).offset;
}

const double* ParameterStore::values(const std::string& name) const {
    return values_.data() + info(name).offset;
}

double* ParameterStore::grads(const std::string& name) {
    return grads_.data() + info(name).offset;
}

void ParameterStore::zero_grads() { std::fill(grads_.begin(), grads_.end(), 0.0); }

double ParameterStore::grad_norm(const std::vector<bool>& tensor_mask) const {
    if (tensor_mask.size() != tensors_.size()) {
        throw std::invalid_argument("tensor mask size mismatch");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        if (!tensor_mask[i]) continue;
        const double* g = grads_.data() + tensors_[i].offset;
        for (std::size_t k = 0; k < tensors_[i].size; ++k) sq += g[k] * g[k];
    }
    return std::sqrt(sq);
}

void ParameterStore::scale_grads(const std::vector<bool>& tensor_mask, double factor) {
    if (tensor_mask.size() != tensors_.size()) {
        throw std::invalid_argument("tensor mask size mismatch");
    }
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        if (!tensor_mask[i]) continue;
        double* g = grads_.data() + tensors_[i].offset;
        for (std::size_t k = 0; k < tensors_[i].size; ++k) g[k] *= factor;
    }
}

namespace {

constexpr char kStoreMagic[4] = {'X', 'L', 'S', 'P'};
constexpr std::uint32_t kStoreVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ParseError("checkpoint: truncated file");
    return v;
}

}  // namespace

void save_store(std::ostream& out, const ParameterStore& store) {
    out.write(kStoreMagic, 4);
    write_pod<std::uint32_t>(out, kStoreVersion);
    write_pod<std::uint64_t>(out, store.tensor_count());
    for (std::size_t i = 0; i < store.tensor_count(); ++i) {
        const TensorInfo& t = store.info(i);
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
        for (std::size_t d : t.shape) write_pod<std::uint64_t>(out, d);
    }
    out.write(reinterpret_cast<const char*>(store.values_flat()),
              static_cast<std::streamsize>(store.total_size() * sizeof(double)));
}

ParameterStore load_store(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kStoreMagic, 4) != 0) {
        throw ParseError("checkpoint: bad magic (not a parameter store)");
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kStoreVersion) {
        throw ParseError("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto count = read_pod<std::uint64_t>(in);
    ParameterStore store;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw ParseError("checkpoint: truncated tensor name");
        const auto rank = read_pod<std::uint32_t>(in);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
        store.add(name, std::move(shape));
    }
    in.read(reinterpret_cast<char*>(store.values_flat()),
            static_cast<std::streamsize>(store.total_size() * sizeof(double)));
    if (!in) throw ParseError("checkpoint: truncated tensor data");
    return store;
}

void ParameterStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    save_store(out, *this);
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

ParameterStore ParameterStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    return load_store(in);
}

void SgdOptimizer::step(ParameterStore& params, const std::vector<double>& tensor_lr) {
    if (tensor_lr.size() != params.tensor_count()) {
        throw std::invalid_argument("per-tensor learning rate list size mismatch");
    }
    if (velocity_.empty()) velocity_.assign(params.total_size(), 0.0);
    if (velocity_.size() != params.total_size()) {
        throw std::invalid_argument("optimizer bound to a different parameter store");
    }
    double* v = velocity_.data();
    double* w = params.values_flat();
    const double* g = params.grads_flat();
    for (std::size_t i = 0; i < params.tensor_count(); ++i) {
        const TensorInfo& t = params.info(i);
        const double lr = tensor_lr[i];
        if (lr == 0.0) continue;
        for (std::size_t k = t.offset; k < t.offset + t.size; ++k) {
            v[k] = momentum_ * v[k] - lr * g[k];
            w[k] += v[k];
        }
    }
}

}  // namespace xlstance
