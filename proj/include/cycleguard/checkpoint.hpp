#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "cycleguard/arch.hpp"
#include "cycleguard/error.hpp"
#include "cycleguard/model.hpp"

namespace cycleguard {

// Training metadata carried inside a checkpoint. epoch is the global epoch
// counter (continues across stages), so a resumed run keeps the same
// learning-rate schedule position.
struct CheckpointMeta {
    std::uint64_t epoch = 0;
    std::uint32_t stage = 1;
    std::uint64_t seed = 0;
    double lr = 0.0;
};

namespace detail {

// Checkpoint layout, all little-endian:
//   magic "CGCKPT01", u32 version, u32 source precision bits,
//   u64 architecture fingerprint, u32 descriptor length + descriptor text,
//   u64 epoch, u32 stage, u64 seed, f64 lr,
//   u32 layer count, then per layer:
//     u8 trainable, and for weights then bias: u32 rank, rank x i64 extents,
//     raw f64 values.
// Values are always stored as f64; loading into float narrows, saving from
// float widens losslessly, so f64 checkpoints round-trip byte-identically.
inline constexpr char kMagic[8] = {'C', 'G', 'C', 'K', 'P', 'T', '0', '1'};
inline constexpr std::uint32_t kVersion = 1;

class ByteWriter {
public:
    explicit ByteWriter(std::ostream& out) : out_(out) {}
    void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    template <class V>
    void pod(V v) {
        char buf[sizeof(V)];
        std::memcpy(buf, &v, sizeof(V));
        bytes(buf, sizeof(V));
    }

private:
    std::ostream& out_;
};

class ByteReader {
public:
    ByteReader(std::istream& in, const std::string& path) : in_(in), path_(path) {}
    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw IoError("checkpoint '" + path_ + "': truncated file");
    }
    template <class V>
    V pod() {
        char buf[sizeof(V)];
        bytes(buf, sizeof(V));
        V v;
        std::memcpy(&v, buf, sizeof(V));
        return v;
    }
    bool at_end() {
        in_.peek();
        return in_.eof();
    }

private:
    std::istream& in_;
    const std::string& path_;
};

template <class T>
void write_tensor(ByteWriter& w, const TensorT<T>& t) {
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (int a = 0; a < t.rank(); ++a) w.pod<std::int64_t>(t.dim(a));
    for (std::int64_t i = 0; i < t.size(); ++i) w.pod<double>(static_cast<double>(t[i]));
}

template <class T>
TensorT<T> read_tensor(ByteReader& r, const std::string& path) {
    const std::uint32_t rank = r.pod<std::uint32_t>();
    if (rank < 1 || rank > 4) throw IoError("checkpoint '" + path + "': bad tensor rank " + std::to_string(rank));
    Shape shape;
    shape.rank = static_cast<int>(rank);
    for (std::uint32_t a = 0; a < rank; ++a) {
        shape.extent[a] = r.pod<std::int64_t>();
        if (shape.extent[a] < 1) throw IoError("checkpoint '" + path + "': bad tensor extent");
    }
    TensorT<T> t(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(r.pod<double>());
    return t;
}

}  // namespace detail

template <class T>
void save_checkpoint(const AutoencoderT<T>& model, const CheckpointMeta& meta, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint '" + path + "': cannot open for writing");
    detail::ByteWriter w(out);
    w.bytes(detail::kMagic, sizeof(detail::kMagic));
    w.pod<std::uint32_t>(detail::kVersion);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(sizeof(T) * 8));
    const std::string desc = model.arch.describe();
    w.pod<std::uint64_t>(model.arch.fingerprint());
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(desc.size()));
    w.bytes(desc.data(), desc.size());
    w.pod<std::uint64_t>(meta.epoch);
    w.pod<std::uint32_t>(meta.stage);
    w.pod<std::uint64_t>(meta.seed);
    w.pod<double>(meta.lr);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(model.layers.size()));
    for (const LayerParamsT<T>& l : model.layers) {
        w.pod<std::uint8_t>(l.trainable ? 1 : 0);
        detail::write_tensor(w, l.weights);
        detail::write_tensor(w, l.bias);
    }
    out.flush();
    if (!out) throw IoError("checkpoint '" + path + "': write failed");
}

template <class T = double>
std::pair<AutoencoderT<T>, CheckpointMeta> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint '" + path + "': cannot open");
    detail::ByteReader r(in, path);

    char magic[sizeof(detail::kMagic)];
    r.bytes(magic, sizeof(magic));
    if (std::memcmp(magic, detail::kMagic, sizeof(magic)) != 0)
        throw IoError("checkpoint '" + path + "': bad magic, not a checkpoint file");
    const std::uint32_t version = r.pod<std::uint32_t>();
    if (version != detail::kVersion)
        throw IoError("checkpoint '" + path + "': version mismatch, file has " + std::to_string(version) +
                      ", reader supports " + std::to_string(detail::kVersion));
    (void)r.pod<std::uint32_t>();  // source precision, informational

    const std::uint64_t stored_fp = r.pod<std::uint64_t>();
    const std::uint32_t desc_len = r.pod<std::uint32_t>();
    std::string desc(desc_len, '\0');
    r.bytes(desc.data(), desc_len);
    if (detail::fnv1a64(desc) != stored_fp)
        throw IoError("checkpoint '" + path + "': fingerprint mismatch, descriptor does not hash to the stored value");

    AutoencoderT<T> model;
    model.arch = parse_descriptor(desc);
    if (model.arch.fingerprint() != stored_fp)
        throw IoError("checkpoint '" + path + "': fingerprint mismatch after descriptor parse");

    CheckpointMeta meta;
    meta.epoch = r.pod<std::uint64_t>();
    meta.stage = r.pod<std::uint32_t>();
    meta.seed = r.pod<std::uint64_t>();
    meta.lr = r.pod<double>();

    const std::uint32_t n_layers = r.pod<std::uint32_t>();
    if (n_layers != model.arch.encoder.size() + model.arch.decoder.size())
        throw IoError("checkpoint '" + path + "': layer count " + std::to_string(n_layers) +
                      " does not match the architecture");
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        LayerParamsT<T> l;
        l.trainable = r.pod<std::uint8_t>() != 0;
        l.weights = detail::read_tensor<T>(r, path);
        l.bias = detail::read_tensor<T>(r, path);
        model.layers.push_back(std::move(l));
    }
    if (!r.at_end()) throw IoError("checkpoint '" + path + "': trailing bytes after last layer");

    // Shape-check against the architecture before handing the model out.
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerSpec& spec = model.layer_spec(i);
        const Shape want = detail::weight_shape<T>(spec, model.layer_in_channels(i));
        if (!(model.layers[i].weights.shape() == want))
            throw IoError("checkpoint '" + path + "': layer " + std::to_string(i + 1) + " weights " +
                          model.layers[i].weights.shape().str() + " do not match the architecture");
        if (model.layers[i].bias.rank() != 1 || model.layers[i].bias.dim(0) != spec.conv.filters)
            throw IoError("checkpoint '" + path + "': layer " + std::to_string(i + 1) + " bias shape mismatch");
    }
    return {std::move(model), meta};
}

}  // namespace cycleguard
