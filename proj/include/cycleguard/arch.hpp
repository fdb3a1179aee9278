#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cycleguard/error.hpp"
#include "cycleguard/ops.hpp"

namespace cycleguard {

// One autoencoder layer. Encoder layers are strided convolutions; decoder
// layers are the matching transposed convolutions with declared output
// extents. relu=false only on the terminal reconstruction layer, which is
// linear so exact zeros stay reachable.
struct LayerSpec {
    ConvSpec conv;
    bool transposed = false;
    bool relu = true;
};

struct StandardOptions {
    // Divides every filter count (floor, min 1). 1 is the full network; 8 is
    // the desk-scale width used for fast verification runs.
    int width_divisor = 1;
    // Keeps the irregular published width 521 at encoder layer 6 instead of
    // the power-of-two 512 the mirror symmetry implies.
    bool literal_widths = false;
};

struct ArchitectureSpec {
    std::int64_t input_h = 128;
    std::int64_t input_w = 64;
    std::int64_t input_c = 1;
    std::vector<LayerSpec> encoder;
    std::vector<LayerSpec> decoder;

    static ArchitectureSpec standard(int stage, StandardOptions opt = {});

    int stage() const { return static_cast<int>(encoder.size()) / 2; }

    std::int64_t encoder_in_channels(std::size_t i) const {
        return i == 0 ? input_c : encoder[i - 1].conv.filters;
    }

    // Spatial extents entering each encoder layer; index encoder.size() is
    // the latent extent.
    std::vector<std::pair<std::int64_t, std::int64_t>> encoder_extents() const {
        std::vector<std::pair<std::int64_t, std::int64_t>> ext;
        std::int64_t h = input_h, w = input_w;
        for (const LayerSpec& l : encoder) {
            ext.emplace_back(h, w);
            const ConvGeometry g = conv_geometry(h, w, l.conv);
            h = g.out_h;
            w = g.out_w;
        }
        ext.emplace_back(h, w);
        return ext;
    }

    Shape latent_shape() const {
        const auto ext = encoder_extents();
        return Shape{ext.back().first, ext.back().second,
                     encoder.empty() ? input_c : encoder.back().conv.filters};
    }

    // Checks that the decoder's declared extents telescope back to the input
    // shape. standard() builds specs that pass by construction; this guards
    // hand-assembled ones.
    void validate() const;

    std::string describe() const;
    std::uint64_t fingerprint() const;
};

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace detail

inline ArchitectureSpec ArchitectureSpec::standard(int stage, StandardOptions opt) {
    if (stage < 1 || stage > 4) throw ConfigError("architecture stage must be in 1..4, got " + std::to_string(stage));
    if (opt.width_divisor < 1) throw ConfigError("width divisor must be >= 1");

    static constexpr int kFilters[8] = {64, 128, 256, 512, 1024, 512, 256, 128};
    static constexpr int kFiltersLiteral[8] = {64, 128, 256, 512, 1024, 521, 256, 128};
    struct Stride {
        int h, w;
    };
    static constexpr Stride kStrides[8] = {{2, 2}, {2, 2}, {2, 2}, {2, 2}, {2, 2}, {2, 1}, {1, 1}, {1, 1}};

    ArchitectureSpec a;
    const int depth = 2 * stage;
    for (int i = 0; i < depth; ++i) {
        LayerSpec l;
        const int base = opt.literal_widths ? kFiltersLiteral[i] : kFilters[i];
        l.conv.filters = std::max(1, base / opt.width_divisor);
        l.conv.kernel_h = l.conv.kernel_w = (i == 0 ? 7 : 3);
        l.conv.stride_h = kStrides[i].h;
        l.conv.stride_w = kStrides[i].w;
        l.conv.padding = Padding::kSame;
        a.encoder.push_back(l);
    }

    const auto ext = a.encoder_extents();
    for (int i = depth - 1; i >= 0; --i) {
        LayerSpec d;
        d.transposed = true;
        d.conv = a.encoder[static_cast<std::size_t>(i)].conv;
        d.conv.filters = static_cast<int>(a.encoder_in_channels(static_cast<std::size_t>(i)));
        d.conv.out_h = static_cast<int>(ext[static_cast<std::size_t>(i)].first);
        d.conv.out_w = static_cast<int>(ext[static_cast<std::size_t>(i)].second);
        d.relu = (i != 0);
        a.decoder.push_back(d);
    }
    a.validate();
    return a;
}

inline void ArchitectureSpec::validate() const {
    if (encoder.empty() || decoder.size() != encoder.size())
        throw ConfigError("architecture: encoder and decoder must be non-empty and equal depth");
    std::int64_t h = input_h, w = input_w;
    for (const LayerSpec& l : encoder) {
        if (l.transposed) throw ConfigError("architecture: encoder layers must not be transposed");
        const ConvGeometry g = conv_geometry(h, w, l.conv);
        h = g.out_h;
        w = g.out_w;
    }
    for (const LayerSpec& l : decoder) {
        if (!l.transposed) throw ConfigError("architecture: decoder layers must be transposed");
        std::int64_t oh = 0, ow = 0;
        transpose_geometry(h, w, l.conv, &oh, &ow);
        h = oh;
        w = ow;
    }
    if (h != input_h || w != input_w || decoder.back().conv.filters != input_c)
        throw ConfigError("architecture: decoder does not reproduce the input shape, reaches " +
                          std::to_string(h) + "x" + std::to_string(w) + "x" +
                          std::to_string(decoder.back().conv.filters));
}

inline std::string ArchitectureSpec::describe() const {
    std::string s = "fcn-autoencoder v1\n";
    s += "input " + std::to_string(input_h) + "x" + std::to_string(input_w) + "x" + std::to_string(input_c) + "\n";
    auto line = [&s](const char* tag, std::size_t idx, const LayerSpec& l) {
        const ConvSpec& c = l.conv;
        s += std::string(tag) + std::to_string(idx + 1) + (l.transposed ? " tconv " : " conv ") +
             std::to_string(c.kernel_h) + "x" + std::to_string(c.kernel_w) + " s" +
             std::to_string(c.stride_h) + "x" + std::to_string(c.stride_w) + " f" +
             std::to_string(c.filters);
        if (l.transposed) s += " out" + std::to_string(c.out_h) + "x" + std::to_string(c.out_w);
        s += l.relu ? " relu\n" : " linear\n";
    };
    for (std::size_t i = 0; i < encoder.size(); ++i) line("enc", i, encoder[i]);
    for (std::size_t i = 0; i < decoder.size(); ++i) line("dec", i, decoder[i]);
    return s;
}

inline std::uint64_t ArchitectureSpec::fingerprint() const { return detail::fnv1a64(describe()); }

// Inverse of describe(): rebuilds the spec from the stored text block.
// parse_descriptor(a.describe()) reproduces a exactly, which load paths
// verify via the fingerprint.
inline ArchitectureSpec parse_descriptor(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    auto fail = [](const std::string& what) -> void {
        throw DataError("architecture descriptor: " + what);
    };
    if (!std::getline(in, line) || line != "fcn-autoencoder v1") fail("unknown header '" + line + "'");

    auto parse_pair = [&fail](const std::string& tok, const char* what) {
        const std::size_t x = tok.find('x');
        if (x == std::string::npos) fail(std::string("malformed ") + what + " '" + tok + "'");
        return std::pair<int, int>{std::stoi(tok.substr(0, x)), std::stoi(tok.substr(x + 1))};
    };

    ArchitectureSpec a;
    if (!std::getline(in, line) || line.rfind("input ", 0) != 0) fail("missing input line");
    {
        const std::string dims = line.substr(6);
        const std::size_t x1 = dims.find('x');
        const std::size_t x2 = dims.rfind('x');
        if (x1 == std::string::npos || x2 == x1) fail("malformed input extents '" + dims + "'");
        a.input_h = std::stoll(dims.substr(0, x1));
        a.input_w = std::stoll(dims.substr(x1 + 1, x2 - x1 - 1));
        a.input_c = std::stoll(dims.substr(x2 + 1));
    }

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string name, kind, kernel, stride, filters, tail;
        ls >> name >> kind >> kernel >> stride >> filters >> tail;
        LayerSpec l;
        if (kind == "conv")
            l.transposed = false;
        else if (kind == "tconv")
            l.transposed = true;
        else
            fail("unknown layer kind '" + kind + "'");
        const auto [kh, kw] = parse_pair(kernel, "kernel");
        l.conv.kernel_h = kh;
        l.conv.kernel_w = kw;
        if (stride.empty() || stride[0] != 's') fail("malformed stride '" + stride + "'");
        const auto [sh, sw] = parse_pair(stride.substr(1), "stride");
        l.conv.stride_h = sh;
        l.conv.stride_w = sw;
        if (filters.empty() || filters[0] != 'f') fail("malformed filters '" + filters + "'");
        l.conv.filters = std::stoi(filters.substr(1));
        if (l.transposed) {
            if (tail.rfind("out", 0) != 0) fail("transposed layer missing out extents");
            const auto [oh, ow] = parse_pair(tail.substr(3), "out extents");
            l.conv.out_h = oh;
            l.conv.out_w = ow;
            ls >> tail;
        }
        if (tail == "relu")
            l.relu = true;
        else if (tail == "linear")
            l.relu = false;
        else
            fail("unknown activation '" + tail + "'");
        (l.transposed ? a.decoder : a.encoder).push_back(l);
    }
    a.validate();
    return a;
}

}  // namespace cycleguard
