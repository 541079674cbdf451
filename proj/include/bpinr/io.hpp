#pragma once

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpinr/network.hpp"
#include "bpinr/signal.hpp"
#include "bpinr/ternary.hpp"
#include "bpinr/training.hpp"

namespace bpinr {

namespace detail {

inline void put_u8(std::string& out, std::uint8_t v) { out.push_back(char(v)); }

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
public:
    ByteReader(const std::string& data, std::string what) : data_(data), what_(std::move(what)) {}

    std::uint8_t u8() { return std::uint8_t(take(1)[0]); }

    std::uint32_t u32() {
        const char* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(p[i])) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        const char* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(p[i])) << (8 * i);
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    const char* take(std::size_t n) {
        if (pos_ + n > data_.size()) throw std::runtime_error(what_ + ": truncated file");
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }

    std::size_t remaining() const { return data_.size() - pos_; }

private:
    const std::string& data_;
    std::string what_;
    std::size_t pos_ = 0;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(data.data(), std::streamsize(data.size()));
    if (!out) throw std::runtime_error("write failed for " + path);
}

} // namespace detail

// ---------------------------------------------------------------- Netpbm --

// Binary P5/P6 only; maxval 255 maps to 8 bits, 65535 to 16 bits with
// big-endian samples per the format convention. Header comments are dropped.
inline DigitalSignal read_netpbm(const std::string& path) {
    const std::string data = detail::slurp(path);
    std::size_t pos = 0;
    auto token = [&]() -> std::string {
        while (pos < data.size()) {
            if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else if (std::isspace(std::uint8_t(data[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
        std::size_t start = pos;
        while (pos < data.size() && !std::isspace(std::uint8_t(data[pos])) && data[pos] != '#') ++pos;
        if (start == pos) throw std::runtime_error(path + ": malformed netpbm header");
        return data.substr(start, pos - start);
    };

    const std::string magic = token();
    if (magic != "P5" && magic != "P6")
        throw std::runtime_error(path + ": unsupported netpbm magic '" + magic + "'");
    const int channels = magic == "P6" ? 3 : 1;
    long width, height, maxval;
    try {
        width = std::stol(token());
        height = std::stol(token());
        maxval = std::stol(token());
    } catch (const std::exception&) {
        throw std::runtime_error(path + ": malformed netpbm header");
    }
    if (width < 1 || height < 1) throw std::runtime_error(path + ": non-positive image extents");
    int bit_depth;
    if (maxval == 255)
        bit_depth = 8;
    else if (maxval == 65535)
        bit_depth = 16;
    else
        throw std::runtime_error(path + ": unsupported maxval " + std::to_string(maxval) +
                                 " (only 255 and 65535)");
    if (pos >= data.size() || !std::isspace(std::uint8_t(data[pos])))
        throw std::runtime_error(path + ": malformed netpbm header");
    ++pos; // single whitespace byte before the raster

    const std::size_t count = std::size_t(width) * std::size_t(height) * channels;
    const std::size_t bytes = count * (bit_depth == 16 ? 2 : 1);
    if (data.size() - pos < bytes) throw std::runtime_error(path + ": truncated pixel data");

    std::vector<std::uint32_t> samples(count);
    if (bit_depth == 8) {
        for (std::size_t i = 0; i < count; ++i) samples[i] = std::uint8_t(data[pos + i]);
    } else {
        for (std::size_t i = 0; i < count; ++i)
            samples[i] = (std::uint32_t(std::uint8_t(data[pos + 2 * i])) << 8) |
                         std::uint8_t(data[pos + 2 * i + 1]);
    }
    std::vector<std::size_t> shape{std::size_t(height), std::size_t(width)};
    if (channels == 3) shape.push_back(3);
    return DigitalSignal(std::move(shape), bit_depth, std::move(samples));
}

inline void write_netpbm(const DigitalSignal& signal, const std::string& path) {
    if (signal.bit_depth != 8 && signal.bit_depth != 16)
        throw std::runtime_error("netpbm supports 8- or 16-bit signals, got " +
                                 std::to_string(signal.bit_depth));
    std::size_t channels = 1;
    if (signal.shape.size() == 3)
        channels = signal.shape[2];
    else if (signal.shape.size() != 2)
        throw std::runtime_error("netpbm requires a (H,W) or (H,W,C) signal");
    if (channels != 1 && channels != 3)
        throw std::runtime_error("netpbm supports 1 or 3 channels, got " + std::to_string(channels));

    std::string out = channels == 3 ? "P6\n" : "P5\n";
    out += std::to_string(signal.shape[1]) + " " + std::to_string(signal.shape[0]) + "\n";
    out += std::to_string(max_level(signal.bit_depth)) + "\n";
    if (signal.bit_depth == 8) {
        for (std::uint32_t s : signal.samples) out.push_back(char(std::uint8_t(s)));
    } else {
        for (std::uint32_t s : signal.samples) {
            out.push_back(char(std::uint8_t(s >> 8)));
            out.push_back(char(std::uint8_t(s & 0xFF)));
        }
    }
    detail::spit(path, out);
}

// ------------------------------------------------------------------- WAV --

struct WavData {
    std::uint32_t sample_rate = 0;
    int format_tag = 0; // 1 = PCM16, 3 = IEEE float32
    std::vector<float> float_samples;
    std::vector<std::int16_t> pcm_samples;
};

// RIFF/WAVE with format tag 1 (16-bit PCM) or 3 (float32); multichannel
// files yield the first channel.
inline WavData read_wav(const std::string& path) {
    const std::string data = detail::slurp(path);
    detail::ByteReader r(data, path);
    if (std::memcmp(r.take(4), "RIFF", 4) != 0) throw std::runtime_error(path + ": not a RIFF file");
    r.u32(); // riff size
    if (std::memcmp(r.take(4), "WAVE", 4) != 0) throw std::runtime_error(path + ": not a WAVE file");

    WavData wav;
    int channels = 0, bits = 0;
    bool have_fmt = false, have_data = false;
    std::string payload;
    while (r.remaining() >= 8) {
        char id[4];
        std::memcpy(id, r.take(4), 4);
        const std::uint32_t size = r.u32();
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16) throw std::runtime_error(path + ": fmt chunk too small");
            const char* p = r.take(size);
            wav.format_tag = std::uint8_t(p[0]) | (std::uint8_t(p[1]) << 8);
            channels = std::uint8_t(p[2]) | (std::uint8_t(p[3]) << 8);
            std::uint32_t rate = 0;
            for (int i = 0; i < 4; ++i) rate |= std::uint32_t(std::uint8_t(p[4 + i])) << (8 * i);
            wav.sample_rate = rate;
            bits = std::uint8_t(p[14]) | (std::uint8_t(p[15]) << 8);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            payload.assign(r.take(size), size);
            have_data = true;
        } else {
            r.take(size);
        }
        if (size % 2 == 1 && r.remaining() > 0) r.take(1); // chunk padding
    }
    if (!have_fmt || !have_data) throw std::runtime_error(path + ": missing fmt or data chunk");
    if (channels < 1) throw std::runtime_error(path + ": no channels");

    if (wav.format_tag == 1) {
        if (bits != 16)
            throw std::runtime_error(path + ": PCM bits per sample " + std::to_string(bits) +
                                     " unsupported (16 only)");
        const std::size_t frames = payload.size() / (2 * std::size_t(channels));
        wav.pcm_samples.resize(frames);
        for (std::size_t i = 0; i < frames; ++i) {
            const std::size_t off = i * 2 * channels;
            const std::uint16_t raw =
                std::uint16_t(std::uint8_t(payload[off])) | (std::uint16_t(std::uint8_t(payload[off + 1])) << 8);
            wav.pcm_samples[i] = std::bit_cast<std::int16_t>(raw);
        }
    } else if (wav.format_tag == 3) {
        if (bits != 32)
            throw std::runtime_error(path + ": float bits per sample " + std::to_string(bits) +
                                     " unsupported (32 only)");
        const std::size_t frames = payload.size() / (4 * std::size_t(channels));
        wav.float_samples.resize(frames);
        for (std::size_t i = 0; i < frames; ++i) {
            const std::size_t off = i * 4 * std::size_t(channels);
            std::uint32_t raw = 0;
            for (int b = 0; b < 4; ++b) raw |= std::uint32_t(std::uint8_t(payload[off + b])) << (8 * b);
            wav.float_samples[i] = std::bit_cast<float>(raw);
        }
    } else {
        throw std::runtime_error(path + ": unsupported format tag " + std::to_string(wav.format_tag));
    }
    return wav;
}

namespace detail {

inline std::string wav_container(int format_tag, int bytes_per_sample, std::uint32_t rate,
                                 const std::string& payload) {
    std::string out;
    out += "RIFF";
    put_u32(out, std::uint32_t(36 + payload.size()));
    out += "WAVEfmt ";
    put_u32(out, 16);
    put_u8(out, std::uint8_t(format_tag));
    put_u8(out, 0);
    put_u8(out, 1); // mono
    put_u8(out, 0);
    put_u32(out, rate);
    put_u32(out, rate * bytes_per_sample);
    put_u8(out, std::uint8_t(bytes_per_sample));
    put_u8(out, 0);
    put_u8(out, std::uint8_t(bytes_per_sample * 8));
    put_u8(out, 0);
    out += "data";
    put_u32(out, std::uint32_t(payload.size()));
    out += payload;
    return out;
}

} // namespace detail

inline void write_wav_float32(const std::vector<float>& samples, std::uint32_t rate,
                              const std::string& path) {
    std::string payload;
    for (float s : samples) detail::put_f32(payload, s);
    detail::spit(path, detail::wav_container(3, 4, rate, payload));
}

inline void write_wav_pcm16(const std::vector<std::int16_t>& samples, std::uint32_t rate,
                            const std::string& path) {
    std::string payload;
    for (std::int16_t s : samples) {
        const std::uint16_t raw = std::bit_cast<std::uint16_t>(s);
        payload.push_back(char(raw & 0xFF));
        payload.push_back(char(raw >> 8));
    }
    detail::spit(path, detail::wav_container(1, 2, rate, payload));
}

// Offset-binary lift of PCM16 for fixed-precision fitting: -32768 -> 0.
inline DigitalSignal pcm16_to_signal(const std::vector<std::int16_t>& samples) {
    std::vector<std::uint32_t> lifted(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        lifted[i] = std::uint32_t(int(samples[i]) + 32768);
    return DigitalSignal({samples.size()}, 16, std::move(lifted));
}

inline std::vector<std::int16_t> signal_to_pcm16(const DigitalSignal& signal) {
    if (signal.bit_depth != 16) throw std::runtime_error("PCM16 export requires a 16-bit signal");
    std::vector<std::int16_t> out(signal.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::int16_t(int(signal.samples[i]) - 32768);
    return out;
}

// ------------------------------------------------------------ model file --

inline constexpr char kModelMagic[6] = {'B', 'P', 'I', 'N', 'R', '1'};
inline constexpr std::uint8_t kModelVersion = 1;

struct ModelMeta {
    Loss loss = Loss::Bce;
    int plane_count = 1;      // m
    int bit_coord_depth = 1;  // n_map
    bool ternary = false;
    bool bias_detached = false;
};

namespace detail {

inline std::uint8_t activation_code(Activation a) { return std::uint8_t(a); }

inline Activation activation_from_code(std::uint8_t c) {
    if (c > std::uint8_t(Activation::Relu)) throw std::runtime_error("model file: bad activation code");
    return Activation(c);
}

template <typename T>
void model_header(std::string& out, const ActivationKind& act, int input_dim,
                  const std::vector<std::pair<int, int>>& shapes, const std::vector<bool>& has_bias,
                  std::uint64_t seed, const ModelMeta& meta) {
    out.append(kModelMagic, sizeof kModelMagic);
    put_u8(out, kModelVersion);
    put_u8(out, sizeof(T) == 4 ? 0 : 1);
    put_u8(out, activation_code(act.kind));
    put_f64(out, act.kind == Activation::Gauss ? act.gauss_scale : act.omega0);
    put_u32(out, std::uint32_t(act.num_frequencies));
    put_u32(out, std::uint32_t(input_dim));
    put_u32(out, std::uint32_t(shapes.size()));
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        put_u32(out, std::uint32_t(shapes[l].first));
        put_u32(out, std::uint32_t(shapes[l].second));
        put_u8(out, has_bias[l] ? 1 : 0);
    }
    put_u64(out, seed);
    put_u8(out, std::uint8_t(meta.loss));
    put_u32(out, std::uint32_t(meta.plane_count));
    put_u32(out, std::uint32_t(meta.bit_coord_depth));
    put_u8(out, std::uint8_t((meta.ternary ? 1 : 0) | (meta.bias_detached ? 2 : 0)));
}

struct ParsedHeader {
    int precision = 0;
    ActivationKind activation;
    int input_dim = 0;
    std::vector<std::pair<int, int>> shapes;
    std::vector<bool> has_bias;
    std::uint64_t seed = 0;
    ModelMeta meta;
};

inline ParsedHeader parse_header(ByteReader& r, const std::string& path) {
    char magic[6];
    std::memcpy(magic, r.take(6), 6);
    if (std::memcmp(magic, kModelMagic, 6) != 0) throw std::runtime_error(path + ": bad model magic");
    const std::uint8_t version = r.u8();
    if (version != kModelVersion)
        throw std::runtime_error(path + ": unsupported model version " + std::to_string(version));
    ParsedHeader h;
    h.precision = r.u8();
    if (h.precision > 1) throw std::runtime_error(path + ": bad precision byte");
    const Activation kind = activation_from_code(r.u8());
    const double param = r.f64();
    const int freqs = int(r.u32());
    switch (kind) {
        case Activation::Sine: h.activation = ActivationKind::sine(param); break;
        case Activation::ReluPosEnc: h.activation = ActivationKind::relu_pos_enc(freqs); break;
        case Activation::Gauss: h.activation = ActivationKind::gauss(param); break;
        case Activation::Gelu: h.activation = ActivationKind::gelu(); break;
        case Activation::Tanh: h.activation = ActivationKind::tanh(); break;
        case Activation::Relu: h.activation = ActivationKind::relu(); break;
    }
    h.activation.num_frequencies = freqs;
    h.input_dim = int(r.u32());
    const std::uint32_t n_layers = r.u32();
    if (n_layers == 0 || n_layers > 1024) throw std::runtime_error(path + ": implausible layer count");
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        const int d_out = int(r.u32());
        const int d_in = int(r.u32());
        if (d_out < 1 || d_in < 1) throw std::runtime_error(path + ": bad layer shape");
        h.shapes.emplace_back(d_out, d_in);
        h.has_bias.push_back(r.u8() != 0);
    }
    h.seed = r.u64();
    const std::uint8_t loss = r.u8();
    if (loss > 2) throw std::runtime_error(path + ": bad loss code");
    h.meta.loss = Loss(loss);
    h.meta.plane_count = int(r.u32());
    h.meta.bit_coord_depth = int(r.u32());
    const std::uint8_t flags = r.u8();
    h.meta.ternary = flags & 1;
    h.meta.bias_detached = flags & 2;
    return h;
}

} // namespace detail

template <typename T>
void save_model(const Mlp<T>& net, const ModelMeta& meta, const std::string& path) {
    std::vector<std::pair<int, int>> shapes;
    std::vector<bool> has_bias;
    for (const auto& l : net.layers) {
        shapes.emplace_back(int(l.weight.rows()), int(l.weight.cols()));
        has_bias.push_back(l.has_bias);
    }
    std::string out;
    detail::model_header<T>(out, net.activation, net.input_dim, shapes, has_bias, net.seed, meta);
    for (const auto& l : net.layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
                if constexpr (sizeof(T) == 4)
                    detail::put_f32(out, float(l.weight(r, c)));
                else
                    detail::put_f64(out, double(l.weight(r, c)));
            }
        if (l.has_bias)
            for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
                if constexpr (sizeof(T) == 4)
                    detail::put_f32(out, float(l.bias(r)));
                else
                    detail::put_f64(out, double(l.bias(r)));
            }
    }
    detail::spit(path, out);
}

struct LoadedModel {
    std::optional<Mlp<float>> f32;
    std::optional<Mlp<double>> f64;
    ModelMeta meta;
};

inline LoadedModel load_model(const std::string& path) {
    const std::string data = detail::slurp(path);
    detail::ByteReader r(data, path);
    detail::ParsedHeader h = detail::parse_header(r, path);
    if (h.meta.ternary) throw std::runtime_error(path + ": ternary payload, use load_ternary_model");

    auto build = [&](auto scalar_tag) {
        using T = decltype(scalar_tag);
        Mlp<T> net;
        net.activation = h.activation;
        net.input_dim = h.input_dim;
        net.seed = h.seed;
        for (std::size_t l = 0; l < h.shapes.size(); ++l) {
            typename Mlp<T>::Layer layer;
            layer.weight.resize(h.shapes[l].first, h.shapes[l].second);
            layer.has_bias = h.has_bias[l];
            for (Eigen::Index rr = 0; rr < layer.weight.rows(); ++rr)
                for (Eigen::Index cc = 0; cc < layer.weight.cols(); ++cc)
                    layer.weight(rr, cc) = sizeof(T) == 4 ? T(r.f32()) : T(r.f64());
            layer.bias = Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(h.shapes[l].first);
            if (layer.has_bias)
                for (Eigen::Index rr = 0; rr < layer.bias.size(); ++rr)
                    layer.bias(rr) = sizeof(T) == 4 ? T(r.f32()) : T(r.f64());
            net.layers.push_back(std::move(layer));
        }
        // dimension chain check against the header
        const int e0 = encoded_dim(net.activation, net.input_dim);
        if (int(net.layers.front().weight.cols()) != e0)
            throw std::runtime_error(path + ": first layer width does not match input dim");
        for (std::size_t l = 0; l + 1 < net.layers.size(); ++l)
            if (net.layers[l].weight.rows() != net.layers[l + 1].weight.cols())
                throw std::runtime_error(path + ": layer dimensions do not chain");
        return net;
    };

    LoadedModel out;
    out.meta = h.meta;
    if (h.precision == 0)
        out.f32 = build(float{});
    else
        out.f64 = build(double{});
    if (r.remaining() != 0) throw std::runtime_error(path + ": trailing bytes after payload");
    return out;
}

// Ternary export: one global 2-bit code stream over all layers' weights
// (codes 0,1,2 for -1,0,1, four per byte), then one float32 beta per layer.
inline void save_ternary_model(const TernaryMlp<float>& net, const ModelMeta& meta_in,
                               const std::string& path) {
    ModelMeta meta = meta_in;
    meta.ternary = true;
    meta.bias_detached = true;
    std::vector<std::pair<int, int>> shapes;
    std::vector<bool> has_bias;
    for (const auto& l : net.layers) {
        shapes.emplace_back(int(l.shadow.rows()), int(l.shadow.cols()));
        has_bias.push_back(false);
    }
    std::string out;
    detail::model_header<float>(out, net.activation, net.input_dim, shapes, has_bias, net.seed, meta);

    std::size_t total = 0;
    for (const auto& l : net.layers) total += std::size_t(l.quantized.size());
    std::string packed((total + 3) / 4, '\0');
    std::size_t idx = 0;
    for (const auto& l : net.layers)
        for (Eigen::Index r = 0; r < l.quantized.rows(); ++r)
            for (Eigen::Index c = 0; c < l.quantized.cols(); ++c) {
                const std::uint8_t code = std::uint8_t(l.quantized(r, c) + 1);
                packed[idx / 4] = char(std::uint8_t(packed[idx / 4]) | (code << (2 * (idx % 4))));
                ++idx;
            }
    out += packed;
    for (const auto& l : net.layers) detail::put_f32(out, l.beta);
    detail::spit(path, out);
}

inline TernaryMlp<float> load_ternary_model(const std::string& path, ModelMeta* meta_out = nullptr) {
    const std::string data = detail::slurp(path);
    detail::ByteReader r(data, path);
    detail::ParsedHeader h = detail::parse_header(r, path);
    if (!h.meta.ternary) throw std::runtime_error(path + ": not a ternary payload");

    TernaryMlp<float> net;
    net.activation = h.activation;
    net.input_dim = h.input_dim;
    net.seed = h.seed;
    std::size_t total = 0;
    for (const auto& s : h.shapes) total += std::size_t(s.first) * s.second;
    const char* packed = r.take((total + 3) / 4);
    std::size_t idx = 0;
    for (const auto& s : h.shapes) {
        TernaryLayer<float> layer;
        layer.quantized.resize(s.first, s.second);
        for (Eigen::Index rr = 0; rr < s.first; ++rr)
            for (Eigen::Index cc = 0; cc < s.second; ++cc) {
                const std::uint8_t code = (std::uint8_t(packed[idx / 4]) >> (2 * (idx % 4))) & 3;
                if (code > 2) throw std::runtime_error(path + ": bad ternary code");
                layer.quantized(rr, cc) = std::int8_t(int(code) - 1);
                ++idx;
            }
        net.layers.push_back(std::move(layer));
    }
    net.frozen = true;
    for (auto& l : net.layers) {
        l.beta = r.f32();
        l.shadow = l.quantized.cast<float>() * l.beta; // dequantized view
    }
    if (r.remaining() != 0) throw std::runtime_error(path + ": trailing bytes after payload");
    if (meta_out) *meta_out = h.meta;
    return net;
}

// --------------------------------------------------------------- reports --

// One row per checkpoint: iteration, loss, ber, psnr, ber_plane_0..m-1.
// Numbers carry full round-trip precision; infinite PSNR prints as "inf".
inline void write_train_report_csv(const TrainReport& report, const std::string& path) {
    std::string out = "iteration,loss,ber,psnr";
    for (int i = 0; i < report.plane_count; ++i) out += ",ber_plane_" + std::to_string(i);
    out += "\n";
    char buf[64];
    auto num = [&](double v) -> std::string {
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    };
    for (const auto& rec : report.checkpoints) {
        out += std::to_string(rec.iteration);
        out += "," + num(rec.loss) + "," + num(rec.ber) + "," + num(rec.psnr);
        for (double v : rec.per_plane_ber) out += "," + num(v);
        out += "\n";
    }
    detail::spit(path, out);
}

inline TrainReport read_train_report_csv(const std::string& path) {
    const std::string data = detail::slurp(path);
    std::istringstream in(data);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty csv");
    int planes = 0;
    for (std::size_t p = line.find("ber_plane_"); p != std::string::npos;
         p = line.find("ber_plane_", p + 1))
        ++planes;
    TrainReport report;
    report.plane_count = planes;
    auto parse_num = [](const std::string& s) {
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        return std::stod(s);
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        CheckpointRecord rec;
        std::getline(row, cell, ',');
        rec.iteration = std::stol(cell);
        std::getline(row, cell, ',');
        rec.loss = parse_num(cell);
        std::getline(row, cell, ',');
        rec.ber = parse_num(cell);
        std::getline(row, cell, ',');
        rec.psnr = parse_num(cell);
        while (std::getline(row, cell, ',')) rec.per_plane_ber.push_back(parse_num(cell));
        report.checkpoints.push_back(std::move(rec));
    }
    return report;
}

} // namespace bpinr
