// Command-line front end: every experiment and utility behind subcommands,
// file outputs under --out, exit codes consumable by scripts (0 ok, 2 usage,
// 3 when --require-lossless is set and the fit ended short of lossless).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bpinr/applications.hpp"
#include "bpinr/bounds.hpp"
#include "bpinr/io.hpp"
#include "bpinr/metrics.hpp"
#include "bpinr/signal.hpp"
#include "bpinr/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bpinr;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNotLossless = 3;

int default_threads() {
    if (const char* env = std::getenv("BPINR_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? int(hw) : 1;
}

struct NetFlags {
    std::string act = "sine";
    double w0 = 30.0;
    int pe_freqs = 10;
    double gauss_scale = 10.0;
    int width = 512; // paper-scale defaults
    int depth = 5;
    std::string preset;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--act", act, "activation: sine|relu-pe|gauss|gelu|tanh|relu")
            ->check(CLI::IsMember({"sine", "relu-pe", "gauss", "gelu", "tanh", "relu"}));
        cmd->add_option("--w0", w0, "sine frequency omega0");
        cmd->add_option("--pe-freqs", pe_freqs, "positional encoding octaves");
        cmd->add_option("--gauss-scale", gauss_scale, "gauss activation scale");
        cmd->add_option("--width", width, "hidden width");
        cmd->add_option("--depth", depth, "hidden layer count");
        cmd->add_option("--preset", preset, "desk (width 128, depth 3) or paper (width 512, depth 5)")
            ->check(CLI::IsMember({"desk", "paper"}));
    }

    NetSpec resolve() const {
        NetSpec spec;
        spec.width = width;
        spec.depth = depth;
        if (preset == "desk") {
            spec.width = 128;
            spec.depth = 3;
        } else if (preset == "paper") {
            spec.width = 512;
            spec.depth = 5;
        }
        if (act == "sine")
            spec.activation = ActivationKind::sine(w0);
        else if (act == "relu-pe")
            spec.activation = ActivationKind::relu_pos_enc(pe_freqs);
        else if (act == "gauss")
            spec.activation = ActivationKind::gauss(gauss_scale);
        else if (act == "gelu")
            spec.activation = ActivationKind::gelu();
        else if (act == "tanh")
            spec.activation = ActivationKind::tanh();
        else
            spec.activation = ActivationKind::relu();
        return spec;
    }
};

struct TrainFlags {
    std::string loss = "bce";
    double lr = 1e-4;
    int iters = 20000;
    int check_interval = 50;
    int batch = 0;
    std::uint64_t seed = 0;
    double decay_factor = 0.0;
    int decay_steps = 0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--loss", loss, "loss: bce|mse|mae")
            ->check(CLI::IsMember({"bce", "mse", "mae"}));
        cmd->add_option("--lr", lr, "learning rate");
        cmd->add_option("--iters", iters, "iteration cap");
        cmd->add_option("--check-interval", check_interval, "iterations between lossless checks");
        cmd->add_option("--batch", batch, "mini-batch size (0 = full batch)");
        cmd->add_option("--seed", seed, "training seed");
        cmd->add_option("--decay-factor", decay_factor, "lr decay factor (0 disables)");
        cmd->add_option("--decay-steps", decay_steps, "apply lr decay every N steps");
    }

    TrainConfig resolve() const {
        TrainConfig cfg;
        cfg.loss = loss == "bce" ? Loss::Bce : (loss == "mse" ? Loss::Mse : Loss::Mae);
        cfg.learning_rate = lr;
        cfg.max_iterations = iters;
        cfg.check_interval = check_interval;
        cfg.batch_size = batch;
        cfg.seed = seed;
        if (decay_factor > 0.0 && decay_steps > 0) cfg.lr_decay = DecaySchedule{decay_factor, decay_steps};
        return cfg;
    }
};

void echo_config(const std::string& cmd, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::cout << "[" << cmd << "] resolved config:";
    for (const auto& [k, v] : kv) std::cout << " " << k << "=" << v;
    std::cout << "\n";
}

void echo_net_and_train(const std::string& cmd, const NetSpec& spec, const TrainConfig& cfg,
                        std::vector<std::pair<std::string, std::string>> extra = {}) {
    std::vector<std::pair<std::string, std::string>> kv{
        {"act", spec.activation.name()},
        {"width", std::to_string(spec.width)},
        {"depth", std::to_string(spec.depth)},
        {"loss", loss_name(cfg.loss)},
        {"lr", std::to_string(cfg.learning_rate)},
        {"iters", std::to_string(cfg.max_iterations)},
        {"check_interval", std::to_string(cfg.check_interval)},
        {"batch", cfg.batch_size > 0 ? std::to_string(cfg.batch_size) : std::string("full")},
        {"seed", std::to_string(cfg.seed)},
    };
    kv.insert(kv.end(), extra.begin(), extra.end());
    echo_config(cmd, kv);
}

std::string image_name(const DigitalSignal& sig, const std::string& stem) {
    const bool color = sig.shape.size() == 3 && sig.shape[2] == 3;
    return stem + (color ? ".ppm" : ".pgm");
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
}

json report_json(const TrainReport& report) {
    json j;
    j["iterations_cap"] = report.config.max_iterations;
    j["lossless"] = report.iteration_at_lossless.has_value();
    if (report.iteration_at_lossless) j["iteration_at_lossless"] = *report.iteration_at_lossless;
    j["wall_seconds"] = report.wall_seconds;
    if (!report.checkpoints.empty()) {
        j["final_ber"] = report.checkpoints.back().ber;
        j["final_loss"] = report.checkpoints.back().loss;
    }
    return j;
}

// ------------------------------------------------------------------- fit --

int run_fit(const std::string& input, int k, const NetFlags& nf, const TrainFlags& tf, bool f64,
            bool require_lossless, const std::string& out_dir) {
    const DigitalSignal img = read_netpbm(input);
    const NetSpec spec = nf.resolve();
    TrainConfig cfg = tf.resolve();
    const int m = img.bit_depth / k;
    echo_net_and_train("fit", spec, cfg,
                       {{"input", input},
                        {"k", std::to_string(k)},
                        {"planes", std::to_string(m)},
                        {"precision", f64 ? "f64" : "f32"}});

    const std::size_t channels = img.shape.size() >= 3 ? img.shape.back() : 1;
    const int spatial = int(img.shape.size()) - (channels > 1 ? 1 : 0);
    const int input_dim = spatial + (m > 1 ? 1 : 0);

    fs::create_directories(out_dir);
    TrainReport report;
    VerifyResult result;
    ModelMeta meta{cfg.loss, m, m, false, false};
    if (f64) {
        auto net = init_mlp<double>(input_dim, spec.width, spec.depth, int(channels), spec.activation,
                                    derive_seed(cfg.seed, 0x666974ULL));
        report = fit(img, k, net, cfg);
        result = verify_lossless(net, img, k, cfg.loss);
        save_model(net, meta, (fs::path(out_dir) / "model.bpinr").string());
    } else {
        auto net = init_mlp<float>(input_dim, spec.width, spec.depth, int(channels), spec.activation,
                                   derive_seed(cfg.seed, 0x666974ULL));
        report = fit(img, k, net, cfg);
        result = verify_lossless(net, img, k, cfg.loss);
        save_model(net, meta, (fs::path(out_dir) / "model.bpinr").string());
    }
    write_train_report_csv(report, (fs::path(out_dir) / "report.csv").string());
    write_netpbm(result.reconstructed, (fs::path(out_dir) / image_name(img, "reconstructed")).string());

    json j = report_json(report);
    j["ber"] = result.ber;
    j["psnr"] = std::isinf(psnr(result.reconstructed, img)) ? json("inf")
                                                            : json(psnr(result.reconstructed, img));
    write_json(j, fs::path(out_dir) / "summary.json");

    std::cout << (result.lossless ? "lossless" : "not lossless") << " after "
              << report.checkpoints.back().iteration << " iterations (ber " << result.ber << ")\n";
    if (require_lossless && !result.lossless) return kExitNotLossless;
    return 0;
}

// ------------------------------------------------- decompose / recompose --

int run_decompose(const std::string& input, int k, const std::string& out_dir) {
    const DigitalSignal img = read_netpbm(input);
    const QuantizedStack stack = decompose(img, k);
    echo_config("decompose", {{"input", input},
                              {"k", std::to_string(k)},
                              {"planes", std::to_string(stack.plane_count())},
                              {"out", out_dir}});
    fs::create_directories(out_dir);
    json manifest;
    manifest["format"] = "bpinr-planes";
    manifest["bit_depth"] = img.bit_depth;
    manifest["plane_bits"] = k;
    manifest["shape"] = img.shape;
    std::vector<std::string> files;
    const int plane_depth = k <= 8 ? 8 : 16;
    for (int i = 0; i < stack.plane_count(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "plane_%03d", i);
        DigitalSignal plane(img.shape, plane_depth, std::vector<std::uint32_t>(stack.planes[i]));
        const std::string file = image_name(plane, name);
        write_netpbm(plane, (fs::path(out_dir) / file).string());
        files.push_back(file);
    }
    manifest["files"] = files;
    write_json(manifest, fs::path(out_dir) / "planes.json");
    return 0;
}

int run_recompose(const std::string& in_dir, const std::string& out_path) {
    std::ifstream mf(fs::path(in_dir) / "planes.json");
    if (!mf) throw std::runtime_error("missing manifest " + in_dir + "/planes.json");
    json manifest = json::parse(mf);
    if (manifest.value("format", "") != "bpinr-planes")
        throw std::runtime_error("not a bpinr plane directory: " + in_dir);
    QuantizedStack stack;
    stack.source_bit_depth = manifest.at("bit_depth").get<int>();
    stack.plane_bits = manifest.at("plane_bits").get<int>();
    stack.shape = manifest.at("shape").get<std::vector<std::size_t>>();
    for (const auto& file : manifest.at("files")) {
        DigitalSignal plane = read_netpbm((fs::path(in_dir) / file.get<std::string>()).string());
        stack.planes.push_back(plane.samples);
    }
    echo_config("recompose", {{"in", in_dir},
                              {"planes", std::to_string(stack.plane_count())},
                              {"out", out_path}});
    write_netpbm(recompose(stack), out_path);
    return 0;
}

// ----------------------------------------------------------------- bound --

int run_bound(int dim, std::vector<int> bits, double lipschitz, std::vector<double> domain) {
    if (bits.empty()) bits = {1, 2, 4, 8, 16};
    echo_config("bound", {{"dim", std::to_string(dim)},
                          {"lipschitz", std::to_string(lipschitz)},
                          {"domain", "[" + std::to_string(domain[0]) + "," + std::to_string(domain[1]) + "]"}});
    std::printf("%4s  %-28s %-10s %-14s %s\n", "n", "relative factor (exact)", "(3 s.f.)",
                "coefficient", "absolute bound");
    for (int n : bits) {
        BoundQuery q{dim, n, lipschitz, domain[0], domain[1]};
        const UpperBound ub = upper_bound(q);
        std::printf("%4d  %-28s %-10s %-14.6g ", n, ub.relative_factor.to_string().c_str(),
                    format_3sig(ub.relative_factor).c_str(), ub.coeff);
        if (ub.absolute_overflow)
            std::printf("overflow (exceeds double range)\n");
        else
            std::printf("%.6g\n", ub.absolute);
    }
    // informative theorem companions, not verified structurally
    for (int n : bits) {
        BoundQuery q{dim, n, lipschitz, domain[0], domain[1]};
        const double eps = epsilon(n);
        std::printf("  n=%-3d layer-count bound %.1f, first-layer channel bound %.4g\n", n,
                    layer_count_bound(q, eps), channel_bound(q, eps, 0));
    }
    return 0;
}

// --------------------------------------------------------------- bitbias --

int run_bitbias(const std::string& input, const NetFlags& nf, const TrainFlags& tf,
                const std::string& out_dir) {
    const DigitalSignal img = read_netpbm(input);
    const NetSpec spec = nf.resolve();
    TrainConfig cfg = tf.resolve();
    echo_net_and_train("bitbias", spec, cfg, {{"input", input}, {"k", std::to_string(img.bit_depth)}});

    // baseline: non-decomposed regression fit (no bit axis)
    const std::size_t channels = img.shape.size() >= 3 ? img.shape.back() : 1;
    const int spatial = int(img.shape.size()) - (channels > 1 ? 1 : 0);
    auto net = init_mlp<float>(spatial, spec.width, spec.depth, int(channels), spec.activation,
                               derive_seed(cfg.seed, 0x626961ULL));
    TrainReport report = fit(img, img.bit_depth, net, cfg);
    BiasProfile profile = bias_profile(report);

    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "bitbias.csv");
    csv << "iteration,lsb_correlation";
    for (int i = 0; i < img.bit_depth; ++i) csv << ",ber_plane_" << i;
    csv << "\n";
    for (std::size_t c = 0; c < profile.iterations.size(); ++c) {
        csv << profile.iterations[c] << ",";
        if (profile.lsb_correlation[c])
            csv << *profile.lsb_correlation[c];
        else
            csv << "nan";
        for (double v : profile.ber[c]) csv << "," << v;
        csv << "\n";
    }
    write_train_report_csv(report, (fs::path(out_dir) / "report.csv").string());

    json j = report_json(report);
    json corr = json::array();
    for (const auto& c : profile.lsb_correlation)
        corr.push_back(c ? json(*c) : json());
    j["lsb_correlation"] = corr;
    write_json(j, fs::path(out_dir) / "summary.json");
    std::cout << "profiled " << profile.iterations.size() << " checkpoints over " << img.bit_depth
              << " bit-planes\n";
    return 0;
}

// ----------------------------------------------------------------- sweep --

int run_sweep(const std::string& input, std::vector<int> ks, int seeds, const NetFlags& nf,
              const TrainFlags& tf, const std::string& mode, int threads, const std::string& out_dir) {
    const DigitalSignal img = read_netpbm(input);
    const NetSpec spec = nf.resolve();
    TrainConfig cfg = tf.resolve();
    std::string ks_text;
    for (int k : ks) ks_text += (ks_text.empty() ? "" : ",") + std::to_string(k);
    echo_net_and_train("sweep", spec, cfg,
                       {{"input", input}, {"ks", ks_text}, {"seeds", std::to_string(seeds)},
                        {"mode", mode}, {"threads", std::to_string(threads)}});

    std::vector<std::uint64_t> seed_list;
    for (int s = 0; s < seeds; ++s) seed_list.push_back(cfg.seed + std::uint64_t(s));
    const SweepMode sweep_mode =
        mode == "parallel" ? SweepMode::ParallelPerPlane : SweepMode::BitAxis;
    SweepResult result = hypothesis_sweep(img, ks, spec, cfg, seed_list, sweep_mode, threads);

    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "sweep.csv");
    csv << "k,epsilon,bound_factor,seed,iterations\n";
    json records = json::array();
    for (const auto& rec : result.records) {
        json jr;
        jr["k"] = rec.k;
        jr["epsilon"] = rec.epsilon_k;
        jr["bound_factor"] = rec.bound_factor.to_string();
        jr["median_iterations"] =
            std::isinf(rec.median_iterations) ? json("capped") : json(rec.median_iterations);
        json iters = json::array();
        for (std::size_t s = 0; s < rec.iterations.size(); ++s) {
            csv << rec.k << "," << rec.epsilon_k << "," << rec.bound_factor.to_string() << ","
                << seed_list[s] << ",";
            if (rec.iterations[s]) {
                csv << *rec.iterations[s];
                iters.push_back(*rec.iterations[s]);
            } else {
                csv << "capped";
                iters.push_back(json());
            }
            csv << "\n";
        }
        jr["iterations"] = iters;
        records.push_back(jr);
        std::cout << "k=" << rec.k << " median iterations: ";
        if (std::isinf(rec.median_iterations))
            std::cout << "capped";
        else
            std::cout << rec.median_iterations;
        std::cout << " (bound factor " << format_3sig(rec.bound_factor) << ")\n";
    }
    json j;
    j["records"] = records;
    j["ordering_nondecreasing"] = result.ordering_nondecreasing;
    write_json(j, fs::path(out_dir) / "sweep.json");
    std::cout << "ordering nondecreasing in k: " << (result.ordering_nondecreasing ? "yes" : "no")
              << "\n";
    return 0;
}

// ---------------------------------------------------------------- expand --

int run_expand(const std::string& input, int train_msbs, const NetFlags& nf, const TrainFlags& tf,
               const std::string& out_dir) {
    const DigitalSignal img = read_netpbm(input);
    const NetSpec spec = nf.resolve();
    TrainConfig cfg = tf.resolve();
    echo_net_and_train("expand", spec, cfg, {{"input", input}, {"train_msbs", std::to_string(train_msbs)}});

    ExpansionResult result = expand_bit_depth(img, train_msbs, spec, cfg);
    fs::create_directories(out_dir);
    write_netpbm(result.predicted, (fs::path(out_dir) / image_name(img, "predicted")).string());
    write_netpbm(result.zero_pad, (fs::path(out_dir) / image_name(img, "zero_pad")).string());
    write_netpbm(result.bit_replicate, (fs::path(out_dir) / image_name(img, "bit_replicate")).string());
    write_train_report_csv(result.fit_report, (fs::path(out_dir) / "report.csv").string());

    auto psnr_field = [](double v) { return std::isinf(v) ? json("inf") : json(v); };
    json j;
    j["expansion_psnr"] = psnr_field(result.predicted_report.psnr);
    j["zero_pad_psnr"] = psnr_field(result.zero_pad_report.psnr);
    j["bit_replicate_psnr"] = psnr_field(result.bit_replicate_report.psnr);
    j["trained_lossless"] = result.trained_lossless;
    j["msb_planes_exact"] = result.msb_planes_exact;
    j["fit"] = report_json(result.fit_report);
    write_json(j, fs::path(out_dir) / "summary.json");

    std::cout << "expansion psnr " << result.predicted_report.psnr << " dB vs zero-pad "
              << result.zero_pad_report.psnr << " dB, bit-replication "
              << result.bit_replicate_report.psnr << " dB\n";
    return 0;
}

// --------------------------------------------------------------- ternary --

int run_ternary(const std::string& input, int plane_index, const NetFlags& nf, const TrainFlags& tf,
                bool require_lossless, const std::string& out_dir) {
    const DigitalSignal img = read_netpbm(input);
    if (plane_index < 0 || plane_index >= img.bit_depth)
        throw std::runtime_error("plane index " + std::to_string(plane_index) + " outside 0.." +
                                 std::to_string(img.bit_depth - 1));
    NetFlags flags = nf;
    if (flags.act == "sine") flags.act = "gelu"; // quantization breaks periodic inits
    const NetSpec spec = flags.resolve();
    TrainConfig cfg = tf.resolve();
    echo_net_and_train("ternary", spec, cfg, {{"input", input}, {"plane", std::to_string(plane_index)}});

    const QuantizedStack stack = decompose(img, 1);
    DigitalSignal plane(img.shape, 1, std::vector<std::uint32_t>(stack.planes[plane_index]));
    TernaryFitResult result = fit_ternary(plane, spec, cfg);

    fs::create_directories(out_dir);
    const std::string model_path = (fs::path(out_dir) / "ternary_model.bpinr").string();
    save_ternary_model(result.net, ModelMeta{cfg.loss, 1, 1, true, true}, model_path);
    write_train_report_csv(result.report, (fs::path(out_dir) / "report.csv").string());

    json j = report_json(result.report);
    j["plane"] = plane_index;
    j["param_count"] = result.net.param_count();
    j["model_file_bytes"] = fs::file_size(model_path);
    j["packed_2bit_bytes"] = result.packed_2bit_bytes;
    j["packed_log3_bytes"] = result.packed_log3_bytes;
    write_json(j, fs::path(out_dir) / "summary.json");

    const bool lossless = result.report.iteration_at_lossless.has_value();
    std::cout << (lossless ? "lossless" : "not lossless") << ", model file "
              << fs::file_size(model_path) << " bytes (2-bit packed weights)\n";
    if (require_lossless && !lossless) return kExitNotLossless;
    return 0;
}

// ----------------------------------------------------------------- audio --

int run_audio(const std::string& input, const NetFlags& nf, const TrainFlags& tf,
              bool require_lossless, const std::string& out_dir) {
    const WavData wav = read_wav(input);
    const NetSpec spec = nf.resolve();
    TrainConfig cfg = tf.resolve();
    fs::create_directories(out_dir);
    json j;
    bool exact = false;
    long final_iter = 0;

    if (wav.format_tag == 3) {
        echo_net_and_train("audio", spec, cfg,
                           {{"input", input}, {"format", "float32"},
                            {"samples", std::to_string(wav.float_samples.size())}});
        Mlp<float> net;
        AudioFitResult result = fit_audio_fp32(wav.float_samples, spec, cfg, &net);
        write_wav_float32(result.reconstructed, wav.sample_rate,
                          (fs::path(out_dir) / "reconstructed.wav").string());
        write_train_report_csv(result.report, (fs::path(out_dir) / "report.csv").string());
        save_model(net, ModelMeta{cfg.loss, 32, 32, false, false},
                   (fs::path(out_dir) / "model.bpinr").string());
        j = report_json(result.report);
        exact = result.exact;
        final_iter = result.report.checkpoints.back().iteration;
    } else {
        echo_net_and_train("audio", spec, cfg,
                           {{"input", input}, {"format", "pcm16 (offset-binary lift)"},
                            {"samples", std::to_string(wav.pcm_samples.size())}});
        const DigitalSignal sig = pcm16_to_signal(wav.pcm_samples);
        auto net = init_mlp<float>(2, spec.width, spec.depth, 1, spec.activation,
                                   derive_seed(cfg.seed, 0x617564ULL));
        TrainReport report = fit(sig, 1, net, cfg);
        VerifyResult verify = verify_lossless(net, sig, 1, cfg.loss);
        write_wav_pcm16(signal_to_pcm16(verify.reconstructed), wav.sample_rate,
                        (fs::path(out_dir) / "reconstructed.wav").string());
        write_train_report_csv(report, (fs::path(out_dir) / "report.csv").string());
        save_model(net, ModelMeta{cfg.loss, 16, 16, false, false},
                   (fs::path(out_dir) / "model.bpinr").string());
        j = report_json(report);
        exact = verify.lossless;
        final_iter = report.checkpoints.back().iteration;
    }
    j["exact"] = exact;
    write_json(j, fs::path(out_dir) / "summary.json");
    std::cout << (exact ? "exact bit-pattern reconstruction" : "not exact") << " after " << final_iter
              << " iterations\n";
    if (require_lossless && !exact) return kExitNotLossless;
    return 0;
}

// --------------------------------------------------------------- metrics --

int run_metrics(const std::string& a_path, const std::string& b_path, const std::string& json_out) {
    const DigitalSignal a = read_netpbm(a_path);
    const DigitalSignal b = read_netpbm(b_path);
    echo_config("metrics", {{"a", a_path}, {"b", b_path}});
    MetricReport r = metric_report(a, b);
    std::printf("ber   %.10g\n", r.ber);
    if (std::isinf(r.psnr))
        std::printf("psnr  inf\n");
    else
        std::printf("psnr  %.6f dB\n", r.psnr);
    std::printf("rmse  %.10g\n", r.rmse);
    if (r.ssim)
        std::printf("ssim  %.10g\n", *r.ssim);
    else
        std::printf("ssim  n/a (needs 11x11 extents)\n");
    std::printf("per-plane ber (LSB first):");
    for (double v : r.per_plane_ber) std::printf(" %.6g", v);
    std::printf("\n");
    if (!json_out.empty()) {
        json j;
        j["ber"] = r.ber;
        j["psnr"] = std::isinf(r.psnr) ? json("inf") : json(r.psnr);
        j["rmse"] = r.rmse;
        if (r.ssim) j["ssim"] = *r.ssim;
        j["per_plane_ber"] = r.per_plane_ber;
        write_json(j, json_out);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bit-plane INR toolkit: lossless coordinate-network signal fitting"};
    app.require_subcommand(1);

    // fit
    std::string fit_input, fit_out = "fit_out";
    int fit_k = 1;
    bool fit_f64 = false, fit_require = false;
    NetFlags fit_net;
    TrainFlags fit_train;
    auto* fit_cmd = app.add_subcommand("fit", "fit an image losslessly via bit-plane decomposition");
    fit_cmd->add_option("input", fit_input, "input .pgm/.ppm")->required();
    fit_cmd->add_option("--k", fit_k, "bits per plane (must divide the bit depth)");
    fit_net.add_to(fit_cmd);
    fit_train.add_to(fit_cmd);
    fit_cmd->add_flag("--f64", fit_f64, "train in double precision");
    fit_cmd->add_flag("--require-lossless", fit_require, "exit 3 unless the fit reached lossless");
    fit_cmd->add_option("--out", fit_out, "output directory");

    // decompose / recompose
    std::string dec_input, dec_out = "planes";
    int dec_k = 1;
    auto* dec_cmd = app.add_subcommand("decompose", "split an image into k-bit planes");
    dec_cmd->add_option("input", dec_input)->required();
    dec_cmd->add_option("--k", dec_k, "bits per plane");
    dec_cmd->add_option("--out", dec_out, "output directory");

    std::string rec_in, rec_out = "recomposed.pgm";
    auto* rec_cmd = app.add_subcommand("recompose", "reassemble planes written by decompose");
    rec_cmd->add_option("input", rec_in, "plane directory")->required();
    rec_cmd->add_option("--out", rec_out, "output image path");

    // bound
    int bound_dim = 2;
    std::vector<int> bound_bits;
    double bound_lip = 1.0;
    std::vector<double> bound_domain{-1.0, 1.0};
    auto* bound_cmd = app.add_subcommand("bound", "print the explicit parameter upper bound");
    bound_cmd->add_option("--dim", bound_dim, "signal dimension d");
    bound_cmd->add_option("--bits", bound_bits, "bit precisions (default 1 2 4 8 16)");
    bound_cmd->add_option("--lipschitz", bound_lip, "Lipschitz constant L");
    bound_cmd->add_option("--domain", bound_domain, "domain ends a b")->expected(2);

    // bitbias
    std::string bias_input, bias_out = "bitbias_out";
    NetFlags bias_net;
    TrainFlags bias_train;
    bias_train.loss = "mse";
    auto* bias_cmd = app.add_subcommand("bitbias", "profile per-plane BER of a non-decomposed fit");
    bias_cmd->add_option("input", bias_input)->required();
    bias_net.add_to(bias_cmd);
    bias_train.add_to(bias_cmd);
    bias_cmd->add_option("--out", bias_out, "output directory");

    // sweep
    std::string sweep_input, sweep_out = "sweep_out", sweep_mode = "bitaxis";
    std::vector<int> sweep_ks{1, 2, 4};
    int sweep_seeds = 3, sweep_threads = default_threads();
    NetFlags sweep_net;
    TrainFlags sweep_train;
    sweep_train.loss = "mse";
    auto* sweep_cmd = app.add_subcommand("sweep", "iterations-to-lossless across plane precisions");
    sweep_cmd->add_option("input", sweep_input)->required();
    sweep_cmd->add_option("--ks", sweep_ks, "plane precisions to sweep");
    sweep_cmd->add_option("--seeds", sweep_seeds, "number of seeds (>= 3)");
    sweep_cmd->add_option("--mode", sweep_mode, "bitaxis | parallel")
        ->check(CLI::IsMember({"bitaxis", "parallel"}));
    sweep_cmd->add_option("--threads", sweep_threads, "concurrent fits (BPINR_THREADS overrides default)");
    sweep_net.add_to(sweep_cmd);
    sweep_train.add_to(sweep_cmd);
    sweep_cmd->add_option("--out", sweep_out, "output directory");

    // expand
    std::string exp_input, exp_out = "expand_out";
    int exp_msbs = 8;
    NetFlags exp_net;
    TrainFlags exp_train;
    auto* exp_cmd = app.add_subcommand("expand", "self-supervised bit-depth expansion of a 16-bit image");
    exp_cmd->add_option("input", exp_input)->required();
    exp_cmd->add_option("--train-msbs", exp_msbs, "number of most significant planes to train on");
    exp_net.add_to(exp_cmd);
    exp_train.add_to(exp_cmd);
    exp_cmd->add_option("--out", exp_out, "output directory");

    // ternary
    std::string tern_input, tern_out = "ternary_out";
    int tern_plane = 7;
    bool tern_require = false;
    NetFlags tern_net;
    tern_net.act = "gelu";
    tern_net.width = 256;
    TrainFlags tern_train;
    auto* tern_cmd = app.add_subcommand("ternary", "fit one bit-plane with a ternary-weight network");
    tern_cmd->add_option("input", tern_input)->required();
    tern_cmd->add_option("--plane", tern_plane, "bit-plane index (LSB = 0)");
    tern_net.add_to(tern_cmd);
    tern_train.add_to(tern_cmd);
    tern_cmd->add_flag("--require-lossless", tern_require, "exit 3 unless the plane fit is exact");
    tern_cmd->add_option("--out", tern_out, "output directory");

    // audio
    std::string audio_input, audio_out = "audio_out";
    bool audio_require = false;
    NetFlags audio_net;
    TrainFlags audio_train;
    auto* audio_cmd = app.add_subcommand("audio", "fit a WAV clip bit-exactly (float32 planes or PCM16 lift)");
    audio_cmd->add_option("input", audio_input)->required();
    audio_net.add_to(audio_cmd);
    audio_train.add_to(audio_cmd);
    audio_cmd->add_flag("--require-lossless", audio_require, "exit 3 unless bit-exact");
    audio_cmd->add_option("--out", audio_out, "output directory");

    // metrics
    std::string met_a, met_b, met_json;
    auto* met_cmd = app.add_subcommand("metrics", "BER/PSNR/RMSE/SSIM between two images");
    met_cmd->add_option("a", met_a)->required();
    met_cmd->add_option("b", met_b)->required();
    met_cmd->add_option("--json", met_json, "also write a JSON report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*fit_cmd) return run_fit(fit_input, fit_k, fit_net, fit_train, fit_f64, fit_require, fit_out);
        if (*dec_cmd) return run_decompose(dec_input, dec_k, dec_out);
        if (*rec_cmd) return run_recompose(rec_in, rec_out);
        if (*bound_cmd) return run_bound(bound_dim, bound_bits, bound_lip, bound_domain);
        if (*bias_cmd) return run_bitbias(bias_input, bias_net, bias_train, bias_out);
        if (*sweep_cmd)
            return run_sweep(sweep_input, sweep_ks, sweep_seeds, sweep_net, sweep_train, sweep_mode,
                             sweep_threads, sweep_out);
        if (*exp_cmd) return run_expand(exp_input, exp_msbs, exp_net, exp_train, exp_out);
        if (*tern_cmd)
            return run_ternary(tern_input, tern_plane, tern_net, tern_train, tern_require, tern_out);
        if (*audio_cmd) return run_audio(audio_input, audio_net, audio_train, audio_require, audio_out);
        if (*met_cmd) return run_metrics(met_a, met_b, met_json);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
