// Batch front end: simulate, reconstruct, adapt, analyze, hdr, bench.
// Every command is deterministic given its options and seed; a hash of the
// effective configuration is embedded in all artifacts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qis/analytics.hpp"
#include "qis/forward_model.hpp"
#include "qis/hdr_pipeline.hpp"
#include "qis/image.hpp"
#include "qis/reconstruction.hpp"
#include "qis/rng.hpp"
#include "qis/special_functions.hpp"
#include "qis/threshold_adaptation.hpp"

namespace {

using namespace qis;

// ---------------------------------------------------------------------------
// configuration hashing (FNV-1a over the canonical option string)

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class ConfigRecord {
  public:
    explicit ConfigRecord(std::string command) : command_(std::move(command)) {}

    template <typename T>
    void add(const std::string& key, const T& value) {
        std::ostringstream os;
        os.precision(17);
        os << value;
        entries_[key] = os.str();
    }

    std::string canonical() const {
        std::string s = command_;
        for (const auto& [k, v] : entries_) s += "|" + k + "=" + v;
        return s;
    }

    std::string hash_hex() const {
        std::ostringstream os;
        os << std::hex << fnv1a64(canonical());
        return os.str();
    }

    std::string stamp() const { return "config " + hash_hex(); }

    void write_meta(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write metadata: " + path);
        out << "command=" << command_ << "\n";
        out << "config_hash=" << hash_hex() << "\n";
        for (const auto& [k, v] : entries_) out << k << "=" << v << "\n";
    }

  private:
    std::string command_;
    std::map<std::string, std::string> entries_;
};

// ---------------------------------------------------------------------------
// shared option plumbing

struct SensorFlags {
    double alpha = 300.0;
    std::string k = "2x2";
    int T = 25;
    int q_max = 16;
    double tau = 1.0;
    std::uint64_t seed = 0;
    std::string kernel = "boxcar";
};

void add_sensor_flags(CLI::App* cmd, SensorFlags& f) {
    cmd->add_option("--alpha", f.alpha, "sensor gain (photons per unit intensity)");
    cmd->add_option("--k", f.k, "jots per pixel, WxH (e.g. 2x2)");
    cmd->add_option("--t", f.T, "temporal frames");
    cmd->add_option("--qmax", f.q_max, "maximum threshold");
    cmd->add_option("--tau", f.tau, "shutter duty cycle in (0,1]");
    cmd->add_option("--seed", f.seed, "RNG seed")->envname("QIS_SEED");
    cmd->add_option("--kernel", f.kernel,
                    "synthesis kernel: boxcar|linear-bspline|quadratic-bspline|cubic-bspline");
}

std::pair<int, int> parse_dims(const std::string& s) {
    const auto pos = s.find('x');
    if (pos == std::string::npos)
        throw std::invalid_argument("expected WxH, got '" + s + "'");
    return {std::stoi(s.substr(0, pos)), std::stoi(s.substr(pos + 1))};
}

SensorConfig make_config(const SensorFlags& f) {
    SensorConfig cfg;
    cfg.alpha = f.alpha;
    auto [kx, ky] = parse_dims(f.k);
    cfg.kx = kx;
    cfg.ky = ky;
    cfg.T = f.T;
    cfg.q_max = f.q_max;
    cfg.tau = f.tau;
    cfg.seed = f.seed;
    cfg.validate();
    return cfg;
}

void record_sensor(ConfigRecord& rec, const SensorFlags& f) {
    rec.add("alpha", f.alpha);
    rec.add("k", f.k);
    rec.add("t", f.T);
    rec.add("qmax", f.q_max);
    rec.add("tau", f.tau);
    rec.add("seed", f.seed);
    rec.add("kernel", f.kernel);
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// ---------------------------------------------------------------------------
// synthetic corpus

Image synth_image(const std::string& kind, int w, int h, int variant) {
    Image img(w, h);
    if (kind == "ramp") {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double u = variant % 2 == 0 ? static_cast<double>(x) / (w - 1)
                                                  : static_cast<double>(y) / (h - 1);
                img.at(x, y) = 0.02 + 0.96 * u;
            }
    } else if (kind == "step") {
        const double lo = 0.04, hi = 0.9;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const bool bright = variant % 2 == 0 ? (x >= w / 2)
                                                     : ((x / (w / 4 + 1) + y / (h / 4 + 1)) % 2);
                img.at(x, y) = bright ? hi : lo;
            }
    } else if (kind == "blobs") {
        // a few Gaussian bumps at positions drawn from a fixed counter stream
        CounterRng rng(0x626c6f62ULL, static_cast<std::uint64_t>(variant), 0);
        for (auto& p : img.pixels) p = 0.05;
        const int n_blobs = 3 + variant % 2;
        for (int b = 0; b < n_blobs; ++b) {
            const double cx = rng.uniform() * w;
            const double cy = rng.uniform() * h;
            const double sigma = (0.06 + 0.1 * rng.uniform()) * std::min(w, h);
            const double amp = 0.55 + 0.4 * rng.uniform();
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    img.at(x, y) += amp * std::exp(-d2 / (2.0 * sigma * sigma));
                }
        }
        for (auto& p : img.pixels) p = std::clamp(p, 0.0, 1.0);
    } else {
        throw std::invalid_argument("unknown synthetic image kind: " + kind);
    }
    return img;
}

std::vector<Image> synth_corpus(int n_images, int w, int h) {
    static const char* kinds[] = {"ramp", "step", "blobs"};
    std::vector<Image> corpus;
    for (int i = 0; i < n_images; ++i)
        corpus.push_back(synth_image(kinds[i % 3], w, h, i / 3));
    return corpus;
}

Image load_image_any(const std::string& path) {
    if (ends_with(path, ".pgm")) return load_pgm(path);
    return load_csv_image(path);
}

void save_image_any(const Image& img, const std::string& path, const std::string& comment) {
    if (ends_with(path, ".pgm"))
        save_pgm(img, path, comment);
    else
        save_csv_image(img, path, comment);
}

Image resolve_input_image(const std::string& image_path, const std::string& synthetic,
                          const std::string& size) {
    if (!image_path.empty() && !synthetic.empty())
        throw std::invalid_argument("give either --image or --synthetic, not both");
    if (!image_path.empty()) return load_image_any(image_path);
    if (synthetic.empty())
        throw std::invalid_argument("an input image is required (--image or --synthetic)");
    auto [w, h] = parse_dims(size);
    return synth_image(synthetic, w, h, 0);
}

// ---------------------------------------------------------------------------
// metadata sidecar lookup for reconstruct

std::map<std::string, std::string> read_meta(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find('=');
        if (pos != std::string::npos) kv[line.substr(0, pos)] = line.substr(pos + 1);
    }
    return kv;
}

// ---------------------------------------------------------------------------
// command options

struct SimulateOpts {
    SensorFlags sensor;
    std::string image, synthetic, size = "32x32";
    int q = 0;
    std::string qmap;
    bool oracle = false;
    std::string out;
};

struct ReconstructOpts {
    SensorFlags sensor;
    std::string bits;
    int q = 0;
    std::string qmap;
    int width = 0, height = 0;
    std::string out, truth;
};

struct AdaptOpts {
    SensorFlags sensor;
    std::string image, synthetic, size = "32x32";
    std::string block;  // jots, WxH; empty = per pixel
    int adapt_frames = 8;
    double tol = -1.0;
    bool accumulate = false;
    std::string out, trace, report;
};

struct AnalyzeOpts {
    SensorFlags sensor;
    std::string table = "snr";
    double c_min = 0.05, c_max = 1.0, c_step = 0.05;
    double c = 0.5;
    int q_lo = 1, q_hi = 0;
    double delta = 2e-4;
    std::string taus = "1,0.2,0.04,0.008";
    std::string policy = "oracle";
    int q = 1;
    double theta_min = 1e-3, theta_max = 1e4;
    int points = 2000;
    double floor_db = 20.0;
    std::string out;
};

struct HdrOpts {
    SensorFlags sensor;
    std::string radiance;
    std::string taus = "1,0.2,0.04,0.008";
    std::string policy = "adapted";
    int q = 1;
    int adapt_frames = 8;
    std::string out, pgm, reference;
};

struct BenchOpts {
    SensorFlags sensor;
    int seeds = 50;
    int images = 6;
    std::string size = "24x24";
    int adapt_frames = 6;
    double tol = 0.02;
    std::string uniform_qs = "1,5,10,16";
    std::string out;
};

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> values;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
    return values;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> values;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(std::stoi(item));
    return values;
}

// ---------------------------------------------------------------------------
// commands

int cmd_simulate(const SimulateOpts& o) {
    SensorConfig cfg = make_config(o.sensor);
    const KernelKind kernel = parse_kernel(o.sensor.kernel);
    const Image img = resolve_input_image(o.image, o.synthetic, o.size);
    validate_intensity(img);
    const int chosen = (o.q > 0) + !o.qmap.empty() + o.oracle;
    if (chosen != 1)
        throw std::invalid_argument("choose exactly one of --q, --qmap, --oracle");

    ConfigRecord rec("simulate");
    record_sensor(rec, o.sensor);
    rec.add("image", o.image.empty() ? ("synthetic:" + o.synthetic + ":" + o.size) : o.image);
    rec.add("q", o.q);
    rec.add("qmap", o.qmap);
    rec.add("oracle", o.oracle ? 1 : 0);

    const ExposureField theta = expose(img, cfg, kernel);
    ThresholdMap qmap;
    if (o.q > 0)
        qmap = ThresholdMap::uniform(theta.jot_width, theta.jot_height, o.q, cfg.kx, cfg.ky);
    else if (o.oracle)
        qmap = oracle_map(img, cfg);
    else
        qmap = load_threshold_map(o.qmap, theta.jot_width, theta.jot_height);
    qmap.validate(cfg.q_max);

    const BitCube cube = sample_bits(theta, qmap, cfg.T, cfg.seed);
    save_qisb(cube, o.out);
    rec.add("jot_width", cube.jot_width);
    rec.add("jot_height", cube.jot_height);
    rec.write_meta(o.out + ".meta");
    std::cout << "wrote " << o.out << " (" << cube.jot_width << "x" << cube.jot_height
              << " jots, " << cube.frames << " frames), " << rec.stamp() << "\n";
    return 0;
}

int cmd_reconstruct(const ReconstructOpts& o) {
    SensorConfig cfg = make_config(o.sensor);
    BitCube cube = load_qisb(o.bits);

    int width = o.width, height = o.height;
    const auto meta = read_meta(o.bits + ".meta");
    if (width <= 0 && meta.count("jot_width")) width = std::stoi(meta.at("jot_width")) / cfg.kx;
    if (height <= 0 && meta.count("jot_height"))
        height = std::stoi(meta.at("jot_height")) / cfg.ky;
    if (width <= 0 || height <= 0)
        throw std::invalid_argument(
            "image dimensions unknown: pass --width/--height or keep the .meta sidecar");
    const int jw = width * cfg.kx, jh = height * cfg.ky;
    if (jw * jh != cube.jots())
        throw std::invalid_argument("bit cube size does not match the given dimensions");
    cube.jot_width = jw;
    cube.jot_height = jh;
    cfg.T = cube.frames;

    if ((o.q > 0) == !o.qmap.empty())
        throw std::invalid_argument("choose exactly one of --q, --qmap");
    ThresholdMap qmap = o.q > 0 ? ThresholdMap::uniform(jw, jh, o.q, cfg.kx, cfg.ky)
                                : load_threshold_map(o.qmap, jw, jh);
    qmap.validate(cfg.q_max);

    ConfigRecord rec("reconstruct");
    record_sensor(rec, o.sensor);
    rec.add("bits", o.bits);
    rec.add("q", o.q);
    rec.add("qmap", o.qmap);
    rec.add("width", width);
    rec.add("height", height);

    Image truth;
    const Image* truth_ptr = nullptr;
    if (!o.truth.empty()) {
        truth = load_image_any(o.truth);
        truth_ptr = &truth;
    }
    const ReconstructionResult res = mle_reconstruct(cube, qmap, cfg, 1.0, truth_ptr);
    save_image_any(res.estimate, o.out, rec.stamp());
    long saturated = std::accumulate(res.saturation.begin(), res.saturation.end(), 0L);
    std::cout << "wrote " << o.out << ", saturated blocks " << saturated << "/"
              << res.saturation.size() << ", " << rec.stamp() << "\n";
    if (truth_ptr) std::cout << "psnr_db " << res.psnr_db << "\n";
    return 0;
}

int cmd_adapt(const AdaptOpts& o) {
    SensorConfig cfg = make_config(o.sensor);
    const KernelKind kernel = parse_kernel(o.sensor.kernel);
    const Image img = resolve_input_image(o.image, o.synthetic, o.size);
    validate_intensity(img);

    BisectionOptions opts;
    if (!o.block.empty()) {
        auto [bw, bh] = parse_dims(o.block);
        opts.block_w = bw;
        opts.block_h = bh;
    }
    opts.adapt_frames = o.adapt_frames;
    opts.tol = o.tol;
    opts.accumulate = o.accumulate;

    ConfigRecord rec("adapt");
    record_sensor(rec, o.sensor);
    rec.add("image", o.image.empty() ? ("synthetic:" + o.synthetic + ":" + o.size) : o.image);
    rec.add("block", o.block);
    rec.add("adapt_frames", o.adapt_frames);
    rec.add("tol", o.tol);
    rec.add("accumulate", o.accumulate ? 1 : 0);

    const AdaptationReport report = run_bisection(img, cfg, opts, kernel);
    save_threshold_map(report.final_map, o.out);
    if (!o.trace.empty()) write_adaptation_trace(report.trace, o.trace, rec.stamp());
    if (!o.report.empty()) {
        std::ofstream out(o.report);
        if (!out) throw std::runtime_error("cannot write CSV: " + o.report);
        out << "# " << rec.stamp() << "\n";
        out << "iteration,mse_to_oracle\n";
        out.precision(12);
        for (std::size_t i = 0; i < report.mse_to_oracle.size(); ++i)
            out << i << "," << report.mse_to_oracle[i] << "\n";
    }
    std::cout << "wrote " << o.out << ", adaptation frames " << report.adapt_frames_used
              << ", reconstruction frames " << report.reconstruction_frames << ", "
              << rec.stamp() << "\n";
    return 0;
}

int cmd_analyze(const AnalyzeOpts& o) {
    SensorConfig cfg = make_config(o.sensor);
    const int q_hi = o.q_hi > 0 ? o.q_hi : cfg.q_max;

    ConfigRecord rec("analyze");
    record_sensor(rec, o.sensor);
    rec.add("table", o.table);

    if (o.table == "snr") {
        rec.add("c_min", o.c_min);
        rec.add("c_max", o.c_max);
        rec.add("c_step", o.c_step);
        rec.add("q_lo", o.q_lo);
        rec.add("q_hi", q_hi);
        std::vector<double> cs;
        for (double c = o.c_min; c <= o.c_max + 1e-12; c += o.c_step)
            cs.push_back(std::min(c, o.c_max));
        write_snr_csv(snr_table(cfg, cs, o.q_lo, q_hi), o.out, rec.stamp());
    } else if (o.table == "phase") {
        rec.add("c", o.c);
        rec.add("q_lo", o.q_lo);
        rec.add("q_hi", q_hi);
        rec.add("delta", o.delta);
        write_phase_csv(phase_transition_curve(o.c, cfg, o.q_lo, q_hi, o.delta), o.out,
                        rec.stamp());
    } else if (o.table == "crlb") {
        rec.add("c_min", o.c_min);
        rec.add("c_max", o.c_max);
        rec.add("c_step", o.c_step);
        const CheckerboardDesign d = checkerboard_design(cfg, o.c_min, o.c_max, o.c_step);
        std::ofstream out(o.out);
        if (!out) throw std::runtime_error("cannot write CSV: " + o.out);
        out << "# " << rec.stamp() << "\n";
        out << "q1,q2,objective\n";
        out.precision(12);
        out << d.q1 << "," << d.q2 << "," << d.objective << "\n";
        std::cout << "checkerboard design q1 " << d.q1 << " q2 " << d.q2 << "\n";
    } else if (o.table == "dr") {
        rec.add("taus", o.taus);
        rec.add("policy", o.policy);
        rec.add("q", o.q);
        rec.add("theta_min", o.theta_min);
        rec.add("theta_max", o.theta_max);
        rec.add("points", o.points);
        rec.add("floor_db", o.floor_db);
        const auto curve =
            dynamic_range_curve(cfg, parse_double_list(o.taus), parse_policy(o.policy), o.q,
                                o.theta_min, o.theta_max, o.points);
        write_dr_csv(curve, o.out, rec.stamp());
        std::cout << "dynamic_range_db " << dynamic_range_db(curve, o.floor_db) << "\n";
    } else {
        throw std::invalid_argument("unknown table: " + o.table +
                                    " (expected snr|phase|crlb|dr)");
    }
    std::cout << "wrote " << o.out << ", " << rec.stamp() << "\n";
    return 0;
}

int cmd_hdr(const HdrOpts& o) {
    SensorConfig cfg = make_config(o.sensor);
    const Image radiance = load_image_any(o.radiance);
    validate_radiance(radiance);

    HdrStackOptions opts;
    opts.policy = parse_policy(o.policy);
    opts.uniform_q = o.q;
    opts.adapt_frames = o.adapt_frames;
    opts.kernel = parse_kernel(o.sensor.kernel);

    ConfigRecord rec("hdr");
    record_sensor(rec, o.sensor);
    rec.add("radiance", o.radiance);
    rec.add("taus", o.taus);
    rec.add("policy", o.policy);
    rec.add("q", o.q);
    rec.add("adapt_frames", o.adapt_frames);

    const ExposureStack stack = simulate_stack(radiance, cfg, parse_double_list(o.taus), opts);
    const auto recons = reconstruct_stack(stack);
    Image reference;
    const Image* ref_ptr = nullptr;
    if (!o.reference.empty()) {
        reference = load_image_any(o.reference);
        ref_ptr = &reference;
    } else {
        reference = radiance;
        ref_ptr = &reference;
    }
    const HdrResult result = fuse(stack, recons, ref_ptr);
    save_csv_image(result.fused, o.out, rec.stamp());
    if (!o.pgm.empty()) save_pgm(tone_map(result.fused), o.pgm, rec.stamp());
    long fallbacks = std::accumulate(result.fallback.begin(), result.fallback.end(), 0L);
    std::cout << "wrote " << o.out << ", fallback pixels " << fallbacks << ", psnr_db "
              << result.psnr_db << ", " << rec.stamp() << "\n";
    return 0;
}

// one simulate-and-reconstruct PSNR measurement for the benchmark
double bench_psnr(const Image& img, SensorConfig cfg, const std::string& policy,
                  int uniform_q, int block_scale, int adapt_frames, double tol) {
    const ExposureField theta = expose(img, cfg);
    if (policy == "uniform") {
        const ThresholdMap qmap = ThresholdMap::uniform(theta.jot_width, theta.jot_height,
                                                        uniform_q, cfg.kx, cfg.ky);
        const BitCube cube = sample_bits(theta, qmap, cfg.T, cfg.seed);
        return mle_reconstruct(cube, qmap, cfg, 1.0, &img).psnr_db;
    }
    if (policy == "reset-asc" || policy == "reset-desc") {
        const auto dir = policy == "reset-asc" ? ResetDirection::Ascending
                                               : ResetDirection::Descending;
        return conditional_reset_reconstruct(img, cfg, dir).psnr_db;
    }
    if (policy == "proposed") {
        BisectionOptions opts;
        opts.block_w = cfg.kx * block_scale;
        opts.block_h = cfg.ky * block_scale;
        opts.adapt_frames = adapt_frames;
        opts.tol = tol;
        const AdaptationReport report = run_bisection(img, cfg, opts);
        SensorConfig recon_cfg = cfg;
        recon_cfg.T = report.reconstruction_frames;
        const BitCube cube = sample_bits(theta, report.final_map, recon_cfg.T,
                                         stream_key(cfg.seed, 0x62656e63ULL, 1));
        return mle_reconstruct(cube, report.final_map, recon_cfg, 1.0, &img).psnr_db;
    }
    throw std::invalid_argument("unknown bench policy: " + policy);
}

int cmd_bench(const BenchOpts& o) {
    SensorConfig cfg = make_config(o.sensor);
    auto [w, h] = parse_dims(o.size);
    const std::vector<Image> corpus = synth_corpus(o.images, w, h);
    const std::vector<int> uniform_qs = parse_int_list(o.uniform_qs);

    ConfigRecord rec("bench");
    record_sensor(rec, o.sensor);
    rec.add("seeds", o.seeds);
    rec.add("images", o.images);
    rec.add("size", o.size);
    rec.add("adapt_frames", o.adapt_frames);
    rec.add("tol", o.tol);
    rec.add("uniform_qs", o.uniform_qs);

    struct Row {
        std::string name;
        std::string policy;
        int uniform_q = 0;
        int block_scale = 1;
    };
    std::vector<Row> rows;
    for (int q : uniform_qs)
        rows.push_back({"uniform_q" + std::to_string(q), "uniform", q, 1});
    rows.push_back({"reset_asc", "reset-asc", 0, 1});
    rows.push_back({"reset_desc", "reset-desc", 0, 1});
    rows.push_back({"proposed_1px", "proposed", 0, 1});
    rows.push_back({"proposed_2px", "proposed", 0, 2});
    rows.push_back({"proposed_4px", "proposed", 0, 4});

    std::ofstream out(o.out);
    if (!out) throw std::runtime_error("cannot write CSV: " + o.out);
    out << "# " << rec.stamp() << "\n";
    out << "policy,mean_psnr_db,std_psnr_db\n";
    out.precision(12);
    for (const auto& row : rows) {
        std::vector<double> psnrs;
        for (int s = 0; s < o.seeds; ++s) {
            for (std::size_t i = 0; i < corpus.size(); ++i) {
                SensorConfig run_cfg = cfg;
                run_cfg.seed = stream_key(cfg.seed, static_cast<std::uint64_t>(s),
                                          static_cast<std::uint64_t>(i));
                psnrs.push_back(bench_psnr(corpus[i], run_cfg, row.policy, row.uniform_q,
                                           row.block_scale, o.adapt_frames, o.tol));
            }
        }
        const double n = static_cast<double>(psnrs.size());
        const double mean = std::accumulate(psnrs.begin(), psnrs.end(), 0.0) / n;
        double var = 0.0;
        for (double p : psnrs) var += (p - mean) * (p - mean);
        const double stddev = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
        out << row.name << "," << mean << "," << stddev << "\n";
        std::cout << row.name << " mean " << mean << " std " << stddev << "\n";
    }
    std::cout << "wrote " << o.out << ", " << rec.stamp() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quanta image sensor simulation and threshold-design toolkit"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);
    app.allow_config_extras(CLI::config_extras_mode::error);

    SimulateOpts sim;
    auto* c_sim = app.add_subcommand("simulate", "sample a binary bit cube");
    add_sensor_flags(c_sim, sim.sensor);
    c_sim->add_option("--image", sim.image, "input image (.pgm or .csv)");
    c_sim->add_option("--synthetic", sim.synthetic, "synthetic scene: ramp|step|blobs");
    c_sim->add_option("--size", sim.size, "synthetic scene size WxH");
    c_sim->add_option("--q", sim.q, "uniform threshold");
    c_sim->add_option("--qmap", sim.qmap, "threshold map CSV");
    c_sim->add_flag("--oracle", sim.oracle, "oracle per-pixel thresholds from ground truth");
    c_sim->add_option("--out", sim.out, "output .qisb path")->required();

    ReconstructOpts rc;
    auto* c_rc = app.add_subcommand("reconstruct", "ML reconstruction from a bit cube");
    add_sensor_flags(c_rc, rc.sensor);
    c_rc->add_option("--bits", rc.bits, "input .qisb path")->required();
    c_rc->add_option("--q", rc.q, "uniform threshold used at capture");
    c_rc->add_option("--qmap", rc.qmap, "threshold map CSV used at capture");
    c_rc->add_option("--width", rc.width, "image width in pixels");
    c_rc->add_option("--height", rc.height, "image height in pixels");
    c_rc->add_option("--truth", rc.truth, "ground truth for PSNR");
    c_rc->add_option("--out", rc.out, "output image (.pgm or .csv)")->required();

    AdaptOpts ad;
    auto* c_ad = app.add_subcommand("adapt", "bisection threshold adaptation");
    add_sensor_flags(c_ad, ad.sensor);
    c_ad->add_option("--image", ad.image, "input image (.pgm or .csv)");
    c_ad->add_option("--synthetic", ad.synthetic, "synthetic scene: ramp|step|blobs");
    c_ad->add_option("--size", ad.size, "synthetic scene size WxH");
    c_ad->add_option("--block", ad.block, "block granularity in jots, WxH (default: pixel)");
    c_ad->add_option("--adapt-frames", ad.adapt_frames, "adaptation frame budget");
    c_ad->add_option("--tol", ad.tol, "bit-density tolerance (default: auto)");
    c_ad->add_flag("--accumulate", ad.accumulate, "pool frames taken at the current q_M");
    c_ad->add_option("--out", ad.out, "output threshold map CSV")->required();
    c_ad->add_option("--trace", ad.trace, "per-iteration trace CSV");
    c_ad->add_option("--report", ad.report, "MSE-to-oracle report CSV");

    AnalyzeOpts an;
    auto* c_an = app.add_subcommand("analyze", "analytic tables");
    add_sensor_flags(c_an, an.sensor);
    c_an->add_option("--table", an.table, "snr|phase|crlb|dr")->required();
    c_an->add_option("--c-min", an.c_min, "intensity grid start");
    c_an->add_option("--c-max", an.c_max, "intensity grid end");
    c_an->add_option("--c-step", an.c_step, "intensity grid step");
    c_an->add_option("--c", an.c, "intensity for the phase table");
    c_an->add_option("--q-lo", an.q_lo, "threshold range start");
    c_an->add_option("--q-hi", an.q_hi, "threshold range end (default qmax)");
    c_an->add_option("--delta", an.delta, "admissibility delta");
    c_an->add_option("--taus", an.taus, "duty cycles, comma separated");
    c_an->add_option("--policy", an.policy, "dr policy: uniform|oracle");
    c_an->add_option("--q", an.q, "uniform threshold for dr");
    c_an->add_option("--theta-min", an.theta_min, "dr grid start");
    c_an->add_option("--theta-max", an.theta_max, "dr grid end");
    c_an->add_option("--points", an.points, "dr grid points");
    c_an->add_option("--floor", an.floor_db, "dr SNR floor in dB");
    c_an->add_option("--out", an.out, "output CSV")->required();

    HdrOpts hdr;
    auto* c_hdr = app.add_subcommand("hdr", "multi-exposure HDR pipeline");
    add_sensor_flags(c_hdr, hdr.sensor);
    c_hdr->add_option("--radiance", hdr.radiance, "radiance map CSV (>= 0)")->required();
    c_hdr->add_option("--taus", hdr.taus, "duty cycles, strictly decreasing");
    c_hdr->add_option("--policy", hdr.policy, "uniform|oracle|adapted");
    c_hdr->add_option("--q", hdr.q, "uniform threshold");
    c_hdr->add_option("--adapt-frames", hdr.adapt_frames, "adaptation frames per exposure");
    c_hdr->add_option("--out", hdr.out, "fused radiance CSV")->required();
    c_hdr->add_option("--pgm", hdr.pgm, "tone-mapped PGM output");
    c_hdr->add_option("--reference", hdr.reference, "reference radiance for PSNR");

    BenchOpts be;
    auto* c_be = app.add_subcommand("bench", "corpus PSNR benchmark over seeds");
    add_sensor_flags(c_be, be.sensor);
    c_be->add_option("--seeds", be.seeds, "number of seeds");
    c_be->add_option("--images", be.images, "synthetic corpus size");
    c_be->add_option("--size", be.size, "corpus image size WxH");
    c_be->add_option("--adapt-frames", be.adapt_frames, "adaptation frames for proposed");
    c_be->add_option("--tol", be.tol, "bisection bit-density tolerance");
    c_be->add_option("--uniform-qs", be.uniform_qs, "uniform thresholds to benchmark");
    c_be->add_option("--out", be.out, "output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (c_sim->parsed()) return cmd_simulate(sim);
        if (c_rc->parsed()) return cmd_reconstruct(rc);
        if (c_ad->parsed()) return cmd_adapt(ad);
        if (c_an->parsed()) return cmd_analyze(an);
        if (c_hdr->parsed()) return cmd_hdr(hdr);
        if (c_be->parsed()) return cmd_bench(be);
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
