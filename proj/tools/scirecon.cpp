// Command line front end: simulate measurements, reconstruct cubes, score
// results, render previews, and generate synthetic test content. Every
// command that produces artifacts also writes a JSON manifest with the fully
// resolved configuration, input digests, and diagnostics; a manifest can be
// fed back through --config to replay the run.
//
// Exit codes: 0 ok, 2 usage or invalid configuration, 3 parse failure,
// 4 dimension mismatch, 5 solver divergence.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scirecon/color.hpp"
#include "scirecon/core.hpp"
#include "scirecon/metrics.hpp"
#include "scirecon/noise.hpp"
#include "scirecon/png_io.hpp"
#include "scirecon/scene.hpp"
#include "scirecon/scube_io.hpp"
#include "scirecon/sensing.hpp"
#include "scirecon/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scirecon;

namespace {

std::string hex_digest(uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Cube<double> to_double(const Cube<float>& c) {
    Cube<double> out(c.channels, c.rows, c.cols);
    for (size_t i = 0; i < c.data.size(); ++i) out.data[i] = static_cast<double>(c.data[i]);
    return out;
}

Cube<float> to_float(const Cube<double>& c) {
    Cube<float> out(c.channels, c.rows, c.cols);
    for (size_t i = 0; i < c.data.size(); ++i) out.data[i] = static_cast<float>(c.data[i]);
    return out;
}

void ensure_writable(const fs::path& p, bool force) {
    if (fs::exists(p) && !force)
        throw ConfigError("refusing to overwrite " + p.string() + " (pass --force)");
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

fs::path manifest_path(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError("cannot write " + path.string());
    f << text;
    if (!f) throw ParseError("write failed on " + path.string());
}

json file_entry(const std::string& path) {
    return {{"path", path}, {"fnv1a64", hex_digest(file_digest(path))}};
}

// ---- config file handling -------------------------------------------------
// Values resolve as: command line flag > --config JSON > built-in default.
// A run manifest doubles as a config file; its "config" member is used and
// unrelated keys are ignored.

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return j;
}

json effective_config(int argc, char** argv) {
    std::string path;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) path = argv[i + 1];
        else if (a.rfind("--config=", 0) == 0) path = a.substr(9);
    }
    if (path.empty()) return json::object();
    json j = load_json_file(path);
    if (!j.is_object()) throw ParseError(path + ": config root must be a JSON object");
    if (j.contains("config") && j.at("config").is_object()) return j.at("config");
    return j;
}

void wrong_type(const char* key) {
    throw ConfigError(std::string("config: unexpected type for \"") + key + "\"");
}

void jload(const json& j, const char* key, double& into) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!j.at(key).is_number()) wrong_type(key);
    into = j.at(key).get<double>();
}

void jload(const json& j, const char* key, int& into) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!j.at(key).is_number_integer()) wrong_type(key);
    into = j.at(key).get<int>();
}

void jload(const json& j, const char* key, long& into) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!j.at(key).is_number_integer()) wrong_type(key);
    into = j.at(key).get<long>();
}

void jload(const json& j, const char* key, uint64_t& into) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<int64_t>() < 0))
        wrong_type(key);
    into = v.get<uint64_t>();
}

void jload(const json& j, const char* key, bool& into) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!j.at(key).is_boolean()) wrong_type(key);
    into = j.at(key).get<bool>();
}

void jload(const json& j, const char* key, std::string& into) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!j.at(key).is_string()) wrong_type(key);
    into = j.at(key).get<std::string>();
}

void jload(const json& j, const char* key, std::vector<int>& into) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    const auto& v = j.at(key);
    if (!v.is_array()) wrong_type(key);
    std::vector<int> out;
    for (const auto& e : v) {
        if (!e.is_number_integer()) wrong_type(key);
        out.push_back(e.get<int>());
    }
    into = std::move(out);
}

// ---- shared pieces ---------------------------------------------------------

ScubeData read_single_channel(const std::string& path, const char* what) {
    ScubeData d = read_scube(path);
    if (d.cube.channels != 1)
        throw DimensionError(std::string(what) + " must be a single-channel file: " + path);
    return d;
}

json trace_json(const std::vector<IterationDiag>& trace) {
    json arr = json::array();
    for (const auto& d : trace) {
        json e = {{"iter", d.k},
                  {"fidelity", d.fidelity},
                  {"prior_residual", d.prior_residual},
                  {"eta", d.eta},
                  {"inner_iters", d.inner_iters}};
        if (std::isfinite(d.inner_final_loss)) e["inner_final_loss"] = d.inner_final_loss;
        if (std::isfinite(d.psnr_db)) e["psnr_db"] = d.psnr_db;
        arr.push_back(std::move(e));
    }
    return arr;
}

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::string cube_path, mask_path, out, config_path;
    int shift = 1;
    double snr = -1.0;  // negative: noiseless
    uint64_t seed = 0;
    bool force = false;
};

int run_simulate(const SimulateArgs& a) {
    ScubeData cube_f = read_scube(a.cube_path);
    ScubeData mask_f = read_single_channel(a.mask_path, "mask");
    Cube<double> cube = to_double(cube_f.cube);
    SensingOperator<double> op(to_double(mask_f.cube), ShiftSpec{a.shift}, cube.channels);

    Cube<double> y = op.encode(cube);
    json diagnostics = json::object();
    if (a.snr >= 0.0) {
        NoisyMeasurement<double> noisy = add_poisson_noise(y, a.snr, a.seed);
        y = std::move(noisy.noisy);
        diagnostics["achieved_snr_db"] = noisy.achieved_snr_db;
        diagnostics["photon_scale"] = noisy.alpha;
        std::cout << "simulate: achieved SNR " << noisy.achieved_snr_db << " dB\n";
    }

    ensure_writable(a.out, a.force);
    ensure_writable(manifest_path(a.out), a.force);
    write_scube(a.out, to_float(y));

    json manifest = {
        {"command", "simulate"},
        {"config",
         {{"shift", a.shift},
          {"snr", a.snr >= 0.0 ? json(a.snr) : json(nullptr)},
          {"seed", a.seed}}},
        {"inputs", {{"cube", file_entry(a.cube_path)}, {"mask", file_entry(a.mask_path)}}},
        {"outputs", {{"measurement", file_entry(a.out)}}},
        {"diagnostics", diagnostics}};
    write_text(manifest_path(a.out), manifest.dump(2) + "\n");
    std::cout << "simulate: wrote " << a.out << " (" << y.rows << "x" << y.cols << ")\n";
    return 0;
}

// ---- reconstruct ------------------------------------------------------------

struct ReconstructArgs {
    std::string meas_path, mask_path, out, truth_path, config_path;
    std::string mode = "pnp_dip", u_denoiser = "tv", sf_denoiser = "identity";
    int shift = 1;
    int channels = 0;  // 0: infer from the measurement width
    double mu = 0.01, rho = 0.001, eta = -1.0, eta_decay = -1.0, lambda = -1.0;
    int outer_iters = 80, inner_base = 100, inner_step = 25, inner_cap = 900;
    double lr = 0.001;
    long sole_iters = 0;
    int tv_iters = 50, levels = 3;
    std::vector<int> widths = {16, 32, 64};
    bool warm_start = false, normalized_init = false;
    int warm_iters = 20;
    double warm_eta = 0.01, warm_lambda = 0.001;
    uint64_t seed = 0;
    std::vector<uint64_t> seeds;  // overrides --seed when given
    int jobs = 1;
    bool force = false;
};

void apply_config(const json& cfg, ReconstructArgs& a) {
    jload(cfg, "mode", a.mode);
    jload(cfg, "shift", a.shift);
    jload(cfg, "channels", a.channels);
    jload(cfg, "mu", a.mu);
    jload(cfg, "rho", a.rho);
    jload(cfg, "eta", a.eta);
    jload(cfg, "eta_decay", a.eta_decay);
    jload(cfg, "lambda", a.lambda);
    jload(cfg, "outer_iters", a.outer_iters);
    jload(cfg, "inner_base", a.inner_base);
    jload(cfg, "inner_step", a.inner_step);
    jload(cfg, "inner_cap", a.inner_cap);
    jload(cfg, "lr", a.lr);
    jload(cfg, "sole_iters", a.sole_iters);
    jload(cfg, "tv_iters", a.tv_iters);
    jload(cfg, "u_denoiser", a.u_denoiser);
    jload(cfg, "sf_denoiser", a.sf_denoiser);
    jload(cfg, "levels", a.levels);
    jload(cfg, "widths", a.widths);
    jload(cfg, "warm_start", a.warm_start);
    jload(cfg, "warm_iters", a.warm_iters);
    jload(cfg, "warm_eta", a.warm_eta);
    jload(cfg, "warm_lambda", a.warm_lambda);
    jload(cfg, "normalized_init", a.normalized_init);
    jload(cfg, "seed", a.seed);
}

SolverConfig solver_config_from(const ReconstructArgs& a) {
    SolverConfig cfg;
    cfg.mode = solver_mode_from_string(a.mode);
    cfg.mu = a.mu;
    cfg.rho = a.rho;
    cfg.eta = a.eta;
    cfg.eta_decay = a.eta_decay;
    cfg.lambda = a.lambda;
    cfg.outer_iters = a.outer_iters;
    cfg.inner = InnerPlan{a.inner_base, a.inner_step, a.inner_cap};
    cfg.lr = a.lr;
    cfg.sole_iters = a.sole_iters;
    cfg.tv_iters = a.tv_iters;
    cfg.u_denoiser = denoiser_kind_from_string(a.u_denoiser);
    cfg.sf_denoiser = denoiser_kind_from_string(a.sf_denoiser);
    cfg.levels = a.levels;
    cfg.widths = a.widths;
    cfg.warm_start = a.warm_start;
    cfg.warm_iters = a.warm_iters;
    cfg.warm_eta = a.warm_eta;
    cfg.warm_lambda = a.warm_lambda;
    cfg.normalized_init = a.normalized_init;
    cfg.seed = a.seed;
    return cfg;
}

json solver_config_json(const SolverConfig& cfg, int shift, int channels) {
    return {{"mode", to_string(cfg.mode)},
            {"shift", shift},
            {"channels", channels},
            {"mu", cfg.mu},
            {"rho", cfg.rho},
            {"eta", cfg.eta},
            {"eta_decay", cfg.eta_decay},
            {"lambda", cfg.lambda},
            {"outer_iters", cfg.outer_iters},
            {"inner_base", cfg.inner.base},
            {"inner_step", cfg.inner.step},
            {"inner_cap", cfg.inner.cap},
            {"lr", cfg.lr},
            {"sole_iters", cfg.sole_iters},
            {"tv_iters", cfg.tv_iters},
            {"u_denoiser", to_string(cfg.u_denoiser)},
            {"sf_denoiser", to_string(cfg.sf_denoiser)},
            {"levels", cfg.levels},
            {"widths", cfg.widths},
            {"warm_start", cfg.warm_start},
            {"warm_iters", cfg.warm_iters},
            {"warm_eta", cfg.warm_eta},
            {"warm_lambda", cfg.warm_lambda},
            {"normalized_init", cfg.normalized_init},
            {"seed", cfg.seed}};
}

fs::path seeded_out(const fs::path& out, uint64_t seed, bool multi) {
    if (!multi) return out;
    fs::path p = out;
    const std::string ext = p.extension().string();
    p.replace_extension();
    return fs::path(p.string() + "_seed" + std::to_string(seed) + ext);
}

int run_reconstruct(const ReconstructArgs& a) {
    ScubeData meas_f = read_single_channel(a.meas_path, "measurement");
    ScubeData mask_f = read_single_channel(a.mask_path, "mask");
    Cube<double> y = to_double(meas_f.cube);
    Cube<double> mask = to_double(mask_f.cube);

    int channels = a.channels;
    if (channels <= 0) {
        if (a.shift <= 0)
            throw ConfigError("reconstruct: --channels is required when --shift is 0");
        const int extra = y.cols - mask.cols;
        if (extra < 0 || extra % a.shift != 0)
            throw DimensionError("measurement width is not mask width + shift*(channels-1)");
        channels = extra / a.shift + 1;
    }
    SensingOperator<double> op(mask, ShiftSpec{a.shift}, channels);
    op.check_measurement(y);

    Cube<double> truth;
    std::vector<float> out_wl;  // wavelengths to carry into the output, when known
    const bool have_truth = !a.truth_path.empty();
    if (have_truth) {
        ScubeData truth_f = read_scube(a.truth_path);
        truth = to_double(truth_f.cube);
        op.check_cube(truth);
        out_wl = std::move(truth_f.wavelengths);
    }

    // Validate the configuration before any output is touched.
    SolverConfig base = resolve_config(solver_config_from(a));

    std::vector<uint64_t> run_seeds = a.seeds.empty() ? std::vector<uint64_t>{a.seed} : a.seeds;
    const bool multi = run_seeds.size() > 1;

    std::mutex io_mutex;
    std::atomic<int> exit_code{0};
    std::atomic<size_t> next{0};

    auto run_one = [&](uint64_t seed) {
        SolverConfig cfg = base;
        cfg.seed = seed;
        auto [cube, report] = reconstruct<double>(cfg, op, y, have_truth ? &truth : nullptr);

        const fs::path out = seeded_out(a.out, seed, multi);
        json manifest = {{"command", "reconstruct"},
                         {"config", solver_config_json(report.config, a.shift, channels)},
                         {"inputs",
                          {{"measurement", file_entry(a.meas_path)},
                           {"mask", file_entry(a.mask_path)}}}};
        if (have_truth) manifest["inputs"]["truth"] = file_entry(a.truth_path);

        json diag = {{"trace", trace_json(report.trace)},
                     {"diverged", report.diverged},
                     {"generator_steps", report.generator_steps},
                     {"denoiser_calls", report.denoiser_calls}};
        if (!report.warm_trace.empty()) diag["warm_trace"] = trace_json(report.warm_trace);
        if (std::isfinite(report.final_fidelity)) diag["final_fidelity"] = report.final_fidelity;
        if (std::isfinite(report.final_rel_fidelity))
            diag["final_rel_fidelity"] = report.final_rel_fidelity;
        if (std::isfinite(report.final_psnr_db)) diag["final_psnr_db"] = report.final_psnr_db;
        if (std::isfinite(report.final_ssim)) diag["final_ssim"] = report.final_ssim;
        if (!report.divergence_note.empty()) diag["divergence_note"] = report.divergence_note;
        manifest["diagnostics"] = std::move(diag);

        json stages = json::object();
        for (const auto& [name, sec] : report.stage_seconds) stages[name] = sec;
        manifest["timings"] = {{"stages", stages}, {"total_seconds", report.total_seconds}};

        std::lock_guard<std::mutex> lock(io_mutex);
        ensure_writable(manifest_path(out), a.force);
        if (report.diverged) {
            // Keep the diagnostics, skip the unusable cube.
            write_text(manifest_path(out), manifest.dump(2) + "\n");
            std::cerr << "reconstruct: diverged (" << report.divergence_note << ")\n";
            exit_code = 5;
            return;
        }
        ensure_writable(out, a.force);
        write_scube(out.string(), to_float(cube), out_wl.empty() ? nullptr : &out_wl);
        manifest["outputs"] = {{"cube", file_entry(out.string())}};
        write_text(manifest_path(out), manifest.dump(2) + "\n");
        std::cout << "reconstruct: seed " << seed << " wrote " << out.string();
        if (std::isfinite(report.final_psnr_db))
            std::cout << "  psnr " << report.final_psnr_db << " dB";
        std::cout << "  rel fidelity " << report.final_rel_fidelity << "\n";
    };

    if (a.jobs <= 1 || run_seeds.size() == 1) {
        for (uint64_t s : run_seeds) run_one(s);
    } else {
        // Workers must not leak exceptions; report and keep the first code.
        auto guarded = [&](uint64_t s) {
            int code = 0;
            std::string what;
            try {
                run_one(s);
                return;
            } catch (const ConfigError& e) {
                code = 2;
                what = e.what();
            } catch (const ParseError& e) {
                code = 3;
                what = e.what();
            } catch (const DimensionError& e) {
                code = 4;
                what = e.what();
            } catch (const std::exception& e) {
                code = 2;
                what = e.what();
            }
            std::lock_guard<std::mutex> lock(io_mutex);
            std::cerr << "error (seed " << s << "): " << what << "\n";
            int expected = 0;
            exit_code.compare_exchange_strong(expected, code);
        };
        const size_t workers = std::min<size_t>(static_cast<size_t>(a.jobs), run_seeds.size());
        std::vector<std::thread> pool;
        for (size_t t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < run_seeds.size(); i = next.fetch_add(1))
                    guarded(run_seeds[i]);
            });
        for (auto& th : pool) th.join();
    }
    return exit_code.load();
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
    std::string truth_path, est_path, regions_path, csv_path, config_path;
    bool force = false;
};

int run_evaluate(const EvaluateArgs& a) {
    Cube<double> truth = to_double(read_scube(a.truth_path).cube);
    Cube<double> est = to_double(read_scube(a.est_path).cube);

    ChannelMetric p = psnr(truth, est);
    ChannelMetric s = ssim(truth, est);

    std::printf("channel    psnr_db      ssim\n");
    for (int m = 0; m < truth.channels; ++m)
        std::printf("%7d %10.4f %9.5f\n", m, p.per_channel[m], s.per_channel[m]);
    std::printf("    avg %10.4f %9.5f\n", p.average, s.average);
    if (p.identical) std::printf("inputs are identical (zero error on every channel)\n");

    json region_report = json::array();
    if (!a.regions_path.empty()) {
        json regions = load_json_file(a.regions_path);
        if (!regions.is_array()) throw ParseError(a.regions_path + ": expected a JSON array");
        for (const auto& r : regions) {
            if (!r.is_object()) throw ParseError(a.regions_path + ": regions must be objects");
            Region reg;
            std::string name = "region" + std::to_string(region_report.size());
            jload(r, "name", name);
            jload(r, "row", reg.row);
            jload(r, "col", reg.col);
            jload(r, "height", reg.height);
            jload(r, "width", reg.width);
            const double corr = spectral_correlation(truth, est, reg);
            std::printf("region %-12s spectral correlation %9.5f\n", name.c_str(), corr);
            region_report.push_back({{"name", name},
                                     {"row", reg.row},
                                     {"col", reg.col},
                                     {"height", reg.height},
                                     {"width", reg.width},
                                     {"correlation", corr}});
        }
    }

    if (!a.csv_path.empty()) {
        std::string csv = "channel,psnr_db,ssim\n";
        for (int m = 0; m < truth.channels; ++m)
            csv += std::to_string(m) + "," + csv_double(p.per_channel[m]) + "," +
                   csv_double(s.per_channel[m]) + "\n";
        csv += "avg," + csv_double(p.average) + "," + csv_double(s.average) + "\n";
        ensure_writable(a.csv_path, a.force);
        ensure_writable(manifest_path(a.csv_path), a.force);
        write_text(a.csv_path, csv);

        json manifest = {
            {"command", "evaluate"},
            {"inputs", {{"truth", file_entry(a.truth_path)}, {"est", file_entry(a.est_path)}}},
            {"outputs", {{"csv", file_entry(a.csv_path)}}},
            {"diagnostics",
             {{"psnr_db", p.average},
              {"ssim", s.average},
              {"identical", p.identical},
              {"regions", region_report}}}};
        write_text(manifest_path(a.csv_path), manifest.dump(2) + "\n");
    }
    return 0;
}

// ---- render -----------------------------------------------------------------

struct RenderArgs {
    std::string cube_path, out_dir, config_path;
    std::vector<int> channels;
    bool srgb = false;
    bool force = false;
};

int run_render(const RenderArgs& a) {
    if (a.channels.empty() && !a.srgb)
        throw ConfigError("render: nothing to do; pass --channels and/or --srgb");
    ScubeData data = read_scube(a.cube_path);
    Cube<double> cube = to_double(data.cube);
    const std::string stem = fs::path(a.cube_path).stem().string();
    fs::create_directories(a.out_dir);

    json outputs = json::object();
    for (int c : a.channels) {
        if (c < 0 || c >= cube.channels)
            throw ConfigError("render: channel " + std::to_string(c) + " out of range");
        char name[64];
        std::snprintf(name, sizeof name, "%s_ch%02d.png", stem.c_str(), c);
        const fs::path out = fs::path(a.out_dir) / name;
        ensure_writable(out, a.force);
        write_png_gray(out.string(), render_gray(cube, c), cube.cols, cube.rows);
        outputs[std::string("channel_") + std::to_string(c)] = file_entry(out.string());
    }
    if (a.srgb) {
        if (data.wavelengths.empty())
            throw ConfigError("render: --srgb needs wavelength metadata in the cube file");
        std::vector<double> wl(data.wavelengths.begin(), data.wavelengths.end());
        const fs::path out = fs::path(a.out_dir) / (stem + "_srgb.png");
        ensure_writable(out, a.force);
        write_png_rgb(out.string(), render_srgb(cube, wl), cube.cols, cube.rows);
        outputs["srgb"] = file_entry(out.string());
    }

    const fs::path mpath = fs::path(a.out_dir) / (stem + "_render.manifest.json");
    ensure_writable(mpath, a.force);
    json manifest = {{"command", "render"},
                     {"config", {{"channels", a.channels}, {"srgb", a.srgb}}},
                     {"inputs", {{"cube", file_entry(a.cube_path)}}},
                     {"outputs", outputs}};
    write_text(mpath, manifest.dump(2) + "\n");
    std::cout << "render: wrote " << outputs.size() << " file(s) under " << a.out_dir << "\n";
    return 0;
}

// ---- scene ------------------------------------------------------------------

struct SceneArgs {
    std::string out, mask_out, config_path;
    std::string kind = "piecewise";
    int channels = 8, rows = 64, cols = 64;
    uint64_t seed = 0, mask_seed = 1;
    double mask_open = 0.5;
    bool force = false;
};

int run_scene(const SceneArgs& a) {
    if (a.channels < 1 || a.rows < 1 || a.cols < 1)
        throw ConfigError("scene: dimensions must be positive");
    Cube<float> cube;
    if (a.kind == "piecewise")
        cube = make_scene<float>(a.channels, a.rows, a.cols, a.seed);
    else if (a.kind == "textured")
        cube = make_textured_scene<float>(a.channels, a.rows, a.cols, a.seed);
    else
        throw ConfigError("scene: unknown kind '" + a.kind + "' (piecewise or textured)");
    std::vector<float> wl = default_wavelengths(a.channels);

    ensure_writable(a.out, a.force);
    ensure_writable(manifest_path(a.out), a.force);
    write_scube(a.out, cube, &wl);
    json outputs = {{"cube", file_entry(a.out)}};

    if (!a.mask_out.empty()) {
        ensure_writable(a.mask_out, a.force);
        write_scube(a.mask_out, make_mask<float>(a.rows, a.cols, a.mask_seed, a.mask_open));
        outputs["mask"] = file_entry(a.mask_out);
    }

    json manifest = {{"command", "scene"},
                     {"config",
                      {{"kind", a.kind},
                       {"channels", a.channels},
                       {"rows", a.rows},
                       {"cols", a.cols},
                       {"seed", a.seed},
                       {"mask_seed", a.mask_seed},
                       {"mask_open", a.mask_open}}},
                     {"outputs", outputs}};
    write_text(manifest_path(a.out), manifest.dump(2) + "\n");
    std::cout << "scene: wrote " << a.out << " (" << a.channels << "x" << a.rows << "x"
              << a.cols << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Snapshot spectral imaging: simulation, reconstruction, evaluation"};
    app.require_subcommand(1);

    SimulateArgs sim;
    ReconstructArgs rec;
    EvaluateArgs eva;
    RenderArgs ren;
    SceneArgs scn;
    int rc = 0;

    try {
        const json cfg = effective_config(argc, argv);
        apply_config(cfg, rec);
        jload(cfg, "shift", sim.shift);
        jload(cfg, "snr", sim.snr);
        jload(cfg, "seed", sim.seed);
        jload(cfg, "kind", scn.kind);
        jload(cfg, "channels", scn.channels);
        jload(cfg, "rows", scn.rows);
        jload(cfg, "cols", scn.cols);
        jload(cfg, "seed", scn.seed);
        jload(cfg, "mask_seed", scn.mask_seed);
        jload(cfg, "mask_open", scn.mask_open);

        auto* s = app.add_subcommand("simulate", "Encode a cube into a coded measurement");
        s->add_option("cube", sim.cube_path, "input spectral cube")->required();
        s->add_option("mask", sim.mask_path, "coding mask (single channel)")->required();
        s->add_option("--out", sim.out, "output measurement file")->required();
        s->add_option("--shift", sim.shift, "dispersion step in pixels per channel");
        s->add_option("--snr", sim.snr, "target Poisson SNR in dB (omit for noiseless)");
        s->add_option("--seed", sim.seed, "noise seed");
        s->add_option("--config", sim.config_path, "JSON config or previous manifest");
        s->add_flag("--force", sim.force, "overwrite existing outputs");
        s->callback([&] { rc = run_simulate(sim); });

        auto* r = app.add_subcommand("reconstruct", "Recover a cube from a measurement");
        r->add_option("measurement", rec.meas_path, "measurement file")->required();
        r->add_option("mask", rec.mask_path, "coding mask (single channel)")->required();
        r->add_option("--out", rec.out, "output cube file")->required();
        r->add_option("--mode", rec.mode, "pnp_dip | pnp_dip_tv | single_fidelity | sole_dip | admm_tv");
        r->add_option("--shift", rec.shift, "dispersion step used at capture");
        r->add_option("--channels", rec.channels, "cube channels (inferred when omitted)");
        r->add_option("--outer", rec.outer_iters, "outer iterations");
        r->add_option("--mu", rec.mu, "proximity weight");
        r->add_option("--rho", rec.rho, "measurement weight in generator training");
        r->add_option("--eta", rec.eta, "TV split weight");
        r->add_option("--eta-decay", rec.eta_decay, "per-iteration eta factor");
        r->add_option("--lambda", rec.lambda, "TV strength");
        r->add_option("--inner-base", rec.inner_base, "generator steps at iteration 0");
        r->add_option("--inner-step", rec.inner_step, "generator step growth per iteration");
        r->add_option("--inner-cap", rec.inner_cap, "generator step ceiling");
        r->add_option("--lr", rec.lr, "generator learning rate");
        r->add_option("--sole-iters", rec.sole_iters, "steps for sole_dip (0: auto)");
        r->add_option("--tv-iters", rec.tv_iters, "denoiser iterations");
        r->add_option("--u-denoiser", rec.u_denoiser, "split denoiser: tv | identity");
        r->add_option("--sf-denoiser", rec.sf_denoiser, "single_fidelity denoiser: identity | tv");
        r->add_option("--levels", rec.levels, "generator encoder depth");
        r->add_option("--widths", rec.widths, "generator channel widths")->delimiter(',');
        r->add_flag("--warm-start,!--no-warm-start", rec.warm_start, "start from a TV-only run");
        r->add_option("--warm-iters", rec.warm_iters, "warm start iterations");
        r->add_option("--warm-eta", rec.warm_eta, "warm start eta");
        r->add_option("--warm-lambda", rec.warm_lambda, "warm start TV strength");
        r->add_flag("--normalized-init,!--no-normalized-init", rec.normalized_init,
                    "scale the adjoint initialization");
        r->add_option("--seed", rec.seed, "run seed");
        r->add_option("--seeds", rec.seeds, "run several seeds")->delimiter(',');
        r->add_option("--jobs", rec.jobs, "concurrent runs for --seeds");
        r->add_option("--truth", rec.truth_path, "ground truth cube for trace PSNR");
        r->add_option("--config", rec.config_path, "JSON config or previous manifest");
        r->add_flag("--force", rec.force, "overwrite existing outputs");
        r->callback([&] { rc = run_reconstruct(rec); });

        auto* e = app.add_subcommand("evaluate", "Score a reconstruction against ground truth");
        e->add_option("truth", eva.truth_path, "reference cube")->required();
        e->add_option("estimate", eva.est_path, "estimated cube")->required();
        e->add_option("--regions", eva.regions_path, "JSON file of regions for spectral correlation");
        e->add_option("--csv", eva.csv_path, "write per-channel metrics as CSV");
        e->add_option("--config", eva.config_path, "JSON config (unused keys ignored)");
        e->add_flag("--force", eva.force, "overwrite existing outputs");
        e->callback([&] { rc = run_evaluate(eva); });

        auto* d = app.add_subcommand("render", "Export channel grayscale and sRGB previews");
        d->add_option("cube", ren.cube_path, "input spectral cube")->required();
        d->add_option("--out", ren.out_dir, "output directory")->required();
        d->add_option("--channels", ren.channels, "channel indices to render")->delimiter(',');
        d->add_flag("--srgb", ren.srgb, "render an sRGB preview (needs wavelengths)");
        d->add_option("--config", ren.config_path, "JSON config (unused keys ignored)");
        d->add_flag("--force", ren.force, "overwrite existing outputs");
        d->callback([&] { rc = run_render(ren); });

        auto* g = app.add_subcommand("scene", "Generate a synthetic cube and coding mask");
        g->add_option("--kind", scn.kind, "scene family: piecewise or textured");
        g->add_option("--channels", scn.channels, "spectral channels");
        g->add_option("--rows", scn.rows, "spatial rows");
        g->add_option("--cols", scn.cols, "spatial columns");
        g->add_option("--seed", scn.seed, "scene seed");
        g->add_option("--mask-seed", scn.mask_seed, "mask seed");
        g->add_option("--mask-open", scn.mask_open, "mask open fraction");
        g->add_option("--out", scn.out, "output cube file")->required();
        g->add_option("--mask", scn.mask_out, "also write a mask file");
        g->add_option("--config", scn.config_path, "JSON config or previous manifest");
        g->add_flag("--force", scn.force, "overwrite existing outputs");
        g->callback([&] { rc = run_scene(scn); });

        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}
