// strefine: encode sweeps, BD comparison and plot-data export.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "strefine/experiment.hpp"
#include "strefine/simd/kernels.hpp"
#include "strefine/synthetic.hpp"
#include "strefine/video_io.hpp"

using namespace strefine;

namespace {

std::vector<std::string> split_list(const std::vector<std::string>& items)
{
    std::vector<std::string> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ','))
            if (!part.empty())
                out.push_back(part);
    }
    return out;
}

// "--iters N" sets every engine; "--iters fsa=200,rba=4" sets them one by one.
void apply_iters(ExperimentConfig& cfg, const std::vector<std::string>& items)
{
    for (const auto& item : split_list(items)) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            const int n = std::stoi(item);
            cfg.fsa_iterations = cfg.ba_iterations = cfg.rba_iterations = n;
            continue;
        }
        const Engine e = parse_engine(item.substr(0, eq));
        const int n = std::stoi(item.substr(eq + 1));
        switch (e) {
        case Engine::Fsa: cfg.fsa_iterations = n; break;
        case Engine::Ba: cfg.ba_iterations = n; break;
        case Engine::Rba: cfg.rba_iterations = n; break;
        case Engine::None: throw std::invalid_argument("--iters: engine 'none' has no iterations");
        }
    }
}

RDCurve single_curve(const std::filesystem::path& path)
{
    const auto curves = read_rd_csv(path);
    if (curves.size() != 1)
        throw std::invalid_argument("'" + path.string() + "' must hold exactly one engine, found " +
                                    std::to_string(curves.size()));
    return curves.begin()->second;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spatial refinement of motion-compensated prediction: experiment driver"};
    app.require_subcommand(1);

    // encode
    auto* encode = app.add_subcommand("encode", "run an RD sweep and write CSV results");
    std::string config_path, input, out_dir;
    std::vector<std::string> engines, qsteps, iters;
    std::optional<int> frames, width, height, cap, search_range, block_size, jobs;
    std::optional<double> mu, rho, tau, fps;
    encode->add_option("--config", config_path, "key = value configuration file (flags override it)");
    encode->add_option("--input", input, "Y4M file, raw YUV 4:2:0 file or directory of PGM frames");
    encode->add_option("--engine", engines, "none, fsa, ba, rba (repeatable or comma separated)");
    encode->add_option("--qsteps", qsteps, "quantiser step ladder, comma separated");
    encode->add_option("--frames", frames, "number of P-frames");
    encode->add_option("--out", out_dir, "output directory");
    encode->add_option("--mu", mu, "weight of the motion-compensated block");
    encode->add_option("--rho", rho, "decay of the neighbourhood weights");
    encode->add_option("--tau", tau, "RBA relaxation threshold");
    encode->add_option("--iters", iters, "iterations: N for all engines or engine=N pairs");
    encode->add_option("--cap", cap, "RBA functions per iteration");
    encode->add_option("--search-range", search_range, "motion search range in pixels");
    encode->add_option("--block-size", block_size, "macroblock size");
    encode->add_option("--width", width, "raw YUV width");
    encode->add_option("--height", height, "raw YUV height");
    encode->add_option("--fps", fps, "frame rate for kbit/s (default: from the input)");
    encode->add_option("--jobs", jobs, "parallel encodes");
    bool print_config = false;
    encode->add_flag("--print-config", print_config, "print the effective configuration and exit");

    // bd
    auto* bd = app.add_subcommand("bd", "BD rate reduction and PSNR gain of --test against --base");
    std::string base_csv, test_csv;
    bd->add_option("--base", base_csv, "RD CSV of the anchor")->required();
    bd->add_option("--test", test_csv, "RD CSV of the tested engine")->required();

    // plot
    auto* plot = app.add_subcommand("plot", "write per-engine plot tables from an RD CSV");
    std::string plot_csv, plot_out;
    plot->add_option("--csv", plot_csv, "RD CSV")->required();
    plot->add_option("--out", plot_out, "output directory (default: next to the CSV)");

    // synth
    auto* synth = app.add_subcommand("synth", "write the synthetic test sequence as Y4M");
    std::string synth_out;
    int synth_frames = 100;
    synth->add_option("--out", synth_out, "output .y4m path")->required();
    synth->add_option("--frames", synth_frames, "frame count");

    auto* info = app.add_subcommand("info", "print the selected SIMD kernel set");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (encode->parsed()) {
            ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
            if (!input.empty())
                cfg.input = input;
            if (!out_dir.empty())
                cfg.out_dir = out_dir;
            if (!engines.empty()) {
                cfg.engines.clear();
                for (const auto& e : split_list(engines))
                    cfg.engines.push_back(parse_engine(e));
            }
            if (!qsteps.empty()) {
                cfg.qsteps.clear();
                for (const auto& q : split_list(qsteps))
                    cfg.qsteps.push_back(std::stod(q));
            }
            apply_iters(cfg, iters);
            if (frames) cfg.frames = *frames;
            if (width) cfg.width = *width;
            if (height) cfg.height = *height;
            if (cap) cfg.cap = *cap;
            if (search_range) cfg.search_range = *search_range;
            if (block_size) cfg.block_size = *block_size;
            if (jobs) cfg.jobs = *jobs;
            if (mu) cfg.mu = *mu;
            if (rho) cfg.rho_hat = *rho;
            if (tau) cfg.tau = *tau;
            if (fps) cfg.fps = *fps;
            cfg.validate();
            if (print_config) {
                std::cout << serialize_config(cfg);
                return 0;
            }
            const ExperimentOutputs out = run_experiment(cfg);
            for (const auto& p : out.rd_csvs)
                std::cout << "wrote " << p.string() << '\n';
            std::cout << "wrote " << out.timing_csv.string() << '\n' << "wrote " << out.bd_csv.string() << '\n';
            for (const auto& [engine, r] : out.bd_rows)
                std::printf("%s vs none: BD rate reduction %.3f %%, BD PSNR gain %.4f dB\n", engine.c_str(),
                            r.rate_reduction_pct, r.psnr_gain_db);
        } else if (bd->parsed()) {
            const RDCurve base = single_curve(base_csv);
            const RDCurve test = single_curve(test_csv);
            const BdResult r = bd_metrics(base, test);
            std::printf("base=%s test=%s bd_rate_reduction_pct=%.6f bd_psnr_gain_db=%.6f\n", base.engine.c_str(),
                        test.engine.c_str(), r.rate_reduction_pct, r.psnr_gain_db);
        } else if (plot->parsed()) {
            for (const auto& p : emit_plot_data(plot_csv, plot_out))
                std::cout << "wrote " << p.string() << '\n';
        } else if (synth->parsed()) {
            SyntheticSequenceConfig sc;
            sc.frames = synth_frames;
            write_y4m(sequence_from_luma(make_synthetic_sequence(sc)), synth_out);
            std::cout << "wrote " << synth_out << '\n';
        } else if (info->parsed()) {
            std::cout << "kernels: " << simd::isa_name(simd::kernels().isa) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "strefine: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
