#pragma once

// Experiment orchestration: configuration, RD sweeps per engine, CSV output.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "strefine/bd_metrics.hpp"
#include "strefine/engines.hpp"
#include "strefine/harness.hpp"

namespace strefine {

struct ExperimentConfig {
    std::string input;
    int width = 0;   ///< raw YUV only
    int height = 0;  ///< raw YUV only
    std::vector<Engine> engines{Engine::None, Engine::Fsa, Engine::Rba};
    std::vector<double> qsteps{2, 4, 8, 16, 32, 64};
    int block_size = 16;
    int search_range = 16;
    double mu = 0.5;
    double rho_hat = 0.8;
    double tau = 0.5;
    int fsa_iterations = 200;
    int ba_iterations = 20;
    int rba_iterations = 4;
    int cap = 20;
    int frames = 99;   ///< P-frames; one more frame is read for the intra frame
    double fps = 0.0;  ///< 0: take the input's frame rate
    int jobs = 1;
    std::string out_dir = "results";

    EncoderConfig encoder_config(Engine engine, double input_fps) const;
    void validate() const;
};

/// Flat "key = value" text, one key per line, fixed key order.
std::string serialize_config(const ExperimentConfig& config);
/// Parses serialize_config output; '#' starts a comment. Keys not present
/// keep their defaults; unknown keys throw std::invalid_argument.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ExperimentOutputs {
    std::vector<std::filesystem::path> rd_csvs;  ///< one per engine
    std::filesystem::path timing_csv;
    std::filesystem::path bd_csv;
    std::map<std::string, RDCurve> curves;
    std::vector<std::pair<std::string, BdResult>> bd_rows;
};

/// Encodes the input once per (engine, qstep) and writes
///   <seq>_<engine>_rd.csv   engine,qstep,rate_kbps,psnr_db
///   <seq>_timing.csv        engine,qstep,frame,refine_ms
///   <seq>_bd.csv            engine,base,bd_rate_reduction_pct,bd_psnr_gain_db
/// BD rows compare every refining engine with "none" when it was run. On
/// failure the files written so far end with a "#FAILED" row and the error
/// is rethrown.
ExperimentOutputs run_experiment(const ExperimentConfig& config);

/// Same, on frames already in memory.
ExperimentOutputs run_experiment(const ExperimentConfig& config, const std::vector<LumaPlane>& frames,
                                 const std::string& sequence_name, double input_fps);

std::string format_rd_csv(const RDCurve& curve);
/// Curves keyed by engine, points in file order.
std::map<std::string, RDCurve> read_rd_csv(const std::filesystem::path& path);

/// Writes one whitespace-separated table per engine next to the CSV (or in
/// out_dir): "<stem>_<engine>.dat" with a header row and rows sorted by
/// ascending rate. Returns the files written.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& csv,
                                                  const std::filesystem::path& out_dir = {});

}  // namespace strefine
