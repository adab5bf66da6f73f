#pragma once

// A small hybrid predictive coder used to measure what spatial refinement
// buys on top of block motion compensation: integer-pel full search, optional
// refinement of each macroblock's predictor with a 1-bit mode flag, uniform
// residual quantisation and an entropy-based rate estimate.

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "strefine/core_model.hpp"
#include "strefine/engines.hpp"
#include "strefine/plane.hpp"

namespace strefine {

struct MotionVector {
    int dx = 0;
    int dy = 0;
    bool operator==(const MotionVector&) const = default;
};

struct MotionResult {
    MotionVector mv;
    std::uint64_t ssd = 0;
    LumaPlane block;  ///< the displaced reference block
};

/// Exhaustive integer-pel search of cur_block (located at block_x, block_y)
/// in ref_frame. Candidates whose reference block would leave the frame are
/// skipped. Ties: smaller |dx| + |dy|, then smaller dy, then smaller dx.
MotionResult motion_search(const LumaPlane& cur_block, int block_x, int block_y, const LumaPlane& ref_frame,
                           int search_range);

struct RefinementParams {
    Engine engine = Engine::None;
    double mu = 0.5;
    double rho_hat = 0.8;
    EngineConfig fsa = EngineConfig::fsa_defaults();
    EngineConfig ba = EngineConfig::ba_defaults();
    EngineConfig rba = EngineConfig::rba_defaults();

    const EngineConfig& engine_config() const;
};

/// Refines motion-compensated blocks of one block size. Weight masks and
/// their projection contexts are cached per availability pattern, so one
/// instance should be reused across the blocks of a sequence. Not
/// thread-safe; use one per encoder or decoder.
class Refiner {
public:
    Refiner(int block_width, int block_height, RefinementParams params);

    const RefinementParams& params() const { return params_; }
    const PatchGeometry& geometry() const { return geometry_; }
    std::shared_ptr<const BasisSet> basis() const { return basis_; }

    /// Predictor for the patch's centre block. Returns mc_block unchanged
    /// for Engine::None or when the patch has no reconstructed samples.
    LumaPlane refine(const Patch& patch, const LumaPlane& mc_block);

    const ProjectionContext& context_for(const PatchGeometry& geometry);

private:
    RefinementParams params_;
    PatchGeometry geometry_;
    std::shared_ptr<const BasisSet> basis_;
    std::map<std::vector<Region>, std::unique_ptr<ProjectionContext>> contexts_;
};

/// One-shot convenience wrapper; prefer a long-lived Refiner in loops.
LumaPlane refine_block(const Patch& patch, const LumaPlane& mc_block, const RefinementParams& params);

struct ModeDecision {
    bool refined = false;
    std::uint64_t sse_mc = 0;
    std::uint64_t sse_refined = 0;
    LumaPlane chosen;
};

/// Picks the predictor with the smaller SSE against the original; ties keep
/// the unrefined one.
ModeDecision mode_decide(const LumaPlane& original, const LumaPlane& mc_pred, const LumaPlane& refined_pred);

struct QuantizedBlock {
    Plane<int> symbols;
    LumaPlane recon;
};

/// q = round(residual / qstep), recon = clip(round(predictor + q * qstep)).
QuantizedBlock quantize_and_reconstruct(const Plane<int>& residual, const LumaPlane& predictor, double qstep);

/// Length of the signed exp-Golomb code for v.
int signed_exp_golomb_bits(int v);

/// Zero-order empirical entropy of the symbols, in bits (count * H).
double symbol_entropy_bits(std::span<const int> symbols);

struct RateBreakdown {
    double residual_bits = 0.0;
    double mv_bits = 0.0;
    double flag_bits = 0.0;
    double total() const { return residual_bits + mv_bits + flag_bits; }
};

/// Bits for one frame: symbol entropy + exp-Golomb MV components + one bit
/// per macroblock when mode flags are signalled.
RateBreakdown rate_proxy(std::span<const int> symbols, std::span<const MotionVector> mvs, std::size_t flag_count);

inline constexpr double kPsnrCap = 99.0;

double mse(const LumaPlane& a, const LumaPlane& b);
/// 10 log10(255^2 / MSE); kPsnrCap for identical inputs.
double psnr(const LumaPlane& original, const LumaPlane& recon);

struct EncoderConfig {
    int block_size = 16;
    int search_range = 16;
    double fps = 30.0;
    RefinementParams refinement;
};

/// What a decoder receives for one frame.
struct CodedFrame {
    bool intra = false;
    std::vector<MotionVector> mvs;      ///< per macroblock, raster order (P only)
    std::vector<std::uint8_t> refined;  ///< per macroblock mode flag (P only)
    std::vector<int> symbols;           ///< per macroblock, raster order, each block row-major
};

struct FrameStats {
    double bits = 0.0;
    double psnr_db = 0.0;
    double pred_mse_mc = 0.0;      ///< MSE of the pure motion-compensated prediction
    double pred_mse_chosen = 0.0;  ///< MSE of the prediction actually used
    double refine_ms = 0.0;        ///< wall-clock time spent refining
    int refined_blocks = 0;
};

struct RDPoint {
    double qstep = 0.0;
    double rate_kbps = 0.0;
    double psnr_db = 0.0;
};

struct RDCurve {
    std::string engine;
    std::vector<RDPoint> points;  ///< ascending rate
};

struct EncodeResult {
    double qstep = 0.0;
    std::vector<CodedFrame> coded;
    std::vector<LumaPlane> recon;
    std::vector<FrameStats> stats;  ///< P-frames only, in order
    RDPoint point;                  ///< averaged over P-frames
    double mean_refine_ms = 0.0;    ///< per P-frame
};

/// Codes frames[0] as an intra frame (direct quantisation, no prediction) and
/// the rest as P-frames predicting from the previous reconstruction.
EncodeResult encode_frames(const std::vector<LumaPlane>& frames, double qstep, const EncoderConfig& config);

/// Rebuilds the reconstruction from the coded data alone.
std::vector<LumaPlane> decode_frames(const std::vector<CodedFrame>& coded, int width, int height, double qstep,
                                     const EncoderConfig& config);

struct SequenceResult {
    RDCurve curve;
    std::vector<EncodeResult> runs;  ///< one per qstep, ladder order
    double mean_refine_ms = 0.0;     ///< per P-frame, over all runs
};

SequenceResult encode_sequence(const std::vector<LumaPlane>& frames, std::span<const double> qsteps,
                               const EncoderConfig& config);

}  // namespace strefine
