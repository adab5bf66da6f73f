#include "strefine/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "strefine/simd/kernels.hpp"

namespace strefine {

MotionResult motion_search(const LumaPlane& cur_block, int block_x, int block_y, const LumaPlane& ref_frame,
                           int search_range)
{
    if (search_range < 0)
        throw std::invalid_argument("motion_search: negative search range");
    const int bw = cur_block.width();
    const int bh = cur_block.height();
    if (block_x < 0 || block_y < 0 || block_x + bw > ref_frame.width() || block_y + bh > ref_frame.height())
        throw std::invalid_argument("motion_search: block lies outside the reference frame");

    const auto& kern = simd::kernels();
    const int dx_lo = std::max(-search_range, -block_x);
    const int dx_hi = std::min(search_range, ref_frame.width() - bw - block_x);
    const int dy_lo = std::max(-search_range, -block_y);
    const int dy_hi = std::min(search_range, ref_frame.height() - bh - block_y);

    MotionResult best;
    bool found = false;
    int best_cost = 0;
    for (int dy = dy_lo; dy <= dy_hi; ++dy)
        for (int dx = dx_lo; dx <= dx_hi; ++dx) {
            const std::uint64_t ssd = kern.ssd_u8(cur_block.data(), bw, &ref_frame.at(block_x + dx, block_y + dy),
                                                  ref_frame.width(), bw, bh);
            const int cost = std::abs(dx) + std::abs(dy);
            bool take = !found || ssd < best.ssd;
            if (found && ssd == best.ssd) {
                if (cost != best_cost)
                    take = cost < best_cost;
                else if (dy != best.mv.dy)
                    take = dy < best.mv.dy;
                else
                    take = dx < best.mv.dx;
            }
            if (take) {
                found = true;
                best.ssd = ssd;
                best.mv = {dx, dy};
                best_cost = cost;
            }
        }
    best.block = crop(ref_frame, block_x + best.mv.dx, block_y + best.mv.dy, bw, bh);
    return best;
}

const EngineConfig& RefinementParams::engine_config() const
{
    switch (engine) {
    case Engine::Fsa:
        return fsa;
    case Engine::Ba:
        return ba;
    case Engine::Rba:
    case Engine::None:
        break;
    }
    return rba;
}

Refiner::Refiner(int block_width, int block_height, RefinementParams params)
    : params_(std::move(params)),
      geometry_(block_width, block_height),
      basis_(std::make_shared<const BasisSet>(geometry_.rows(), geometry_.cols()))
{
    // Validate eagerly so bad parameters fail before any block is coded.
    (void)build_weight_mask(geometry_, params_.mu, params_.rho_hat);
    params_.engine_config().validate();
}

const ProjectionContext& Refiner::context_for(const PatchGeometry& geometry)
{
    const std::vector<Region> key(geometry.labels().begin(), geometry.labels().end());
    auto it = contexts_.find(key);
    if (it == contexts_.end()) {
        const WeightMask mask = build_weight_mask(geometry, params_.mu, params_.rho_hat);
        it = contexts_.emplace(key, std::make_unique<ProjectionContext>(basis_, mask)).first;
    }
    return *it->second;
}

LumaPlane Refiner::refine(const Patch& patch, const LumaPlane& mc_block)
{
    if (params_.engine == Engine::None || patch.geometry.count(Region::Reconstructed) == 0)
        return mc_block;
    if (patch.geometry.block_width() != geometry_.block_width() ||
        patch.geometry.block_height() != geometry_.block_height())
        throw std::invalid_argument("Refiner::refine: patch block size differs from the refiner's");
    const ProjectionContext& ctx = context_for(patch.geometry);
    const RefineResult res = run_engine(params_.engine, patch, ctx, params_.engine_config());
    return extract_predictor(res.model_grid, patch.geometry);
}

LumaPlane refine_block(const Patch& patch, const LumaPlane& mc_block, const RefinementParams& params)
{
    Refiner refiner(patch.geometry.block_width(), patch.geometry.block_height(), params);
    return refiner.refine(patch, mc_block);
}

namespace {

std::uint64_t sse(const LumaPlane& a, const LumaPlane& b)
{
    if (a.width() != b.width() || a.height() != b.height())
        throw std::invalid_argument("sse: plane sizes differ");
    return simd::kernels().ssd_u8(a.data(), a.width(), b.data(), b.width(), a.width(), a.height());
}

}  // namespace

ModeDecision mode_decide(const LumaPlane& original, const LumaPlane& mc_pred, const LumaPlane& refined_pred)
{
    ModeDecision d;
    d.sse_mc = sse(original, mc_pred);
    d.sse_refined = sse(original, refined_pred);
    d.refined = d.sse_refined < d.sse_mc;
    d.chosen = d.refined ? refined_pred : mc_pred;
    return d;
}

QuantizedBlock quantize_and_reconstruct(const Plane<int>& residual, const LumaPlane& predictor, double qstep)
{
    if (!(qstep > 0.0))
        throw std::invalid_argument("quantize_and_reconstruct: qstep must be positive");
    if (residual.width() != predictor.width() || residual.height() != predictor.height())
        throw std::invalid_argument("quantize_and_reconstruct: residual and predictor sizes differ");
    QuantizedBlock out{Plane<int>(residual.width(), residual.height()), LumaPlane(residual.width(), residual.height())};
    for (std::size_t i = 0; i < residual.size(); ++i) {
        const int q = int(std::lround(double(residual.data()[i]) / qstep));
        out.symbols.data()[i] = q;
        const long v = std::lround(double(predictor.data()[i]) + double(q) * qstep);
        out.recon.data()[i] = static_cast<unsigned char>(std::clamp(v, 0L, 255L));
    }
    return out;
}

int signed_exp_golomb_bits(int v)
{
    const std::uint64_t code = v > 0 ? 2ULL * std::uint64_t(v) - 1 : 2ULL * std::uint64_t(-(long long)v);
    int lz = 0;
    while ((code + 1) >> (lz + 1))
        ++lz;
    return 2 * lz + 1;
}

double symbol_entropy_bits(std::span<const int> symbols)
{
    if (symbols.empty())
        return 0.0;
    std::unordered_map<int, std::size_t> hist;
    for (int s : symbols)
        ++hist[s];
    // Sum in symbol order so the result does not depend on hash layout.
    std::vector<std::pair<int, std::size_t>> counts(hist.begin(), hist.end());
    std::sort(counts.begin(), counts.end());
    const double total = double(symbols.size());
    double bits = 0.0;
    for (const auto& [sym, count] : counts)
        bits -= double(count) * std::log2(double(count) / total);
    return bits;
}

RateBreakdown rate_proxy(std::span<const int> symbols, std::span<const MotionVector> mvs, std::size_t flag_count)
{
    RateBreakdown r;
    r.residual_bits = symbol_entropy_bits(symbols);
    for (const MotionVector& mv : mvs)
        r.mv_bits += signed_exp_golomb_bits(mv.dx) + signed_exp_golomb_bits(mv.dy);
    r.flag_bits = double(flag_count);
    return r;
}

double mse(const LumaPlane& a, const LumaPlane& b)
{
    if (a.empty())
        throw std::invalid_argument("mse: empty planes");
    return double(sse(a, b)) / double(a.size());
}

double psnr(const LumaPlane& original, const LumaPlane& recon)
{
    const double e = mse(original, recon);
    if (e == 0.0)
        return kPsnrCap;
    return 10.0 * std::log10(255.0 * 255.0 / e);
}

namespace {

void check_frames(const std::vector<LumaPlane>& frames, int block)
{
    if (frames.size() < 2)
        throw std::invalid_argument("encode: at least two frames are required");
    if (block <= 0)
        throw std::invalid_argument("encode: block size must be positive");
    const int w = frames[0].width();
    const int h = frames[0].height();
    if (w <= 0 || h <= 0 || w % block != 0 || h % block != 0)
        throw std::invalid_argument("encode: frame size " + std::to_string(w) + "x" + std::to_string(h) +
                                    " is not a multiple of the block size " + std::to_string(block));
    for (const auto& f : frames)
        if (f.width() != w || f.height() != h)
            throw std::invalid_argument("encode: frames differ in size");
}

Plane<int> difference(const LumaPlane& a, const LumaPlane& b)
{
    Plane<int> d(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i)
        d.data()[i] = int(a.data()[i]) - int(b.data()[i]);
    return d;
}

void append_symbols(std::vector<int>& dst, const Plane<int>& symbols)
{
    dst.insert(dst.end(), symbols.samples().begin(), symbols.samples().end());
}

Plane<int> take_symbols(const std::vector<int>& src, std::size_t& offset, int w, int h)
{
    if (offset + std::size_t(w) * std::size_t(h) > src.size())
        throw std::invalid_argument("decode: symbol stream too short");
    Plane<int> out(w, h);
    std::copy_n(src.begin() + std::ptrdiff_t(offset), out.size(), out.data());
    offset += out.size();
    return out;
}

LumaPlane code_intra(const LumaPlane& frame, double qstep, int block, CodedFrame& coded)
{
    coded.intra = true;
    LumaPlane recon(frame.width(), frame.height());
    const LumaPlane zero(block, block, 0);
    for (int by = 0; by < frame.height(); by += block)
        for (int bx = 0; bx < frame.width(); bx += block) {
            const LumaPlane orig = crop(frame, bx, by, block, block);
            const QuantizedBlock qb = quantize_and_reconstruct(difference(orig, zero), zero, qstep);
            append_symbols(coded.symbols, qb.symbols);
            paste(recon, qb.recon, bx, by);
        }
    return recon;
}

}  // namespace

EncodeResult encode_frames(const std::vector<LumaPlane>& frames, double qstep, const EncoderConfig& config)
{
    const int block = config.block_size;
    check_frames(frames, block);
    if (!(qstep > 0.0))
        throw std::invalid_argument("encode: qstep must be positive");
    if (!(config.fps > 0.0))
        throw std::invalid_argument("encode: fps must be positive");
    const int width = frames[0].width();
    const int height = frames[0].height();
    const bool signal_modes = config.refinement.engine != Engine::None;
    Refiner refiner(block, block, config.refinement);

    EncodeResult res;
    res.qstep = qstep;
    res.coded.resize(frames.size());
    res.recon.reserve(frames.size());
    res.recon.push_back(code_intra(frames[0], qstep, block, res.coded[0]));

    for (std::size_t t = 1; t < frames.size(); ++t) {
        const LumaPlane& ref = res.recon[t - 1];
        const LumaPlane& cur = frames[t];
        CodedFrame& coded = res.coded[t];
        LumaPlane recon(width, height);
        FrameStats st;
        double sse_mc = 0.0;
        double sse_chosen = 0.0;
        std::chrono::steady_clock::duration refine_time{};

        for (int by = 0; by < height; by += block)
            for (int bx = 0; bx < width; bx += block) {
                const LumaPlane orig = crop(cur, bx, by, block, block);
                MotionResult me = motion_search(orig, bx, by, ref, config.search_range);
                coded.mvs.push_back(me.mv);

                ModeDecision decision;
                if (signal_modes) {
                    const Patch patch = assemble_patch(recon, me.block, bx, by, refiner.geometry());
                    const auto start = std::chrono::steady_clock::now();
                    const LumaPlane refined = refiner.refine(patch, me.block);
                    refine_time += std::chrono::steady_clock::now() - start;
                    decision = mode_decide(orig, me.block, refined);
                    coded.refined.push_back(decision.refined ? 1 : 0);
                    st.refined_blocks += decision.refined ? 1 : 0;
                } else {
                    decision = mode_decide(orig, me.block, me.block);
                }
                sse_mc += double(decision.sse_mc);
                sse_chosen += double(decision.refined ? decision.sse_refined : decision.sse_mc);

                const QuantizedBlock qb = quantize_and_reconstruct(difference(orig, decision.chosen), decision.chosen, qstep);
                append_symbols(coded.symbols, qb.symbols);
                paste(recon, qb.recon, bx, by);
            }

        const double samples = double(width) * double(height);
        st.bits = rate_proxy(coded.symbols, coded.mvs, coded.refined.size()).total();
        st.psnr_db = psnr(cur, recon);
        st.pred_mse_mc = sse_mc / samples;
        st.pred_mse_chosen = sse_chosen / samples;
        st.refine_ms = std::chrono::duration<double, std::milli>(refine_time).count();
        res.stats.push_back(st);
        res.recon.push_back(std::move(recon));
    }

    double bits = 0.0, quality = 0.0, ms = 0.0;
    for (const FrameStats& st : res.stats) {
        bits += st.bits;
        quality += st.psnr_db;
        ms += st.refine_ms;
    }
    const double p_frames = double(res.stats.size());
    res.point = {qstep, bits / p_frames * config.fps / 1000.0, quality / p_frames};
    res.mean_refine_ms = ms / p_frames;
    return res;
}

std::vector<LumaPlane> decode_frames(const std::vector<CodedFrame>& coded, int width, int height, double qstep,
                                     const EncoderConfig& config)
{
    const int block = config.block_size;
    if (coded.empty() || !coded[0].intra)
        throw std::invalid_argument("decode: the first frame must be intra coded");
    if (width % block != 0 || height % block != 0)
        throw std::invalid_argument("decode: frame size is not a multiple of the block size");
    const std::size_t mbs = std::size_t(width / block) * std::size_t(height / block);
    Refiner refiner(block, block, config.refinement);
    std::vector<LumaPlane> out;

    for (const CodedFrame& cf : coded) {
        LumaPlane recon(width, height);
        std::size_t offset = 0;
        std::size_t mb = 0;
        if (!cf.intra && cf.mvs.size() != mbs)
            throw std::invalid_argument("decode: motion vector count does not match the macroblock count");
        for (int by = 0; by < height; by += block)
            for (int bx = 0; bx < width; bx += block, ++mb) {
                const Plane<int> symbols = take_symbols(cf.symbols, offset, block, block);
                LumaPlane pred(block, block, 0);
                if (!cf.intra) {
                    const MotionVector mv = cf.mvs[mb];
                    pred = crop(out.back(), bx + mv.dx, by + mv.dy, block, block);
                    if (mb < cf.refined.size() && cf.refined[mb]) {
                        const Patch patch = assemble_patch(recon, pred, bx, by, refiner.geometry());
                        pred = refiner.refine(patch, pred);
                    }
                }
                for (int y = 0; y < block; ++y)
                    for (int x = 0; x < block; ++x) {
                        const long v = std::lround(double(pred.at(x, y)) + double(symbols.at(x, y)) * qstep);
                        recon.at(bx + x, by + y) = static_cast<unsigned char>(std::clamp(v, 0L, 255L));
                    }
            }
        out.push_back(std::move(recon));
    }
    return out;
}

SequenceResult encode_sequence(const std::vector<LumaPlane>& frames, std::span<const double> qsteps,
                               const EncoderConfig& config)
{
    if (qsteps.empty())
        throw std::invalid_argument("encode_sequence: empty qstep ladder");
    SequenceResult out;
    out.curve.engine = std::string(engine_name(config.refinement.engine));
    double ms = 0.0;
    for (double q : qsteps) {
        out.runs.push_back(encode_frames(frames, q, config));
        out.curve.points.push_back(out.runs.back().point);
        ms += out.runs.back().mean_refine_ms;
    }
    out.mean_refine_ms = ms / double(qsteps.size());
    std::stable_sort(out.curve.points.begin(), out.curve.points.end(),
                     [](const RDPoint& a, const RDPoint& b) { return a.rate_kbps < b.rate_kbps; });
    return out;
}

}  // namespace strefine
