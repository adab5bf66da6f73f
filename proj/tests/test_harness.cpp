#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "oracles.hpp"
#include "strefine/harness.hpp"
#include "strefine/synthetic.hpp"

using namespace strefine;

namespace {

LumaPlane noise_frame(int w, int h, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> d(0, 255);
    LumaPlane f(w, h);
    for (std::size_t i = 0; i < f.size(); ++i)
        f.data()[i] = static_cast<unsigned char>(d(rng));
    return f;
}

// Sequence whose samples are multiples of 64: every qstep of the default
// ladder reconstructs it exactly, so motion compensation is perfect.
std::vector<LumaPlane> static_sequence(int frames)
{
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> d(0, 3);
    LumaPlane f(64, 48);
    for (std::size_t i = 0; i < f.size(); ++i)
        f.data()[i] = static_cast<unsigned char>(64 * d(rng));
    return std::vector<LumaPlane>(std::size_t(frames), f);
}

EncoderConfig small_config(Engine e)
{
    EncoderConfig c;
    c.block_size = 16;
    c.search_range = 4;
    c.refinement.engine = e;
    c.refinement.fsa = {30, 1.0, 1, 0.0};
    return c;
}

std::vector<LumaPlane> short_synthetic(int frames)
{
    SyntheticSequenceConfig sc;
    sc.width = 64;
    sc.height = 48;
    sc.frames = frames;
    return make_synthetic_sequence(sc);
}

}  // namespace

TEST_SUITE("harness")
{
    TEST_CASE("motion search on identical frames")
    {
        const LumaPlane f = noise_frame(64, 64, 1);
        const MotionResult r = motion_search(crop(f, 16, 32, 16, 16), 16, 32, f, 16);
        CHECK(r.mv == MotionVector{0, 0});
        CHECK(r.ssd == 0);
    }

    TEST_CASE("motion search recovers a translation")
    {
        const LumaPlane ref = noise_frame(96, 96, 2);
        // cur(x, y) = ref(x + 3, y - 2)
        LumaPlane cur(96, 96);
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 96; ++x)
                cur.at(x, y) = ref.at(std::clamp(x + 3, 0, 95), std::clamp(y - 2, 0, 95));
        for (int by = 16; by < 80; by += 16)
            for (int bx = 16; bx < 64; bx += 16) {
                const MotionResult r = motion_search(crop(cur, bx, by, 16, 16), bx, by, ref, 16);
                CHECK(r.mv == MotionVector{3, -2});
                CHECK(r.ssd == 0);
                CHECK(r.block == crop(cur, bx, by, 16, 16));
            }
    }

    TEST_CASE("motion search range zero and zero-MV bound")
    {
        const LumaPlane ref = noise_frame(64, 64, 3);
        const LumaPlane cur = noise_frame(64, 64, 4);
        const LumaPlane block = crop(cur, 16, 16, 16, 16);
        const MotionResult r0 = motion_search(block, 16, 16, ref, 0);
        CHECK(r0.mv == MotionVector{0, 0});
        CHECK(r0.block == crop(ref, 16, 16, 16, 16));
        const MotionResult r = motion_search(block, 16, 16, ref, 8);
        CHECK(r.ssd <= oracle::sse(block, crop(ref, 16, 16, 16, 16)));
        CHECK(std::abs(r.mv.dx) <= 8);
        CHECK(std::abs(r.mv.dy) <= 8);

        // Window clamps at the frame border.
        const MotionResult corner = motion_search(crop(cur, 0, 0, 16, 16), 0, 0, ref, 16);
        CHECK(corner.mv.dx >= 0);
        CHECK(corner.mv.dy >= 0);
        CHECK_THROWS_AS(motion_search(block, 16, 16, ref, -1), std::invalid_argument);
    }

    TEST_CASE("motion search tie-break prefers short vectors")
    {
        const LumaPlane flat(64, 64, 90);
        const MotionResult r = motion_search(LumaPlane(16, 16, 90), 16, 16, flat, 8);
        CHECK(r.mv == MotionVector{0, 0});
        // Striped reference: dy = -1 and dy = +1 both match exactly.
        LumaPlane ref(64, 64, 0);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                ref.at(x, y) = static_cast<unsigned char>(y % 2 == 0 ? 200 : 0);
        LumaPlane cur_block(16, 16, 0);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                cur_block.at(x, y) = static_cast<unsigned char>(y % 2 == 1 ? 200 : 0);
        const MotionResult t = motion_search(cur_block, 16, 16, ref, 2);
        CHECK(t.ssd == 0);
        CHECK(t.mv == MotionVector{0, -1});
    }

    TEST_CASE("refine_block identities")
    {
        const LumaPlane frame = noise_frame(64, 64, 5);
        const LumaPlane mc = noise_frame(16, 16, 6);
        RefinementParams none;
        none.engine = Engine::None;
        const Patch interior = assemble_patch(frame, mc, 16, 16, PatchGeometry(16, 16));
        CHECK(refine_block(interior, mc, none) == mc);

        RefinementParams rba;
        rba.engine = Engine::Rba;
        const Patch corner = assemble_patch(frame, mc, 0, 0, PatchGeometry(16, 16));
        CHECK(refine_block(corner, mc, rba) == mc);
        CHECK_FALSE(refine_block(interior, mc, rba) == mc);
    }

    TEST_CASE("refinement helps under a brightness change")
    {
        // Static texture, illumination drifting between frames: the
        // co-located block is a poor predictor, its causal neighbourhood
        // already shows the new brightness.
        SyntheticSequenceConfig sc;
        sc.velocity_x = 0.0;
        sc.velocity_y = 0.0;
        sc.brightness_period = 8.0;
        const auto frames = make_synthetic_sequence(sc);
        RefinementParams params;
        params.engine = Engine::Ba;
        Refiner refiner(16, 16, params);
        int better = 0, total = 0;
        for (int t = 1; t < 4; ++t)
            for (int by = 16; by < sc.height; by += 16)
                for (int bx = 16; bx + 16 < sc.width; bx += 16) {
                    const LumaPlane orig = crop(frames[t], bx, by, 16, 16);
                    const MotionResult me = motion_search(orig, bx, by, frames[t - 1], 16);
                    const Patch patch = assemble_patch(frames[t], me.block, bx, by, refiner.geometry());
                    const LumaPlane refined = refiner.refine(patch, me.block);
                    better += oracle::sse(orig, refined) <= me.ssd;
                    ++total;
                }
        MESSAGE("refined SSE <= MC SSE on " << better << " of " << total << " interior blocks");
        CHECK(2 * better >= total);
    }

    TEST_CASE("mode_decide")
    {
        const LumaPlane orig(4, 4, 100);
        const LumaPlane near(4, 4, 101);
        const LumaPlane far(4, 4, 110);
        const ModeDecision a = mode_decide(orig, far, near);
        CHECK(a.refined);
        CHECK(a.chosen == near);
        CHECK(a.sse_mc == 16 * 100);
        CHECK(a.sse_refined == 16);

        const ModeDecision tie = mode_decide(orig, near, near);
        CHECK_FALSE(tie.refined);

        const ModeDecision b = mode_decide(orig, near, far);
        CHECK_FALSE(b.refined);
        CHECK(b.chosen == near);
        CHECK(oracle::sse(orig, b.chosen) <= std::min(b.sse_mc, b.sse_refined));
    }

    TEST_CASE("quantize_and_reconstruct")
    {
        std::mt19937_64 rng(7);
        std::uniform_int_distribution<int> d(-255, 255), p(0, 255);
        Plane<int> res(16, 16);
        LumaPlane pred(16, 16);
        for (std::size_t i = 0; i < res.size(); ++i) {
            pred.data()[i] = static_cast<unsigned char>(p(rng));
            res.data()[i] = d(rng);
        }
        const QuantizedBlock lossless = quantize_and_reconstruct(res, pred, 1.0);
        for (std::size_t i = 0; i < res.size(); ++i)
            CHECK(lossless.recon.data()[i] == std::clamp(int(pred.data()[i]) + res.data()[i], 0, 255));

        const QuantizedBlock zero = quantize_and_reconstruct(Plane<int>(16, 16, 0), pred, 7.5);
        CHECK(zero.recon == pred);
        for (int s : zero.symbols.samples())
            CHECK(s == 0);

        for (double q : {3.0, 7.5, 16.0}) {
            const QuantizedBlock qb = quantize_and_reconstruct(res, pred, q);
            for (std::size_t i = 0; i < res.size(); ++i) {
                const double unclipped = pred.data()[i] + qb.symbols.data()[i] * q;
                CHECK(std::abs(unclipped - (pred.data()[i] + res.data()[i])) <= q / 2 + 1e-12);
            }
        }
        CHECK_THROWS_AS(quantize_and_reconstruct(res, pred, 0.0), std::invalid_argument);
    }

    TEST_CASE("exp-Golomb lengths")
    {
        // Signed mapping 0, 1, -1, 2, -2, ... onto code numbers 0, 1, 2, 3, 4, ...
        const std::map<int, int> expect{{0, 1}, {1, 3}, {-1, 3}, {2, 5}, {-2, 5}, {3, 5}, {-3, 5}, {4, 7}, {-7, 7}, {8, 9}};
        for (auto [v, bits] : expect) {
            const unsigned code = v > 0 ? unsigned(2 * v - 1) : unsigned(-2 * v);
            // Independent: 2 * floor(log2(code + 1)) + 1
            CHECK(2 * int(std::floor(std::log2(double(code) + 1.0))) + 1 == bits);
            CHECK(signed_exp_golomb_bits(v) == bits);
        }
    }

    TEST_CASE("rate_proxy")
    {
        const std::vector<int> zeros(256 * 12, 0);
        const std::vector<MotionVector> mvs(12);
        const RateBreakdown r = rate_proxy(zeros, mvs, 12);
        CHECK(r.residual_bits == 0.0);
        CHECK(r.mv_bits == 24.0);
        CHECK(r.flag_bits == 12.0);
        CHECK(r.total() == 36.0);
        CHECK(rate_proxy(zeros, mvs, 24).flag_bits == 2 * r.flag_bits);

        std::mt19937_64 rng(3);
        std::geometric_distribution<int> g(0.3);
        std::vector<int> sym(3000);
        for (int& s : sym)
            s = g(rng) * ((rng() & 1) ? 1 : -1);
        // Histogram pass with an ordered map.
        std::map<int, double> hist;
        for (int s : sym)
            hist[s] += 1.0;
        double h = 0.0;
        for (const auto& [s, c] : hist)
            h -= c * std::log2(c / double(sym.size()));
        CHECK(symbol_entropy_bits(sym) == doctest::Approx(h).epsilon(1e-12));
        CHECK(rate_proxy(sym, {}, 0).total() == doctest::Approx(h).epsilon(1e-12));
    }

    TEST_CASE("psnr")
    {
        const LumaPlane a(16, 16, 10);
        CHECK(psnr(a, a) == kPsnrCap);
        CHECK(psnr(LumaPlane(16, 16, 0), LumaPlane(16, 16, 255)) == doctest::Approx(0.0));
        CHECK(psnr(a, LumaPlane(16, 16, 11)) == doctest::Approx(48.13).epsilon(0.01 / 48.13));
        CHECK(mse(a, LumaPlane(16, 16, 13)) == 9.0);
    }

    TEST_CASE("encode rejects bad input")
    {
        const auto frames = short_synthetic(3);
        CHECK_THROWS_AS(encode_frames({frames[0]}, 8.0, small_config(Engine::None)), std::invalid_argument);
        CHECK_THROWS_AS(encode_frames(frames, 0.0, small_config(Engine::None)), std::invalid_argument);
        EncoderConfig odd = small_config(Engine::None);
        odd.block_size = 20;
        CHECK_THROWS_AS(encode_frames(frames, 8.0, odd), std::invalid_argument);
    }

    TEST_CASE("static sequence: refinement only adds flag bits")
    {
        const auto frames = static_sequence(4);
        const std::vector<double> ladder{2, 4, 8, 16, 32, 64};
        const SequenceResult none = encode_sequence(frames, ladder, small_config(Engine::None));
        const SequenceResult rba = encode_sequence(frames, ladder, small_config(Engine::Rba));
        const double flag_kbps = 12.0 * 30.0 / 1000.0;  // 12 macroblocks per frame
        for (std::size_t i = 0; i < ladder.size(); ++i) {
            CHECK(none.runs[i].point.psnr_db == rba.runs[i].point.psnr_db);
            CHECK(rba.runs[i].point.rate_kbps == doctest::Approx(none.runs[i].point.rate_kbps + flag_kbps));
            for (const FrameStats& st : rba.runs[i].stats)
                CHECK(st.refined_blocks == 0);
        }
    }

    TEST_CASE("RD curve is monotone in qstep")
    {
        const auto frames = short_synthetic(4);
        const std::vector<double> ladder{2, 4, 8, 16, 32, 64};
        for (Engine e : {Engine::None, Engine::Rba}) {
            const SequenceResult r = encode_sequence(frames, ladder, small_config(e));
            for (std::size_t i = 1; i < ladder.size(); ++i) {
                CHECK(r.runs[i - 1].point.rate_kbps >= r.runs[i].point.rate_kbps);
                CHECK(r.runs[i - 1].point.psnr_db >= r.runs[i].point.psnr_db);
            }
            for (std::size_t i = 1; i < r.curve.points.size(); ++i)
                CHECK(r.curve.points[i - 1].rate_kbps <= r.curve.points[i].rate_kbps);
        }
    }

    TEST_CASE("refinement never worsens the prediction")
    {
        const auto frames = short_synthetic(5);
        for (Engine e : {Engine::Fsa, Engine::Ba, Engine::Rba}) {
            const EncodeResult r = encode_frames(frames, 8.0, small_config(e));
            for (const FrameStats& st : r.stats)
                CHECK(st.pred_mse_chosen <= st.pred_mse_mc);
        }
    }

    TEST_CASE("FSA takes longer than RBA per frame")
    {
        SyntheticSequenceConfig sc;
        sc.frames = 3;
        const auto frames = make_synthetic_sequence(sc);
        EncoderConfig fsa;
        fsa.refinement.engine = Engine::Fsa;
        EncoderConfig rba;
        rba.refinement.engine = Engine::Rba;
        const EncodeResult a = encode_frames(frames, 8.0, fsa);
        const EncodeResult b = encode_frames(frames, 8.0, rba);
        for (std::size_t i = 0; i < a.stats.size(); ++i)
            CHECK(a.stats[i].refine_ms > b.stats[i].refine_ms);
    }

    TEST_CASE("decoder reproduces the encoder's reconstruction")
    {
        const auto frames = short_synthetic(5);
        for (Engine e : {Engine::None, Engine::Fsa, Engine::Ba, Engine::Rba})
            for (double q : {4.0, 24.0}) {
                const EncoderConfig cfg = small_config(e);
                const EncodeResult r = encode_frames(frames, q, cfg);
                const auto decoded = decode_frames(r.coded, 64, 48, q, cfg);
                REQUIRE(decoded.size() == r.recon.size());
                for (std::size_t t = 0; t < decoded.size(); ++t)
                    CHECK(decoded[t] == r.recon[t]);
            }
    }

    TEST_CASE("encoding is deterministic")
    {
        const auto frames = short_synthetic(3);
        const EncodeResult a = encode_frames(frames, 8.0, small_config(Engine::Rba));
        const EncodeResult b = encode_frames(frames, 8.0, small_config(Engine::Rba));
        CHECK(a.recon == b.recon);
        CHECK(a.point.rate_kbps == b.point.rate_kbps);
        CHECK(a.point.psnr_db == b.point.psnr_db);
    }
}
