#include "strefine/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

#include "strefine/simd/kernels.hpp"

namespace strefine {

PatchGeometry::PatchGeometry(int block_width, int block_height)
    : block_width_(block_width), block_height_(block_height)
{
    if (block_width <= 0 || block_height <= 0)
        throw std::invalid_argument("PatchGeometry: block dimensions must be positive");
    labels_.assign(std::size_t(rows()) * std::size_t(cols()), Region::Unknown);
    for (int m = 0; m < rows(); ++m) {
        const int brow = m / block_height_;
        for (int n = 0; n < cols(); ++n) {
            const int bcol = n / block_width_;
            Region r = Region::Unknown;
            if (brow == 1 && bcol == 1)
                r = Region::Predicted;
            else if (brow == 0 || (brow == 1 && bcol == 0))
                r = Region::Reconstructed;
            labels_[index(m, n)] = r;
        }
    }
}

std::size_t PatchGeometry::count(Region r) const
{
    return std::size_t(std::count(labels_.begin(), labels_.end(), r));
}

PatchGeometry PatchGeometry::clipped_to_frame(int block_x, int block_y, int frame_width, int frame_height) const
{
    PatchGeometry out = *this;
    const int x0 = block_x - block_width_;
    const int y0 = block_y - block_height_;
    for (int m = 0; m < rows(); ++m) {
        const int y = y0 + m;
        for (int n = 0; n < cols(); ++n) {
            const int x = x0 + n;
            Region& r = out.labels_[index(m, n)];
            if (r == Region::Reconstructed && (x < 0 || y < 0 || x >= frame_width || y >= frame_height))
                r = Region::Unknown;
        }
    }
    return out;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// cos/sin of 2 pi * num / den with the argument reduced exactly first.
double cos_frac(long long num, long long den)
{
    const long long r = ((num % den) + den) % den;
    return std::cos(kTwoPi * double(r) / double(den));
}

double sin_frac(long long num, long long den)
{
    const long long r = ((num % den) + den) % den;
    return std::sin(kTwoPi * double(r) / double(den));
}

}  // namespace

BasisSet::BasisSet(int rows, int cols)
    : rows_(rows), cols_(cols), half_cols_(cols / 2 + 1)
{
    if (rows <= 0 || cols <= 0)
        throw std::invalid_argument("BasisSet: grid dimensions must be positive");

    const int M = rows_;
    const int N = cols_;
    auto self_mirror_col = [N](int q) { return q == 0 || (N % 2 == 0 && q == N / 2); };
    auto self_conjugate = [M, N](int p, int q) {
        return ((2 * p) % M + M) % M == 0 && (2 * q) % N == 0;
    };

    for (int q = 0; q < half_cols_; ++q) {
        int p_lo = -((M - 1) / 2);
        const int p_hi = M / 2;
        if (self_mirror_col(q))
            p_lo = 0;
        for (int p = p_lo; p <= p_hi; ++p) {
            functions_.push_back({p, q, Phase::Cosine});
            if (!self_conjugate(p, q))
                functions_.push_back({p, q, Phase::Sine});
        }
    }
    std::sort(functions_.begin(), functions_.end(), [](const BasisFunction& a, const BasisFunction& b) {
        return std::make_tuple(a.p * a.p + a.q * a.q, a.p, a.q, int(a.phase))
             < std::make_tuple(b.p * b.p + b.q * b.q, b.p, b.q, int(b.phase));
    });

    lookup_.assign(std::size_t(M) * std::size_t(half_cols_) * 2, -1);
    slots_.resize(functions_.size());
    for (std::size_t k = 0; k < functions_.size(); ++k) {
        const auto& f = functions_[k];
        const int slot = wrap_row(f.p) * half_cols_ + f.q + (f.phase == Phase::Sine ? M * half_cols_ : 0);
        slots_[k] = slot;
        lookup_[std::size_t(slot)] = std::ptrdiff_t(k);
    }

    row_cos_.resize(std::size_t(M) * M);
    row_sin_.resize(std::size_t(M) * M);
    for (int p = 0; p < M; ++p)
        for (int m = 0; m < M; ++m) {
            row_cos_[std::size_t(p) * M + m] = cos_frac(1LL * p * m, M);
            row_sin_[std::size_t(p) * M + m] = sin_frac(1LL * p * m, M);
        }
    col_cos_.resize(std::size_t(half_cols_) * N);
    col_sin_.resize(std::size_t(half_cols_) * N);
    col_neg_sin_.resize(std::size_t(half_cols_) * N);
    col_operator_.resize(std::size_t(N) * 2 * half_cols_);
    for (int q = 0; q < half_cols_; ++q)
        for (int n = 0; n < N; ++n) {
            const double c = cos_frac(1LL * q * n, N);
            const double s = sin_frac(1LL * q * n, N);
            col_cos_[std::size_t(q) * N + n] = c;
            col_sin_[std::size_t(q) * N + n] = s;
            col_neg_sin_[std::size_t(q) * N + n] = -s;
            col_operator_[std::size_t(n) * 2 * half_cols_ + q] = c;
            col_operator_[std::size_t(n) * 2 * half_cols_ + half_cols_ + q] = s;
        }
}

std::ptrdiff_t BasisSet::find(int p, int q, Phase phase) const
{
    if (q < 0 || q >= half_cols_)
        return -1;
    const int slot = wrap_row(p) * half_cols_ + q + (phase == Phase::Sine ? rows_ * half_cols_ : 0);
    // Mirror rows of the q = 0 and q = N/2 columns have no function of their own.
    return lookup_[std::size_t(slot)];
}

double BasisSet::sample(std::size_t k, int m, int n) const
{
    const auto& f = functions_.at(k);
    const long long den = 1LL * rows_ * cols_;
    const long long num = 1LL * f.p * m * cols_ + 1LL * f.q * n * rows_;
    return f.phase == Phase::Cosine ? cos_frac(num, den) : sin_frac(num, den);
}

void BasisSet::accumulate(std::size_t k, double alpha, std::span<double> grid) const
{
    const auto& f = functions_.at(k);
    const double* cq = col_cos_.data() + std::size_t(f.q) * cols_;
    const double* sq = col_sin_.data() + std::size_t(f.q) * cols_;
    const double* nsq = col_neg_sin_.data() + std::size_t(f.q) * cols_;
    const auto& kern = simd::kernels();
    // cos(a + b) = cos a cos b - sin a sin b;  sin(a + b) = sin a cos b + cos a sin b
    if (f.phase == Phase::Cosine)
        kern.rank2_update(grid.data(), std::size_t(rows_), std::size_t(cols_), alpha, row_cos(f.p), cq,
                          row_sin(f.p), nsq);
    else
        kern.rank2_update(grid.data(), std::size_t(rows_), std::size_t(cols_), alpha, row_sin(f.p), cq,
                          row_cos(f.p), sq);
}

void BasisSet::analyze(std::span<const double> grid, std::span<double> spectrum) const
{
    const std::size_t M = std::size_t(rows_);
    const std::size_t N = std::size_t(cols_);
    const std::size_t Q = std::size_t(half_cols_);
    if (grid.size() != M * N || spectrum.size() != spectrum_size())
        throw std::invalid_argument("BasisSet::analyze: size mismatch");

    const auto& kern = simd::kernels();
    // Columns first: T = x * [cos | sin], giving [A | B] per row.
    std::vector<double> t(M * 2 * Q), u(M * 2 * Q), v(M * 2 * Q);
    kern.matmul(grid.data(), col_operator_.data(), t.data(), M, N, 2 * Q);
    // Rows: U = C T = [CA | CB], V = S T = [SA | SB].
    kern.matmul(row_cos_.data(), t.data(), u.data(), M, M, 2 * Q);
    kern.matmul(row_sin_.data(), t.data(), v.data(), M, M, 2 * Q);
    // Re X = CA - SB, -Im X = SA + CB.
    double* re = spectrum.data();
    double* neg_im = spectrum.data() + M * Q;
    for (std::size_t p = 0; p < M; ++p) {
        const double* urow = u.data() + p * 2 * Q;
        const double* vrow = v.data() + p * 2 * Q;
        for (std::size_t q = 0; q < Q; ++q) {
            re[p * Q + q] = urow[q] - vrow[Q + q];
            neg_im[p * Q + q] = vrow[q] + urow[Q + q];
        }
    }
}

Patch assemble_patch(const LumaPlane& recon_frame, const LumaPlane& mc_block, int block_x, int block_y,
                     const PatchGeometry& geometry)
{
    const int bw = geometry.block_width();
    const int bh = geometry.block_height();
    if (block_x < 0 || block_y < 0 || block_x % bw != 0 || block_y % bh != 0)
        throw std::invalid_argument("assemble_patch: block position (" + std::to_string(block_x) + ", " +
                                    std::to_string(block_y) + ") is not on the block grid");
    if (block_x + bw > recon_frame.width() || block_y + bh > recon_frame.height())
        throw std::invalid_argument("assemble_patch: block lies outside the frame");
    if (mc_block.width() != bw || mc_block.height() != bh)
        throw std::invalid_argument("assemble_patch: motion-compensated block is " +
                                    std::to_string(mc_block.width()) + "x" + std::to_string(mc_block.height()) +
                                    ", expected " + std::to_string(bw) + "x" + std::to_string(bh));

    Patch patch{geometry.clipped_to_frame(block_x, block_y, recon_frame.width(), recon_frame.height()), {}};
    const auto& g = patch.geometry;
    patch.values.assign(g.sample_count(), 0.0);
    const int x0 = block_x - bw;
    const int y0 = block_y - bh;
    for (int m = 0; m < g.rows(); ++m)
        for (int n = 0; n < g.cols(); ++n) {
            switch (g.label(m, n)) {
            case Region::Reconstructed:
                patch.values[g.index(m, n)] = recon_frame.at(x0 + n, y0 + m);
                break;
            case Region::Predicted:
                patch.values[g.index(m, n)] = mc_block.at(n - bw, m - bh);
                break;
            case Region::Unknown:
                break;
            }
        }
    return patch;
}

WeightMask build_weight_mask(const PatchGeometry& geometry, double mu, double rho_hat)
{
    if (!(mu > 0.0 && mu <= 1.0))
        throw std::invalid_argument("build_weight_mask: mu must lie in (0, 1]");
    if (!(rho_hat > 0.0 && rho_hat < 1.0))
        throw std::invalid_argument("build_weight_mask: rho_hat must lie in (0, 1)");

    WeightMask mask;
    mask.mu = mu;
    mask.rho_hat = rho_hat;
    mask.weights.assign(geometry.sample_count(), 0.0);
    const double cm = (geometry.rows() - 1) / 2.0;
    const double cn = (geometry.cols() - 1) / 2.0;
    for (int m = 0; m < geometry.rows(); ++m)
        for (int n = 0; n < geometry.cols(); ++n) {
            double w = 0.0;
            switch (geometry.label(m, n)) {
            case Region::Predicted:
                w = mu;
                break;
            case Region::Reconstructed:
                w = std::pow(rho_hat, std::hypot(m - cm, n - cn));
                break;
            case Region::Unknown:
                break;
            }
            mask.weights[geometry.index(m, n)] = w;
        }
    return mask;
}

std::vector<double> evaluate_model(const SparseModel& model, const BasisSet& basis, const PatchGeometry& geometry)
{
    if (basis.rows() != geometry.rows() || basis.cols() != geometry.cols())
        throw std::invalid_argument("evaluate_model: basis and geometry grids differ");
    if (model.coefficients.size() != model.selected.size())
        throw std::invalid_argument("evaluate_model: coefficient count does not match selection");
    std::vector<double> grid(geometry.sample_count(), 0.0);
    for (std::size_t i = 0; i < model.selected.size(); ++i) {
        if (model.selected[i] >= basis.size())
            throw std::invalid_argument("evaluate_model: unknown basis index " + std::to_string(model.selected[i]));
        basis.accumulate(model.selected[i], model.coefficients[i], grid);
    }
    return grid;
}

double weighted_error_energy(const Patch& patch, std::span<const double> model_grid, const WeightMask& mask)
{
    const std::size_t n = patch.values.size();
    if (model_grid.size() != n || mask.weights.size() != n)
        throw std::invalid_argument("weighted_error_energy: dimension mismatch");
    return simd::kernels().weighted_sq_error(mask.weights.data(), patch.values.data(), model_grid.data(), n);
}

}  // namespace strefine
