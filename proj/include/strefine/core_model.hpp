#pragma once

// Patch geometry, weighting, the Fourier basis and the sparse model.
//
// A patch is a 3x3 arrangement of blocks centred on the block being
// predicted. Grid coordinates are (m, n) = (row, column); the grid is
// rows() x cols() samples, stored row-major.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "strefine/plane.hpp"

namespace strefine {

enum class Region : std::uint8_t { Unknown = 0, Reconstructed, Predicted };

class PatchGeometry {
public:
    /// Nominal geometry: centre block Predicted, left / top-left / top /
    /// top-right blocks Reconstructed, the rest Unknown.
    PatchGeometry(int block_width, int block_height);

    int block_width() const { return block_width_; }
    int block_height() const { return block_height_; }
    int rows() const { return 3 * block_height_; }
    int cols() const { return 3 * block_width_; }
    std::size_t sample_count() const { return labels_.size(); }

    Region label(int m, int n) const { return labels_[index(m, n)]; }
    std::span<const Region> labels() const { return labels_; }
    std::size_t count(Region r) const;

    std::size_t index(int m, int n) const { return std::size_t(m) * std::size_t(cols()) + std::size_t(n); }

    /// Marks every Reconstructed sample that falls outside a frame of the
    /// given size as Unknown, for a centre block whose top-left sample sits
    /// at (block_x, block_y) in that frame.
    PatchGeometry clipped_to_frame(int block_x, int block_y, int frame_width, int frame_height) const;

    bool operator==(const PatchGeometry&) const = default;

private:
    int block_width_;
    int block_height_;
    std::vector<Region> labels_;
};

/// Sample values f[m,n] over the patch grid. Unknown samples hold 0 and are
/// never read by anything that respects the weight mask.
struct Patch {
    PatchGeometry geometry;
    std::vector<double> values;
};

struct WeightMask {
    std::vector<double> weights;
    double mu = 0.0;
    double rho_hat = 0.0;
};

enum class Phase : std::uint8_t { Cosine = 0, Sine = 1 };

/// One real basis function cos/sin(2 pi (p m / M + q n / N)).
/// p is the signed row frequency in (-M/2, M/2], q is in [0, N/2].
struct BasisFunction {
    int p;
    int q;
    Phase phase;
};

/// The real two-dimensional Fourier family on an M x N grid. Functions are
/// stored in selection tie-break order: ascending p^2 + q^2, then p, then q,
/// cosine before sine. Index 0 is the DC function.
class BasisSet {
public:
    BasisSet(int rows, int cols);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    /// Width of the half spectrum (cols / 2 + 1).
    int half_cols() const { return half_cols_; }
    std::size_t size() const { return functions_.size(); }
    const BasisFunction& function(std::size_t k) const { return functions_[k]; }

    /// Position of the function's coefficient inside the stacked half
    /// spectrum [Re; -Im] of size 2 * rows * half_cols.
    std::int32_t spectral_slot(std::size_t k) const { return slots_[k]; }
    std::span<const std::int32_t> spectral_slots() const { return slots_; }

    /// Index of the function with the given frequency and phase, or -1.
    std::ptrdiff_t find(int p, int q, Phase phase) const;

    double sample(std::size_t k, int m, int n) const;

    /// grid += alpha * phi_k, over the full grid.
    void accumulate(std::size_t k, double alpha, std::span<double> grid) const;

    /// Stacked half spectrum [Re X; -Im X] of a real grid x, where
    /// X(p,q) = sum_{m,n} x[m,n] exp(-j 2 pi (p m / M + q n / N)).
    /// Row p of the Re block (and row rows() + p of the -Im block) holds
    /// frequency p mod M; columns are q in [0, half_cols).
    void analyze(std::span<const double> grid, std::span<double> spectrum) const;

    std::size_t spectrum_size() const { return std::size_t(2 * rows_ * half_cols_); }

private:
    int rows_;
    int cols_;
    int half_cols_;
    std::vector<BasisFunction> functions_;
    std::vector<std::int32_t> slots_;
    std::vector<std::ptrdiff_t> lookup_;  // (p mod M, q, phase) -> k
    // Trig tables, [frequency][position].
    std::vector<double> row_cos_, row_sin_;  // rows_ x rows_
    std::vector<double> col_cos_, col_sin_, col_neg_sin_;  // half_cols_ x cols_
    std::vector<double> col_operator_;  // cols_ x 2*half_cols_: [cos | sin]

    const double* row_cos(int p) const { return row_cos_.data() + std::size_t(wrap_row(p)) * rows_; }
    const double* row_sin(int p) const { return row_sin_.data() + std::size_t(wrap_row(p)) * rows_; }
    int wrap_row(int p) const { return ((p % rows_) + rows_) % rows_; }
};

struct SparseModel {
    std::vector<std::size_t> selected;
    std::vector<double> coefficients;
    int iterations = 0;

    std::size_t size() const { return selected.size(); }
};

Patch assemble_patch(const LumaPlane& recon_frame, const LumaPlane& mc_block, int block_x, int block_y,
                     const PatchGeometry& geometry);

WeightMask build_weight_mask(const PatchGeometry& geometry, double mu, double rho_hat);

std::vector<double> evaluate_model(const SparseModel& model, const BasisSet& basis,
                                   const PatchGeometry& geometry);

double weighted_error_energy(const Patch& patch, std::span<const double> model_grid, const WeightMask& mask);

}  // namespace strefine
