#pragma once

// Model generation for spatial refinement.
//
//   fsa_refine  greedy: one function per iteration, coefficient from a single
//               weighted projection of the residual.
//   ba_refine   orthogonal greedy: one function per iteration, then every
//               selected coefficient is re-solved from the weighted normal
//               equations.
//   rba_refine  relaxed orthogonal greedy: every candidate whose energy
//               reduction reaches tau times the best one (at most
//               max_per_iteration of them) joins per iteration, followed by
//               one joint solve.
//
// All three minimise sum_{m,n} w[m,n] (f[m,n] - g[m,n])^2 over the patch.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "strefine/core_model.hpp"

namespace strefine {

enum class Engine { None, Fsa, Ba, Rba };

std::string_view engine_name(Engine e);
/// Parses "none", "fsa", "ba" or "rba"; throws std::invalid_argument.
Engine parse_engine(std::string_view name);

struct ProjectionGain {
    std::size_t basis_index = 0;
    double delta_e = 0.0;  ///< energy reduction if phi alone were added
    double coeff = 0.0;    ///< the coefficient achieving it
};

/// Direct sample-domain evaluation of the single-function energy reduction.
ProjectionGain projection_gain(std::span<const double> residual, const WeightMask& mask,
                               std::span<const double> phi, std::size_t basis_index = 0);

struct EngineConfig {
    int max_iterations = 1;
    double tau = 0.5;
    int max_per_iteration = 20;
    double stop_energy = 0.0;

    static EngineConfig fsa_defaults() { return {200, 1.0, 1, 0.0}; }
    static EngineConfig ba_defaults() { return {20, 1.0, 1, 0.0}; }
    static EngineConfig rba_defaults() { return {4, 0.5, 20, 0.0}; }

    void validate() const;
};

/// Per-mask precomputation shared by every block that uses the same weights:
/// the weighted norm of every basis function (computed directly) and the
/// spectrum of the mask, from which all Gram entries follow.
class ProjectionContext {
public:
    ProjectionContext(std::shared_ptr<const BasisSet> basis, const WeightMask& mask);

    const BasisSet& basis() const { return *basis_; }
    std::span<const double> weights() const { return weights_; }
    double total_weight() const { return total_weight_; }

    /// sum w * phi_k^2
    double norm(std::size_t k) const { return norms_[k]; }
    /// 1 / norm(k), or 0 for functions with (numerically) zero weighted norm.
    std::span<const double> inverse_norms() const { return inverse_norms_; }
    bool eligible(std::size_t k) const { return inverse_norms_[k] != 0.0; }
    std::span<const std::size_t> ineligible() const { return ineligible_; }

    /// sum w * phi_k * phi_u, read off the mask spectrum.
    double gram(std::size_t k, std::size_t u) const;

private:
    std::shared_ptr<const BasisSet> basis_;
    std::vector<double> weights_;
    double total_weight_ = 0.0;
    std::vector<double> norms_;
    std::vector<double> inverse_norms_;
    std::vector<std::size_t> ineligible_;
    std::vector<double> mask_spectrum_;  // [sum w cos; sum w sin] over the half spectrum

    void mask_sums(int p, int q, double& cos_sum, double& sin_sum) const;
};

/// Functions whose weighted norm is at most this fraction of the total
/// weight count as having zero norm.
inline constexpr double kZeroNormTolerance = 1e-12;

/// Energy reduction of every basis function for the given residual (in basis
/// order), computed through the weighted residual spectrum.
std::vector<double> candidate_gains(const ProjectionContext& ctx, std::span<const double> residual);

/// Indices passing gains[i] >= tau * max(gains), best first (ties: lower
/// index first), at most cap of them. Negative gains mark ineligible
/// candidates and are never selected.
std::vector<std::size_t> select_relaxed(std::span<const double> gains, double tau, std::size_t cap);

struct CoefficientUpdate {
    std::vector<double> delta;
    bool regularized = false;  ///< the diagonal had to be loaded
    bool degenerate = false;   ///< even the loaded system failed; delta is zero
};

/// Solves the dense symmetric system gram * x = rhs (n x n, row-major) by
/// Cholesky. On a non-positive pivot the diagonal is loaded with
/// 1e-9 * trace / n and the factorisation retried once.
CoefficientUpdate solve_normal_equations(std::vector<double> gram, std::span<const double> rhs, std::size_t n);

/// Coefficient increments for the selected functions that minimise the
/// weighted energy of residual - sum delta_u phi_u.
CoefficientUpdate solve_coefficient_update(const ProjectionContext& ctx, std::span<const double> residual,
                                           std::span<const std::size_t> selected);

struct IterationRecord {
    std::vector<std::size_t> added;
    double max_gain = 0.0;
    double energy = 0.0;  ///< weighted error energy after the iteration
    bool regularized = false;
};

struct RefineResult {
    SparseModel model;
    std::vector<IterationRecord> trace;
    double initial_energy = 0.0;
    std::vector<double> model_grid;  ///< g[m,n] for the final model
};

RefineResult fsa_refine(const Patch& patch, const ProjectionContext& ctx, const EngineConfig& config);
RefineResult ba_refine(const Patch& patch, const ProjectionContext& ctx, const EngineConfig& config);
RefineResult rba_refine(const Patch& patch, const ProjectionContext& ctx, const EngineConfig& config);

RefineResult fsa_refine(const Patch& patch, const WeightMask& mask, std::shared_ptr<const BasisSet> basis,
                        const EngineConfig& config);
RefineResult ba_refine(const Patch& patch, const WeightMask& mask, std::shared_ptr<const BasisSet> basis,
                       const EngineConfig& config);
RefineResult rba_refine(const Patch& patch, const WeightMask& mask, std::shared_ptr<const BasisSet> basis,
                        const EngineConfig& config);

/// Dispatches on the engine; Engine::None yields an empty model.
RefineResult run_engine(Engine engine, const Patch& patch, const ProjectionContext& ctx, const EngineConfig& config);

/// The centre block of g, clipped to [0, 255] and rounded to 8 bits.
LumaPlane extract_predictor(std::span<const double> model_grid, const PatchGeometry& geometry);
LumaPlane extract_predictor(const SparseModel& model, const BasisSet& basis, const PatchGeometry& geometry);

}  // namespace strefine
