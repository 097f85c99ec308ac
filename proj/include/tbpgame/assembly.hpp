#pragma once

// Discrete generator  A P = div(k grad P) + b.grad P - c P  of the pollution
// dynamics and its adjoint.
//
// Sign convention: the convection term enters as +b.grad P, so material is
// carried along -b. The primal operator upwinds b.grad P in that direction
// (non-conservative form). Its transpose is the conservative upwind form of
// -div(b v) = -b.grad v for divergence-free b, with adjoint boundary
// coefficient alpha - b.n; assemble_adjoint_direct builds exactly that.

#include <Eigen/Sparse>

#include <cmath>
#include <string>
#include <vector>

#include "tbpgame/error.hpp"
#include "tbpgame/geometry.hpp"

namespace tbpgame {

/// Scalar grid function indexed by active cell.
using Field = Eigen::VectorXd;

/// Cell-volume weighted inner product.
inline double inner(const Field& a, const Field& b, double cell_volume) { return cell_volume * a.dot(b); }

/// Midpoint-rule integral of `f` over the cells of `cells`.
inline double integrate(const Field& f, const std::vector<int>& cells, double cell_volume) {
    double s = 0.0;
    for (int c : cells) s += f[c];
    return s * cell_volume;
}

struct Coefficients {
    std::vector<double> k;    ///< diffusion per cell
    std::vector<double> c;    ///< decay rate per cell
    double rho = 0.0;         ///< discount rate
    std::vector<double> phi;  ///< damage coefficient per player

    static Coefficients uniform(const Grid& grid, double k, double c, double rho, std::vector<double> phi) {
        return {std::vector<double>(grid.size(), k), std::vector<double>(grid.size(), c), rho, std::move(phi)};
    }

    /// Throws InputError naming the first violated bound.
    void validate(const Grid& grid, int players) const {
        if (k.size() != grid.size() || c.size() != grid.size())
            throw InputError("coefficients: per-cell arrays do not match the grid");
        for (double v : k)
            if (!(v > 0.0)) throw InputError("k must be positive");
        for (double v : c)
            if (!(v >= 0.0)) throw InputError("c must be non-negative");
        if (!(rho > 0.0)) throw InputError("ρ must be positive");
        if (static_cast<int>(phi.size()) != players)
            throw InputError("expected " + std::to_string(players) + " φ values, got " + std::to_string(phi.size()));
        for (double v : phi)
            if (!(v > 0.0)) throw InputError("φ must be positive");
    }
};

enum class OperatorKind { Primal, Adjoint };

struct OperatorInfo {
    OperatorKind kind = OperatorKind::Primal;
    bool from_transpose = false;    ///< obtained by transposing the other side
    bool direct_adjoint_bc = false; ///< adjoint boundary rows assembled from explicit data
    bool absorbing = false;         ///< some alpha > 0 or c > 0 (a steady state exists)
    std::string note;
};

/// Square sparse operator over active cells (five-point stencil). The affine
/// boundary contribution is zero because exterior pollution is zero.
struct SparseOperator {
    Eigen::SparseMatrix<double> matrix;
    Field boundary_source;
    OperatorInfo info;
    double cell_volume = 1.0;

    Eigen::Index size() const { return matrix.rows(); }
    Field apply(const Field& p) const { return matrix * p; }
};

namespace detail {

inline double face_harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

struct StencilBuilder {
    explicit StencilBuilder(std::size_t n) : diag(n, 0.0) {}

    void off(int row, int col, double v) {
        if (v != 0.0) triplets.emplace_back(row, col, v);
    }

    Eigen::SparseMatrix<double> finish(std::size_t n) {
        for (std::size_t i = 0; i < n; ++i)
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), diag[i]);
        Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        m.setFromTriplets(triplets.begin(), triplets.end());
        m.makeCompressed();
        return m;
    }

    std::vector<double> diag;
    std::vector<Eigen::Triplet<double>> triplets;
};

inline void add_diffusion_and_decay(StencilBuilder& sb, const Grid& grid, const Coefficients& coeff) {
    const auto& faces = grid.interior_faces();
    for (const auto& f : faces) {
        const double h = f.axis == Axis::X ? grid.hx() : grid.hy();
        const double t = face_harmonic(coeff.k[f.lower], coeff.k[f.upper]) / (h * h);
        sb.diag[f.lower] -= t;
        sb.diag[f.upper] -= t;
        sb.off(f.lower, f.upper, t);
        sb.off(f.upper, f.lower, t);
    }
    for (std::size_t c = 0; c < grid.size(); ++c) sb.diag[c] -= coeff.c[c];
}

inline bool absorbing(const Coefficients& coeff, const std::vector<RobinCondition>& bc) {
    for (double v : coeff.c)
        if (v > 0.0) return true;
    for (const auto& r : bc)
        if (r.alpha > 0.0) return true;
    return false;
}

} // namespace detail

/// Primal generator: central diffusion with harmonic face k, upwinded
/// +b.grad P, decay -cP, Robin  alpha P + k grad P.n = 0  with the cell value
/// as boundary trace.
inline SparseOperator assemble_primal(const Grid& grid, const Coefficients& coeff, const ConvectionField& conv,
                                      const BoundarySpec& bc) {
    for (double v : coeff.k)
        if (!(v > 0.0)) throw InputError("assemble_primal: k must be positive");
    if (coeff.k.size() != grid.size() || coeff.c.size() != grid.size())
        throw InputError("assemble_primal: coefficient arrays do not match the grid");
    const auto robin = bc.resolve(grid);
    for (const auto& r : robin)
        if (r.convective_correction)
            throw InputError("assemble_primal: convective correction applies to adjoint conditions only");
    const ConvectionSample b = sample_convection(conv, grid);

    detail::StencilBuilder sb(grid.size());
    detail::add_diffusion_and_decay(sb, grid, coeff);

    const auto& faces = grid.interior_faces();
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& face = faces[f];
        const double h = face.axis == Axis::X ? grid.hx() : grid.hy();
        const double beta = b.interior[f];
        // beta > 0: the lower cell draws from the upper one (drift along -b).
        if (beta > 0.0) {
            sb.off(face.lower, face.upper, beta / h);
            sb.diag[face.lower] -= beta / h;
        } else if (beta < 0.0) {
            sb.off(face.upper, face.lower, -beta / h);
            sb.diag[face.upper] -= -beta / h;
        }
    }

    const auto& bfaces = grid.boundary_faces();
    for (const auto& face : bfaces) {
        const double alpha = robin[face.segment].alpha;
        sb.diag[face.cell] -= alpha / grid.normal_spacing(face.side);
    }

    SparseOperator op;
    op.matrix = sb.finish(grid.size());
    op.boundary_source = Field::Zero(static_cast<Eigen::Index>(grid.size()));
    op.cell_volume = grid.cell_volume();
    op.info.kind = OperatorKind::Primal;
    op.info.absorbing = detail::absorbing(coeff, robin);
    op.info.note = "primal: +b.grad upwinded along -b; Robin alpha P + k dP/dn = 0";
    return op;
}

/// Discrete adjoint as the matrix transpose (exact duality under the
/// cell-volume inner product on a uniform grid). Works in both directions.
inline SparseOperator assemble_adjoint(const SparseOperator& op) {
    SparseOperator out;
    out.matrix = op.matrix.transpose();
    out.matrix.makeCompressed();
    out.boundary_source = Field::Zero(op.size());
    out.cell_volume = op.cell_volume;
    out.info = op.info;
    out.info.kind = op.info.kind == OperatorKind::Primal ? OperatorKind::Adjoint : OperatorKind::Primal;
    out.info.from_transpose = true;
    out.info.note = "transpose of [" + op.info.note + "]";
    return out;
}

/// Adjoint operator  div(k grad v) - b.grad v - c v  assembled directly,
/// with per-segment boundary rows  k grad v.n + gamma v = 0  where
/// gamma = alpha, or alpha - b.n under convective correction.
inline SparseOperator assemble_adjoint_direct(const Grid& grid, const Coefficients& coeff,
                                              const ConvectionField& conv, const BoundarySpec& adjoint_bc) {
    for (double v : coeff.k)
        if (!(v > 0.0)) throw InputError("assemble_adjoint_direct: k must be positive");
    if (coeff.k.size() != grid.size() || coeff.c.size() != grid.size())
        throw InputError("assemble_adjoint_direct: coefficient arrays do not match the grid");
    const auto robin = adjoint_bc.resolve(grid);
    const ConvectionSample b = sample_convection(conv, grid);

    detail::StencilBuilder sb(grid.size());
    detail::add_diffusion_and_decay(sb, grid, coeff);

    // Conservative upwind of -div(b v); the adjoint is transported along +b.
    const auto& faces = grid.interior_faces();
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& face = faces[f];
        const double h = face.axis == Axis::X ? grid.hx() : grid.hy();
        const double beta = b.interior[f];  // outward for `lower`
        if (beta > 0.0) {
            sb.diag[face.lower] -= beta / h;
            sb.off(face.upper, face.lower, beta / h);
        } else if (beta < 0.0) {
            sb.diag[face.upper] -= -beta / h;
            sb.off(face.lower, face.upper, -beta / h);
        }
    }

    const auto& bfaces = grid.boundary_faces();
    bool any_alpha = false;
    for (std::size_t f = 0; f < bfaces.size(); ++f) {
        const auto& face = bfaces[f];
        const double h = grid.normal_spacing(face.side);
        const double bn = b.boundary[f];
        const auto& cond = robin[face.segment];
        any_alpha = any_alpha || cond.alpha > 0.0;
        const double gamma = cond.convective_correction ? cond.alpha - bn : cond.alpha;
        sb.diag[face.cell] -= bn / h;     // convective boundary flux, trace = cell value
        sb.diag[face.cell] -= gamma / h;  // k grad v.n = -gamma v
    }

    SparseOperator op;
    op.matrix = sb.finish(grid.size());
    op.boundary_source = Field::Zero(static_cast<Eigen::Index>(grid.size()));
    op.cell_volume = grid.cell_volume();
    op.info.kind = OperatorKind::Adjoint;
    op.info.direct_adjoint_bc = true;
    op.info.absorbing = any_alpha || detail::absorbing(coeff, {});
    op.info.note = "adjoint: -b.grad upwinded along +b; k dv/dn + gamma v = 0";
    return op;
}

/// phi on the cells of `player`, zero elsewhere.
inline Field indicator_load(const RegionPartition& partition, int player, double phi) {
    if (player < 0 || player >= partition.players())
        throw InputError("indicator_load: player index out of range");
    Field f = Field::Zero(static_cast<Eigen::Index>(partition.region_map().size()));
    for (int c : partition.cells(player)) f[c] = phi;
    return f;
}

} // namespace tbpgame
