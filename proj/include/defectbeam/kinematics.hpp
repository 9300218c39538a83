#pragma once

/// @file kinematics.hpp
/// Two-scale kinematics on the beam axis: the plane displacement u(x, Y)
/// reconstructed from axis fields, the micro-distortion P, the second-order
/// connection N, linearised deformation measures, and the defect densities
/// carried by N (torsion = dislocation density, curvature = disclination
/// density).
///
/// Index conventions (0-based here, with axis direction first):
///   P[i][j]      2x2 micro distortion, P = [[0, -p], [p, 0]]
///   N[i][j][k]   k = 0 block is dP/dx, k = 1 block has N[0][0][1] = -n
///   torsion component i:  T^i = N[i][0][1] - N[i][1][0]  (only i = 0 lives)
///   curvature component:  R[i][j] = -d/dx N[i][j][1]     (only [0][0] lives)

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace defectbeam {

using Mat2 = std::array<std::array<double, 2>, 2>;

/// Micro distortion field: antisymmetric plane rotation generated by the
/// rotation channel p (p = w' for Euler-Bernoulli).
struct MicroDistortionField {
    Grid1D grid;
    std::vector<double> p;

    Mat2 matrix_at(std::size_t i) const {
        return Mat2{{{0.0, -p[i]}, {p[i], 0.0}}};
    }
};

/// Second-order connection field.  dp carries the axis derivative of the
/// rotation channel, n the micro curvature channel.  For Euler-Bernoulli
/// builds both come from the same Hermite w'' data, so holonomic identities
/// cancel exactly rather than to stencil error.
struct ConnectionField {
    Grid1D grid;
    std::vector<double> dp;
    std::vector<double> n;

    /// Tensor component N[i][j][k] at a node; i, j in {0,1}, k in {0,1}.
    double component(int i, int j, int k, std::size_t node) const {
        if (i < 0 || i > 1 || j < 0 || j > 1 || k < 0 || k > 1)
            throw ConfigError("connection component index out of range");
        if (k == 0) {  // dP/dx block
            if (i == 0 && j == 1) return -dp[node];
            if (i == 1 && j == 0) return dp[node];
            return 0.0;
        }
        if (i == 0 && j == 0) return -n[node];  // second block
        return 0.0;
    }

    /// Torsion component T^i = N[i][0][1] - N[i][1][0].
    double torsion_component(int i, std::size_t node) const {
        return component(i, 0, 1, node) - component(i, 1, 0, node);
    }
};

/// Axis fields of one model state plus derived P and N.
struct BeamFields {
    ModelKind model = ModelKind::EulerBernoulli;
    ScalarField1D transverse;  ///< w (EB) or u (Timoshenko)
    MicroDistortionField P;
    ConnectionField N;
};

/// Builds (u-bar, P, N) from an Euler-Bernoulli deflection.  Hermite d1/d2
/// channels are used when present and filled by 4th-order stencils otherwise.
inline BeamFields build_fields(const ScalarField1D& w) {
    ScalarField1D wh = w;
    if (!wh.d1) wh.d1 = fd_derivative(wh.values, wh.grid.spacing());
    if (!wh.d2) wh.d2 = fd_derivative(*wh.d1, wh.grid.spacing());
    BeamFields f;
    f.model = ModelKind::EulerBernoulli;
    f.P = MicroDistortionField{wh.grid, *wh.d1};
    // dP/dx and the curvature block both read the w'' channel: the connection
    // of a holonomic state is torsion-free by construction.
    f.N = ConnectionField{wh.grid, *wh.d2, *wh.d2};
    f.transverse = std::move(wh);
    return f;
}

/// Builds (u-bar, P, N) from independent Timoshenko fields on one grid.
inline BeamFields build_fields(const ScalarField1D& u, const ScalarField1D& p,
                               const ScalarField1D& n) {
    if (!(u.grid == p.grid) || !(u.grid == n.grid))
        throw ConfigError("Timoshenko fields must share one grid");
    BeamFields f;
    f.model = ModelKind::Timoshenko;
    f.transverse = u;
    f.P = MicroDistortionField{p.grid, p.values};
    f.N = ConnectionField{p.grid, p.derivative().values, n.values};
    return f;
}

/// Plane displacement at micro offset Y:
///   u(x, Y) = u-bar(x) + P(x) (0, Y)' = (-p(x) Y, w(x)).
/// The offset must stay inside the section when a thickness is supplied.
inline std::pair<ScalarField1D, ScalarField1D>
reconstruct_displacement(const BeamFields& f, double Y, double thickness = 0.0) {
    if (thickness > 0.0 && std::abs(Y) > 0.5 * thickness + 1e-12 * thickness)
        throw ConfigError("micro offset Y lies outside the section");
    ScalarField1D u1 = ScalarField1D::zeros(f.transverse.grid);
    for (std::size_t i = 0; i < u1.size(); ++i) u1.values[i] = -f.P.p[i] * Y;
    ScalarField1D u2;
    u2.grid = f.transverse.grid;
    u2.values = f.transverse.values;
    return {std::move(u1), std::move(u2)};
}

/// Dense sampling of the plane displacement over the section.
struct PlaneDisplacement {
    Grid1D grid;
    std::vector<double> offsets;
    std::vector<double> u1;  ///< node-major: u1[node * offsets.size() + j]
    std::vector<double> u2;
};

inline PlaneDisplacement reconstruct_displacement(const BeamFields& f,
                                                  const std::vector<double>& offsets,
                                                  double thickness = 0.0) {
    PlaneDisplacement out;
    out.grid = f.transverse.grid;
    out.offsets = offsets;
    const std::size_t m = offsets.size();
    out.u1.resize(f.transverse.size() * m);
    out.u2.resize(f.transverse.size() * m);
    for (std::size_t j = 0; j < m; ++j) {
        auto [a, b] = reconstruct_displacement(f, offsets[j], thickness);
        for (std::size_t i = 0; i < a.size(); ++i) {
            out.u1[i * m + j] = a.values[i];
            out.u2[i * m + j] = b.values[i];
        }
    }
    return out;
}

/// In-plane displacement gradient at offset Y:
///   grad u = [[-p' Y, -p], [w', 0]].
struct PlaneGradient {
    ScalarField1D g11, g12, g21, g22;
};

inline PlaneGradient plane_gradient(const BeamFields& f, double Y) {
    PlaneGradient g;
    const Grid1D grid = f.transverse.grid;
    g.g11 = ScalarField1D::zeros(grid);
    g.g12 = ScalarField1D::zeros(grid);
    g.g22 = ScalarField1D::zeros(grid);
    for (std::size_t i = 0; i < g.g11.size(); ++i) {
        g.g11.values[i] = -f.N.dp[i] * Y;
        g.g12.values[i] = -f.P.p[i];
    }
    g.g21 = f.transverse.derivative();
    return g;
}

/// Linearised measures of the second-order model.  sym P vanishes
/// identically (P is a rotation generator); it is still materialised so the
/// invariant can be checked rather than assumed.
struct DeformationMeasures {
    ScalarField1D theta;            ///< u' - p, the shear-like measure
    ScalarField1D micro_curvature;  ///< n
    ScalarField1D rel_distortion;   ///< p' - n
    ScalarField1D sym_p_11, sym_p_12, sym_p_22;
};

inline DeformationMeasures deformation_measures(const BeamFields& f) {
    DeformationMeasures m;
    const Grid1D grid = f.transverse.grid;
    m.theta = f.transverse.derivative();
    for (std::size_t i = 0; i < m.theta.size(); ++i) m.theta.values[i] -= f.P.p[i];
    m.theta.d1.reset();
    m.micro_curvature = ScalarField1D::zeros(grid);
    m.rel_distortion = ScalarField1D::zeros(grid);
    for (std::size_t i = 0; i < m.micro_curvature.size(); ++i) {
        m.micro_curvature.values[i] = f.N.n[i];
        m.rel_distortion.values[i] = f.N.dp[i] - f.N.n[i];
    }
    m.sym_p_11 = ScalarField1D::zeros(grid);
    m.sym_p_12 = ScalarField1D::zeros(grid);
    m.sym_p_22 = ScalarField1D::zeros(grid);
    for (std::size_t i = 0; i < m.sym_p_11.size(); ++i) {
        const Mat2 P = f.P.matrix_at(i);
        m.sym_p_11.values[i] = P[0][0];
        m.sym_p_12.values[i] = 0.5 * (P[0][1] + P[1][0]);
        m.sym_p_22.values[i] = P[1][1];
    }
    return m;
}

/// Defect densities extracted from the connection.
struct DefectFields {
    ScalarField1D torsion;    ///< dislocation density, p' - n
    ScalarField1D curvature;  ///< disclination density, n'
    std::string convention;
};

inline DefectFields defect_fields(const ConnectionField& N) {
    DefectFields d;
    Grid1D grid = N.grid;
    d.torsion = ScalarField1D::zeros(grid);
    for (std::size_t i = 0; i < d.torsion.size(); ++i)
        d.torsion.values[i] = N.torsion_component(0, i);
    ScalarField1D n_field(grid, N.n);
    d.curvature = n_field.derivative();
    d.convention =
        "torsion T^1_12 = N^1_12 - N^1_21 = p' - n; "
        "curvature R^1_112 = -d/dx N^1_12 = n'";
    return d;
}

}  // namespace defectbeam
