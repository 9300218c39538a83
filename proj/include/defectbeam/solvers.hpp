#pragma once

/// @file solvers.hpp
/// Equilibrium solves: essential elimination, the banded Cholesky and
/// conjugate-gradient routes, field extraction, strong-form residual checks,
/// manufactured solutions and convergence studies.

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "core.hpp"
#include "energy.hpp"
#include "kinematics.hpp"
#include "linalg.hpp"

namespace defectbeam {

// ---------------------------------------------------------------------------
// Essential elimination.
// ---------------------------------------------------------------------------

/// Symmetric in-place elimination of prescribed DOFs.  Preserves bandwidth
/// and definiteness: each constrained row keeps its original diagonal, so
/// the solved value reproduces the prescribed one exactly.
inline void apply_essential(BandedMatrix& K, std::vector<double>& f,
                            const std::vector<std::pair<int, double>>& essential) {
    const int n = K.size();
    const int kd = K.half_bandwidth();
    for (const auto& [j, g] : essential) {
        if (j < 0 || j >= n) throw ConfigError("essential DOF index out of range");
        const int lo = std::max(0, j - kd);
        const int hi = std::min(n - 1, j + kd);
        for (int i = lo; i <= hi; ++i) {
            if (i == j) continue;
            const double kij = K.at(i, j);
            if (kij != 0.0) {
                f[static_cast<std::size_t>(i)] -= kij * g;
                K.set(i, j, 0.0);
            }
        }
        f[static_cast<std::size_t>(j)] = K.at(j, j) * g;
    }
}

// ---------------------------------------------------------------------------
// Field extraction.
// ---------------------------------------------------------------------------

namespace detail {

/// Nodal values of d^deriv w/dx^deriv by evaluating the elements and
/// averaging the two one-sided limits at shared nodes.
inline std::vector<double> averaged_nodal_derivative(const FeSpace& space,
                                                     const std::vector<double>& dofs,
                                                     int deriv) {
    const double h = space.element_length();
    const int ns = space.shapes_per_element();
    auto eval_local = [&](int e, double xi) {
        const int base = space.first_dof(e);
        double sum = 0.0;
        for (int a = 0; a < ns; ++a) {
            const double sv = space.element == ElementType::QuinticHermite
                                  ? QuinticHermite::shape(a, xi, deriv, h)
                                  : CubicHermite::shape(a, xi, deriv, h);
            sum += sv * dofs[static_cast<std::size_t>(base + a)];
        }
        return sum;
    };
    const int nn = space.n_nodes();
    std::vector<double> out(static_cast<std::size_t>(nn));
    for (int i = 0; i < nn; ++i) {
        double sum = 0.0;
        int hits = 0;
        if (i > 0) { sum += eval_local(i - 1, 1.0); ++hits; }
        if (i < nn - 1) { sum += eval_local(i, 0.0); ++hits; }
        out[static_cast<std::size_t>(i)] = sum / hits;
    }
    return out;
}

}  // namespace detail

/// Deflection field of an Euler-Bernoulli state with exact Hermite
/// derivative channels.  For the cubic element (c = 0) the w'' channel is
/// reconstructed by element evaluation with nodal averaging.
inline ScalarField1D extract_eb_field(const FeSpace& space, const std::vector<double>& dofs) {
    const int nn = space.n_nodes();
    const int dpn = space.dofs_per_node();
    ScalarField1D w = ScalarField1D::zeros(space.node_grid());
    std::vector<double> d1(static_cast<std::size_t>(nn)), d2;
    for (int i = 0; i < nn; ++i) {
        w.values[static_cast<std::size_t>(i)] = dofs[static_cast<std::size_t>(i * dpn)];
        d1[static_cast<std::size_t>(i)] = dofs[static_cast<std::size_t>(i * dpn + 1)];
    }
    if (space.element == ElementType::QuinticHermite) {
        d2.resize(static_cast<std::size_t>(nn));
        for (int i = 0; i < nn; ++i)
            d2[static_cast<std::size_t>(i)] = dofs[static_cast<std::size_t>(i * dpn + 2)];
    } else {
        d2 = detail::averaged_nodal_derivative(space, dofs, 2);
    }
    w.d1 = std::move(d1);
    w.d2 = std::move(d2);
    return w;
}

/// (u, p, n) nodal fields of a Timoshenko state, midside nodes included.
inline std::array<ScalarField1D, 3> extract_timo_fields(const FeSpace& space,
                                                        const std::vector<double>& dofs) {
    const int nn = space.n_nodes();
    std::array<ScalarField1D, 3> out;
    for (int ch = 0; ch < 3; ++ch) out[static_cast<std::size_t>(ch)] = ScalarField1D::zeros(space.node_grid());
    for (int i = 0; i < nn; ++i)
        for (int ch = 0; ch < 3; ++ch)
            out[static_cast<std::size_t>(ch)].values[static_cast<std::size_t>(i)] =
                dofs[static_cast<std::size_t>(space.dof_index(i, ch))];
    return out;
}

// ---------------------------------------------------------------------------
// Solution.
// ---------------------------------------------------------------------------

/// Result of an equilibrium solve: the DOF vector, extracted nodal fields,
/// and solver diagnostics.  primary/rotation/curvature hold (w, w', w'')
/// for Euler-Bernoulli and (u, p, n) for Timoshenko; third carries the
/// nodal-averaged w''' (Euler-Bernoulli only).
struct Solution {
    FeSpace space;
    BeamCoefficients coefficients;
    LoadCase loads;
    BoundaryConditions bcs;
    std::vector<double> dofs;
    double relative_residual = 0.0;  ///< of the scaled linear system
    double objective = 0.0;          ///< (1/2) v'Kv - f'v at the solution
    int cg_iterations = 0;           ///< 0 on the direct route

    ScalarField1D primary;
    ScalarField1D rotation;
    ScalarField1D curvature;
    ScalarField1D third;

    BeamFields fields() const {
        return space.model == ModelKind::EulerBernoulli
                   ? build_fields(primary)
                   : build_fields(primary, rotation, curvature);
    }
    DefectFields defects() const { return defect_fields(fields().N); }
};

struct SolveOptions {
    bool use_cg = false;    ///< energy-descent route instead of Cholesky
    double cg_tol = 1e-14;  ///< relative residual target for the CG route
};

/// Assembles and solves one equilibrium problem.  b > 0 is required (both
/// models) and d > 0 for Timoshenko; e = 0 or c-degenerate setups surface
/// as NotSpdError from the factorisation when they leave zero-energy modes.
inline Solution solve(ModelKind model, const BeamCoefficients& k, double length,
                      int n_elements, const LoadCase& loads,
                      const BoundaryConditions& bcs, const SolveOptions& opt = {}) {
    if (!(k.b > 0.0)) throw ConfigError("solve requires curvature stiffness b > 0");
    if (model == ModelKind::Timoshenko && !(k.d > 0.0))
        throw ConfigError("solve requires shear stiffness d > 0 for Timoshenko");

    DiscreteEnergy sys = assemble(model, k, length, n_elements, loads, bcs);
    const BandedMatrix K0 = sys.stiffness;      // pre-elimination copies for
    const std::vector<double> f0 = sys.load;    // the objective value
    apply_essential(sys.stiffness, sys.load, sys.essential);

    Solution s;
    s.space = sys.space;
    s.coefficients = k;
    s.loads = loads;
    s.bcs = bcs;
    if (opt.use_cg) {
        CgResult r = minimize_energy_cg(sys.stiffness, sys.load, opt.cg_tol);
        s.dofs = std::move(r.x);
        s.relative_residual = r.relative_residual;
        s.cg_iterations = r.iterations;
    } else {
        BandedSolveResult r = solve_banded_spd(sys.stiffness, sys.load);
        s.dofs = std::move(r.x);
        s.relative_residual = r.relative_residual;
    }
    {
        DiscreteEnergy original;
        original.space = sys.space;
        original.stiffness = K0;
        original.load = f0;
        s.objective = original.value(s.dofs);
    }

    if (model == ModelKind::EulerBernoulli) {
        s.primary = extract_eb_field(s.space, s.dofs);
        s.rotation = ScalarField1D(s.space.node_grid(), *s.primary.d1);
        s.curvature = ScalarField1D(s.space.node_grid(), *s.primary.d2);
        s.third = ScalarField1D(s.space.node_grid(),
                                detail::averaged_nodal_derivative(s.space, s.dofs, 3));
    } else {
        auto f = extract_timo_fields(s.space, s.dofs);
        s.primary = std::move(f[0]);
        s.rotation = std::move(f[1]);
        s.curvature = std::move(f[2]);
    }
    return s;
}

inline Solution solve_eb(const BeamCoefficients& k, double length, int n_elements,
                         const LoadCase& loads, const BoundaryConditions& bcs,
                         const SolveOptions& opt = {}) {
    return solve(ModelKind::EulerBernoulli, k, length, n_elements, loads, bcs, opt);
}

inline Solution solve_timoshenko(const BeamCoefficients& k, double length, int n_elements,
                                 const LoadCase& loads, const BoundaryConditions& bcs,
                                 const SolveOptions& opt = {}) {
    return solve(ModelKind::Timoshenko, k, length, n_elements, loads, bcs, opt);
}

/// Achieved traction T_channel of the discrete solution at an end, from the
/// traction formulas of the model:
///   EulerBernoulli: T0 = -b w''' + c w^(5), T1 = b w'' - c w'''', T2 = c w'''
///   Timoshenko:     T0 = d (u' - p),  T1 = e (p' - n),  T2 = c n'
inline double boundary_flux(const Solution& s, End end, int channel) {
    if (channel < 0 || channel > 2) throw ConfigError("channel index out of range");
    const double x = end == End::Left ? 0.0 : s.space.length;
    const BeamCoefficients& k = s.coefficients;
    if (s.space.model == ModelKind::EulerBernoulli) {
        switch (channel) {
            case 0: return -k.b * eval_eb(s.space, s.dofs, x, 3) +
                           k.c * eval_eb(s.space, s.dofs, x, 5);
            case 1: return k.b * eval_eb(s.space, s.dofs, x, 2) -
                           k.c * eval_eb(s.space, s.dofs, x, 4);
            default: return k.c * eval_eb(s.space, s.dofs, x, 3);
        }
    }
    switch (channel) {
        case 0: return k.d * (eval_timo(s.space, s.dofs, 0, x, 1) -
                              eval_timo(s.space, s.dofs, 1, x, 0));
        case 1: return k.e * (eval_timo(s.space, s.dofs, 1, x, 1) -
                              eval_timo(s.space, s.dofs, 2, x, 0));
        default: return k.c * eval_timo(s.space, s.dofs, 2, x, 1);
    }
}

// ---------------------------------------------------------------------------
// Strong-form residual.
// ---------------------------------------------------------------------------

/// Pointwise residual of the strong equilibrium system on the interior
/// window (four nodes per side are dropped: the one-sided stencil closures
/// live there).  max_relative scales by the larger of the load magnitude
/// and the residual field scale floor.
struct StrongResidualReport {
    std::array<ScalarField1D, 3> rows;  ///< EB uses row 0 only
    int n_rows = 1;
    int window_begin = 0;  ///< first interior node
    int window_end = 0;    ///< one past the last interior node
    double max_interior = 0.0;
    double max_relative = 0.0;
};

namespace detail {

inline void finish_report(StrongResidualReport& rep, const std::vector<double>& scales) {
    const int nn = rep.rows[0].grid.n_nodes;
    if (nn < 10) throw ConfigError("grid too coarse for an interior residual window");
    rep.window_begin = 4;
    rep.window_end = nn - 4;
    double scale = 1e-300;
    for (double s : scales) scale = std::max(scale, s);
    for (int r = 0; r < rep.n_rows; ++r)
        for (int i = rep.window_begin; i < rep.window_end; ++i)
            rep.max_interior = std::max(rep.max_interior,
                                        std::abs(rep.rows[static_cast<std::size_t>(r)]
                                                     .values[static_cast<std::size_t>(i)]));
    rep.max_relative = rep.max_interior / scale;
}

}  // namespace detail

/// Euler-Bernoulli residual b w'''' - c w^(6) - f0, built from the w''
/// channel with the 4th-order stencils.
inline StrongResidualReport strong_residual(const BeamCoefficients& k,
                                            const ScalarField1D& w, const LoadCase& loads) {
    loads.require_model(ModelKind::EulerBernoulli);
    const double h = w.grid.spacing();
    const std::vector<double> w2 = w.second_derivative().values;
    const std::vector<double> w4 = fd_second_derivative(w2, h);
    std::vector<double> w6;
    if (k.c > 0.0) w6 = fd_second_derivative(w4, h);

    StrongResidualReport rep;
    rep.n_rows = 1;
    rep.rows[0] = ScalarField1D::zeros(w.grid);
    double fscale = 0.0, uscale = 0.0;
    for (int i = 0; i < w.grid.n_nodes; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double f = loads.f0(w.grid.node(i));
        rep.rows[0].values[ui] = k.b * w4[ui] - (k.c > 0.0 ? k.c * w6[ui] : 0.0) - f;
        fscale = std::max(fscale, std::abs(f));
        uscale = std::max(uscale, std::abs(k.b * w4[ui]));
    }
    detail::finish_report(rep, {fscale, uscale, 1e-30});
    return rep;
}

/// Timoshenko residual of the variational system
///   row0 = -d theta' - f0,  row1 = -d theta - e r' - f1,
///   row2 = b n - c n'' - e r - f2,   theta = u' - p, r = p' - n.
inline StrongResidualReport strong_residual(const BeamCoefficients& k,
                                            const ScalarField1D& u, const ScalarField1D& p,
                                            const ScalarField1D& n, const LoadCase& loads) {
    if (!(u.grid == p.grid) || !(u.grid == n.grid))
        throw ConfigError("Timoshenko fields must share one grid");
    const double h = u.grid.spacing();
    const int nn = u.grid.n_nodes;
    const std::vector<double> u1 = u.derivative().values;
    const std::vector<double> p1 = p.derivative().values;
    std::vector<double> theta(static_cast<std::size_t>(nn)), r(static_cast<std::size_t>(nn));
    for (int i = 0; i < nn; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        theta[ui] = u1[ui] - p.values[ui];
        r[ui] = p1[ui] - n.values[ui];
    }
    const std::vector<double> theta1 = fd_derivative(theta, h);
    const std::vector<double> r1 = fd_derivative(r, h);
    const std::vector<double> n2 = fd_second_derivative(n.values, h);

    StrongResidualReport rep;
    rep.n_rows = 3;
    for (int j = 0; j < 3; ++j) rep.rows[static_cast<std::size_t>(j)] = ScalarField1D::zeros(u.grid);
    double fscale = 0.0, uscale = 0.0;
    for (int i = 0; i < nn; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double x = u.grid.node(i);
        const double f0 = loads.f0(x);
        const double f1 = loads.f1_or_zero()(x);
        const double f2 = loads.f2_or_zero()(x);
        rep.rows[0].values[ui] = -k.d * theta1[ui] - f0;
        rep.rows[1].values[ui] = -k.d * theta[ui] - k.e * r1[ui] - f1;
        rep.rows[2].values[ui] = k.b * n.values[ui] - k.c * n2[ui] - k.e * r[ui] - f2;
        for (double f : {f0, f1, f2}) fscale = std::max(fscale, std::abs(f));
        uscale = std::max(uscale, std::abs(k.b * n.values[ui]));
        uscale = std::max(uscale, std::abs(k.d * theta1[ui]));
    }
    detail::finish_report(rep, {fscale, uscale, 1e-30});
    return rep;
}

/// Residual of a computed solution against its own load case.
inline StrongResidualReport strong_residual(const Solution& s) {
    if (s.space.model == ModelKind::EulerBernoulli)
        return strong_residual(s.coefficients, s.primary, s.loads);
    return strong_residual(s.coefficients, s.primary, s.rotation, s.curvature, s.loads);
}

// ---------------------------------------------------------------------------
// Manufactured solutions.
// ---------------------------------------------------------------------------

/// Boundary kind pattern: pattern[end][channel] chooses Essential/Natural.
using BcPattern = std::array<std::array<ChannelBC::Kind, 3>, 2>;

inline BcPattern bc_pattern(ChannelBC::Kind left0, ChannelBC::Kind left1, ChannelBC::Kind left2,
                            ChannelBC::Kind right0, ChannelBC::Kind right1, ChannelBC::Kind right2) {
    return BcPattern{{{left0, left1, left2}, {right0, right1, right2}}};
}

/// A manufactured problem: loads and boundary data generated from an exact
/// state, plus evaluators for error measurement.
struct MmsCase {
    ModelKind model = ModelKind::EulerBernoulli;
    BeamCoefficients coefficients;
    double length = 1.0;
    LoadCase loads;
    BoundaryConditions bcs;
    /// exact value of channel (EB: 0 = w, 1 = w', 2 = w''; Timoshenko: u, p, n)
    std::function<double(int, double)> exact;
};

/// Derivative stack of one analytic scalar: entry j is d^j/dx^j.
template <std::size_t N>
using DerivStack = std::array<std::function<double(double)>, N>;

/// Manufactured Euler-Bernoulli case from w and its derivatives through
/// order six (every stack entry must be callable).  Load:
/// f0 = b w'''' - c w^(6); natural data uses the traction formulas,
/// essential data the state values.
inline MmsCase make_mms(const BeamCoefficients& k, double length,
                        const DerivStack<7>& w, const BcPattern& pattern) {
    MmsCase m;
    m.model = ModelKind::EulerBernoulli;
    m.coefficients = k;
    m.length = length;
    auto f0 = [k, w](double x) { return k.b * w[4](x) - k.c * w[6](x); };
    if (k.c == 0.0)  // slope of f0 would need w^(7) otherwise
        m.loads = LoadCase::euler_bernoulli(
            Load::from_function(f0, [k, w](double x) { return k.b * w[5](x); }));
    else
        m.loads = LoadCase::euler_bernoulli(Load::from_function(f0));
    auto traction = [k, w](int ch, double x) {
        switch (ch) {
            case 0: return -k.b * w[3](x) + k.c * w[5](x);
            case 1: return k.b * w[2](x) - k.c * w[4](x);
            default: return k.c * w[3](x);
        }
    };
    for (End end : {End::Left, End::Right}) {
        const double x = end == End::Left ? 0.0 : length;
        for (int ch = 0; ch < 3; ++ch) {
            if (k.c == 0.0 && ch == 2) continue;  // no w'' DOF on the cubic element
            const auto kind = pattern[static_cast<std::size_t>(end)][static_cast<std::size_t>(ch)];
            m.bcs.set(end, ch, kind == ChannelBC::Kind::Essential
                                   ? ChannelBC::essential(w[static_cast<std::size_t>(ch)](x))
                                   : ChannelBC::natural(traction(ch, x)));
        }
    }
    m.exact = [w](int ch, double x) { return w[static_cast<std::size_t>(ch)](x); };
    return m;
}

/// Manufactured Timoshenko case from (u, p, n) with two derivatives each.
/// Loads are the variational rows:
///   f0 = -d theta', f1 = -d theta - e r', f2 = b n - c n'' - e r.
inline MmsCase make_mms(const BeamCoefficients& k, double length,
                        const DerivStack<3>& u, const DerivStack<3>& p,
                        const DerivStack<3>& n, const BcPattern& pattern) {
    MmsCase m;
    m.model = ModelKind::Timoshenko;
    m.coefficients = k;
    m.length = length;
    auto theta = [u, p](double x) { return u[1](x) - p[0](x); };
    auto theta1 = [u, p](double x) { return u[2](x) - p[1](x); };
    auto r = [p, n](double x) { return p[1](x) - n[0](x); };
    auto r1 = [p, n](double x) { return p[2](x) - n[1](x); };
    m.loads = LoadCase::timoshenko(
        Load::from_function([k, theta1](double x) { return -k.d * theta1(x); }),
        Load::from_function([k, theta, r1](double x) { return -k.d * theta(x) - k.e * r1(x); }),
        Load::from_function([k, n, r](double x) {
            return k.b * n[0](x) - k.c * n[2](x) - k.e * r(x);
        }));
    auto traction = [k, theta, r, n](int ch, double x) {
        switch (ch) {
            case 0: return k.d * theta(x);
            case 1: return k.e * r(x);
            default: return k.c * n[1](x);
        }
    };
    const std::array<const DerivStack<3>*, 3> chans = {&u, &p, &n};
    for (End end : {End::Left, End::Right}) {
        const double x = end == End::Left ? 0.0 : length;
        for (int ch = 0; ch < 3; ++ch) {
            const auto kind = pattern[static_cast<std::size_t>(end)][static_cast<std::size_t>(ch)];
            if (kind == ChannelBC::Kind::Essential)
                m.bcs.set(end, ch, ChannelBC::essential((*chans[static_cast<std::size_t>(ch)])[0](x)));
            else
                m.bcs.set(end, ch, ChannelBC::natural(traction(ch, x)));
        }
    }
    m.exact = [u, p, n](int ch, double x) {
        switch (ch) {
            case 0: return u[0](x);
            case 1: return p[0](x);
            default: return n[0](x);
        }
    };
    return m;
}

/// Relative nodal l2 error of the primary channel against the exact state.
inline double nodal_error(const Solution& s, const MmsCase& m) {
    double num = 0.0, den = 0.0;
    const Grid1D g = s.primary.grid;
    for (int i = 0; i < g.n_nodes; ++i) {
        const double x = g.node(i);
        const double ex = m.exact(0, x);
        const double diff = s.primary.values[static_cast<std::size_t>(i)] - ex;
        num += diff * diff;
        den += ex * ex;
    }
    if (den == 0.0) return std::sqrt(num);
    return std::sqrt(num / den);
}

// ---------------------------------------------------------------------------
// Convergence studies.
// ---------------------------------------------------------------------------

struct ConvergenceStudy {
    std::vector<int> meshes;
    std::vector<double> errors;  ///< relative nodal l2, primary channel
    double rate = 0.0;           ///< least-squares slope of log err vs log h
};

/// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ConfigError("slope needs at least two samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw ConfigError("slope needs distinct abscissae");
    return sxy / sxx;
}

/// Solves the manufactured case on each mesh and fits the convergence rate.
inline ConvergenceStudy run_convergence(const MmsCase& m, const std::vector<int>& meshes,
                                        const SolveOptions& opt = {}) {
    if (meshes.size() < 2) throw ConfigError("convergence study needs at least two meshes");
    ConvergenceStudy st;
    st.meshes = meshes;
    std::vector<double> lh, le;
    for (int n : meshes) {
        const Solution s = solve(m.model, m.coefficients, m.length, n, m.loads, m.bcs, opt);
        const double err = nodal_error(s, m);
        st.errors.push_back(err);
        lh.push_back(std::log(m.length / n));
        le.push_back(std::log(std::max(err, 1e-300)));
    }
    st.rate = ls_slope(lh, le);
    return st;
}

}  // namespace defectbeam
