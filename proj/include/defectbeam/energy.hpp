#pragma once

/// @file energy.hpp
/// Variational core: Gauss quadrature, Hermite/Lagrange element bases, the
/// finite-element space, assembly of the discrete energy, and the total
/// energy functional.
///
/// Conventions.  The stored energy density carries no one-half factor:
///   EulerBernoulli:  psi = b |w''|^2 + c |w'''|^2
///   Timoshenko:      psi = b n^2 + c |n'|^2 + d |u' - p|^2 + e |p' - n|^2
/// With A the Galerkin matrix of the density (v' A v = integral of psi), the
/// assembled system uses K = 2A and load vector f = 2 l, where
///   l(phi) = integral f_i phi_i + [That . phi](L) - [That . phi](0).
/// K v = f is then equivalent to A-form(v, phi) = l(phi), which reproduces
/// the strong equilibrium equations and traction formulas without spurious
/// factors of two.

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"

namespace defectbeam {

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature on [0, 1].
// ---------------------------------------------------------------------------

/// Quadrature nodes and weights on the unit interval; weights sum to one and
/// an n-point rule integrates polynomials through degree 2n - 1 exactly.
struct QuadratureRule {
    std::vector<double> points;
    std::vector<double> weights;

    static QuadratureRule gauss_legendre(int n) {
        if (n < 1 || n > 64) throw ConfigError("quadrature order out of range");
        QuadratureRule r;
        r.points.resize(static_cast<std::size_t>(n));
        r.weights.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            // Newton iteration on P_n from the Chebyshev-like initial guess.
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double step = p1 / dp;
                x -= step;
                if (std::abs(step) < 1e-15) break;
            }
            const std::size_t j = static_cast<std::size_t>(n - 1 - i);  // ascending
            r.points[j] = 0.5 * (1.0 + x);
            r.weights[j] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
        return r;
    }
};

// ---------------------------------------------------------------------------
// Reference element bases on xi in [0, 1].
// ---------------------------------------------------------------------------

namespace detail {

/// k-th derivative of a polynomial (ascending coefficients) at xi.
template <std::size_t N>
double poly_deriv(const std::array<double, N>& a, double xi, int k) {
    double sum = 0.0;
    for (std::size_t m = static_cast<std::size_t>(k); m < N; ++m) {
        double coef = a[m];
        for (int j = 0; j < k; ++j) coef *= static_cast<double>(m - j);
        double pw = 1.0;
        for (std::size_t j = 0; j + static_cast<std::size_t>(k) < m; ++j) pw *= xi;
        sum += coef * pw;
    }
    return sum;
}

}  // namespace detail

/// C2 quintic Hermite basis: element DOFs (w, w', w'') at each end node.
/// shape(a, xi, k, h) returns d^k/dx^k of shape a with the h^t DOF scaling
/// already applied (t = a mod 3), so DOF values are physical derivatives.
struct QuinticHermite {
    static constexpr int n_shapes = 6;
    static constexpr int max_deriv = 3;

    static double shape(int a, double xi, int k, double h) {
        static const std::array<std::array<double, 6>, 6> C = {{
            {1.0, 0.0, 0.0, -10.0, 15.0, -6.0},
            {0.0, 1.0, 0.0, -6.0, 8.0, -3.0},
            {0.0, 0.0, 0.5, -1.5, 1.5, -0.5},
            {0.0, 0.0, 0.0, 10.0, -15.0, 6.0},
            {0.0, 0.0, 0.0, -4.0, 7.0, -3.0},
            {0.0, 0.0, 0.0, 0.5, -1.0, 0.5},
        }};
        const int t = a % 3;
        double scale = 1.0;
        for (int j = 0; j < t; ++j) scale *= h;
        double inv = 1.0;
        for (int j = 0; j < k; ++j) inv /= h;
        return scale * inv * detail::poly_deriv(C[static_cast<std::size_t>(a)], xi, k);
    }
};

/// C1 cubic Hermite basis: element DOFs (w, w') at each end node.  Used when
/// c = 0, where the energy only sees w'' and no w'' DOF exists.
struct CubicHermite {
    static constexpr int n_shapes = 4;
    static constexpr int max_deriv = 3;

    static double shape(int a, double xi, int k, double h) {
        static const std::array<std::array<double, 4>, 4> C = {{
            {1.0, 0.0, -3.0, 2.0},
            {0.0, 1.0, -2.0, 1.0},
            {0.0, 0.0, 3.0, -2.0},
            {0.0, 0.0, -1.0, 1.0},
        }};
        const int t = a % 2;
        double scale = t == 1 ? h : 1.0;
        double inv = 1.0;
        for (int j = 0; j < k; ++j) inv /= h;
        return scale * inv * detail::poly_deriv(C[static_cast<std::size_t>(a)], xi, k);
    }
};

/// C0 quadratic Lagrange basis on nodes xi = 0, 1/2, 1 (Timoshenko channels).
struct QuadraticLagrange {
    static constexpr int n_shapes = 3;
    static constexpr int max_deriv = 2;

    static double shape(int a, double xi, int k, double h) {
        static const std::array<std::array<double, 3>, 3> C = {{
            {1.0, -3.0, 2.0},
            {0.0, 4.0, -4.0},
            {0.0, -1.0, 2.0},
        }};
        double inv = 1.0;
        for (int j = 0; j < k; ++j) inv /= h;
        return inv * detail::poly_deriv(C[static_cast<std::size_t>(a)], xi, k);
    }
};

// ---------------------------------------------------------------------------
// Finite-element space.
// ---------------------------------------------------------------------------

enum class ElementType {
    QuinticHermite,    ///< EulerBernoulli, c > 0: nodal (w, w', w'')
    CubicHermite,      ///< EulerBernoulli, c = 0: nodal (w, w')
    QuadraticLagrange  ///< Timoshenko: nodal (u, p, n), midside nodes included
};

/// Mesh plus DOF layout on [0, length].  DOFs are interleaved by node, so
/// the stiffness bandwidth stays fixed as the mesh refines.
struct FeSpace {
    ModelKind model = ModelKind::EulerBernoulli;
    ElementType element = ElementType::QuinticHermite;
    double length = 1.0;
    int n_elements = 1;

    static FeSpace make(ModelKind model, const BeamCoefficients& k,
                        double length, int n_elements) {
        if (!(length > 0.0) || !std::isfinite(length))
            throw ConfigError("beam length must be positive and finite");
        if (n_elements < 1) throw ConfigError("need at least one element");
        FeSpace s;
        s.model = model;
        s.length = length;
        s.n_elements = n_elements;
        if (model == ModelKind::EulerBernoulli)
            s.element = k.c > 0.0 ? ElementType::QuinticHermite : ElementType::CubicHermite;
        else
            s.element = ElementType::QuadraticLagrange;
        return s;
    }

    double element_length() const { return length / n_elements; }

    int n_nodes() const {
        return element == ElementType::QuadraticLagrange ? 2 * n_elements + 1
                                                         : n_elements + 1;
    }
    int dofs_per_node() const {
        return element == ElementType::CubicHermite ? 2 : 3;
    }
    int n_dofs() const { return n_nodes() * dofs_per_node(); }

    int half_bandwidth() const {
        switch (element) {
            case ElementType::QuinticHermite: return 5;
            case ElementType::CubicHermite: return 3;
            default: return 8;
        }
    }

    int shapes_per_element() const {
        return element == ElementType::QuadraticLagrange ? 3 : dofs_per_node() * 2;
    }
    int dofs_per_element() const {
        return element == ElementType::QuadraticLagrange ? 9 : dofs_per_node() * 2;
    }

    /// Output grid: element end nodes (Hermite) or all nodes including
    /// midsides (Lagrange), uniformly spaced in both cases.
    Grid1D node_grid() const { return Grid1D::make(length, n_nodes()); }

    int first_node(int e) const {
        return element == ElementType::QuadraticLagrange ? 2 * e : e;
    }
    int dof_index(int node, int channel) const { return node * dofs_per_node() + channel; }
    int end_node(End end) const { return end == End::Left ? 0 : n_nodes() - 1; }
    int first_dof(int e) const { return dof_index(first_node(e), 0); }

    /// Element containing x, clamped to [0, n_elements); xi is the local
    /// coordinate in [0, 1].
    std::pair<int, double> locate(double x) const {
        const double h = element_length();
        int e = static_cast<int>(std::floor(x / h));
        e = std::max(0, std::min(e, n_elements - 1));
        return {e, (x - e * h) / h};
    }
};

// ---------------------------------------------------------------------------
// Energy densities.
// ---------------------------------------------------------------------------

/// Euler-Bernoulli stored density at a point, psi = b w2^2 + c w3^2.
inline double eb_density(const BeamCoefficients& k, double w2, double w3) {
    return k.b * w2 * w2 + k.c * w3 * w3;
}

/// Timoshenko stored density, psi = b n^2 + c n1^2 + d theta^2 + e r^2 with
/// theta = u' - p and r = p' - n.
inline double timo_density(const BeamCoefficients& k, double n, double n1,
                           double theta, double r) {
    return k.b * n * n + k.c * n1 * n1 + k.d * theta * theta + k.e * r * r;
}

// ---------------------------------------------------------------------------
// State evaluation.
// ---------------------------------------------------------------------------

/// d^deriv/dx^deriv of an Euler-Bernoulli FE state at x (deriv <= 5; orders
/// beyond the element degree evaluate to zero).
inline double eval_eb(const FeSpace& space, const std::vector<double>& dofs,
                      double x, int deriv) {
    if (space.model != ModelKind::EulerBernoulli)
        throw ConfigError("eval_eb requires an Euler-Bernoulli space");
    if (deriv < 0 || deriv > 5) throw ConfigError("derivative order out of range");
    const auto [e, xi] = space.locate(x);
    const double h = space.element_length();
    const int base = space.first_dof(e);
    const int ns = space.shapes_per_element();
    double sum = 0.0;
    for (int a = 0; a < ns; ++a) {
        const double s = space.element == ElementType::QuinticHermite
                             ? QuinticHermite::shape(a, xi, deriv, h)
                             : CubicHermite::shape(a, xi, deriv, h);
        sum += s * dofs[static_cast<std::size_t>(base + a)];
    }
    return sum;
}

/// d^deriv/dx^deriv of one Timoshenko channel (0 = u, 1 = p, 2 = n) at x.
inline double eval_timo(const FeSpace& space, const std::vector<double>& dofs,
                        int channel, double x, int deriv) {
    if (space.model != ModelKind::Timoshenko)
        throw ConfigError("eval_timo requires a Timoshenko space");
    if (channel < 0 || channel > 2) throw ConfigError("channel index out of range");
    if (deriv < 0 || deriv > 2) throw ConfigError("derivative order out of range");
    const auto [e, xi] = space.locate(x);
    const double h = space.element_length();
    double sum = 0.0;
    for (int a = 0; a < 3; ++a) {
        const int dof = space.dof_index(space.first_node(e) + a, channel);
        sum += QuadraticLagrange::shape(a, xi, deriv, h) * dofs[static_cast<std::size_t>(dof)];
    }
    return sum;
}

/// Nodal value of one state channel at a beam end.  For the cubic element
/// the w'' channel has no DOF and is rejected.
inline double boundary_state(const FeSpace& space, const std::vector<double>& dofs,
                             End end, int channel) {
    if (channel < 0 || channel > 2) throw ConfigError("channel index out of range");
    if (space.element == ElementType::CubicHermite && channel == 2)
        throw ConfigError("the w'' channel carries no DOF when c = 0");
    return dofs[static_cast<std::size_t>(space.dof_index(space.end_node(end), channel))];
}

// ---------------------------------------------------------------------------
// Assembly.
// ---------------------------------------------------------------------------

/// Assembled quadratic objective E(v) = v'Av - 2 l(v) in the form
/// value(v) = (1/2) v'Kv - f'v with K = 2A and f = 2l, plus the essential
/// constraints to be eliminated before a solve.
struct DiscreteEnergy {
    FeSpace space;
    BandedMatrix stiffness;                          ///< K = 2A
    std::vector<double> load;                        ///< f = 2l
    std::vector<std::pair<int, double>> essential;   ///< (dof, value)

    double value(const std::vector<double>& v) const {
        double dot = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) dot += load[i] * v[i];
        return stiffness.quadratic_form_half(v) - dot;
    }

    /// Gradient of value(): K v - f.
    std::vector<double> gradient(const std::vector<double>& v) const {
        std::vector<double> g = stiffness.matvec(v);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= load[i];
        return g;
    }
};

namespace detail {

// Shape tables at the quadrature points of one rule; the mesh is uniform so
// one table serves every element.  table[q][deriv][a].
template <typename Basis>
std::vector<std::array<std::array<double, 9>, 4>>
shape_table(const QuadratureRule& rule, double h) {
    std::vector<std::array<std::array<double, 9>, 4>> t(rule.points.size());
    for (std::size_t q = 0; q < rule.points.size(); ++q)
        for (int k = 0; k <= Basis::max_deriv; ++k)
            for (int a = 0; a < Basis::n_shapes; ++a)
                t[q][static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] =
                    Basis::shape(a, rule.points[q], k, h);
    return t;
}

inline void check_channel2_bcs(const FeSpace& space, const BeamCoefficients& k,
                               const BoundaryConditions& bcs) {
    if (k.c > 0.0) return;
    for (End end : {End::Left, End::Right}) {
        const auto& bc = bcs.get(end, 2);
        if (!bc) continue;
        if (bc->kind == ChannelBC::Kind::Essential)
            throw ConfigError(space.model == ModelKind::EulerBernoulli
                                  ? "essential w'' data needs c > 0 (no w'' DOF at c = 0)"
                                  : "essential n data needs c > 0 (T2 = c n' degenerates)");
        if (bc->value != 0.0)
            throw ConfigError("traction T2 vanishes identically when c = 0; "
                              "prescribing a nonzero value is inconsistent");
    }
}

inline void check_channel1_traction(const BeamCoefficients& k,
                                    const BoundaryConditions& bcs) {
    if (k.e > 0.0) return;
    for (End end : {End::Left, End::Right}) {
        const auto& bc = bcs.get(end, 1);
        if (bc && bc->kind == ChannelBC::Kind::Natural && bc->value != 0.0)
            throw ConfigError("traction T1 = e (p' - n) vanishes identically when "
                              "e = 0; prescribing a nonzero value is inconsistent");
    }
}

}  // namespace detail

/// Assembles the discrete energy of a problem.  Natural boundary values are
/// folded into the load vector with the [.](L) - [.](0) sign convention;
/// essential values are collected for elimination by the solver.
inline DiscreteEnergy assemble(ModelKind model, const BeamCoefficients& k,
                               double length, int n_elements,
                               const LoadCase& loads, const BoundaryConditions& bcs) {
    loads.require_model(model);
    const FeSpace space = FeSpace::make(model, k, length, n_elements);
    detail::check_channel2_bcs(space, k, bcs);
    if (model == ModelKind::Timoshenko) detail::check_channel1_traction(k, bcs);

    const double h = space.element_length();
    const int nd = space.dofs_per_element();
    DiscreteEnergy sys;
    sys.space = space;
    sys.stiffness = BandedMatrix(space.n_dofs(), space.half_bandwidth());
    sys.load.assign(static_cast<std::size_t>(space.n_dofs()), 0.0);

    // Stiffness rule: exact for the polynomial integrands of each basis.
    const int qs = space.element == ElementType::QuinticHermite ? 5
                  : space.element == ElementType::CubicHermite ? 3 : 4;
    const QuadratureRule srule = QuadratureRule::gauss_legendre(qs);
    // Load rule: generous fixed order for smooth non-polynomial data.
    const QuadratureRule lrule = QuadratureRule::gauss_legendre(8);

    std::vector<double> ke(static_cast<std::size_t>(nd) * nd, 0.0);

    if (model == ModelKind::EulerBernoulli) {
        const bool quintic = space.element == ElementType::QuinticHermite;
        const auto st = quintic ? detail::shape_table<QuinticHermite>(srule, h)
                                : detail::shape_table<CubicHermite>(srule, h);
        for (std::size_t q = 0; q < srule.points.size(); ++q) {
            const double wq = 2.0 * srule.weights[q] * h;  // K = 2A
            for (int a = 0; a < nd; ++a)
                for (int b = 0; b <= a; ++b) {
                    double v = k.b * st[q][2][static_cast<std::size_t>(a)] *
                               st[q][2][static_cast<std::size_t>(b)];
                    if (quintic)
                        v += k.c * st[q][3][static_cast<std::size_t>(a)] *
                             st[q][3][static_cast<std::size_t>(b)];
                    ke[static_cast<std::size_t>(a * nd + b)] += wq * v;
                }
        }
        const auto lt = quintic ? detail::shape_table<QuinticHermite>(lrule, h)
                                : detail::shape_table<CubicHermite>(lrule, h);
        for (int e = 0; e < space.n_elements; ++e) {
            const int base = space.first_dof(e);
            for (int a = 0; a < nd; ++a)
                for (int b = 0; b <= a; ++b)
                    sys.stiffness.add(base + a, base + b, ke[static_cast<std::size_t>(a * nd + b)]);
            if (!loads.f0.is_zero()) {
                for (std::size_t q = 0; q < lrule.points.size(); ++q) {
                    const double x = (e + lrule.points[q]) * h;
                    const double wq = 2.0 * lrule.weights[q] * h * loads.f0(x);
                    for (int a = 0; a < nd; ++a)
                        sys.load[static_cast<std::size_t>(base + a)] +=
                            wq * lt[q][0][static_cast<std::size_t>(a)];
                }
            }
        }
    } else {
        const auto st = detail::shape_table<QuadraticLagrange>(srule, h);
        // Local dof = 3 * node + channel; measure rows per dof and point.
        for (std::size_t q = 0; q < srule.points.size(); ++q) {
            const double wq = 2.0 * srule.weights[q] * h;
            std::array<double, 9> nv{}, n1{}, th{}, rr{};
            for (int a = 0; a < 3; ++a) {
                const double Lv = st[q][0][static_cast<std::size_t>(a)];
                const double Ld = st[q][1][static_cast<std::size_t>(a)];
                const int du = 3 * a + 0, dp = 3 * a + 1, dn = 3 * a + 2;
                th[static_cast<std::size_t>(du)] = Ld;    // u' in theta
                th[static_cast<std::size_t>(dp)] = -Lv;   // -p in theta
                rr[static_cast<std::size_t>(dp)] = Ld;    // p' in r
                rr[static_cast<std::size_t>(dn)] = -Lv;   // -n in r
                nv[static_cast<std::size_t>(dn)] = Lv;
                n1[static_cast<std::size_t>(dn)] = Ld;
            }
            for (int a = 0; a < nd; ++a)
                for (int b = 0; b <= a; ++b) {
                    const auto ua = static_cast<std::size_t>(a);
                    const auto ub = static_cast<std::size_t>(b);
                    ke[static_cast<std::size_t>(a * nd + b)] +=
                        wq * (k.b * nv[ua] * nv[ub] + k.c * n1[ua] * n1[ub] +
                              k.d * th[ua] * th[ub] + k.e * rr[ua] * rr[ub]);
                }
        }
        const auto lt = detail::shape_table<QuadraticLagrange>(lrule, h);
        const std::array<const Load*, 3> fs = {&loads.f0, &loads.f1_or_zero(),
                                               &loads.f2_or_zero()};
        for (int e = 0; e < space.n_elements; ++e) {
            const int base = space.first_dof(e);
            for (int a = 0; a < nd; ++a)
                for (int b = 0; b <= a; ++b)
                    sys.stiffness.add(base + a, base + b, ke[static_cast<std::size_t>(a * nd + b)]);
            for (std::size_t q = 0; q < lrule.points.size(); ++q) {
                const double x = (e + lrule.points[q]) * h;
                const double wq = 2.0 * lrule.weights[q] * h;
                for (int ch = 0; ch < 3; ++ch) {
                    if (fs[static_cast<std::size_t>(ch)]->is_zero()) continue;
                    const double fx = (*fs[static_cast<std::size_t>(ch)])(x);
                    for (int a = 0; a < 3; ++a)
                        sys.load[static_cast<std::size_t>(base + 3 * a + ch)] +=
                            wq * fx * lt[q][0][static_cast<std::size_t>(a)];
                }
            }
        }
    }

    // Boundary data: natural values weight the end DOFs with the
    // [.](L) - [.](0) sign; essential values are queued for elimination.
    validate_bcs(model, bcs);
    for (End end : {End::Left, End::Right}) {
        const double sign = end == End::Left ? -1.0 : 1.0;
        const int node = space.end_node(end);
        for (int ch = 0; ch < space.dofs_per_node(); ++ch) {
            const ChannelBC bc = bcs.effective(end, ch);
            const int dof = space.dof_index(node, ch);
            if (bc.kind == ChannelBC::Kind::Essential)
                sys.essential.emplace_back(dof, bc.value);
            else if (bc.value != 0.0)
                sys.load[static_cast<std::size_t>(dof)] += sign * 2.0 * bc.value;
        }
    }
    return sys;
}

/// Convenience: gradient of the assembled objective at a state.
inline std::vector<double> energy_gradient(const DiscreteEnergy& sys,
                                           const std::vector<double>& v) {
    return sys.gradient(v);
}

// ---------------------------------------------------------------------------
// Total energy functional.
// ---------------------------------------------------------------------------

/// Total energy of a finite-element state:
///   E = integral psi dx - integral f . state dx
///       + [That . state](L) - [That . state](0),
/// with the boundary work counted on natural channels only (essential
/// channels carry reactions, not data).  The state must satisfy its
/// essential boundary values; violations are rejected.
///
/// When every load and traction vanishes this coincides with the assembled
/// objective (1/2) v'Kv, since both reduce to the stored energy.
inline double total_energy(const FeSpace& space, const BeamCoefficients& k,
                           const std::vector<double>& dofs, const LoadCase& loads,
                           const BoundaryConditions& bcs) {
    loads.require_model(space.model);
    if (dofs.size() != static_cast<std::size_t>(space.n_dofs()))
        throw ConfigError("state size does not match the FE space");
    const double h = space.element_length();

    // Essential-value precondition.
    for (End end : {End::Left, End::Right}) {
        for (int ch = 0; ch < space.dofs_per_node(); ++ch) {
            if (!bcs.is_essential(end, ch)) continue;
            const double g = bcs.effective(end, ch).value;
            const double got = boundary_state(space, dofs, end, ch);
            if (std::abs(got - g) > 1e-8 * (1.0 + std::abs(g)))
                throw ConfigError("state violates its essential boundary data");
        }
    }

    const int qs = space.element == ElementType::QuinticHermite ? 5
                  : space.element == ElementType::CubicHermite ? 3 : 4;
    const QuadratureRule srule = QuadratureRule::gauss_legendre(qs);
    const QuadratureRule lrule = QuadratureRule::gauss_legendre(8);

    double stored = 0.0, work = 0.0;
    if (space.model == ModelKind::EulerBernoulli) {
        for (int e = 0; e < space.n_elements; ++e) {
            for (std::size_t q = 0; q < srule.points.size(); ++q) {
                const double x = (e + srule.points[q]) * h;
                const double w2 = eval_eb(space, dofs, x, 2);
                const double w3 = space.element == ElementType::QuinticHermite
                                      ? eval_eb(space, dofs, x, 3)
                                      : 0.0;
                stored += srule.weights[q] * h * eb_density(k, w2, w3);
            }
            if (!loads.f0.is_zero())
                for (std::size_t q = 0; q < lrule.points.size(); ++q) {
                    const double x = (e + lrule.points[q]) * h;
                    work += lrule.weights[q] * h * loads.f0(x) * eval_eb(space, dofs, x, 0);
                }
        }
    } else {
        const std::array<const Load*, 3> fs = {&loads.f0, &loads.f1_or_zero(),
                                               &loads.f2_or_zero()};
        for (int e = 0; e < space.n_elements; ++e) {
            for (std::size_t q = 0; q < srule.points.size(); ++q) {
                const double x = (e + srule.points[q]) * h;
                const double n = eval_timo(space, dofs, 2, x, 0);
                const double n1 = eval_timo(space, dofs, 2, x, 1);
                const double theta = eval_timo(space, dofs, 0, x, 1) - eval_timo(space, dofs, 1, x, 0);
                const double r = eval_timo(space, dofs, 1, x, 1) - n;
                stored += srule.weights[q] * h * timo_density(k, n, n1, theta, r);
            }
            for (int ch = 0; ch < 3; ++ch) {
                if (fs[static_cast<std::size_t>(ch)]->is_zero()) continue;
                for (std::size_t q = 0; q < lrule.points.size(); ++q) {
                    const double x = (e + lrule.points[q]) * h;
                    work += lrule.weights[q] * h * (*fs[static_cast<std::size_t>(ch)])(x) *
                            eval_timo(space, dofs, ch, x, 0);
                }
            }
        }
    }

    double boundary = 0.0;
    for (End end : {End::Left, End::Right}) {
        const double sign = end == End::Left ? -1.0 : 1.0;
        for (int ch = 0; ch < space.dofs_per_node(); ++ch) {
            if (bcs.is_essential(end, ch)) continue;
            const double that = bcs.effective(end, ch).value;
            if (that == 0.0) continue;
            boundary += sign * that * boundary_state(space, dofs, end, ch);
        }
    }
    return stored - work + boundary;
}

}  // namespace defectbeam
