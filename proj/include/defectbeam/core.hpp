#pragma once

/// @file core.hpp
/// Shared vocabulary of the library: 1D grids, sampled scalar fields with
/// optional exact derivative channels, beam coefficient bundles, boundary
/// conditions, load cases and the error taxonomy.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace defectbeam {

// ---------------------------------------------------------------------------
// Error taxonomy.  ConfigError maps to CLI exit code 2, SolverError to 3.
// ---------------------------------------------------------------------------

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid parameters, malformed configuration, inconsistent boundary data.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Numerical failure during a solve (singular or indefinite systems, ...).
class SolverError : public Error {
public:
    explicit SolverError(const std::string& msg) : Error(msg) {}
};

/// Constrained system admits a zero-energy mode; message names the mode.
class SingularSystemError : public SolverError {
public:
    explicit SingularSystemError(const std::string& msg) : SolverError(msg) {}
};

/// Cholesky pivot failure: the assembled matrix is not positive definite.
class NotSpdError : public SolverError {
public:
    explicit NotSpdError(const std::string& msg) : SolverError(msg) {}
};

/// Redundant boundary data disagrees beyond tolerance; carries the defect.
class CompatibilityError : public SolverError {
public:
    CompatibilityError(const std::string& msg, double defect_value)
        : SolverError(msg), defect(defect_value) {}
    double defect = 0.0;
};

/// Text parse failure with a 1-based column (expressions) or line (configs).
class ParseError : public ConfigError {
public:
    ParseError(const std::string& msg, std::size_t where)
        : ConfigError(msg), position(where) {}
    std::size_t position = 0;
};

// ---------------------------------------------------------------------------
// Model selector.
// ---------------------------------------------------------------------------

/// Beam kinematics family.  Both are second-order models: the state carries
/// a curvature-like micro field next to deflection and rotation.
enum class ModelKind {
    EulerBernoulli,  ///< holonomic: rotation = w', micro curvature = w''
    Timoshenko       ///< independent deflection u, rotation p, curvature n
};

inline const char* model_name(ModelKind m) {
    return m == ModelKind::EulerBernoulli ? "euler_bernoulli" : "timoshenko";
}

/// State channels are indexed 0,1,2 for both models:
///   EulerBernoulli: 0 = w, 1 = w', 2 = w''   (tractions T0, T1, T2)
///   Timoshenko:     0 = u, 1 = p,  2 = n     (tractions T0, T1, T2)
inline const char* channel_name(ModelKind m, int channel) {
    static const char* eb[] = {"w", "w1", "w2"};
    static const char* ti[] = {"u", "p", "n"};
    if (channel < 0 || channel > 2) throw ConfigError("channel index out of range");
    return m == ModelKind::EulerBernoulli ? eb[channel] : ti[channel];
}

// ---------------------------------------------------------------------------
// Grid.
// ---------------------------------------------------------------------------

/// Uniform 1D grid on [0, length] with n_nodes sample points.
struct Grid1D {
    double length = 1.0;
    int n_nodes = 2;

    static Grid1D make(double length, int n_nodes) {
        if (!(length > 0.0) || !std::isfinite(length))
            throw ConfigError("grid length must be positive and finite");
        if (n_nodes < 2) throw ConfigError("grid needs at least 2 nodes");
        return Grid1D{length, n_nodes};
    }

    double spacing() const { return length / (n_nodes - 1); }
    double node(int i) const { return spacing() * i; }
    bool operator==(const Grid1D& o) const {
        return length == o.length && n_nodes == o.n_nodes;
    }
};

// ---------------------------------------------------------------------------
// Fourth-order finite-difference stencils (centred interior, one-sided ends).
// Both stencils are exact on polynomials of degree <= 4; the 6-point second
// derivative rows are exact through degree 5.
// ---------------------------------------------------------------------------

/// First derivative of uniformly sampled values, O(h^4) everywhere.
inline std::vector<double> fd_derivative(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 5) throw ConfigError("fd_derivative needs at least 5 samples");
    if (!(h > 0.0)) throw ConfigError("fd_derivative needs positive spacing");
    std::vector<double> d(n);
    const double s = 1.0 / (12.0 * h);
    d[0] = s * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
    d[1] = s * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
    for (std::size_t i = 2; i + 2 < n; ++i)
        d[i] = s * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
    d[n - 2] = -s * (-3.0 * f[n - 1] - 10.0 * f[n - 2] + 18.0 * f[n - 3] - 6.0 * f[n - 4] + f[n - 5]);
    d[n - 1] = -s * (-25.0 * f[n - 1] + 48.0 * f[n - 2] - 36.0 * f[n - 3] + 16.0 * f[n - 4] - 3.0 * f[n - 5]);
    return d;
}

/// Second derivative of uniformly sampled values, O(h^4) everywhere.
inline std::vector<double> fd_second_derivative(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 6) throw ConfigError("fd_second_derivative needs at least 6 samples");
    if (!(h > 0.0)) throw ConfigError("fd_second_derivative needs positive spacing");
    std::vector<double> d(n);
    const double s = 1.0 / (12.0 * h * h);
    d[0] = s * (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4] - 10.0 * f[5]);
    d[1] = s * (10.0 * f[0] - 15.0 * f[1] - 4.0 * f[2] + 14.0 * f[3] - 6.0 * f[4] + f[5]);
    for (std::size_t i = 2; i + 2 < n; ++i)
        d[i] = s * (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]);
    d[n - 2] = s * (10.0 * f[n - 1] - 15.0 * f[n - 2] - 4.0 * f[n - 3] + 14.0 * f[n - 4] - 6.0 * f[n - 5] + f[n - 6]);
    d[n - 1] = s * (45.0 * f[n - 1] - 154.0 * f[n - 2] + 214.0 * f[n - 3] - 156.0 * f[n - 4] + 61.0 * f[n - 5] - 10.0 * f[n - 6]);
    return d;
}

// ---------------------------------------------------------------------------
// Scalar field.
// ---------------------------------------------------------------------------

/// Nodal samples of a scalar field on a Grid1D.  Fields produced by the
/// Euler-Bernoulli solver additionally carry exact first/second derivative
/// channels (Hermite data); derivative() prefers an exact channel over a
/// finite-difference stencil so that channel-consistent identities cancel
/// algebraically instead of to truncation error.
struct ScalarField1D {
    Grid1D grid;
    std::vector<double> values;
    std::optional<std::vector<double>> d1;  ///< exact first derivative channel
    std::optional<std::vector<double>> d2;  ///< exact second derivative channel

    ScalarField1D() = default;
    ScalarField1D(Grid1D g, std::vector<double> v) : grid(g), values(std::move(v)) {
        check_sizes();
    }

    static ScalarField1D zeros(Grid1D g) {
        return ScalarField1D(g, std::vector<double>(static_cast<std::size_t>(g.n_nodes), 0.0));
    }

    static ScalarField1D sample(Grid1D g, const std::function<double(double)>& fn) {
        std::vector<double> v(static_cast<std::size_t>(g.n_nodes));
        for (int i = 0; i < g.n_nodes; ++i) v[static_cast<std::size_t>(i)] = fn(g.node(i));
        return ScalarField1D(g, std::move(v));
    }

    void check_sizes() const {
        const auto n = static_cast<std::size_t>(grid.n_nodes);
        if (values.size() != n) throw ConfigError("field sample count does not match grid");
        if (d1 && d1->size() != n) throw ConfigError("d1 channel size does not match grid");
        if (d2 && d2->size() != n) throw ConfigError("d2 channel size does not match grid");
    }

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

    /// First derivative field.  Uses the d1 channel when present (the d2
    /// channel then becomes the result's d1), otherwise a 4th-order stencil.
    ScalarField1D derivative() const {
        ScalarField1D r;
        r.grid = grid;
        if (d1) {
            r.values = *d1;
            if (d2) r.d1 = *d2;
        } else {
            r.values = fd_derivative(values, grid.spacing());
        }
        return r;
    }

    /// Second derivative field; exact channel preferred, stencil fallback.
    ScalarField1D second_derivative() const {
        ScalarField1D r;
        r.grid = grid;
        if (d2) r.values = *d2;
        else if (d1) r.values = fd_derivative(*d1, grid.spacing());
        else r.values = fd_second_derivative(values, grid.spacing());
        return r;
    }

    ScalarField1D& operator+=(const ScalarField1D& o) {
        require_same_grid(o);
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
        merge_channel(d1, o.d1);
        merge_channel(d2, o.d2);
        return *this;
    }

    ScalarField1D& operator*=(double a) {
        for (auto& v : values) v *= a;
        if (d1) for (auto& v : *d1) v *= a;
        if (d2) for (auto& v : *d2) v *= a;
        return *this;
    }

    friend ScalarField1D operator+(ScalarField1D a, const ScalarField1D& b) { return a += b; }
    friend ScalarField1D operator*(double a, ScalarField1D f) { return f *= a; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

private:
    void require_same_grid(const ScalarField1D& o) const {
        if (!(grid == o.grid)) throw ConfigError("field grids differ");
    }
    static void merge_channel(std::optional<std::vector<double>>& a,
                              const std::optional<std::vector<double>>& b) {
        if (a && b) {
            for (std::size_t i = 0; i < a->size(); ++i) (*a)[i] += (*b)[i];
        } else {
            a.reset();  // sum has an exact channel only when both operands do
        }
    }
};

// ---------------------------------------------------------------------------
// Coefficients.
// ---------------------------------------------------------------------------

/// Homogenised beam coefficients.  b and c weigh the micro-curvature and its
/// gradient, d and e the shear-like and relative-distortion measures:
///   b = E*I2, c = F*I4, d = G*I0, e = H*I0.
/// Only b and c act in the Euler-Bernoulli model.
struct BeamCoefficients {
    double b = 0.0;  ///< curvature stiffness
    double c = 0.0;  ///< curvature-gradient stiffness
    double d = 0.0;  ///< shear stiffness (Timoshenko only)
    double e = 0.0;  ///< relative-distortion stiffness (Timoshenko only)

    // Provenance (zero when constructed directly from b, c, d, e).
    double E = 0.0, F = 0.0, G = 0.0, H = 0.0;
    double I0 = 0.0, I2 = 0.0, I4 = 0.0;
    double thickness = 0.0;

    /// Direct construction.  b = 0 is tolerated here (useful when probing a
    /// single energy term); the solve entry points enforce b > 0.
    static BeamCoefficients direct(double b, double c, double d = 0.0, double e = 0.0) {
        for (double v : {b, c, d, e})
            if (!std::isfinite(v)) throw ConfigError("beam coefficients must be finite");
        if (b < 0.0 || c < 0.0 || d < 0.0 || e < 0.0)
            throw ConfigError("beam coefficients must be non-negative");
        BeamCoefficients k;
        k.b = b; k.c = c; k.d = d; k.e = e;
        return k;
    }

    /// Constitutive construction from stress scalars and section moments.
    static BeamCoefficients from_moduli(double E, double F, double G, double H,
                                        double I0, double I2, double I4, double l) {
        for (double v : {E, F, G, H, I0, I2, I4, l})
            if (!std::isfinite(v)) throw ConfigError("moduli and moments must be finite");
        if (E <= 0.0 || F < 0.0 || G < 0.0 || H < 0.0)
            throw ConfigError("moduli must satisfy E > 0, F >= 0, G >= 0, H >= 0");
        if (I0 <= 0.0 || I2 <= 0.0 || I4 < 0.0)
            throw ConfigError("section moments must satisfy I0 > 0, I2 > 0, I4 >= 0");
        BeamCoefficients k;
        k.E = E; k.F = F; k.G = G; k.H = H;
        k.I0 = I0; k.I2 = I2; k.I4 = I4; k.thickness = l;
        k.b = E * I2; k.c = F * I4; k.d = G * I0; k.e = H * I0;
        return k;
    }
};

/// Coefficients of a rectangle section of thickness l:
///   I0 = l, I2 = l^3/12, I4 = l^5/80, hence c/b = (F/E)*(3/20)*l^2.
inline BeamCoefficients make_rect_section(double E, double F, double G, double H,
                                          double l, double L) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("thickness l must be positive");
    if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("axis length L must be positive");
    const double I0 = l;
    const double I2 = l * l * l / 12.0;
    const double I4 = l * l * l * l * l / 80.0;
    return BeamCoefficients::from_moduli(E, F, G, H, I0, I2, I4, l);
}

// ---------------------------------------------------------------------------
// Boundary conditions.
// ---------------------------------------------------------------------------

enum class End { Left = 0, Right = 1 };

/// One channel at one end: either an essential (state) value or a natural
/// (traction) value.  An unset channel defaults to Natural with value 0.
struct ChannelBC {
    enum class Kind { Essential, Natural };
    Kind kind = Kind::Natural;
    double value = 0.0;

    static ChannelBC essential(double v) { return ChannelBC{Kind::Essential, v}; }
    static ChannelBC natural(double v) { return ChannelBC{Kind::Natural, v}; }
};

/// Per-end, per-channel boundary data.  Channels follow channel_name():
/// (w, w', w'') for Euler-Bernoulli, (u, p, n) for Timoshenko.  The w''/T2
/// channel must stay unset when c = 0 (the cubic element has no such DOF);
/// assemble() enforces this.
struct BoundaryConditions {
    std::array<std::array<std::optional<ChannelBC>, 3>, 2> data;

    void set(End end, int channel, ChannelBC bc) {
        at(end, channel) = bc;
    }
    const std::optional<ChannelBC>& get(End end, int channel) const {
        return data[static_cast<std::size_t>(end)].at(static_cast<std::size_t>(channel));
    }
    /// Missing entries read as free (zero-traction natural).
    ChannelBC effective(End end, int channel) const {
        const auto& o = get(end, channel);
        return o ? *o : ChannelBC::natural(0.0);
    }
    bool is_essential(End end, int channel) const {
        return effective(end, channel).kind == ChannelBC::Kind::Essential;
    }

private:
    std::optional<ChannelBC>& at(End end, int channel) {
        if (channel < 0 || channel > 2) throw ConfigError("channel index out of range");
        return data[static_cast<std::size_t>(end)][static_cast<std::size_t>(channel)];
    }
};

/// Checks that the essential constraints remove both zero-energy modes:
///   EulerBernoulli: w = const (translation) and w = x (rotation);
///   Timoshenko:     (u, p, n) = (1, 0, 0) and (x, 1, 0).
/// Throws SingularSystemError naming the surviving mode.  Channel-2
/// constraints never help: both modes have vanishing curvature data.
inline void validate_bcs(ModelKind model, const BoundaryConditions& bcs) {
    // Row of each essential constraint on the (translation, rotation) basis,
    // with end coordinates normalised to x = 0 and x = 1 (rank is unchanged).
    std::vector<std::array<double, 2>> rows;
    for (End end : {End::Left, End::Right}) {
        const double x = end == End::Left ? 0.0 : 1.0;
        if (bcs.is_essential(end, 0)) rows.push_back({1.0, x});
        if (bcs.is_essential(end, 1)) rows.push_back({0.0, 1.0});
        if (bcs.is_essential(end, 2)) rows.push_back({0.0, 0.0});
    }
    double best = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j)
            best = std::max(best, std::abs(rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0]));
    if (best > 0.5) return;  // entries are 0/1-scale; any independent pair gives >= 1

    // Rank deficient: identify a surviving null direction (alpha, beta).
    double a0 = 0.0, a1 = 0.0;
    for (const auto& r : rows) { a0 += std::abs(r[0]); a1 += std::abs(r[1]); }
    const char* trans = model == ModelKind::EulerBernoulli
                            ? "rigid vertical translation (w = const)"
                            : "rigid translation (u = const)";
    const char* rot = model == ModelKind::EulerBernoulli
                          ? "rigid rotation (w = x)"
                          : "rigid rotation ((u, p) = (x, 1))";
    std::string mode;
    if (rows.empty() || (a0 == 0.0 && a1 == 0.0)) {
        mode = std::string(trans) + " and " + rot;
    } else if (a0 == 0.0) {
        mode = trans;  // only rotation-sensitive rows present
    } else if (a1 == 0.0) {
        mode = rot;
    } else {
        // Rows are all proportional to (r0, r1) with both entries nonzero:
        // the null direction mixes translation and rotation.
        mode = std::string("a combination of ") + trans + " and " + rot;
    }
    throw SingularSystemError("boundary conditions leave an unconstrained mode: " + mode);
}

// ---------------------------------------------------------------------------
// Loads.
// ---------------------------------------------------------------------------

/// Scalar load along the axis: a callable with an optional exact slope, or a
/// tabulated field interpolated with 4-point (cubic) Lagrange stencils.
class Load {
public:
    Load() = default;

    static Load zero() { return Load(); }

    static Load from_function(std::function<double(double)> fn,
                              std::function<double(double)> slope = nullptr) {
        Load l;
        l.fn_ = std::move(fn);
        l.slope_ = std::move(slope);
        return l;
    }

    static Load constant(double v) {
        return from_function([v](double) { return v; }, [](double) { return 0.0; });
    }

    static Load from_samples(ScalarField1D field) {
        if (field.grid.n_nodes < 4)
            throw ConfigError("tabulated load needs at least 4 samples");
        Load l;
        l.table_ = std::move(field);
        return l;
    }

    bool is_zero() const { return !fn_ && !table_; }
    bool has_slope() const { return static_cast<bool>(slope_) || table_.has_value(); }

    double operator()(double x) const {
        if (fn_) return fn_(x);
        if (table_) return interpolate(*table_, x, 0);
        return 0.0;
    }

    /// d/dx of the load; exact when a slope closure was supplied.
    double slope(double x) const {
        if (slope_) return slope_(x);
        if (table_) return interpolate(*table_, x, 1);
        if (!fn_) return 0.0;
        throw ConfigError("load has no slope information");
    }

private:
    // Cubic Lagrange through the 4 nodes nearest x; deriv picks value or d/dx.
    static double interpolate(const ScalarField1D& t, double x, int deriv) {
        const double h = t.grid.spacing();
        const int n = t.grid.n_nodes;
        int i = static_cast<int>(std::floor(x / h)) - 1;
        i = std::max(0, std::min(i, n - 4));
        double result = 0.0;
        for (int a = 0; a < 4; ++a) {
            const double xa = t.grid.node(i + a);
            double weight = deriv == 0 ? 1.0 : 0.0;
            if (deriv == 0) {
                for (int m = 0; m < 4; ++m) {
                    if (m == a) continue;
                    const double xm = t.grid.node(i + m);
                    weight *= (x - xm) / (xa - xm);
                }
            } else {
                for (int k = 0; k < 4; ++k) {
                    if (k == a) continue;
                    double term = 1.0;
                    for (int m = 0; m < 4; ++m) {
                        if (m == a || m == k) continue;
                        const double xm = t.grid.node(i + m);
                        term *= (x - xm) / (xa - xm);
                    }
                    weight += term / (xa - t.grid.node(i + k));
                }
            }
            result += weight * t.values[static_cast<std::size_t>(i + a)];
        }
        return result;
    }

    std::function<double(double)> fn_;
    std::function<double(double)> slope_;
    std::optional<ScalarField1D> table_;
};

/// Bulk loads of a problem.  f0 acts on w (EB) or u (Timoshenko); f1 and f2
/// act on p and n and must stay unset for the Euler-Bernoulli model.
struct LoadCase {
    Load f0;
    std::optional<Load> f1;
    std::optional<Load> f2;

    static LoadCase euler_bernoulli(Load f0) {
        LoadCase lc;
        lc.f0 = std::move(f0);
        return lc;
    }

    static LoadCase timoshenko(Load f0, Load f1, Load f2) {
        LoadCase lc;
        lc.f0 = std::move(f0);
        lc.f1 = std::move(f1);
        lc.f2 = std::move(f2);
        return lc;
    }

    const Load& f1_or_zero() const {
        static const Load z;
        return f1 ? *f1 : z;
    }
    const Load& f2_or_zero() const {
        static const Load z;
        return f2 ? *f2 : z;
    }

    /// EB problems must not carry rotation/curvature loads.
    void require_model(ModelKind model) const {
        if (model == ModelKind::EulerBernoulli && (f1 || f2))
            throw ConfigError("f1/f2 loads are not admissible for the Euler-Bernoulli model");
    }
};

}  // namespace defectbeam
