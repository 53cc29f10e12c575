#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace featkit {

/// Dense square matrix, row-major; dimensions here are single digits.
struct Mat {
    int n = 0;
    std::vector<double> a;

    Mat() = default;
    explicit Mat(int dim) : n(dim), a(static_cast<size_t>(dim) * dim, 0.0) {}

    double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
    double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }

    static Mat identity(int dim) {
        Mat m(dim);
        for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
        return m;
    }

    Mat operator*(const Mat& o) const;
    Mat& operator+=(const Mat& o);
    void scale(double k);
    double max_abs_row_sum() const;
};

std::vector<double> matvec(const Mat& m, const std::vector<double>& x);

/// exp(A) by scaling-and-squaring with a Taylor tail; ample precision for
/// the handful-of-dimensions systems handled here.
Mat expm(const Mat& A);

/// One-step map of the affine flow x' = Ax + b over a fixed step:
/// x(t+h) = E x(t) + g, computed exactly (to expm accuracy) via the
/// augmented-matrix exponential.
struct AffineStep {
    Mat E;
    std::vector<double> g;

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y = matvec(E, x);
        for (size_t i = 0; i < y.size(); ++i) y[i] += g[i];
        return y;
    }
};

AffineStep affine_step(const Mat& A, const std::vector<double>& b, double h);

// ============================================================================
// Intervals
// ============================================================================

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    static Interval point(double v) { return {v, v}; }
    static Interval of(double a, double b) { return {std::min(a, b), std::max(a, b)}; }

    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
    bool empty_after(double new_lo, double new_hi) const { return new_lo > new_hi; }

    Interval hull(const Interval& o) const { return {std::min(lo, o.lo), std::max(hi, o.hi)}; }
    void inflate(double r) {
        lo -= r;
        hi += r;
    }
};

inline Interval operator+(Interval a, Interval b) { return {a.lo + b.lo, a.hi + b.hi}; }

inline Interval scale(Interval x, double k) {
    return k >= 0 ? Interval{k * x.lo, k * x.hi} : Interval{k * x.hi, k * x.lo};
}

using IBox = std::vector<Interval>;

inline IBox hull(const IBox& a, const IBox& b) {
    IBox out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i].hull(b[i]);
    return out;
}

inline bool box_contains(const IBox& box, const std::vector<double>& x, double tol) {
    for (size_t i = 0; i < box.size(); ++i)
        if (!box[i].contains(x[i], tol)) return false;
    return true;
}

/// Interval image of a box under the affine map x -> Ex + g.
IBox affine_image(const Mat& E, const std::vector<double>& g, const IBox& box);

/// Interval evaluation of Ax + b over a box (flow derivative bounds).
IBox derivative_range(const Mat& A, const std::vector<double>& b, const IBox& box);

}  // namespace featkit
