#include "linalg.hpp"

namespace featkit {

Mat Mat::operator*(const Mat& o) const {
    Mat out(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            double aik = at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < n; ++j) out.at(i, j) += aik * o.at(k, j);
        }
    }
    return out;
}

Mat& Mat::operator+=(const Mat& o) {
    for (size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
    return *this;
}

void Mat::scale(double k) {
    for (auto& v : a) v *= k;
}

double Mat::max_abs_row_sum() const {
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += std::abs(at(i, j));
        best = std::max(best, s);
    }
    return best;
}

std::vector<double> matvec(const Mat& m, const std::vector<double>& x) {
    std::vector<double> y(m.n, 0.0);
    for (int i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.n; ++j) s += m.at(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Mat expm(const Mat& A) {
    double norm = A.max_abs_row_sum();
    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
        squarings = std::min(squarings, 60);
    }
    Mat scaled = A;
    scaled.scale(std::ldexp(1.0, -squarings));

    // Taylor tail on the scaled matrix (norm <= 0.5 converges in ~20 terms).
    Mat sum = Mat::identity(A.n);
    Mat term = Mat::identity(A.n);
    for (int k = 1; k <= 24; ++k) {
        term = term * scaled;
        term.scale(1.0 / k);
        sum += term;
        if (term.max_abs_row_sum() < 1e-19) break;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

AffineStep affine_step(const Mat& A, const std::vector<double>& b, double h) {
    int n = A.n;
    Mat aug(n + 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) aug.at(i, j) = A.at(i, j) * h;
        aug.at(i, n) = b[i] * h;
    }
    Mat e = expm(aug);
    AffineStep st;
    st.E = Mat(n);
    st.g.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) st.E.at(i, j) = e.at(i, j);
        st.g[i] = e.at(i, n);
    }
    return st;
}

IBox affine_image(const Mat& E, const std::vector<double>& g, const IBox& box) {
    IBox out(box.size());
    for (size_t i = 0; i < box.size(); ++i) {
        Interval acc = Interval::point(g[i]);
        for (size_t j = 0; j < box.size(); ++j) {
            double k = E.at(static_cast<int>(i), static_cast<int>(j));
            if (k == 0.0) continue;
            acc = acc + scale(box[j], k);
        }
        out[i] = acc;
    }
    return out;
}

IBox derivative_range(const Mat& A, const std::vector<double>& b, const IBox& box) {
    IBox out(box.size());
    for (size_t i = 0; i < box.size(); ++i) {
        Interval acc = Interval::point(b[i]);
        for (size_t j = 0; j < box.size(); ++j) {
            double k = A.at(static_cast<int>(i), static_cast<int>(j));
            if (k == 0.0) continue;
            acc = acc + scale(box[j], k);
        }
        out[i] = acc;
    }
    return out;
}

}  // namespace featkit
