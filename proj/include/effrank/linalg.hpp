#pragma once

// Dense symmetric linear algebra: construction-validated symmetric matrices,
// a cyclic Jacobi eigensolver, and the spectral functionals built on top of
// it (operator norm, effective rank, PSD square root).  Dense storage only;
// the regimes of interest stay at d <= a few hundred.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "effrank/errors.hpp"

namespace effrank {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

class SymMatrix {
  public:
    SymMatrix() = default;

    explicit SymMatrix(std::size_t d) : d_(d), a_(d * d, 0.0) {
        if (d == 0) throw InvalidMatrix("SymMatrix: dimension must be positive");
    }

    static SymMatrix identity(std::size_t d) {
        SymMatrix m(d);
        for (std::size_t i = 0; i < d; ++i) m.a_[i * d + i] = 1.0;
        return m;
    }

    static SymMatrix diagonal(const std::vector<double>& entries) {
        SymMatrix m(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (!std::isfinite(entries[i]))
                throw InvalidMatrix("SymMatrix: non-finite entry");
            m.a_[i * entries.size() + i] = entries[i];
        }
        return m;
    }

    // Validates symmetry |a_ij - a_ji| <= 1e-12 * max(1, max|entries|) and
    // finiteness, then stores the exactly symmetrized matrix.
    static SymMatrix from_flat(std::size_t d, const std::vector<double>& flat) {
        if (flat.size() != d * d)
            throw ShapeError("SymMatrix: flat buffer size does not match d*d");
        SymMatrix m(d);
        double amax = 0.0;
        for (double v : flat) {
            if (!std::isfinite(v)) throw InvalidMatrix("SymMatrix: non-finite entry");
            amax = std::max(amax, std::fabs(v));
        }
        const double tol = 1e-12 * std::max(1.0, amax);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) {
                const double x = flat[i * d + j], y = flat[j * d + i];
                if (std::fabs(x - y) > tol)
                    throw InvalidMatrix("SymMatrix: asymmetry beyond tolerance at (" +
                                        std::to_string(i) + "," + std::to_string(j) + ")");
                const double v = 0.5 * (x + y);
                m.a_[i * d + j] = m.a_[j * d + i] = v;
            }
        return m;
    }

    static SymMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        const std::size_t d = rows.size();
        std::vector<double> flat;
        flat.reserve(d * d);
        for (const auto& r : rows) {
            if (r.size() != d) throw ShapeError("SymMatrix: ragged rows");
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return from_flat(d, flat);
    }

    std::size_t dim() const { return d_; }

    double operator()(std::size_t i, std::size_t j) const { return a_[i * d_ + j]; }

    void set(std::size_t i, std::size_t j, double v) {
        a_[i * d_ + j] = v;
        a_[j * d_ + i] = v;
    }

    double trace() const {
        double s = 0.0;
        for (std::size_t i = 0; i < d_; ++i) s += a_[i * d_ + i];
        return s;
    }

    double frobenius() const {
        double s = 0.0;
        for (double v : a_) s += v * v;
        return std::sqrt(s);
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::fabs(v));
        return m;
    }

    bool is_diagonal() const {
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = 0; j < d_; ++j)
                if (i != j && a_[i * d_ + j] != 0.0) return false;
        return true;
    }

    std::vector<double> mul(const std::vector<double>& x) const {
        if (x.size() != d_) throw ShapeError("SymMatrix::mul: size mismatch");
        std::vector<double> y(d_, 0.0);
        for (std::size_t i = 0; i < d_; ++i) {
            double s = 0.0;
            const double* row = a_.data() + i * d_;
            for (std::size_t j = 0; j < d_; ++j) s += row[j] * x[j];
            y[i] = s;
        }
        return y;
    }

    SymMatrix scaled(double c) const {
        SymMatrix m = *this;
        for (double& v : m.a_) v *= c;
        return m;
    }

    friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
        if (a.d_ != b.d_) throw ShapeError("SymMatrix: dimension mismatch in +");
        SymMatrix m = a;
        for (std::size_t i = 0; i < m.a_.size(); ++i) m.a_[i] += b.a_[i];
        return m;
    }

    friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
        if (a.d_ != b.d_) throw ShapeError("SymMatrix: dimension mismatch in -");
        SymMatrix m = a;
        for (std::size_t i = 0; i < m.a_.size(); ++i) m.a_[i] -= b.a_[i];
        return m;
    }

    const std::vector<double>& flat() const { return a_; }

  private:
    std::size_t d_ = 0;
    std::vector<double> a_;
};

struct EigenDecomposition {
    std::vector<double> eigenvalues;               // sorted descending
    std::vector<std::vector<double>> eigenvectors; // eigenvectors[k] pairs with eigenvalues[k]
};

// Cyclic Jacobi rotations; stops when the off-diagonal Frobenius norm falls
// below 1e-13 * ||A||_F, with a hard cap of 100 sweeps.
inline EigenDecomposition sym_eigen(const SymMatrix& A) {
    const std::size_t d = A.dim();
    for (double v : A.flat())
        if (!std::isfinite(v)) throw InvalidMatrix("sym_eigen: non-finite entry");

    std::vector<double> b = A.flat();           // working copy
    std::vector<double> V(d * d, 0.0);          // accumulated rotations, column-major-as-rows
    for (std::size_t i = 0; i < d; ++i) V[i * d + i] = 1.0;

    const double scale = A.frobenius();
    if (scale > 0.0) {
        const double tol = 1e-13 * scale;
        for (int sweep = 0; sweep < 100; ++sweep) {
            double off = 0.0;
            for (std::size_t p = 0; p < d; ++p)
                for (std::size_t q = p + 1; q < d; ++q) off += 2.0 * b[p * d + q] * b[p * d + q];
            if (std::sqrt(off) <= tol) break;

            for (std::size_t p = 0; p < d; ++p) {
                for (std::size_t q = p + 1; q < d; ++q) {
                    const double apq = b[p * d + q];
                    if (apq == 0.0) continue;
                    const double theta = (b[q * d + q] - b[p * d + p]) / (2.0 * apq);
                    const double tt = (theta >= 0.0 ? 1.0 : -1.0) /
                                      (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                    const double c = 1.0 / std::sqrt(tt * tt + 1.0);
                    const double s = tt * c;
                    const double tau = s / (1.0 + c);

                    const double app = b[p * d + p], aqq = b[q * d + q];
                    b[p * d + p] = app - tt * apq;
                    b[q * d + q] = aqq + tt * apq;
                    b[p * d + q] = b[q * d + p] = 0.0;
                    for (std::size_t k = 0; k < d; ++k) {
                        if (k == p || k == q) continue;
                        const double akp = b[k * d + p], akq = b[k * d + q];
                        b[k * d + p] = b[p * d + k] = akp - s * (akq + tau * akp);
                        b[k * d + q] = b[q * d + k] = akq + s * (akp - tau * akq);
                    }
                    for (std::size_t k = 0; k < d; ++k) {
                        const double vkp = V[k * d + p], vkq = V[k * d + q];
                        V[k * d + p] = vkp - s * (vkq + tau * vkp);
                        V[k * d + q] = vkq + s * (vkp - tau * vkq);
                    }
                }
            }
        }
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return b[i * d + i] > b[j * d + j]; });

    EigenDecomposition e;
    e.eigenvalues.resize(d);
    e.eigenvectors.assign(d, std::vector<double>(d));
    for (std::size_t k = 0; k < d; ++k) {
        const std::size_t c = order[k];
        e.eigenvalues[k] = b[c * d + c];
        for (std::size_t i = 0; i < d; ++i) e.eigenvectors[k][i] = V[i * d + c];
    }
    return e;
}

inline double operator_norm(const SymMatrix& A) {
    const EigenDecomposition e = sym_eigen(A);
    double m = 0.0;
    for (double l : e.eigenvalues) m = std::max(m, std::fabs(l));
    return m;
}

// tr(S)/||S|| for PSD S (PSD up to min eigenvalue >= -1e-10 * ||S||).
inline double effective_rank(const SymMatrix& S) {
    const EigenDecomposition e = sym_eigen(S);
    double nrm = 0.0;
    for (double l : e.eigenvalues) nrm = std::max(nrm, std::fabs(l));
    if (nrm == 0.0) throw DegenerateMatrix("effective_rank: zero matrix");
    if (e.eigenvalues.back() < -1e-10 * nrm)
        throw NotPSD("effective_rank: matrix is not PSD within tolerance");
    return S.trace() / nrm;
}

// Spectral square root with clamping of slightly-negative eigenvalues.
inline SymMatrix psd_sqrt(const SymMatrix& S) {
    const std::size_t d = S.dim();
    const EigenDecomposition e = sym_eigen(S);
    double nrm = 0.0;
    for (double l : e.eigenvalues) nrm = std::max(nrm, std::fabs(l));
    std::vector<double> sq(d);
    for (std::size_t k = 0; k < d; ++k) {
        double l = e.eigenvalues[k];
        if (l < -1e-10 * nrm) throw NotPSD("psd_sqrt: matrix is not PSD within tolerance");
        sq[k] = l > 0.0 ? std::sqrt(l) : 0.0;
    }
    SymMatrix R(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k)
                s += sq[k] * e.eigenvectors[k][i] * e.eigenvectors[k][j];
            R.set(i, j, s);
        }
    return R;
}

// ---------------------------------------------------------------------------
// CSV fixture exchange: one row per line, '.' decimal separator, no header.

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // %.17g is locale-independent for the C locale; values round-trip exactly
    return buf;
}

inline void write_csv(const std::vector<std::vector<double>>& rows, std::ostream& os) {
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j) os << ',';
            os << format_double(r[j]);
        }
        os << '\n';
    }
}

inline void write_csv(const SymMatrix& m, std::ostream& os) {
    std::vector<std::vector<double>> rows(m.dim(), std::vector<double>(m.dim()));
    for (std::size_t i = 0; i < m.dim(); ++i)
        for (std::size_t j = 0; j < m.dim(); ++j) rows[i][j] = m(i, j);
    write_csv(rows, os);
}

inline void write_csv_file(const std::vector<std::vector<double>>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open for writing: " + path);
    write_csv(rows, os);
}

// Parses a numeric CSV; on a bad cell reports its 1-based row and column.
inline std::vector<std::vector<double>> read_csv(std::istream& is) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t col = 0, start = 0;
        while (start <= line.size()) {
            std::size_t end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            ++col;
            std::size_t a = start, b = end;
            while (a < b && (line[a] == ' ' || line[a] == '\t')) ++a;
            while (b > a && (line[b - 1] == ' ' || line[b - 1] == '\t')) --b;
            double value = 0.0;
            const auto res = std::from_chars(line.data() + a, line.data() + b, value);
            if (res.ec != std::errc() || res.ptr != line.data() + b || a == b)
                throw ConfigError("non-numeric CSV cell at row " + std::to_string(lineno) +
                                  ", column " + std::to_string(col));
            row.push_back(value);
            start = end + 1;
            if (end == line.size()) break;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<std::vector<double>> read_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open for reading: " + path);
    return read_csv(is);
}

inline SymMatrix sym_from_csv(std::istream& is) {
    return SymMatrix::from_rows(read_csv(is));
}

} // namespace effrank
