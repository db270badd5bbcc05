#include "engage/matrix.hpp"

#include <cmath>
#include <cstdlib>

#include "engage/common.hpp"

namespace engage {

Matrix::Matrix(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
    if (rows <= 0 || cols <= 0)
        throw ValidationError("matrix dimensions must be positive, got " + std::to_string(rows) +
                              "x" + std::to_string(cols));
    values_.assign(static_cast<size_t>(rows) * cols, fill);
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    int r = static_cast<int>(rows.size());
    int c = static_cast<int>(rows.begin()->size());
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c)
            throw ValidationError("ragged initializer: row " + std::to_string(i) + " has " +
                                  std::to_string(row.size()) + " values, expected " + std::to_string(c));
        int j = 0;
        for (double v : row) m.at(i, j++) = v;
        ++i;
    }
    return m;
}

void Matrix::fill(double v) {
    for (double& x : values_) x = v;
}

bool Matrix::all_finite() const {
    for (double x : values_)
        if (!std::isfinite(x)) return false;
    return true;
}

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void zero_grads(const std::vector<ParamRef>& params) {
    for (const auto& p : params) p.param->zero_grad();
}

namespace {

void require_shape_eq(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw ValidationError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                              b.shape_str());
}

void require_inner(const Matrix& a, const Matrix& b, int ak, int bk, const char* op) {
    if (ak != bk)
        throw ValidationError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " +
                              b.shape_str());
}

} // namespace

double dot(const double* a, const double* b, int n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    require_inner(a, b, a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    matmul_acc(c, a, b);
    return c;
}

void matmul_acc(Matrix& c, const Matrix& a, const Matrix& b) {
    require_inner(a, b, a.cols(), b.rows(), "matmul");
    if (c.rows() != a.rows() || c.cols() != b.cols())
        throw ValidationError("matmul: accumulator shape " + c.shape_str() + " does not fit " +
                              a.shape_str() + " * " + b.shape_str());
    const int n = b.cols();
    for (int i = 0; i < a.rows(); ++i) {
        double* crow = c.row(i);
        const double* arow = a.row(i);
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    require_inner(a, b, a.cols(), b.cols(), "matmul_nt");
    Matrix c(a.rows(), b.rows());
    matmul_nt_acc(c, a, b);
    return c;
}

void matmul_nt_acc(Matrix& c, const Matrix& a, const Matrix& b) {
    require_inner(a, b, a.cols(), b.cols(), "matmul_nt");
    const int n = a.cols();
    for (int i = 0; i < a.rows(); ++i) {
        double* crow = c.row(i);
        const double* arow = a.row(i);
        for (int j = 0; j < b.rows(); ++j) crow[j] += dot(arow, b.row(j), n);
    }
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    require_inner(a, b, a.rows(), b.rows(), "matmul_tn");
    Matrix c(a.cols(), b.cols());
    matmul_tn_acc(c, a, b);
    return c;
}

void matmul_tn_acc(Matrix& c, const Matrix& a, const Matrix& b) {
    require_inner(a, b, a.rows(), b.rows(), "matmul_tn");
    const int n = b.cols();
    for (int k = 0; k < a.rows(); ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (int i = 0; i < a.cols(); ++i) {
            const double aki = arow[i];
            double* crow = c.row(i);
            for (int j = 0; j < n; ++j) crow[j] += aki * brow[j];
        }
    }
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_shape_eq(a, b, "add");
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_shape_eq(a, b, "sub");
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_shape_eq(a, b, "mul");
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
    return c;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix tanh_m(const Matrix& a) {
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] = std::tanh(c.data()[i]);
    return c;
}

Matrix sigmoid_m(const Matrix& a) {
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] = sigmoid(c.data()[i]);
    return c;
}

Matrix relu_m(const Matrix& a) {
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] = c.data()[i] > 0.0 ? c.data()[i] : 0.0;
    return c;
}

Matrix elementwise(EwOp op, const Matrix& a) {
    switch (op) {
        case EwOp::tanh: return tanh_m(a);
        case EwOp::sigmoid: return sigmoid_m(a);
        case EwOp::relu: return relu_m(a);
        default: throw ValidationError("elementwise: binary op requires two inputs");
    }
}

Matrix elementwise(EwOp op, const Matrix& a, const Matrix& b) {
    switch (op) {
        case EwOp::add: return add(a, b);
        case EwOp::mul: return hadamard(a, b);
        default: throw ValidationError("elementwise: unary op takes one input");
    }
}

Matrix random_uniform(int rows, int cols, double lo, double hi, Rng& rng) {
    Matrix m(rows, cols);
    for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

} // namespace engage
